"""Phase speeds of a small gravitational wave and a small sound wave.

    python scripts/wave_speeds.py --points 64 128 256
"""
import argparse

import numpy as np

from einsteuler.evolve import evolve_direct
from einsteuler.fluid import EquationOfState, sound_speed
from einsteuler.grid import GridSpec
from einsteuler.scenario import gauge_wave_state, sound_wave_state


def phase_speed(f0, f1, T, k):
    """Speed of the first Fourier mode, from its phase shift over ``T``."""
    c0, c1 = np.fft.rfft(f0.ravel())[1], np.fft.rfft(f1.ravel())[1]
    return float(np.angle(c0 / c1)) / (k * T)


def measure(n, T_grav=0.25, T_sound=0.5, cfl=0.25):
    grid = GridSpec((n, 1, 1), (1.0, 1.0, 1.0))
    k = 2 * np.pi
    eos = EquationOfState(1.0, 2.0)
    U0 = gauge_wave_state(grid, eos, 1e-6, None, "plus")
    steps = int(round(T_grav / (cfl * grid.h)))
    c_grav = phase_speed(U0[..., 7], evolve_direct(U0, eos, grid, T_grav / steps, steps)[..., 7], T_grav, k)

    eos = EquationOfState(450.0, 2.0)  # sigma = 0.3 at w0 = 0.01
    U0 = sound_wave_state(grid, eos, 0.01, 1e-6)
    steps = int(round(T_sound / (cfl * grid.h)))
    c_sound = phase_speed(U0[..., 50], evolve_direct(U0, eos, grid, T_sound / steps, steps)[..., 50], T_sound, k)
    return c_grav, c_sound, float(sound_speed(0.01, eos))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--points", type=int, nargs="*", default=[64, 128, 256])
    args = ap.parse_args()
    print(f"{'N':>5} {'c_grav':>12} {'err':>9} {'c_sound':>12} {'sigma':>9} {'err':>9}")
    for n in args.points:
        cg, cs, sig = measure(n)
        print(f"{n:5d} {cg:12.8f} {abs(cg - 1):9.2e} {cs:12.8f} {sig:9.6f} {abs(cs / sig - 1):9.2e}")


if __name__ == "__main__":
    main()
