"""Two-dimensional fluid ball with frozen boundaries, with monitor plots.

    python scripts/fluid_ball_2d.py --out results/ball2d
"""
import argparse
from pathlib import Path

import numpy as np

from einsteuler.evolve import MONITOR_COLUMNS, run, write_monitors
from einsteuler.scenario import build_state, load_scenario

SCENARIO = Path(__file__).resolve().parents[1] / "scenarios" / "fluid_ball_2d.toml"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default=str(SCENARIO))
    ap.add_argument("--out", default="results/ball2d")
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    scn = load_scenario(args.scenario)
    U0 = build_state(scn)
    res = run(scn.evolution, U0, scn.eos, scn.grid, scn.norm)
    write_monitors(out / "monitors.csv", res.monitors)
    arr = res.monitor_array()
    for k, name in enumerate(MONITOR_COLUMNS[1:], start=1):
        print(f"{name:18s} max {np.abs(arr[:, k]).max():.4e}")
    print(f"gronwall C={res.gronwall.C:.4f} slack={res.gronwall.slack:.2e} passed={res.gronwall.passed}")

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    w0 = U0[:, :, 0, 50] / scn.eos.kappa0
    w1 = res.final[:, :, 0, 50] / scn.eos.kappa0
    ext = [-scn.grid.extent[0] / 2, scn.grid.extent[0] / 2, -scn.grid.extent[1] / 2, scn.grid.extent[1] / 2]
    fig, axes = plt.subplots(1, 2, figsize=(9, 4))
    for ax, f, title in zip(axes, (w0, w1), ("w at t=0", f"w at t={res.steps * res.dt:g}")):
        im = ax.imshow(f.T, origin="lower", extent=ext)
        ax.set_title(title)
        fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(out / "density.png", dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
