"""Refinement study of the normalization drift and the harmonic residual.

Runs the gauge wave, the flat-slicing wave and the constraint-solved fluid
slab at three resolutions and writes ``convergence.csv`` plus a log-log plot.

    python scripts/convergence_study.py --out results/convergence
"""
import argparse
import csv
from pathlib import Path

import numpy as np

from einsteuler.evolve import EvolutionConfig, run
from einsteuler.fluid import EquationOfState
from einsteuler.grid import GridSpec
from einsteuler.scenario import flat_slicing_state, fluid_ball_state, gauge_wave_state

EOS = EquationOfState(1.0, 2.0)
CASES = {
    "gauge-wave": (lambda g: gauge_wave_state(g, EOS, 0.1), 1.0, 1.0, (64, 128, 256)),
    "flat-slicing": (lambda g: flat_slicing_state(g, EOS, 0.1), 1.0, 1.0, (64, 128, 256)),
    "fluid-ball-cmc": (lambda g: fluid_ball_state(g, EOS, amplitude=0.1, radius=1.0, M=1.0, constraints="cmc"),
                       4.0, 0.5, (128, 256, 512)),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results/convergence")
    ap.add_argument("--cases", nargs="*", default=list(CASES))
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for name in args.cases:
        make, L, T, levels = CASES[name]
        for n in levels:
            grid = GridSpec((n, 1, 1), (L, 1.0, 1.0))
            res = run(EvolutionConfig(t_end=T, monitor_every=2), make(grid), EOS, grid)
            arr = res.monitor_array()
            rows.append([name, n, grid.h, np.abs(arr[:, 2]).max(), np.abs(arr[:, 3]).max(), res.gronwall.C])
            print(f"{name:15s} N={n:4d} drift={rows[-1][3]:.3e} F={rows[-1][4]:.3e} C={rows[-1][5]:.4f}", flush=True)

    with (out / "convergence.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["case", "points", "h", "norm_drift", "harmonic_residual", "gronwall_C"])
        w.writerows(rows)

    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    for name in args.cases:
        sel = [r for r in rows if r[0] == name]
        h = np.array([r[2] for r in sel])
        for col, style in ((3, "o-"), (4, "s--")):
            e = np.array([r[col] for r in sel])
            if np.all(e > 1e-13):
                ax.loglog(h, e, style, label=f"{name} {'drift' if col == 3 else 'F'}")
    h = np.array([r[2] for r in rows])
    ax.loglog(np.sort(h), 1e-2 * np.sort(h) ** 4, "k:", label="h^4")
    ax.set_xlabel("h")
    ax.set_ylabel("sup over run")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out / "convergence.png", dpi=120)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
