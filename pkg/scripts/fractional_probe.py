"""Mollified ``|w|^beta`` norm ratios on the kinked profile, across ``beta``.

    python scripts/fractional_probe.py --betas 1.5 2.0 3.0
"""
import argparse

from einsteuler.wsobolev import fractional_power_probe


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--betas", type=float, nargs="*", default=[1.5, 2.0])
    args = ap.parse_args()
    for beta in args.betas:
        res = fractional_power_probe(beta)
        print(res.line())
        for s, vals in res.ratios.items():
            print(f"    s={s:g}: " + " ".join(f"{v:.4g}" for v in vals))
        print(f"    stable={res.stable} blowup={res.blowup}")


if __name__ == "__main__":
    main()
