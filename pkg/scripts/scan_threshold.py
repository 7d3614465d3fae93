"""Sweep t for S^k x S^l, print the classification table and write CSV + SVG.

    python3 scripts/scan_threshold.py --k 2 --l 2 --t-max 3 --steps 41 --out results/scan
"""
import argparse
from pathlib import Path

from yamabe_lab.geometry import ProductFamily
from yamabe_lab.reports import SCAN_COLUMNS, scan_svg, to_csv
from yamabe_lab.threshold import critical_parameter, scan


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--k", type=int, default=2)
    ap.add_argument("--l", type=int, default=2)
    ap.add_argument("--t-min", type=float, default=1.0)
    ap.add_argument("--t-max", type=float, default=3.0)
    ap.add_argument("--steps", type=int, default=41)
    ap.add_argument("--with-minimizer", action="store_true")
    ap.add_argument("--out", default="results/scan")
    args = ap.parse_args()

    records = scan(
        ProductFamily.spheres(args.k, args.l, args.t_min),
        args.t_min,
        args.t_max,
        args.steps,
        with_minimizer=args.with_minimizer,
        l_max=4,
        restarts=4,
    )
    rows = [r.row() for r in records]
    print(f"{'t':>8} {'lambda1':>9} {'s/(n-1)':>9} {'energy':>10} {'drop':>10}  label")
    for r in rows:
        drop = "" if r["drop"] is None else f"{r['drop']:.3e}"
        print(f"{r['t']:8.4f} {r['lambda1']:9.4f} {r['threshold']:9.4f} {r['energy']:10.4f} {drop:>10}  {r['classification']}")
    config = vars(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    columns = SCAN_COLUMNS if args.with_minimizer else [c for c in SCAN_COLUMNS if c != "estimate"]
    out.with_suffix(".csv").write_text(to_csv(rows, columns, config))
    out.with_suffix(".svg").write_text(scan_svg(rows, critical_parameter(args.k), config))
    print(f"wrote {out.with_suffix('.csv')} and {out.with_suffix('.svg')}")


if __name__ == "__main__":
    main()
