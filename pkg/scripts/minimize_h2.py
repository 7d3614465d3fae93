"""Search for conformal metrics below the energy of h_2 on S^2 x S^2.

Runs the Galerkin minimizer over growing trial spaces and restart counts.  A
search that never goes below the energy is evidence only; it does not decide
whether h_2 is a Yamabe metric.
"""
import argparse

from yamabe_lab.functional import minimize_quotient
from yamabe_lab.geometry import ProductFamily


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t", type=float, default=2.0)
    ap.add_argument("--lmax", type=int, nargs="+", default=[2, 4, 6, 8])
    ap.add_argument("--restarts", type=int, default=16)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--full", action="store_true", help="use the full product basis instead of the zonal one")
    args = ap.parse_args()

    fam = ProductFamily.spheres(2, 2, args.t)
    print(f"t = {args.t}")
    print(f"{'lmax':>5} {'basis':>6} {'estimate':>14} {'energy':>14} {'gap':>11}")
    lowest = None
    for lmax in args.lmax:
        res = minimize_quotient(fam, l_max=lmax, restarts=args.restarts, seed=args.seed, zonal=not args.full)
        lowest = res.gap if lowest is None else max(lowest, res.gap)
        print(f"{lmax:5d} {res.minimizer.space.size:6d} {res.estimate:14.10f} {res.energy:14.10f} {res.gap:11.3e}")
    verdict = "a descent was found" if lowest > 1e-8 else "no quotient value below the energy was found"
    print(f"{verdict} (numerical evidence, not a proof)")


if __name__ == "__main__":
    main()
