"""Print the static-potential diagnostics for the critical members of several families."""
import argparse
import json

from yamabe_lab.static import static_check


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--pairs", nargs="+", default=["2,2", "3,2", "2,3", "3,3"], help="k,l pairs with k, l <= 3")
    ap.add_argument("--t", type=float, default=None, help="override the critical t")
    args = ap.parse_args()
    for pair in args.pairs:
        k, l = (int(v) for v in pair.split(","))
        rep = static_check(k, l, args.t)
        worst = max(v for key, v in rep["residuals"].items() if key != "rayleigh")
        print(
            f"S^{k} x S^{l}  t={rep['family']['t']:.4f}  status={rep['status']:<10} "
            f"max residual={worst:.2e}  rayleigh={rep['residuals']['rayleigh']:.6f}  "
            f"geodesic={rep['geodesic_deviation']:.2e}  cokernel={rep['cokernel_max']:.2e}"
        )
        if args.t is not None:
            print(json.dumps(rep["residuals"], indent=2))


if __name__ == "__main__":
    main()
