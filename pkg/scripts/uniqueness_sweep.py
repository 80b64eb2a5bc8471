"""Certificate value and multistart dispersion across final times."""
import argparse

from nonlocal_parabolic import fixedpoint as fp
from nonlocal_parabolic.config import builtin_field
from nonlocal_parabolic.grid import Grid
from nonlocal_parabolic.potential import builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--potential", default="sine")
    ap.add_argument("--nodes", type=int, default=33)
    ap.add_argument("--T-list", default="0.25,0.5,0.6,1,2,4")
    ap.add_argument("--starts", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    g = Grid.interval(1.0, args.nodes)
    u0 = builtin_field(g, "bump")
    print(f"{'T':>6} {'MKT2':>8} {'cert':>5} {'conv':>5} {'dispersion':>11} {'max_q':>9}")
    for T in (float(t) for t in args.T_list.split(",")):
        spec = fp.ProblemSpec(g, builtin(args.potential), u0, T, 32, tol=1e-12, max_iter=300)
        cert = fp.certify_uniqueness(spec)
        ms = fp.multistart(spec, args.starts, args.seed)
        qs = [q for q in (s.contraction_ratio() for s in ms.converged) if q is not None]
        q = f"{max(qs):9.2e}" if qs else f"{'-':>9}"
        print(f"{T:6g} {cert.product:8.4f} {str(cert.certified):>5} {len(ms.converged):>2}/{args.starts:<2} "
              f"{ms.dispersion:11.2e} {q}")


if __name__ == "__main__":
    main()
