"""Random-forcing sweep of the a priori bounds for the elliptic solve."""
import argparse

import numpy as np

from nonlocal_parabolic.elliptic import check_lemma31, solve_V
from nonlocal_parabolic.grid import Grid, norm_l2
from nonlocal_parabolic.potential import builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nodes", type=int, default=33)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--max-norm", type=float, default=10.0)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    g = Grid.interval(1.0, args.nodes)
    rng = np.random.default_rng(args.seed)
    print(f"{'potential':>10} {'bound':>9} {'pass':>9} {'max lhs/rhs':>12}")
    for name in ("abs", "hyperbolic", "sine"):
        p = builtin(name)
        stats = {}
        for _ in range(args.samples):
            f = rng.standard_normal(g.size)
            f *= rng.uniform(0, args.max_norm) / norm_l2(g, f)
            v, _ = solve_V(g, p, f)
            for key, chk in check_lemma31(g, p, f, v).items():
                ok, worst = stats.get(key, (0, 0.0))
                stats[key] = (ok + chk.passed, max(worst, chk.lhs / chk.rhs if chk.rhs else 0.0))
        for key, (ok, worst) in stats.items():
            print(f"{name:>10} {key:>9} {ok:>4}/{args.samples:<4} {worst:12.4f}")


if __name__ == "__main__":
    main()
