"""Implicit-Euler heat solve from the first eigenmode against the continuum decay."""
import argparse

import numpy as np

from nonlocal_parabolic import fixedpoint as fp
from nonlocal_parabolic.grid import Grid, eigenpairs, norm_l2
from nonlocal_parabolic.potential import builtin


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--T", type=float, default=0.5)
    ap.add_argument("--levels", type=int, default=4)
    args = ap.parse_args()
    prev = None
    print(f"{'nodes':>6} {'nt':>5} {'closed_form_err':>16} {'continuum_err':>14} {'ratio':>7}")
    for k in range(args.levels):
        nodes, nt = 64 * 2**k + 1, 64 * 2**k
        g = Grid.interval(1.0, nodes)
        lam, psi1 = eigenpairs(g, 1)[0]
        u = fp.solve(fp.ProblemSpec(g, builtin("zero"), psi1, args.T, nt)).trajectory.states[-1]
        x = g.coordinates()[:, 0]
        closed = norm_l2(g, u - (1 + args.T / nt * lam) ** -nt * psi1)
        cont = norm_l2(g, u - np.sqrt(2) * np.exp(-np.pi**2 * args.T) * np.sin(np.pi * x))
        ratio = f"{prev / cont:7.3f}" if prev else f"{'':>7}"
        print(f"{nodes:6d} {nt:5d} {closed:16.3e} {cont:14.3e} {ratio}")
        prev = cont


if __name__ == "__main__":
    main()
