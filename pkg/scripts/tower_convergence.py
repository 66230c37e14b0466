"""Stabilization of the n-th Taylor approximation on small inputs.

P_n of a linear functor converges immediately; P_1 of the tensor square
vanishes through the window once the bottom cell is high enough for the
iteration to be affordable.
"""

import argparse

from rht.calculus import IdentityFunctor, TensorPowerFunctor, p_n_stabilize
from rht.dgcore import DG, homology_dims


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bottom", type=int, default=5, help="degree of the test cell")
    ap.add_argument("--window", default="0:10")
    ap.add_argument("--max-iter", type=int, default=12)
    args = ap.parse_args()
    lo, hi = (int(s) for s in args.window.split(":"))
    x = DG({args.bottom: ("e",)})

    res = p_n_stabilize(IdentityFunctor(), 1, x, window=(lo, hi), max_iter=args.max_iter)
    print(f"P_1(identity): iterations={res.iterations} converged={res.converged} "
          f"H={homology_dims(res.value)}")

    res = p_n_stabilize(TensorPowerFunctor(2), 1, x, window=(lo, hi), max_iter=args.max_iter)
    h = {k: n for k, n in homology_dims(res.value).items() if lo <= k <= hi}
    print(f"P_1(tensor square): iterations={res.iterations} converged={res.converged} "
          f"H|window={h}")


if __name__ == "__main__":
    main()
