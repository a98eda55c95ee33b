"""Time the compiled kernels against the numpy fallback.

Run with ``python3 benchmarks/bench_kernels.py``.
"""
import argparse
import timeit

import numpy as np

from gdrb import rng as rngmod
from gdrb.chanalg import ket0_state
from gdrb.groups import get_group
from gdrb.kernels import BACKENDS
from gdrb.noise import random_unitary_gateset
from gdrb.rbsim import _sequence_block, _tables


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--m", type=int, default=256)
    ap.add_argument("--n-seq", type=int, default=1000)
    ap.add_argument("--enum-m", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    gs = random_unitary_gateset(get_group("t_pauli"), 1e-3, 0)
    maps, mult, inv, ident = _tables(gs)
    rho = Q = ket0_state()
    seqs = _sequence_block(gs.group, args.m, args.n_seq, rngmod.derive_seed(0, rngmod.Purpose.TEST, 0))

    print(f"backends available: {', '.join(sorted(BACKENDS))}")
    results = {}
    for name, kern in sorted(BACKENDS.items()):
        surv = min(timeit.repeat(lambda: kern.survival_batch(maps, mult, inv, ident, seqs, rho, Q),
                                 number=1, repeat=args.repeat))
        enum = min(timeit.repeat(lambda: kern.enumerate_average(maps, mult, inv, ident, args.enum_m, rho, Q),
                                 number=1, repeat=args.repeat))
        results[name] = (surv, enum)
        print(f"{name:>8}: survival_batch {args.n_seq}x{args.m} {surv * 1e3:9.2f} ms   "
              f"enumerate_average 24^{args.enum_m} {enum * 1e3:9.2f} ms")
    if len(results) == 2:
        (s_c, e_c), (s_p, e_p) = results["cython"], results["python"]
        print(f"speedup: survival {s_p / s_c:.1f}x, enumeration {e_p / e_c:.1f}x")
        a = BACKENDS["cython"].survival_batch(maps, mult, inv, ident, seqs, rho, Q)
        b = BACKENDS["python"].survival_batch(maps, mult, inv, ident, seqs, rho, Q)
        print(f"max backend disagreement: {np.max(np.abs(a - b)):.1e}")


if __name__ == "__main__":
    main()
