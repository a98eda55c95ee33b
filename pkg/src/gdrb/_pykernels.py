"""Pure-numpy versions of the RB sequence kernels.

Selected automatically when the compiled extension is unavailable, or when
``GDRB_PURE_PYTHON=1`` is set.  Vectorized across sequences rather than
along them.
"""
import itertools

import numpy as np

_CHUNK = 1 << 18


def survival_batch(maps, mult, inv, identity, seqs, rho, Q):
    maps = np.asarray(maps, dtype=float)
    seqs = np.asarray(seqs, dtype=np.int64)
    n_seq, m = seqs.shape
    v = np.broadcast_to(np.asarray(rho, dtype=float), (n_seq, maps.shape[1])).copy()
    cum = np.full(n_seq, identity, dtype=np.int64)
    for j in range(m):
        g = seqs[:, j]
        v = np.einsum("sik,sk->si", maps[g], v)
        cum = mult[g, cum]
    v = np.einsum("sik,sk->si", maps[inv[cum]], v)
    return v @ np.asarray(Q, dtype=float)


def _expand(maps, mult, V, cum):
    n_gates, n = maps.shape[0], maps.shape[1]
    V = np.einsum("gik,sk->sgi", maps, V).reshape(-1, n)
    cum = mult[np.arange(n_gates)[None, :], cum[:, None]].reshape(-1)
    return V, cum


def enumerate_average(maps, mult, inv, identity, m, rho, Q):
    maps = np.asarray(maps, dtype=float)
    Q = np.asarray(Q, dtype=float)
    n_gates = maps.shape[0]
    # enumerate a prefix serially so the vectorized tail stays below _CHUNK rows
    tail = m
    while tail > 0 and n_gates**tail > _CHUNK:
        tail -= 1
    head = m - tail
    total = 0.0
    for prefix in itertools.product(range(n_gates), repeat=head):
        v = np.asarray(rho, dtype=float)
        c = identity
        for g in prefix:
            v = maps[g] @ v
            c = mult[g, c]
        V, cum = v[None, :], np.array([c], dtype=np.int64)
        for _ in range(tail):
            V, cum = _expand(maps, mult, V, cum)
        V = np.einsum("sik,sk->si", maps[inv[cum]], V)
        total += float(np.sum(V @ Q))
    return total / float(n_gates) ** m
