"""Numba kernel for collapsed Gibbs sampling.

The RNG is an inline splitmix64 so that seeded runs are bit-reproducible
across platforms and numba versions; the count tables are plain int32
arrays updated in place.
"""

import numpy as np
from numba import njit

_U = np.uint64
_INV_2_53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, inline="always")
def _mix64(state):
    state = state + _U(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> _U(30))) * _U(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> _U(27))) * _U(0x94D049BB133111EB)
    z = z ^ (z >> _U(31))
    return state, z


@njit(cache=True, inline="always")
def _uniform(state):
    state, z = _mix64(state)
    return state, float(z >> _U(11)) * _INV_2_53


@njit(cache=True)
def init_state(tokens, doc_of, n_topics, n_terms, seed):
    """Assign every token a uniformly random topic and build the count tables."""
    n_docs = 0
    for i in range(doc_of.shape[0]):
        if doc_of[i] + 1 > n_docs:
            n_docs = doc_of[i] + 1
    z = np.empty(tokens.shape[0], dtype=np.int32)
    n_dk = np.zeros((n_docs, n_topics), dtype=np.int32)
    n_kw = np.zeros((n_topics, n_terms), dtype=np.int32)
    n_k = np.zeros(n_topics, dtype=np.int32)
    state = _U(seed)
    for i in range(tokens.shape[0]):
        state, u = _uniform(state)
        k = int(u * n_topics)
        if k == n_topics:
            k = n_topics - 1
        z[i] = k
        n_dk[doc_of[i], k] += 1
        n_kw[k, tokens[i]] += 1
        n_k[k] += 1
    return z, n_dk, n_kw, n_k, state


@njit(cache=True)
def run_sweeps(tokens, doc_of, z, n_dk, n_kw, n_k, alpha, beta, n_sweeps, state):
    """Full corpus sweeps of the collapsed conditional
    p(z_i = k | rest) ~ (n_dk + alpha) * (n_kw + beta) / (n_k + V*beta)."""
    n_topics = n_kw.shape[0]
    v_beta = n_kw.shape[1] * beta
    cum = np.empty(n_topics, dtype=np.float64)
    for _ in range(n_sweeps):
        for i in range(tokens.shape[0]):
            w = tokens[i]
            d = doc_of[i]
            k = z[i]
            n_dk[d, k] -= 1
            n_kw[k, w] -= 1
            n_k[k] -= 1
            total = 0.0
            for kk in range(n_topics):
                total += (n_dk[d, kk] + alpha) * (n_kw[kk, w] + beta) / (n_k[kk] + v_beta)
                cum[kk] = total
            state, u = _uniform(state)
            target = u * total
            k = 0
            while k < n_topics - 1 and cum[k] <= target:
                k += 1
            z[i] = k
            n_dk[d, k] += 1
            n_kw[k, w] += 1
            n_k[k] += 1
    return state
