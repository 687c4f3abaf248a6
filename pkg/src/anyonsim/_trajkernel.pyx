# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled trajectory-sampling kernel for bulk protocol statistics.

Bit-identical twin of ``_trajkernel_py.run_pair_trials``: the SplitMix64
stream, seed derivation and inverse-CDF scan reproduce the Python (and
full-machinery) sampling exactly, uniform by uniform.
"""

import numpy as np


cdef unsigned long long GOLDEN = 0x9E3779B97F4A7C15ULL
cdef unsigned long long M1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long M2 = 0x94D049BB133111EBULL


cdef inline unsigned long long mix64(unsigned long long z) nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline unsigned long long derive(unsigned long long seed,
                                      unsigned long long counter) nogil:
    return mix64(seed + (counter + 1) * GOLDEN)


def run_pair_trials(master_seed, n_trials, probs_init, probs_after,
                    success_index, max_even_steps, trial_offset=0):
    """See ``anyonsim._trajkernel_py.run_pair_trials``."""
    cdef unsigned long long seed = master_seed
    cdef unsigned long long offset = trial_offset
    cdef long long ntr = n_trials
    cdef double[:] p_init = np.ascontiguousarray(probs_init, dtype=np.float64)
    cdef double[:, :] p_after = np.ascontiguousarray(probs_after, dtype=np.float64)
    cdef long long n_labels = p_init.shape[0]
    cdef long long succ = success_index
    cdef long long max_es = max_even_steps

    success_step = np.zeros(ntr, dtype=np.int64)
    outcome_counts = np.zeros(n_labels, dtype=np.int64)
    cdef long long[:] succ_v = success_step
    cdef long long[:] counts_v = outcome_counts

    cdef unsigned long long state
    cdef long long trial, es, k, outcome, prev
    cdef double u, acc, p

    with nogil:
        for trial in range(ntr):
            state = derive(seed, offset + <unsigned long long> trial)
            state = state + GOLDEN  # step-1 draw (outcome certain)
            prev = -1
            for es in range(1, max_es + 1):
                state = state + GOLDEN
                u = <double> (mix64(state) >> 11) * (1.0 / 9007199254740992.0)
                acc = 0.0
                outcome = -1
                for k in range(n_labels):
                    p = p_init[k] if prev < 0 else p_after[prev, k]
                    if p == 0.0:
                        continue
                    acc = acc + p
                    if u < acc:
                        outcome = k
                        break
                if outcome < 0:
                    for k in range(n_labels - 1, -1, -1):
                        p = p_init[k] if prev < 0 else p_after[prev, k]
                        if p != 0.0:
                            outcome = k
                            break
                counts_v[outcome] += 1
                if outcome == succ:
                    succ_v[trial] = es
                    break
                prev = outcome
    return success_step, outcome_counts
