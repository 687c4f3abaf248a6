"""Pure-Python twin of the compiled trajectory-sampling kernel.

Must stay bit-identical to ``_trajkernel.pyx``: same SplitMix64 arithmetic,
same seed derivation, same inverse-CDF scan as ``measure.sample_outcome``.
"""

from __future__ import annotations

import numpy as np

from .rng import GOLDEN, MASK64, derive_seed, mix64

__all__ = ["run_pair_trials"]


def run_pair_trials(master_seed, n_trials, probs_init, probs_after,
                    success_index, max_even_steps, trial_offset=0):
    """Sample forced-measurement trials of the pair protocol.

    probs_init: normalized outcome probabilities of the first whole-pair read
    (one row per label); probs_after[k]: the same after a failed read with
    outcome k.  Trial i draws from the substream derived with counter
    ``trial_offset + i``, so partitioned runs reproduce a single run exactly.
    Returns (success_step, outcome_counts): success_step[i] is the even-step
    count at which trial i succeeded, 0 if truncated; outcome_counts[k]
    counts every even-step outcome k across trials.
    """
    probs_init = np.asarray(probs_init, dtype=float)
    probs_after = np.asarray(probs_after, dtype=float)
    n_labels = probs_init.shape[0]
    success_step = np.zeros(n_trials, dtype=np.int64)
    outcome_counts = np.zeros(n_labels, dtype=np.int64)

    for trial in range(n_trials):
        state = derive_seed(master_seed, trial_offset + trial)
        # step 1: inside read; the outcome is certain but a uniform is drawn
        state = (state + GOLDEN) & MASK64
        probs = probs_init
        for es in range(1, max_even_steps + 1):
            state = (state + GOLDEN) & MASK64
            u = (mix64(state) >> 11) * 2.0 ** -53
            acc = 0.0
            outcome = -1
            for k in range(n_labels):
                p = probs[k]
                if p == 0.0:
                    continue
                acc += p
                if u < acc:
                    outcome = k
                    break
            if outcome < 0:
                for k in range(n_labels - 1, -1, -1):
                    if probs[k] != 0.0:
                        outcome = k
                        break
            outcome_counts[outcome] += 1
            if outcome == success_index:
                success_step[trial] = es
                break
            probs = probs_after[outcome]
    return success_step, outcome_counts
