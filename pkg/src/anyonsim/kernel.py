"""Trajectory-kernel selection: compiled extension with pure-Python fallback.

The compiled module is optional; when it is missing (no build step, or an
unsupported platform) the Python twin is used.  Both produce bit-identical
samples, so the choice never affects results, only speed.
"""

from __future__ import annotations

from . import _trajkernel_py

try:
    from . import _trajkernel as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None

__all__ = ["HAVE_COMPILED", "run_pair_trials", "implementation_name"]


def implementation_name(impl=None) -> str:
    if impl in (None, "auto"):
        return "compiled" if HAVE_COMPILED else "python"
    if impl in ("compiled", "python"):
        return impl
    raise ValueError(f"unknown kernel implementation {impl!r}")


def run_pair_trials(master_seed, n_trials, probs_init, probs_after,
                    success_index, max_even_steps, trial_offset=0, impl=None):
    name = implementation_name(impl)
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled trajectory kernel is not available")
        fn = _compiled.run_pair_trials
    else:
        fn = _trajkernel_py.run_pair_trials
    return fn(master_seed, n_trials, probs_init, probs_after,
              success_index, max_even_steps, trial_offset)
