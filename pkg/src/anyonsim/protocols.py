"""Forced-measurement protocols, the ket-only shortcut, and statistics.

The ping-pong procedure turns interferometric measurement into a simulation
of projective measurement: read the inside group once (step 1), then
alternate unread inside runs (odd steps, pure decoherence) with whole-system
reads (even steps) until the whole system is observed in the vacuum channel.
Each even step is an independent Bernoulli trial with success probability
1/d_a^2 for inside outcome a, so the wait is geometric and the tail decays
exponentially.  On success the state equals the bare Born projection of the
initial state at the inside edge, as if a projective measurement had been
applied there.

All randomness flows from explicit integer seeds through SplitMix64 (see
:mod:`anyonsim.rng`): trial i of a statistics run uses the substream
``derive_seed(master, i)``, and step k of a scripted simulation draws its
outcome from substream (k, 0) and its ping-pong completion from (k, 1).
Trajectory logs are therefore bit-reproducible for a given master seed,
independent of scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel, measure, states
from .category import CategorySpec
from .measure import InterferometerRegion, int_decohere_unread, int_measure
from .rng import SplitMix64

__all__ = [
    "ProtocolError",
    "TrajectoryStep",
    "Trajectory",
    "ProtocolStats",
    "forced_measurement",
    "simulate_projective_on_group",
    "ket_only_simulation",
    "run_script_density",
    "collect_stats",
    "pair_step_probabilities",
]

DEFAULT_MAX_EVEN_STEPS = 200


class ProtocolError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrajectoryStep:
    index: int
    kind: str              # "int" or "int-unread"
    region: int            # prefix length measured
    outcome: int | None    # charge index, None for unread steps
    outcome_name: str | None
    probability: float | None


@dataclass
class Trajectory:
    category: str
    anyon: str
    seed: int
    max_even_steps: int
    steps: list = field(default_factory=list)
    final_state: states.AnyonDensityMatrix | None = None
    success_step: int | None = None
    truncated: bool = False

    @property
    def inside_outcome(self) -> int:
        return self.steps[0].outcome

    @property
    def success_even_count(self) -> int | None:
        return None if self.success_step is None else self.success_step // 2

    def to_log(self) -> str:
        lines = [
            f"# anyonsim-trajectory/1 category={self.category} anyon={self.anyon} "
            f"seed={self.seed} max_even_steps={self.max_even_steps}",
            "# columns: step kind region outcome probability",
        ]
        for s in self.steps:
            out = s.outcome_name if s.outcome is not None else "-"
            prob = repr(s.probability) if s.probability is not None else "-"
            lines.append(f"{s.index} {s.kind} {s.region} {out} {prob}")
        lines.append(f"# success_step={self.success_step} truncated={str(self.truncated).lower()}")
        return "\n".join(lines) + "\n"


def parse_trajectory_log(text: str) -> dict:
    """Read back a trajectory log; returns header fields and step rows."""
    header = {}
    steps = []
    footer = {}
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("anyonsim-trajectory/1"):
                for part in body.split()[1:]:
                    k, _, v = part.partition("=")
                    header[k] = v
            elif "=" in body and not body.startswith("columns"):
                for part in body.split():
                    k, _, v = part.partition("=")
                    footer[k] = v
            continue
        idx, kind, region, outcome, prob = line.split()
        steps.append({
            "step": int(idx),
            "kind": kind,
            "region": int(region),
            "outcome": None if outcome == "-" else outcome,
            "probability": None if prob == "-" else float(prob),
        })
    success = footer.get("success_step", "None")
    return {
        "header": header,
        "steps": steps,
        "success_step": None if success == "None" else int(success),
        "truncated": footer.get("truncated") == "true",
    }


# ----------------------------------------------------------------------
# the ping-pong procedure
# ----------------------------------------------------------------------

def _as_rng(seed_or_rng):
    if isinstance(seed_or_rng, SplitMix64):
        return seed_or_rng
    return SplitMix64(int(seed_or_rng))


def _pingpong(spec, rho, inside, rng, trajectory, max_even_steps,
              debug_read_odd=False):
    """Alternate whole-system reads with unread inside runs until a vacuum
    read restores the inside-outside charge lines.  Returns the final state."""
    n = rho.basis.n_leaves
    whole = InterferometerRegion(n)
    region = InterferometerRegion(inside)
    inside_charge = trajectory.steps[0].outcome
    for es in range(1, max_even_steps + 1):
        outcome, rho = int_measure(rho, whole, rng)
        trajectory.steps.append(TrajectoryStep(
            2 * es, "int", n, outcome.charge, outcome.charge_name,
            outcome.probability))
        if outcome.charge == 0:
            trajectory.success_step = 2 * es
            break
        if debug_read_odd:
            dist = states.charge_distribution(rho, inside)
            certain = int(np.argmax(dist))
            if abs(dist[certain] - 1.0) > 1e-9 or certain != inside_charge:
                raise ProtocolError(
                    "odd-step read is not certain of the inside charge")
        rho = int_decohere_unread(rho, region)
        trajectory.steps.append(TrajectoryStep(
            2 * es + 1, "int-unread", inside, None, None, None))
    else:
        trajectory.truncated = True
    trajectory.final_state = rho
    return rho


def simulate_projective_on_group(spec: CategorySpec, pairs, seed,
                                 max_even_steps=DEFAULT_MAX_EVEN_STEPS,
                                 debug_read_odd=False) -> Trajectory:
    """Simulate a projective measurement of the inside half of a vacuum state.

    The state is created from the vacuum with one dual pair per label in
    ``pairs``, each straddling the inside/outside split (leaves a_1..a_k,
    then the duals mirrored).  The inside prefix of length k is read once --
    its outcome is the projective outcome being simulated -- and the
    ping-pong then removes the decoherence.  On success the final state
    equals the Born projection of the initial state at the inside edge.
    """
    labels = [spec.index_of(a) for a in pairs]
    rng = _as_rng(seed)
    traj = Trajectory(
        category=spec.name,
        anyon=",".join(spec.labels[a].name for a in labels),
        seed=rng.seed,
        max_even_steps=max_even_steps,
    )
    ket = states.create_nested_from_vacuum(spec, labels)
    rho = states.density_from_ket(ket)
    k = len(labels)
    outcome, rho = int_measure(rho, InterferometerRegion(k), rng)
    traj.steps.append(TrajectoryStep(
        1, "int", k, outcome.charge, outcome.charge_name, outcome.probability))
    _pingpong(spec, rho, k, rng, traj, max_even_steps, debug_read_odd)
    return traj


def forced_measurement(spec: CategorySpec, anyon, seed,
                       max_even_steps=DEFAULT_MAX_EVEN_STEPS,
                       debug_read_odd=False) -> Trajectory:
    """Forced measurement on a single vacuum pair of the given anyon.

    Step 1 reads the inside (the anyon itself; the outcome is certain), even
    steps read the whole pair, odd steps run the probes unread.  Terminates
    at the first vacuum read, which restores the pair to its pre-decoherence
    pure state, or after ``max_even_steps`` (recorded as truncation).
    """
    a = spec.index_of(anyon)
    if a == 0:
        raise ProtocolError("forced measurement needs a nontrivial anyon")
    traj = simulate_projective_on_group(
        spec, [a], seed, max_even_steps, debug_read_odd)
    traj.anyon = spec.labels[a].name
    return traj


# ----------------------------------------------------------------------
# scripted simulations: density twin and ket-only shortcut
# ----------------------------------------------------------------------

def run_script_density(spec: CategorySpec, pairs, script, seed,
                       max_even_steps=DEFAULT_MAX_EVEN_STEPS):
    """Full density-matrix execution of a measurement script.

    ``script`` is a list of inside prefix lengths; each entry is one
    interferometric measurement completed by the ping-pong.  Step k draws
    its outcome from substream (k, 0) and its completion from (k, 1).
    """
    labels = [spec.index_of(a) for a in pairs]
    master = _as_rng(seed)
    rho = states.density_from_ket(states.create_nested_from_vacuum(spec, labels))
    n = rho.basis.n_leaves
    outcomes = []
    for k, m in enumerate(script):
        if not 1 <= m < n:
            raise ProtocolError(f"script step {k}: region {m} invalid for {n} leaves")
        traj = Trajectory(spec.name, "", master.seed, max_even_steps)
        outcome, rho = int_measure(rho, InterferometerRegion(m), master.spawn(k, 0))
        traj.steps.append(TrajectoryStep(
            1, "int", m, outcome.charge, outcome.charge_name, outcome.probability))
        rho = _pingpong(spec, rho, m, master.spawn(k, 1), traj, max_even_steps)
        if traj.truncated:
            raise ProtocolError(
                f"script step {k}: ping-pong did not complete in "
                f"{max_even_steps} even steps")
        outcomes.append(outcome)
    return rho, outcomes


def ket_only_simulation(spec: CategorySpec, pairs, script, seed,
                        max_even_steps=DEFAULT_MAX_EVEN_STEPS) -> states.AnyonKet:
    """Scripted simulation keeping only the ket.

    Every scripted measurement is completed by the ping-pong, so its
    decohering vacuum loops are guaranteed to be removed; the net effect on
    the ket is the Born projection at the region edge.  The completion is
    still sampled (substream (k, 1)) so that a script whose completion would
    truncate is rejected exactly like the density path.  The outer product
    of the result reproduces the full density simulation of the same seeded
    script.
    """
    labels = [spec.index_of(a) for a in pairs]
    master = _as_rng(seed)
    ket = states.create_nested_from_vacuum(spec, labels)
    n = ket.basis.n_leaves
    outcomes = []
    for k, m in enumerate(script):
        if not 1 <= m < n:
            raise ProtocolError(f"script step {k}: region {m} invalid for {n} leaves")
        probs = states.charge_distribution(ket, m)
        idx, p = measure.sample_outcome(probs, master.spawn(k, 0))
        keep = np.array([states.prefix_charge(ket.basis, el, m) == idx
                         for el in ket.basis.elements])
        ket = states.AnyonKet(ket.basis, np.where(keep, ket.amplitudes, 0)).normalized()
        outcomes.append(measure.MeasurementOutcome(
            idx, spec.labels[idx].name, p, "interferometric"))
        # virtual ping-pong completion: geometric in the vacuum channel of
        # (inside total) x (outside total); enforces the completion discipline
        rng = master.spawn(k, 1)
        dual = spec.dual(idx)
        channels = spec.channels(idx, dual)
        step_probs = np.zeros(spec.num_labels)
        for c in channels:
            step_probs[c] = spec.qdim(c) / (spec.qdim(idx) * spec.qdim(dual))
        for es in range(1, max_even_steps + 1):
            out, _ = measure.sample_outcome(step_probs, rng)
            if out == 0:
                break
        else:
            raise ProtocolError(
                f"script step {k}: ping-pong did not complete in "
                f"{max_even_steps} even steps")
    return ket, outcomes


# ----------------------------------------------------------------------
# statistics
# ----------------------------------------------------------------------

def pair_step_probabilities(spec: CategorySpec, anyon):
    """Even-step outcome probabilities of the pair protocol, via the full
    measurement machinery (so kernel sampling matches it bit for bit).

    Returns (probs_init, probs_after): the whole-pair read distribution after
    step 1, and after a failed read with each possible outcome.
    """
    a = spec.index_of(anyon)
    key = ("pair-step-probs", a)
    hit = spec._cache.get(key)
    if hit is not None:
        return hit
    rho = states.density_from_ket(states.create_nested_from_vacuum(spec, [a]))
    rho = int_decohere_unread(rho, InterferometerRegion(1))
    probs_init = measure.normalized_probabilities(states.charge_distribution(rho, 2))
    n_labels = spec.num_labels
    probs_after = np.zeros((n_labels, n_labels))
    basis = rho.basis
    for k in range(n_labels):
        flags = np.array([basis.root_charge(el) == k for el in basis.elements])
        if probs_init[k] == 0.0 or not flags.any():
            continue
        mat = np.where(np.outer(flags, flags), rho.matrix, 0.0)
        tr = mat.trace().real
        if tr <= 0:
            continue
        projected = states.AnyonDensityMatrix(basis, mat / tr)
        after = int_decohere_unread(projected, InterferometerRegion(1))
        probs_after[k] = measure.normalized_probabilities(
            states.charge_distribution(after, 2))
    out = (probs_init, probs_after)
    spec._cache[key] = out
    return out


@dataclass
class ProtocolStats:
    category: str
    anyon: str
    seed: int
    trials: int
    max_even_steps: int
    p_theory: float
    success_counts: np.ndarray   # successes at even step t (index t, 0 unused)
    truncated: int
    attempts: int
    outcome_counts: np.ndarray

    @property
    def p_hat(self) -> float:
        return float(self.success_counts.sum() / self.attempts)

    @property
    def p_sigma(self) -> float:
        return math.sqrt(self.p_theory * (1 - self.p_theory) / self.attempts)

    def survivors(self, t: int) -> int:
        """Trials still unfinished after t even steps."""
        return int(self.trials - self.success_counts[: t + 1].sum())

    def expected_survivors(self, t: int) -> float:
        return self.trials * (1 - self.p_theory) ** t

    def survivor_sigma(self, t: int) -> float:
        e = (1 - self.p_theory) ** t
        return math.sqrt(self.trials * e * (1 - e))

    def max_step_observed(self) -> int:
        nz = np.nonzero(self.success_counts)[0]
        return int(nz[-1]) if len(nz) else 0

    def to_csv(self, t_max=None) -> str:
        if t_max is None:
            t_max = max(10, self.max_step_observed())
        t_max = min(t_max, self.max_even_steps)
        lines = [
            f"# anyonsim-survival/1 category={self.category} anyon={self.anyon} "
            f"seed={self.seed} trials={self.trials} p={self.p_theory!r} "
            f"p_hat={self.p_hat!r} truncated={self.truncated}",
            "t,survivors,expected,sigma",
        ]
        for t in range(t_max + 1):
            lines.append(f"{t},{self.survivors(t)},"
                         f"{self.expected_survivors(t)!r},{self.survivor_sigma(t)!r}")
        return "\n".join(lines) + "\n"


def collect_stats(spec: CategorySpec, anyon, trials: int, seed: int,
                  max_even_steps=DEFAULT_MAX_EVEN_STEPS, jobs: int = 1,
                  impl=None) -> ProtocolStats:
    """Run ``trials`` forced measurements and aggregate survival statistics.

    Trial i uses the derived seed ``derive_seed(seed, i)``; results are
    independent of ``jobs`` (chunks only partition the trial range).  The
    sampling kernel reproduces ``forced_measurement`` exactly, trial for
    trial, without building the density matrices.
    """
    a = spec.index_of(anyon)
    if a == 0:
        raise ProtocolError("forced measurement needs a nontrivial anyon")
    if trials < 1:
        raise ProtocolError("need at least one trial")
    probs_init, probs_after = pair_step_probabilities(spec, a)

    jobs = max(1, int(jobs))
    success_steps = np.zeros(trials, dtype=np.int64)
    outcome_counts = np.zeros(spec.num_labels, dtype=np.int64)
    if jobs == 1:
        success_steps, outcome_counts = kernel.run_pair_trials(
            seed, trials, probs_init, probs_after, 0, max_even_steps, impl=impl)
    else:
        import concurrent.futures

        chunk = (trials + jobs - 1) // jobs
        bounds = [(lo, min(lo + chunk, trials)) for lo in range(0, trials, chunk)]

        def one(bound):
            lo, hi = bound
            s, c = kernel.run_pair_trials(
                seed, hi - lo, probs_init, probs_after, 0, max_even_steps,
                trial_offset=lo, impl=impl)
            return lo, hi, s, c

        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as ex:
            for lo, hi, s, c in ex.map(one, bounds):
                success_steps[lo:hi] = s
                outcome_counts += c

    success_counts = np.zeros(max_even_steps + 1, dtype=np.int64)
    for es in success_steps:
        if es > 0:
            success_counts[es] += 1
    truncated = int((success_steps == 0).sum())
    attempts = int(outcome_counts.sum())
    d_a = spec.qdim(a)
    p_theory = 1.0 / (d_a * spec.qdim(spec.dual(a)))
    return ProtocolStats(
        category=spec.name,
        anyon=spec.labels[a].name,
        seed=seed,
        trials=trials,
        max_even_steps=max_even_steps,
        p_theory=p_theory,
        success_counts=success_counts,
        truncated=truncated,
        attempts=attempts,
        outcome_counts=outcome_counts,
    )


