"""Measurement channels: projective and asymptotic interferometric.

Projective measurement samples the charge of one point-like leaf and applies
the bare Born projection; nothing else is disturbed.

Interferometric measurement of a prefix region does three things: it samples
the region's total charge, projects onto that sector, and then applies
*charge-line decoherence* between the region and its complement: every
component of the state in which a nonvacuum charge line connects inside to
outside is destroyed.

The decoherence superoperator is not hand-coded.  It is assembled from the
diagram calculus: the density matrix is folded into a ket on the doubled
leaf line-up (ket leaves, then mirrored bra leaves), where the inside-outside
charge lines of ket and bra become the contiguous middle strand group, and
the vacuum projector loop around that group -- the engine's omega-0 operator
-- is conjugated back.  The closed forms (channel weights d_c / (d_in d_out))
live only in the test suite, as independent oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import diagrams, trees, states
from .category import CategorySpec
from .diagrams import omega_operator

__all__ = [
    "InterferometerRegion",
    "MeasurementOutcome",
    "MeasurementError",
    "proj_measure",
    "int_measure",
    "int_decohere_unread",
    "decoherence_channel",
    "sample_outcome",
    "normalized_probabilities",
]

NEG_PROB_TOL = -1e-10
PRUNE_TOL = 1e-12


class MeasurementError(ValueError):
    pass


@dataclass(frozen=True)
class InterferometerRegion:
    """Prefix of the anyon line-up enclosed by the interferometer.

    ``probe`` records the probe-beam charge for provenance only; the channel
    always assumes a fully distinguishing probe stream (modularity guarantees
    one exists), so the asymptotic action does not depend on it.
    """

    m: int
    probe: int | None = None

    def validate(self, n_leaves):
        if not 1 <= self.m <= n_leaves:
            raise MeasurementError(
                f"region prefix {self.m} out of range for {n_leaves} leaves")


@dataclass(frozen=True)
class MeasurementOutcome:
    charge: int
    charge_name: str
    probability: float
    kind: str


def normalized_probabilities(probs):
    """Prune numerical dust (< 1e-12) and renormalize; order is preserved.

    Shared by live sampling and the bulk trajectory kernels so that both see
    bit-identical probability tables.
    """
    probs = np.asarray(probs, dtype=float)
    if probs.min() < NEG_PROB_TOL:
        raise MeasurementError(
            f"negative outcome probability {probs.min():.3g} below tolerance")
    probs = np.where(probs < PRUNE_TOL, 0.0, probs)
    total = probs.sum()
    if total <= 0:
        raise MeasurementError("all outcome probabilities vanished")
    return probs / total


def sample_outcome(probs, rng):
    """Inverse-CDF sample over label order; prunes numerical dust first."""
    probs = normalized_probabilities(probs)
    u = rng.uniform()
    acc = 0.0
    for i, p in enumerate(probs):
        if p == 0.0:
            continue
        acc += p
        if u < acc:
            return i, float(p)
    # u landed in the terminal rounding gap
    i = int(np.nonzero(probs)[0][-1])
    return i, float(probs[i])


# ----------------------------------------------------------------------
# projective measurement of a single leaf
# ----------------------------------------------------------------------

def proj_measure(rho: states.AnyonDensityMatrix, leaf: int, rng):
    """Born-sample the charge of one leaf and project onto it.

    The leaf may be a composite produced by ``fuse_leaves``; coherences
    consistent with the projected charge survive untouched, and no
    charge-line decoherence of the complement occurs.
    """
    basis = rho.basis
    n = basis.n_leaves
    if not 0 <= leaf < n:
        raise MeasurementError(f"leaf {leaf} out of range for {n} leaves")
    spec = basis.spec
    probs = np.zeros(spec.num_labels)
    for el, w in zip(basis.elements, rho.probabilities()):
        probs[el[leaf]] += w
    idx, p = sample_outcome(probs, rng)
    mask = np.array([el[leaf] == idx for el in basis.elements])
    mat = np.where(np.outer(mask, mask), rho.matrix, 0.0)
    out = states.AnyonDensityMatrix(basis, mat / mat.trace().real)
    outcome = MeasurementOutcome(idx, spec.labels[idx].name, p, "projective")
    return outcome, out


# ----------------------------------------------------------------------
# charge-line decoherence, built from the diagram calculus
# ----------------------------------------------------------------------

class _Channel:
    """Linear map on density matrices over a fixed free-total comb basis."""

    def __init__(self, basis, pair_index, matrix):
        self.basis = basis
        self.pair_index = pair_index      # list of (i, j) basis-element pairs
        self.matrix = matrix              # acts on the packed pair vector

    def apply(self, mat):
        packed = np.array([mat[i, j] for i, j in self.pair_index])
        out_packed = self.matrix @ packed
        out = np.zeros_like(mat)
        for val, (i, j) in zip(out_packed, self.pair_index):
            out[i, j] = val
        return out


def _glue_diagram(spec, basis, el_ket, el_bra):
    """Diagram of the vectorized element |el_ket><el_bra| on the doubled line-up.

    The operator's input legs are bent around to the right into mirror
    positions: a nested rainbow of cups carrying the bra's leaf charges is
    created, the bra's fuse cascade consumes the first n strands down to the
    matched root charge, and the ket's split cascade opens it back up.  All
    bending phases come out of the engine's own composition rules.
    """
    n = basis.n_leaves
    ket_leaves = list(basis.leaf_charges(el_ket))
    bra_leaves = list(basis.leaf_charges(el_bra))
    ket_spine = [el_ket[basis._span_pos[(0, k)]] for k in range(n)]
    bra_spine = [el_bra[basis._span_pos[(0, k)]] for k in range(n)]

    rows = [[diagrams.Cup(charge=spec.dual(bra_leaves[0]))]]
    for j in range(1, n):
        rows.append([diagrams.Id(charge=bra_leaves[i]) for i in range(j)]
                    + [diagrams.Cup(charge=spec.dual(bra_leaves[j]))]
                    + [diagrams.Id(charge=spec.dual(bra_leaves[i]))
                       for i in reversed(range(j))])
    mirror_ids = [diagrams.Id(charge=spec.dual(c)) for c in reversed(bra_leaves)]
    for k in range(1, n):
        # fuse the bra labeling down: strands (spine[k-1], leaf k) -> spine[k]
        rows.append([diagrams.Fuse(left=bra_spine[k - 1], right=bra_leaves[k],
                                   parent=bra_spine[k])]
                    + [diagrams.Id(charge=bra_leaves[i]) for i in range(k + 1, n)]
                    + mirror_ids)
    for k in range(n - 1, 0, -1):
        rows.append([diagrams.Split(parent=ket_spine[k], left=ket_spine[k - 1],
                                    right=ket_leaves[k])]
                    + [diagrams.Id(charge=ket_leaves[i]) for i in range(k + 1, n)]
                    + mirror_ids)
    seq = tuple(r[0] if len(r) == 1 else diagrams.Row(parts=tuple(r)) for r in rows)
    return diagrams.Seq(rows=seq)


def decoherence_channel(spec: CategorySpec, slots, m: int, strategy="projector") -> _Channel:
    """The omega-0 charge-line decoherence channel for a prefix of length m.

    Constructed by folding: each t-matched bra/ket pair of basis elements is
    glued into a state on the doubled line-up (ket leaves 0..n-1, mirrored
    dual bra leaves n..2n-1) by evaluating its gluing diagram with the
    engine, weighted 1/d_t by the bend; the engine's omega-0 loop operator is
    applied around the strands crossing the region boundary (the contiguous
    doubled middle group), and the result is unfolded.  Cached per (slots, m).
    """
    slots = tuple(tuple(int(c) for c in s) for s in slots)
    key = ("decoherence", slots, m, strategy)
    hit = spec._cache.get(key)
    if hit is not None:
        return hit

    n = len(slots)
    basis = trees.tree_basis(spec, slots, trees.left_comb(n), None)

    dslots = slots + tuple(
        tuple(sorted(spec.dual(c) for c in s)) for s in reversed(slots))
    dbasis = trees.tree_basis(spec, dslots, trees.left_comb(2 * n), None)

    qd = np.array([lab.qdim for lab in spec.labels])
    pair_index = []
    columns = []
    dress = []
    for i, el_i in enumerate(basis.elements):
        t = basis.root_charge(el_i)
        for j, el_j in enumerate(basis.elements):
            if basis.root_charge(el_j) != t:
                continue
            diagram = _glue_diagram(spec, basis, el_i, el_j)
            _, top_basis, mat = diagrams.diagram_matrix(diagram, spec)
            col = np.zeros(dbasis.dim, dtype=complex)
            for r, el in enumerate(top_basis.elements):
                if mat[r, 0] != 0:
                    col[dbasis.index(el)] = mat[r, 0]
            pair_index.append((i, j))
            columns.append(col)
            dress.append(qd[t])

    fold = np.column_stack(columns)
    dress = np.array(dress)
    # distinct element pairs vectorize to orthogonal doubled states; the
    # unfolding is the pseudo-inverse on that image
    gram = fold.conj().T @ fold
    offdiag = np.abs(gram - np.diag(gram.diagonal())).max()
    if offdiag > 1e-10:
        raise MeasurementError(
            f"vectorized basis elements are not orthogonal ({offdiag:.3g})")
    unfold = np.diag(1.0 / gram.diagonal().real) @ fold.conj().T

    # omega-0 around the strands crossing the region boundary: in the doubled
    # picture these are the middle group (outside-ket ++ outside-bra leaves).
    # The loop acts on the quantum-trace-normalized density diagram; ordinary
    # matrix elements are dressed by the root quantum dimension on the way in
    # and out (conjugation by diag(sqrt(d_t)) on each side).
    ring = omega_operator(spec, dslots, m, 2 * n - 1 - m, 0, strategy)
    channel = np.diag(dress) @ unfold @ ring @ fold @ np.diag(1.0 / dress)

    out = _Channel(basis, pair_index, channel)
    spec._cache[key] = out
    return out


def int_decohere_unread(rho: states.AnyonDensityMatrix,
                        region: InterferometerRegion) -> states.AnyonDensityMatrix:
    """Charge-line decoherence without reading the interferometer output.

    Equals the outcome-summed measurement channel: dephasing in the region's
    charge followed by omega-0 decoherence.  Deterministic, trace preserving.
    """
    basis = rho.basis
    region.validate(basis.n_leaves)
    rho = states.with_free_total(states._comb_state(rho))
    channel = decoherence_channel(rho.spec, rho.basis.slots, region.m)
    out = channel.apply(rho.matrix)
    tr = out.trace().real
    if abs(tr - rho.matrix.trace().real) > 1e-9:
        raise MeasurementError(f"decoherence channel lost trace: {tr}")
    return states.AnyonDensityMatrix(rho.basis, out / tr * rho.matrix.trace().real)


def int_measure(rho: states.AnyonDensityMatrix, region: InterferometerRegion, rng):
    """Asymptotic interferometric measurement of a prefix region.

    Samples the region's total charge, projects onto it, applies omega-0
    charge-line decoherence between region and complement, renormalizes.
    """
    basis = rho.basis
    region.validate(basis.n_leaves)
    rho = states.with_free_total(states._comb_state(rho))
    spec = rho.spec
    m = region.m

    probs = states.charge_distribution(rho, m)
    idx, p = sample_outcome(probs, rng)

    flags = np.array([states.prefix_charge(rho.basis, el, m) == idx
                      for el in rho.basis.elements])
    mat = np.where(np.outer(flags, flags), rho.matrix, 0.0)
    mat = mat / mat.trace().real

    projected = states.AnyonDensityMatrix(rho.basis, mat)
    out = int_decohere_unread(projected, region)
    outcome = MeasurementOutcome(idx, spec.labels[idx].name, p, "interferometric")
    return outcome, out
