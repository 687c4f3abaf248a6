"""Fusion-tree state spaces: kets, density matrices, recoupling, fusion.

States live over a :class:`FusionBasis`, the left-canonical fusion-tree basis
of an ordered line-up of anyons.  Leaf slots carry a *set* of allowed charges
so that composites produced by :func:`fuse_leaves` can hold superposed charge;
primitive anyons are singleton slots.  The total charge is either fixed
(kets created from the vacuum have total 0) or free (density matrices that
have undergone charge-line decoherence need the full space).

All operations here are unitary basis changes or exact reindexings; anything
that loses information lives in :mod:`anyonsim.measure`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import trees, diagrams
from .category import CategorySpec

__all__ = [
    "FusionBasis",
    "fusion_basis",
    "AnyonKet",
    "AnyonDensityMatrix",
    "create_from_vacuum",
    "create_nested_from_vacuum",
    "density_from_ket",
    "f_move",
    "with_free_total",
    "reshape_state",
    "fuse_leaves",
    "charge_distribution",
    "reduced_suffix",
    "snapshot",
]

FusionBasis = trees.TreeBasis

_HERM_TOL = 1e-12
_PSD_TOL = 1e-10


def fusion_basis(spec: CategorySpec, leaves, total=None, shape=None) -> FusionBasis:
    """Left-canonical basis over the given leaf charges (labels or charge sets)."""
    slots = []
    for leaf in leaves:
        if isinstance(leaf, (list, tuple, set, frozenset)):
            slots.append(tuple(sorted(spec.index_of(c) for c in leaf)))
        else:
            slots.append((spec.index_of(leaf),))
    if shape is None:
        shape = trees.left_comb(len(slots))
    if total is not None:
        total = spec.index_of(total)
    return trees.tree_basis(spec, tuple(slots), shape, total)


@dataclass
class AnyonKet:
    basis: FusionBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError("amplitude vector does not match the basis dimension")

    @property
    def spec(self):
        return self.basis.spec

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        n = self.norm
        if n == 0:
            raise ValueError("cannot normalize the zero ket")
        return AnyonKet(self.basis, self.amplitudes / n)

    def probabilities(self):
        amp = self.amplitudes
        return amp.real ** 2 + amp.imag ** 2


@dataclass
class AnyonDensityMatrix:
    basis: FusionBasis
    matrix: np.ndarray

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        if self.matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValueError("matrix does not match the basis dimension")

    @property
    def spec(self):
        return self.basis.spec

    @property
    def trace(self):
        return float(self.matrix.trace().real)

    def normalized(self):
        t = self.matrix.trace().real
        if t <= 0:
            raise ValueError("cannot normalize: trace is not positive")
        return AnyonDensityMatrix(self.basis, self.matrix / t)

    def check_valid(self, herm_tol=_HERM_TOL, psd_tol=_PSD_TOL):
        dev = np.abs(self.matrix - self.matrix.conj().T).max() if self.basis.dim else 0.0
        if dev > herm_tol:
            raise ValueError(f"density matrix is not Hermitian (deviation {dev:.3g})")
        eigs = np.linalg.eigvalsh((self.matrix + self.matrix.conj().T) / 2)
        if eigs.min() < -psd_tol:
            raise ValueError(f"density matrix has negative eigenvalue {eigs.min():.3g}")
        return self

    def probabilities(self):
        return self.matrix.diagonal().real.copy()


def density_from_ket(ket: AnyonKet) -> AnyonDensityMatrix:
    amp = ket.amplitudes
    return AnyonDensityMatrix(ket.basis, np.outer(amp, amp.conj()))


# ----------------------------------------------------------------------
# state creation from the vacuum
# ----------------------------------------------------------------------

def _ket_from_diagram(spec, diagram, leaves):
    """Reduce a creation diagram (empty bottom) to a normalized total-0 ket."""
    _, top_basis, mat = diagrams.diagram_matrix(diagram, spec)
    basis0 = fusion_basis(spec, leaves, total=0)
    amps = np.zeros(basis0.dim, dtype=complex)
    for i, el in enumerate(top_basis.elements):
        if top_basis.root_charge(el) == 0 and mat[i, 0] != 0:
            amps[basis0.index(el)] = mat[i, 0]
    ket = AnyonKet(basis0, amps)
    return ket.normalized()


def create_from_vacuum(spec: CategorySpec, pairs) -> AnyonKet:
    """Ket of vacuum pairs in adjacent order: leaves (a1bar, a1, a2bar, a2, ...).

    Amplitudes come from the diagram-engine reduction of the cup product.
    """
    pairs = [spec.index_of(a) for a in pairs]
    if not pairs:
        raise ValueError("need at least one pair")
    diagram = diagrams.Row(parts=tuple(diagrams.Cup(charge=a) for a in pairs))
    if len(pairs) == 1:
        diagram = diagrams.Cup(charge=pairs[0])
    leaves = []
    for a in pairs:
        leaves.extend([spec.dual(a), a])
    return _ket_from_diagram(spec, diagram, leaves)


def create_nested_from_vacuum(spec: CategorySpec, labels) -> AnyonKet:
    """Ket of nested vacuum pairs: leaves (a1, ..., ak, ak_bar, ..., a1_bar).

    Pair i straddles the inside/outside split: its first member sits at
    position i, its dual at the mirror position.  The inside prefix of length
    k therefore carries a nontrivial total-charge distribution, which is what
    group measurements act on.
    """
    labels = [spec.index_of(a) for a in labels]
    if not labels:
        raise ValueError("need at least one pair")
    diagram = diagrams.Cup(charge=spec.dual(labels[0]))
    for j, a in enumerate(labels[1:], start=1):
        row = ([diagrams.Id(charge=labels[i]) for i in range(j)]
               + [diagrams.Cup(charge=spec.dual(a))]
               + [diagrams.Id(charge=spec.dual(labels[i])) for i in reversed(range(j))])
        diagram = diagrams.Seq(rows=(diagram, diagrams.Row(parts=tuple(row))))
    leaves = labels + [spec.dual(a) for a in reversed(labels)]
    return _ket_from_diagram(spec, diagram, leaves)


# ----------------------------------------------------------------------
# basis changes
# ----------------------------------------------------------------------

def with_free_total(state):
    """Embed a fixed-total state into the free-total space (isometric)."""
    basis = state.basis
    if basis.total is None:
        return state
    free = trees.tree_basis(basis.spec, basis.slots, basis.shape, None)
    idx = [free.index(el) for el in basis.elements]
    if isinstance(state, AnyonKet):
        amps = np.zeros(free.dim, dtype=complex)
        amps[idx] = state.amplitudes
        return AnyonKet(free, amps)
    mat = np.zeros((free.dim, free.dim), dtype=complex)
    mat[np.ix_(idx, idx)] = state.matrix
    return AnyonDensityMatrix(free, mat)


def reshape_state(state, shape):
    """Unitary change to another tree shape over the same leaves."""
    basis = state.basis
    u = trees.tree_transform(basis.spec, basis.slots, basis.shape, shape, basis.total)
    new_basis = trees.tree_basis(basis.spec, basis.slots, shape, basis.total)
    if isinstance(state, AnyonKet):
        return AnyonKet(new_basis, u @ state.amplitudes)
    return AnyonDensityMatrix(new_basis, u @ state.matrix @ u.conj().T)


def _toggle_slot(shape, slot):
    """Association toggle at spine position `slot` (1-based).

    On a left-comb segment this turns (((W, x_s), x_{s+1}), ...) into
    ((W, (x_s, x_{s+1})), ...) and is its own inverse.
    """
    spans = trees.shape_spans(shape)
    target = None
    for span in spans:
        if span == (0, slot + 1):
            target = span
            break
    if target is None:
        raise ValueError(f"no recoupling slot {slot} in shape {shape}")

    def walk(node):
        if isinstance(node, int):
            return node
        left, right = node
        lo = trees.shape_leaves(node)[0]
        hi = trees.shape_leaves(node)[-1]
        if (lo, hi) == target:
            if isinstance(right, int) and not isinstance(left, int):
                a, b = left
                if isinstance(b, int):
                    return (a, (b, right))
            if isinstance(right, tuple) and isinstance(right[0], int):
                a = left
                b, c = right
                return ((a, b), c)
            raise ValueError(f"slot {slot} is not an elementary recoupling of {node}")
        return (walk(left), walk(right))

    return walk(shape)


def f_move(state, slot):
    """Elementary recoupling at spine slot `slot` (1 <= slot <= n-2).

    Applied to the left-canonical tree it regroups (e_{slot-1}, x_slot,
    x_{slot+1}); applied again it undoes itself.  Norm and trace are
    preserved exactly up to floating point.
    """
    n = state.basis.n_leaves
    if not 1 <= slot <= n - 2:
        raise ValueError(f"slot must be in 1..{n - 2} for {n} leaves")
    return reshape_state(state, _toggle_slot(state.basis.shape, slot))


# ----------------------------------------------------------------------
# fusion of adjacent leaves
# ----------------------------------------------------------------------

def fuse_leaves(rho: AnyonDensityMatrix, i: int) -> AnyonDensityMatrix:
    """Replace leaves i, i+1 (0-based) by one composite leaf.

    The composite leaf's charge is the former internal edge of the pair;
    coherence between different composite charges is retained.  The result is
    an exact reindexing of the state in the basis where that edge exists.
    """
    basis = rho.basis
    spec = basis.spec
    n = basis.n_leaves
    if not 0 <= i < n - 1:
        raise ValueError(f"leaf index {i} out of range for fusing in {n} leaves")
    grouped = reshape_state(rho, trees.group_shape(n, i, i + 1))
    gbasis = grouped.basis

    pair_channels = sorted({
        e for a in basis.slots[i] for b in basis.slots[i + 1]
        for e in spec.channels(a, b)})
    new_slots = basis.slots[:i] + (tuple(pair_channels),) + basis.slots[i + 2:]
    new_basis = trees.tree_basis(spec, new_slots, trees.left_comb(n - 1), basis.total)

    def map_span(span):
        lo, hi = span
        lo2 = lo if lo <= i else lo - 1
        hi2 = hi if hi <= i else hi - 1
        return (lo2, hi2)

    perm = np.zeros((new_basis.dim, gbasis.dim), dtype=complex)
    pair_span = (i, i + 1)
    for j, el in enumerate(gbasis.elements):
        assign = {}
        for span, charge in zip(gbasis.node_spans, el):
            if span == (i, i) or span == (i + 1, i + 1):
                continue
            key = (i, i) if span == pair_span else map_span(span)
            assign[key] = charge
        target = tuple(assign[span] for span in new_basis.node_spans)
        perm[new_basis.index(target), j] = 1.0
    return AnyonDensityMatrix(new_basis, perm @ grouped.matrix @ perm.conj().T)


# ----------------------------------------------------------------------
# charge statistics and reduction
# ----------------------------------------------------------------------

def _comb_state(state):
    comb = trees.left_comb(state.basis.n_leaves)
    if state.basis.shape == comb:
        return state
    return reshape_state(state, comb)


def prefix_charge(basis: FusionBasis, element, m: int) -> int:
    """Total charge of leaves 0..m-1 of a left-canonical basis element."""
    if m == 1:
        return element[0]
    return basis.charge(element, (0, m - 1))


def charge_distribution(state, m: int) -> np.ndarray:
    """Born probabilities of the total charge of the first m leaves.

    Returns a vector over all labels of the category.  Accepts kets and
    density matrices; the state is brought to the left-canonical tree first.
    """
    n = state.basis.n_leaves
    if not 1 <= m <= n:
        raise ValueError(f"prefix length {m} out of range for {n} leaves")
    state = _comb_state(state)
    basis = state.basis
    weights = state.probabilities()
    out = np.zeros(basis.spec.num_labels)
    for el, w in zip(basis.elements, weights):
        out[prefix_charge(basis, el, m)] += w
    total = out.sum()
    if total > 0:
        out /= total
    return out


def reduced_suffix(rho: AnyonDensityMatrix, m: int) -> AnyonDensityMatrix:
    """Reduced state of leaves m..n-1 after tracing out the prefix.

    Elements are summed over the prefix labels within blocks of equal prefix
    and suffix total charge; this reproduces every charge-conserving
    observable local to the suffix.
    """
    basis = rho.basis
    spec = basis.spec
    n = basis.n_leaves
    if not 1 <= m < n:
        raise ValueError(f"prefix length {m} must be in 1..{n - 1}")
    shape = trees.bipartite_shape(n, m)
    rho = reshape_state(_comb_state(rho), shape)
    bbasis = rho.basis

    suf_basis = trees.tree_basis(spec, basis.slots[m:], trees.left_comb(n - m))
    suf_spans = [(lo + m, hi + m) for (lo, hi) in suf_basis.node_spans]
    out = np.zeros((suf_basis.dim, suf_basis.dim), dtype=complex)

    groups = {}
    for idx, el in enumerate(bbasis.elements):
        suffix_part = tuple(bbasis.charge(el, span) for span in suf_spans)
        env_part = tuple(charge for span, charge in zip(bbasis.node_spans, el)
                         if span not in suf_spans)
        groups.setdefault(env_part, []).append((idx, suffix_part))
    for members in groups.values():
        for idx1, suf1 in members:
            for idx2, suf2 in members:
                out[suf_basis.index(suf1), suf_basis.index(suf2)] += rho.matrix[idx1, idx2]
    # reindex suffix leaves to 0..n-m-1
    return AnyonDensityMatrix(suf_basis, out)


# ----------------------------------------------------------------------
# snapshots
# ----------------------------------------------------------------------

def snapshot(state) -> str:
    """Versioned structured-text export of a state, for golden-file tests."""
    basis = state.basis
    spec = basis.spec
    kind = "ket" if isinstance(state, AnyonKet) else "density"
    lines = [
        f"anyonsim-state/1 kind={kind} category={spec.name} "
        f"leaves={basis.n_leaves} total={'free' if basis.total is None else spec.labels[basis.total].name}",
        "slots " + " ".join("{" + ",".join(spec.labels[c].name for c in s) + "}"
                            for s in basis.slots),
    ]
    for el in basis.elements:
        names = [spec.labels[c].name for c in el]
        lines.append("elem " + " ".join(names))
    if kind == "ket":
        for i, z in enumerate(state.amplitudes):
            if z != 0:
                lines.append(f"amp {i} {float(z.real)!r} {float(z.imag)!r}")
    else:
        mat = state.matrix
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                z = mat[i, j]
                if z != 0:
                    lines.append(f"mat {i} {j} {float(z.real)!r} {float(z.imag)!r}")
    return "\n".join(lines) + "\n"
