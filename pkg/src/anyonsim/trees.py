"""Fusion-tree bases and recoupling transforms.

A *shape* is a planar binary tree over leaf positions: either a leaf index or
a pair ``(left_shape, right_shape)``.  A :class:`TreeBasis` enumerates the
admissible charge labelings of a shape, given a per-leaf set of allowed
charges and an optional fixed total charge.  Unitary change-of-basis matrices
between shapes over the same leaves are assembled from elementary F-moves;
every shape is routed through the left-comb normal form, so any two shapes
can be connected.

Labelings are stored as flat tuples of charge indices ordered as: leaf
charges left to right, then internal-node charges in postorder.  Internal
nodes are identified by their leaf span ``(lo, hi)``, which is stable across
reshaping and is what the transform code keys on.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "left_comb",
    "right_comb_over",
    "group_shape",
    "bipartite_shape",
    "shape_leaves",
    "shape_spans",
    "TreeBasis",
    "tree_basis",
    "tree_transform",
]


# ----------------------------------------------------------------------
# shapes
# ----------------------------------------------------------------------

def left_comb(n, offset=0):
    """(((0,1),2),...) over leaves offset..offset+n-1."""
    if n < 1:
        raise ValueError("need at least one leaf")
    shape = offset
    for i in range(1, n):
        shape = (shape, offset + i)
    return shape


def left_comb_over(seq):
    shape = seq[0]
    for s in seq[1:]:
        shape = (shape, s)
    return shape


def right_comb_over(seq):
    shape = seq[-1]
    for s in reversed(seq[:-1]):
        shape = (s, shape)
    return shape


def group_shape(n, lo, hi):
    """Left comb in which leaves lo..hi (inclusive) first fuse among themselves."""
    if not 0 <= lo <= hi < n:
        raise ValueError(f"invalid group {lo}..{hi} for {n} leaves")
    group = left_comb(hi - lo + 1, offset=lo)
    parts = list(range(lo)) + [group] + list(range(hi + 1, n))
    return left_comb_over(parts)


def bipartite_shape(n, m):
    """Two left-comb subtrees over leaves 0..m-1 and m..n-1."""
    if not 1 <= m < n:
        raise ValueError(f"invalid split {m} of {n} leaves")
    return (left_comb(m), left_comb(n - m, offset=m))


def shape_leaves(shape):
    if isinstance(shape, int):
        return (shape,)
    return shape_leaves(shape[0]) + shape_leaves(shape[1])


def shape_spans(shape):
    """Spans (lo, hi) of internal nodes in postorder."""
    if isinstance(shape, int):
        return []
    left, right = shape[0], shape[1]
    spans = shape_spans(left) + shape_spans(right)
    lo = left if isinstance(left, int) else _span(left)[0]
    hi = right if isinstance(right, int) else _span(right)[1]
    spans.append((lo, hi))
    return spans


def _span(shape):
    leaves = shape_leaves(shape)
    return leaves[0], leaves[-1]


# ----------------------------------------------------------------------
# bases
# ----------------------------------------------------------------------

class TreeBasis:
    """Admissible labelings of one tree shape."""

    def __init__(self, spec, slots, shape, total=None):
        slots = tuple(tuple(int(c) for c in s) for s in slots)
        leaves = shape_leaves(shape)
        if leaves != tuple(range(len(slots))):
            raise ValueError(f"shape leaves {leaves} do not match {len(slots)} slots")
        self.spec = spec
        self.slots = slots
        self.shape = shape
        self.total = total
        self.n_leaves = len(slots)
        leaf_spans = [(i, i) for i in range(self.n_leaves)]
        self.node_spans = tuple(leaf_spans + shape_spans(shape))
        self._span_pos = {span: i for i, span in enumerate(self.node_spans)}
        self.elements = tuple(sorted(self._enumerate()))
        self._index = {el: i for i, el in enumerate(self.elements)}

    # -- enumeration ----------------------------------------------------

    def _enumerate(self):
        spec = self.spec
        out = []

        def gen(shape):
            # yields (root_charge, {span: charge}) for the subtree
            if isinstance(shape, int):
                for c in self.slots[shape]:
                    yield c, {(shape, shape): c}
                return
            left, right = shape
            for cl, dl in gen(left):
                for cr, dr in gen(right):
                    for root in spec.channels(cl, cr):
                        d = dict(dl)
                        d.update(dr)
                        d[_span_of(shape)] = root
                        yield root, d

        for root, assign in gen(self.shape):
            if self.total is not None and root != self.total:
                continue
            out.append(tuple(assign[span] for span in self.node_spans))
        return out

    # -- accessors --------------------------------------------------------

    @property
    def dim(self):
        return len(self.elements)

    def index(self, element):
        return self._index[tuple(element)]

    def charge(self, element, span):
        return element[self._span_pos[span]]

    def root_span(self):
        return (0, self.n_leaves - 1)

    def root_charge(self, element):
        if self.n_leaves == 1:
            return element[0]
        return element[self._span_pos[(0, self.n_leaves - 1)]]

    def leaf_charges(self, element):
        return element[: self.n_leaves]

    def __repr__(self):
        return (f"TreeBasis({self.spec.name}, n={self.n_leaves}, "
                f"shape={self.shape}, total={self.total}, dim={self.dim})")


def _span_of(shape):
    if isinstance(shape, int):
        return (shape, shape)
    leaves = shape_leaves(shape)
    return (leaves[0], leaves[-1])


def tree_basis(spec, slots, shape, total=None) -> TreeBasis:
    slots = tuple(tuple(int(c) for c in s) for s in slots)
    key = ("basis", slots, shape, total)
    hit = spec._cache.get(key)
    if hit is None:
        hit = spec._cache[key] = TreeBasis(spec, slots, shape, total)
    return hit


# ----------------------------------------------------------------------
# transforms
# ----------------------------------------------------------------------

def tree_transform(spec, slots, shape_from, shape_to, total=None) -> np.ndarray:
    """Unitary U with U[i_to, i_from] = <to_i|from_i> between two shapes."""
    slots = tuple(tuple(int(c) for c in s) for s in slots)
    key = ("transform", slots, shape_from, shape_to, total)
    hit = spec._cache.get(key)
    if hit is not None:
        return hit
    u_from = _comb_transform(spec, slots, shape_from, total)
    u_to = _comb_transform(spec, slots, shape_to, total)
    out = u_to.conj().T @ u_from
    out.setflags(write=False)
    spec._cache[key] = out
    return out


def _comb_transform(spec, slots, shape, total):
    """Matrix from the `shape` basis to the left-comb basis over the same slots."""
    key = ("compose-to-comb", slots, shape, total)
    hit = spec._cache.get(key)
    if hit is not None:
        return hit
    basis = tree_basis(spec, slots, shape, total)
    acc = np.eye(basis.dim, dtype=complex)
    current = shape
    while True:
        path = _find_rotatable(current)
        if path is None:
            break
        new_shape, step = _rotate_once(spec, slots, current, path, total)
        acc = step @ acc
        current = new_shape
    assert current == left_comb(len(slots)), f"normalization failed: {current}"
    acc.setflags(write=False)
    spec._cache[key] = acc
    return acc


def _find_rotatable(shape, path=()):
    """Path to the topmost node whose right child is internal, if any."""
    if isinstance(shape, int):
        return None
    left, right = shape
    if not isinstance(right, int):
        return path
    return _find_rotatable(left, path + (0,))


def _subtree_at(shape, path):
    for step in path:
        shape = shape[step]
    return shape


def _replace_at(shape, path, new):
    if not path:
        return new
    left, right = shape
    if path[0] == 0:
        return (_replace_at(left, path[1:], new), right)
    return (left, _replace_at(right, path[1:], new))


def _rotate_once(spec, slots, shape, path, total):
    """Apply (A,(B,C)) -> ((A,B),C) at `path`; returns (new_shape, matrix)."""
    node = _subtree_at(shape, path)
    sub_a, bc = node
    sub_b, sub_c = bc
    new_node = ((sub_a, sub_b), sub_c)
    new_shape = _replace_at(shape, path, new_node)

    basis_from = tree_basis(spec, slots, shape, total)
    basis_to = tree_basis(spec, slots, new_shape, total)
    span_a = _span_of(sub_a)
    span_b = _span_of(sub_b)
    span_c = _span_of(sub_c)
    span_bc = (span_b[0], span_c[1])
    span_ab = (span_a[0], span_b[1])
    span_node = (span_a[0], span_c[1])

    pos_bc = basis_from._span_pos[span_bc]
    pos_ab = basis_to._span_pos[span_ab]

    out = np.zeros((basis_to.dim, basis_from.dim), dtype=complex)
    for j, el in enumerate(basis_from.elements):
        a = basis_from.charge(el, span_a)
        b = basis_from.charge(el, span_b)
        c = basis_from.charge(el, span_c)
        d = basis_from.charge(el, span_node)
        f = el[pos_bc]
        # |(a(bc)_f)_d> = sum_e conj(F^{abc}_d[e,f]) |((ab)_e c)_d>
        base = {span: charge for span, charge in zip(basis_from.node_spans, el)}
        del base[span_bc]
        for e in spec.channels(a, b):
            if not spec.n(e, c, d):
                continue
            coeff = np.conj(spec.fsym(a, b, c, d, e, f))
            if coeff == 0:
                continue
            base[span_ab] = e
            target = tuple(base[span] for span in basis_to.node_spans)
            out[basis_to.index(target), j] = coeff
        # no need to restore `base`; overwritten next round
    return new_shape, out
