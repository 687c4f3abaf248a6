"""Planar labeled-tangle diagrams: parsing, type checking, evaluation.

Diagrams are composition terms over the generators

* ``id(a)``     -- a strand of charge a
* ``cup(a)``    -- pair creation from the vacuum; top boundary (abar, a)
* ``cap(a)``    -- pair annihilation; bottom boundary (abar, a)
* ``split(p->l,r)`` / ``fuse(l,r->p)`` -- trivalent vertices
* ``omega(a){i..j}`` -- projector loop around the contiguous strands i..j
* ``scalar(re[,im])``

joined by ``|`` (side by side) and ``;`` (stacked, reading bottom to top).
A diagram denotes a linear map from the fusion space of its bottom boundary
to that of its top boundary; closed diagrams evaluate to scalars.  See
``docs/diagram_dsl.md`` for the grammar.

Evaluation is compositional over left-canonical fusion-tree bases.  Two
reduction strategies are provided and must agree: ``projector`` resolves an
omega loop directly as a charge projector on the encircled group, while
``expand`` expands it into its constituent charge loops, each evaluated
through the S-matrix ratio rule on the group's fusion channels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .category import CategorySpec, omega_coefficients
from . import trees

__all__ = [
    "DiagramError",
    "Diagram",
    "Id",
    "Cup",
    "Cap",
    "Split",
    "Fuse",
    "Omega",
    "Scalar",
    "Row",
    "Seq",
    "parse_diagram",
    "diagram_matrix",
    "evaluate_closed",
    "reduce_open",
    "omega_operator",
    "DiagramValue",
]

COEFF_TOL = 1e-12


class DiagramError(ValueError):
    """Syntax, typing or admissibility error in a diagram; carries a position."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"line {line}, column {col}: {message}"
        super().__init__(message)


# ----------------------------------------------------------------------
# term tree
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class Diagram:
    """Base class; `pos` is the (line, col) of the defining token, if parsed."""

    pos: tuple = field(default=None, compare=False)

    def bottom(self, spec):
        raise NotImplementedError

    def top(self, spec):
        raise NotImplementedError


@dataclass(frozen=True)
class Id(Diagram):
    charge: int = 0

    def bottom(self, spec):
        return (self.charge,)

    def top(self, spec):
        return (self.charge,)


@dataclass(frozen=True)
class Cup(Diagram):
    charge: int = 0

    def bottom(self, spec):
        return ()

    def top(self, spec):
        return (spec.dual(self.charge), self.charge)


@dataclass(frozen=True)
class Cap(Diagram):
    charge: int = 0

    def bottom(self, spec):
        return (spec.dual(self.charge), self.charge)

    def top(self, spec):
        return ()


@dataclass(frozen=True)
class Split(Diagram):
    parent: int = 0
    left: int = 0
    right: int = 0

    def bottom(self, spec):
        return (self.parent,)

    def top(self, spec):
        return (self.left, self.right)


@dataclass(frozen=True)
class Fuse(Diagram):
    left: int = 0
    right: int = 0
    parent: int = 0

    def bottom(self, spec):
        return (self.left, self.right)

    def top(self, spec):
        return (self.parent,)


@dataclass(frozen=True)
class Omega(Diagram):
    """Loop omega_target around boundary strands lo..hi (1-based, inclusive)."""

    target: int = 0
    lo: int = 1
    hi: int = 1
    # boundary is inherited from the row below; fixed during validation
    strands: tuple = field(default=None, compare=False)

    def bottom(self, spec):
        if self.strands is None:
            raise DiagramError("omega loop has no ambient strands", *self._pos())
        return self.strands

    def top(self, spec):
        return self.bottom(spec)

    def _pos(self):
        return self.pos if self.pos else (None, None)


@dataclass(frozen=True)
class Scalar(Diagram):
    value: complex = 1.0

    def bottom(self, spec):
        return ()

    def top(self, spec):
        return ()


@dataclass(frozen=True)
class Row(Diagram):
    parts: tuple = ()

    def bottom(self, spec):
        return sum((p.bottom(spec) for p in self.parts), ())

    def top(self, spec):
        return sum((p.top(spec) for p in self.parts), ())


@dataclass(frozen=True)
class Seq(Diagram):
    rows: tuple = ()

    def bottom(self, spec):
        return self.rows[0].bottom(spec) if self.rows else ()

    def top(self, spec):
        return self.rows[-1].top(spec) if self.rows else ()


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

_PUNCT = ("->", "..", "(", ")", "{", "}", ",", ";", "|")


def _tokenize(text):
    tokens = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        matched = False
        for p in _PUNCT:
            if text.startswith(p, i):
                tokens.append((p, p, line, col))
                i += len(p)
                col += len(p)
                matched = True
                break
        if matched:
            continue
        if ch == "-" or ch.isalnum() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_/.-+"):
                if text.startswith("->", j) or text.startswith("..", j):
                    break
                j += 1
            word = text[i:j]
            tokens.append(("word", word, line, col))
            col += j - i
            i = j
            continue
        raise DiagramError(f"unexpected character {ch!r}", line, col)
    tokens.append(("eof", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens, spec, anyon):
        self.tokens = tokens
        self.k = 0
        self.spec = spec
        if anyon is not None:
            anyon = spec.index_of(anyon)
        self.anyon = anyon

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise DiagramError(f"expected {kind!r}, found {tok[1]!r}", tok[2], tok[3])
        return tok

    def fail(self, msg, tok):
        raise DiagramError(msg, tok[2], tok[3])

    def charge(self):
        tok = self.expect("word")
        name = tok[1]
        if name == "A" or name == "Abar":
            if self.anyon is None:
                self.fail("placeholder charge requires an --anyon binding", tok)
            return self.anyon if name == "A" else self.spec.dual(self.anyon)
        if name == "vac":
            return 0
        try:
            return self.spec.index_of(name)
        except Exception:
            self.fail(f"unknown charge label {name!r} in category {self.spec.name!r}", tok)

    def integer(self):
        tok = self.expect("word")
        try:
            return int(tok[1])
        except ValueError:
            self.fail(f"expected an integer, found {tok[1]!r}", tok)

    def number(self):
        tok = self.expect("word")
        try:
            return float(tok[1])
        except ValueError:
            self.fail(f"expected a number, found {tok[1]!r}", tok)

    # grammar ----------------------------------------------------------

    def expr(self):
        rows = [self.row()]
        while self.peek()[0] == ";":
            self.next()
            rows.append(self.row())
        if len(rows) == 1:
            return rows[0]
        return Seq(pos=rows[0].pos, rows=tuple(rows))

    def row(self):
        parts = [self.atom()]
        while self.peek()[0] == "|":
            self.next()
            parts.append(self.atom())
        if any(isinstance(p, Omega) for p in parts) and len(parts) > 1:
            bad = next(p for p in parts if isinstance(p, Omega))
            raise DiagramError("an omega loop must occupy its own row",
                               *(bad.pos or (None, None)))
        if len(parts) == 1:
            return parts[0]
        return Row(pos=parts[0].pos, parts=tuple(parts))

    def atom(self):
        tok = self.peek()
        if tok[0] == "(":
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        if tok[0] != "word":
            self.fail(f"expected a generator, found {tok[1]!r}", tok)
        head = self.next()
        name = head[1]
        pos = (head[2], head[3])
        if name in ("id", "cup", "cap"):
            self.expect("(")
            c = self.charge()
            self.expect(")")
            cls = {"id": Id, "cup": Cup, "cap": Cap}[name]
            return cls(pos=pos, charge=c)
        if name == "split":
            self.expect("(")
            p = self.charge()
            self.expect("->")
            l = self.charge()
            self.expect(",")
            r = self.charge()
            self.expect(")")
            if not self.spec.n(l, r, p):
                self.fail("inadmissible vertex: "
                          f"{self._n(l)} x {self._n(r)} has no {self._n(p)} channel", head)
            return Split(pos=pos, parent=p, left=l, right=r)
        if name == "fuse":
            self.expect("(")
            l = self.charge()
            self.expect(",")
            r = self.charge()
            self.expect("->")
            p = self.charge()
            self.expect(")")
            if not self.spec.n(l, r, p):
                self.fail("inadmissible vertex: "
                          f"{self._n(l)} x {self._n(r)} has no {self._n(p)} channel", head)
            return Fuse(pos=pos, left=l, right=r, parent=p)
        if name == "omega":
            self.expect("(")
            t = self.charge()
            self.expect(")")
            self.expect("{")
            lo = self.integer()
            hi = lo
            if self.peek()[0] == "..":
                self.next()
                hi = self.integer()
            self.expect("}")
            if lo < 1 or hi < lo:
                self.fail(f"invalid strand range {lo}..{hi}", head)
            return Omega(pos=pos, target=t, lo=lo, hi=hi)
        if name == "scalar":
            self.expect("(")
            re = self.number()
            im = 0.0
            if self.peek()[0] == ",":
                self.next()
                im = self.number()
            self.expect(")")
            return Scalar(pos=pos, value=complex(re, im))
        self.fail(f"unknown generator {name!r}", head)

    def _n(self, idx):
        return self.spec.labels[idx].name


def parse_diagram(text: str, spec: CategorySpec, anyon=None) -> Diagram:
    """Parse and type check a diagram in the DSL.

    Charge names are resolved against ``spec``; the placeholders ``A`` and
    ``Abar`` resolve to ``anyon`` and its dual.  Errors carry line/column.
    """
    tokens = _tokenize(text)
    parser = _Parser(tokens, spec, anyon)
    if parser.peek()[0] == "eof":
        return Seq(pos=(1, 1), rows=())
    d = parser.expr()
    tail = parser.peek()
    if tail[0] != "eof":
        raise DiagramError(f"unexpected {tail[1]!r} after diagram", tail[2], tail[3])
    return _validate(d, spec)


def _validate(d, spec):
    """Resolve omega ambient boundaries and check vertical interfaces."""
    if isinstance(d, Seq):
        rows = []
        boundary = None
        for row in d.rows:
            row = _validate_row(row, spec, boundary)
            bot = row.bottom(spec)
            if boundary is not None and bot != boundary:
                raise DiagramError(
                    "mismatched interfaces: row expects "
                    f"[{_names(spec, bot)}] on [{_names(spec, boundary)}]",
                    *(row.pos or (None, None)))
            boundary = row.top(spec)
            rows.append(row)
        return Seq(pos=d.pos, rows=tuple(rows))
    return _validate_row(d, spec, None)


def _validate_row(row, spec, boundary):
    if isinstance(row, Seq):
        # parenthesized subexpression used as a row
        sub = _validate(row, spec)
        bot = sub.bottom(spec)
        if boundary is not None and bot != boundary:
            raise DiagramError(
                "mismatched interfaces: sub-diagram expects "
                f"[{_names(spec, bot)}] on [{_names(spec, boundary)}]",
                *(sub.pos or (None, None)))
        return sub
    if isinstance(row, Omega):
        if boundary is None:
            raise DiagramError("omega loop has no ambient strands (it cannot "
                               "be the first row)", *(row.pos or (None, None)))
        if row.hi > len(boundary):
            raise DiagramError(
                f"omega range {row.lo}..{row.hi} exceeds the {len(boundary)} "
                "ambient strands", *(row.pos or (None, None)))
        return Omega(pos=row.pos, target=row.target, lo=row.lo, hi=row.hi,
                     strands=tuple(boundary))
    if isinstance(row, Row):
        if any(isinstance(p, (Row, Seq)) for p in row.parts):
            parts = tuple(_validate(p, spec) if isinstance(p, (Row, Seq)) else p
                          for p in row.parts)
            row = Row(pos=row.pos, parts=parts)
    return row


def _names(spec, charges):
    return ", ".join(spec.labels[c].name for c in charges)


# ----------------------------------------------------------------------
# evaluation
# ----------------------------------------------------------------------

def _slots(charges):
    return tuple((int(c),) for c in charges)


def _boundary_basis(spec, charges):
    if not charges:
        return None  # empty boundary: one-dimensional vacuum space
    return trees.tree_basis(spec, _slots(charges), trees.left_comb(len(charges)))


def _dim(basis):
    return 1 if basis is None else basis.dim


def _root(basis, i):
    return 0 if basis is None else basis.root_charge(basis.elements[i])


def omega_operator(spec, slots, lo, hi, target, strategy="projector"):
    """Matrix of an omega_target loop around leaves lo..hi (0-based, inclusive)
    in the left-comb basis over ``slots``.

    An empty group (lo > hi) evaluates to the free-loop scalar
    sum_x c_x d_x = delta_{target,0} times the identity.
    """
    n = len(slots)
    basis = trees.tree_basis(spec, slots, trees.left_comb(n))
    if lo > hi:
        if strategy == "expand":
            om = omega_coefficients(spec, target)
            qd = np.array([lab.qdim for lab in spec.labels])
            scale = complex(np.sum(om.coeffs * qd))
        else:
            scale = 1.0 if target == 0 else 0.0
        return scale * np.eye(basis.dim, dtype=complex)
    if not (0 <= lo <= hi < n):
        raise ValueError(f"invalid omega span {lo}..{hi} on {n} strands")
    shape = trees.group_shape(n, lo, hi)
    gbasis = trees.tree_basis(spec, slots, shape)
    U = trees.tree_transform(spec, slots, trees.left_comb(n), shape)
    span = (lo, hi)
    if strategy == "expand":
        om = omega_coefficients(spec, target)
        s = spec.smatrix
        weight = {e: complex(np.sum(om.coeffs * s[:, e] / s[0, e]))
                  for e in range(spec.num_labels)}
    elif strategy == "projector":
        weight = {e: (1.0 if e == target else 0.0) for e in range(spec.num_labels)}
    else:
        raise ValueError(f"unknown strategy {strategy!r}")
    diag = np.array([weight[gbasis.charge(el, span)] for el in gbasis.elements])
    return U.conj().T @ (diag[:, None] * U)


def diagram_matrix(d: Diagram, spec: CategorySpec, strategy="projector", assoc="left"):
    """Return (bottom_basis, top_basis, matrix) for a validated diagram.

    Bases are left-canonical fusion-tree bases of the boundary charges with
    free total charge; ``None`` stands for the one-dimensional empty boundary.
    """
    bot = d.bottom(spec)
    top = d.top(spec)
    mat = _matrix(d, spec, strategy, assoc)
    return _boundary_basis(spec, bot), _boundary_basis(spec, top), mat


def _matrix(d, spec, strategy, assoc):
    if isinstance(d, Seq):
        if not d.rows:
            return np.array([[1.0 + 0j]])
        mats = [_matrix(r, spec, strategy, assoc) for r in d.rows]
        if assoc == "left":
            out = mats[0]
            for m in mats[1:]:
                out = m @ out
        else:
            out = mats[-1]
            for m in reversed(mats[:-1]):
                out = out @ m
        return out
    if isinstance(d, Row):
        parts = list(d.parts)
        acc = parts[0]
        acc_m = _matrix(acc, spec, strategy, assoc)
        acc_bot, acc_top = acc.bottom(spec), acc.top(spec)
        for p in parts[1:]:
            pm = _matrix(p, spec, strategy, assoc)
            acc_m = _hcompose(spec, acc_bot, acc_top, acc_m,
                              p.bottom(spec), p.top(spec), pm)
            acc_bot = acc_bot + p.bottom(spec)
            acc_top = acc_top + p.top(spec)
        return acc_m
    if isinstance(d, Id):
        return np.eye(_dim(_boundary_basis(spec, (d.charge,))), dtype=complex)
    if isinstance(d, Scalar):
        return np.array([[complex(d.value)]])
    if isinstance(d, Cup):
        a = d.charge
        basis = _boundary_basis(spec, (spec.dual(a), a))
        col = np.zeros((basis.dim, 1), dtype=complex)
        for i, el in enumerate(basis.elements):
            if basis.root_charge(el) == 0:
                col[i, 0] = math.sqrt(spec.qdim(a))
        return col
    if isinstance(d, Cap):
        a = d.charge
        basis = _boundary_basis(spec, (spec.dual(a), a))
        row = np.zeros((1, basis.dim), dtype=complex)
        for i, el in enumerate(basis.elements):
            if basis.root_charge(el) == 0:
                row[0, i] = math.sqrt(spec.qdim(a))
        return row
    if isinstance(d, Split):
        basis = _boundary_basis(spec, (d.left, d.right))
        col = np.zeros((basis.dim, 1), dtype=complex)
        for i, el in enumerate(basis.elements):
            if basis.root_charge(el) == d.parent:
                col[i, 0] = 1.0
        return col
    if isinstance(d, Fuse):
        basis = _boundary_basis(spec, (d.left, d.right))
        row = np.zeros((1, basis.dim), dtype=complex)
        for i, el in enumerate(basis.elements):
            if basis.root_charge(el) == d.parent:
                row[0, i] = 1.0
        return row
    if isinstance(d, Omega):
        if d.strands is None:
            raise DiagramError("omega loop has no ambient strands")
        return omega_operator(spec, _slots(d.strands), d.lo - 1, d.hi - 1,
                              d.target, strategy)
    raise TypeError(f"not a diagram node: {d!r}")


def _hcompose(spec, a_bot, a_top, ma, b_bot, b_top, mb):
    """Matrix of (A side by side with B) in the merged left-comb bases."""
    _, fold_bot = _junction(spec, a_bot, b_bot)
    _, fold_top = _junction(spec, a_top, b_top)

    k = np.zeros((len(fold_top), len(fold_bot)), dtype=complex)
    for col, (ia, ib, _t) in enumerate(fold_bot):
        for row, (ja, jb, _t2) in enumerate(fold_top):
            if _t2 != _t:
                continue
            val = ma[ja, ia] * mb[jb, ib]
            if val != 0:
                k[row, col] = val
    if not (a_bot + b_bot) and not (a_top + b_top):
        return k
    u_bot = _junction_to_comb(spec, a_bot, b_bot)
    u_top = _junction_to_comb(spec, a_top, b_top)
    return u_top @ k @ u_bot.conj().T


def _junction(spec, a_charges, b_charges):
    """Factored basis of A++B: entries (iA, iB, total)."""
    ba = _boundary_basis(spec, a_charges)
    bb = _boundary_basis(spec, b_charges)
    entries = []
    for ia in range(_dim(ba)):
        ta = _root(ba, ia)
        for ib in range(_dim(bb)):
            tb = _root(bb, ib)
            for t in spec.channels(ta, tb):
                entries.append((ia, ib, t))
    merged = _boundary_basis(spec, a_charges + b_charges)
    return merged, entries


def _junction_to_comb(spec, a_charges, b_charges):
    """Unitary from the factored (A, B, total) labeling to the merged comb basis."""
    na, nb = len(a_charges), len(b_charges)
    merged = _boundary_basis(spec, a_charges + b_charges)
    _, entries = _junction(spec, a_charges, b_charges)
    if merged is None:
        return np.array([[1.0 + 0j]])
    if na == 0 or nb == 0:
        # one side is the vacuum space: factored entries already match merged
        out = np.zeros((merged.dim, len(entries)), dtype=complex)
        side = _boundary_basis(spec, a_charges if nb == 0 else b_charges)
        for col, (ia, ib, t) in enumerate(entries):
            el = side.elements[ia if nb == 0 else ib]
            out[merged.index(el), col] = 1.0
        return out

    slots = _slots(a_charges + b_charges)
    shape = trees.bipartite_shape(na + nb, na)
    sbasis = trees.tree_basis(spec, slots, shape)
    u = trees.tree_transform(spec, slots, shape, trees.left_comb(na + nb))
    ba = _boundary_basis(spec, a_charges)
    bb = _boundary_basis(spec, b_charges)
    # map factored entries onto the bipartite-shape basis elements
    perm = np.zeros((sbasis.dim, len(entries)), dtype=complex)
    span_a = (0, na - 1)
    span_b = (na, na + nb - 1)
    span_root = (0, na + nb - 1)
    for col, (ia, ib, t) in enumerate(entries):
        ela = ba.elements[ia]
        elb = bb.elements[ib]
        assign = {}
        for sp, ch in zip(ba.node_spans, ela):
            assign[sp] = ch
        for sp, ch in zip(bb.node_spans, elb):
            assign[(sp[0] + na, sp[1] + na)] = ch
        assign[span_root] = t
        target = tuple(assign[sp] for sp in sbasis.node_spans)
        perm[sbasis.index(target), col] = 1.0
    return u @ perm


# ----------------------------------------------------------------------
# results
# ----------------------------------------------------------------------

class DiagramValue:
    """Either a scalar (closed diagram) or coefficients over basis-tree pairs.

    Coefficient keys are ``(bottom_element, top_element)`` tuples of charge
    labelings; the empty boundary contributes ``()``.  Supports addition and
    scalar multiplication so formal combinations of reductions can be tested.
    """

    def __init__(self, scalar=None, coeffs=None, bottom=None, top=None):
        self.scalar = scalar
        self.coeffs = coeffs
        self.bottom = bottom
        self.top = top

    @property
    def is_closed(self):
        return self.scalar is not None

    def __add__(self, other):
        if self.is_closed and other.is_closed:
            return DiagramValue(scalar=self.scalar + other.scalar)
        if self.is_closed or other.is_closed:
            raise ValueError("cannot add a closed and an open diagram value")
        if (self.bottom, self.top) != (other.bottom, other.top):
            raise ValueError("cannot add diagram values on different boundaries")
        out = dict(self.coeffs)
        for key, val in other.coeffs.items():
            out[key] = out.get(key, 0j) + val
        out = {k: v for k, v in out.items() if abs(v) > COEFF_TOL}
        return DiagramValue(coeffs=out, bottom=self.bottom, top=self.top)

    def __rmul__(self, z):
        if self.is_closed:
            return DiagramValue(scalar=z * self.scalar)
        return DiagramValue(coeffs={k: z * v for k, v in self.coeffs.items()},
                            bottom=self.bottom, top=self.top)

    __mul__ = __rmul__

    def __repr__(self):
        if self.is_closed:
            return f"DiagramValue(scalar={self.scalar:.6g})"
        return f"DiagramValue({len(self.coeffs)} coefficients)"


def evaluate_closed(d: Diagram, spec: CategorySpec, strategy="projector",
                    assoc="left") -> complex:
    """Scalar value of a closed diagram."""
    bot, top = d.bottom(spec), d.top(spec)
    if bot or top:
        raise DiagramError(
            f"diagram is not closed: bottom [{_names(spec, bot)}], "
            f"top [{_names(spec, top)}]")
    _, _, mat = diagram_matrix(d, spec, strategy, assoc)
    return complex(mat[0, 0])


def reduce_open(d: Diagram, spec: CategorySpec, strategy="projector") -> DiagramValue:
    """Coefficients of a diagram in the fusion-tree basis of its boundary."""
    bb, tb, mat = diagram_matrix(d, spec, strategy)
    if bb is None and tb is None:
        return DiagramValue(scalar=complex(mat[0, 0]))
    coeffs = {}
    for i in range(mat.shape[0]):
        for j in range(mat.shape[1]):
            val = complex(mat[i, j])
            if abs(val) > COEFF_TOL:
                key_bot = () if bb is None else bb.elements[j]
                key_top = () if tb is None else tb.elements[i]
                coeffs[(key_bot, key_top)] = val
    return DiagramValue(coeffs=coeffs,
                        bottom=None if bb is None else bb.slots,
                        top=None if tb is None else tb.slots)
