"""Anyon model data: labels, fusion rules, F-symbols, S-matrix.

A :class:`CategorySpec` holds the full algebraic data of a multiplicity-free
anyon model (unitary modular tensor category): charge labels with duals and
quantum dimensions, the fusion table N^c_{ab} in {0,1}, the 6-index F-symbols
F^{abc}_{d;e,f}, and the modular S-matrix.  Everything downstream (fusion-tree
bases, diagram evaluation, measurement channels) reads from this object and
never mutates it.

Model files are JSON documents; see ``docs/category_format.md`` for the
schema.  The bundled models (fibonacci, ising, z3, su2_4) are generated and
cross-checked by ``tools/make_builtin_categories.py``.
"""

from __future__ import annotations

import cmath
import json
import math
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

__all__ = [
    "CategoryError",
    "ChargeLabel",
    "CategorySpec",
    "OmegaLoop",
    "load_category",
    "load_builtin",
    "builtin_names",
    "resolve_category",
    "check_pentagon",
    "smatrix_report",
    "monodromy",
    "verify_detection",
    "omega_coefficients",
]

VACUUM = 0

_DATA_DIR = os.path.join(os.path.dirname(__file__), "data", "categories")

_QDIM_TOL = 1e-9
_FVAC_TOL = 1e-9


class CategoryError(ValueError):
    """Raised for malformed or inconsistent category files."""


@dataclass(frozen=True)
class ChargeLabel:
    """One topological charge: its index, display name, dual and quantum dimension."""

    index: int
    name: str
    dual: int
    qdim: float

    def __repr__(self):
        return f"ChargeLabel({self.index}, {self.name!r})"


@dataclass(frozen=True)
class OmegaLoop:
    """Coefficients c_x of the projector loop onto a given target charge.

    The formal combination sum_x c_x (x-loop) inserted around a strand group
    projects the group onto total charge ``target``.
    """

    target: int
    coeffs: np.ndarray


@dataclass(frozen=True)
class CategorySpec:
    """Validated anyon model data.  Immutable after construction."""

    name: str
    labels: tuple[ChargeLabel, ...]
    fusion: np.ndarray          # N^c_{ab} as [a, b, c] in {0, 1}
    fsymbols: dict              # (a, b, c, d, e, f) -> complex
    smatrix: np.ndarray
    total_dim: float
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # -- basic accessors ------------------------------------------------

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    def label(self, x) -> ChargeLabel:
        return self.labels[self.index_of(x)]

    def index_of(self, x) -> int:
        """Accept a label index, name, or ChargeLabel; return the index."""
        if isinstance(x, ChargeLabel):
            return x.index
        if isinstance(x, (int, np.integer)):
            if not 0 <= x < self.num_labels:
                raise CategoryError(f"label index {x} out of range for {self.name!r}")
            return int(x)
        if isinstance(x, str):
            for lab in self.labels:
                if lab.name == x:
                    return lab.index
            raise CategoryError(f"unknown label name {x!r} in category {self.name!r}")
        raise TypeError(f"cannot interpret {x!r} as a charge label")

    def dual(self, a) -> int:
        return self.labels[self.index_of(a)].dual

    def qdim(self, a) -> float:
        return self.labels[self.index_of(a)].qdim

    def n(self, a, b, c) -> int:
        return int(self.fusion[self.index_of(a), self.index_of(b), self.index_of(c)])

    def channels(self, a, b) -> tuple[int, ...]:
        """Fusion channels of a x b, sorted by label index."""
        row = self.fusion[self.index_of(a), self.index_of(b)]
        return tuple(int(c) for c in np.nonzero(row)[0])

    def fsym(self, a, b, c, d, e, f) -> complex:
        return self.fsymbols.get((a, b, c, d, e, f), 0j)

    def fmatrix(self, a, b, c, d):
        """The unitary F-matrix for fixed (a, b, c; d): (e-list, f-list, matrix)."""
        es = [e for e in self.channels(a, b) if self.n(e, c, d)]
        fs = [f for f in self.channels(b, c) if self.n(a, f, d)]
        mat = np.array([[self.fsym(a, b, c, d, e, f) for f in fs] for e in es],
                       dtype=complex)
        return es, fs, mat


# ----------------------------------------------------------------------
# loading and structural validation
# ----------------------------------------------------------------------

def builtin_names() -> tuple[str, ...]:
    names = [fn[:-5] for fn in os.listdir(_DATA_DIR) if fn.endswith(".json")]
    return tuple(sorted(names))


def load_builtin(name: str) -> CategorySpec:
    path = os.path.join(_DATA_DIR, f"{name}.json")
    if not os.path.exists(path):
        raise CategoryError(
            f"no built-in category {name!r}; available: {', '.join(builtin_names())}")
    return load_category(path)


def resolve_category(name_or_path: str) -> CategorySpec:
    """Accept a built-in name or a path to a category file."""
    if os.path.sep in name_or_path or name_or_path.endswith(".json"):
        return load_category(name_or_path)
    if name_or_path in builtin_names():
        return load_builtin(name_or_path)
    if os.path.exists(name_or_path):
        return load_category(name_or_path)
    raise CategoryError(
        f"{name_or_path!r} is neither a built-in category nor an existing file; "
        f"built-ins: {', '.join(builtin_names())}")


def load_category(source) -> CategorySpec:
    """Load and structurally validate a category document.

    ``source`` may be a file path, a JSON string, or an already-parsed dict.
    Pentagon checking is intentionally separate (see :func:`check_pentagon`);
    everything cheap and structural is enforced here.
    """
    doc = _read_document(source)
    where = doc.get("name", "<category>")

    for key in ("labels", "dual", "qdim", "fusion", "fsymbols", "smatrix"):
        if key not in doc:
            raise CategoryError(f"{where}: missing required key {key!r}")
    fmt = doc.get("format", "anyonsim-category/1")
    if fmt != "anyonsim-category/1":
        raise CategoryError(f"{where}: unsupported format {fmt!r}")

    names = list(doc["labels"])
    n = len(names)
    if n == 0:
        raise CategoryError(f"{where}: no labels")
    if len(set(names)) != n:
        raise CategoryError(f"{where}: duplicate label names")

    dual = list(doc["dual"])
    if sorted(dual) != list(range(n)):
        raise CategoryError(f"{where}: 'dual' is not a permutation of 0..{n - 1}")
    if dual[VACUUM] != VACUUM:
        raise CategoryError(f"{where}: vacuum label must be self-dual")
    for a in range(n):
        if dual[dual[a]] != a:
            raise CategoryError(f"{where}: dual map is not an involution at label {a}")

    qdim = [float(d) for d in doc["qdim"]]
    if len(qdim) != n:
        raise CategoryError(f"{where}: qdim length mismatch")
    if abs(qdim[VACUUM] - 1.0) > _QDIM_TOL:
        raise CategoryError(f"{where}: vacuum quantum dimension must be 1")
    for a in range(n):
        if qdim[a] < 1.0 - _QDIM_TOL:
            raise CategoryError(f"{where}: quantum dimension of label {a} below 1")
        if abs(qdim[a] - qdim[dual[a]]) > _QDIM_TOL:
            raise CategoryError(f"{where}: qdim of label {a} differs from its dual")

    fusion = np.zeros((n, n, n), dtype=np.int8)
    for row in doc["fusion"]:
        try:
            a, b, c = (int(x) for x in row)
        except (TypeError, ValueError):
            raise CategoryError(f"{where}: malformed fusion row {row!r}") from None
        if not (0 <= a < n and 0 <= b < n and 0 <= c < n):
            raise CategoryError(f"{where}: fusion row {row!r} references unknown labels")
        if fusion[a, b, c]:
            raise CategoryError(
                f"{where}: fusion triple {row!r} listed twice; "
                "multiplicity N > 1 is not supported")
        fusion[a, b, c] = 1

    _check_fusion_ring(where, fusion, dual)

    # quantum dimensions must agree with the fusion-matrix spectral radius;
    # the declared values are used for arithmetic afterwards
    for a in range(n):
        rho = max(abs(np.linalg.eigvals(fusion[a].astype(float))))
        if abs(rho - qdim[a]) > _QDIM_TOL:
            raise CategoryError(
                f"{where}: declared qdim {qdim[a]} of label {a} deviates from the "
                f"fusion spectral radius {rho}")

    fsymbols = {}
    for row in doc["fsymbols"]:
        if len(row) != 8:
            raise CategoryError(f"{where}: malformed F-symbol row {row!r}")
        a, b, c, d, e, f = (int(x) for x in row[:6])
        val = complex(float(row[6]), float(row[7]))
        for x in (a, b, c, d, e, f):
            if not 0 <= x < n:
                raise CategoryError(f"{where}: F-symbol row {row!r} references unknown labels")
        if not (fusion[a, b, e] and fusion[e, c, d] and fusion[b, c, f] and fusion[a, f, d]):
            raise CategoryError(f"{where}: F-symbol {row[:6]} is inadmissible under fusion")
        if (a, b, c, d, e, f) in fsymbols:
            raise CategoryError(f"{where}: duplicate F-symbol entry {row[:6]}")
        fsymbols[(a, b, c, d, e, f)] = val

    smatrix = _read_matrix(where, doc["smatrix"], n)

    labels = tuple(
        ChargeLabel(index=a, name=names[a], dual=dual[a], qdim=qdim[a]) for a in range(n))
    total_dim = math.sqrt(sum(d * d for d in qdim))
    spec = CategorySpec(
        name=str(doc.get("name", "unnamed")),
        labels=labels,
        fusion=fusion,
        fsymbols=fsymbols,
        smatrix=smatrix,
        total_dim=total_dim,
    )
    spec.fusion.setflags(write=False)
    spec.smatrix.setflags(write=False)

    # the cup/cap calculus requires the vacuum-pair F element to be exactly
    # +1/d_a; files carrying another Frobenius-Schur phase are rejected
    for a in range(n):
        ab = dual[a]
        val = spec.fsym(ab, a, ab, ab, VACUUM, VACUUM)
        if abs(val - 1.0 / qdim[a]) > _FVAC_TOL:
            raise CategoryError(
                f"{where}: vacuum-pair F element for label {names[a]!r} is {val:.6g}, "
                f"required +1/d = {1.0 / qdim[a]:.6g}")
    return spec


def _read_document(source):
    if isinstance(source, dict):
        return source
    if isinstance(source, (str, os.PathLike)):
        text = None
        if isinstance(source, str) and source.lstrip().startswith("{"):
            text = source
        else:
            if not os.path.exists(source):
                raise CategoryError(f"category file {source!r} does not exist")
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise CategoryError(f"malformed category document: {exc}") from None
    raise TypeError(f"cannot load a category from {type(source).__name__}")


def _read_matrix(where, rows, n):
    if len(rows) != n or any(len(r) != n for r in rows):
        raise CategoryError(f"{where}: S-matrix must be {n}x{n}")
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(rows):
        for j, z in enumerate(row):
            try:
                re, im = float(z[0]), float(z[1])
            except (TypeError, ValueError, IndexError):
                raise CategoryError(
                    f"{where}: S-matrix entry ({i},{j}) must be a [re, im] pair") from None
            out[i, j] = complex(re, im)
    return out


def _check_fusion_ring(where, fusion, dual):
    n = fusion.shape[0]
    if not np.array_equal(fusion, fusion.transpose(1, 0, 2)):
        raise CategoryError(f"{where}: fusion table is not commutative")
    for a, c in product(range(n), repeat=2):
        if fusion[a, VACUUM, c] != (1 if a == c else 0):
            raise CategoryError(f"{where}: vacuum is not a fusion unit at ({a},{c})")
    for a, b in product(range(n), repeat=2):
        if fusion[a, b, VACUUM] != (1 if b == dual[a] else 0):
            raise CategoryError(
                f"{where}: N^0_{{{a},{b}}} inconsistent with the dual map")
    f = fusion.astype(np.int64)
    lhs = np.einsum("abe,ecd->abcd", f, f)
    rhs = np.einsum("bcf,afd->abcd", f, f)
    if not np.array_equal(lhs, rhs):
        raise CategoryError(f"{where}: fusion is not associative")


# ----------------------------------------------------------------------
# consistency checks and derived quantities
# ----------------------------------------------------------------------

def check_pentagon(spec: CategorySpec) -> float:
    """Max residual over all pentagon instances and all F-matrix unitarity checks."""
    n = spec.num_labels
    worst = 0.0
    for a, b in product(range(n), repeat=2):
        for f in spec.channels(a, b):
            for c in range(n):
                for g in spec.channels(f, c):
                    for d in range(n):
                        for e in spec.channels(g, d):
                            for l in spec.channels(c, d):
                                for k in spec.channels(b, l):
                                    lhs = (spec.fsym(f, c, d, e, g, l)
                                           * spec.fsym(a, b, l, e, f, k))
                                    rhs = sum(
                                        spec.fsym(a, b, c, g, f, h)
                                        * spec.fsym(a, h, d, e, g, k)
                                        * spec.fsym(b, c, d, k, h, l)
                                        for h in spec.channels(b, c))
                                    worst = max(worst, abs(lhs - rhs))
    for a, b, c, d in product(range(n), repeat=4):
        es, fs, mat = spec.fmatrix(a, b, c, d)
        if not es and not fs:
            continue
        if len(es) != len(fs):
            return float("inf")
        worst = max(worst, float(np.abs(mat @ mat.conj().T - np.eye(len(es))).max()))
    return worst


def smatrix_report(spec: CategorySpec) -> dict:
    """Residuals of the modular-data checks on the S-matrix."""
    s = spec.smatrix
    n = spec.num_labels
    qd = np.array([lab.qdim for lab in spec.labels])
    unitarity = float(np.abs(s @ s.conj().T - np.eye(n)).max())
    symmetry = float(np.abs(s - s.T).max())
    first_row = float(np.abs(s[VACUUM] - qd / spec.total_dim).max())
    verlinde = 0.0
    for a, b, c in product(range(n), repeat=3):
        val = np.sum(s[a] * s[b] * np.conj(s[c]) / s[VACUUM])
        verlinde = max(verlinde, abs(val - spec.n(a, b, c)))
    return {
        "unitarity": unitarity,
        "symmetry": symmetry,
        "first_row": first_row,
        "verlinde": float(verlinde),
    }


def monodromy(spec: CategorySpec, a, b) -> complex:
    """The full-braiding scalar M_{ab} = S_ab S_00 / (S_0a S_0b)."""
    a = spec.index_of(a)
    b = spec.index_of(b)
    s = spec.smatrix
    return complex(s[a, b] * s[VACUUM, VACUUM] / (s[VACUUM, a] * s[VACUUM, b]))


def verify_detection(spec: CategorySpec, tol: float = 1e-9) -> bool:
    """Every nontrivial charge braids nontrivially with some other charge."""
    for a in range(1, spec.num_labels):
        if not any(abs(monodromy(spec, b, a) - 1.0) > tol
                   for b in range(spec.num_labels)):
            return False
    return True


def omega_coefficients(spec: CategorySpec, a) -> OmegaLoop:
    """Loop coefficients c_x = S_{0a} conj(S_{xa}).

    Inserted around a strand group these satisfy
    sum_x c_x S_{xb}/S_{0b} = delta_{ab}, i.e. the loop projects the group
    onto total charge ``a``.
    """
    a = spec.index_of(a)
    s = spec.smatrix
    coeffs = s[VACUUM, a] * np.conj(s[:, a])
    coeffs.setflags(write=False)
    return OmegaLoop(target=a, coeffs=coeffs)
