"""Generate and verify the bundled category data files.

All numeric content of ``src/anyonsim/data/categories/*.json`` comes from this
script.  F-symbols for the SU(2)-type theories are quantum 6j symbols computed
from the Racah sum formula at q = exp(i*pi/(k+2)); the half-integer theories
are sign-twisted by the nontrivial Z2 three-cocycle on the parity grading so
that the vacuum-pair element [F^{a,a}]_{00} comes out +1/d_a for every label
(the convention the simulator's cup/cap calculus relies on).  A cosmetic
vertex gauge puts the Fibonacci and Ising matrices in their textbook form.

Each file is verified before being written: pentagon residual, F-unitarity,
S-matrix unitarity/symmetry, Verlinde consistency with the fusion table,
quantum dimensions against fusion-matrix spectral radii, and the vacuum-pair
F-element.  The script refuses to emit anything that fails.

Run from the repository root:

    python tools/make_builtin_categories.py
"""

import json
import math
import os
from itertools import product

import numpy as np

OUTDIR = os.path.join(os.path.dirname(__file__), "..", "src", "anyonsim", "data", "categories")


# ----------------------------------------------------------------------
# quantum integers and 6j symbols (labels are twice-spins 0..k)
# ----------------------------------------------------------------------

def qint(n, r):
    return math.sin(n * math.pi / r) / math.sin(math.pi / r)


def qfact(n, r):
    out = 1.0
    for m in range(2, n + 1):
        out *= qint(m, r)
    return out


def su2_admissible(a, b, c, k):
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b and a + b + c <= 2 * k


def _delta(a, b, c, r):
    num = (qfact((-a + b + c) // 2, r) * qfact((a - b + c) // 2, r)
           * qfact((a + b - c) // 2, r))
    return math.sqrt(num / qfact((a + b + c) // 2 + 1, r))


def qsixj(a, b, e, c, d, f, k):
    r = k + 2
    for (x, y, z) in [(a, b, e), (e, c, d), (b, c, f), (a, f, d)]:
        if not su2_admissible(x, y, z, k):
            return 0.0
    t1 = (a + b + e) // 2
    t2 = (e + c + d) // 2
    t3 = (b + c + f) // 2
    t4 = (a + f + d) // 2
    q1 = (a + b + c + d) // 2
    q2 = (a + e + c + f) // 2
    q3 = (b + e + d + f) // 2
    pref = _delta(a, b, e, r) * _delta(e, c, d, r) * _delta(b, c, f, r) * _delta(a, f, d, r)
    total = 0.0
    for z in range(max(t1, t2, t3, t4), min(q1, q2, q3) + 1):
        den = (qfact(z - t1, r) * qfact(z - t2, r) * qfact(z - t3, r) * qfact(z - t4, r)
               * qfact(q1 - z, r) * qfact(q2 - z, r) * qfact(q3 - z, r))
        total += (-1) ** z * qfact(z + 1, r) / den
    return pref * total


def su2_fsym(a, b, c, d, e, f, k):
    """[F^{abc}_d]_{ef} for the recoupling ((ab)_e c)_d -> (a(bc)_f)_d."""
    if not (su2_admissible(a, b, e, k) and su2_admissible(e, c, d, k)
            and su2_admissible(b, c, f, k) and su2_admissible(a, f, d, k)):
        return 0.0
    r = k + 2
    sign = (-1) ** ((a + b + c + d) // 2)
    return sign * math.sqrt(qint(e + 1, r) * qint(f + 1, r)) * qsixj(a, b, e, c, d, f, k)


def su2_category(k):
    """Fusion table, F-symbol dict and quantum dimensions of SU(2)_k."""
    labels = list(range(k + 1))
    r = k + 2
    fusion = {(a, b): [c for c in labels if su2_admissible(a, b, c, k)]
              for a, b in product(labels, repeat=2)}
    F = {}
    for a, b, c, d in product(labels, repeat=4):
        for e in fusion[(a, b)]:
            if not su2_admissible(e, c, d, k):
                continue
            for f in fusion[(b, c)]:
                if not su2_admissible(a, f, d, k):
                    continue
                F[(a, b, c, d, e, f)] = complex(su2_fsym(a, b, c, d, e, f, k))
    qdims = [qint(a + 1, r) for a in labels]
    smat = np.array([[math.sqrt(2.0 / r) * math.sin(math.pi * (a + 1) * (b + 1) / r)
                      for b in labels] for a in labels], dtype=complex)
    return labels, fusion, F, qdims, smat


def parity_twist(F):
    """Multiply F^{abc}_d by the nontrivial Z2 cocycle (-1)^{|a||b||c|}."""
    return {key: ((-1) ** (key[0] * key[1] * key[2])) * val for key, val in F.items()}


def apply_gauge(F, u):
    """Vertex gauge u(a,b,c) for the splitting c -> (a,b); default 1."""
    def g(a, b, c):
        return u.get((a, b, c), 1.0)

    out = {}
    for (a, b, c, d, e, f), val in F.items():
        out[(a, b, c, d, e, f)] = val * g(a, b, e) * g(e, c, d) / (g(b, c, f) * g(a, f, d))
    return out


# ----------------------------------------------------------------------
# verification (independent of the simulator package)
# ----------------------------------------------------------------------

def pentagon_residual(labels, fusion, F):
    worst = 0.0
    for a, b in product(labels, repeat=2):
        for f in fusion[(a, b)]:
            for c in labels:
                for g in fusion[(f, c)]:
                    for d in labels:
                        for e in fusion[(g, d)]:
                            for l in fusion[(c, d)]:
                                for kk in fusion[(b, l)]:
                                    lhs = (F.get((f, c, d, e, g, l), 0.0)
                                           * F.get((a, b, l, e, f, kk), 0.0))
                                    rhs = sum(
                                        F.get((a, b, c, g, f, h), 0.0)
                                        * F.get((a, h, d, e, g, kk), 0.0)
                                        * F.get((b, c, d, kk, h, l), 0.0)
                                        for h in fusion[(b, c)])
                                    worst = max(worst, abs(lhs - rhs))
    return worst


def unitarity_residual(labels, fusion, F):
    worst = 0.0
    for a, b, c, d in product(labels, repeat=4):
        es = [e for e in fusion[(a, b)] if d in fusion[(e, c)]]
        fs = [f for f in fusion[(b, c)] if d in fusion[(a, f)]]
        if not es and not fs:
            continue
        if len(es) != len(fs):
            return float("inf")
        M = np.array([[F.get((a, b, c, d, e, f), 0.0) for f in fs] for e in es])
        worst = max(worst, np.abs(M @ M.conj().T - np.eye(len(es))).max())
    return worst


def verify(name, labels, fusion, F, qdims, smat, dual):
    n = len(labels)
    pr = pentagon_residual(labels, fusion, F)
    ur = unitarity_residual(labels, fusion, F)
    assert pr < 1e-12, f"{name}: pentagon residual {pr}"
    assert ur < 1e-12, f"{name}: F-unitarity residual {ur}"

    smat = np.asarray(smat, dtype=complex)
    assert np.abs(smat - smat.T).max() < 1e-13, f"{name}: S not symmetric"
    assert np.abs(smat @ smat.conj().T - np.eye(n)).max() < 1e-13, f"{name}: S not unitary"
    D = math.sqrt(sum(d * d for d in qdims))
    assert np.abs(smat[0] - np.array(qdims) / D).max() < 1e-13, f"{name}: S row 0 mismatch"

    # Verlinde formula reproduces the fusion table
    for a, b, c in product(range(n), repeat=3):
        nv = sum(smat[a, x] * smat[b, x] * np.conj(smat[c, x]) / smat[0, x]
                 for x in range(n))
        want = 1.0 if c in fusion[(labels[a], labels[b])] else 0.0
        assert abs(nv - want) < 1e-10, f"{name}: Verlinde mismatch at {(a, b, c)}"

    # quantum dimensions against the spectral radius of each fusion matrix
    for a in range(n):
        Na = np.array([[1.0 if labels[c] in fusion[(labels[a], labels[b])] else 0.0
                        for c in range(n)] for b in range(n)])
        rho = max(abs(np.linalg.eigvals(Na)))
        assert abs(rho - qdims[a]) < 1e-12, f"{name}: qdim mismatch for label {a}"

    # vacuum-pair F element: [F^{abar,a,abar}_{abar}]_{00} = +1/d_a
    for a in range(n):
        ab = dual[a]
        val = F.get((labels[ab], labels[a], labels[ab], labels[ab], labels[0], labels[0]), 0.0)
        assert abs(val - 1.0 / qdims[a]) < 1e-12, \
            f"{name}: vacuum-pair F element for label {a} is {val}, want {1.0 / qdims[a]}"

    print(f"{name}: pentagon {pr:.2e}, F-unitarity {ur:.2e}, S/Verlinde/qdim/F00 ok")


# ----------------------------------------------------------------------
# assembly and output
# ----------------------------------------------------------------------

def emit(name, label_names, dual, qdims, fusion, F, smat):
    labels = list(range(len(label_names)))
    verify(name, labels, fusion, F, qdims, smat, dual)
    def snap(x):
        # trivial F elements (vacuum legs) are exactly +-1; drop the sqrt noise
        return float(round(x)) if abs(x - round(x)) < 1e-12 else float(x)

    fusion_rows = sorted([a, b, c] for (a, b), cs in fusion.items() for c in cs)
    fsym_rows = [
        [a, b, c, d, e, f, snap(val.real), snap(val.imag)]
        for (a, b, c, d, e, f), val in sorted(F.items(), key=lambda kv: kv[0])
        if abs(val) > 0.0
    ]
    smat_rows = [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(smat)]

    # hand-rolled layout: one table row per line, keeps the files diffable
    def jrow(row):
        return json.dumps(row)

    lines = [
        "{",
        ' "format": "anyonsim-category/1",',
        f' "name": {json.dumps(name)},',
        f' "labels": {json.dumps(label_names)},',
        f' "dual": {json.dumps(dual)},',
        f' "qdim": {json.dumps([float(d) for d in qdims])},',
        ' "fusion": [',
        *[f"  {jrow(r)}," for r in fusion_rows[:-1]],
        f"  {jrow(fusion_rows[-1])}",
        " ],",
        ' "fsymbols": [',
        *[f"  {jrow(r)}," for r in fsym_rows[:-1]],
        f"  {jrow(fsym_rows[-1])}",
        " ],",
        ' "smatrix": [',
        *[f"  {jrow(r)}," for r in smat_rows[:-1]],
        f"  {jrow(smat_rows[-1])}",
        " ]",
        "}",
    ]
    path = os.path.join(OUTDIR, f"{name}.json")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    json.load(open(path))  # round-trip sanity
    print(f"wrote {path}")


def make_fibonacci():
    labels3, fusion3, F3, qdims3, _ = su2_category(3)
    keep = {0: 0, 2: 1}  # even sublabels of SU(2)_3 close under fusion
    fusion = {(keep[a], keep[b]): [keep[c] for c in cs if c in keep]
              for (a, b), cs in fusion3.items() if a in keep and b in keep}
    F = {tuple(keep[x] for x in key): val for key, val in F3.items()
         if all(x in keep for x in key)}
    F = apply_gauge(F, {(1, 1, 1): 1j})  # flip off-diagonal signs of F^{ttt}_t
    phi = (1 + math.sqrt(5)) / 2
    qdims = [1.0, phi]
    smat = np.array([[1, phi], [phi, -1]], dtype=complex) / math.sqrt(2 + phi)
    emit("fibonacci", ["1", "tau"], [0, 1], qdims, fusion, F, smat)


def make_ising():
    labels, fusion, F, qdims, smat = su2_category(2)
    F = parity_twist(F)
    F = apply_gauge(F, {(1, 2, 1): -1.0, (2, 1, 1): -1.0})  # textbook signs
    emit("ising", ["1", "sigma", "psi"], [0, 1, 2], qdims, fusion, F, smat)


def make_z3():
    labels = [0, 1, 2]
    fusion = {(a, b): [(a + b) % 3] for a, b in product(labels, repeat=2)}
    F = {}
    for a, b, c in product(labels, repeat=3):
        e = (a + b) % 3
        f = (b + c) % 3
        d = (a + b + c) % 3
        F[(a, b, c, d, e, f)] = complex(1.0)
    w = np.exp(2j * np.pi / 3)
    smat = np.array([[w ** (a * b) for b in labels] for a in labels]) / math.sqrt(3)
    emit("z3", ["0", "1", "2"], [0, 2, 1], [1.0, 1.0, 1.0], fusion, F, smat)


def make_su2_4():
    labels, fusion, F, qdims, smat = su2_category(4)
    F = parity_twist(F)
    emit("su2_4", ["0", "1/2", "1", "3/2", "2"], [0, 1, 2, 3, 4], qdims, fusion, F, smat)


if __name__ == "__main__":
    os.makedirs(OUTDIR, exist_ok=True)
    make_fibonacci()
    make_ising()
    make_z3()
    make_su2_4()
