"""Diagram DSL parsing and evaluation."""

import numpy as np
import pytest

from anyonsim import diagrams as dg
from anyonsim.category import load_builtin
from anyonsim.diagrams import (DiagramError, evaluate_closed, parse_diagram,
                               reduce_open)
from anyonsim.rng import SplitMix64

PHI = (1 + 5 ** 0.5) / 2

BUILTINS = ["fibonacci", "ising", "z3", "su2_4"]


@pytest.fixture(scope="module")
def cats():
    return {name: load_builtin(name) for name in BUILTINS}


# -- parser ---------------------------------------------------------------

def test_cup_boundaries(cats):
    fib = cats["fibonacci"]
    d = parse_diagram("cup(tau)", fib)
    assert d.bottom(fib) == ()
    assert d.top(fib) == (1, 1)  # (tau-bar, tau)


def test_vacuum_bubble_is_closed(cats):
    fib = cats["fibonacci"]
    d = parse_diagram("cup(tau) ; cap(tau)", fib)
    assert d.bottom(fib) == () and d.top(fib) == ()


def test_parse_error_positions(cats):
    fib = cats["fibonacci"]
    with pytest.raises(DiagramError) as err:
        parse_diagram("cup(tau) ;\n cap(bogus)", fib)
    assert err.value.line == 2 and err.value.col == 6

    with pytest.raises(DiagramError, match="expected"):
        parse_diagram("cup(tau", fib)


def test_interface_mismatch(cats):
    ising = cats["ising"]
    with pytest.raises(DiagramError, match="mismatched interfaces"):
        parse_diagram("cup(sigma) ; cap(psi)", ising)


def test_inadmissible_vertex(cats):
    fib = cats["fibonacci"]
    with pytest.raises(DiagramError, match="inadmissible vertex"):
        parse_diagram("split(tau -> 1, 1)", fib)


def test_omega_rules(cats):
    fib = cats["fibonacci"]
    with pytest.raises(DiagramError, match="no ambient strands"):
        parse_diagram("omega(tau){1..2}", fib)
    with pytest.raises(DiagramError, match="own row"):
        parse_diagram("cup(tau) ; omega(tau){1} | id(tau)", fib)
    with pytest.raises(DiagramError, match="exceeds"):
        parse_diagram("cup(tau) ; omega(tau){1..3}", fib)


def test_unbound_placeholder(cats):
    with pytest.raises(DiagramError, match="placeholder"):
        parse_diagram("cup(A)", cats["fibonacci"])


def test_trailing_garbage(cats):
    with pytest.raises(DiagramError, match="after diagram"):
        parse_diagram("cup(tau) ; cap(tau) cap(tau)", cats["fibonacci"])


def test_comments_and_whitespace(cats):
    fib = cats["fibonacci"]
    text = """
    # the tau vacuum bubble
    cup(tau) ;   # create
    cap(tau)     # annihilate
    """
    assert abs(evaluate_closed(parse_diagram(text, fib), fib) - PHI) < 1e-12


def test_empty_diagram(cats):
    fib = cats["fibonacci"]
    assert evaluate_closed(parse_diagram("", fib), fib) == 1.0


# -- closed evaluation -----------------------------------------------------

@pytest.mark.parametrize("name", BUILTINS)
def test_loop_value_is_quantum_dimension(cats, name):
    spec = cats[name]
    for lab in spec.labels:
        d = parse_diagram(f"cup({lab.name}) ; cap({lab.name})", spec)
        val = evaluate_closed(d, spec)
        # independent oracle: spectral radius of the fusion matrix
        rho = max(abs(np.linalg.eigvals(spec.fusion[lab.index].astype(float))))
        assert abs(val - rho) < 1e-10


@pytest.mark.parametrize("name", BUILTINS)
def test_zigzags_are_identity(cats, name):
    spec = cats[name]
    for lab in spec.labels:
        a = lab.name
        ab = spec.labels[lab.dual].name
        left = parse_diagram(f"id({a}) | cup({a}) ; cap({ab}) | id({a})", spec)
        right = parse_diagram(f"cup({ab}) | id({a}) ; id({a}) | cap({a})", spec)
        for z in (left, right):
            _, _, mat = dg.diagram_matrix(z, spec)
            assert np.abs(mat - np.eye(1)).max() < 1e-12


@pytest.mark.parametrize("name", BUILTINS)
def test_omega_projector_rule(cats, name):
    """omega_a around one strand of a b-bubble = delta_ab d_b."""
    spec = cats[name]
    for a in spec.labels:
        for b in spec.labels:
            d = parse_diagram(
                f"cup({b.name}) ; omega({a.name}){{2}} ; cap({b.name})", spec)
            val = evaluate_closed(d, spec)
            expect = b.qdim if a.index == b.index else 0.0
            assert abs(val - expect) < 1e-10


@pytest.mark.parametrize("name", BUILTINS)
def test_fig4_normalized_ratio(cats, name):
    """Vacuum loop around a pair, over two bubbles: 1/d_a for every label."""
    spec = cats[name]
    for lab in spec.labels:
        num = parse_diagram("cup(A) ; omega(vac){1..2} ; cap(A)", spec, anyon=lab.name)
        den = parse_diagram("(cup(A) ; cap(A)) | (cup(A) ; cap(A))", spec,
                            anyon=lab.name)
        ratio = evaluate_closed(num, spec) / evaluate_closed(den, spec)
        assert abs(ratio - 1.0 / lab.qdim) < 1e-10


def test_monoidal_multiplicativity(cats):
    for name in ("fibonacci", "ising"):
        spec = cats[name]
        one = parse_diagram("cup(A) ; omega(vac){1..2} ; cap(A)", spec,
                            anyon=spec.labels[1].name)
        two = dg.Row(parts=(one, one))
        v1 = evaluate_closed(one, spec)
        v2 = evaluate_closed(two, spec)
        assert abs(v2 - v1 * v1) < 1e-10


def test_scalar_node(cats):
    fib = cats["fibonacci"]
    d = parse_diagram("scalar(2.5) | (cup(tau) ; cap(tau))", fib)
    assert abs(evaluate_closed(d, fib) - 2.5 * PHI) < 1e-12
    dz = parse_diagram("scalar(0, 1)", fib)
    assert evaluate_closed(dz, fib) == 1j


# -- open reduction ----------------------------------------------------------

def test_reduce_basis_tree_is_itself(cats):
    # a left-canonical split cascade is itself a basis diagram: coefficient 1
    ising = cats["ising"]
    d = parse_diagram("split(sigma -> psi, sigma) ; split(psi -> sigma, sigma) | id(sigma)",
                      ising)
    val = reduce_open(d, ising)
    assert not val.is_closed
    assert len(val.coeffs) == 1
    ((bot, top), coeff), = val.coeffs.items()
    assert abs(coeff - 1.0) < 1e-12
    assert bot == (1,)              # the sigma input
    assert top == (1, 1, 1, 2, 1)   # leaves sigma^3, spine edge psi, root sigma


def test_reduce_omega_pair_equals_scaled_cupcap(cats):
    """An omega-0 ring on two strands is (1/d_a) cap-then-cup."""
    for name in BUILTINS:
        spec = cats[name]
        for lab in spec.labels:
            a = lab.name
            ab = spec.labels[lab.dual].name
            ring = reduce_open(
                parse_diagram(f"id({ab}) | id({a}) ; omega(vac){{1..2}}", spec), spec)
            cupcap = reduce_open(
                parse_diagram(f"cap({a}) ; cup({a})", spec), spec)
            scaled = (1.0 / lab.qdim) * cupcap
            assert set(ring.coeffs) == set(scaled.coeffs)
            for key in ring.coeffs:
                assert abs(ring.coeffs[key] - scaled.coeffs[key]) < 1e-10


def test_fig3_sandwich_proportional_to_rainbow(cats):
    """The doubled form of the measured-then-decohered pair is the identity's
    doubled form: nested cups."""
    for name in ("fibonacci", "ising"):
        spec = cats[name]
        a = spec.labels[1]
        ab = spec.labels[a.dual].name
        sandwich = parse_diagram(
            f"cup(A) | cup(Abar) ; omega({ab}){{1}} ; omega(vac){{2..3}}",
            spec, anyon=a.name)
        rainbow = parse_diagram(
            "cup(A) ; id(A) | cup(Abar) | id(Abar)", spec, anyon=a.name)
        v1 = reduce_open(sandwich, spec)
        v2 = reduce_open(rainbow, spec)
        keys = set(v1.coeffs) | set(v2.coeffs)
        ratios = {k: v1.coeffs.get(k, 0) / v2.coeffs.get(k, 0) for k in keys}
        vals = list(ratios.values())
        assert all(abs(r - vals[0]) < 1e-10 for r in vals), ratios
        assert abs(vals[0]) > 1e-12


def test_linearity_of_reduction(cats):
    fib = cats["fibonacci"]
    d1 = parse_diagram("cup(tau)", fib)
    d2 = parse_diagram("cup(tau) ; omega(vac){1..2}", fib)
    alpha, beta = 0.3 + 0.1j, -1.25
    lhs = reduce_open(dg.Row(parts=(dg.Scalar(value=alpha), d1)), fib) \
        + reduce_open(dg.Row(parts=(dg.Scalar(value=beta), d2)), fib)
    rhs = alpha * reduce_open(d1, fib) + beta * reduce_open(d2, fib)
    assert set(lhs.coeffs) == set(rhs.coeffs)
    for key in lhs.coeffs:
        assert abs(lhs.coeffs[key] - rhs.coeffs[key]) < 1e-12


def test_evaluate_closed_rejects_open(cats):
    fib = cats["fibonacci"]
    with pytest.raises(DiagramError, match="not closed"):
        evaluate_closed(parse_diagram("cup(tau)", fib), fib)


# -- confluence: random closed diagrams under two reduction strategies -------

def random_closed_diagram(spec, rng, max_generators=8):
    """Grow a random well-typed closed diagram; None if closing fails."""
    labels = [lab.index for lab in spec.labels]
    start = labels[rng.next_u64() % len(labels)]
    rows = [dg.Cup(charge=start)]
    boundary = list(dg.Cup(charge=start).top(spec))
    count = 1

    def pick(seq):
        return seq[rng.next_u64() % len(seq)]

    while count < max_generators and boundary:
        move = rng.next_u64() % 4
        k = len(boundary)
        if move == 0 and k >= 2:
            # cap an adjacent dual pair if one exists
            spots = [i for i in range(k - 1)
                     if spec.dual(boundary[i]) == boundary[i + 1]]
            if spots:
                i = pick(spots)
                a = boundary[i + 1]
                parts = ([dg.Id(charge=c) for c in boundary[:i]]
                         + [dg.Cap(charge=a)]
                         + [dg.Id(charge=c) for c in boundary[i + 2:]])
                rows.append(dg.Row(parts=tuple(parts)) if len(parts) > 1 else parts[0])
                del boundary[i:i + 2]
                count += 1
                continue
        if move == 1 and k >= 2:
            i = rng.next_u64() % (k - 1)
            l, r = boundary[i], boundary[i + 1]
            channels = spec.channels(l, r)
            p = pick(channels)
            parts = ([dg.Id(charge=c) for c in boundary[:i]]
                     + [dg.Fuse(left=l, right=r, parent=p)]
                     + [dg.Id(charge=c) for c in boundary[i + 2:]])
            rows.append(dg.Row(parts=tuple(parts)) if len(parts) > 1 else parts[0])
            boundary[i:i + 2] = [p]
            count += 1
            continue
        if move == 2:
            i = rng.next_u64() % (k + 1)
            a = pick(labels)
            parts = ([dg.Id(charge=c) for c in boundary[:i]]
                     + [dg.Cup(charge=a)]
                     + [dg.Id(charge=c) for c in boundary[i:]])
            rows.append(dg.Row(parts=tuple(parts)) if len(parts) > 1 else parts[0])
            boundary[i:i] = [spec.dual(a), a]
            count += 1
            continue
        lo = rng.next_u64() % k + 1
        hi = rng.next_u64() % k + 1
        lo, hi = min(lo, hi), max(lo, hi)
        target = pick(labels)
        rows.append(dg.Omega(target=target, lo=lo, hi=hi, strands=tuple(boundary)))
        count += 1

    # close: fuse leftward, preferring channels that keep closure possible
    while len(boundary) > 2:
        l, r = boundary[0], boundary[1]
        p = pick(spec.channels(l, r))
        parts = [dg.Fuse(left=l, right=r, parent=p)] + \
                [dg.Id(charge=c) for c in boundary[2:]]
        rows.append(dg.Row(parts=tuple(parts)) if len(parts) > 1 else parts[0])
        boundary[:2] = [p]
    if len(boundary) == 2:
        if spec.dual(boundary[0]) != boundary[1]:
            return None
        rows.append(dg.Cap(charge=boundary[1]))
        boundary.clear()
    elif len(boundary) == 1:
        return None
    return dg.Seq(rows=tuple(rows))


@pytest.mark.parametrize("name", ["fibonacci", "ising"])
def test_confluence_on_random_corpus(cats, name):
    spec = cats[name]
    rng = SplitMix64(2024)
    produced = 0
    attempts = 0
    while produced < 50 and attempts < 500:
        attempts += 1
        d = random_closed_diagram(spec, rng)
        if d is None:
            continue
        produced += 1
        v1 = evaluate_closed(d, spec, strategy="projector", assoc="left")
        v2 = evaluate_closed(d, spec, strategy="expand", assoc="right")
        assert abs(v1 - v2) < 1e-9, (name, produced, v1, v2)
    assert produced >= 50
