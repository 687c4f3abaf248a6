"""Fusion-tree bases and recoupling transforms."""

import numpy as np
import pytest

from anyonsim import trees
from anyonsim.category import load_builtin

PHI = (1 + 5 ** 0.5) / 2


@pytest.fixture(scope="module")
def fib():
    return load_builtin("fibonacci")


@pytest.fixture(scope="module")
def ising():
    return load_builtin("ising")


def fusion_path_count(spec, charges, total):
    """Independent dimension oracle: iterate the fusion matrices."""
    vec = np.zeros(spec.num_labels)
    vec[charges[0]] = 1.0
    for c in charges[1:]:
        vec = vec @ spec.fusion[:, c, :].astype(float)
    return int(round(vec[total])) if total is not None else int(round(vec.sum()))


@pytest.mark.parametrize("catname,charges", [
    ("fibonacci", (1, 1, 1)),
    ("fibonacci", (1, 1, 1, 1, 1)),
    ("ising", (1, 1, 1, 1)),
    ("ising", (1, 2, 1, 2, 1)),
    ("su2_4", (1, 2, 3)),
    ("z3", (1, 1, 2)),
])
def test_basis_dimension_matches_path_count(catname, charges):
    spec = load_builtin(catname)
    slots = tuple((c,) for c in charges)
    for total in list(range(spec.num_labels)) + [None]:
        basis = trees.TreeBasis(spec, slots, trees.left_comb(len(charges)), total)
        assert basis.dim == fusion_path_count(spec, charges, total)


def test_pair_dimension_rule(ising):
    # n = 2: dimension is sum_c N^c_{a1 a2} [c = total]
    basis = trees.TreeBasis(ising, ((1,), (1,)), trees.left_comb(2), 0)
    assert basis.dim == 1
    free = trees.TreeBasis(ising, ((1,), (1,)), trees.left_comb(2), None)
    assert free.dim == 2  # channels 1 and psi


def test_three_tau_fmatrix(fib):
    slots = ((1,), (1,), (1,))
    u = trees.tree_transform(fib, slots, trees.left_comb(3), (0, (1, 2)), total=1)
    expect = np.array([[1 / PHI, 1 / PHI ** 0.5], [1 / PHI ** 0.5, -1 / PHI]])
    assert np.abs(u - expect).max() < 1e-12


@pytest.mark.parametrize("catname", ["fibonacci", "ising", "su2_4"])
@pytest.mark.parametrize("shape_fn", [
    lambda n: trees.group_shape(n, 1, 2),
    lambda n: trees.bipartite_shape(n, 2),
    lambda n: (0, (1, (2, 3))),
])
def test_transforms_unitary(catname, shape_fn):
    spec = load_builtin(catname)
    a = 1
    slots = tuple(((a,),) * 4)
    shape = shape_fn(4)
    u = trees.tree_transform(spec, slots, trees.left_comb(4), shape)
    assert u.shape[0] == u.shape[1]
    assert np.abs(u @ u.conj().T - np.eye(u.shape[0])).max() < 1e-12


def test_transform_round_trip(ising):
    slots = ((1,), (1,), (2,), (1,))
    shape = trees.bipartite_shape(4, 2)
    u = trees.tree_transform(ising, slots, trees.left_comb(4), shape)
    v = trees.tree_transform(ising, slots, shape, trees.left_comb(4))
    assert np.abs(v @ u - np.eye(u.shape[0])).max() < 1e-12


def test_transform_composition(fib):
    # comb -> A -> B equals comb -> B
    slots = tuple(((1,),) * 4)
    sh_a = trees.group_shape(4, 1, 2)
    sh_b = trees.bipartite_shape(4, 2)
    u1 = trees.tree_transform(fib, slots, trees.left_comb(4), sh_a)
    u2 = trees.tree_transform(fib, slots, sh_a, sh_b)
    u3 = trees.tree_transform(fib, slots, trees.left_comb(4), sh_b)
    assert np.abs(u2 @ u1 - u3).max() < 1e-12


def test_multicharge_slots(ising):
    basis = trees.TreeBasis(ising, ((0, 2), (1,)), trees.left_comb(2), None)
    # leaf 0 may be vacuum or psi; the pair total is sigma either way
    assert basis.dim == 2
    assert all(basis.root_charge(el) == 1 for el in basis.elements)


def test_shape_helpers():
    assert trees.left_comb(4) == (((0, 1), 2), 3)
    assert trees.group_shape(4, 1, 2) == ((0, (1, 2)), 3)
    assert trees.bipartite_shape(4, 2) == ((0, 1), (2, 3))
    assert trees.right_comb_over([2, 3, 4]) == (2, (3, 4))
    assert trees.shape_leaves(((0, 1), (2, 3))) == (0, 1, 2, 3)
    with pytest.raises(ValueError):
        trees.group_shape(3, 2, 1)


def test_deterministic_enumeration(fib):
    b1 = trees.TreeBasis(fib, ((1,), (1,), (1,)), trees.left_comb(3), None)
    b2 = trees.TreeBasis(fib, ((1,), (1,), (1,)), trees.left_comb(3), None)
    assert b1.elements == b2.elements
    assert b1.elements == tuple(sorted(b1.elements))
