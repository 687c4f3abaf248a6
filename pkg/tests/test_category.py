"""Model data: loading, validation, derived quantities."""

import copy
import json
import math
import os

import numpy as np
import pytest

from anyonsim.category import (CategoryError, builtin_names, check_pentagon,
                               load_builtin, load_category, monodromy,
                               omega_coefficients, smatrix_report,
                               verify_detection)

PHI = (1 + math.sqrt(5)) / 2

BUILTINS = ["fibonacci", "ising", "z3", "su2_4"]


@pytest.fixture(scope="module")
def specs():
    return {name: load_builtin(name) for name in BUILTINS}


def builtin_doc(name):
    path = os.path.join(os.path.dirname(__file__), "..", "src", "anyonsim",
                        "data", "categories", f"{name}.json")
    with open(path) as fh:
        return json.load(fh)


def test_builtin_names():
    assert set(BUILTINS) <= set(builtin_names())


# -- loading and derived fields ---------------------------------------

def test_fibonacci_qdim_is_golden_ratio(specs):
    fib = specs["fibonacci"]
    # independent oracle: largest eigenvalue of the tau fusion matrix
    n_tau = fib.fusion[fib.index_of("tau")].astype(float)
    rho = max(abs(np.linalg.eigvals(n_tau)))
    assert abs(rho - PHI) < 1e-12
    assert abs(fib.qdim("tau") - PHI) < 1e-12


def test_trivial_category_loads():
    doc = {
        "format": "anyonsim-category/1",
        "name": "trivial",
        "labels": ["1"],
        "dual": [0],
        "qdim": [1.0],
        "fusion": [[0, 0, 0]],
        "fsymbols": [[0, 0, 0, 0, 0, 0, 1.0, 0.0]],
        "smatrix": [[[1.0, 0.0]]],
    }
    spec = load_category(doc)
    assert spec.total_dim == 1.0
    assert check_pentagon(spec) == 0.0
    assert verify_detection(spec)  # vacuously


def test_ising_qdims(specs):
    ising = specs["ising"]
    n_sigma = ising.fusion[ising.index_of("sigma")].astype(float)
    assert abs(max(abs(np.linalg.eigvals(n_sigma))) - math.sqrt(2)) < 1e-12
    assert abs(ising.qdim("sigma") - math.sqrt(2)) < 1e-12
    assert abs(ising.total_dim - 2.0) < 1e-12


@pytest.mark.parametrize("name", BUILTINS)
def test_qdims_match_spectral_radius(specs, name):
    spec = specs[name]
    for lab in spec.labels:
        rho = max(abs(np.linalg.eigvals(spec.fusion[lab.index].astype(float))))
        assert abs(rho - lab.qdim) < 1e-9


@pytest.mark.parametrize("name", BUILTINS)
def test_duals_and_vacuum(specs, name):
    spec = specs[name]
    for lab in spec.labels:
        assert spec.dual(spec.dual(lab.index)) == lab.index
        assert lab.qdim >= 1.0 - 1e-12
        assert spec.channels(0, lab.index) == (lab.index,)
    assert spec.dual(0) == 0
    assert spec.qdim(0) == 1.0


# -- pentagon -----------------------------------------------------------

@pytest.mark.parametrize("name", BUILTINS)
def test_pentagon_builtins(specs, name):
    assert check_pentagon(specs[name]) < 1e-10


def test_pentagon_detects_broken_fsymbol():
    doc = builtin_doc("fibonacci")
    doc = copy.deepcopy(doc)
    for row in doc["fsymbols"]:
        if row[:6] == [1, 1, 1, 1, 0, 1]:
            row[6] = -row[6]  # flip the off-diagonal sign
    spec = load_category(doc)
    assert check_pentagon(spec) > 0.1


# -- S-matrix, monodromy, detection -------------------------------------

@pytest.mark.parametrize("name", BUILTINS)
def test_smatrix_properties(specs, name):
    rep = smatrix_report(specs[name])
    assert rep["unitarity"] < 1e-10
    assert rep["symmetry"] < 1e-10
    assert rep["first_row"] < 1e-10
    assert rep["verlinde"] < 1e-9


@pytest.mark.parametrize("name", BUILTINS)
def test_vacuum_monodromy_trivial(specs, name):
    spec = specs[name]
    for b in range(spec.num_labels):
        assert abs(monodromy(spec, 0, b) - 1.0) < 1e-12


def test_ising_monodromy(specs):
    ising = specs["ising"]
    assert abs(monodromy(ising, "psi", "sigma") - (-1.0)) < 1e-12
    assert abs(monodromy(ising, "psi", "psi") - 1.0) < 1e-12


def test_fibonacci_monodromy(specs):
    fib = specs["fibonacci"]
    assert abs(monodromy(fib, "tau", "tau") - (-1 / PHI ** 2)) < 1e-12


@pytest.mark.parametrize("name", BUILTINS)
def test_monodromy_bounded(specs, name):
    spec = specs[name]
    for a in range(spec.num_labels):
        for b in range(spec.num_labels):
            assert abs(monodromy(spec, a, b)) <= 1.0 + 1e-12


@pytest.mark.parametrize("name", BUILTINS)
def test_detection(specs, name):
    assert verify_detection(specs[name])


def test_detection_fails_for_transparent_charge():
    # hand-built two-label data whose "S-matrix" gives trivial braiding
    doc = {
        "format": "anyonsim-category/1",
        "name": "transparent",
        "labels": ["1", "b"],
        "dual": [0, 1],
        "qdim": [1.0, 1.0],
        "fusion": [[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]],
        "fsymbols": [[a, b, c, a ^ b ^ c, a ^ b, b ^ c, 1.0, 0.0]
                     for a in (0, 1) for b in (0, 1) for c in (0, 1)],
        "smatrix": [[[0.5 ** 0.5, 0.0], [0.5 ** 0.5, 0.0]],
                    [[0.5 ** 0.5, 0.0], [0.5 ** 0.5, 0.0]]],
    }
    spec = load_category(doc)
    assert not verify_detection(spec)


# -- omega loops ---------------------------------------------------------

@pytest.mark.parametrize("name", BUILTINS)
def test_omega_projector_contract(specs, name):
    spec = specs[name]
    s = spec.smatrix
    for a in range(spec.num_labels):
        om = omega_coefficients(spec, a)
        for b in range(spec.num_labels):
            val = np.sum(om.coeffs * s[:, b] / s[0, b])
            assert abs(val - (1.0 if a == b else 0.0)) < 1e-10


def test_omega_vacuum_ising(specs):
    ising = specs["ising"]
    om = omega_coefficients(ising, 0)
    expect = np.array([1.0, math.sqrt(2), 1.0]) / 4.0
    assert np.allclose(om.coeffs, expect, atol=1e-12)


# -- loader rejections ----------------------------------------------------

def test_malformed_document():
    with pytest.raises(CategoryError, match="malformed"):
        load_category("{not json")


def test_missing_file():
    with pytest.raises(CategoryError, match="does not exist"):
        load_category("/no/such/file.json")


def test_unknown_label_reference():
    doc = copy.deepcopy(builtin_doc("fibonacci"))
    doc["fusion"].append([0, 0, 7])
    with pytest.raises(CategoryError, match="unknown label"):
        load_category(doc)


def test_declared_qdim_mismatch_rejected():
    doc = copy.deepcopy(builtin_doc("fibonacci"))
    doc["qdim"][1] = 1.5
    with pytest.raises(CategoryError, match="spectral radius"):
        load_category(doc)


def test_multiplicity_rejected():
    doc = copy.deepcopy(builtin_doc("fibonacci"))
    doc["fusion"].append([1, 1, 1])
    with pytest.raises(CategoryError, match="multiplicity"):
        load_category(doc)


def test_inadmissible_fsymbol_rejected():
    doc = copy.deepcopy(builtin_doc("fibonacci"))
    doc["fsymbols"].append([0, 0, 0, 1, 0, 0, 1.0, 0.0])
    with pytest.raises(CategoryError, match="inadmissible"):
        load_category(doc)


def test_vacuum_pair_phase_convention_enforced():
    doc = copy.deepcopy(builtin_doc("fibonacci"))
    for row in doc["fsymbols"]:
        if row[:6] == [1, 1, 1, 1, 0, 0]:
            row[6] = -row[6]
    with pytest.raises(CategoryError, match="vacuum-pair F element"):
        load_category(doc)


def test_dual_involution_enforced():
    doc = copy.deepcopy(builtin_doc("z3"))
    doc["dual"] = [0, 1, 2]  # breaks N^0_{ab} consistency for label 1
    with pytest.raises(CategoryError):
        load_category(doc)


def test_label_lookup(specs):
    fib = specs["fibonacci"]
    assert fib.index_of("tau") == 1
    assert fib.index_of(1) == 1
    assert fib.index_of(fib.labels[1]) == 1
    with pytest.raises(CategoryError, match="unknown label name"):
        fib.index_of("sigma")
    with pytest.raises(CategoryError, match="out of range"):
        fib.index_of(5)
