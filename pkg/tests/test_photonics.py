import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heraldsim.densop import max_abs_diff, pure_dm
from heraldsim.photonics import (
    EXCITED,
    DetectorModel,
    NodeParams,
    SourceModel,
    absorption_unitary,
    beamsplitter_output,
    noclick_kraus,
    resource_closed_form,
    simulate_resource,
    zeta_operator,
)

from .helpers import phases, probabilities

GRID = [0.0, 0.05, 0.1, 0.5, 1.0]


def test_zeta_identity():
    np.testing.assert_allclose(zeta_operator(0, 0), np.eye(2), atol=1e-15)


def test_zeta_pure_phase():
    d = 0.37
    np.testing.assert_allclose(zeta_operator(0, d), np.diag([np.exp(1j * d), np.exp(-1j * d)]),
                               atol=1e-15)


def test_zeta_full_asymmetry():
    np.testing.assert_allclose(zeta_operator(math.pi / 4, 0), np.diag([math.sqrt(2), 0]), atol=1e-15)


@given(st.floats(-math.pi / 4, math.pi / 4), phases)
def test_zeta_is_diagonal_closed_form(phi, delta):
    c, s = math.cos(phi), math.sin(phi)
    expect = np.diag([(c + s) * np.exp(1j * delta), (c - s) * np.exp(-1j * delta)])
    np.testing.assert_allclose(zeta_operator(phi, delta), expect, atol=1e-14)


def test_node_params_phi():
    assert NodeParams(0.1, 0.1).phi == 0
    assert NodeParams(0, 0).phi == 0
    assert NodeParams(0, 0.2).phi == pytest.approx(math.pi / 4)
    n = NodeParams(0.2, 0.6)
    assert math.sin(2 * n.phi) == pytest.approx(0.4 / 0.8)
    with pytest.raises(ValueError):
        NodeParams(1.2, 0.1)


def test_source_model_validation():
    with pytest.raises(ValueError):
        SourceModel(0.5, 0.6, 0.0)
    with pytest.raises(ValueError):
        SourceModel.from_distribution([0.1, 0.8, 0.05, 0.05])
    assert SourceModel.from_distribution([0.1, 0.9]).p2 == 0


def test_closed_form_perfect_absorption():
    rho = resource_closed_form(NodeParams(1, 1))
    assert max_abs_diff(rho, pure_dm([0, 1, 1, 0], (2, 2))) < 1e-15


def test_closed_form_no_absorption():
    rho = resource_closed_form(NodeParams(0, 0))
    expect = np.zeros((4, 4))
    expect[0, 0] = 1
    assert max_abs_diff(rho, expect) == 0


def test_closed_form_weights():
    rho = resource_closed_form(NodeParams(0.1, 0.1, 0.4)).elements
    assert rho[0, 0].real == pytest.approx(0.9)
    assert rho[1, 1].real + rho[2, 2].real == pytest.approx(0.1)
    # coherence carries the path phase: <01|rho|10> = 0.05 e^{2 i delta}
    assert rho[1, 2] == pytest.approx(0.05 * np.exp(0.8j))


@pytest.mark.parametrize("a1,a2,delta", list(itertools.product(GRID, GRID, [0, 0.3, math.pi / 2])))
def test_simulation_matches_closed_form(a1, a2, delta):
    node = NodeParams(a1, a2, delta)
    res = simulate_resource(node)
    assert res.accept_prob == pytest.approx(1.0, abs=1e-12)
    assert max_abs_diff(res.state, resource_closed_form(node)) <= 1e-10


def test_perfect_detectors_purify():
    res = simulate_resource(NodeParams(0.3, 0.3, 0.2), detectors=DetectorModel.ideal())
    assert res.accept_prob == pytest.approx(0.3, abs=1e-14)
    assert max_abs_diff(res.state, resource_closed_form(NodeParams(1, 1, 0.2))) < 1e-14


@pytest.mark.parametrize("a,eta,dark", [(0.1, 0.9, 0.0), (0.1, 0.5, 0.3), (0.5, 0.2, 0.9), (0.05, 1.0, 0.5)])
def test_conditioning_formula(a, eta, dark):
    # direct Kraus evaluation: Bell part (vacuum arms) keeps (1-d)^2, the
    # ground part has one undetected photon: (1-d)^2 (1-eta)
    q = (1 - dark) ** 2 * (a + (1 - a) * (1 - eta))
    w = a / (a + (1 - a) * (1 - eta))
    res = simulate_resource(NodeParams(a, a), detectors=DetectorModel(True, eta, dark))
    assert res.accept_prob == pytest.approx(q, abs=1e-14)
    assert res.bell_weight == pytest.approx(w, abs=1e-14)


def test_noclick_kraus_values():
    np.testing.assert_allclose(noclick_kraus(DetectorModel(True, 0, 0)).operators[0], np.eye(3))
    np.testing.assert_allclose(noclick_kraus(DetectorModel(True, 1, 0)).operators[0], np.diag([1, 0, 0]))
    np.testing.assert_allclose(noclick_kraus(DetectorModel(True, 0.5, 0.5)).operators[0],
                               math.sqrt(0.5) * np.diag([1, math.sqrt(0.5), 0.5]))
    with pytest.raises(ValueError):
        noclick_kraus(DetectorModel(False))


def test_absorption_unitary_is_unitary():
    for a in (0, 0.1, 0.7, 1):
        u = absorption_unitary(a)
        np.testing.assert_allclose(u.conj().T @ u, np.eye(9), atol=1e-15)
        # ground atom, two photons: excitation probability 1 - (1-a)^2
        out = u[:, 0 * 3 + 2]
        assert abs(out[EXCITED * 3 + 1]) ** 2 == pytest.approx(1 - (1 - a) ** 2)


def test_beamsplitter_outputs_normalized():
    for n in (0, 1, 2):
        for ind in (True, False):
            v = beamsplitter_output(n, ind)
            assert np.vdot(v, v).real == pytest.approx(1)
    with pytest.raises(ValueError):
        beamsplitter_output(3)


@pytest.mark.parametrize("a,eta", [(0.05, 0.3), (0.1, 0.9), (0.5, 0.5)])
def test_dark_counts_only_rescale_acceptance(a, eta):
    base = simulate_resource(NodeParams(a, a, 0.3), detectors=DetectorModel(True, eta, 0.0))
    for d in (0.3, 0.9):
        res = simulate_resource(NodeParams(a, a, 0.3), detectors=DetectorModel(True, eta, d))
        assert max_abs_diff(res.state, base.state) <= 1e-12
        assert res.accept_prob == pytest.approx(base.accept_prob * (1 - d) ** 2, rel=1e-12)


@pytest.mark.parametrize("a", [0.05, 0.1, 0.5, 0.9])
def test_bell_weight_monotone_in_eta(a):
    weights = [simulate_resource(NodeParams(a, a), detectors=DetectorModel(True, eta, 0)).bell_weight
               for eta in np.linspace(0, 1, 21)]
    assert all(b >= w - 1e-15 for w, b in zip(weights, weights[1:]))


@settings(max_examples=40, deadline=None)
@given(probabilities, probabilities, phases, st.floats(0, 1))
def test_vacuum_emission_scales_bell_weight(a1, a2, delta, p0):
    node = NodeParams(a1, a2, delta)
    res = simulate_resource(node, SourceModel(p0, 1 - p0, 0.0))
    mean = node.mean_absorption * (1 - p0)
    bell = resource_closed_form(NodeParams(1, 1)).elements
    z = np.kron(zeta_operator(node.phi, delta), np.eye(2))
    expect = mean * (z @ bell @ z.conj().T)
    expect[0, 0] += 1 - mean
    assert max_abs_diff(res.state, expect) <= 1e-10


@settings(max_examples=30, deadline=None)
@given(probabilities, probabilities, phases, st.floats(0, 0.5), st.floats(0, 0.3), st.booleans(),
       st.floats(0, 1), st.floats(0, 0.99))
def test_resource_states_are_valid(a1, a2, delta, p0, p2, ind, eta, dark):
    det = DetectorModel(True, eta, dark)
    res = simulate_resource(NodeParams(a1, a2, delta), SourceModel.faulty(p0, p2, ind), det)
    assert 0 <= res.accept_prob <= 1
    if res.state is not None:
        res.state.check()
        assert res.state.normalized


def test_never_accepted():
    res = simulate_resource(NodeParams(0, 0), detectors=DetectorModel.ideal())
    assert res.accept_prob == 0 and res.state is None


def test_two_photon_bunched_resource():
    # bunched pair in arm i excites atom i with prob 1-(1-A)^2, incoherently
    a = 0.1
    res = simulate_resource(NodeParams(a, a), SourceModel(0, 0, 1))
    b = 1 - (1 - a) ** 2
    np.testing.assert_allclose(np.diag(res.state.elements).real, [1 - b, b / 2, b / 2, 0], atol=1e-15)
    assert abs(res.state.elements[1, 2]) < 1e-15


def test_two_photon_binomial_split_reaches_both_atoms():
    res = simulate_resource(NodeParams(0.5, 0.5), SourceModel(0, 0, 1, indistinguishable=False))
    # |1,1> branch (weight 1/2) excites both atoms with prob 1/4
    assert res.state.elements[3, 3].real == pytest.approx(0.125)
