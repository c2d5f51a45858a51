import numpy as np
import pytest
from hypothesis import given, settings

from heraldsim.densop import (
    DensityOp,
    DimensionError,
    KrausSet,
    PureState,
    apply_kraus,
    basis_dm,
    embed,
    maximally_mixed,
    max_abs_diff,
    measure,
    partial_trace,
    pure_dm,
    tensor,
    unitary_set,
    z_projectors,
)
from heraldsim.photonics import DetectorModel, noclick_kraus

from .helpers import random_mixed, random_unitary, seeds

PSI_PLUS = pure_dm([0, 1, 1, 0], (2, 2))


def test_tensor_identity():
    out = tensor(maximally_mixed(2), maximally_mixed(2))
    np.testing.assert_allclose(out.elements, np.eye(4) / 4, atol=1e-15)


def test_tensor_basis():
    out = tensor(basis_dm([0], [2]), basis_dm([1], [2]))
    assert max_abs_diff(out, basis_dm([0, 1], [2, 2])) == 0
    assert out.dims == (2, 2)


def test_tensor_trace_multiplies():
    half = DensityOp(np.diag([0.25, 0.25]))
    out = tensor(half, PSI_PLUS)
    assert out.trace == pytest.approx(0.5, abs=1e-15)
    assert not out.normalized


def test_tensor_cap():
    big = maximally_mixed(32)
    with pytest.raises(DimensionError):
        tensor(big, big)


def test_partial_trace_bell_marginal():
    out = partial_trace(PSI_PLUS, [2, 2], keep=[0])
    np.testing.assert_allclose(out.elements, np.eye(2) / 2, atol=1e-15)


def test_partial_trace_keep_all_is_identity():
    rho = random_mixed(np.random.default_rng(0), 4)
    out = partial_trace(rho, [2, 2], keep=[0, 1])
    assert max_abs_diff(out, rho) == 0


def test_partial_trace_product():
    out = partial_trace(basis_dm([0, 1], [2, 2]), [2, 2], keep=[1])
    assert max_abs_diff(out, basis_dm([1], [2])) == 0


def test_partial_trace_bad_dims():
    with pytest.raises(DimensionError):
        partial_trace(PSI_PLUS, [2, 3], keep=[0])


def test_partial_trace_middle_subsystem():
    rng = np.random.default_rng(3)
    a, b, c = random_mixed(rng, 2), random_mixed(rng, 3), random_mixed(rng, 2)
    full = tensor(tensor(a, b), c)
    assert max_abs_diff(partial_trace(full, [2, 3, 2], keep=[1]), b) < 1e-14
    assert max_abs_diff(partial_trace(full, [2, 3, 2], keep=[0, 2]), tensor(a, c)) < 1e-14


def test_apply_kraus_trace_preserving():
    rng = np.random.default_rng(1)
    rho = random_mixed(rng, 4)
    # amplitude damping on qubit 0
    g = 0.3
    k0 = embed(np.array([[1, 0], [0, np.sqrt(1 - g)]]), [2, 2], [0])
    k1 = embed(np.array([[0, np.sqrt(g)], [0, 0]]), [2, 2], [0])
    out = apply_kraus(rho, KrausSet((k0, k1), trace_preserving=True))
    assert out.trace == pytest.approx(1.0, abs=1e-12)
    out.check()


def test_apply_kraus_projector_halves():
    out = apply_kraus(maximally_mixed(2), KrausSet((np.diag([1, 0]),)))
    assert out.trace == pytest.approx(0.5, abs=1e-15)


@pytest.mark.parametrize("dark", [0.0, 0.3, 0.9])
def test_noclick_single_photon_trial(dark):
    # one arm after a one-photon trial: absorbed (vacuum left) or passed through
    det = DetectorModel(True, 1.0, dark)
    k = noclick_kraus(det)
    assert apply_kraus(basis_dm([0], [3]), k).trace == pytest.approx(1 - dark, abs=1e-15)
    # a perfect detector never misses the photon
    assert np.allclose(k.operators[0] @ basis_dm([1], [3]).elements, 0)
    blind = noclick_kraus(DetectorModel(True, 0.0, dark))
    assert apply_kraus(basis_dm([1], [3]), blind).trace == pytest.approx(1 - dark, abs=1e-15)


def test_apply_kraus_dim_mismatch():
    with pytest.raises(DimensionError):
        apply_kraus(PSI_PLUS, KrausSet((np.eye(2),)))


def test_kraus_set_rejects_excess():
    with pytest.raises(ValueError):
        KrausSet((np.eye(2), np.eye(2)))
    with pytest.raises(ValueError):
        KrausSet((np.diag([1, 0]),), trace_preserving=True)


def test_measure_plus():
    plus = pure_dm([1, 1])
    (p0, s0), (p1, s1) = measure(plus, z_projectors([2], 0))
    assert p0 == pytest.approx(0.5) and p1 == pytest.approx(0.5)
    assert max_abs_diff(s0, basis_dm([0], [2])) < 1e-15
    assert max_abs_diff(s1, basis_dm([1], [2])) < 1e-15


def test_measure_zero_outcome():
    (p0, s0), (p1, s1) = measure(basis_dm([0], [2]), z_projectors([2], 0))
    assert p0 == 1.0 and s0 is not None
    assert p1 == 0.0 and s1 is None


def test_measure_parity():
    even = KrausSet((np.diag([1, 0, 0, 1]),), label="even")
    odd = KrausSet((np.diag([0, 1, 1, 0]),), label="odd")
    out = measure(pure_dm([0.5, 0.5, 0.5, 0.5], (2, 2)), [even, odd])
    assert [p for p, _ in out] == pytest.approx([0.5, 0.5])


def test_measure_incomplete():
    with pytest.raises(ValueError):
        measure(maximally_mixed(2), [KrausSet((np.diag([1, 0]),))])


def test_density_op_validation():
    with pytest.raises(ValueError):
        DensityOp(np.array([[0.5, 1j], [0, 0.5]]))
    with pytest.raises(ValueError):
        DensityOp(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        DensityOp(np.diag([0.5, 0.4]), normalized=True)
    assert not DensityOp(np.diag([1.5, -0.5])).is_valid()
    with pytest.raises(ValueError):
        PureState([1, 1])


def test_embed_matches_kron():
    rng = np.random.default_rng(7)
    a, b = random_unitary(rng, 2), random_unitary(rng, 3)
    assert np.allclose(embed(a, [2, 3], [0]), np.kron(a, np.eye(3)))
    assert np.allclose(embed(b, [2, 3], [1]), np.kron(np.eye(2), b))
    # reversed target order swaps the factors
    ab = np.kron(a, b)
    ba = np.kron(b, a)
    assert np.allclose(embed(ba, [2, 3], [1, 0]), ab)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_channel_outputs_are_states(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(rng, 4, rank=int(rng.integers(1, 5)))
    # random CPTP map from a Stinespring isometry
    u = random_unitary(rng, 8)
    ops = [u[4 * i:4 * (i + 1), :4] for i in range(2)]
    out = apply_kraus(rho, KrausSet(ops, trace_preserving=True))
    assert np.max(np.abs(out.elements - out.elements.conj().T)) <= 1e-12
    assert out.min_eigenvalue() >= -1e-10
    assert abs(out.trace - 1) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_unitary_preserves_spectrum(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(rng, 4)
    out = apply_kraus(rho, unitary_set(random_unitary(rng, 4)))
    np.testing.assert_allclose(np.linalg.eigvalsh(out.elements), np.linalg.eigvalsh(rho.elements),
                               atol=1e-10)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_partial_trace_inverts_tensor(seed):
    rng = np.random.default_rng(seed)
    a, b = random_mixed(rng, 2), random_mixed(rng, 3)
    ab = tensor(a, b)
    assert max_abs_diff(partial_trace(ab, keep=[0]), a) <= 1e-12
    assert max_abs_diff(partial_trace(ab, keep=[1]), b) <= 1e-12
