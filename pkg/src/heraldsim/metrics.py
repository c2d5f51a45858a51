"""Figures of merit: Bell fidelity, concurrence, trial counts, faulty sources."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .densop import DensityOp, pure_dm
from .photonics import (
    NO_DETECTORS,
    DetectorModel,
    NodeParams,
    SourceModel,
    acceptance_probability,
    simulate_resource,
)
from .ppp import run_ppp, success_probability_analytic

RNG_ALGORITHM = "numpy.PCG64/SeedSequence"
# samples per RNG substream; fixed so results do not depend on worker count
CHUNK = 1 << 16
# acceptance probabilities below this count as divergent
DIVERGENCE_Q = 1e-12
# density-matrix eigenvalues below this are rounding noise
EIGEN_FLOOR = 1e-13

_SY = np.array([[0, -1j], [1j, 0]])
_SYSY = np.kron(_SY, _SY)

PHI_EVEN = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2)
PHI_ODD = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)
PLUS_PLUS = pure_dm([0.5, 0.5, 0.5, 0.5], (2, 2))


class DivergentTrials(ArithmeticError):
    """Raised when acceptance is impossible and the expected trial count is infinite."""


def concurrence(rho: DensityOp) -> float:
    """Wootters concurrence of a normalized two-qubit state."""
    if rho.dim != 4:
        raise ValueError(f"concurrence needs a two-qubit state, got dim {rho.dim}")
    if abs(rho.trace - 1) > 1e-10:
        raise ValueError("concurrence needs a normalized state")
    # lambda_i are the singular values of sqrt(rho) sqrt(rho~); going through
    # the square root with noise eigenvalues zeroed avoids sqrt(1e-16) ~ 1e-8
    # artefacts that the eigenvalues of rho rho~ would carry.
    w, v = np.linalg.eigh(rho.elements)
    w = np.where(w < EIGEN_FLOOR, 0.0, w)
    root = (v * np.sqrt(w)) @ v.conj().T
    root_tilde = _SYSY @ root.conj() @ _SYSY
    lam = np.linalg.svd(root @ root_tilde, compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1] - lam[2] - lam[3])))


def bell_fidelity(rho: DensityOp, parity: str) -> float:
    if parity == "even":
        v = PHI_EVEN
    elif parity == "odd":
        v = PHI_ODD
    else:
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    return float(np.real(v.conj() @ rho.elements @ v))


@dataclass(frozen=True)
class TrialStats:
    expected_per_accept: float
    expected_per_ppp: float
    mc_mean: float
    mc_stderr: float
    samples: int
    seed: int
    per: str
    algorithm: str = RNG_ALGORITHM


def _heralded_success_prob(node: NodeParams, detectors: DetectorModel) -> float:
    return success_probability_analytic(node, detectors)


def expected_trials_analytic(node: NodeParams, detectors: DetectorModel = NO_DETECTORS,
                             per: str = "accept") -> float:
    """Mean number of emitted photons.

    ``per`` selects the unit: ``"accept"`` (one accepted resource),
    ``"attempt"`` (one PPP attempt, two accepted resources) or ``"ppp"``
    (one heralded success; failed attempts restart from scratch).
    """
    q = acceptance_probability(node.mean_absorption, detectors)
    if q < DIVERGENCE_Q:
        raise DivergentTrials(f"acceptance probability {q:.3e}, trial count diverges")
    if per == "accept":
        return 1.0 / q
    if per == "attempt":
        return 2.0 / q
    if per == "ppp":
        ps = _heralded_success_prob(node, detectors)
        if ps <= 0:
            raise DivergentTrials("heralded success probability is zero")
        return 2.0 / (q * ps)
    raise ValueError(f"unknown trial unit {per!r}")


def _sample_chunk(rng: np.random.Generator, n: int, q: float, per: str, ps: float) -> np.ndarray:
    if per == "accept":
        return rng.geometric(q, size=n).astype(float)
    if per == "attempt":
        accepted = 2
    else:
        accepted = 2 * rng.geometric(ps, size=n)
    # photons = accepted successes + failures before them
    return (accepted + rng.negative_binomial(accepted, q, size=n)).astype(float)


def expected_trials_mc(node: NodeParams, detectors: DetectorModel = NO_DETECTORS,
                       per: str = "accept", samples: int = 100_000, seed: int = 0) -> TrialStats:
    """Monte Carlo estimate of :func:`expected_trials_analytic`.

    Samples are drawn in fixed-size chunks, each from its own child of
    ``SeedSequence(seed)``, so the result is the same however the chunks
    are scheduled.
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    expected_trials_analytic(node, detectors, per)  # raises on divergence
    per_accept = 1.0 / acceptance_probability(node.mean_absorption, detectors)
    ps = _heralded_success_prob(node, detectors) if per == "ppp" else 1.0
    try:
        per_ppp = expected_trials_analytic(node, detectors, "ppp")
    except DivergentTrials:
        per_ppp = math.inf
    q = 1.0 / per_accept
    n_chunks = -(-samples // CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    total = 0.0
    total_sq = 0.0
    for i, child in enumerate(children):
        n = min(CHUNK, samples - i * CHUNK)
        x = _sample_chunk(np.random.Generator(np.random.PCG64(child)), n, q, per, ps)
        total += float(x.sum())
        total_sq += float(np.dot(x, x))
    mean = total / samples
    if samples > 1:
        var = max(0.0, (total_sq - samples * mean * mean) / (samples - 1))
        stderr = math.sqrt(var / samples)
    else:
        stderr = 0.0
    return TrialStats(per_accept, per_ppp, mean, stderr, samples, seed, per)


@dataclass(frozen=True)
class Figures:
    fidelity: float
    concurrence: float
    p_success: float


def source_fault_analysis(node: NodeParams, source: SourceModel,
                          clients: DensityOp = PLUS_PLUS,
                          detectors: DetectorModel = NO_DETECTORS) -> Figures:
    """Quality of the heralded Bell pair produced with an imperfect source.

    Fidelity and concurrence are averaged over the heralded branches,
    weighted by branch probability; fidelity is taken against the Bell state
    of each branch's own parity.
    """
    resource = simulate_resource(node, source, detectors)
    result = run_ppp(clients, resource)
    if result.p_success <= 0 or not result.branches:
        raise ZeroDivisionError("heralded success probability is zero")
    fid = sum(b.probability * bell_fidelity(b.state, b.parity) for b in result.branches)
    conc = sum(b.probability * concurrence(b.state) for b in result.branches)
    return Figures(fid / result.p_success, conc / result.p_success, result.p_success)
