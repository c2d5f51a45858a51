"""Photon emission, absorption and detection for one entangling trial.

A single-photon pulse is split by a 50/50 beamsplitter toward two atoms.
Each atom is a lambda system with levels ``|0>`` (ground), ``|e>``
(excited) and ``|1>`` (metastable); after absorption a pi pulse moves the
excitation from ``|e>`` to ``|1>``. The photonic modes are traced out,
optionally after conditioning on neither detector clicking.

Two routes give the broker-pair state: :func:`simulate_resource` runs the
whole pipeline on atoms + Fock modes, :func:`resource_closed_form` writes
down the analytic mixture directly. For a perfect source without detectors
they agree to machine precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .densop import (
    DensityOp,
    KrausSet,
    apply_kraus,
    branch,
    embed,
    partial_trace,
    unitary_set,
)

# atom levels inside the 3-dim lambda system
GROUND, EXCITED, META = 0, 1, 2
ATOM_DIM = 3
FOCK_DIM = 3  # vacuum, one and two photons per arm
# subsystem order of the full photonic space
ATOM1, ATOM2, MODE1, MODE2 = range(4)
FULL_DIMS = (ATOM_DIM, ATOM_DIM, FOCK_DIM, FOCK_DIM)

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
PSI_PLUS = np.array([0, 1, 1, 0], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class NodeParams:
    """Absorption probabilities of the two atoms and the shared path phase.

    ``A1``/``A2`` are conditional on the photon travelling down that arm.
    """

    A1: float
    A2: float
    delta: float = 0.0

    def __post_init__(self):
        for name in ("A1", "A2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if not math.isfinite(self.delta):
            raise ValueError("delta must be finite")

    @classmethod
    def symmetric(cls, p_abs: float, delta: float = 0.0) -> "NodeParams":
        return cls(p_abs, p_abs, delta)

    @property
    def mean_absorption(self) -> float:
        return 0.5 * (self.A1 + self.A2)

    @property
    def phi(self) -> float:
        """Absorption asymmetry angle, ``sin 2 phi = (A2 - A1) / (A1 + A2)``."""
        s = self.A1 + self.A2
        if s == 0:
            return 0.0
        return 0.5 * math.asin(max(-1.0, min(1.0, (self.A2 - self.A1) / s)))


@dataclass(frozen=True)
class DetectorModel:
    present: bool = False
    eta: float = 1.0
    dark: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta!r}")
        if not 0.0 <= self.dark < 1.0:
            raise ValueError(f"dark count rate must lie in [0, 1), got {self.dark!r}")

    @classmethod
    def ideal(cls) -> "DetectorModel":
        return cls(True, 1.0, 0.0)


NO_DETECTORS = DetectorModel(present=False)


@dataclass(frozen=True)
class SourceModel:
    """Photon-number distribution of one source pulse, truncated at two.

    With ``indistinguishable`` the two photons of a double emission leave
    the beamsplitter bunched, ``(|2,0> + |0,2>)/sqrt 2``. Otherwise the
    beamsplitter acts on a two-photon Fock input in the usual binomial way.
    """

    p0: float = 0.0
    p1: float = 1.0
    p2: float = 0.0
    indistinguishable: bool = True

    def __post_init__(self):
        for name in ("p0", "p1", "p2"):
            v = getattr(self, name)
            if v < 0 or not math.isfinite(v):
                raise ValueError(f"{name} must be non-negative, got {v!r}")
        if abs(self.p0 + self.p1 + self.p2 - 1.0) > 1e-12:
            raise ValueError("p0 + p1 + p2 must equal 1")

    @classmethod
    def faulty(cls, p0: float, p2: float, indistinguishable: bool = True) -> "SourceModel":
        return cls(p0, 1.0 - p0 - p2, p2, indistinguishable)

    @classmethod
    def from_distribution(cls, probs: Sequence[float], indistinguishable: bool = True) -> "SourceModel":
        probs = list(probs) + [0.0] * max(0, 3 - len(probs))
        if any(p != 0 for p in probs[3:]):
            raise ValueError("photon numbers above two are not supported by the Fock truncation")
        return cls(probs[0], probs[1], probs[2], indistinguishable)


IDEAL_SOURCE = SourceModel()


@dataclass(frozen=True)
class ResourceOutcome:
    """Broker-pair state produced by one accepted trial.

    ``state`` is ``None`` when the trial can never be accepted.
    ``bell_weight`` is the population of the single-excitation sector
    ``{|01>, |10>}``; for a perfect source it is the weight of the coherent
    Bell-type component.
    """

    accept_prob: float
    state: DensityOp | None
    bell_weight: float


def zeta_operator(phi: float, delta: float) -> np.ndarray:
    """Asymmetry and path-phase distortion acting on one broker qubit."""
    eye = np.eye(2, dtype=complex)
    amp = math.cos(phi) * eye + math.sin(phi) * SIGMA_Z
    phase = math.cos(delta) * eye + 1j * math.sin(delta) * SIGMA_Z
    return amp @ phase


def resource_closed_form(node: NodeParams) -> DensityOp:
    p = node.mean_absorption
    z1 = np.kron(zeta_operator(node.phi, node.delta), np.eye(2))
    z1_bra = np.kron(zeta_operator(node.phi, -node.delta), np.eye(2))
    bell = z1 @ np.outer(PSI_PLUS, PSI_PLUS.conj()) @ z1_bra
    ground = np.zeros((4, 4), dtype=complex)
    ground[0, 0] = 1.0
    return DensityOp(p * bell + (1 - p) * ground, (2, 2), normalized=True)


def noclick_kraus(detectors: DetectorModel) -> KrausSet:
    """No-click operator for one arm on the truncated Fock space.

    Each photon independently escapes detection with probability
    ``1 - eta``; the dark-count factor is photon-number independent.
    """
    if not detectors.present:
        raise ValueError("no-click operator requested for absent detectors")
    miss = 1.0 - detectors.eta
    v = math.sqrt(1.0 - detectors.dark) * np.diag([1.0, math.sqrt(miss), miss])
    return KrausSet((v,), label="no-click")


# --- pipeline pieces --------------------------------------------------------

def _fock(n1: int, n2: int) -> np.ndarray:
    v = np.zeros(FOCK_DIM * FOCK_DIM, dtype=complex)
    v[n1 * FOCK_DIM + n2] = 1.0
    return v


def beamsplitter_output(n: int, indistinguishable: bool = True) -> np.ndarray:
    """Two-arm photon state after a 50/50 splitter fed with ``n`` photons."""
    if n == 0:
        return _fock(0, 0)
    if n == 1:
        return (_fock(1, 0) + _fock(0, 1)) / math.sqrt(2)
    if n == 2:
        if indistinguishable:
            return (_fock(2, 0) + _fock(0, 2)) / math.sqrt(2)
        return 0.5 * _fock(2, 0) + _fock(1, 1) / math.sqrt(2) + 0.5 * _fock(0, 2)
    raise ValueError(f"photon number {n} exceeds the two-photon truncation")


def absorption_unitary(absorb: float) -> np.ndarray:
    """Partial swap between a ground-state atom and its arm's photons.

    Acts on atom (3) x mode (3). ``|0,1> -> sqrt(A)|e,0> + sqrt(1-A)|0,1>``
    and ``|0,2> -> sqrt(1-(1-A)^2)|e,1> + (1-A)|0,2>``. The partner states
    ``|e,0>`` and ``|e,1>`` only complete the rotations so the map stays
    unitary; atoms enter in the ground state, so they are never populated
    on input.
    """
    u = np.eye(ATOM_DIM * FOCK_DIM, dtype=complex)

    def idx(level, n):
        return level * FOCK_DIM + n

    def rotate(src, dst, c, s):
        u[src, src], u[dst, src] = c, s
        u[src, dst], u[dst, dst] = -s, c

    rotate(idx(GROUND, 1), idx(EXCITED, 0), math.sqrt(1 - absorb), math.sqrt(absorb))
    stay = 1 - absorb
    rotate(idx(GROUND, 2), idx(EXCITED, 1), stay, math.sqrt(1 - stay**2))
    return u


def path_phase(delta: float) -> np.ndarray:
    """Phase picked up by atom 1: e^{i delta} on ground, e^{-i delta} otherwise."""
    return np.diag([np.exp(1j * delta), np.exp(-1j * delta), np.exp(-1j * delta)])


def pi_pulse() -> np.ndarray:
    u = np.zeros((ATOM_DIM, ATOM_DIM), dtype=complex)
    u[GROUND, GROUND] = 1
    u[EXCITED, META] = u[META, EXCITED] = 1
    return u


def initial_state(source: SourceModel) -> DensityOp:
    atoms = np.zeros(ATOM_DIM * ATOM_DIM, dtype=complex)
    atoms[GROUND * ATOM_DIM + GROUND] = 1
    rho = np.zeros((81, 81), dtype=complex)
    for n, p in enumerate((source.p0, source.p1, source.p2)):
        if p > 0:
            v = np.kron(atoms, beamsplitter_output(n, source.indistinguishable))
            rho += p * np.outer(v, v.conj())
    return DensityOp(rho, FULL_DIMS, normalized=True)


def _qubit_block(atoms: DensityOp) -> np.ndarray:
    keep = [GROUND * ATOM_DIM + GROUND, GROUND * ATOM_DIM + META,
            META * ATOM_DIM + GROUND, META * ATOM_DIM + META]
    return atoms.elements[np.ix_(keep, keep)]


def simulate_resource(node: NodeParams, source: SourceModel = IDEAL_SOURCE,
                      detectors: DetectorModel = NO_DETECTORS) -> ResourceOutcome:
    """Run one photon trial and return the accepted broker-pair state."""
    rho = initial_state(source)
    absorb = KrausSet(
        (embed(absorption_unitary(node.A1), FULL_DIMS, [ATOM1, MODE1])
         @ embed(absorption_unitary(node.A2), FULL_DIMS, [ATOM2, MODE2]),),
        label="absorb", trace_preserving=True,
    )
    rho = apply_kraus(rho, absorb)
    pulse = pi_pulse()
    atoms_u = np.kron(pulse @ path_phase(node.delta), pulse)
    rho = apply_kraus(rho, unitary_set(embed(atoms_u, FULL_DIMS, [ATOM1, ATOM2]), "pi-pulse"))
    if detectors.present:
        v = noclick_kraus(detectors).operators[0]
        rho = branch(rho, KrausSet((embed(np.kron(v, v), FULL_DIMS, [MODE1, MODE2]),), "no-click"))
        if rho is None:
            return ResourceOutcome(0.0, None, 0.0)
    accept = rho.trace
    atoms = partial_trace(rho, FULL_DIMS, keep=[ATOM1, ATOM2])
    excited = sum(
        atoms.elements[i * ATOM_DIM + j, i * ATOM_DIM + j].real
        for i in range(ATOM_DIM) for j in range(ATOM_DIM) if EXCITED in (i, j)
    )
    if excited > 1e-12:
        raise RuntimeError(f"excited-state population {excited:.3e} left after the pi pulse")
    if accept < 1e-15:
        return ResourceOutcome(0.0, None, 0.0)
    block = _qubit_block(atoms) / accept
    state = DensityOp(block, (2, 2), normalized=True)
    bell_weight = float(block[1, 1].real + block[2, 2].real)
    return ResourceOutcome(min(accept, 1.0), state, bell_weight)


def conditioned_bell_weight(mean_absorption: float, detectors: DetectorModel) -> float | None:
    """Bell weight of the accepted resource for a perfect source.

    ``None`` when acceptance is impossible (no absorption, perfect detectors).
    """
    p = mean_absorption
    if not detectors.present:
        return p
    denom = p + (1 - p) * (1 - detectors.eta)
    if denom <= 0:
        return None
    return p / denom


def acceptance_probability(mean_absorption: float, detectors: DetectorModel) -> float:
    """Probability that neither detector clicks, perfect source."""
    if not detectors.present:
        return 1.0
    p = mean_absorption
    return (1 - detectors.dark) ** 2 * (p + (1 - p) * (1 - detectors.eta))
