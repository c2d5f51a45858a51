"""Two-round parity projection on the logical (client) qubits.

One round: at each node a CNOT from the client onto the broker, then a
Z measurement of the broker. A Bell-type broker pair turns this into an
impure parity projection on the clients; the ground component turns it into
a Z measurement of both clients. Two rounds whose broker outcomes are
bitwise complementary leave only the Bell x Bell contribution, and in that
product the asymmetry and path-phase factors multiply out to a scalar.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .densop import DensityOp, KrausSet, apply_kraus, branch, embed, ket, tensor
from .photonics import (
    DetectorModel,
    NO_DETECTORS,
    NodeParams,
    ResourceOutcome,
    conditioned_bell_weight,
)

# subsystem order during a round
CLIENT1, CLIENT2, BROKER1, BROKER2 = range(4)
ROUND_DIMS = (2, 2, 2, 2)

_CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
_ROUND_CIRCUIT = KrausSet(
    (embed(_CNOT, ROUND_DIMS, [CLIENT1, BROKER1]) @ embed(_CNOT, ROUND_DIMS, [CLIENT2, BROKER2]),),
    label="cnot", trace_preserving=True,
)
# branches lighter than this are treated as impossible
NEGLIGIBLE = 1e-14
OUTCOMES = tuple(itertools.product((0, 1), repeat=2))


def _broker_outcome_kraus(m: tuple[int, int]) -> KrausSet:
    """Project the brokers onto |m1 m2> and discard them."""
    # <m1 m2|_brokers as a 4x16 map from the round space to the client space
    bra = np.kron(np.eye(4), np.kron(ket(m[0], 2), ket(m[1], 2)).reshape(1, 4))
    return KrausSet((bra,), label=m)


_OUTCOME_KRAUS = {m: _broker_outcome_kraus(m) for m in OUTCOMES}


def parity_projector(parity: str) -> np.ndarray:
    if parity == "even":
        return np.diag([1, 0, 0, 1]).astype(complex)
    if parity == "odd":
        return np.diag([0, 1, 1, 0]).astype(complex)
    raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")


def herald(m: tuple[int, int], n: tuple[int, int]) -> bool:
    """Accept iff the second round's outcomes complement the first's."""
    return n[0] == 1 - m[0] and n[1] == 1 - m[1]


def herald_parity(m: tuple[int, int]) -> str:
    """Parity projected onto by a heralded pair whose first outcome is ``m``."""
    return "even" if m[0] ^ m[1] else "odd"


def _resource_state(resource) -> DensityOp:
    if isinstance(resource, ResourceOutcome):
        if resource.state is None:
            raise ValueError("resource trial is never accepted, no state to consume")
        return resource.state
    return resource


def run_round(clients: DensityOp, resource) -> list[tuple[tuple[int, int], DensityOp | None]]:
    """One parity-check round.

    Returns the four broker outcomes with the matching sub-normalized client
    state (``None`` for an impossible outcome). Traces add up to
    ``clients.trace``.
    """
    res = _resource_state(resource)
    if clients.dim != 4 or res.dim != 4:
        raise ValueError(f"expected two-qubit clients and brokers, got dims {clients.dim}, {res.dim}")
    full = tensor(DensityOp(clients.elements, (2, 2)), DensityOp(res.elements, (2, 2)))
    full = apply_kraus(full, _ROUND_CIRCUIT)
    out = []
    for m in OUTCOMES:
        k = _OUTCOME_KRAUS[m]
        rho = k.operators[0] @ full.elements @ k.operators[0].conj().T
        if np.trace(rho).real > NEGLIGIBLE:
            out.append((m, DensityOp(rho, (2, 2))))
        else:
            out.append((m, None))
    return out


@dataclass(frozen=True)
class Branch:
    m: tuple[int, int]
    n: tuple[int, int]
    probability: float
    state: DensityOp
    parity: str | None = None


@dataclass(frozen=True)
class PppResult:
    p_success: float
    p_failure: float
    branches: tuple = field(default=())
    failures: tuple = field(default=())

    def success_state(self) -> DensityOp | None:
        """Probability-weighted mixture of the heralded branches (no relabeling)."""
        return _mix(self.branches)

    def failure_state(self) -> DensityOp | None:
        """What the clients hold after a failure whose outcome record is discarded."""
        return _mix(self.failures)

    def branch_for(self, m, n) -> Branch | None:
        for b in self.branches + self.failures:
            if b.m == tuple(m) and b.n == tuple(n):
                return b
        return None


def _mix(branches) -> DensityOp | None:
    total = sum(b.probability for b in branches)
    if total <= 0:
        return None
    m = sum(b.probability * b.state.elements for b in branches) / total
    return DensityOp(m, (2, 2), normalized=True)


def run_ppp(clients: DensityOp, round1, round2=None) -> PppResult:
    """Two rounds on fresh resources, partitioned by the herald rule.

    ``round2`` defaults to ``round1`` (an independent draw with the same
    parameters). Passing a different one models drift between rounds.
    """
    if round2 is None:
        round2 = round1
    norm = clients.trace
    heralded, failed = [], []
    for m, after_first in run_round(clients, round1):
        if after_first is None:
            continue
        for n, after_second in run_round(after_first, round2):
            if after_second is None:
                continue
            prob = after_second.trace / norm
            state = after_second.normalize()
            if herald(m, n):
                heralded.append(Branch(m, n, prob, state, herald_parity(m)))
            else:
                failed.append(Branch(m, n, prob, state))
    p_success = sum(b.probability for b in heralded)
    return PppResult(p_success, 1.0 - p_success, tuple(heralded), tuple(failed))


def success_probability_analytic(node: NodeParams, detectors: DetectorModel = NO_DETECTORS) -> float:
    """Closed-form heralded success probability for a perfect source.

    Conditioned on both rounds' resources having been accepted. Zero when
    acceptance is impossible.
    """
    w = conditioned_bell_weight(node.mean_absorption, detectors)
    if w is None:
        return 0.0
    return math.cos(2 * node.phi) ** 2 / 2 * w**2


def project_parity(clients: DensityOp, parity: str) -> DensityOp | None:
    """Ideal parity projection, renormalized; ``None`` if it annihilates the state."""
    out = branch(clients, KrausSet((parity_projector(parity),), label=parity))
    return None if out is None or out.trace < 1e-14 else out.normalize()
