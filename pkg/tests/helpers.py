import numpy as np
from hypothesis import strategies as st

from heraldsim.densop import DensityOp, pure_dm


def random_pure(rng, n_qubits=2):
    dim = 2**n_qubits
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return pure_dm(v, (2,) * n_qubits)


def random_mixed(rng, dim=4, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return DensityOp(m / np.trace(m).real, normalized=True)


def random_unitary(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def statevector_round(psi_clients, psi_brokers):
    """Brute-force oracle for one protocol round on pure inputs.

    Loops over the 16 basis states of (c1, c2, b1, b2), applies the two
    CNOTs by index arithmetic, and collects the unnormalized client vector
    for every broker outcome.
    """
    out = {(m1, m2): np.zeros(4, dtype=complex) for m1 in (0, 1) for m2 in (0, 1)}
    for c1 in (0, 1):
        for c2 in (0, 1):
            for b1 in (0, 1):
                for b2 in (0, 1):
                    amp = psi_clients[2 * c1 + c2] * psi_brokers[2 * b1 + b2]
                    out[(b1 ^ c1, b2 ^ c2)][2 * c1 + c2] += amp
    return out


seeds = st.integers(min_value=0, max_value=2**32 - 1)
probabilities = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
phases = st.floats(min_value=-np.pi, max_value=np.pi, allow_nan=False)
