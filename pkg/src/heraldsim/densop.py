"""Dense density-operator algebra.

Everything here works on small, exact, complex128 matrices. States may be
sub-normalized: a branch of a measurement keeps its probability as its trace
until someone explicitly renormalizes it.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DIM_CAP = 256

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
TRACE_TOL = 1e-12
NORM_TOL = 1e-10
KRAUS_TOL = 1e-10


class DimensionError(ValueError):
    pass


def _as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class DensityOp:
    """Possibly sub-normalized density operator.

    Parameters
    ----------
    elements : array_like
        ``dim x dim`` complex matrix.
    dims : tuple of int, optional
        Subsystem dimensions, product must equal ``dim``. Defaults to a
        single subsystem.
    normalized : bool
        Whether the trace is asserted to be one.

    Construction checks Hermiticity and the trace range, then symmetrizes.
    Positivity is checked by :meth:`check` (an eigendecomposition), which is
    too expensive to run on every intermediate state.
    """

    elements: np.ndarray
    dims: tuple = field(default=())
    normalized: bool = False

    def __post_init__(self):
        m = _as_matrix(self.elements)
        n = m.shape[0]
        if n > DIM_CAP:
            raise DimensionError(f"dimension {n} exceeds cap {DIM_CAP}")
        dims = tuple(int(d) for d in self.dims) or (n,)
        if int(np.prod(dims)) != n:
            raise DimensionError(f"subsystem dims {dims} do not multiply to {n}")
        herm_dev = np.max(np.abs(m - m.conj().T)) if n else 0.0
        if herm_dev > HERMITIAN_TOL:
            raise ValueError(f"operator is not Hermitian (deviation {herm_dev:.3e})")
        m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        tr = float(np.trace(m).real)
        if tr <= 0 or tr > 1 + TRACE_TOL:
            raise ValueError(f"trace {tr!r} outside (0, 1]")
        if self.normalized and abs(tr - 1) > NORM_TOL:
            raise ValueError(f"normalized state has trace {tr!r}")
        object.__setattr__(self, "elements", m)
        object.__setattr__(self, "dims", dims)

    @property
    def dim(self) -> int:
        return self.elements.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.elements).real)

    def normalize(self) -> "DensityOp":
        return DensityOp(self.elements / self.trace, self.dims, normalized=True)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.elements)[0])

    def check(self) -> None:
        """Raise ``ValueError`` unless the state is positive semidefinite."""
        lam = self.min_eigenvalue()
        if lam < -PSD_TOL:
            raise ValueError(f"state is not positive semidefinite (min eigenvalue {lam:.3e})")

    def is_valid(self) -> bool:
        try:
            self.check()
        except ValueError:
            return False
        return True

    def purity(self) -> float:
        return float(np.real(np.trace(self.elements @ self.elements))) / self.trace**2

    def __repr__(self):
        flag = "normalized" if self.normalized else f"trace={self.trace:.6g}"
        return f"DensityOp(dims={self.dims}, {flag})"


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=complex).ravel()
        if abs(np.vdot(v, v).real - 1) > 1e-12:
            raise ValueError("pure state must have unit norm")
        v.setflags(write=False)
        object.__setattr__(self, "amplitudes", v)

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def dm(self, dims: Sequence[int] = ()) -> DensityOp:
        v = self.amplitudes
        return DensityOp(np.outer(v, v.conj()), tuple(dims), normalized=True)


@dataclass(frozen=True)
class KrausSet:
    """Labeled list of Kraus operators.

    ``trace_preserving`` asks for sum K^dag K == 1; otherwise it only has to
    be bounded by the identity.
    """

    operators: tuple
    label: object = None
    trace_preserving: bool = False

    def __post_init__(self):
        ops = tuple(_as_kraus_op(k) for k in self.operators)
        if not ops:
            raise ValueError("empty Kraus set")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise DimensionError("Kraus operators must share one shape")
        object.__setattr__(self, "operators", ops)
        gram = self.gram()
        n = gram.shape[0]
        lam_max = np.linalg.eigvalsh(gram - np.eye(n))[-1]
        if lam_max > KRAUS_TOL:
            raise ValueError(f"Kraus set exceeds identity (excess {lam_max:.3e})")
        if self.trace_preserving and np.max(np.abs(gram - np.eye(n))) > KRAUS_TOL:
            raise ValueError("Kraus set flagged trace preserving but sum K^dag K != 1")

    @property
    def dim(self) -> int:
        return self.operators[0].shape[1]

    def gram(self) -> np.ndarray:
        return sum(k.conj().T @ k for k in self.operators)


def _as_kraus_op(k) -> np.ndarray:
    arr = np.asarray(k, dtype=complex)
    if arr.ndim != 2:
        raise DimensionError(f"Kraus operator must be a matrix, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


# --- constructors -----------------------------------------------------------

def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1
    return v


def basis_dm(indices: Sequence[int], dims: Sequence[int]) -> DensityOp:
    """Product basis state |i1 i2 ...><i1 i2 ...|."""
    v = np.array([1], dtype=complex)
    for i, d in zip(indices, dims):
        v = np.kron(v, ket(i, d))
    return PureState(v).dm(dims)


def pure_dm(amplitudes, dims: Sequence[int] = ()) -> DensityOp:
    v = np.asarray(amplitudes, dtype=complex).ravel()
    return PureState(v / np.linalg.norm(v)).dm(dims)


def maximally_mixed(dim: int) -> DensityOp:
    return DensityOp(np.eye(dim) / dim, normalized=True)


def unitary_set(u, label=None) -> KrausSet:
    return KrausSet((u,), label=label, trace_preserving=True)


def embed(op, dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Lift ``op`` acting on subsystems ``targets`` to the full space.

    ``targets`` must be listed in the order the factors of ``op`` are laid out.
    """
    dims = list(dims)
    targets = list(targets)
    op = np.asarray(op, dtype=complex)
    n = len(dims)
    tdims = [dims[t] for t in targets]
    dt = int(np.prod(tdims))
    if op.shape != (dt, dt):
        raise DimensionError(f"operator shape {op.shape} does not match targets {tdims}")
    rest = [i for i in range(n) if i not in targets]
    rdim = int(np.prod([dims[i] for i in rest])) if rest else 1
    full = np.kron(op, np.eye(rdim))
    # full currently acts on (targets..., rest...); permute to natural order
    order = targets + rest
    perm_dims = [dims[i] for i in order]
    t = full.reshape(perm_dims * 2)
    inv = np.argsort(order)
    t = t.transpose(list(inv) + [n + i for i in inv])
    D = int(np.prod(dims))
    return t.reshape(D, D)


# --- operations -------------------------------------------------------------

def tensor(a: DensityOp, b: DensityOp) -> DensityOp:
    if a.dim * b.dim > DIM_CAP:
        raise DimensionError(f"tensor product dimension {a.dim * b.dim} exceeds cap {DIM_CAP}")
    return DensityOp(
        np.kron(a.elements, b.elements),
        a.dims + b.dims,
        normalized=a.normalized and b.normalized,
    )


def partial_trace(rho: DensityOp, subsystem_dims: Sequence[int] | None = None,
                  keep: Sequence[int] = ()) -> DensityOp:
    """Trace out every subsystem not listed in ``keep``.

    Kept subsystems come back in ascending index order.
    """
    dims = tuple(subsystem_dims) if subsystem_dims is not None else rho.dims
    if int(np.prod(dims)) != rho.dim:
        raise DimensionError(f"subsystem dims {dims} inconsistent with dimension {rho.dim}")
    n = len(dims)
    keep = sorted(set(keep))
    if any(k < 0 or k >= n for k in keep):
        raise DimensionError(f"keep indices {keep} out of range for {n} subsystems")
    if len(keep) == n:
        return DensityOp(rho.elements, dims, rho.normalized)
    t = rho.elements.reshape(dims * 2)
    traced = [i for i in range(n) if i not in keep]
    row = "".join(chr(97 + i) for i in range(n))
    col = "".join(chr(97 + i) if i in traced else chr(65 + i) for i in range(n))
    out = "".join(chr(97 + i) for i in keep) + "".join(chr(65 + i) for i in keep)
    kept_dims = tuple(dims[i] for i in keep)
    dk = int(np.prod(kept_dims)) if keep else 1
    m = np.einsum(f"{row}{col}->{out}", t).reshape(dk, dk)
    return DensityOp(m, kept_dims or (1,), rho.normalized)


def apply_kraus(rho: DensityOp, k: KrausSet) -> DensityOp:
    """Return sum_i K_i rho K_i^dag (not renormalized)."""
    if k.dim != rho.dim or k.operators[0].shape[0] != rho.dim:
        raise DimensionError(f"Kraus dimension {k.operators[0].shape} does not match state {rho.dim}")
    out = sum(K @ rho.elements @ K.conj().T for K in k.operators)
    return DensityOp(out, rho.dims, normalized=rho.normalized and k.trace_preserving)


def branch(rho: DensityOp, k: KrausSet) -> DensityOp | None:
    """Like :func:`apply_kraus` but returns ``None`` for a zero-weight branch."""
    if k.dim != rho.dim:
        raise DimensionError(f"Kraus dimension {k.dim} does not match state {rho.dim}")
    out = sum(K @ rho.elements @ K.conj().T for K in k.operators)
    if np.trace(out).real <= 0:
        return None
    return DensityOp(out, rho.dims)


def measure(rho: DensityOp, projectors: Sequence[KrausSet]) -> list[tuple[float, DensityOp | None]]:
    """Measure ``rho`` with a complete set of outcomes.

    Returns ``(probability, post_state)`` per outcome. Post-states are
    normalized, or ``None`` when the probability is below 1e-12. The
    probabilities sum to ``rho.trace``.
    """
    total = sum(p.gram() for p in projectors)
    if np.max(np.abs(total - np.eye(rho.dim))) > KRAUS_TOL:
        raise ValueError("measurement operators are not complete")
    results = []
    for p in projectors:
        out = sum(K @ rho.elements @ K.conj().T for K in p.operators)
        prob = float(np.trace(out).real)
        if prob > 1e-12:
            results.append((prob, DensityOp(out / prob, rho.dims, normalized=True)))
        else:
            results.append((prob, None))
    return results


def z_projectors(dims: Sequence[int], target: int) -> list[KrausSet]:
    """Computational-basis projectors on one subsystem."""
    d = dims[target]
    return [
        KrausSet((embed(np.outer(ket(i, d), ket(i, d)), dims, [target]),), label=i)
        for i in range(d)
    ]


def max_abs_diff(a, b) -> float:
    a = a.elements if isinstance(a, DensityOp) else np.asarray(a)
    b = b.elements if isinstance(b, DensityOp) else np.asarray(b)
    return float(np.max(np.abs(a - b)))
