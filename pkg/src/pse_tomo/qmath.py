"""Dense complex linear algebra and the standard gates and states used everywhere else.

Matrices are plain ``numpy`` arrays of dtype ``complex128``; kets are 1-d
arrays.  Nothing in the package mutates an array it was handed.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidState, NonHermitian, NotUnitary


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10
    oracle: float = 1e-9
    vanishing: float = 1e-12


TOL = Tolerances()

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)

# Probe measurement states in the fixed order used by every probability table.
PROBE_LABELS = ("+", "-", "+i", "-i")
PROBE_STATES = np.array(
    [[1, 1], [1, -1], [1, 1j], [1, -1j]], dtype=complex
) / np.sqrt(2)


def as_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch("expected a 2-d array", shape=list(a.shape))
    return a


def as_ket(v) -> np.ndarray:
    a = np.asarray(v, dtype=complex).reshape(-1)
    return a


def basis(d: int, i: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[i] = 1.0
    return e


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def ketbra(a: np.ndarray, b: np.ndarray | None = None) -> np.ndarray:
    b = a if b is None else b
    return np.outer(a, np.conj(b))


def tensor(*ops) -> np.ndarray:
    """Kronecker product of any number of matrices or kets, left to right."""
    return reduce(np.kron, [np.asarray(o, dtype=complex) for o in ops])


def partial_trace(m, dims: Sequence[int], keep) -> np.ndarray:
    """Trace out every subsystem of ``m`` not listed in ``keep``.

    ``dims`` lists the subsystem dimensions in tensor order; the kept
    subsystems stay in their original order.
    """
    m = as_matrix(m)
    dims = [int(d) for d in dims]
    n = int(np.prod(dims))
    if m.shape != (n, n):
        raise DimensionMismatch(
            "matrix shape does not match subsystem dimensions",
            shape=list(m.shape), dims=dims,
        )
    keep = sorted({int(k) for k in np.atleast_1d(keep)})
    if any(k < 0 or k >= len(dims) for k in keep):
        raise DimensionMismatch("subsystem index out of range", keep=keep, dims=dims)
    nsub = len(dims)
    t = m.reshape(dims + dims)
    # einsum labels: row indices 0..nsub-1, column indices nsub..2nsub-1
    row = list(range(nsub))
    col = [nsub + a if a in keep else a for a in range(nsub)]
    out = [a for a in keep] + [nsub + a for a in keep]
    r = np.einsum(t, row + col, out)
    dk = int(np.prod([dims[a] for a in keep])) if keep else 1
    return r.reshape(dk, dk)


def is_hermitian(m, tol: float = TOL.structural) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - dag(m)), initial=0.0) <= tol


def is_unitary(u, tol: float = TOL.structural) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return np.max(np.abs(dag(u) @ u - np.eye(u.shape[0])), initial=0.0) <= tol


def is_density(rho, tol: float = TOL.structural) -> bool:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or not is_hermitian(rho, tol):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return np.linalg.eigvalsh((rho + dag(rho)) / 2).min() >= -tol


def check_unitary(u, name: str = "U") -> np.ndarray:
    u = as_matrix(u)
    if not is_unitary(u):
        dev = float(np.max(np.abs(dag(u) @ u - np.eye(u.shape[0])))) if u.shape[0] == u.shape[1] else None
        raise NotUnitary(f"{name} is not unitary", name=name, shape=list(u.shape), deviation=dev)
    return u


def check_density(rho, name: str = "rho") -> np.ndarray:
    rho = as_matrix(rho)
    if not is_density(rho):
        raise InvalidState(f"{name} is not a density matrix", name=name, shape=list(rho.shape))
    return rho


def check_hermitian(a, name: str = "A") -> np.ndarray:
    a = as_matrix(a)
    if not is_hermitian(a):
        raise NonHermitian(f"{name} is not Hermitian", name=name, shape=list(a.shape))
    return a


def check_normalized(v, name: str = "ket") -> np.ndarray:
    v = as_ket(v)
    if abs(np.linalg.norm(v) - 1) > TOL.structural:
        raise InvalidState(f"{name} is not normalized", name=name, norm=float(np.linalg.norm(v)))
    return v


def hadamard_like(d: int) -> np.ndarray:
    """The d-dimensional DFT matrix; every entry has modulus 1/sqrt(d)."""
    k = np.arange(d)
    return np.exp(2j * np.pi * np.outer(k, k) / d) / np.sqrt(d)


def shift_gate(d: int, n: int = 1) -> np.ndarray:
    """Generalized Pauli X to the power n: |i> -> |(i + n) mod d>."""
    x = np.zeros((d, d), dtype=complex)
    i = np.arange(d)
    x[(i + n) % d, i] = 1.0
    return x


def coherent_projector_unitary(d: int, theta: float = np.pi / 2) -> np.ndarray:
    """exp(i theta |b0><b0|) for the maximally coherent state |b0>.

    An alternative to :func:`hadamard_like` as the fixed probe-arm unitary;
    all of its entries are nonzero unless ``1 + (exp(i theta) - 1)/d`` vanishes.
    """
    b0 = np.full(d, 1 / np.sqrt(d), dtype=complex)
    return np.eye(d, dtype=complex) + (np.exp(1j * theta) - 1) * ketbra(b0)


def unitary_exponential(a, theta: float) -> np.ndarray:
    """exp(-i theta A) for Hermitian A, via the eigendecomposition."""
    a = check_hermitian(a)
    w, v = np.linalg.eigh((a + dag(a)) / 2)
    return (v * np.exp(-1j * theta * w)) @ dag(v)


def _rng(seed) -> np.random.Generator:
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random unitary: QR of a complex Ginibre matrix with the R-diagonal phases removed."""
    rng = _rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_density(d: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ dag(g)
    rho = (rho + dag(rho)) / 2
    return rho / np.trace(rho).real


def random_hermitian(d: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + dag(g)) / 2


def random_ket(d: int, seed=None) -> np.ndarray:
    rng = _rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def random_dilation(d_s: int, d_e: int, seed=None) -> np.ndarray:
    return random_unitary(d_s * d_e, seed)


def complete_to_unitary(isometry: np.ndarray) -> np.ndarray:
    """Extend an n x m isometry (orthonormal columns) to an n x n unitary."""
    v = as_matrix(isometry)
    n, m = v.shape
    # orthonormal complement from the SVD of the projector onto the complement
    u, s, _ = np.linalg.svd(np.eye(n) - v @ dag(v))
    comp = u[:, : n - m]
    return np.hstack([v, comp])
