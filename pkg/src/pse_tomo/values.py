"""Weak and modular values, read out through the extraction identity.

With U_S = I, U_SE = I and rho_S = |psi><psi| the extraction returns
``<phi|U~|psi><psi|phi>``, so dividing by ``|<phi|psi>|^2`` gives the
modular value of U~.  Weak values follow either from small-step
differences of modular values or, exactly, by solving for the moments
``<A^n_w>`` from modular values at a handful of finite couplings.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import DegenerateSpectrum, DimensionMismatch, IllConditioned, OrthogonalPostselection, ZeroStep
from .framework import DilationConfig, TripartiteSystem, extract_element, kraus_from_dilation
from .qmath import (
    as_ket,
    check_hermitian,
    check_normalized,
    check_unitary,
    ketbra,
    unitary_exponential,
)

OVERLAP_TOL = 1e-10
GAP_TOL = 1e-8
COND_LIMIT = 1e8

Method = Literal["first_order", "second_order", "exact_spectral"]


@dataclass(frozen=True)
class WeakValueRequest:
    """A weak-value query.

    The coupling enters as U~ = exp(-i theta1 A) exp(+i theta2 A), so the
    effective step is ``theta1 - theta2``.  ``eigenvalues`` (the known
    spectrum) and ``theta_grid`` are only read by the exact spectral method.
    """

    observable: np.ndarray
    pre_state: np.ndarray
    post_state: np.ndarray
    theta1: float = 1e-2
    theta2: float = 0.0
    method: Method = "second_order"
    eigenvalues: Sequence[float] | None = None
    theta_grid: Sequence[float] | None = None

    def __post_init__(self):
        object.__setattr__(self, "observable", check_hermitian(self.observable, "A"))
        psi = check_normalized(self.pre_state, "pre_state")
        phi = check_normalized(self.post_state, "post_state")
        object.__setattr__(self, "pre_state", psi)
        object.__setattr__(self, "post_state", phi)
        _check_overlap(psi, phi)

    @property
    def delta_theta(self) -> float:
        return float(self.theta1 - self.theta2)

    @property
    def direct(self) -> complex:
        """<phi|A|psi>/<phi|psi> computed straight from the matrices."""
        phi, psi = self.post_state, self.pre_state
        return complex(np.vdot(phi, self.observable @ psi) / np.vdot(phi, psi))


@dataclass(frozen=True)
class WeakMomentSet:
    """Weak moments <A^n_w>, n = 1 .. d-1, from the exact spectral solve."""

    moments: np.ndarray
    condition_number: float
    thetas: np.ndarray

    @property
    def weak_value(self) -> complex:
        return complex(self.moments[0])


def _check_overlap(psi, phi) -> complex:
    ov = complex(np.vdot(phi, psi))
    if abs(ov) <= OVERLAP_TOL:
        raise OrthogonalPostselection("pre- and post-selected states are orthogonal", overlap=ov)
    return ov


def modular_from_unitary(u_tilde, psi, phi, route: str = "extraction") -> complex:
    """<phi|U~|psi>/<phi|psi> for an arbitrary unitary U~."""
    psi = check_normalized(psi, "psi")
    phi = check_normalized(phi, "phi")
    ov = _check_overlap(psi, phi)
    u = check_unitary(u_tilde, "U_tilde_S")
    if route == "direct":
        return complex(np.vdot(phi, u @ psi) / ov)
    d = u.shape[0]
    sys_ = TripartiteSystem(ketbra(psi), 1)
    x = extract_element(sys_, DilationConfig(np.eye(d), u, np.eye(d)), phi, 0)
    # x = <phi|U~|psi><psi|phi>
    return complex(x / np.conj(ov) / ov)


def modular_value(a, theta: float, psi, phi, route: str = "extraction") -> complex:
    """Modular value <phi|exp(-i theta A)|psi>/<phi|psi>.

    ``route="extraction"`` reads it off simulated probe statistics with
    U~_S = exp(-i theta A) and U_S = I; ``route="direct"`` multiplies the
    matrices.  Both must agree.
    """
    return modular_from_unitary(unitary_exponential(a, theta), psi, phi, route)


def weak_value_first_order(req: WeakValueRequest) -> complex:
    """(1/(i dtheta)) [1 - M], M the modular value of exp(-i theta1 A) exp(i theta2 A).

    Error is -i dtheta <A^2_w>/2 + O(dtheta^2).
    """
    dt = _step(req)
    u = unitary_exponential(req.observable, req.theta1) @ unitary_exponential(req.observable, -req.theta2)
    m = modular_from_unitary(u, req.pre_state, req.post_state)
    return complex((1 - m) / (1j * dt))


def weak_value_second_order(req: WeakValueRequest) -> complex:
    """(1/(2i dtheta)) [M(U~^dag) - M(U~)]; the even-order terms cancel."""
    dt = _step(req)
    u = unitary_exponential(req.observable, req.theta1) @ unitary_exponential(req.observable, -req.theta2)
    m_plus = modular_from_unitary(u.conj().T, req.pre_state, req.post_state)
    m_minus = modular_from_unitary(u, req.pre_state, req.post_state)
    return complex((m_plus - m_minus) / (2j * dt))


def _step(req: WeakValueRequest) -> float:
    dt = req.delta_theta
    if abs(dt) <= 1e-14:
        raise ZeroStep("theta1 and theta2 coincide", theta1=req.theta1, theta2=req.theta2)
    return dt


def lagrange_coefficients(eigenvalues, theta: float) -> np.ndarray:
    """c_n(theta) with exp(-i theta A) = sum_n c_n A^n, n = 0 .. d-1.

    Solves the Vandermonde system sum_n c_n lambda_k^n = exp(-i lambda_k theta).
    """
    lam = np.asarray(eigenvalues, dtype=float)
    v = np.vander(lam, increasing=True)
    return np.linalg.solve(v.astype(complex), np.exp(-1j * lam * theta))


def default_theta_grid(eigenvalues, shift: bool = False) -> np.ndarray:
    """d - 1 equispaced samples on (0, pi/(1 + spectral radius))."""
    lam = np.asarray(eigenvalues, dtype=float)
    d = len(lam)
    s = np.arange(1, d) + (0.5 if shift else 0.0)
    return s / d * np.pi / (1 + np.max(np.abs(lam)))


def weak_value_exact_spectral(req: WeakValueRequest) -> WeakMomentSet:
    """Every weak moment <A^n_w> from d - 1 finite-coupling modular values.

    For each sample theta_s, M(theta_s) = c_0 + sum_{n>=1} c_n(theta_s) <A^n_w>,
    which is linear in the moments.  No small-coupling expansion is used.
    """
    a = req.observable
    lam = np.linalg.eigvalsh(a) if req.eigenvalues is None else np.sort(np.asarray(req.eigenvalues, float))
    if len(lam) != a.shape[0]:
        raise DegenerateSpectrum("need one eigenvalue per dimension", given=len(lam), d=a.shape[0])
    gap = np.min(np.diff(np.sort(lam)), initial=np.inf)
    if gap <= GAP_TOL:
        raise DegenerateSpectrum("spectrum is degenerate", min_gap=float(gap) if np.isfinite(gap) else 0.0)
    d = len(lam)
    if d == 1:
        return WeakMomentSet(np.array([complex(lam[0])]), 1.0, np.zeros(0))

    grids = [np.asarray(req.theta_grid, float)] if req.theta_grid is not None else [
        default_theta_grid(lam), default_theta_grid(lam, shift=True)
    ]
    cond = np.inf
    for thetas in grids:
        if thetas.shape != (d - 1,):
            raise DimensionMismatch("theta grid must have d - 1 samples", d=d, given=int(thetas.size))
        c = np.array([lagrange_coefficients(lam, t) for t in thetas])
        cond = float(np.linalg.cond(c[:, 1:]))
        if cond <= COND_LIMIT:
            break
    else:
        raise IllConditioned("moment system is ill-conditioned", condition_number=cond, thetas=thetas)
    m = np.array([modular_value(a, t, req.pre_state, req.post_state) for t in thetas])
    moments = np.linalg.solve(c[:, 1:], m - c[:, 0])
    return WeakMomentSet(moments, cond, thetas)


def weak_value(req: WeakValueRequest) -> complex:
    """Dispatch on ``req.method`` and return the (first) weak value."""
    if req.method == "first_order":
        return weak_value_first_order(req)
    if req.method == "second_order":
        return weak_value_second_order(req)
    if req.method == "exact_spectral":
        return weak_value_exact_spectral(req).weak_value
    raise ValueError(f"unknown method {req.method!r}")


def kraus_weak_value(u_se, xi, k: int, psi, phi, chi=None) -> complex:
    """<phi|A_k|psi>/<phi|psi> with U_S = U~_S = I.

    The extraction gives <phi|A_k|psi><psi|phi>; the dilation supplies A_k.
    """
    psi = check_normalized(psi, "psi")
    phi = check_normalized(phi, "phi")
    ov = _check_overlap(psi, phi)
    xi = check_normalized(xi, "xi")
    u_se = check_unitary(u_se, "U_SE")
    d_e = xi.shape[0]
    d_s = u_se.shape[0] // d_e
    kw = {} if chi is None else {"probe_state": chi}
    sys_ = TripartiteSystem(ketbra(psi), d_e, env_state=xi, **kw)
    x = extract_element(sys_, DilationConfig(np.eye(d_s), np.eye(d_s), u_se), phi, k)
    return complex(x / np.conj(ov) / ov)


def kraus_weak_value_direct(u_se, xi, k: int, psi, phi) -> complex:
    psi, phi = as_ket(psi), as_ket(phi)
    ov = _check_overlap(psi, phi)
    return complex(np.vdot(phi, kraus_from_dilation(u_se, xi, k) @ psi) / ov)
