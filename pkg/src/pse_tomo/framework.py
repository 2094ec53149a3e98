"""Probe-system-environment dilation, its evolution, and the extraction identity.

The probe is a qubit that controls which branch the system takes:

    U_PSE = |0><0| (x) U_S (x) I_E  +  |1><1| (x) U_SE (U~_S (x) I_E)

Measuring the probe in the sigma_x and sigma_y eigenbases, the system
projectively on |phi>, and the environment on |k>, the combination

    [p(+) - p(-)] + i [p(+i) - p(-i)]  =  N_PSE <phi| A_k U~_S rho_S U_S^dag |phi>

holds exactly, with N_PSE = 2 <chi|0><1|chi><xi|k> and A_k = <k|U_SE|xi>.
Everything in this module is computed from exact traces; sampling lives in
:mod:`pse_tomo.noise`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonOrthonormalBasis, NormalizationVanishes
from .qmath import (
    PROBE_LABELS,
    PROBE_STATES,
    TOL,
    as_ket,
    as_matrix,
    check_density,
    check_normalized,
    check_unitary,
    complete_to_unitary,
    dag,
    ketbra,
    tensor,
)

PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


def uniform_env_state(d_e: int) -> np.ndarray:
    return np.full(d_e, 1 / np.sqrt(d_e), dtype=complex)


@dataclass(frozen=True)
class TripartiteSystem:
    """Dimensions and the prepared product state |chi><chi| (x) rho_S (x) |xi><xi|."""

    system_state: np.ndarray
    d_e: int = 1
    probe_state: np.ndarray = field(default_factory=lambda: PLUS.copy())
    env_state: np.ndarray | None = None

    def __post_init__(self):
        rho = check_density(self.system_state, "system_state")
        object.__setattr__(self, "system_state", rho)
        chi = check_normalized(self.probe_state, "probe_state")
        if chi.shape != (2,):
            raise DimensionMismatch("probe must be a qubit", dim=int(chi.shape[0]))
        object.__setattr__(self, "probe_state", chi)
        xi = uniform_env_state(self.d_e) if self.env_state is None else self.env_state
        xi = check_normalized(xi, "env_state")
        if xi.shape != (self.d_e,):
            raise DimensionMismatch("env_state has wrong dimension", d_e=self.d_e, dim=int(xi.shape[0]))
        object.__setattr__(self, "env_state", xi)
        if abs(self.probe_normalization) <= TOL.vanishing:
            raise NormalizationVanishes(
                "probe state must overlap both |0> and |1>", probe_state=chi
            )

    @classmethod
    def pure(cls, psi, **kw) -> "TripartiteSystem":
        psi = as_ket(psi)
        return cls(ketbra(psi), **kw)

    @property
    def d_s(self) -> int:
        return self.system_state.shape[0]

    @property
    def dim(self) -> int:
        return 2 * self.d_s * self.d_e

    @property
    def probe_normalization(self) -> complex:
        """N_PS = 2 <chi|0><1|chi>."""
        chi = self.probe_state
        return complex(2 * np.conj(chi[0]) * chi[1])

    def normalization(self, k: int) -> complex:
        """N_PSE = 2 <chi|0><1|chi><xi|k>."""
        return self.probe_normalization * complex(np.conj(self.env_state[k]))

    def initial_state(self) -> np.ndarray:
        return tensor(ketbra(self.probe_state), self.system_state, ketbra(self.env_state))


@dataclass(frozen=True)
class DilationConfig:
    """The three operator slots of the controlled dilation."""

    U_S: np.ndarray
    U_tilde_S: np.ndarray
    U_SE: np.ndarray

    def __post_init__(self):
        for name in ("U_S", "U_tilde_S", "U_SE"):
            object.__setattr__(self, name, check_unitary(getattr(self, name), name))
        d_s = self.U_S.shape[0]
        if self.U_tilde_S.shape[0] != d_s or self.U_SE.shape[0] % d_s:
            raise DimensionMismatch(
                "U_S, U_tilde_S and U_SE dimensions are inconsistent",
                U_S=d_s, U_tilde_S=self.U_tilde_S.shape[0], U_SE=self.U_SE.shape[0],
            )

    @classmethod
    def identity(cls, d_s: int, d_e: int = 1) -> "DilationConfig":
        return cls(np.eye(d_s), np.eye(d_s), np.eye(d_s * d_e))

    @property
    def d_s(self) -> int:
        return self.U_S.shape[0]

    @property
    def d_e(self) -> int:
        return self.U_SE.shape[0] // self.d_s


@dataclass(frozen=True)
class ProbabilityTable:
    """Joint outcome probabilities p(probe, phi, k).

    ``p`` has shape (4, d_S, d_E) with the probe axis ordered (+, -, +i, -i).
    The first two rows form one complete measurement (sigma_x) and the last
    two another (sigma_y), so each pair sums to one over (phi, k).
    """

    p: np.ndarray

    labels = PROBE_LABELS

    @property
    def d_s(self) -> int:
        return self.p.shape[1]

    @property
    def d_e(self) -> int:
        return self.p.shape[2]

    def __getitem__(self, key):
        probe, phi, k = key
        if isinstance(probe, str):
            probe = PROBE_LABELS.index(probe)
        return self.p[probe, phi, k]

    @property
    def delta_x(self) -> np.ndarray:
        """<sigma_x (x) Pi_phi (x) Pi_k> for every (phi, k)."""
        return self.p[0] - self.p[1]

    @property
    def delta_y(self) -> np.ndarray:
        return self.p[2] - self.p[3]

    @property
    def signal(self) -> np.ndarray:
        """<(sigma_x + i sigma_y) (x) Pi_phi (x) Pi_k>, shape (d_S, d_E)."""
        return self.delta_x + 1j * self.delta_y

    def families(self) -> dict[str, np.ndarray]:
        """The two complete measurements as flat probability vectors."""
        return {"x": self.p[0:2].reshape(-1), "y": self.p[2:4].reshape(-1)}

    @classmethod
    def from_families(cls, fam: dict[str, np.ndarray], d_s: int, d_e: int) -> "ProbabilityTable":
        x = np.asarray(fam["x"], dtype=float).reshape(2, d_s, d_e)
        y = np.asarray(fam["y"], dtype=float).reshape(2, d_s, d_e)
        return cls(np.concatenate([x, y], axis=0))


def controlled_unitary(u0, u1) -> np.ndarray:
    """|0><0| (x) u0 + |1><1| (x) u1 on probe (x) rest."""
    u0, u1 = as_matrix(u0), as_matrix(u1)
    if u0.shape != u1.shape:
        raise DimensionMismatch("branch unitaries differ in shape", u0=list(u0.shape), u1=list(u1.shape))
    n = u0.shape[0]
    out = np.zeros((2 * n, 2 * n), dtype=complex)
    out[:n, :n] = u0
    out[n:, n:] = u1
    return out


def build_upse(cfg: DilationConfig) -> np.ndarray:
    eye_e = np.eye(cfg.d_e)
    return controlled_unitary(
        np.kron(cfg.U_S, eye_e),
        cfg.U_SE @ np.kron(cfg.U_tilde_S, eye_e),
    )


def evolve(sys: TripartiteSystem, u) -> np.ndarray:
    """rho(t) = U rho(0) U^dag for the prepared product state."""
    u = as_matrix(u)
    if u.shape != (sys.dim, sys.dim):
        raise DimensionMismatch("evolution operator has wrong dimension", expected=sys.dim, got=list(u.shape))
    rho0 = sys.initial_state()
    return u @ rho0 @ dag(u)


def joint_probabilities(rho_t, phi_basis, d_s: int, d_e: int) -> ProbabilityTable:
    """p(l, phi, k) = Tr[(|l><l| (x) |phi><phi| (x) |k><k|) rho_t] for the four probe states.

    ``phi_basis`` is a d_S x d_S matrix whose columns are the system
    measurement states (or a sequence of kets).
    """
    rho_t = as_matrix(rho_t)
    if rho_t.shape != (2 * d_s * d_e,) * 2:
        raise DimensionMismatch("rho_t does not match dims", shape=list(rho_t.shape), d_s=d_s, d_e=d_e)
    phi = _basis_matrix(phi_basis, d_s)
    t = rho_t.reshape(2, d_s, d_e, 2, d_s, d_e)
    lp = np.conj(PROBE_STATES)  # rows <l|
    ps = np.conj(phi.T)  # rows <phi|
    # p[l, f, k] = sum <l|a><f|b> t[a,b,k,c,e,k] <c|l><e|f>
    p = np.einsum("la,fb,abkcek,lc,fe->lfk", lp, ps, t, np.conj(lp), np.conj(ps), optimize=True)
    if np.max(np.abs(p.imag), initial=0.0) > TOL.vanishing:
        raise ValueError("probabilities have a non-negligible imaginary part")
    return ProbabilityTable(p.real.copy())


def _basis_matrix(phi_basis, d_s: int) -> np.ndarray:
    if isinstance(phi_basis, np.ndarray) and phi_basis.ndim == 2:
        phi = phi_basis.astype(complex)
    else:
        phi = np.column_stack([as_ket(v) for v in phi_basis])
    if phi.shape[0] != d_s:
        raise DimensionMismatch("measurement basis has wrong dimension", d_s=d_s, got=int(phi.shape[0]))
    gram = dag(phi) @ phi
    if np.max(np.abs(gram - np.eye(phi.shape[1]))) > TOL.structural:
        raise NonOrthonormalBasis("system measurement basis is not orthonormal")
    return phi


def simulate(sys: TripartiteSystem, cfg: DilationConfig, phi_basis=None) -> ProbabilityTable:
    """Evolve the prepared state under U_PSE and return the joint table."""
    if cfg.d_s != sys.d_s or cfg.d_e != sys.d_e:
        raise DimensionMismatch("system and dilation dimensions differ",
                                sys=[sys.d_s, sys.d_e], cfg=[cfg.d_s, cfg.d_e])
    phi = np.eye(sys.d_s) if phi_basis is None else phi_basis
    return joint_probabilities(evolve(sys, build_upse(cfg)), phi, sys.d_s, sys.d_e)


def extract_from_table(table: ProbabilityTable, sys: TripartiteSystem) -> np.ndarray:
    """Invert the extraction identity for every (phi, k) cell at once.

    Returns ``X[phi, k] = <phi| A_k U~_S rho_S U_S^dag |phi>``.  Cells whose
    environment overlap vanishes are set to NaN.
    """
    n = np.array([sys.normalization(k) for k in range(table.d_e)])
    ok = np.abs(n) > TOL.vanishing
    out = np.full(table.signal.shape, np.nan + 0j)
    out[:, ok] = table.signal[:, ok] / n[ok]
    return out


def extract_element(sys: TripartiteSystem, cfg: DilationConfig, phi, k: int) -> complex:
    """<phi| A_k U~_S rho_S U_S^dag |phi> from simulated joint statistics."""
    nk = sys.normalization(k)
    if abs(nk) <= TOL.vanishing:
        raise NormalizationVanishes(
            "N_PSE vanishes for this probe/environment choice", k=k, N_PSE=nk
        )
    phi = check_normalized(phi, "phi")
    # complete |phi> to an orthonormal basis with |phi> as the first column
    basis = complete_to_unitary(phi.reshape(-1, 1))
    table = simulate(sys, cfg, basis)
    return complex(table.signal[0, k] / nk)


def kraus_from_dilation(u_se, xi, k: int | None = None):
    """A_k = <k_E| U_SE |xi_E>; all of them when ``k`` is None."""
    u_se = as_matrix(u_se)
    xi = as_ket(xi)
    d_e = xi.shape[0]
    if u_se.shape[0] % d_e or u_se.shape[0] != u_se.shape[1]:
        raise DimensionMismatch("U_SE is not square on d_S * d_E", shape=list(u_se.shape), d_e=d_e)
    d_s = u_se.shape[0] // d_e
    t = u_se.reshape(d_s, d_e, d_s, d_e)
    a = np.einsum("akbe,e->kab", t, xi)
    return a if k is None else a[k]


def dilation_from_kraus(kraus, xi=None) -> np.ndarray:
    """A unitary U_SE with <k|U_SE|xi> = A_k for the given Kraus set.

    The environment dimension is the number of Kraus operators; ``xi``
    defaults to |0_E>.
    """
    ks = [as_matrix(a) for a in kraus]
    d_e = len(ks)
    d_s = ks[0].shape[0]
    comp = sum(dag(a) @ a for a in ks)
    if np.max(np.abs(comp - np.eye(d_s))) > TOL.structural:
        raise DimensionMismatch("Kraus operators are not complete", deviation=float(np.max(np.abs(comp - np.eye(d_s)))))
    # isometry |s> -> sum_k A_k|s> (x) |k>
    v = np.zeros((d_s * d_e, d_s), dtype=complex)
    for k, a in enumerate(ks):
        v[k::d_e, :] = a
    w = complete_to_unitary(v)
    # column s of the isometry belongs at input index (s, 0)
    order = np.empty(d_s * d_e, dtype=int)
    inputs0 = np.arange(d_s) * d_e
    rest = np.setdiff1d(np.arange(d_s * d_e), inputs0)
    order[inputs0] = np.arange(d_s)
    order[rest] = np.arange(d_s, d_s * d_e)
    u0 = w[:, order]
    if xi is None:
        return u0
    xi = check_normalized(xi, "xi")
    # rotate the environment so that |xi> -> |0>
    r = complete_to_unitary(xi.reshape(-1, 1))
    return u0 @ np.kron(np.eye(d_s), dag(r))


def amplitude_damping_dilation(gamma: float) -> np.ndarray:
    """Two-qubit system (x) environment unitary whose |0_E> contraction is amplitude damping."""
    s, c = np.sqrt(gamma), np.sqrt(1 - gamma)
    u = np.eye(4, dtype=complex)
    # basis order |s e>: 00, 01, 10, 11
    u[np.ix_([1, 2], [1, 2])] = [[c, s], [-s, c]]
    return u
