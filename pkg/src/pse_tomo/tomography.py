"""Direct characterization protocols built on the extraction identity.

Every reconstruction here is split in two halves:

* a *measurement* half that simulates the joint probe/system/environment
  statistics for each experimental setting (one :class:`ProbabilityTable`
  per setting), and
* an *estimator* half (the ``*_from_tables`` functions) that turns tables
  into matrix elements.

The noise module feeds sampled frequency tables through the same
estimators, so noisy and noiseless results come from identical arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from .errors import (
    DegenerateAngle,
    DimensionMismatch,
    NonOrthonormalBasis,
    NormalizationVanishes,
    VanishingOverlap,
    VanishingPathAmplitude,
)
from .framework import (
    PLUS,
    DilationConfig,
    ProbabilityTable,
    TripartiteSystem,
    extract_from_table,
    kraus_from_dilation,
    simulate,
    uniform_env_state,
)
from .qmath import (
    TOL,
    as_ket,
    as_matrix,
    basis,
    check_hermitian,
    check_normalized,
    check_unitary,
    dag,
    hadamard_like,
    ketbra,
    shift_gate,
)


# ----------------------------------------------------------------------------
# result records


@dataclass(frozen=True)
class KrausReconstruction:
    k: int
    matrix: np.ndarray
    scheme: Literal["hadamard_columns", "paulix_single_input"]
    per_element_residuals: np.ndarray | None = None

    @property
    def max_residual(self) -> float | None:
        r = self.per_element_residuals
        return None if r is None else float(np.max(r, initial=0.0))


@dataclass(frozen=True)
class DensityReconstruction:
    """Raw linear-inversion estimate plus bookkeeping.

    ``element_coverage`` maps every ``(i, j)`` to ``"measured"`` or
    ``"hermitian_conjugate"``.  ``projected`` holds the eigenvalue-clipped
    physical state when it was requested.
    """

    matrix: np.ndarray
    gates_used: list[int]
    element_coverage: dict[tuple[int, int], str]
    projected: np.ndarray | None = None


@dataclass(frozen=True)
class ObservableScenarioConfig:
    """Settings for the two observable-characterization scenarios.

    ``scenario="projector"`` engineers exp(-i theta Pi_k) from known
    eigenvalues; ``scenario="weak_value"`` assembles elements from weak
    values post-selected on ``auxiliary_basis`` (columns), with step
    ``delta_theta`` and ``method`` as in :mod:`pse_tomo.values`.
    """

    scenario: Literal["projector", "weak_value"]
    eigenvalues: Sequence[float] | None = None
    auxiliary_basis: np.ndarray | None = None
    theta: float = np.pi / 2
    delta_theta: float = 1e-3
    method: str = "exact_spectral"

    def __post_init__(self):
        if self.auxiliary_basis is not None:
            b = as_matrix(self.auxiliary_basis)
            if b.shape[0] != b.shape[1] or np.max(np.abs(dag(b) @ b - np.eye(b.shape[0]))) > TOL.structural:
                raise NonOrthonormalBasis("auxiliary basis must be orthonormal and complete")
            object.__setattr__(self, "auxiliary_basis", b)


# ----------------------------------------------------------------------------
# Kraus operators


def _env_state(xi, d_e: int) -> np.ndarray:
    return uniform_env_state(d_e) if xi is None else check_normalized(xi, "xi")


def _probe_state(chi) -> np.ndarray:
    return PLUS.copy() if chi is None else check_normalized(chi, "chi")


def _dims(u_se, xi) -> tuple[int, int]:
    u_se = as_matrix(u_se)
    d_e = as_ket(xi).shape[0]
    if u_se.shape[0] % d_e:
        raise DimensionMismatch("U_SE dimension not divisible by d_E", U_SE=u_se.shape[0], d_e=d_e)
    return u_se.shape[0] // d_e, d_e


def _check_path_amplitudes(amp: np.ndarray, what: str):
    bad = np.argwhere(np.abs(amp) <= TOL.vanishing)
    if bad.size:
        raise VanishingPathAmplitude(
            f"{what} has a vanishing overlap, element cannot be isolated",
            index=bad[0].tolist(),
        )


def kraus_tables_hadamard(u_se, xi=None, chi=None, u_s=None) -> list[ProbabilityTable]:
    """One table per input |j>, each measured in the computational basis."""
    u_se = check_unitary(u_se, "U_SE")
    d_e = _guess_de(u_se, xi)
    xi = _env_state(xi, d_e)
    d_s, d_e = _dims(u_se, xi)
    u_s = hadamard_like(d_s) if u_s is None else check_unitary(u_s, "U_S")
    cfg = DilationConfig(u_s, np.eye(d_s), u_se)
    chi = _probe_state(chi)
    return [
        simulate(TripartiteSystem(ketbra(basis(d_s, j)), d_e, chi, xi), cfg)
        for j in range(d_s)
    ]


def kraus_from_tables_hadamard(tables, xi, chi=None, u_s=None) -> np.ndarray:
    """All Kraus operators, shape (d_E, d_S, d_S), from per-input tables.

    <i|A_k|j> = X_j[i, k] / (N_PSE(k) <j|U_S^dag|i>), where X_j is the
    extraction for input |j>.
    """
    d_s, d_e = tables[0].d_s, tables[0].d_e
    u_s = hadamard_like(d_s) if u_s is None else as_matrix(u_s)
    amp = np.conj(u_s)  # amp[i, j] = <j|U_S^dag|i>
    _check_path_amplitudes(amp, "U_S")
    sys0 = TripartiteSystem(ketbra(basis(d_s, 0)), d_e, _probe_state(chi), as_ket(xi))
    a = np.empty((d_e, d_s, d_s), dtype=complex)
    for j, t in enumerate(tables):
        a[:, :, j] = extract_from_table(t, sys0).T / amp[:, j]
    return a


def kraus_tables_paulix(u_se, xi=None, chi=None, u_s=None) -> list[ProbabilityTable]:
    """One table per shift X^j applied to the single input |0>."""
    u_se = check_unitary(u_se, "U_SE")
    d_e = _guess_de(u_se, xi)
    xi = _env_state(xi, d_e)
    d_s, d_e = _dims(u_se, xi)
    u_s = hadamard_like(d_s) if u_s is None else check_unitary(u_s, "U_S")
    chi = _probe_state(chi)
    sys0 = TripartiteSystem(ketbra(basis(d_s, 0)), d_e, chi, xi)
    return [simulate(sys0, DilationConfig(u_s, shift_gate(d_s, j), u_se)) for j in range(d_s)]


def kraus_from_tables_paulix(tables, xi, chi=None, u_s=None) -> np.ndarray:
    """<i|A_k|j> = X_j[i, k] / (N_PSE(k) <0|U_S^dag|i>), X_j measured with U~_S = X^j.

    No factor of d_S appears: with rho_S = |0><0| and U~_S|0> = |j>, the
    extraction is exactly <i|A_k|j><0|U_S^dag|i>.
    """
    d_s, d_e = tables[0].d_s, tables[0].d_e
    u_s = hadamard_like(d_s) if u_s is None else as_matrix(u_s)
    amp = np.conj(u_s[:, 0])  # <0|U_S^dag|i>
    _check_path_amplitudes(amp, "U_S column 0")
    sys0 = TripartiteSystem(ketbra(basis(d_s, 0)), d_e, _probe_state(chi), as_ket(xi))
    a = np.empty((d_e, d_s, d_s), dtype=complex)
    for j, t in enumerate(tables):
        a[:, :, j] = extract_from_table(t, sys0).T / amp[None, :]
    return a


def _guess_de(u_se, xi) -> int:
    if xi is not None:
        return as_ket(xi).shape[0]
    raise DimensionMismatch("environment state is required to fix d_E")


def kraus_element(i: int, j: int, k: int, u_se, xi, chi=None, u_s=None) -> complex:
    """<i|A_k|j> from a single setting: input |j>, fixed U_S, outcome (i, k)."""
    u_se = check_unitary(u_se, "U_SE")
    xi = check_normalized(xi, "xi")
    d_s, d_e = _dims(u_se, xi)
    u_s = hadamard_like(d_s) if u_s is None else check_unitary(u_s, "U_S")
    amp = np.conj(u_s[i, j])
    if abs(amp) <= TOL.vanishing:
        raise VanishingPathAmplitude("<j|U_S^dag|i> vanishes", i=i, j=j, amplitude=amp)
    sys_ = TripartiteSystem(ketbra(basis(d_s, j)), d_e, _probe_state(chi), xi)
    _check_env_overlaps(xi, [k])
    t = simulate(sys_, DilationConfig(u_s, np.eye(d_s), u_se))
    return complex(extract_from_table(t, sys_)[i, k] / amp)


def _check_env_overlaps(xi, ks):
    """A_k is invisible when <xi|k> = 0, since N_PSE carries that factor."""
    for k in ks:
        if abs(xi[k]) <= TOL.vanishing:
            raise NormalizationVanishes("environment state has no overlap with |k>", k=int(k), xi=xi)


def _with_residuals(a_hat, u_se, xi, k, scheme, compare):
    res = None
    if compare:
        res = np.abs(a_hat[k] - kraus_from_dilation(u_se, xi, k))
    return KrausReconstruction(k, a_hat[k], scheme, res)


def reconstruct_kraus_hadamard(k: int | None, u_se, xi=None, chi=None, u_s=None, compare=True):
    """Column-by-column reconstruction with one fixed U_S (DFT by default).

    Returns a single :class:`KrausReconstruction`, or a list over every k
    when ``k`` is None.  Residuals are against the dilation contraction.
    """
    u_se = check_unitary(u_se, "U_SE")
    xi = _env_state(xi, _default_de(u_se, xi))
    ks = range(xi.shape[0]) if k is None else [k]
    _check_env_overlaps(xi, ks)
    tables = kraus_tables_hadamard(u_se, xi, chi, u_s)
    a = kraus_from_tables_hadamard(tables, xi, chi, u_s)
    out = [_with_residuals(a, u_se, xi, kk, "hadamard_columns", compare) for kk in ks]
    return out if k is None else out[0]


def reconstruct_kraus_paulix(k: int | None, u_se, xi=None, chi=None, u_s=None, compare=True):
    """Reconstruction from the single input |0>, cycling U~_S through X^j."""
    u_se = check_unitary(u_se, "U_SE")
    xi = _env_state(xi, _default_de(u_se, xi))
    ks = range(xi.shape[0]) if k is None else [k]
    _check_env_overlaps(xi, ks)
    tables = kraus_tables_paulix(u_se, xi, chi, u_s)
    a = kraus_from_tables_paulix(tables, xi, chi, u_s)
    out = [_with_residuals(a, u_se, xi, kk, "paulix_single_input", compare) for kk in ks]
    return out if k is None else out[0]


def _default_de(u_se, xi) -> int:
    if xi is not None:
        return as_ket(xi).shape[0]
    # without an explicit environment state assume a qubit environment
    n = as_matrix(u_se).shape[0]
    if n % 2:
        raise DimensionMismatch("cannot infer d_E; pass the environment state", U_SE=n)
    return 2


def povm_from_kraus(a) -> np.ndarray:
    """E = A^dag A (Hermitian by construction)."""
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch("Kraus operator must be square", shape=list(a.shape))
    e = dag(a) @ a
    return (e + dag(e)) / 2


# ----------------------------------------------------------------------------
# density matrices


def band_count(d: int) -> int:
    """Number of shift gates needed: d/2 + 1 for even d, (d - 1)/2 + 1 for odd."""
    return d // 2 + 1


def density_tables(rho, chi=None) -> dict[int, ProbabilityTable]:
    """Tables for U_S = X^n, n = 0 .. floor(d/2), with U~_S = U_SE = I and d_E = 1."""
    rho = as_matrix(rho)
    d = rho.shape[0]
    sys_ = TripartiteSystem(rho, 1, _probe_state(chi))
    return {
        n: simulate(sys_, DilationConfig(shift_gate(d, n), np.eye(d), np.eye(d)))
        for n in range(band_count(d))
    }


def density_from_tables(
    tables: dict[int, ProbabilityTable],
    chi=None,
    project: bool = False,
    average_redundant: bool = True,
) -> DensityReconstruction:
    """Assemble rho from its measured bands.

    Band n yields <i|rho|(i - n) mod d> for every i.  Measured entries take
    precedence over Hermitian fill-in.  For even d the n = d/2 band measures
    each element together with its conjugate partner; with
    ``average_redundant`` the two readings are averaged, otherwise each
    element keeps its own reading.
    """
    d = next(iter(tables.values())).d_s
    sys0 = TripartiteSystem(ketbra(basis(d, 0)), 1, _probe_state(chi))
    est = np.full((d, d), np.nan + 0j)
    cov: dict[tuple[int, int], str] = {}
    i = np.arange(d)
    for n in sorted(tables):
        x = extract_from_table(tables[n], sys0)[:, 0]
        j = (i - n) % d
        if average_redundant and n and 2 * n == d:
            x = (x + np.conj(x[j])) / 2
        est[i, j] = x
        for a, b in zip(i, j):
            cov[(int(a), int(b))] = "measured"
    for a in range(d):
        for b in range(d):
            if (a, b) not in cov:
                est[a, b] = np.conj(est[b, a])
                cov[(a, b)] = "hermitian_conjugate"
    proj = physical_projection(est) if project else None
    return DensityReconstruction(est, sorted(tables), cov, proj)


def physical_projection(rho) -> np.ndarray:
    """Nearest unit-trace PSD matrix in Frobenius norm (eigenvalue projection onto the simplex)."""
    rho = as_matrix(rho)
    h = (rho + dag(rho)) / 2
    w, v = np.linalg.eigh(h)
    # project eigenvalues onto the probability simplex
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1
    idx = np.arange(1, len(u) + 1)
    r = idx[u - css / idx > 0][-1]
    w2 = np.maximum(w - css[r - 1] / r, 0)
    return (v * w2) @ dag(v)


def density_element(i: int, j: int, rho, chi=None) -> complex:
    """<i|rho|j> from one setting, U_S = X^((i - j) mod d)."""
    rho = as_matrix(rho)
    d = rho.shape[0]
    n = (i - j) % d
    u_s = shift_gate(d, n)
    if abs(u_s[i, j]) <= TOL.vanishing:  # <j|U_S^dag|i> for the shift is always 1
        raise VanishingPathAmplitude("<j|U_S^dag|i> vanishes", i=i, j=j)
    sys_ = TripartiteSystem(rho, 1, _probe_state(chi))
    t = simulate(sys_, DilationConfig(u_s, np.eye(d), np.eye(d)))
    return complex(extract_from_table(t, sys_)[i, 0])


def reconstruct_density(rho, chi=None, project: bool = False) -> DensityReconstruction:
    """Full state from floor(d/2) + 1 shift-gate settings."""
    return density_from_tables(density_tables(rho, chi), chi, project)


# ----------------------------------------------------------------------------
# unitaries


def unitary_tables(u_tilde, chi=None, u_s=None) -> list[ProbabilityTable]:
    u_tilde = check_unitary(u_tilde, "U_tilde_S")
    d = u_tilde.shape[0]
    u_s = hadamard_like(d) if u_s is None else check_unitary(u_s, "U_S")
    cfg = DilationConfig(u_s, u_tilde, np.eye(d))
    chi = _probe_state(chi)
    return [simulate(TripartiteSystem(ketbra(basis(d, j)), 1, chi), cfg) for j in range(d)]


def unitary_from_tables(tables, chi=None, u_s=None) -> np.ndarray:
    return kraus_from_tables_hadamard(tables, np.ones(1), chi, u_s)[0]


def unitary_element(i: int, j: int, u_tilde, chi=None, u_s=None) -> complex:
    """<i|U~|j> from input |j> and outcome |i>."""
    u_tilde = check_unitary(u_tilde, "U_tilde_S")
    d = u_tilde.shape[0]
    u_s = hadamard_like(d) if u_s is None else check_unitary(u_s, "U_S")
    amp = np.conj(u_s[i, j])
    if abs(amp) <= TOL.vanishing:
        raise VanishingPathAmplitude("<j|U_S^dag|i> vanishes", i=i, j=j, amplitude=amp)
    sys_ = TripartiteSystem(ketbra(basis(d, j)), 1, _probe_state(chi))
    t = simulate(sys_, DilationConfig(u_s, u_tilde, np.eye(d)))
    return complex(extract_from_table(t, sys_)[i, 0] / amp)


def reconstruct_unitary(u_tilde, chi=None, u_s=None) -> np.ndarray:
    return unitary_from_tables(unitary_tables(u_tilde, chi, u_s), chi, u_s)


# ----------------------------------------------------------------------------
# observables


def spectral_projectors(a, tol: float = 1e-8) -> tuple[np.ndarray, list[np.ndarray]]:
    """Distinct eigenvalues of Hermitian ``a`` and the projector onto each eigenspace."""
    a = check_hermitian(a)
    w, v = np.linalg.eigh((a + dag(a)) / 2)
    groups: list[list[int]] = []
    for idx in range(len(w)):
        if groups and abs(w[idx] - w[groups[-1][0]]) <= tol:
            groups[-1].append(idx)
        else:
            groups.append([idx])
    vals = np.array([w[g].mean() for g in groups])
    projs = [v[:, g] @ dag(v[:, g]) for g in groups]
    return vals, projs


def reconstruct_observable_projector(a_hidden, eigenvalues=None, theta: float = np.pi / 2, chi=None) -> np.ndarray:
    """Observable from tomography of exp(-i theta Pi_k) for each eigenprojector.

    <i|Pi_k|j> = (<i|U~_k|j> - delta_ij) / (exp(-i theta) - 1), then
    A = sum_k a_k Pi_k.  ``eigenvalues`` are the known a_k (distinct, any
    order); by default they are read off ``a_hidden``.
    """
    denom = np.exp(-1j * theta) - 1
    if abs(denom) <= TOL.structural:
        raise DegenerateAngle("exp(-i theta) = 1 leaves the projector invisible", theta=theta)
    vals, projs = spectral_projectors(a_hidden)
    if eigenvalues is not None:
        known = np.sort(np.asarray(eigenvalues, dtype=float))
        if known.shape != vals.shape or np.max(np.abs(known - vals)) > 1e-8:
            raise DimensionMismatch(
                "supplied eigenvalues do not match the observable's distinct spectrum",
                supplied=known, actual=vals,
            )
        vals = known
    d = projs[0].shape[0]
    out = np.zeros((d, d), dtype=complex)
    for a_k, p in zip(vals, projs):
        u_k = np.eye(d) + denom * p  # exp(-i theta Pi_k)
        p_hat = (reconstruct_unitary(u_k, chi) - np.eye(d)) / denom
        out += a_k * p_hat
    return out


def reconstruct_observable_weakvalue(
    a_hidden,
    aux_basis=None,
    delta_theta: float = 1e-3,
    method: str = "exact_spectral",
    eigenvalues=None,
) -> np.ndarray:
    """<i|A|j> = sum_k <i|lambda_k><lambda_k|j> <A_w>, pre-selected on |j>, post-selected on |lambda_k>.

    ``aux_basis`` holds the |lambda_k> as columns (DFT columns by default so
    every overlap is nonzero).  Weak values come from
    :mod:`pse_tomo.values`; a degenerate observable under the exact
    spectral method falls back to the second-order estimate.
    """
    from . import values

    a = check_hermitian(a_hidden)
    d = a.shape[0]
    lam = hadamard_like(d) if aux_basis is None else ObservableScenarioConfig("weak_value", auxiliary_basis=aux_basis).auxiliary_basis
    tiny = np.abs(lam) <= 1e-10
    if tiny.any():
        bad = np.argwhere(tiny)[0].tolist()
        raise VanishingOverlap("auxiliary basis has a zero overlap with the computational basis", index=bad)
    if method == "exact_spectral":
        spec = np.linalg.eigvalsh(a) if eigenvalues is None else np.asarray(eigenvalues, float)
        if np.min(np.diff(np.sort(spec)), initial=np.inf) <= 1e-8:
            method = "second_order"
    out = np.zeros((d, d), dtype=complex)
    for j in range(d):
        psi = basis(d, j)
        for k in range(d):
            req = values.WeakValueRequest(
                a, psi, lam[:, k], theta1=delta_theta, theta2=0.0, method=method, eigenvalues=eigenvalues
            )
            wv = values.weak_value(req)
            # <i|lambda_k><lambda_k|j> for every i at once
            out[:, j] += lam[:, k] * np.conj(lam[j, k]) * wv
    return out
