"""Shot-noise simulation and analytic error budgets.

Five estimators are modelled:

=====================  =====================================================
``ours_povm``          Kraus operators via the fixed-DFT column scheme
``xu2021_povm``        POVM elements via a sigma_y-coupled probe and Fourier inputs
``ours_density``       density matrix via the shift-gate band schedule
``vallone2018_density``  density matrix via two sequential qubit probes
``xuzhou2024_density``   density matrix via a probe coupled to |i><j| + |j><i|
=====================  =====================================================

Counts are drawn multinomially per measurement family at a fixed particle
number.  The analytic formulas assume independent Poisson cells; the two
models differ only by the squared-mean correction, which is small when
many cells share the probability mass.

Every estimator is run on sampled frequencies through the same arithmetic
as on exact probabilities, so the pass-through functions
(``*_passthrough``) double as bias checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateCoupling
from .framework import ProbabilityTable, kraus_from_dilation, uniform_env_state
from .qmath import (
    SIGMA_Y,
    as_matrix,
    check_density,
    check_unitary,
    dag,
    ketbra,
    tensor,
    unitary_exponential,
)
from .tomography import (
    band_count,
    density_from_tables,
    density_tables,
    kraus_from_tables_hadamard,
    kraus_tables_hadamard,
)

METHODS = ("ours_povm", "xu2021_povm", "ours_density", "vallone2018_density", "xuzhou2024_density")
POVM_METHODS = ("ours_povm", "xu2021_povm")
DENSITY_METHODS = ("ours_density", "vallone2018_density", "xuzhou2024_density")
SIN_TOL = 1e-10


# ----------------------------------------------------------------------------
# records


@dataclass(frozen=True)
class ShotBudget:
    """N particles per setting and how they are shared between measurement families."""

    N: int
    allocation: dict[str, int]

    def __post_init__(self):
        if sum(self.allocation.values()) != self.N:
            raise ValueError(f"allocation {self.allocation} does not sum to N={self.N}")

    @classmethod
    def equal(cls, N: int, families: Sequence[str]) -> "ShotBudget":
        """Split N as evenly as integers allow; the last family takes the remainder."""
        N = int(N)
        q = N // len(families)
        alloc = {f: q for f in families}
        alloc[families[-1]] += N - q * len(families)
        return cls(N, alloc)


@dataclass(frozen=True)
class RivalConfig:
    method: str
    theta: float

    def __post_init__(self):
        if self.method not in ("xu2021_povm", "vallone2018_density", "xuzhou2024_density"):
            raise ValueError(f"unknown rival method {self.method!r}")
        check_coupling(self.method, self.theta)


@dataclass(frozen=True)
class NoiseRunReport:
    """One row of an error comparison.

    ``empirical_error`` is the RMS over trials of the summed squared element
    error; it is None for analytic-only rows.
    """

    method: str
    d_s: int
    d_e: int
    N: int
    trials: int
    analytic_error: float
    empirical_error: float | None = None
    theta: float | None = None
    estimates: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def ratio(self) -> float | None:
        if self.empirical_error is None or self.analytic_error == 0:
            return None
        return self.empirical_error / self.analytic_error

    def row(self) -> dict:
        return {
            "method": self.method,
            "d_s": self.d_s,
            "d_e": self.d_e,
            "theta": self.theta,
            "n": self.N,
            "trials": self.trials,
            "analytic_error": self.analytic_error,
            "empirical_error": self.empirical_error,
            "ratio": self.ratio,
        }


def check_coupling(method: str, theta: float):
    s = {
        "xu2021_povm": math.sin(theta),
        "vallone2018_density": math.sin(theta) ** 2,
        "xuzhou2024_density": math.sin(2 * theta),
    }.get(method)
    if s is not None and abs(s) <= SIN_TOL:
        raise DegenerateCoupling("coupling angle makes the estimator singular", method=method, theta=theta)


# ----------------------------------------------------------------------------
# sampling


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _clean(p: np.ndarray) -> np.ndarray:
    p = np.clip(np.asarray(p, dtype=float).reshape(-1), 0.0, None)
    return p / p.sum()


def sample_counts(families: dict[str, np.ndarray], budget: ShotBudget, seed=None, trials: int | None = None):
    """Multinomial counts for each measurement family.

    ``families`` maps a family name to its outcome probabilities (any shape,
    summing to one).  Returns counts with the same shape, with a leading
    trial axis when ``trials`` is given.
    """
    rng = _rng(seed)
    out = {}
    for name, p in families.items():
        shape = np.shape(p)
        n = budget.allocation[name]
        c = rng.multinomial(n, _clean(p), size=trials)
        out[name] = c.reshape(((trials,) if trials is not None else ()) + shape)
    return out


def sample_table(table: ProbabilityTable, budget: ShotBudget, seed=None, trials: int | None = None) -> np.ndarray:
    """Frequency tables, shape (trials, 4, d_S, d_E), from the x and y families of ``table``."""
    fam = {"x": table.p[0:2], "y": table.p[2:4]}
    c = sample_counts(fam, budget, seed, trials)
    fx = c["x"] / budget.allocation["x"]
    fy = c["y"] / budget.allocation["y"]
    return np.concatenate([fx, fy], axis=-3)


def _child_rngs(seed, n: int) -> list[np.random.Generator]:
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(n)]


# ----------------------------------------------------------------------------
# analytic error formulas (as printed in the error analysis being reproduced)


def analytic_povm_ours_element(d_s: int, N: float, trace_e: float, alpha: float) -> float:
    """delta E_k = sqrt((d/(alpha N)) [alpha d + Tr E_k])."""
    return math.sqrt(d_s / (alpha * N) * (alpha * d_s + trace_e))


def analytic_povm_ours(d_s: int, d_e: int, N: float) -> float:
    """delta E = d sqrt(2 d_E / N) for alpha_k = 1/d_E."""
    return d_s * math.sqrt(2 * d_e / N)


def analytic_povm_ours_general(d_s: int, N: float, traces: Sequence[float], alphas: Sequence[float]) -> float:
    return math.sqrt(sum(analytic_povm_ours_element(d_s, N, t, a) ** 2 for t, a in zip(traces, alphas)))


def _xu_bracket(d_s: int, theta: float) -> float:
    return d_s + 2 * math.sin(theta) ** 2 * math.tan(theta / 2) ** 2


def analytic_povm_xu2021_element(d_s: int, N: float, trace_e: float, theta: float) -> float:
    check_coupling("xu2021_povm", theta)
    return math.sqrt(6 * d_s / (4 * N * math.sin(theta) ** 2) * trace_e * _xu_bracket(d_s, theta))


def analytic_povm_xu2021(d_s: int, N: float, theta: float) -> float:
    check_coupling("xu2021_povm", theta)
    return d_s / abs(math.sin(theta)) * math.sqrt(3 / (2 * N) * _xu_bracket(d_s, theta))


def analytic_density_ours(d_s: int, N: float) -> float:
    """2 sqrt((F + 1)/N) with F = floor(d/2): 2 sqrt((d+2)/(2N)) even, 2 sqrt((d+1)/(2N)) odd."""
    return 2 * math.sqrt(band_count(d_s) / N)


def analytic_density_vallone(d_s: int, N: float, theta: float) -> float:
    check_coupling("vallone2018_density", theta)
    return math.sqrt(6) * d_s / (2 * math.sin(theta) ** 2) * math.sqrt((d_s + 1) / N)


def analytic_density_xuzhou(d_s: int, N: float, theta: float) -> float:
    check_coupling("xuzhou2024_density", theta)
    return 2 / abs(math.sin(2 * theta)) * math.sqrt(d_s / N)


def poisson_povm_ours(d_s: int, N: float, traces: Sequence[float], alphas: Sequence[float]) -> float:
    """Poisson prediction for the column scheme with the probe marginal taken as 1/2.

    The printed budget uses 1/4 for the marginal p(i, k) of one probe
    family; the marginal of the full (+, -) pair is
    (alpha_k |<i|U_S|j>|^2 + |<i|A_k|j>|^2)/2, which doubles the variance.
    """
    return math.sqrt(2) * analytic_povm_ours_general(d_s, N, traces, alphas)


# ----------------------------------------------------------------------------
# channel helpers


def _channel(u_se, xi):
    u_se = check_unitary(u_se, "U_SE")
    xi = np.asarray(xi, dtype=complex)
    d_e = xi.shape[0]
    d_s = u_se.shape[0] // d_e
    return u_se, xi, d_s, d_e


def _povm_elements(u_se, xi) -> np.ndarray:
    a = kraus_from_dilation(u_se, xi)
    return np.einsum("kji,kjl->kil", a.conj(), a)


def _rms(sq: np.ndarray) -> float:
    return float(np.sqrt(np.mean(sq)))


# ----------------------------------------------------------------------------
# our POVM estimator


def estimate_povm_ours_noisy(u_se, N: int, trials: int, seed=None, xi=None) -> NoiseRunReport:
    """Column scheme on sampled frequencies; N particles per input |j>, split N/2 + N/2.

    Empirical error uses delta E_k := delta A_k, i.e. the summed squared
    Kraus-element residuals, so it is directly comparable with the analytic
    budget.
    """
    u_se, xi, d_s, d_e = _channel(u_se, uniform_env_state(2) if xi is None else xi)
    truth = kraus_from_dilation(u_se, xi)
    tables = kraus_tables_hadamard(u_se, xi)
    budget = ShotBudget.equal(N, ("x", "y"))
    rngs = _child_rngs(seed, d_s)
    freqs = [sample_table(t, budget, r, trials) for t, r in zip(tables, rngs)]
    est = np.empty((trials, d_e, d_s, d_s), dtype=complex)
    for t in range(trials):
        est[t] = kraus_from_tables_hadamard([ProbabilityTable(f[t]) for f in freqs], xi)
    sq = np.sum(np.abs(est - truth) ** 2, axis=(1, 2, 3))
    alphas = np.abs(xi) ** 2
    traces = np.real(np.trace(_povm_elements(u_se, xi), axis1=1, axis2=2))
    return NoiseRunReport(
        "ours_povm", d_s, d_e, N, trials,
        analytic_error=analytic_povm_ours_general(d_s, N, traces, alphas),
        empirical_error=_rms(sq), estimates=est,
    )


# ----------------------------------------------------------------------------
# Xu-2021 POVM estimator


def fourier_state(d: int, l: int) -> np.ndarray:
    m = np.arange(d)
    return np.exp(2j * np.pi * m * l / d) / np.sqrt(d)


def xu2021_probabilities(povm: np.ndarray, j: int, l: int, theta: float) -> dict[str, np.ndarray]:
    """Probe (x, y, z families) x POVM outcome k for input f_l and coupling on |j>.

    Returns family -> array (2, d_E): rows (+, -), (+i, -i) and (0, 1).
    """
    d_e, d, _ = povm.shape
    f = fourier_state(d, l)
    pj = np.zeros((d, d), complex)
    pj[j, j] = 1
    u = unitary_exponential(np.kron(SIGMA_Y, pj), theta)
    psi = u @ np.kron([1, 0], f)
    rho = ketbra(psi).reshape(2, d, 2, d)
    probe = {
        "x": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
        "y": np.array([[1, 1j], [1, -1j]]) / np.sqrt(2),
        "z": np.eye(2),
    }
    out = {}
    for name, kets in probe.items():
        # p[r, k] = sum <r|a> rho[a s b t] <b|r> E_k[t s]
        p = np.einsum("ra,asbt,rb,kts->rk", kets.conj(), rho, kets, povm, optimize=True)
        out[name] = p.real
    return out


def xu2021_from_probabilities(probs, d: int, theta: float) -> np.ndarray:
    """<i|E_k|j> = sum_l exp(2 pi i (i - j) l / d) omega_{j,l}.

    ``probs[j][l]`` holds the family dict for configuration (j, l); arrays
    may carry a leading trial axis.
    omega = [dx + 2 tan(theta/2) p(1) + i dy] / (2 sin theta).
    """
    check_coupling("xu2021_povm", theta)
    s, t2 = math.sin(theta), math.tan(theta / 2)
    first = probs[0][0]["x"]
    lead = first.shape[:-2]
    d_e = first.shape[-1]
    e = np.zeros(lead + (d_e, d, d), dtype=complex)
    ii = np.arange(d)
    for j in range(d):
        for l in range(d):
            p = probs[j][l]
            dx = p["x"][..., 0, :] - p["x"][..., 1, :]
            dy = p["y"][..., 0, :] - p["y"][..., 1, :]
            omega = (dx + 2 * t2 * p["z"][..., 1, :] + 1j * dy) / (2 * s)  # (..., d_e)
            phase = np.exp(2j * np.pi * (ii - j) * l / d)  # over i
            e[..., :, :, j] += omega[..., :, None] * phase
    return e


def xu2021_passthrough(u_se, xi, theta: float) -> np.ndarray:
    povm = _povm_elements(*_channel(u_se, xi)[:2])
    d = povm.shape[1]
    probs = [[xu2021_probabilities(povm, j, l, theta) for l in range(d)] for j in range(d)]
    return xu2021_from_probabilities(probs, d, theta)


def estimate_povm_xu2021_noisy(u_se, theta: float, N: int, trials: int, seed=None, xi=None) -> NoiseRunReport:
    """Rival POVM estimator; N particles per (j, l) configuration, thirds per probe basis."""
    RivalConfig("xu2021_povm", theta)
    u_se, xi, d_s, d_e = _channel(u_se, uniform_env_state(2) if xi is None else xi)
    povm = _povm_elements(u_se, xi)
    budget = ShotBudget.equal(N, ("x", "y", "z"))
    rngs = _child_rngs(seed, d_s * d_s)
    probs = []
    for j in range(d_s):
        row = []
        for l in range(d_s):
            exact = xu2021_probabilities(povm, j, l, theta)
            c = sample_counts(exact, budget, rngs[j * d_s + l], trials)
            row.append({f: c[f] / budget.allocation[f] for f in c})
        probs.append(row)
    est = xu2021_from_probabilities(probs, d_s, theta)
    sq = np.sum(np.abs(est - povm) ** 2, axis=(1, 2, 3))
    return NoiseRunReport(
        "xu2021_povm", d_s, d_e, N, trials,
        analytic_error=analytic_povm_xu2021(d_s, N, theta),
        empirical_error=_rms(sq), theta=theta, estimates=est,
    )


# ----------------------------------------------------------------------------
# our density estimator


def band_error(est: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Summed squared error over the measured bands (i, (i - n) mod d), n = 0 .. floor(d/2)."""
    d = rho.shape[0]
    i = np.arange(d)
    tot = 0.0
    for n in range(band_count(d)):
        j = (i - n) % d
        tot = tot + np.sum(np.abs(est[..., i, j] - rho[i, j]) ** 2, axis=-1)
    return tot


def estimate_density_ours_noisy(rho, N: int, trials: int, seed=None, average_redundant: bool = False) -> NoiseRunReport:
    """Shift-gate schedule on sampled frequencies; N particles per gate, split N/2 + N/2.

    By default every band element keeps its own reading, which is the
    estimator the analytic budget describes.  ``average_redundant=True``
    averages the doubly measured n = d/2 band (even d) and lands below it.
    """
    rho = check_density(rho)
    d = rho.shape[0]
    tables = density_tables(rho)
    budget = ShotBudget.equal(N, ("x", "y"))
    rngs = _child_rngs(seed, len(tables))
    freqs = {n: sample_table(tables[n], budget, r, trials) for n, r in zip(sorted(tables), rngs)}
    est = np.empty((trials, d, d), dtype=complex)
    for t in range(trials):
        tabs = {n: ProbabilityTable(f[t]) for n, f in freqs.items()}
        est[t] = density_from_tables(tabs, average_redundant=average_redundant).matrix
    return NoiseRunReport(
        "ours_density", d, 1, N, trials,
        analytic_error=analytic_density_ours(d, N),
        empirical_error=_rms(band_error(est, rho)), estimates=est,
    )


# ----------------------------------------------------------------------------
# Vallone-2018 density estimator

_PROBE_BASES = {
    "z": np.eye(2, dtype=complex),
    "x": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "y": np.array([[1, 1j], [1, -1j]], dtype=complex) / np.sqrt(2),
}
# (probe A basis, probe B basis) for each measured family
VALLONE_FAMILIES = {"zz": ("z", "z"), "yy": ("y", "y"), "xy": ("x", "y")}


def vallone_probabilities(rho, i: int, theta: float) -> dict[str, np.ndarray]:
    """p(j, l_A, l_B) for configuration i; each family array has shape (d, 2, 2).

    Order is system (x) A (x) B; both probes start in |0>.  Probe A couples
    to Pi_i and probe B to the projector on the uniform superposition.
    """
    rho = as_matrix(rho)
    d = rho.shape[0]
    pi = np.zeros((d, d), complex)
    pi[i, i] = 1
    b0 = np.full(d, 1 / np.sqrt(d))
    eye2 = np.eye(2)
    u_a = unitary_exponential(tensor(pi, SIGMA_Y, eye2), theta)
    u_b = unitary_exponential(tensor(ketbra(b0), eye2, SIGMA_Y), theta)
    u = u_b @ u_a
    z0 = ketbra(np.array([1, 0], complex))
    r = (u @ tensor(rho, z0, z0) @ dag(u)).reshape(d, 2, 2, d, 2, 2)
    out = {}
    for name, (ba, bb) in VALLONE_FAMILIES.items():
        ka, kb = _PROBE_BASES[ba], _PROBE_BASES[bb]
        out[name] = _vallone_contract(r, ka, kb)
    return out


def _vallone_contract(r, ka, kb) -> np.ndarray:
    # p[j, x, y] = sum_{a,b,e,f} <x|a><y|b> r[j,a,b,j,e,f] <e|x><f|y>
    return np.einsum("xa,yb,jabjef,xe,yf->jxy", ka.conj(), kb.conj(), r, ka, kb, optimize=True).real


def vallone_from_probabilities(probs, d: int, theta: float) -> np.ndarray:
    """Read the two-probe statistics with the j-projector.

    rho_ii = 16 N_AB^2 p(i, 1_A, 1_B); for i != j,
    Re rho_ij = -2 N_AB <Y_A Y_B Pi_j>, Im rho_ij = 2 N_AB <X_A Y_B Pi_j>,
    with N_AB = d / (4 sin^2 theta).  ``probs[i]`` is configuration i.
    """
    check_coupling("vallone2018_density", theta)
    nab = d / (4 * math.sin(theta) ** 2)
    sgn = np.array([[1, -1], [-1, 1]])
    lead = probs[0]["zz"].shape[:-3]
    out = np.zeros(lead + (d, d), dtype=complex)
    for i in range(d):
        p = probs[i]
        yy = np.sum(p["yy"] * sgn, axis=(-2, -1))  # (..., d) over j
        xy = np.sum(p["xy"] * sgn, axis=(-2, -1))
        row = -2 * nab * yy + 2j * nab * xy
        row[..., i] = 16 * nab**2 * p["zz"][..., i, 1, 1]
        out[..., i, :] = row
    return out


def vallone_passthrough(rho, theta: float) -> np.ndarray:
    d = as_matrix(rho).shape[0]
    return vallone_from_probabilities([vallone_probabilities(rho, i, theta) for i in range(d)], d, theta)


def estimate_density_vallone_noisy(rho, theta: float, N: int, trials: int, seed=None) -> NoiseRunReport:
    """Two-probe estimator; N particles per configuration i, thirds per family."""
    RivalConfig("vallone2018_density", theta)
    rho = check_density(rho)
    d = rho.shape[0]
    budget = ShotBudget.equal(N, tuple(VALLONE_FAMILIES))
    rngs = _child_rngs(seed, d)
    probs = []
    for i in range(d):
        c = sample_counts(vallone_probabilities(rho, i, theta), budget, rngs[i], trials)
        probs.append({f: c[f] / budget.allocation[f] for f in c})
    est = vallone_from_probabilities(probs, d, theta)
    sq = np.sum(np.abs(est - rho) ** 2, axis=(-2, -1))
    return NoiseRunReport(
        "vallone2018_density", d, 1, N, trials,
        analytic_error=analytic_density_vallone(d, N, theta),
        empirical_error=_rms(sq), theta=theta, estimates=est,
    )


# ----------------------------------------------------------------------------
# Xu-Zhou-2024 density estimator


def xuzhou_generator(d: int, i: int, j: int) -> np.ndarray:
    """|i><j| + |j><i| off the diagonal, Pi_i on it."""
    g = np.zeros((d, d), complex)
    if i == j:
        g[i, i] = 1
    else:
        g[i, j] = g[j, i] = 1
    return g


def xuzhou_probabilities(rho, i: int, j: int, theta: float) -> dict[str, np.ndarray]:
    """Probe x and y families against the computational system outcome, shape (2, d)."""
    rho = as_matrix(rho)
    d = rho.shape[0]
    u = unitary_exponential(np.kron(SIGMA_Y, xuzhou_generator(d, i, j)), theta)
    r = (u @ np.kron(ketbra(np.array([1, 0], complex)), rho) @ dag(u)).reshape(2, d, 2, d)
    out = {}
    for name in ("x", "y"):
        k = _PROBE_BASES[name]
        out[name] = np.einsum("ra,asbs,rb->rs", k.conj(), r, k, optimize=True).real
    return out


def xuzhou_element(p_i, p_j, i: int, j: int, theta: float):
    """Re = [dx(i) + dx(j)]/(2 sin 2theta), Im = [-dy(i) + dy(j)]/(2 sin 2theta).

    ``p_i`` and ``p_j`` are the family dicts used for outcome i and j
    respectively (independent sub-experiments under sampling).
    """
    s2 = math.sin(2 * theta)
    dx_i = p_i["x"][..., 0, i] - p_i["x"][..., 1, i]
    dx_j = p_j["x"][..., 0, j] - p_j["x"][..., 1, j]
    dy_i = p_i["y"][..., 0, i] - p_i["y"][..., 1, i]
    dy_j = p_j["y"][..., 0, j] - p_j["y"][..., 1, j]
    return (dx_i + dx_j) / (2 * s2) + 1j * (-dy_i + dy_j) / (2 * s2)


def xuzhou_passthrough(rho, theta: float) -> np.ndarray:
    check_coupling("xuzhou2024_density", theta)
    d = as_matrix(rho).shape[0]
    out = np.zeros((d, d), complex)
    for i in range(d):
        for j in range(d):
            p = xuzhou_probabilities(rho, i, j, theta)
            out[i, j] = xuzhou_element(p, p, i, j, theta)
    return out


def estimate_density_xuzhou_noisy(rho, theta: float, N: int, trials: int, seed=None) -> NoiseRunReport:
    """Rival estimator; N particles per element in four sub-experiments of N/4."""
    RivalConfig("xuzhou2024_density", theta)
    rho = check_density(rho)
    d = rho.shape[0]
    quarter = ShotBudget.equal(N, ("xi", "yi", "xj", "yj"))
    rngs = _child_rngs(seed, d * d)
    est = np.zeros((trials, d, d), complex)
    for i in range(d):
        for j in range(d):
            exact = xuzhou_probabilities(rho, i, j, theta)
            fams = {"xi": exact["x"], "yi": exact["y"], "xj": exact["x"], "yj": exact["y"]}
            c = sample_counts(fams, quarter, rngs[i * d + j], trials)
            f = {k: c[k] / quarter.allocation[k] for k in c}
            est[:, i, j] = xuzhou_element({"x": f["xi"], "y": f["yi"]}, {"x": f["xj"], "y": f["yj"]}, i, j, theta)
    sq = np.sum(np.abs(est - rho) ** 2, axis=(-2, -1))
    return NoiseRunReport(
        "xuzhou2024_density", d, 1, N, trials,
        analytic_error=analytic_density_xuzhou(d, N, theta),
        empirical_error=_rms(sq), theta=theta, estimates=est,
    )


# ----------------------------------------------------------------------------
# sweeps


def analytic_error(method: str, d_s: int, d_e: int, N: float, theta: float | None = None) -> float:
    """Total-error formula for ``method``; ``theta`` is ignored by our estimators."""
    if method == "ours_povm":
        return analytic_povm_ours(d_s, d_e, N)
    if method == "xu2021_povm":
        return analytic_povm_xu2021(d_s, N, theta)
    if method == "ours_density":
        return analytic_density_ours(d_s, N)
    if method == "vallone2018_density":
        return analytic_density_vallone(d_s, N, theta)
    if method == "xuzhou2024_density":
        return analytic_density_xuzhou(d_s, N, theta)
    raise ValueError(f"unknown method {method!r}")


def analytic_element_error(method: str, d_s: int, d_e: int, N: float, trace_e: float, theta: float | None = None) -> float:
    """Per-POVM-element formula (alpha_k = 1/d_E for our estimator)."""
    if method == "ours_povm":
        return analytic_povm_ours_element(d_s, N, trace_e, 1 / d_e)
    if method == "xu2021_povm":
        return analytic_povm_xu2021_element(d_s, N, trace_e, theta)
    raise ValueError(f"no per-element formula for {method!r}")


def error_sweep(
    methods: Iterable[str],
    thetas: Sequence[float],
    d_s: int,
    d_e: int,
    N: int,
    trials: int = 0,
    seed=None,
    trace_e: float | None = None,
    channel=None,
    state=None,
) -> list[NoiseRunReport]:
    """Rows of analytic (and, with ``trials > 0``, empirical) errors over a theta grid.

    Our estimators do not depend on theta; their row is repeated at every
    grid point so each theta has a complete comparison.  With ``trace_e``
    the per-element POVM formulas are tabulated instead of totals (analytic
    only) and the method ids carry an ``_element`` suffix.  ``channel`` is a
    (U_SE, xi) pair and ``state`` a density matrix for the Monte Carlo rows;
    both default to seeded random instances.
    """
    methods = list(methods)
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}")
    ss = np.random.SeedSequence(seed)
    inst_seed, run_seed = ss.spawn(2)
    inst_rng = np.random.default_rng(inst_seed)
    if trials and any(m in POVM_METHODS for m in methods) and channel is None:
        from .qmath import random_dilation

        channel = (random_dilation(d_s, d_e, inst_rng), uniform_env_state(d_e))
    if trials and any(m in DENSITY_METHODS for m in methods) and state is None:
        from .qmath import random_density

        state = random_density(d_s, inst_rng)
    run_seeds = iter(run_seed.spawn(len(methods) * max(len(thetas), 1)))

    rows: list[NoiseRunReport] = []
    cache: dict[str, NoiseRunReport] = {}
    for th in thetas:
        for m in methods:
            rs = next(run_seeds)
            if trace_e is not None:
                if m not in POVM_METHODS:
                    continue
                a = analytic_element_error(m, d_s, d_e, N, trace_e, th)
                rows.append(NoiseRunReport(m + "_element", d_s, d_e, N, 0, a, None, float(th)))
                continue
            if not trials:
                rows.append(NoiseRunReport(m, d_s, d_e if m in POVM_METHODS else 1, N, 0,
                                           analytic_error(m, d_s, d_e, N, th), None, float(th)))
                continue
            rep = _run(m, th, N, trials, rs, channel, state, cache)
            rows.append(NoiseRunReport(rep.method, rep.d_s, rep.d_e, N, trials,
                                       rep.analytic_error, rep.empirical_error, float(th)))
    return rows


def _run(m, th, N, trials, seed, channel, state, cache) -> NoiseRunReport:
    if m == "ours_povm":
        # theta-independent: simulate once, reuse across the grid
        if m not in cache:
            cache[m] = estimate_povm_ours_noisy(channel[0], N, trials, seed, xi=channel[1])
        return cache[m]
    if m == "ours_density":
        if m not in cache:
            cache[m] = estimate_density_ours_noisy(state, N, trials, seed)
        return cache[m]
    if m == "xu2021_povm":
        return estimate_povm_xu2021_noisy(channel[0], th, N, trials, seed, xi=channel[1])
    if m == "vallone2018_density":
        return estimate_density_vallone_noisy(state, th, N, trials, seed)
    return estimate_density_xuzhou_noisy(state, th, N, trials, seed)
