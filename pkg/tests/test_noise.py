import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pse_tomo import noise
from pse_tomo.errors import DegenerateCoupling
from pse_tomo.framework import kraus_from_dilation, uniform_env_state
from pse_tomo.qmath import random_density, random_dilation

from .oracles import haar, rand_ket, rand_rho

XI2 = uniform_env_state(2)


def rel(a, b):
    return abs(a - b) / abs(b)


# --- analytic formulas, hand-substituted ------------------------------------


def test_povm_total_spot_value():
    assert rel(noise.analytic_povm_ours(2, 2, 1e6), 0.004) <= 1e-12


def test_povm_element_formula():
    for d, n, tr, a in [(2, 1e4, 1.8, 0.5), (3, 1e5, 0.4, 1 / 3), (20, 1e6, 7.0, 0.2)]:
        hand = math.sqrt((d / (a * n)) * (a * d + tr))
        assert rel(noise.analytic_povm_ours_element(d, n, tr, a), hand) <= 1e-12


def test_povm_general_reduces_to_total():
    # alpha_k = 1/d_E and traces summing to d_S give d sqrt(2 d_E / N)
    traces = [0.3, 0.9, 0.8]
    assert rel(noise.analytic_povm_ours_general(2, 1e5, traces, [1 / 3] * 3), noise.analytic_povm_ours(2, 3, 1e5)) <= 1e-12


def test_density_spot_and_branches():
    assert rel(noise.analytic_density_ours(2, 1e6), 2 * math.sqrt(4 / 2e6)) <= 1e-12
    assert abs(noise.analytic_density_ours(2, 1e6) - 2.828e-3) <= 1e-6
    assert rel(noise.analytic_density_ours(3, 1e4), 2 * math.sqrt(4 / 2e4)) <= 1e-12
    assert rel(noise.analytic_density_ours(4, 1e4), 2 * math.sqrt(6 / 2e4)) <= 1e-12


def test_xuzhou_matches_ours_at_quarter_pi():
    assert rel(noise.analytic_density_xuzhou(2, 1e6, math.pi / 4), noise.analytic_density_ours(2, 1e6)) <= 1e-12
    at8 = noise.analytic_density_xuzhou(2, 1e6, math.pi / 8)
    assert rel(at8, 2 / math.sin(math.pi / 4) * math.sqrt(2 / 1e6)) <= 1e-12
    assert at8 > noise.analytic_density_ours(2, 1e6)


def test_xu_formulas_by_hand():
    d, n, th = 3, 1e5, 0.7
    br = d + 2 * math.sin(th) ** 2 * math.tan(th / 2) ** 2
    assert rel(noise.analytic_povm_xu2021(d, n, th), d / math.sin(th) * math.sqrt(1.5 / n * br)) <= 1e-12
    assert rel(noise.analytic_povm_xu2021_element(d, n, 1.2, th),
               math.sqrt(6 * d / (4 * n * math.sin(th) ** 2) * 1.2 * br)) <= 1e-12
    v = noise.analytic_density_vallone(d, n, th)
    assert rel(v, math.sqrt(6) * d / (2 * math.sin(th) ** 2) * math.sqrt((d + 1) / n)) <= 1e-12


def test_divergences():
    r = noise.analytic_povm_xu2021(2, 1e6, 1e-4) / noise.analytic_povm_xu2021(2, 1e6, 1e-3)
    assert abs(r - 10) <= 1e-3
    r = noise.analytic_density_vallone(2, 1e6, 1e-4) / noise.analytic_density_vallone(2, 1e6, 1e-3)
    assert abs(r - 100) <= 1e-2


def test_degenerate_couplings():
    with pytest.raises(DegenerateCoupling):
        noise.analytic_povm_xu2021(2, 1e6, 0.0)
    with pytest.raises(DegenerateCoupling):
        noise.analytic_density_vallone(2, 1e6, math.pi)
    with pytest.raises(DegenerateCoupling):
        noise.analytic_density_xuzhou(2, 1e6, math.pi / 2)
    with pytest.raises(DegenerateCoupling):
        noise.estimate_povm_xu2021_noisy(random_dilation(2, 2, 0), 0.0, 100, 1)


@pytest.mark.parametrize("theta", np.linspace(0.01, math.pi / 2 - 0.01, 25))
def test_fig3_element_ordering_high_trace(theta):
    ours = noise.analytic_povm_ours_element(2, 1e6, 1.8, 0.5)
    assert noise.analytic_povm_xu2021_element(2, 1e6, 1.8, theta) > ours


@pytest.mark.parametrize("theta", np.linspace(0.01, math.pi - 0.01, 25))
def test_vallone_above_ours(theta):
    assert noise.analytic_density_vallone(2, 1e6, theta) > noise.analytic_density_ours(2, 1e6)


def test_low_trace_comparable_mid_theta():
    ours = noise.analytic_povm_ours_element(2, 1e6, 0.5, 0.5)
    mids = [noise.analytic_povm_xu2021_element(2, 1e6, 0.5, t) for t in np.linspace(0.9, 1.5, 7)]
    # within 25% of one another, on either side
    assert all(0.75 <= m / ours <= 1.25 for m in mids)


def test_total_povm_regimes():
    grid = np.linspace(0.05, math.pi / 2, 50)
    # d_S = d_E = 2: ours slightly better everywhere
    assert all(noise.analytic_povm_ours(2, 2, 1e6) < noise.analytic_povm_xu2021(2, 1e6, t) for t in grid)
    # d_E >= d_S: the rival wins somewhere
    assert any(noise.analytic_povm_xu2021(2, 1e6, t) < noise.analytic_povm_ours(2, 5, 1e6) for t in grid)
    # d_S = 20 with d_S - d_E = 15: ours wins again; large d_E flips it
    assert all(noise.analytic_povm_ours(20, 5, 1e6) < noise.analytic_povm_xu2021(20, 1e6, t) for t in grid)
    assert any(noise.analytic_povm_xu2021(20, 1e6, t) < noise.analytic_povm_ours(20, 20, 1e6) for t in grid)


@given(st.integers(1, 30), st.integers(1, 30), st.floats(1e2, 1e9), st.floats(0.05, 3.0))
def test_formulas_pure_and_scaling(d_s, d_e, n, th):
    # every budget scales as N^(-1/2) and is a pure function of its arguments
    for f in (lambda m: noise.analytic_povm_ours(d_s, d_e, m),
              lambda m: noise.analytic_density_ours(d_s, m),
              lambda m: noise.analytic_povm_xu2021(d_s, m, th)):
        assert f(n) == f(n)
        assert rel(f(n) / f(4 * n), 2.0) <= 1e-12


def test_poisson_correction_is_sqrt2():
    tr = [0.7, 1.3]
    assert rel(noise.poisson_povm_ours(2, 1e5, tr, [0.5, 0.5]), math.sqrt(2) * noise.analytic_povm_ours(2, 2, 1e5)) <= 1e-12


# --- sampling -----------------------------------------------------------------


def test_sample_counts_deterministic_outcome():
    budget = noise.ShotBudget.equal(1000, ["a"])
    c = noise.sample_counts({"a": np.array([0.0, 1.0, 0.0])}, budget, seed=1)
    assert c["a"].tolist() == [0, 1000, 0]


def test_sample_counts_uniform_binomial():
    n = 4 * 10**6
    c = noise.sample_counts({"a": np.full(4, 0.25)}, noise.ShotBudget.equal(n, ["a"]), seed=2)["a"]
    sigma = math.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(c - n / 4) <= 3 * sigma)


def test_sample_counts_seeded():
    fam = {"a": np.array([0.2, 0.3, 0.5]), "b": np.array([[0.1, 0.9]])}
    b = noise.ShotBudget.equal(101, ["a", "b"])
    c1 = noise.sample_counts(fam, b, seed=5, trials=3)
    c2 = noise.sample_counts(fam, b, seed=5, trials=3)
    assert all(np.array_equal(c1[k], c2[k]) for k in fam)
    assert c1["b"].shape == (3, 1, 2) and c1["a"].sum(axis=1).tolist() == [50] * 3


def test_shot_budget_checks():
    with pytest.raises(ValueError):
        noise.ShotBudget(10, {"x": 3, "y": 3})
    assert noise.ShotBudget.equal(11, ["x", "y"]).allocation == {"x": 5, "y": 6}


# --- exact-probability pass-through -------------------------------------------


@pytest.mark.parametrize("theta", [0.3, 1.0, 2.0])
def test_xu2021_passthrough(rng, theta):
    u, xi = haar(6, rng), rand_ket(2, rng)
    povm = np.einsum("kji,kjl->kil", *(lambda a: (a.conj(), a))(kraus_from_dilation(u, xi)))
    assert np.max(np.abs(noise.xu2021_passthrough(u, xi, theta) - povm)) <= 1e-6


@pytest.mark.parametrize("d", [2, 3, 4])
@pytest.mark.parametrize("theta", [0.4, 1.1])
def test_density_rival_passthrough(d, theta):
    rho = rand_rho(d, np.random.default_rng(d))
    assert np.max(np.abs(noise.vallone_passthrough(rho, theta) - rho)) <= 1e-6
    assert np.max(np.abs(noise.xuzhou_passthrough(rho, theta) - rho)) <= 1e-6


# --- Monte Carlo consistency ----------------------------------------------------


def test_ours_density_mc_ratio_d4():
    rep = noise.estimate_density_ours_noisy(random_density(4, 2), 10**5, 200, seed=3)
    assert 0.8 <= rep.ratio <= 1.25


def test_ours_density_averaged_band_is_lower():
    rho = random_density(2, 5)
    plain = noise.estimate_density_ours_noisy(rho, 10**5, 300, seed=4)
    avg = noise.estimate_density_ours_noisy(rho, 10**5, 300, seed=4, average_redundant=True)
    assert avg.empirical_error < plain.empirical_error


def test_ours_povm_mc_against_both_budgets():
    u = random_dilation(2, 2, 1)
    rep = noise.estimate_povm_ours_noisy(u, 10**5, 400, seed=6, xi=XI2)
    a = kraus_from_dilation(u, XI2)
    traces = [np.trace(x.conj().T @ x).real for x in a]
    corrected = noise.poisson_povm_ours(2, 10**5, traces, [0.5, 0.5])
    assert 0.8 <= rep.empirical_error / corrected <= 1.25
    # against the printed budget the ratio sits near sqrt(28/16), the
    # multinomial version of the doubled Poisson variance
    assert abs(rep.ratio - math.sqrt(28 / 16)) <= 0.1


@pytest.mark.parametrize(
    "run",
    [
        lambda n, t, s: noise.estimate_povm_xu2021_noisy(random_dilation(2, 2, 1), 0.8, n, t, s, XI2),
        lambda n, t, s: noise.estimate_density_vallone_noisy(random_density(2, 1), 0.8, n, t, s),
        lambda n, t, s: noise.estimate_density_xuzhou_noisy(random_density(2, 1), 0.6, n, t, s),
        lambda n, t, s: noise.estimate_density_ours_noisy(random_density(3, 1), n, t, s),
    ],
    ids=["xu2021", "vallone", "xuzhou", "ours_density_d3"],
)
def test_mc_ratio_and_sqrt_n(run):
    rep = run(10**5, 200, 11)
    assert 0.75 <= rep.ratio <= 1.3
    e_lo = run(250_000, 100, 12).empirical_error
    e_hi = run(10**6, 100, 13).empirical_error
    assert 2 * 0.7 <= e_lo / e_hi <= 2 * 1.3


def test_ours_povm_sqrt_n():
    u = random_dilation(2, 2, 1)
    e_lo = noise.estimate_povm_ours_noisy(u, 250_000, 100, 1, XI2).empirical_error
    e_hi = noise.estimate_povm_ours_noisy(u, 10**6, 100, 2, XI2).empirical_error
    assert 2 * 0.7 <= e_lo / e_hi <= 2 * 1.3


def test_estimators_seeded():
    rho = random_density(2, 0)
    a = noise.estimate_density_xuzhou_noisy(rho, 0.6, 1000, 5, seed=9)
    b = noise.estimate_density_xuzhou_noisy(rho, 0.6, 1000, 5, seed=9)
    assert np.array_equal(a.estimates, b.estimates)


# --- sweeps ---------------------------------------------------------------------


def test_error_sweep_rows():
    rows = noise.error_sweep(noise.METHODS, [0.3, 0.9], 2, 2, 10**5)
    assert len(rows) == 10
    ours = [r for r in rows if r.method == "ours_povm"]
    assert [r.theta for r in ours] == [0.3, 0.9]
    assert ours[0].analytic_error == ours[1].analytic_error
    assert all(r.empirical_error is None and r.ratio is None for r in rows)
    assert set(rows[0].row()) == {"method", "d_s", "d_e", "theta", "n", "trials", "analytic_error",
                                  "empirical_error", "ratio"}


def test_error_sweep_element_rows_and_ordering():
    grid = np.linspace(0.05, 1.5, 10)
    rows = noise.error_sweep(["ours_povm", "xu2021_povm", "ours_density"], grid, 2, 2, 10**6, trace_e=1.8)
    assert {r.method for r in rows} == {"ours_povm_element", "xu2021_povm_element"}
    by_theta = {}
    for r in rows:
        by_theta.setdefault(r.theta, {})[r.method] = r.analytic_error
    assert all(v["ours_povm_element"] < v["xu2021_povm_element"] for v in by_theta.values())


def test_error_sweep_monte_carlo_seeded():
    a = noise.error_sweep(["ours_density", "xuzhou2024_density"], [0.6], 2, 1, 10**4, trials=20, seed=3)
    b = noise.error_sweep(["ours_density", "xuzhou2024_density"], [0.6], 2, 1, 10**4, trials=20, seed=3)
    assert [r.row() for r in a] == [r.row() for r in b]
    assert all(r.empirical_error is not None for r in a)


def test_error_sweep_unknown_method():
    with pytest.raises(ValueError):
        noise.error_sweep(["nope"], [0.5], 2, 2, 100)
