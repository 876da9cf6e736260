"""Sweep driver, slope fitting, and the statistical harnesses."""

import math

import numpy as np
import pytest

from gsot.errors import ConfigError
from gsot.experiments import (CSV_HEADER, DEFAULT_N_GRID, AxiomsConfig,
                              PlanConfig, ResultTable, Row, SweepConfig,
                              config_hash, default_n_grid, fit_loglog_slope,
                              run_convergence_sweep, run_metric_axioms,
                              run_plan_convergence)
from gsot.measures import DiscreteMeasure, SourceSpec
from gsot.ot_exact import solve_transport


def _cube_config(**kw):
    base = dict(source=SourceSpec("uniform-cube", 2),
                sigma_grid=(0.0, 1.0), n_grid=(10, 20, 40, 80),
                trials=3, seed=5)
    base.update(kw)
    return SweepConfig(**base)


def _synthetic_table(exponent, coeff=3.0, sigma=1.0, ns=(10, 30, 100, 300, 1000)):
    rows = [Row(2, sigma, n, n, t, coeff * n ** exponent, 0.0)
            for n in ns for t in range(3)]
    return ResultTable(rows=rows)


# -------------------------------------------------------------- SweepConfig

def test_default_n_grid_contents():
    assert default_n_grid() == DEFAULT_N_GRID
    assert DEFAULT_N_GRID[0] == 10
    assert DEFAULT_N_GRID[-1] == 3000
    assert len(DEFAULT_N_GRID) == 8
    assert list(DEFAULT_N_GRID) == sorted(set(DEFAULT_N_GRID))


def test_sweep_config_validation():
    with pytest.raises(ConfigError):
        _cube_config(sigma_grid=())
    with pytest.raises(ConfigError):
        _cube_config(sigma_grid=(1.0, 0.5))
    with pytest.raises(ConfigError):
        _cube_config(sigma_grid=(-1.0, 0.5))
    with pytest.raises(ConfigError):
        _cube_config(n_grid=(10, 10, 20))
    with pytest.raises(ConfigError):
        _cube_config(n_grid=(0, 5))
    with pytest.raises(ConfigError):
        _cube_config(trials=1)
    with pytest.raises(ConfigError):
        _cube_config(m_rule="sometimes")
    with pytest.raises(ConfigError):
        _cube_config(m_rule="fixed")
    with pytest.raises(ConfigError):
        _cube_config(m_rule="fixed", m_fixed=40)  # below max(n_grid)
    with pytest.raises(ConfigError):
        _cube_config(noise_family="uniform", crn=True)
    with pytest.raises(ConfigError):
        _cube_config(noise_family="sobolev")


def test_m_for_rules():
    cfg = _cube_config()
    assert cfg.m_for(40) == 40
    fixed = _cube_config(m_rule="fixed", m_fixed=100)
    assert fixed.m_for(10) == 100


def test_config_hash_stable_and_sensitive():
    a = config_hash(_cube_config())
    b = config_hash(_cube_config())
    c = config_hash(_cube_config(seed=6))
    d = config_hash(_cube_config(trials=4))
    assert a == b
    assert len({a, c, d}) == 3
    assert len(a) == 64


# -------------------------------------------------------------------- sweep

def test_sweep_bitwise_deterministic_and_jobs_independent():
    cfg = _cube_config()
    t1 = run_convergence_sweep(cfg, jobs=1)
    t2 = run_convergence_sweep(cfg, jobs=4)
    csv1 = "\n".join(line.rsplit(",", 1)[0] for line in t1.to_csv_string().splitlines())
    csv2 = "\n".join(line.rsplit(",", 1)[0] for line in t2.to_csv_string().splitlines())
    assert csv1 == csv2  # identical apart from wall-clock timings
    assert [r.estimate for r in t1.rows] == [r.estimate for r in t2.rows]
    assert not t1.failed
    assert t1.metadata["config_hash"] == config_hash(cfg)


def test_sweep_row_order_and_cardinality():
    cfg = _cube_config()
    table = run_convergence_sweep(cfg)
    assert len(table.rows) == len(cfg.sigma_grid) * len(cfg.n_grid) * cfg.trials
    keys = [(r.sigma, r.n, r.trial) for r in table.rows]
    want = [(s, n, t) for s in cfg.sigma_grid for n in cfg.n_grid
            for t in range(cfg.trials)]
    assert keys == want
    assert all(r.m == r.n for r in table.rows)
    assert all(r.d == 2 for r in table.rows)


def test_sweep_jobs_validation():
    with pytest.raises(ConfigError):
        run_convergence_sweep(_cube_config(), jobs=0)


def test_sweep_dirac_pair_sigma_zero_rows_are_zero():
    # one-sample self distance of a point mass without noise is exactly 0
    cfg = SweepConfig(source=SourceSpec("dirac-pair", 2, x=(0.0, 0.0), y=(1.0, 0.0)),
                      sigma_grid=(0.0,), n_grid=(5, 10, 20, 40), trials=2, seed=1)
    table = run_convergence_sweep(cfg)
    assert all(r.estimate == 0.0 for r in table.rows)


def test_mean_by_n_aggregates():
    table = _synthetic_table(-0.5)
    means = table.mean_by_n(1.0)
    assert set(means) == {10, 30, 100, 300, 1000}
    mean, se = means[100]
    assert abs(mean - 3.0 * 100 ** -0.5) <= 1e-12
    assert se == 0.0
    assert table.sigmas() == (1.0,)


# ---------------------------------------------------------------------- CSV

def test_csv_round_trip_bitwise():
    cfg = _cube_config(n_grid=(10, 15, 20, 30))
    table = run_convergence_sweep(cfg)
    text = table.to_csv_string()
    back = ResultTable.from_csv_string(text)
    assert back.to_csv_string() == text
    assert [r.estimate for r in back.rows] == [r.estimate for r in table.rows]


def test_csv_file_round_trip(tmp_path):
    table = _synthetic_table(-0.5)
    path = tmp_path / "rows.csv"
    table.to_csv(path)
    back = ResultTable.from_csv(path)
    assert back.to_csv_string() == table.to_csv_string()


def test_csv_header_and_row_validation():
    with pytest.raises(ConfigError):
        ResultTable.from_csv_string("wrong,header\n")
    with pytest.raises(ConfigError):
        ResultTable.from_csv_string(CSV_HEADER + "\n1,2,3\n")
    bad_value = CSV_HEADER + "\n2,1.0,10,10,0,abc,0.0\n"
    with pytest.raises(ConfigError) as err:
        ResultTable.from_csv_string(bad_value)
    assert "row 2" in str(err.value)


def test_failed_flag_on_nan_rows():
    table = _synthetic_table(-0.5)
    assert not table.failed
    table.rows.append(Row(2, 1.0, 10, 10, 9, float("nan"), 0.0))
    assert table.failed


# -------------------------------------------------------------- slope fits

def test_slope_fit_exact_on_synthetic_power_laws():
    for exponent in (-0.5, -0.2):
        fit = fit_loglog_slope(_synthetic_table(exponent), 1.0)
        assert abs(fit.slope - exponent) <= 1e-12
        assert abs(fit.intercept - math.log(3.0)) <= 1e-12
        assert fit.r2 >= 1.0 - 1e-12
        assert fit.excluded == ()
        assert fit.n_used == (10, 30, 100, 300, 1000)


def test_slope_fit_needs_four_sizes():
    rows = [Row(2, 1.0, n, n, 0, 1.0 / n, 0.0) for n in (10, 20, 30)]
    with pytest.raises(ConfigError):
        fit_loglog_slope(ResultTable(rows=rows), 1.0)


def test_slope_fit_excludes_nonpositive_means():
    table = _synthetic_table(-0.5)
    table.rows = [r for r in table.rows if r.n != 30] \
        + [Row(2, 1.0, 30, 30, t, 0.0, 0.0) for t in range(3)]
    fit = fit_loglog_slope(table, 1.0)
    assert 30 in fit.excluded
    assert 30 not in fit.n_used
    assert abs(fit.slope - (-0.5)) <= 1e-12


def test_slope_fit_drops_transient_smallest_n():
    # clean n^{-1/2} decay except a flat transient at the smallest size
    rows = [Row(2, 1.0, 10, 10, 0, 0.02, 0.0)]
    rows += [Row(2, 1.0, n, n, 0, 3.0 * n ** -0.5, 0.0)
             for n in (30, 100, 300, 1000)]
    fit = fit_loglog_slope(ResultTable(rows=rows), 1.0)
    assert fit.excluded == (10,)
    assert abs(fit.slope - (-0.5)) <= 1e-12
    assert fit.r2 >= 1.0 - 1e-12


# ------------------------------------------------------------ metric axioms

def test_metric_axioms_pass_on_default_style_run():
    report = run_metric_axioms(AxiomsConfig(d=2, sigma=1.0, triples=4, atoms=6,
                                            m=120, trials=3, seed=3))
    assert report.passed
    assert report.triangle_violations == 0
    assert report.symmetry_exact
    assert report.symmetry_max_diff == 0.0
    assert report.self_decreasing
    assert len(report.triangle) == 4
    assert report.allowance > 0


def test_metric_axioms_triangle_on_collinear_diracs():
    # collinear point masses make the triangle inequality tight, so the
    # statistical check must still clear it within its tolerance
    report = run_metric_axioms(AxiomsConfig(d=1, sigma=0.5, triples=2, atoms=2,
                                            m=150, trials=3, seed=8, spread=1.5))
    assert report.triangle_violations == 0


def test_axioms_config_validation():
    with pytest.raises(ConfigError):
        AxiomsConfig(d=0)
    with pytest.raises(ConfigError):
        AxiomsConfig(trials=1)
    with pytest.raises(ConfigError):
        AxiomsConfig(m=1)
    with pytest.raises(ConfigError):
        AxiomsConfig(noise_family="perlin")


# --------------------------------------------------------- plan convergence

def _plan_pair():
    mu = DiscreteMeasure(np.array([[0.0, 0.0], [1.0, 0.5], [0.2, 1.0],
                                   [2.0, 2.0], [0.5, 2.5]]),
                         np.array([0.3, 0.2, 0.2, 0.2, 0.1]))
    nu = DiscreteMeasure(np.array([[4.0, 0.0], [5.0, 1.0], [4.5, 2.0],
                                   [6.0, 0.5], [5.5, 2.5]]),
                         np.array([0.25, 0.25, 0.2, 0.15, 0.15]))
    return mu, nu


def test_plan_convergence_approaches_exact_w1():
    mu, nu = _plan_pair()
    cfg = PlanConfig(mu=mu, nu=nu, sigma_sequence=(1.0, 0.5, 0.25, 0.0),
                     m=300, trials=4, seed=2)
    report = run_plan_convergence(cfg)
    assert report.passed
    assert report.w1_exact == solve_transport(mu, nu).cost
    # the sigma = 0 term is the exact solver output, not an estimate
    last = report.points[-1]
    assert last.sigma == 0.0
    assert last.mean == report.w1_exact
    assert last.std_err == 0.0
    # envelope widths shrink with sigma like 2 sqrt(d) sigma
    widths = [p.upper for p in report.points if p.sigma > 0]
    assert all(a > b for a, b in zip(widths, widths[1:]))


def test_plan_envelope_arithmetic():
    mu, nu = _plan_pair()
    cfg = PlanConfig(mu=mu, nu=nu, sigma_sequence=(0.5, 0.25), m=200,
                     trials=4, seed=4)
    report = run_plan_convergence(cfg)
    for p in report.points:
        assert abs(p.upper - (2.0 * math.sqrt(mu.d) * p.sigma
                              + 3.0 * p.std_err + p.allowance)) <= 1e-12
        assert abs(p.lower - (-3.0 * p.std_err)) <= 1e-12
        assert abs(p.diff - (p.mean - report.w1_exact)) <= 1e-12


def test_plan_config_validation():
    mu, nu = _plan_pair()
    with pytest.raises(ConfigError):
        PlanConfig(mu=mu, nu=nu, sigma_sequence=(0.25, 0.5))
    with pytest.raises(ConfigError):
        PlanConfig(mu=mu, nu=nu, sigma_sequence=())
    with pytest.raises(ConfigError):
        PlanConfig(mu=mu, nu=nu, crn=False)
    with pytest.raises(ConfigError):
        PlanConfig(mu=mu, nu=nu, noise_family="uniform")
    with pytest.raises(ConfigError):
        PlanConfig(mu=mu, nu=DiscreteMeasure(np.zeros((1, 3)), np.array([1.0])))
