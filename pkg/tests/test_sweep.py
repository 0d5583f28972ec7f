"""Sweep machinery, exponent fitting, bound checks on synthetic rows."""

import math

import numpy as np
import pytest

from aggdiff.errors import ConfigError, SweepFailure
from aggdiff.solver import RunConfig
from aggdiff.sweep import (
    FitReport,
    SweepResult,
    SweepRow,
    default_resolution_rule,
    envelope_check,
    fit_exponent,
    geometric_eps_list,
    lower_check,
    lp_scaling_check,
    resolve_workers,
    run_one_row,
    sweep,
)

BASE_1D = RunConfig(dim=1, eps=0.1, n=256, L=16.0)


def synthetic_result(eps_values, sup_fn, int_fn, init_value=0.1, dim=1):
    cfg = RunConfig(dim=dim, eps=max(eps_values), n=256, L=16.0, sigma=0.5)
    rows = []
    for e in sorted(eps_values, reverse=True):
        rows.append(SweepRow(
            eps=e, n=256, L=16.0,
            int_hm={m: int_fn(e, m) for m in range(4)},
            sup_hm={m: sup_fn(e, m) for m in range(4)},
            init_hm={m: init_value for m in range(4)},
            int_lp={p: int_fn(e, 0) for p in (1.0, 2.0)},
            length_scale={m: e for m in range(3)},
            mass_drift=0.0, runtime_s=0.0,
        ))
    return SweepResult(base_config=cfg, rows=rows)


EPS10 = list(np.geomspace(0.1, 0.00125, 10))


class TestFitExponent:
    def test_exact_inverse_power(self):
        pairs = [(e, 1.0 / e) for e in EPS10]
        rep = fit_exponent(pairs, "x", theory_slope=-1.0, tolerance=0.01)
        assert rep.slope == pytest.approx(-1.0, abs=1e-12)
        assert rep.r_squared == pytest.approx(1.0, abs=1e-12)
        assert rep.passed

    def test_prefactor_in_intercept(self):
        pairs = [(e, 7.0 * e**-0.5) for e in EPS10]
        rep = fit_exponent(pairs)
        assert rep.slope == pytest.approx(-0.5, abs=1e-12)
        assert rep.intercept == pytest.approx(math.log(7.0), abs=1e-10)
        assert rep.passed is None

    def test_requires_four_points(self):
        with pytest.raises(ConfigError):
            fit_exponent([(0.1, 1.0), (0.2, 2.0), (0.3, 3.0)])

    def test_rejects_nonpositive(self):
        pairs = [(e, 1.0 / e) for e in EPS10]
        pairs[3] = (pairs[3][0], -1.0)
        with pytest.raises(ConfigError):
            fit_exponent(pairs)

    def test_r_squared_range(self, rng):
        pairs = [(e, math.exp(rng.normal())) for e in EPS10]
        rep = fit_exponent(pairs)
        assert 0.0 <= rep.r_squared <= 1.0

    def test_report_validates_r_squared(self):
        with pytest.raises(ConfigError):
            FitReport(observable="x", n_points=4, slope=1.0, intercept=0.0,
                      r_squared=1.5)


class TestChecks:
    def test_envelope_exact_power_passes(self):
        res = synthetic_result(
            EPS10,
            sup_fn=lambda e, m: e ** (-(1 + 2 * m) / 2.0),
            int_fn=lambda e, m: e ** (-(2 * m + 1) / 2.0),
        )
        rep = envelope_check(res, 1)
        assert rep.ratio_max_min == pytest.approx(1.0, rel=1e-12)
        assert rep.passed

    def test_envelope_extra_halfpower_fails(self):
        res = synthetic_result(
            EPS10,
            sup_fn=lambda e, m: e ** (-(1 + 2 * m) / 2.0 - 0.5),
            int_fn=lambda e, m: e ** (-(2 * m + 1) / 2.0),
        )
        rep = envelope_check(res, 1)
        # half an extra power over 1.9 decades: ratio ~ 10^0.95 >> 3
        assert rep.ratio_max_min > 3.0
        assert not rep.passed

    def test_envelope_requires_sup_above_initial(self):
        res = synthetic_result(
            EPS10,
            sup_fn=lambda e, m: e ** (-(1 + 2 * m) / 2.0),
            int_fn=lambda e, m: e ** (-(2 * m + 1) / 2.0),
            init_value=1e9,
        )
        assert not envelope_check(res, 1).passed

    def test_lower_exact_power_passes(self):
        res = synthetic_result(
            EPS10,
            sup_fn=lambda e, m: e ** (-(1 + 2 * m) / 2.0),
            int_fn=lambda e, m: 5.0 * e ** (-(2 * m + 1) / 2.0),
        )
        rep = lower_check(res, 2)
        assert rep.ratio_max_min == pytest.approx(1.0, rel=1e-12)
        assert rep.passed
        assert rep.slope == pytest.approx(-2.5, abs=1e-12)

    def test_lp_scaling_theory_slope(self):
        res = synthetic_result(
            EPS10,
            sup_fn=lambda e, m: 1.0,
            int_fn=lambda e, m: e**-0.5,
        )
        rep = lp_scaling_check(res, 2.0, tolerance=0.12)
        assert rep.theory_slope == pytest.approx(-0.5)
        assert rep.passed

    def test_lp_p1_conserved(self):
        res = synthetic_result(EPS10, sup_fn=lambda e, m: 1.0,
                               int_fn=lambda e, m: 1.0)
        rep = lp_scaling_check(res, 1.0)
        assert rep.theory_slope == 0.0
        assert rep.passed


class TestResolutionRule:
    def test_1d_rule(self):
        cfg = RunConfig(dim=1, eps=0.1, n=256, L=16.0)
        ns = [default_resolution_rule(e, cfg)["n"] for e in EPS10]
        # n rises (weakly) as eps falls and satisfies h <= eps/4
        assert all(a <= b for a, b in zip(ns, ns[1:]))
        for e, n in zip(EPS10, ns):
            assert 16.0 / n <= e / 4.0
        assert ns[-1] == 65536

    def test_1d_cap(self):
        cfg = RunConfig(dim=1, eps=0.1, n=256, L=16.0)
        with pytest.raises(ConfigError):
            default_resolution_rule(2e-4, cfg)

    def test_2d_rule_scales_box(self):
        cfg = RunConfig(dim=2, eps=0.2, n=256, L=4.8, sigma=0.3)
        big = default_resolution_rule(0.2, cfg)
        small = default_resolution_rule(0.02, cfg)
        assert big["L"] == pytest.approx(9.6)
        assert small["L"] == pytest.approx(4.8)
        assert small["n"] <= 1024
        for d, e in ((big, 0.2), (small, 0.02)):
            assert d["L"] / d["n"] <= e / 4.0

    def test_2d_cap(self):
        cfg = RunConfig(dim=2, eps=0.2, n=256, L=4.8, sigma=0.3)
        with pytest.raises(ConfigError):
            default_resolution_rule(0.005, cfg)


class TestSweep:
    def test_preconditions(self):
        with pytest.raises(ConfigError):
            sweep(BASE_1D, [0.1, 0.05, 0.02, 0.01, 0.005], workers=1)  # 5 pts
        with pytest.raises(ConfigError):
            sweep(BASE_1D, [0.1, 0.09, 0.08, 0.07, 0.06, 0.05], workers=1)
        with pytest.raises(ConfigError):
            sweep(BASE_1D, [0.1, 0.05, 0.02, 0.01, 0.005, -1.0], workers=1)

    def test_geometric_eps_list(self):
        lst = geometric_eps_list(0.00125, 0.1, 10)
        assert len(lst) == 10
        assert lst[0] == pytest.approx(0.1) and lst[-1] == pytest.approx(0.00125)
        ratios = [a / b for a, b in zip(lst, lst[1:])]
        assert max(ratios) == pytest.approx(min(ratios), rel=1e-12)
        with pytest.raises(ConfigError):
            geometric_eps_list(0.1, 0.01, 5)

    def test_resolve_workers_env(self, monkeypatch):
        monkeypatch.setenv("AGGDIFF_WORKERS", "3")
        assert resolve_workers(None, 10) == 3
        assert resolve_workers(None, 2) == 2
        monkeypatch.delenv("AGGDIFF_WORKERS")
        assert resolve_workers(5, 10) == 5

    def test_tiny_sweep_determinism_bitwise(self):
        cfg = RunConfig(dim=1, eps=0.5, n=256, L=12.0, sigma=0.5,
                        T_star=0.05, sample_count=16)
        eps = [0.5, 0.4, 0.3, 0.2, 0.1, 0.06, 0.05, 0.05]  # duplicate at end
        rule = lambda e, c: {"n": 256}
        r1 = sweep(cfg, eps, resolution_rule=rule, workers=1)
        r2 = sweep(cfg, eps, resolution_rule=rule, workers=1)
        for a, b in zip(r1.rows, r2.rows):
            assert a.int_hm == b.int_hm
            assert a.sup_hm == b.sup_hm
            assert a.int_lp == b.int_lp
            assert a.mass_drift == b.mass_drift
        # duplicate eps produced bit-identical rows
        last, prev = r1.rows[-1], r1.rows[-2]
        assert last.eps == prev.eps
        assert last.int_hm == prev.int_hm and last.sup_hm == prev.sup_hm

    def test_failed_row_raises_sweep_failure(self):
        # eps = 1 on a small box trips the boundary monitor
        cfg = RunConfig(dim=1, eps=0.5, n=256, L=8.0, sigma=0.5,
                        sample_count=16)
        eps = [1.0, 0.5, 0.3, 0.2, 0.15, 0.1]
        rule = lambda e, c: {"n": 256}
        with pytest.raises(SweepFailure) as exc_info:
            sweep(cfg, eps, resolution_rule=rule, workers=1)
        result = exc_info.value.result
        assert result is not None
        assert len(result.failed_rows) >= 1
        assert result.rows[0].failed
        assert "Boundary" in result.rows[0].fail_reason

    def test_run_one_row_contents(self):
        cfg = RunConfig(dim=1, eps=0.25, n=512, L=16.0, T_star=0.1,
                        sample_count=32)
        row = run_one_row(cfg)
        assert not row.failed
        assert set(row.int_hm) == {0, 1, 2, 3}
        assert set(row.length_scale) == {0, 1, 2}
        assert row.mass_drift <= 1e-10
        assert all(v >= 0 for v in row.int_hm.values())
        assert row.sup_hm[1] >= 0

    def test_rows_sorted_validation(self):
        res = synthetic_result(EPS10, lambda e, m: 1.0, lambda e, m: 1.0)
        with pytest.raises(ConfigError):
            SweepResult(base_config=res.base_config, rows=res.rows[::-1])
