"""Volterra solver: identity check, convergence order, exponent fit, bands."""

import numpy as np
import pytest

import renewal_asym.volterra_engine as ve
from renewal_asym.model import (
    ContinuousProblem,
    ExpMixture,
    ModelError,
    NegativeWeightError,
    SeparableKernelC,
)

E1 = ExpMixture(((1.0, 1.0),))


def poisson():
    return ContinuousProblem(a=E1, r=E1, d=1.0)


def beta_family(beta):
    return ContinuousProblem(a=E1, b=ExpMixture(((beta, 1.0),)), r=E1, d=1.0)


def synthetic_trace(g, h, T, gamma=0.0, d=1.0):
    grid = ve.QuadratureGrid(h, T)
    t = grid.nodes
    gs = np.asarray([g(x) for x in t])
    H = gs * (t + d) ** (-gamma)
    mono = bool(np.all(np.diff(gs) <= h ** 3))
    return ve.ContinuousTrace(grid=grid, g=gs, H=H, gamma_used=gamma, d=d,
                              monotone_decreasing=mono)


class TestGrid:
    def test_nodes(self):
        grid = ve.QuadratureGrid(0.25, 2.0)
        assert grid.M == 8
        assert np.allclose(grid.nodes, 0.25 * np.arange(9))

    def test_mismatched_horizon(self):
        with pytest.raises(ModelError):
            ve.QuadratureGrid(0.3, 1.0)

    def test_bad_values(self):
        with pytest.raises(ModelError):
            ve.QuadratureGrid(-0.1, 1.0)
        with pytest.raises(ModelError):
            ve.QuadratureGrid(0.1, 0.0)


class TestSolve:
    def test_poisson_identity(self):
        # int_0^t e^{-s} ds + e^{-t} = 1, so g = 1; the scheme drifts by
        # (1+T) h^2/12
        tr = ve.solve_volterra(poisson(), ve.QuadratureGrid(0.01, 50.0))
        assert float(np.max(np.abs(tr.g - 1.0))) <= 6e-4

    def test_second_order_by_halving(self):
        errs = []
        for h in (0.02, 0.01):
            tr = ve.solve_volterra(poisson(), ve.QuadratureGrid(h, 50.0))
            errs.append(float(np.max(np.abs(tr.g - 1.0))))
        assert 3.5 <= errs[0] / errs[1] <= 4.5

    def test_richardson_halving_inequality(self):
        for p in (poisson(), beta_family(-0.5),
                  ContinuousProblem(a=ExpMixture(((2.0, 2.0),)), r=E1, d=1.0)):
            vals = [ve.solve_volterra(p, ve.QuadratureGrid(h, 40.0)).g[-1]
                    for h in (0.08, 0.04, 0.02)]
            d1 = abs(vals[0] - vals[1])
            d2 = abs(vals[1] - vals[2])
            assert d1 <= 4.0 * d2 + 1e-8 + 0.5 * d2  # order-2 with float slack

    def test_key_renewal_oracle(self):
        # a = 2 e^{-2s} has mean 1/2; g(t) = 2 - e^{-t} exactly, so g(T) -> 2
        p = ContinuousProblem(a=ExpMixture(((2.0, 2.0),)), r=E1, d=1.0)
        tr = ve.solve_volterra(p, ve.QuadratureGrid(0.01, 60.0))
        assert tr.g[-1] == pytest.approx(2.0, abs=0.05)
        exact = 2.0 - np.exp(-tr.grid.nodes)
        assert float(np.max(np.abs(tr.g - exact))) <= 0.05

    def test_beta_half_positive_decreasing(self):
        tr = ve.solve_volterra(beta_family(-0.5), ve.QuadratureGrid(0.02, 200.0))
        assert bool(np.all(tr.g > 0))
        assert ve.monotonicity(tr)

    def test_nonnegativity_of_g(self):
        for p in (poisson(), beta_family(-0.5), beta_family(-1.0)):
            tr = ve.solve_volterra(p, ve.QuadratureGrid(0.05, 30.0))
            assert bool(np.all(tr.g >= 0))

    def test_g_starts_at_one(self):
        tr = ve.solve_volterra(poisson(), ve.QuadratureGrid(0.05, 10.0))
        assert tr.g[0] == 1.0

    def test_step_too_large(self):
        p = ContinuousProblem(a=ExpMixture(((3.0, 3.0),)), r=E1, d=1.0)
        with pytest.raises(ModelError):
            ve.solve_volterra(p, ve.QuadratureGrid(1.0, 10.0))

    def test_negative_kernel_rejected(self):
        p = ContinuousProblem(a=E1, b=ExpMixture(((-2.0, 1.0),)), r=E1, d=1.0)
        with pytest.raises(NegativeWeightError):
            ve.solve_volterra(p, ve.QuadratureGrid(0.1, 5.0))

    def test_H_definition(self):
        tr = ve.solve_volterra(beta_family(-0.5), ve.QuadratureGrid(0.05, 20.0))
        t = tr.grid.nodes
        assert np.allclose(tr.H, tr.g * (t + 1.0) ** 0.5, rtol=1e-14)


class TestFitExponent:
    def test_constant_trace(self):
        tr = synthetic_trace(lambda t: 1.0, 0.5, 400.0)
        gam, C, r2 = ve.fit_exponent(tr, (100.0, 400.0))
        assert abs(gam) <= 1e-12
        assert C == pytest.approx(1.0)
        assert r2 == pytest.approx(1.0)

    def test_synthetic_hyperbola(self):
        tr = synthetic_trace(lambda t: 1.0 / (1.0 + t), 0.1, 200.0)
        gam, C, r2 = ve.fit_exponent(tr, (100.0, 200.0))
        assert gam == pytest.approx(-1.0, abs=0.01)

    def test_beta_family_exponent(self):
        tr = ve.solve_volterra(beta_family(-0.5), ve.QuadratureGrid(0.05, 300.0))
        gam, C, r2 = ve.fit_exponent(tr, (150.0, 300.0))
        assert gam == pytest.approx(-0.5, abs=0.05)
        assert r2 >= 0.999

    def test_window_errors(self):
        tr = synthetic_trace(lambda t: 1.0, 0.5, 100.0)
        with pytest.raises(ValueError):
            ve.fit_exponent(tr, (99.0, 100.0))   # < 10 nodes
        tr2 = synthetic_trace(lambda t: 1.0 - 0.02 * t, 0.5, 100.0)
        with pytest.raises(ValueError):
            ve.fit_exponent(tr2, (40.0, 100.0))  # g <= 0 inside window


class TestBoundsAndMonotonicity:
    def test_constant_band(self):
        tr = synthetic_trace(lambda t: 1.0, 0.5, 100.0, gamma=0.0, d=1.0)
        inf_H, sup_H = ve.check_bounds(tr, 0.0)
        assert inf_H == 1.0 and sup_H == 1.0

    def test_beta_band_tight(self):
        tr = ve.solve_volterra(beta_family(-0.5), ve.QuadratureGrid(0.02, 300.0))
        inf_H, sup_H = ve.check_bounds(tr, -0.5)
        assert inf_H > 0.01
        assert sup_H / inf_H < 10.0

    def test_monotone_cases(self):
        assert ve.monotonicity(synthetic_trace(lambda t: 1.0, 0.5, 50.0))
        grow = ContinuousProblem(a=ExpMixture(((2.0, 2.0),)),
                                 b=E1, r=E1, d=1.0)
        tr = ve.solve_volterra(grow, ve.QuadratureGrid(0.02, 40.0))
        assert tr.gamma_used == pytest.approx(2.0)
        assert not ve.monotonicity(tr)

    def test_theorem2_verdict_pass_and_fail(self):
        ok = ve.theorem2_verdict(beta_family(-0.5), ve.QuadratureGrid(0.05, 60.0), -0.5)
        assert ok["verdict"] == "pass"
        bad = ContinuousProblem(
            a=E1, c=SeparableKernelC(phi=ExpMixture(((0.1, 0.0),)), psi=E1),
            r=E1, d=1.0)
        res = ve.theorem2_verdict(bad, ve.QuadratureGrid(0.05, 40.0), 0.0)
        assert res["verdict"] == "fail"
        assert res["sup_H"] > 2.0 * res["sup_H_single"]
