"""Transforms, the L / R* / G pipeline, and the Tauberian ladders."""

import math

import numpy as np
import pytest

import renewal_asym.laplace_toolkit as lt
import renewal_asym.volterra_engine as ve
from renewal_asym.model import (
    ContinuousProblem,
    ExpMixture,
    ModelError,
    SeparableKernelC,
)

E1 = ExpMixture(((1.0, 1.0),))


def poisson():
    return ContinuousProblem(a=E1, r=E1, d=1.0)


def beta_family(beta):
    return ContinuousProblem(a=E1, b=ExpMixture(((beta, 1.0),)), r=E1, d=1.0)


def synthetic_trace(fn, h, T, gamma=0.0):
    grid = ve.QuadratureGrid(h, T)
    t = grid.nodes
    g = np.asarray([fn(x) for x in t])
    return ve.ContinuousTrace(grid=grid, g=g, H=g * (t + 1.0) ** (-gamma),
                              gamma_used=gamma, d=1.0,
                              monotone_decreasing=bool(np.all(np.diff(g) <= h ** 3)))


class TestTransform:
    def test_unit_exponential(self):
        assert lt.transform(E1, 1.0)[0] == pytest.approx(0.5)
        assert lt.transform(E1, 1e-9)[0] == pytest.approx(1.0, rel=1e-8)
        assert lt.transform(ExpMixture(((2.0, 2.0),)), 2.0)[0] == pytest.approx(0.5)

    def test_linearity(self):
        f = ExpMixture(((1.0, 1.0),))
        g = ExpMixture(((1.0, 3.0),))
        combo = ExpMixture(((2.0, 1.0), (-0.5, 3.0)))
        for s in (0.3, 1.0, 4.0):
            lhs = lt.transform(combo, s)[0]
            rhs = 2.0 * lt.transform(f, s)[0] - 0.5 * lt.transform(g, s)[0]
            assert lhs == pytest.approx(rhs, rel=1e-14)

    def test_pole_guard(self):
        with pytest.raises(ModelError):
            lt.transform(E1, -1.0)

    def test_trace_transform_against_closed_form(self, cts_beta_trace):
        # the trace transform must reproduce int e^{-st} g dt for a known g:
        # check on a synthetic exponential trace first
        tr = synthetic_trace(lambda t: math.exp(-t), 0.01, 40.0)
        for s in (0.5, 1.0, 2.0):
            val, bound = lt.trace_transform(tr, s)
            assert val == pytest.approx(1.0 / (1.0 + s), abs=1e-4)

    def test_trace_transform_positive_s_only(self, cts_beta_trace):
        with pytest.raises(ModelError):
            lt.trace_transform(cts_beta_trace, 0.0)


class TestL:
    def test_closed_form_half(self):
        # a = e^{-s}: A = 1/(1+s), A' = -1/(1+s)^2, b = 0, d = 1:
        # L(1) = 1 - (1/4)/(1/2) = 1/2
        assert lt.compute_L(poisson(), 1.0) == pytest.approx(0.5)

    def test_small_s_expansion(self):
        # s L(s) -> -(gamma+1)
        assert 1e-3 * lt.compute_L(poisson(), 1e-3) == pytest.approx(-1.0, rel=0.01)
        assert 1e-3 * lt.compute_L(beta_family(-0.5), 1e-3) == pytest.approx(-0.5, rel=0.01)

    def test_large_s_limit(self):
        assert lt.compute_L(poisson(), 1e6) == pytest.approx(1.0, abs=1e-5)

    def test_A_strictly_decreasing_and_slope(self):
        p = beta_family(-0.5)
        ladder = [lt.transform(p.a, s)[0] for s in (0.05, 0.1, 0.2, 0.4, 0.8)]
        assert all(x > y for x, y in zip(ladder, ladder[1:]))  # A decreasing in s
        # 1 - A(s) ~ mu s with mu = int t a(t) dt = 1
        s = 1e-3
        slope = (1.0 - lt.transform(p.a, s)[0]) / s
        assert slope == pytest.approx(1.0, rel=0.02)


class TestRstar:
    def test_closed_form(self):
        # R = 1/2, R' = -1/4, 1 - A = 1/2 at s = 1: R* = (1/4 + 1/2) * 2 = 3/2
        assert lt.compute_Rstar(poisson(), 1.0) == pytest.approx(1.5)

    def test_s_Rstar_bounded_toward_zero(self):
        p = poisson()
        vals = [s * lt.compute_Rstar(p, s) for s in (0.1, 0.01, 0.001)]
        assert all(abs(v) <= 10.0 for v in vals)
        spread = max(vals) - min(vals)
        assert spread <= 1.0

    def test_kernel_requires_trace(self):
        p = ContinuousProblem(a=E1, c=SeparableKernelC(phi=ExpMixture(((0.1, 0.0),)),
                                                       psi=E1), r=E1, d=1.0)
        with pytest.raises(ModelError):
            lt.compute_Rstar(p, 1.0)
        tr = ve.solve_volterra(p, ve.QuadratureGrid(0.05, 30.0))
        assert math.isfinite(lt.compute_Rstar(p, 1.0, tr))


class TestG:
    def test_poisson_inverse_s(self):
        for s in (1.0, 2.0):
            val, bound = lt.compute_G(poisson(), s)
            assert val == pytest.approx(1.0 / s, abs=1e-6 + bound)

    def test_vanishes_along_dyadic_ladder(self):
        p = beta_family(-0.5)
        vals = [lt.compute_G(p, float(2 ** j))[0] for j in range(0, 6)]
        assert all(x > y for x, y in zip(vals, vals[1:]))
        assert vals[-1] < 0.1

    def test_matches_trace_transform(self, cts_beta_problem, cts_beta_trace):
        for s in (0.5, 1.0, 2.0):
            formula, b1 = lt.compute_G(cts_beta_problem, s)
            ref, b2 = lt.trace_transform(cts_beta_trace, s)
            assert abs(formula - ref) / abs(ref) <= 0.01

    def test_transform_samples_table(self, cts_beta_problem, cts_beta_trace):
        sample = lt.transform_samples(cts_beta_problem, (0.5, 1.0, 2.0),
                                      g_trace=cts_beta_trace)
        rows = list(sample.rows())
        assert len(rows) == 3
        s, A, B, R, L, Rstar, G = rows[1]
        assert s == 1.0
        assert A == pytest.approx(0.5)
        assert B == pytest.approx(-0.25)
        assert R == pytest.approx(0.5)


class TestTauberian:
    def test_poisson_ladders(self, poisson_long_trace):
        rep = lt.tauberian_check(poisson_long_trace, 0.0)
        assert rep.k == 1 and rep.rho == pytest.approx(2.0)
        # U(x)/x^2 -> 1/2 and s^2 |G'(s)| -> 1
        assert rep.U_ratios[-1] == pytest.approx(0.5, rel=5e-3)
        assert rep.K_estimates[-1] == pytest.approx(1.0, rel=1e-2)
        assert rep.slow_osc_pass
        assert rep.verdict == "consistent"

    def test_u_closed_form_on_constant_trace(self):
        # g = 1: U(x) = x^2/2 exactly
        tr = synthetic_trace(lambda t: 1.0, 0.05, 300.0)
        rep = lt.tauberian_check(tr, 0.0, x_ladder=(50.0, 100.0, 200.0))
        for ratio in rep.U_ratios:
            assert ratio == pytest.approx(0.5, rel=1e-4)

    def test_beta_half_consistent(self, cts_beta_trace):
        rep = lt.tauberian_check(cts_beta_trace, -0.5)
        assert rep.k == 1
        assert rep.rho == pytest.approx(1.5)
        assert rep.verdict == "consistent"
        # cross-relation: K / Gamma(rho+1) agrees with the U limit
        assert rep.K_limit / math.gamma(rep.rho + 1) == pytest.approx(rep.U_limit,
                                                                      rel=0.1)

    def test_k_selection_deep_exponents(self):
        # gamma = -2.5 needs k = 2 for a positive transform exponent
        tr = synthetic_trace(lambda t: (1.0 + t) ** -2.5, 0.02, 300.0, gamma=-2.5)
        rep = lt.tauberian_check(tr, -2.5)
        assert rep.k == 2
        assert rep.rho == pytest.approx(0.5)

    def test_rejects_nonmonotone(self):
        tr = synthetic_trace(lambda t: 1.0 + 0.1 * math.sin(t), 0.05, 100.0)
        with pytest.raises(ModelError):
            lt.tauberian_check(tr, 0.0)

    def test_rejects_positive_gamma(self, poisson_long_trace):
        with pytest.raises(ModelError):
            lt.tauberian_check(poisson_long_trace, 0.5)

    def test_horizon_guard(self):
        tr = synthetic_trace(lambda t: math.exp(-t), 0.05, 20.0)
        with pytest.raises(ModelError):
            lt.tauberian_check(tr, 0.0, s_ladder=(0.4, 0.2, 0.1))  # s_min = 0.25
