"""Discrete solver, residuals, bound certificates, and the limit estimator."""

import math
import os
from fractions import Fraction

import numpy as np
import pytest

import renewal_asym.discrete_engine as de
from renewal_asym.constants import SpectralConstants, spectral_discrete
from renewal_asym.corpus import cex3_sequence
from renewal_asym.model import (
    DecaySequence,
    DiscreteProblem,
    GeometricTail,
    ModelError,
    delta1,
)

F = Fraction


def geom(alpha, rho, nonneg=False):
    return DecaySequence(tail=GeometricTail(alpha, rho, 1), nonnegative=nonneg)


def geom_renewal():
    return DiscreteProblem(a=geom(1, F(1, 2), nonneg=True), r=delta1())


def single_atom():
    return DiscreteProblem(a=DecaySequence(prefix=(F(1),), nonnegative=True), r=delta1())


def cex1():
    return DiscreteProblem(a=geom(1, F(1, 2), nonneg=True), b=geom(-1, F(1, 2)),
                           r=delta1(), weight_form="b_over_n_minus_j")


def manual_trace(y, gamma=0.0):
    y = np.asarray(y, dtype=float)
    return de.SolutionTrace(N=len(y) - 1, x_tilde=y.copy(), y=y.copy(),
                            arithmetic_mode="float53", gamma_used=gamma, q_used=1.0)


class TestSolve:
    def test_geom_renewal_exact_oracle(self):
        # brute-force rational forward iteration, written independently
        p = geom_renewal()
        N = 60
        x = [F(0)] * (N + 1)
        x[1] = F(1)
        for n in range(2, N + 1):
            x[n] = sum(F(1, 2) ** j * x[n - j] for j in range(1, n))
        tr = de.solve(p, spectral_discrete(p), N, mode="exact")
        assert tr.x_exact == x
        assert all(v == F(1, 2) for v in tr.x_exact[2:])

    def test_single_atom_telescopes(self):
        p = single_atom()
        tr = de.solve(p, spectral_discrete(p), 50, mode="exact")
        assert all(v == 1 for v in tr.x_exact[1:])
        trf = de.solve(p, spectral_discrete(p), 50)
        assert np.all(trf.x_tilde[1:] == 1.0)

    def test_cex1_dies_after_first_term(self):
        p = cex1()
        tr = de.solve(p, spectral_discrete(p), 120, mode="exact")
        assert tr.x_exact[1] == 1
        assert all(v == 0 for v in tr.x_exact[2:])
        trf = de.solve(p, spectral_discrete(p), 120)
        assert trf.x_tilde[1] == 1.0
        assert np.all(trf.x_tilde[2:] == 0.0)

    def test_exact_vs_float_agree(self):
        p = geom_renewal()
        sc = spectral_discrete(p)
        te = de.solve(p, sc, 300, mode="exact")
        tf = de.solve(p, sc, 300)
        err = max(abs(float(a) - b) for a, b in zip(te.x_exact[1:], tf.x_tilde[1:]))
        assert err <= 1e-14

    def test_exact_needs_rational_q(self):
        p = DiscreteProblem(a=DecaySequence(prefix=(F(1, 4), F(1, 4)), nonnegative=True),
                            r=delta1())
        with pytest.raises(ModelError):
            de.solve(p, spectral_discrete(p), 10, mode="exact")

    def test_bad_horizon_and_mode(self):
        p = geom_renewal()
        with pytest.raises(ValueError):
            de.solve(p, spectral_discrete(p), 0)
        with pytest.raises(ValueError):
            de.solve(p, spectral_discrete(p), 10, mode="interval")

    def test_extended_precision_path(self):
        p = DiscreteProblem(a=geom(F(1, 2), F(1, 2), nonneg=True),
                            b=geom(F(1, 8), F(1, 2)), r=delta1())
        sc = spectral_discrete(p)
        assert sc.q_exact is None  # mass 1/2 at q=1, so q > 1
        q = de.solve(p, sc, 40, precision=90)
        d = de.solve(p, sc, 40, precision=53)
        assert q.arithmetic_mode == "float90"
        assert np.allclose(q.x_tilde, d.x_tilde, rtol=1e-12)

    def test_precision_env_var(self, monkeypatch):
        monkeypatch.setenv(de.PRECISION_ENV, "70")
        assert de.default_precision() == 70
        monkeypatch.setenv(de.PRECISION_ENV, "8")
        with pytest.raises(ValueError):
            de.default_precision()

    def test_normalization_equivariance_exact(self):
        # solve the raw problem as-is, scale by q^n, compare with the solve
        # that normalizes internally: exact equality of rationals
        q0 = F(2, 3)
        a_tilde = (F(1, 2), F(1, 2))
        raw = DiscreteProblem(
            a=DecaySequence(prefix=tuple(v / q0 ** (j + 1) for j, v in enumerate(a_tilde)),
                            nonnegative=True),
            b=DecaySequence(prefix=(F(1, 16), F(-1, 16))),
            r=DecaySequence(prefix=(F(1), F(1, 3)), nonnegative=True))
        N = 40
        sc_raw = SpectralConstants(q=1.0, gamma=0.0, mu=1.0,
                                   series_error_bound=0.0, q_exact=F(1))
        x_raw = de.solve(raw, sc_raw, N, mode="exact").x_exact
        sc_q = SpectralConstants(q=float(q0), gamma=0.0, mu=1.0,
                                 series_error_bound=0.0, q_exact=q0)
        x_til = de.solve(raw, sc_q, N, mode="exact").x_exact
        for n in range(1, N + 1):
            assert x_til[n] == q0 ** n * x_raw[n]


class TestPositivity:
    def test_all_positive(self):
        tr = manual_trace([0.0] + [1.0] * 30)
        assert de.positivity_horizon(tr) == 1

    def test_cex1_absent(self):
        p = cex1()
        tr = de.solve(p, spectral_discrete(p), 50)
        assert de.positivity_horizon(tr) is None

    def test_late_start(self):
        tr = manual_trace([0.0, 1.0, 0.0, 0.0, 0.5, 0.5, 0.5])
        assert de.positivity_horizon(tr) == 4

    def test_geom_renewal_from_one(self):
        p = geom_renewal()
        tr = de.solve(p, spectral_discrete(p), 100)
        assert de.positivity_horizon(tr) == 1


class TestResidual:
    def test_constant_sequence_leaves_pure_tail(self):
        # y = 1 and unit-mass a: rho_n = sum_{j>=n} a_j = 2^{1-n}
        a = geom(1, F(1, 2), nonneg=True)
        tr = manual_trace([0.0] + [1.0] * 40)
        rho = de.residual(tr, a)
        for n in range(2, 41):
            assert rho[n] == pytest.approx(2.0 ** (1 - n), abs=1e-15)

    def test_cex3_residual_vanishes_but_y_does_not(self):
        a = geom(1, F(1, 2), nonneg=True)
        N = 3000
        y = cex3_sequence(N)
        rho = de.residual(manual_trace(y), a)
        assert max(abs(rho[N // 2]), abs(rho[N])) <= 0.01
        assert abs(y[N] - y[N // 2]) > 0.05

    def test_geom_renewal_residual_decays(self):
        p = geom_renewal()
        tr = de.solve(p, spectral_discrete(p), 400)
        rho = de.residual(tr, tr.problem.a)
        assert de.residual_tail_max(rho) <= 1e-12

    def test_residual_halves_when_horizon_doubles(self):
        p = DiscreteProblem(a=geom(F(1, 2), F(2, 3), nonneg=True),
                            b=geom(F(-3, 5), F(1, 2)), r=delta1())
        sc = spectral_discrete(p)
        maxima = []
        for N in (200, 400, 800):
            tr = de.solve(p, sc, N)
            rho = de.residual(tr, tr.problem.a)
            maxima.append(float(np.max(np.abs(rho[N // 2:]))))
        assert maxima[1] < maxima[0] and maxima[2] < maxima[1]


class TestBoundCertificate:
    def test_pure_renewal_vanishing_s(self):
        p = geom_renewal()
        tr = de.solve(p, spectral_discrete(p), 200)
        cert = de.bound_certificate(tr.problem, tr, 0.0)
        assert np.allclose(cert.s_upper[2:], 0.0, atol=1e-15)
        assert cert.s_upper[1] == pytest.approx(1.0)   # r~_1
        assert cert.product_upper == pytest.approx(2.0)
        assert cert.status == "certified"

    def test_chain_inequality_on_solved_traces(self):
        for p in (geom_renewal(),
                  DiscreteProblem(a=geom(F(1, 2), F(2, 3), nonneg=True),
                                  b=geom(F(-3, 5), F(1, 2)), r=delta1())):
            sc = spectral_discrete(p)
            tr = de.solve(p, sc, 1000)
            cert = de.bound_certificate(tr.problem, tr, sc.gamma)
            lhs = float(np.max(tr.y[1:])) / max(1.0, float(tr.y[1]))
            assert cert.product_upper >= lhs - 1e-12

    def test_lower_entries_below_one(self):
        p = geom_renewal()
        tr = de.solve(p, spectral_discrete(p), 300)
        cert = de.bound_certificate(tr.problem, tr, 0.0)
        assert cert.N_threshold == 1
        entries = cert.s_lower[cert.N_threshold + 1:]
        assert np.all(entries[np.isfinite(entries)] < 1.0)
        assert cert.product_lower > 0
        # the product really bounds the observed minimum from below
        assert float(np.min(tr.y[1:])) >= tr.y[1] * cert.product_lower - 1e-12

    def test_cex2_inconclusive(self):
        from renewal_asym.corpus import cex2_sequence, cex2_weights
        a = geom(1, F(1, 2), nonneg=True)
        N = 4000
        x = cex2_sequence(N)
        tr = manual_trace(x)
        rv = np.zeros(N + 1)
        rv[1] = x[1]
        cert = de.bound_certificate(
            DiscreteProblem(a=a, r=delta1()), tr, 0.0,
            weight_rows=lambda n: cex2_weights(a, n, x[1:n]), r_values=rv)
        assert cert.status == "inconclusive"
        assert not cert.cauchy_ok


class TestEstimateC:
    def test_constant_trace(self):
        tr = manual_trace([0.0] + [1.0] * 64)
        est = de.estimate_C(tr, tol=0.01)
        assert est.C_hat == pytest.approx(1.0)
        assert est.dispersion == 0.0
        assert est.status == "converged"

    def test_geom_renewal_half(self):
        p = geom_renewal()
        tr = de.solve(p, spectral_discrete(p), 2000)
        est = de.estimate_C(tr, tol=0.01)
        assert est.C_hat == pytest.approx(0.5, abs=1e-12)
        assert est.status == "converged"

    def test_oscillating_not_converged(self):
        N = 4096
        n = np.arange(N + 1, dtype=float)
        y = 2.0 + np.sin(np.log(n + 1.0))
        est = de.estimate_C(manual_trace(y), tol=0.02)
        assert est.status == "not_converged"

    def test_requires_positivity(self):
        p = cex1()
        tr = de.solve(p, spectral_discrete(p), 60)
        with pytest.raises(ModelError):
            de.estimate_C(tr)

    def test_window_records(self):
        tr = manual_trace([0.0] + [1.0] * 100)
        est = de.estimate_C(tr)
        assert est.window == (50, 100)
        assert est.method == "tail_mean"


class TestLogLogSlope:
    def test_flat(self):
        n = np.arange(10, 200, dtype=float)
        slope, _, r2 = de.loglog_slope(n, np.full_like(n, 3.7))
        assert abs(slope) <= 1e-12

    def test_powerlaw(self):
        n = np.arange(10, 400, dtype=float)
        slope, intercept, r2 = de.loglog_slope(n, 2.5 * n ** -0.7)
        assert slope == pytest.approx(-0.7, abs=1e-12)
        assert math.exp(intercept) == pytest.approx(2.5, rel=1e-12)
        assert r2 == pytest.approx(1.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            de.loglog_slope(np.array([1.0, 2.0]), np.array([1.0, 0.0]))
