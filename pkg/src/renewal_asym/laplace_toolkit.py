"""Laplace-transform pipeline: L, R*, the closed integral form of G, and the
small-s Tauberian / Karamata consistency checks against a solved trace."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from .model import ContinuousProblem, ModelError, SeparableKernelC
from .volterra_engine import ContinuousTrace, monotonicity

__all__ = [
    "TransformSample",
    "TauberianReport",
    "transform",
    "trace_transform",
    "compute_L",
    "compute_Rstar",
    "compute_G",
    "transform_samples",
    "tauberian_check",
]


def transform(f, s: float, k: int = 0) -> Tuple[float, float]:
    """(int_0^inf e^{-sx} x^k f(x) dx, truncation bound).

    Closed form for exponential mixtures; quadrature plus envelope bound for
    tables.  Note F^{(k)}(s) = (-1)^k * transform(f, s, k).
    """
    return f.laplace(s, k)


def _weighted_tail(T: float, s: float, k: int) -> float:
    """int_T^inf x^k e^{-sx} dx in closed form."""
    acc = 0.0
    for i in range(k + 1):
        acc += (math.factorial(k) / math.factorial(k - i)) * T ** (k - i) / s ** (i + 1)
    return math.exp(-s * T) * acc


def trace_transform(tr: ContinuousTrace, s: float, k: int = 0) -> Tuple[float, float]:
    """Transform of the solved g by trapezoid over its grid.

    Returns (value, error estimate); the estimate combines the closed-form
    horizon tail (taking g(t) <= g(T) beyond it, valid for decreasing traces)
    with an O(h^2) quadrature term.
    """
    if s <= 0:
        raise ModelError("transform abscissa must be positive")
    t = tr.grid.nodes
    with np.errstate(under="ignore"):
        integrand = np.exp(-s * t) * t ** k * tr.g
    head = float(np.trapezoid(integrand, t))
    tail = float(max(tr.g[-1], 0.0)) * _weighted_tail(tr.grid.T, s, k)
    quad_err = tr.grid.h ** 2 / 12.0 * (s ** 2 + k * (k + 1)) * abs(head)
    return head + 0.5 * tail, 0.5 * tail + quad_err


def compute_L(p: ContinuousProblem, s: float, floor: float = 1e-12) -> float:
    """L(s) = d - (B(s) - A'(s)) / (1 - A(s)); finite for every s > 0."""
    if s <= 0:
        raise ModelError("L is evaluated for s > 0")
    A, _ = transform(p.a, s)
    one_minus_A = 1.0 - A
    if abs(one_minus_A) < floor:
        raise ModelError(f"1 - A(s) = {one_minus_A:g} too small at s = {s:g}; "
                         "use the small-s expansion instead")
    B = transform(p.b, s)[0] if not p.b.is_zero else 0.0
    A1 = transform(p.a, s, 1)[0]          # A'(s) = -A1
    return p.d - (B + A1) / one_minus_A


def _c_convolution(p: ContinuousProblem, tr: ContinuousTrace) -> np.ndarray:
    """q(x_i) = int_0^{x_i} g(x_i - u) c_{x_i, u} du on the trace grid."""
    if not isinstance(p.c, SeparableKernelC):
        raise ModelError("only separable perturbation kernels are supported here")
    t = tr.grid.nodes
    h = tr.grid.h
    psin = p.c.psi.sample(t)
    phin = p.c.phi.sample(t)
    conv = np.convolve(psin, tr.g)[:len(t)] * h
    conv -= 0.5 * h * (psin[0] * tr.g + psin * tr.g[0])   # trapezoid endpoints
    return phin * conv


def compute_C_of_s(p: ContinuousProblem, s: float, tr: ContinuousTrace) -> float:
    """C(s) = int e^{-sx} (x+d) int_0^x g(x-u) c_{x,u} du dx from the trace."""
    t = tr.grid.nodes
    q = _c_convolution(p, tr)
    with np.errstate(under="ignore"):
        integrand = np.exp(-s * t) * (t + p.d) * q
    return float(np.trapezoid(integrand, t))


def compute_Rstar(p: ContinuousProblem, s: float,
                  g_trace: Optional[ContinuousTrace] = None) -> float:
    """R*(s) = -(R'(s) - d R(s) - C(s)) / (1 - A(s)).

    C(s) needs a solved trace unless the perturbation kernel vanishes.
    """
    if s <= 0:
        raise ModelError("R* is evaluated for s > 0")
    A, _ = transform(p.a, s)
    one_minus_A = 1.0 - A
    if abs(one_minus_A) < 1e-12:
        raise ModelError(f"1 - A(s) vanishes at s = {s:g}")
    R = transform(p.r, s)[0]
    R1 = transform(p.r, s, 1)[0]          # R'(s) = -R1
    if p.c.is_zero:
        C = 0.0
    else:
        if g_trace is None:
            raise ModelError("nonzero perturbation kernel: supply a solved trace "
                             "for the C(s) double integral")
        C = compute_C_of_s(p, s, g_trace)
    return (R1 + p.d * R + C) / one_minus_A


def compute_G(p: ContinuousProblem, s: float,
              g_trace: Optional[ContinuousTrace] = None,
              span: float = 40.0) -> Tuple[float, float]:
    """G(s) = int_s^inf R*(t) exp(int_t^s L(u) du) dt, truncated at s + span/d.

    Past the cutoff the exponential decays like e^{-d (t-s)}, so the
    truncated mass is bounded by |R*(cut)| e^{-span} / d; the bound is
    returned with the value.  Keep s >= 1e-3: L has a -(gamma+1)/s pole at 0.
    """
    if s <= 0:
        raise ModelError("G is evaluated for s > 0")
    cut = s + span / p.d

    def exponent(t: float) -> float:
        val, _ = quad(lambda u: compute_L(p, u), s, t, limit=200)
        return -val                      # int_t^s L = -int_s^t L

    def integrand(t: float) -> float:
        return compute_Rstar(p, t, g_trace) * math.exp(exponent(t))

    value, quad_err = quad(integrand, s, cut, limit=200)
    tail_bound = abs(compute_Rstar(p, cut, g_trace)) * math.exp(-span) / p.d
    return float(value), float(abs(quad_err) + tail_bound)


@dataclass
class TransformSample:
    """Transforms and derived functions evaluated on a ladder of s values."""

    s_values: tuple
    A: tuple
    B: tuple
    R: tuple
    L: tuple
    Rstar: tuple
    G: tuple
    C_of_s: tuple
    tail_bounds: tuple

    def rows(self):
        for i, s in enumerate(self.s_values):
            yield (s, self.A[i], self.B[i], self.R[i], self.L[i],
                   self.Rstar[i], self.G[i])


def transform_samples(p: ContinuousProblem, s_values: Sequence[float],
                      g_trace: Optional[ContinuousTrace] = None) -> TransformSample:
    """Evaluate A, B, R, L, R*, G (and C when applicable) on a ladder."""
    s_values = tuple(float(s) for s in s_values)
    A, B, R, L, Rs, G, C, bounds = [], [], [], [], [], [], [], []
    for s in s_values:
        A.append(transform(p.a, s)[0])
        B.append(transform(p.b, s)[0] if not p.b.is_zero else 0.0)
        R.append(transform(p.r, s)[0])
        L.append(compute_L(p, s))
        Rs.append(compute_Rstar(p, s, g_trace))
        val, bnd = compute_G(p, s, g_trace)
        G.append(val)
        bounds.append(bnd)
        C.append(0.0 if p.c.is_zero else compute_C_of_s(p, s, g_trace))
    return TransformSample(s_values=s_values, A=tuple(A), B=tuple(B), R=tuple(R),
                           L=tuple(L), Rstar=tuple(Rs), G=tuple(G),
                           C_of_s=tuple(C), tail_bounds=tuple(bounds))


# ---------------------------------------------------------------------------
# Tauberian / Karamata report
# ---------------------------------------------------------------------------

@dataclass
class TauberianReport:
    k: int
    gamma: float
    rho: float                      # gamma + k + 1
    s_ladder: tuple
    K_estimates: tuple              # s^rho * (-1)^k G^(k)(s)
    x_ladder: tuple
    U_ratios: tuple                 # U(x) / x^rho
    K_limit: float
    U_limit: float
    slow_osc_pass: bool
    verdict: str                    # consistent | inconsistent | inconclusive
    detail: dict = field(default_factory=dict)


def _aitken_limit(vals: Sequence[float]) -> float:
    if len(vals) < 3:
        return vals[-1]
    s0, s1, s2 = vals[-3], vals[-2], vals[-1]
    denom = (s2 - s1) - (s1 - s0)
    if denom == 0:
        return s2
    return s2 - (s2 - s1) ** 2 / denom


def _slow_oscillation(tr: ContinuousTrace, k: int, eps: float) -> bool:
    """Check g(u) u^k <= g(x) x^k (1+eps) on log-spaced pairs x < u <= x(1+delta).

    A multiplicative slack 1 + h^2 (u-x) absorbs the solver's own O(h^2)
    drift, which otherwise breaks the boundary case of a constant solution.
    """
    delta = (1.0 + eps) ** (1.0 / k) - 1.0
    t = tr.grid.nodes
    T = tr.grid.T
    h2 = tr.grid.h ** 2
    f = tr.g * t ** k
    xs = np.geomspace(max(10 * tr.grid.h, T / 200.0), T / (1.0 + delta) / 1.01, 24)
    for x in xs:
        fx = float(np.interp(x, t, f))
        us = np.linspace(x * (1 + delta / 8), x * (1 + delta), 8)
        fu = np.interp(us, t, f)
        slack = 1.0 + h2 * (us - x)
        if np.any(fu > fx * (1.0 + eps) * slack + 1e-12):
            return False
    return True


def tauberian_check(g_trace: ContinuousTrace, gamma: float,
                    s_ladder: Sequence[float] = (0.4, 0.2, 0.1, 0.05),
                    x_ladder: Optional[Sequence[float]] = None,
                    eps: float = 0.25,
                    stab_tol: float = 0.08,
                    cross_tol: float = 0.10) -> TauberianReport:
    """Small-s / large-x ladder check of the power-law transform relations.

    Uses the smallest positive integer k with gamma + k + 1 > 0, forms
    s^(gamma+k+1) |G^(k)(s)| on a decreasing s ladder and U(x)/x^(gamma+k+1)
    with U(x) = int_0^x g u^k du on an increasing x ladder, Aitken-extrapolates
    both, and cross-checks them through the Gamma(rho+1) factor relating a
    transform power law to the growth of its integrand's primitive.
    """
    if not monotonicity(g_trace):
        raise ModelError("trace is not decreasing; the monotone pipeline does not apply")
    if gamma > 1e-12:
        raise ModelError("decreasing g forces gamma <= 0")
    k = 1
    while gamma + k + 1 <= 0:
        k += 1
    rho = gamma + k + 1

    T = g_trace.grid.T
    s_min = max(1e-3, 5.0 / T)
    ladder = tuple(s for s in sorted(set(float(s) for s in s_ladder), reverse=True)
                   if s >= s_min)
    if len(ladder) < 3:
        raise ModelError(f"s ladder needs >= 3 points above s_min = {s_min:g}; "
                         "extend the trace horizon")

    K_est = []
    for s in ladder:
        gk, _ = trace_transform(g_trace, s, k)   # (-1)^k G^(k)(s) >= 0
        K_est.append(s ** rho * gk)

    t = g_trace.grid.nodes
    u_int = np.concatenate(
        [[0.0], np.cumsum((t[1:] - t[:-1]) *
                          0.5 * ((t[1:] ** k) * g_trace.g[1:] +
                                 (t[:-1] ** k) * g_trace.g[:-1]))])
    if x_ladder is None:
        x_ladder = tuple(T / 2 ** j for j in (3, 2, 1, 0))
    xs = tuple(float(x) for x in sorted(x_ladder) if 0 < x <= T)
    if len(xs) < 3:
        raise ModelError("x ladder needs >= 3 points inside the trace horizon")
    U_ratios = [float(np.interp(x, t, u_int)) / x ** rho for x in xs]

    K_limit = _aitken_limit(K_est)
    U_limit = _aitken_limit(U_ratios)

    def _rel_step(vals):
        return abs(vals[-1] - vals[-2]) / max(abs(vals[-1]), 1e-300)

    stab_K = _rel_step(K_est) <= stab_tol
    stab_U = _rel_step(U_ratios) <= stab_tol
    cross_gap = abs(K_limit / math.gamma(rho + 1) - U_limit) / max(abs(U_limit), 1e-300)
    cross_ok = cross_gap <= cross_tol
    slow = _slow_oscillation(g_trace, k, eps)

    if stab_K and stab_U and cross_ok and slow:
        verdict = "consistent"
    elif (not slow) or (stab_K and stab_U and cross_gap > 2 * cross_tol):
        verdict = "inconsistent"
    else:
        verdict = "inconclusive"

    return TauberianReport(
        k=k, gamma=gamma, rho=rho,
        s_ladder=ladder, K_estimates=tuple(K_est),
        x_ladder=xs, U_ratios=tuple(U_ratios),
        K_limit=K_limit, U_limit=U_limit,
        slow_osc_pass=slow, verdict=verdict,
        detail={"stab_K": stab_K, "stab_U": stab_U,
                "cross_gap": cross_gap, "s_min": s_min})
