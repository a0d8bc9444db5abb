"""Spectral constants of the recursion: decay base q, exponent gamma, mean mu."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Tuple

from .model import DecaySequence, DiscreteProblem, ContinuousProblem, ModelError

__all__ = [
    "SpectralConstants",
    "NoSpectralPointError",
    "solve_q",
    "gamma_discrete",
    "gamma_continuous",
    "normalize",
    "spectral_discrete",
    "spectral_continuous",
]

_EPS = 2.0 ** -52


class NoSpectralPointError(ModelError):
    """sum a_n q^n never crosses 1 on the admissible interval."""


@dataclass(frozen=True)
class SpectralConstants:
    """q solves sum a_n q^n = 1; gamma = sum b_n q^n / mu with mu = sum n a_n q^n.

    `q_exact` is set when the unit mass of a makes q = 1 exactly, which
    enables exact-rational solves downstream.
    """

    q: float
    gamma: float
    mu: float
    series_error_bound: float
    q_exact: Optional[Fraction] = None


def _mass(a: DecaySequence, q: float) -> float:
    return float(a.series(q))


def _mass_derivative(a: DecaySequence, q: float) -> float:
    # d/dq sum a_n q^n = (1/q) sum n a_n q^n
    return float(a.series(q, moment=1)) / q


def solve_q(a: DecaySequence, tol: float = 1e-14) -> float:
    """Positive root of sum a_n q^n = 1, by bracketing + bisection + Newton.

    The map is increasing and convex for nonnegative a, so the root in
    (0, 1/rho) is unique when it exists.
    """
    if a.is_zero:
        raise NoSpectralPointError("a vanishes identically")
    if a.is_exact and a.series(Fraction(1)) == 1:
        return 1.0

    rho = float(a.tail_ratio)
    if rho > 0:
        q_hi = (1.0 - 1e-12) / rho
        # the tail diverges at 1/rho, so the mass exceeds 1 before q_hi
        while _mass(a, q_hi) <= 1.0:
            q_hi = (q_hi + 1.0 / rho) / 2.0
            if 1.0 / rho - q_hi < 1e-15 / rho:
                raise NoSpectralPointError(
                    "sum a_n q^n stays <= 1 up to the convergence radius")
    else:
        q_hi = 1.0
        while _mass(a, q_hi) <= 1.0:
            q_hi *= 2.0
            if q_hi > 1e12:
                raise NoSpectralPointError("no sign change found for q up to 1e12")

    q_lo = 0.0
    for _ in range(200):
        mid = 0.5 * (q_lo + q_hi)
        if _mass(a, mid) < 1.0:
            q_lo = mid
        else:
            q_hi = mid
        if q_hi - q_lo <= 1e-14 * max(1.0, q_hi):
            break

    q = 0.5 * (q_lo + q_hi)
    for _ in range(6):
        f = _mass(a, q) - 1.0
        if abs(f) <= tol:
            break
        df = _mass_derivative(a, q)
        if df <= 0:
            break
        step = f / df
        q_new = q - step
        if rho > 0 and not q_new < 1.0 / rho:
            q_new = 0.5 * (q + (1.0 - 1e-12) / rho)
        if q_new <= 0:
            q_new = q / 2.0
        q = q_new

    if abs(_mass(a, q) - 1.0) > max(tol, 64 * _EPS):
        raise NoSpectralPointError(
            f"root polishing stalled: |sum a_n q^n - 1| = {abs(_mass(a, q) - 1.0):g}")
    return q


def gamma_discrete(a: DecaySequence, b: DecaySequence, q,
                   tol: float = 1e-12) -> Tuple[float, float]:
    """(gamma, mu) with gamma = sum b_n q^n / sum n a_n q^n and mu the denominator.

    Both series are closed forms (prefix + geometric tail), so the error is
    rounding only.
    """
    mu = float(a.series(q, moment=1))
    if mu <= tol:
        raise ModelError(f"degenerate mean: sum n a_n q^n = {mu:g}")
    num = float(b.series(q))
    return num / mu, mu


def gamma_continuous(a, b, tol: float = 1e-12) -> Tuple[float, float]:
    """(gamma, mu) with gamma = int b / int s a(s) ds and mu the denominator."""
    mu = a.integral(moment=1)
    if mu <= tol:
        raise ModelError(f"degenerate mean: int s a(s) ds = {mu:g}")
    num = b.integral() if not b.is_zero else 0.0
    return num / mu, mu


def normalize(p: DiscreteProblem, q) -> DiscreteProblem:
    """Tilted problem: a~_j = q^j a_j, b~_j = q^j b_j, c~ = q^j c, r~_n = q^n r_n.

    For q = solve_q(p.a) the tilted a has unit mass and spectral point 1;
    geometric tails stay geometric with ratio q*rho.  Exact when q is a
    Fraction and the data are rational.
    """
    return DiscreteProblem(
        a=p.a.tilt(q),
        b=p.b.tilt(q),
        c=p.c.tilt(q),
        r=p.r.tilt(q),
        weight_form=p.weight_form,
    )


def _series_rounding_bound(a: DecaySequence, b: DecaySequence, q: float) -> float:
    scale = float(a.abs_series(q)) + float(a.abs_series(q, moment=1))
    if not b.is_zero:
        scale += float(b.abs_series(q))
    terms = len(a.prefix) + len(b.prefix) + 8
    return 4.0 * terms * _EPS * max(1.0, scale)


def spectral_discrete(p: DiscreteProblem, tol: float = 1e-14) -> SpectralConstants:
    """Solve for q, then form gamma and mu on the same problem."""
    q_exact = None
    if p.a.is_exact and p.a.series(Fraction(1)) == 1:
        q = 1.0
        q_exact = Fraction(1)
    else:
        q = solve_q(p.a, tol)
    gamma, mu = gamma_discrete(p.a, p.b, q)
    bound = max(tol, _series_rounding_bound(p.a, p.b, q))
    return SpectralConstants(q=q, gamma=gamma, mu=mu,
                             series_error_bound=bound, q_exact=q_exact)


def spectral_continuous(p: ContinuousProblem) -> SpectralConstants:
    """Continuous constants: a is a density, so q = 1 identically."""
    gamma, mu = gamma_continuous(p.a, p.b)
    mass = p.a.integral()
    return SpectralConstants(q=1.0, gamma=gamma, mu=mu,
                             series_error_bound=abs(mass - 1.0) + 16 * _EPS,
                             q_exact=Fraction(1))
