"""Forward solver and Theorem-style diagnostics for the discrete recursion.

Everything runs on the tilde-normalized problem (unit a-mass, spectral point
1), which keeps x within polynomial range over long horizons.  Exact-rational
solves are available whenever the data and q are rational; a scaled-integer
fast path covers the pure-renewal case b = c = 0.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from .constants import SpectralConstants, normalize
from .model import (
    DecaySequence,
    DiscreteProblem,
    ModelError,
    NegativeWeightError,
)

__all__ = [
    "SolutionTrace",
    "BoundCertificate",
    "AsymptoticEstimate",
    "NumericOverflowError",
    "solve",
    "positivity_horizon",
    "residual",
    "residual_tail_max",
    "bound_certificate",
    "estimate_C",
    "loglog_slope",
    "default_precision",
]

PRECISION_ENV = "RENEWAL_ASYM_PRECISION"


class NumericOverflowError(ArithmeticError):
    """Float solve overflowed; escalate precision (RENEWAL_ASYM_PRECISION)."""


def default_precision() -> int:
    """Working mantissa bits; 53 = IEEE double, overridable via environment."""
    raw = os.environ.get(PRECISION_ENV, "")
    if raw.strip():
        bits = int(raw)
        if bits < 24:
            raise ValueError(f"{PRECISION_ENV} must be >= 24 bits")
        return bits
    return 53


@dataclass
class SolutionTrace:
    """Normalized solution x~, the compensated sequence y_n = x~_n n^{-gamma}."""

    N: int
    x_tilde: np.ndarray          # index n = 0..N, slot 0 unused
    y: np.ndarray
    arithmetic_mode: str
    gamma_used: float
    q_used: float
    x_exact: Optional[list] = None      # Fractions when solved exactly
    problem: Optional[DiscreteProblem] = None  # the normalized problem


@dataclass
class BoundCertificate:
    """Finite products from the chain inequalities bracketing sup/inf of y."""

    s_upper: np.ndarray          # s_n for n = 1..N (slot 0 unused)
    s_lower: np.ndarray          # s_n for n > N_threshold (slot <= threshold: nan)
    product_upper: float
    product_lower: float
    N_threshold: Optional[int]
    cauchy_ok: bool
    status: str                  # "certified" or "inconclusive"


@dataclass
class AsymptoticEstimate:
    C_hat: float
    window: tuple
    method: str
    dispersion: float
    status: str                  # converged | not_converged | inconclusive
    secondary: Optional[float] = None   # Aitken estimate on the dyadic subsequence


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def solve(p: DiscreteProblem, sc: SpectralConstants, N: int,
          mode: str = "float", precision: Optional[int] = None) -> SolutionTrace:
    """Iterate the normalized recursion up to index N.

    mode "float" uses IEEE doubles (or mpmath beyond 53 bits); mode "exact"
    requires rational data and rational q and satisfies the recursion
    identically.
    """
    if N < 1:
        raise ValueError("horizon N must be >= 1")
    if mode not in ("float", "exact"):
        raise ValueError(f"unknown arithmetic mode {mode!r}")

    if mode == "exact":
        if sc.q_exact is None:
            raise ModelError("exact mode needs a rational spectral point")
        if not p.is_exact:
            raise ModelError("exact mode needs rational problem data")
        pn = normalize(p, sc.q_exact)
        x_exact = _solve_exact(pn, N)
        x = np.array([float(v) for v in x_exact])
        mode_tag = "exact_rational"
    else:
        bits = precision if precision is not None else default_precision()
        pn = normalize(p, sc.q_exact if sc.q_exact is not None else sc.q)
        if bits <= 53:
            x = _solve_float(pn, N)
        else:
            x = _solve_mpmath(pn, N, bits)
        if not np.all(np.isfinite(x)):
            raise NumericOverflowError(
                f"non-finite value at n = {int(np.argmax(~np.isfinite(x)))}; "
                f"raise {PRECISION_ENV} above {bits} bits")
        x_exact = None
        mode_tag = f"float{bits}"

    n = np.arange(N + 1, dtype=float)
    n[0] = 1.0
    with np.errstate(divide="ignore"):
        y = x * n ** (-sc.gamma)
    y[0] = 0.0
    return SolutionTrace(N=N, x_tilde=x, y=y, arithmetic_mode=mode_tag,
                         gamma_used=sc.gamma, q_used=sc.q,
                         x_exact=x_exact, problem=pn)


def _solve_float(pn: DiscreteProblem, N: int) -> np.ndarray:
    a = pn.a.sample(N)
    b = pn.b.sample(N) if not pn.b.is_zero else None
    r = pn.r.sample(N)
    c = pn.c if not pn.c.is_zero else None
    over_nj = pn.weight_form == "b_over_n_minus_j"
    denom_rev = np.arange(N + 1, dtype=float)[::-1]  # denom_rev[N-k] = k

    scale = max(1.0, float(np.max(np.abs(a)))) * 1e-12
    x = np.zeros(N + 1)
    x[1] = r[1]
    for n in range(2, N + 1):
        xrev = x[n - 1:0:-1]           # x_{n-1}, ..., x_1
        if b is None and c is None:
            x[n] = float(np.dot(a[1:n], xrev)) + r[n]
            continue
        row = a[1:n].copy()
        if b is not None:
            if over_nj:
                row += b[1:n] / denom_rev[N - n + 1:N]   # b_j / (n - j)
            else:
                row += b[1:n] / n
        if c is not None:
            crow = c.row(n)
            if crow is not None:
                row += crow
        if row.min() < -scale:
            j_bad = int(np.argmin(row)) + 1
            raise NegativeWeightError(
                f"w[{n},{j_bad}] = {row.min():g} < 0 during solve")
        x[n] = float(np.dot(row, xrev)) + r[n]
    return x


def _solve_exact(pn: DiscreteProblem, N: int) -> list:
    if pn.b.is_zero and pn.c.is_zero:
        fast = _try_scaled_int(pn, N)
        if fast is not None:
            return fast
    return _solve_fraction(pn, N)


def _denoms(seq: DecaySequence) -> list:
    out = [Fraction(v).denominator for v in seq.prefix]
    if seq.tail is not None:
        al, rh = Fraction(seq.tail.alpha), Fraction(seq.tail.rho)
        out += [al.denominator * rh.denominator, rh.denominator]
    return out or [1]


def _try_scaled_int(pn: DiscreteProblem, N: int) -> Optional[list]:
    """Integer recursion for X_n = D^n x_n; valid because den(a_j) | D^j."""
    D = math.lcm(*(_denoms(pn.a) + _denoms(pn.r)))
    A = [0] * (N + 1)
    R = [0] * (N + 1)
    Dp = 1
    for n in range(1, N + 1):
        Dp *= D
        av = Fraction(pn.a.value(n)) * Dp
        rv = Fraction(pn.r.value(n)) * Dp
        if av.denominator != 1 or rv.denominator != 1:
            return None
        if av < 0:
            raise NegativeWeightError(f"a[{n}] < 0 during exact solve")
        A[n] = av.numerator
        R[n] = rv.numerator
    X = [0] * (N + 1)
    X[1] = R[1]
    for n in range(2, N + 1):
        acc = R[n]
        for j in range(1, n):
            Aj = A[j]
            if Aj:
                acc += Aj * X[n - j]
        X[n] = acc
    Dp = 1
    out = [Fraction(0)] * (N + 1)
    for n in range(1, N + 1):
        Dp *= D
        out[n] = Fraction(X[n], Dp)
    return out


def _solve_fraction(pn: DiscreteProblem, N: int) -> list:
    a = pn.a.sample_exact(N)
    b = pn.b.sample_exact(N)
    r = pn.r.sample_exact(N)
    zero_b = pn.b.is_zero
    zero_c = pn.c.is_zero
    over_nj = pn.weight_form == "b_over_n_minus_j"
    x = [Fraction(0)] * (N + 1)
    x[1] = r[1]
    for n in range(2, N + 1):
        acc = r[n]
        for j in range(1, n):
            w = a[j]
            if not zero_b and b[j]:
                w = w + b[j] / (n - j if over_nj else n)
            if not zero_c:
                w = w + Fraction(pn.c.value(n, j))
            if w < 0:
                raise NegativeWeightError(f"w[{n},{j}] = {float(w):g} < 0")
            if w:
                acc += w * x[n - j]
        x[n] = acc
    return x


def _solve_mpmath(pn: DiscreteProblem, N: int, bits: int) -> np.ndarray:
    from mpmath import mp, mpf

    def to_mpf(v):
        if isinstance(v, (int, Fraction)):
            f = Fraction(v)
            return mpf(f.numerator) / f.denominator
        return mpf(v)

    with mp.workprec(bits):
        a = [mpf(0)] + [to_mpf(pn.a.value(n)) for n in range(1, N + 1)]
        b = None
        if not pn.b.is_zero:
            b = [mpf(0)] + [to_mpf(pn.b.value(n)) for n in range(1, N + 1)]
        r = [mpf(0)] + [to_mpf(pn.r.value(n)) for n in range(1, N + 1)]
        over_nj = pn.weight_form == "b_over_n_minus_j"
        x = [mpf(0)] * (N + 1)
        x[1] = r[1]
        for n in range(2, N + 1):
            acc = r[n]
            for j in range(1, n):
                w = a[j]
                if b is not None:
                    w = w + b[j] / (n - j if over_nj else n)
                if not pn.c.is_zero:
                    w = w + float(pn.c.value(n, j))
                if w < 0:
                    raise NegativeWeightError(f"w[{n},{j}] < 0 during solve")
                acc += w * x[n - j]
            x[n] = acc
        return np.array([float(v) for v in x])


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def positivity_horizon(tr: SolutionTrace) -> Optional[int]:
    """Smallest N0 with x~_n > 0 for all N0 <= n <= N; None if the tail has zeros."""
    vals = tr.x_exact if tr.x_exact is not None else tr.x_tilde
    if vals[tr.N] <= 0:
        return None
    n0 = tr.N
    for n in range(tr.N, 0, -1):
        if vals[n] <= 0:
            break
        n0 = n
    return n0


def residual(tr: SolutionTrace, a: DecaySequence) -> np.ndarray:
    """rho_n = y_n - sum_{j<n} a_j y_{n-j}; tends to 0 under the hypotheses."""
    N = tr.N
    av = a.sample(N)
    y = tr.y
    out = np.empty(N + 1)
    out[0] = 0.0
    out[1] = y[1]
    for n in range(2, N + 1):
        out[n] = y[n] - float(np.dot(av[1:n], y[n - 1:0:-1]))
    return out


def residual_tail_max(res: np.ndarray, lo_frac: float = 0.1) -> float:
    """max |rho_n| over the last decade of indices [N*lo_frac, N]."""
    N = len(res) - 1
    lo = max(1, int(N * lo_frac))
    return float(np.max(np.abs(res[lo:])))


def _weight_row_fn(pn: DiscreteProblem, N: int) -> Callable[[int], np.ndarray]:
    a = pn.a.sample(N)
    b = pn.b.sample(N) if not pn.b.is_zero else None
    c = pn.c if not pn.c.is_zero else None
    over_nj = pn.weight_form == "b_over_n_minus_j"
    denom_rev = np.arange(N + 1, dtype=float)[::-1]

    def row(n: int) -> np.ndarray:
        w = a[1:n].copy()
        if b is not None:
            if over_nj:
                w += b[1:n] / denom_rev[N - n + 1:N]
            else:
                w += b[1:n] / n
        if c is not None:
            crow = c.row(n)
            if crow is not None:
                w += crow
        return w

    return row


def bound_certificate(pn: DiscreteProblem, tr: SolutionTrace, gamma: float,
                      weight_rows: Optional[Callable[[int], np.ndarray]] = None,
                      r_values: Optional[np.ndarray] = None) -> BoundCertificate:
    """Running products for the upper/lower chain inequalities on y.

    Upper: s_n = |sum_{j<n} (w_{n,j}(1-j/n)^gamma - a_j)| + r_n n^{-gamma} and
    sup y <= max(1, y_1) * prod(1+s_n).  Lower: the same sum truncated at
    n - N0 plus the exact a-tail beyond it, with N0 the positivity threshold.
    The certificate is inconclusive when the s_n fail a dyadic Cauchy test.
    """
    N = tr.N
    a = pn.a.sample(N)
    rows = weight_rows if weight_rows is not None else _weight_row_fn(pn, N)
    rv = r_values if r_values is not None else pn.r.sample(N)

    n_arr = np.arange(N + 1, dtype=float)
    s_up = np.zeros(N + 1)
    s_up[0] = np.nan
    if N >= 1:
        s_up[1] = rv[1]
    n0 = positivity_horizon(tr)
    s_lo = np.full(N + 1, np.nan)

    for n in range(2, N + 1):
        w = rows(n)
        j = n_arr[1:n]
        factor = ((n - j) / n) ** gamma
        diff = w * factor - a[1:n]
        s_up[n] = abs(float(np.sum(diff))) + rv[n] * n ** (-gamma)
        if n0 is not None and n > n0:
            m = n - n0
            a_tail = float(pn.a.tail_series(m + 1, 1.0))
            s_lo[n] = a_tail + abs(float(np.sum(diff[:m])))

    finite_up = s_up[1:]
    with np.errstate(over="ignore"):
        product_upper = float(np.prod(1.0 + finite_up))
    if n0 is not None and n0 < N:
        lower_terms = 1.0 - s_lo[n0 + 1:]
        product_lower = float(np.prod(lower_terms))
    else:
        product_lower = math.nan

    # saturation test: a summable s_n leaves almost nothing in the last
    # half-window, while slowly decaying ones keep adding visibly
    total = float(np.sum(finite_up))
    tail = float(np.sum(finite_up[N // 2:]))
    cauchy_ok = tail <= max(0.01 * total, 1e-9)
    return BoundCertificate(
        s_upper=s_up, s_lower=s_lo,
        product_upper=product_upper, product_lower=product_lower,
        N_threshold=n0, cauchy_ok=cauchy_ok,
        status="certified" if cauchy_ok else "inconclusive")


def _aitken(seq: Sequence[float]) -> Optional[float]:
    if len(seq) < 3:
        return None
    s0, s1, s2 = seq[-3], seq[-2], seq[-1]
    denom = (s2 - s1) - (s1 - s0)
    if denom == 0:
        return s2
    return s2 - (s2 - s1) ** 2 / denom


def estimate_C(tr: SolutionTrace, tol: float = 0.02) -> AsymptoticEstimate:
    """Limit constant from the upper half of the trace, cross-checked by Aitken.

    Converged needs both a tight window (dispersion/C <= tol) and agreement
    with the Aitken estimate on y at dyadic indices; disagreement with a tight
    window is reported as inconclusive.
    """
    if positivity_horizon(tr) is None:
        raise ModelError("positivity horizon absent; the limit constant is undefined")
    N = tr.N
    lo = max(1, N // 2)
    window = tr.y[lo:N + 1]
    if window.size == 0:
        raise ValueError("empty estimation window")
    C_hat = float(np.mean(window))
    dispersion = float(np.max(window) - np.min(window))

    dyadic = [tr.y[1 << k] for k in range(0, N.bit_length()) if (1 << k) <= N]
    secondary = _aitken(dyadic)

    denom = max(abs(C_hat), 1e-300)
    tight = dispersion / denom <= tol
    if not tight:
        status = "not_converged"
    elif secondary is None or abs(secondary - C_hat) <= tol * denom:
        status = "converged"
    else:
        status = "inconclusive"
    return AsymptoticEstimate(C_hat=C_hat, window=(lo, N), method="tail_mean",
                              dispersion=dispersion, status=status,
                              secondary=secondary)


def loglog_slope(ns: np.ndarray, ys: np.ndarray) -> tuple:
    """(slope, intercept, r2) of log y against log n; y must be positive."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if np.any(ys <= 0):
        raise ValueError("log-log fit needs positive values")
    X = np.log(ns)
    Y = np.log(ys)
    slope, intercept = np.polyfit(X, Y, 1)
    pred = slope * X + intercept
    ss_res = float(np.sum((Y - pred) ** 2))
    ss_tot = float(np.sum((Y - Y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2
