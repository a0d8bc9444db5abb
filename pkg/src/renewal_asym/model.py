"""Problem families for renewal-like recursions and perturbed Volterra kernels.

Coefficient sequences are finite rational prefixes with an optional geometric
tail, so every power series used by the validators has a closed-form value and
an exact tail bound.  Continuous coefficients are exponential mixtures (or
enveloped sample tables), so the same holds for the integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]

__all__ = [
    "DecaySequence",
    "GeometricTail",
    "ZeroKernel",
    "SeparableKernel",
    "TableKernel",
    "DiscreteProblem",
    "ExpMixture",
    "PiecewiseTable",
    "SeparableKernelC",
    "ContinuousProblem",
    "ConditionCheck",
    "ValidationReport",
    "ModelError",
    "NegativeWeightError",
    "validate_discrete",
    "validate_continuous",
    "weight_discrete",
    "weight_continuous",
    "upper_riemann_sum",
]


class ModelError(ValueError):
    """Malformed problem data (bad envelope, out-of-range index, ...)."""


class NegativeWeightError(ModelError):
    """A realized kernel value was negative beyond rounding tolerance."""


def _as_number(x: Number) -> Number:
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


def _is_exact(x: Number) -> bool:
    return isinstance(x, (int, Fraction))


# ---------------------------------------------------------------------------
# Discrete coefficient sequences
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeometricTail:
    """Tail n >= start with value(n) = alpha * rho**n, 0 < rho < 1."""

    alpha: Number
    rho: Number
    start: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", _as_number(self.alpha))
        object.__setattr__(self, "rho", _as_number(self.rho))
        if not (0 < self.rho < 1):
            raise ModelError(f"geometric tail ratio must lie in (0,1), got {self.rho}")
        if self.start < 1:
            raise ModelError("tail start index must be >= 1")


@dataclass(frozen=True)
class DecaySequence:
    """Sequence indexed from 1: explicit prefix, then an optional geometric tail.

    Indices past the prefix and before the tail start are zero.  With a
    rational argument every series below is evaluated exactly; with a float
    argument the prefix is accumulated by compensated summation and the tail
    added in closed form.
    """

    prefix: tuple = ()
    tail: Optional[GeometricTail] = None
    nonnegative: bool = False

    def __post_init__(self):
        object.__setattr__(self, "prefix", tuple(_as_number(v) for v in self.prefix))
        if self.tail is not None and self.tail.start <= len(self.prefix):
            raise ModelError("geometric tail may not start inside the explicit prefix")
        if self.nonnegative:
            if any(v < 0 for v in self.prefix):
                raise ModelError("negative prefix entry in a nonnegative sequence")
            if self.tail is not None and self.tail.alpha < 0:
                raise ModelError("negative tail coefficient in a nonnegative sequence")

    # -- pointwise access ---------------------------------------------------

    def value(self, n: int) -> Number:
        if n < 1:
            raise ModelError(f"sequence index must be >= 1, got {n}")
        if n <= len(self.prefix):
            return self.prefix[n - 1]
        if self.tail is not None and n >= self.tail.start:
            return self.tail.alpha * self.tail.rho ** n
        return Fraction(0)

    @property
    def is_zero(self) -> bool:
        return all(v == 0 for v in self.prefix) and (
            self.tail is None or self.tail.alpha == 0
        )

    @property
    def is_exact(self) -> bool:
        ok = all(_is_exact(v) for v in self.prefix)
        if self.tail is not None:
            ok = ok and _is_exact(self.tail.alpha) and _is_exact(self.tail.rho)
        return ok

    @property
    def tail_ratio(self) -> Number:
        """Decay ratio of the tail; 0 for finitely supported sequences."""
        return self.tail.rho if self.tail is not None and self.tail.alpha != 0 else Fraction(0)

    def support_indices(self) -> list:
        """Indices of nonzero prefix entries, plus the first two tail indices."""
        idx = [j + 1 for j, v in enumerate(self.prefix) if v != 0]
        if self.tail is not None and self.tail.alpha != 0:
            idx += [self.tail.start, self.tail.start + 1]
        return idx

    # -- series in closed form ----------------------------------------------

    def _tail_geom(self, z: Number, moment: int, start: int, absolute: bool) -> Number:
        """sum_{n>=start} n^moment * alpha * (rho z)^n, exact closed form."""
        if self.tail is None or self.tail.alpha == 0:
            return Fraction(0)
        m = max(start, self.tail.start)
        alpha = abs(self.tail.alpha) if absolute else self.tail.alpha
        u = self.tail.rho * z
        if not abs(u) < 1:
            raise ModelError(f"series diverges: tail ratio * z = {float(u):g} >= 1")
        if moment == 0:
            return alpha * u ** m / (1 - u)
        if moment == 1:
            return alpha * u ** m * (m - (m - 1) * u) / (1 - u) ** 2
        raise ModelError(f"unsupported series moment {moment}")

    def series(self, z: Number, moment: int = 0) -> Number:
        """sum_{n>=1} n^moment * value(n) * z**n  (moment 0 or 1)."""
        z = _as_number(z)
        terms = [(n + 1) ** moment * v * z ** (n + 1)
                 for n, v in enumerate(self.prefix) if v != 0]
        if _is_exact(z) and self.is_exact:
            head = sum(terms, Fraction(0))
        else:
            head = math.fsum(float(t) for t in terms)
        if self.tail is None or self.tail.alpha == 0:
            return head
        return head + self._tail_geom(z, moment, self.tail.start, absolute=False)

    def abs_series(self, z: Number, moment: int = 0) -> Number:
        """sum n^moment * |value(n)| * z**n; raises ModelError when divergent."""
        z = _as_number(z)
        terms = [(n + 1) ** moment * abs(v) * z ** (n + 1)
                 for n, v in enumerate(self.prefix) if v != 0]
        if _is_exact(z) and self.is_exact:
            head = sum(terms, Fraction(0))
        else:
            head = math.fsum(float(t) for t in terms)
        if self.tail is None or self.tail.alpha == 0:
            return head
        return head + self._tail_geom(z, moment, self.tail.start, absolute=True)

    def tail_series(self, n0: int, z: Number = 1, moment: int = 0, absolute: bool = False) -> Number:
        """sum_{n>=n0} n^moment * value(n) * z**n in closed form."""
        z = _as_number(z)
        hi = len(self.prefix)
        terms = []
        for n in range(max(n0, 1), hi + 1):
            v = self.prefix[n - 1]
            if v != 0:
                terms.append(n ** moment * (abs(v) if absolute else v) * z ** n)
        if _is_exact(z) and self.is_exact:
            head = sum(terms, Fraction(0))
        else:
            head = math.fsum(float(t) for t in terms)
        if self.tail is None or self.tail.alpha == 0:
            return head
        return head + self._tail_geom(z, moment, max(n0, self.tail.start), absolute=absolute)

    def series_bracket(self, z: Number, trunc: int, moment: int = 0):
        """(lo, hi) enclosing the full series from the first `trunc` terms.

        The remainder past `trunc` is bracketed by +/- its absolute closed
        form, so refining `trunc` yields nested brackets.
        """
        z = _as_number(z)
        if _is_exact(z) and self.is_exact:
            head = sum((n ** moment * self.value(n) * z ** n for n in range(1, trunc + 1)),
                       Fraction(0))
        else:
            head = math.fsum(float(n ** moment * self.value(n) * z ** n)
                             for n in range(1, trunc + 1))
        rem = self.tail_series(trunc + 1, z, moment, absolute=True)
        if self.nonnegative and z >= 0:
            return head, head + rem
        return head - rem, head + rem

    # -- transforms ----------------------------------------------------------

    def tilt(self, q: Number) -> "DecaySequence":
        """Sequence n -> value(n) * q**n; geometric tails stay geometric."""
        q = _as_number(q)
        if q <= 0:
            raise ModelError("tilt factor must be positive")
        prefix = tuple(v * q ** (n + 1) for n, v in enumerate(self.prefix))
        tail = None
        if self.tail is not None:
            rho = self.tail.rho * q
            if not rho < 1:
                raise ModelError(f"tilted tail ratio {float(rho):g} >= 1")
            tail = GeometricTail(self.tail.alpha, rho, self.tail.start)
        return DecaySequence(prefix, tail, self.nonnegative and q > 0)

    def sample(self, N: int) -> np.ndarray:
        """Float values at indices 0..N (index 0 is unused and set to 0)."""
        out = np.zeros(N + 1)
        hi = min(len(self.prefix), N)
        out[1:hi + 1] = [float(v) for v in self.prefix[:hi]]
        if self.tail is not None and self.tail.alpha != 0 and self.tail.start <= N:
            n = np.arange(self.tail.start, N + 1, dtype=float)
            with np.errstate(under="ignore"):
                out[self.tail.start:] = float(self.tail.alpha) * np.exp(
                    n * math.log(float(self.tail.rho)))
        return out

    def sample_exact(self, N: int) -> list:
        """Exact values at indices 0..N (index 0 set to Fraction(0))."""
        if not self.is_exact:
            raise ModelError("sequence holds float entries; exact sampling unavailable")
        return [Fraction(0)] + [Fraction(self.value(n)) for n in range(1, N + 1)]


def delta1() -> DecaySequence:
    """The unit impulse at index 1."""
    return DecaySequence(prefix=(Fraction(1),), nonnegative=True)


# ---------------------------------------------------------------------------
# Discrete perturbation kernels c_{n,j}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroKernel:
    def value(self, n: int, j: int) -> Number:
        _check_kernel_index(n, j)
        return Fraction(0)

    def row(self, n: int) -> Optional[np.ndarray]:
        return None

    def abs_double_series(self, z: Number) -> Number:
        return Fraction(0)

    @property
    def is_zero(self) -> bool:
        return True

    @property
    def is_exact(self) -> bool:
        return True

    @property
    def asserted(self) -> bool:
        return False

    def tilt(self, q: Number) -> "ZeroKernel":
        return self


@dataclass(frozen=True)
class SeparableKernel:
    """c_{n,j} = kappa * sigma**n * rho**j with sigma, rho in (0,1)."""

    kappa: Number
    sigma: Number
    rho: Number

    def __post_init__(self):
        object.__setattr__(self, "kappa", _as_number(self.kappa))
        object.__setattr__(self, "sigma", _as_number(self.sigma))
        object.__setattr__(self, "rho", _as_number(self.rho))
        if not (0 < self.sigma < 1) or not (0 < self.rho < 1):
            raise ModelError("separable kernel decay ratios must lie in (0,1)")

    def value(self, n: int, j: int) -> Number:
        _check_kernel_index(n, j)
        return self.kappa * self.sigma ** n * self.rho ** j

    def row(self, n: int) -> Optional[np.ndarray]:
        """Float values c_{n,j} for j = 1..n-1 (None when the row vanishes)."""
        if self.kappa == 0:
            return None
        lead = float(self.kappa) * float(self.sigma) ** n
        if lead == 0.0:
            return None
        j = np.arange(1, n, dtype=float)
        with np.errstate(under="ignore"):
            return lead * np.exp(j * math.log(float(self.rho)))

    def abs_double_series(self, z: Number) -> Number:
        """sum_{n} sum_{j<n} |c_{n,j}| z**j, exact closed form."""
        z = _as_number(z)
        u = self.rho * z
        if not abs(u) < 1:
            raise ModelError(f"kernel series diverges at z={float(z):g}")
        k, s = abs(self.kappa), self.sigma
        # sum_{n>=2} s^n * u (1-u^{n-1})/(1-u)
        return k * u / (1 - u) * (s ** 2 / (1 - s) - s ** 2 * u / (1 - s * u))

    @property
    def is_zero(self) -> bool:
        return self.kappa == 0

    @property
    def is_exact(self) -> bool:
        return _is_exact(self.kappa) and _is_exact(self.sigma) and _is_exact(self.rho)

    @property
    def asserted(self) -> bool:
        return False

    def tilt(self, q: Number) -> "SeparableKernel":
        q = _as_number(q)
        rho = self.rho * q
        if not rho < 1:
            raise ModelError(f"tilted kernel ratio {float(rho):g} >= 1")
        return SeparableKernel(self.kappa, self.sigma, rho)


@dataclass(frozen=True)
class TableKernel:
    """Explicit values for n <= n0, user-asserted envelope K sigma^n rho^j beyond.

    The envelope is an assertion, not a computation, so validators report
    `unknown` rather than `pass` for series conditions that rely on it.
    """

    values: tuple  # tuple of rows; row n-2 holds (c_{n,1}, ..., c_{n,n-1})
    envelope_K: Number
    envelope_sigma: Number
    envelope_rho: Number

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(tuple(_as_number(v) for v in row)
                                                 for row in self.values))
        object.__setattr__(self, "envelope_K", _as_number(self.envelope_K))
        object.__setattr__(self, "envelope_sigma", _as_number(self.envelope_sigma))
        object.__setattr__(self, "envelope_rho", _as_number(self.envelope_rho))
        for i, row in enumerate(self.values):
            if len(row) != i + 1:
                raise ModelError("table row for n must hold exactly n-1 entries")
        if not (0 < self.envelope_sigma < 1) or not (0 < self.envelope_rho < 1):
            raise ModelError("envelope decay ratios must lie in (0,1)")
        if self.envelope_K < 0:
            raise ModelError("envelope constant must be nonnegative")

    @property
    def n0(self) -> int:
        return len(self.values) + 1

    def value(self, n: int, j: int) -> Number:
        _check_kernel_index(n, j)
        if n <= self.n0:
            return self.values[n - 2][j - 1]
        return Fraction(0)  # beyond the table only the envelope is known

    def row(self, n: int) -> Optional[np.ndarray]:
        if n <= self.n0:
            return np.array([float(v) for v in self.values[n - 2]])
        return None

    def abs_double_series(self, z: Number) -> Number:
        z = _as_number(z)
        u = self.envelope_rho * z
        if not abs(u) < 1:
            raise ModelError(f"kernel envelope series diverges at z={float(z):g}")
        head = sum((abs(v) * z ** (j + 1) for row in self.values
                    for j, v in enumerate(row)), Fraction(0) if _is_exact(z) else 0.0)
        K, s = self.envelope_K, self.envelope_sigma
        n0 = self.n0
        tail = K * u / (1 - u) * (s ** (n0 + 1) / (1 - s) - s ** (n0 + 1) * u ** n0 / (1 - s * u))
        return head + tail

    @property
    def is_zero(self) -> bool:
        return self.envelope_K == 0 and all(v == 0 for row in self.values for v in row)

    @property
    def is_exact(self) -> bool:
        return all(_is_exact(v) for row in self.values for v in row)

    @property
    def asserted(self) -> bool:
        return True

    def tilt(self, q: Number) -> "TableKernel":
        q = _as_number(q)
        rho = self.envelope_rho * q
        if not rho < 1:
            raise ModelError(f"tilted envelope ratio {float(rho):g} >= 1")
        values = tuple(tuple(v * q ** (j + 1) for j, v in enumerate(row))
                       for row in self.values)
        return TableKernel(values, self.envelope_K, self.envelope_sigma, rho)


def _check_kernel_index(n: int, j: int):
    if not 1 <= j <= n - 1:
        raise ModelError(f"kernel index (n={n}, j={j}) outside 1 <= j <= n-1")


DiscreteKernel = Union[ZeroKernel, SeparableKernel, TableKernel]


# ---------------------------------------------------------------------------
# Discrete problem
# ---------------------------------------------------------------------------

WEIGHT_FORMS = ("b_over_n", "b_over_n_minus_j")


@dataclass(frozen=True)
class DiscreteProblem:
    """Weights w_{n,j} = a_j + b_j/n + c_{n,j} (or b_j/(n-j)) and forcing r."""

    a: DecaySequence
    b: DecaySequence = field(default_factory=DecaySequence)
    c: DiscreteKernel = field(default_factory=ZeroKernel)
    r: DecaySequence = field(default_factory=DecaySequence)
    weight_form: str = "b_over_n"

    def __post_init__(self):
        if self.weight_form not in WEIGHT_FORMS:
            raise ModelError(f"weight_form must be one of {WEIGHT_FORMS}")
        if not self.a.nonnegative:
            raise ModelError("the a-sequence must be declared nonnegative")
        if not self.r.nonnegative:
            raise ModelError("the r-sequence must be declared nonnegative")

    @property
    def is_exact(self) -> bool:
        return (self.a.is_exact and self.b.is_exact and self.r.is_exact
                and self.c.is_exact)

    def weight(self, n: int, j: int, tol: float = 1e-12) -> Number:
        return weight_discrete(self, n, j, tol)


def weight_discrete(p: DiscreteProblem, n: int, j: int, tol: float = 1e-12) -> Number:
    """Kernel value a_j + b_j/n + c_{n,j}; negative beyond `tol` is an error."""
    _check_kernel_index(n, j)
    denom = n if p.weight_form == "b_over_n" else n - j
    w = p.a.value(j) + Fraction(1, denom) * p.b.value(j) + p.c.value(n, j)
    if w < -tol:
        raise NegativeWeightError(f"w[{n},{j}] = {float(w):g} < 0")
    return w


# ---------------------------------------------------------------------------
# Continuous coefficient functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExpMixture:
    """f(s) = sum_i alpha_i * exp(-lambda_i s).

    Rates must be positive for genuine decay; a zero rate is representable so
    that non-decaying perturbations can be *stated* and then rejected by the
    validators.
    """

    terms: tuple  # ((alpha, lam), ...)

    def __post_init__(self):
        object.__setattr__(self, "terms",
                           tuple((float(a), float(l)) for a, l in self.terms))
        if any(l < 0 for _, l in self.terms):
            raise ModelError("mixture rates must be >= 0")

    def value(self, s) -> float:
        return math.fsum(a * math.exp(-l * s) for a, l in self.terms)

    def sample(self, ts: np.ndarray) -> np.ndarray:
        out = np.zeros_like(ts, dtype=float)
        with np.errstate(under="ignore"):
            for a, l in self.terms:
                out += a * np.exp(-l * ts)
        return out

    @property
    def min_rate(self) -> float:
        return min((l for _, l in self.terms), default=math.inf)

    @property
    def is_zero(self) -> bool:
        return all(a == 0 for a, _ in self.terms)

    @property
    def asserted(self) -> bool:
        return False

    def integral(self, moment: int = 0) -> float:
        """int_0^inf s^moment f(s) ds, closed form (moment 0 or 1)."""
        if any(l == 0 and a != 0 for a, l in self.terms):
            raise ModelError("mixture with a zero rate is not integrable")
        if moment == 0:
            return math.fsum(a / l for a, l in self.terms if a != 0)
        if moment == 1:
            return math.fsum(a / l ** 2 for a, l in self.terms if a != 0)
        raise ModelError(f"unsupported integral moment {moment}")

    def abs_integral(self, moment: int = 0) -> float:
        """Upper bound sum_i |alpha_i| / lambda_i^(moment+1)."""
        if any(l == 0 and a != 0 for a, l in self.terms):
            raise ModelError("mixture with a zero rate is not integrable")
        return math.fsum(abs(a) / l ** (moment + 1) for a, l in self.terms if a != 0)

    def laplace(self, s: float, k: int = 0):
        """(int_0^inf e^{-s x} x^k f(x) dx, 0.0): exact up to rounding."""
        val = 0.0
        for a, l in self.terms:
            if s + l <= 0:
                raise ModelError(f"transform diverges at s={s:g} (rate {l:g})")
            val += a * math.factorial(k) / (s + l) ** (k + 1)
        return val, 0.0

    def exp_weighted_abs(self, rate_shift: float) -> tuple:
        """Terms (|alpha_i|, lambda_i - shift) bounding |f(t)| e^{shift t};
        the shifted rates may be nonpositive, which the upper sums report as
        divergence."""
        return tuple((abs(a), l - rate_shift) for a, l in self.terms)


@dataclass(frozen=True)
class PiecewiseTable:
    """Samples on a uniform grid over [0, S0] plus an asserted envelope K e^{-lam s}."""

    step: float
    samples: tuple
    envelope_K: float
    envelope_lam: float

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(float(v) for v in self.samples))
        if self.step <= 0:
            raise ModelError("table step must be positive")
        if self.envelope_lam <= 0:
            raise ModelError("table envelope rate must be positive")
        if self.envelope_K < 0:
            raise ModelError("table envelope constant must be nonnegative")

    @property
    def S0(self) -> float:
        return self.step * (len(self.samples) - 1)

    def value(self, s) -> float:
        if s <= self.S0:
            return float(np.interp(s, self._xs(), self.samples))
        return self.envelope_K * math.exp(-self.envelope_lam * s)

    def _xs(self) -> np.ndarray:
        return self.step * np.arange(len(self.samples), dtype=float)

    def sample(self, ts: np.ndarray) -> np.ndarray:
        return np.array([self.value(t) for t in ts])

    @property
    def min_rate(self) -> float:
        return self.envelope_lam

    @property
    def is_zero(self) -> bool:
        return self.envelope_K == 0 and all(v == 0 for v in self.samples)

    @property
    def asserted(self) -> bool:
        return True

    def integral(self, moment: int = 0) -> float:
        xs = self._xs()
        ys = np.asarray(self.samples) * xs ** moment
        head = float(np.trapezoid(ys, xs))
        return head + self._envelope_tail(0.0, moment)

    def abs_integral(self, moment: int = 0) -> float:
        xs = self._xs()
        ys = np.abs(self.samples) * xs ** moment
        return float(np.trapezoid(ys, xs)) + self._envelope_tail(0.0, moment)

    def _envelope_tail(self, s: float, k: int) -> float:
        """int_{S0}^inf e^{-s x} x^k K e^{-lam x} dx in closed form."""
        lam = self.envelope_lam + s
        T = self.S0
        acc = 0.0
        for i in range(k + 1):
            acc += (math.factorial(k) / math.factorial(k - i)) * T ** (k - i) / lam ** (i + 1)
        return self.envelope_K * math.exp(-lam * T) * acc

    def laplace(self, s: float, k: int = 0):
        xs = self._xs()
        ys = np.asarray(self.samples) * xs ** k * np.exp(-s * xs)
        head = float(np.trapezoid(ys, xs))
        bound = self._envelope_tail(s, k)
        return head + bound / 2, bound / 2 + (self.step ** 2) * abs(head) / 12


DecayFunction = Union[ExpMixture, PiecewiseTable]


def zero_mixture() -> ExpMixture:
    return ExpMixture(terms=())


# ---------------------------------------------------------------------------
# Continuous perturbation kernels c_{t,s}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ZeroKernelC:
    def value(self, t: float, s: float) -> float:
        return 0.0

    @property
    def is_zero(self) -> bool:
        return True

    @property
    def asserted(self) -> bool:
        return False


@dataclass(frozen=True)
class SeparableKernelC:
    """c_{t,s} = phi(t) * psi(s)."""

    phi: DecayFunction
    psi: DecayFunction

    def value(self, t: float, s: float) -> float:
        return self.phi.value(t) * self.psi.value(s)

    @property
    def is_zero(self) -> bool:
        return self.phi.is_zero or self.psi.is_zero

    @property
    def asserted(self) -> bool:
        return self.phi.asserted or self.psi.asserted


ContinuousKernel = Union[ZeroKernelC, SeparableKernelC]


@dataclass(frozen=True)
class ContinuousProblem:
    """Kernel w_{t,s} = a(s) + b(s)/(t+d) + c_{t,s} and forcing r(t)."""

    a: DecayFunction
    b: DecayFunction = field(default_factory=zero_mixture)
    c: ContinuousKernel = field(default_factory=ZeroKernelC)
    r: DecayFunction = field(default_factory=zero_mixture)
    d: float = 1.0

    def __post_init__(self):
        if self.d <= 0:
            raise ModelError("offset d must be positive")

    def weight(self, t: float, s: float, tol: float = 1e-12) -> float:
        return weight_continuous(self, t, s, tol)


def weight_continuous(p: ContinuousProblem, t: float, s: float, tol: float = 1e-12) -> float:
    """Kernel value a(s) + b(s)/(t+d) + c_{t,s} for 0 <= s <= t."""
    if s < 0 or s > t:
        raise ModelError(f"kernel argument s={s:g} outside [0, t={t:g}]")
    w = p.a.value(s) + p.b.value(s) / (t + p.d) + p.c.value(t, s)
    if w < -tol:
        raise NegativeWeightError(f"w[t={t:g}, s={s:g}] = {w:g} < 0")
    return w


# ---------------------------------------------------------------------------
# Validation reports
# ---------------------------------------------------------------------------

PASS, FAIL, UNKNOWN = "pass", "fail", "unknown"


@dataclass(frozen=True)
class ConditionCheck:
    condition: str
    status: str
    witness: Optional[float] = None
    detail: str = ""


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple

    def __getitem__(self, condition: str) -> ConditionCheck:
        for c in self.checks:
            if c.condition == condition:
                return c
        raise KeyError(condition)

    @property
    def passed(self) -> bool:
        return all(c.status == PASS for c in self.checks)

    @property
    def failed_conditions(self) -> list:
        return [c.condition for c in self.checks if c.status == FAIL]

    def as_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [
                {"condition": c.condition, "status": c.status,
                 "witness": c.witness, "detail": c.detail}
                for c in self.checks
            ],
        }


def validate_discrete(p: DiscreteProblem, z_grid: Sequence[float]) -> ValidationReport:
    """Check the spectral conditions on a discrete problem.

    r1: gcd of the a-support is 1 (a geometric tail forces gcd 1).
    r2: the forcing has a positive term.
    r3: some z in `z_grid` gives sum a_n z^n in (1, inf) with the b, c and r
        series finite as well; the witness z is recorded.
    """
    z_grid = [float(z) for z in z_grid]
    if not z_grid:
        raise ModelError("z_grid must contain at least one candidate z > 1")
    if any(z <= 1 for z in z_grid):
        raise ModelError("candidates in z_grid must exceed 1")
    checks = []

    support = p.a.support_indices()
    if not support:
        checks.append(ConditionCheck("r1", FAIL, detail="a has empty support"))
    else:
        g = math.gcd(*support)
        checks.append(ConditionCheck(
            "r1", PASS if g == 1 else FAIL, witness=float(g),
            detail=f"gcd of a-support = {g}"))

    r_positive = any(v > 0 for v in p.r.prefix) or (
        p.r.tail is not None and p.r.tail.alpha > 0)
    checks.append(ConditionCheck(
        "r2", PASS if r_positive else FAIL,
        detail="r has a positive term" if r_positive else "r vanishes identically"))

    witness = None
    detail = ""
    for z in sorted(z_grid):
        try:
            sa = float(p.a.abs_series(z))
            p.b.abs_series(z)
            p.c.abs_double_series(z)
            p.r.abs_series(z)
        except ModelError:
            continue
        if sa > 1:
            witness = z
            detail = f"z = {z:g}: sum a_n z^n = {sa:g} > 1, all companion series finite"
            break
    if witness is None:
        detail = "no candidate z gave sum a_n z^n in (1, inf) with finite companions"
    status = PASS if witness is not None else FAIL
    if status == PASS and p.c.asserted:
        status = UNKNOWN
        detail += "; c-envelope is user-asserted, not certified"
    checks.append(ConditionCheck("r3", status, witness=witness, detail=detail))

    return ValidationReport(tuple(checks))


def upper_riemann_sum(terms: Iterable, tau: float, horizon: float) -> float:
    """Darboux upper sum tau * sum_n sup over [n tau, (n+1) tau] of
    sum_i |alpha_i| e^{-mu_i t}, given as (alpha_i, mu_i) pairs.

    Each term is monotone, so the cell supremum sits at an endpoint; cells
    beyond `horizon` are summed as exact geometric tails.  Returns inf when
    some rate mu <= 0 (the function is not directly Riemann integrable).
    """
    if tau <= 0:
        raise ModelError("span tau must be positive")
    total = 0.0
    n_h = max(1, int(math.ceil(horizon / tau)))
    for a, mu in terms:
        a = abs(a)
        if a == 0:
            continue
        if mu <= 0:
            return math.inf
        ns = np.arange(n_h, dtype=float)
        head = float(np.sum(a * np.exp(-mu * ns * tau)))  # sup at left endpoint
        ratio = math.exp(-mu * tau)
        tail = a * math.exp(-mu * n_h * tau) / (1 - ratio)
        total += tau * (head + tail)
    return total


def validate_continuous(p: ContinuousProblem, z: float, tau: float,
                        horizon: float, mass_tol: float = 1e-9) -> ValidationReport:
    """Check the integral-equation conditions at candidate z and span tau.

    i1: unit mass of a.  i2/i3: integrability and sign structure.  i4: the
    perturbation vanishes for large t.  i5: the exponentially tilted a and b
    integrals converge at z.  i6: the tilted perturbation column integral and
    the tilted forcing have finite upper Riemann sums with span tau.
    """
    if z <= 1:
        raise ModelError("candidate z must exceed 1")
    if horizon <= 0 or tau <= 0:
        raise ModelError("horizon and tau must be positive")
    lnz = math.log(z)
    checks = []

    # i1: a integrates to 1
    if p.a.asserted:
        checks.append(ConditionCheck("i1", UNKNOWN, detail="a-envelope user-asserted"))
    else:
        try:
            mass = p.a.integral()
            ok = abs(mass - 1.0) <= mass_tol
            checks.append(ConditionCheck(
                "i1", PASS if ok else FAIL, witness=mass,
                detail=f"int a = {mass:.12g}"))
        except ModelError as e:
            checks.append(ConditionCheck("i1", FAIL, detail=str(e)))

    # i2: b in L1, d > 0
    try:
        babs = p.b.abs_integral()
        checks.append(ConditionCheck("i2", PASS, witness=babs,
                                     detail=f"int |b| <= {babs:.6g}, d = {p.d:g}"))
    except ModelError as e:
        checks.append(ConditionCheck("i2", FAIL, detail=str(e)))

    # i3: r nonnegative and integrable (sign checked on samples up to horizon)
    ts = np.linspace(0.0, horizon, 2049)
    rvals = p.r.sample(ts)
    rmin = float(rvals.min())
    if rmin < -1e-12:
        checks.append(ConditionCheck("i3", FAIL, witness=rmin,
                                     detail=f"r({ts[int(np.argmin(rvals))]:g}) < 0"))
    else:
        status = UNKNOWN if p.r.asserted else PASS
        checks.append(ConditionCheck("i3", status,
                                     detail="r >= 0 on sampled grid, integrable"))

    # i4: c_{t,s} -> 0 as t -> inf
    if p.c.is_zero:
        checks.append(ConditionCheck("i4", PASS, detail="c = 0"))
    elif isinstance(p.c, SeparableKernelC):
        if p.c.asserted:
            checks.append(ConditionCheck("i4", UNKNOWN, detail="c-envelope user-asserted"))
        elif p.c.phi.min_rate > 0:
            checks.append(ConditionCheck("i4", PASS, witness=p.c.phi.min_rate,
                                         detail="t-factor decays exponentially"))
        else:
            checks.append(ConditionCheck("i4", FAIL,
                                         detail="t-factor of c does not decay"))
    else:
        checks.append(ConditionCheck("i4", UNKNOWN, detail="kernel form not analyzed"))

    # i5: tilted integrals of a and b finite at z
    rate_a = p.a.min_rate
    rate_b = p.b.min_rate if not p.b.is_zero else math.inf
    crit = min(rate_a, rate_b)
    if lnz < crit:
        checks.append(ConditionCheck("i5", PASS, witness=z,
                                     detail=f"ln z = {lnz:.6g} < min rate {crit:.6g}"))
    else:
        checks.append(ConditionCheck(
            "i5", FAIL, witness=crit,
            detail=f"ln z = {lnz:.6g} >= critical rate {crit:.6g}"))

    # i6: upper Riemann sums of z^t int_0^t |c| ds and of r(t) z^t
    detail_parts = []
    status = PASS
    if p.c.is_zero:
        c_sum = 0.0
        detail_parts.append("c = 0")
    elif isinstance(p.c, SeparableKernelC) and isinstance(p.c.phi, ExpMixture) \
            and not p.c.psi.asserted:
        psi_l1 = p.c.psi.abs_integral()
        c_sum = upper_riemann_sum(p.c.phi.exp_weighted_abs(lnz), tau, horizon) * psi_l1
        if not math.isfinite(c_sum):
            status = FAIL
        detail_parts.append(f"U_c(tau) = {c_sum:.6g}")
    else:
        c_sum = math.nan
        status = UNKNOWN
        detail_parts.append("c-part not certifiable")
    if isinstance(p.r, ExpMixture):
        r_sum = upper_riemann_sum(p.r.exp_weighted_abs(lnz), tau, horizon)
        if not math.isfinite(r_sum):
            status = FAIL
        detail_parts.append(f"U_r(tau) = {r_sum:.6g}")
    else:
        r_sum = math.nan
        if status == PASS:
            status = UNKNOWN
        detail_parts.append("r-part envelope user-asserted")
    witness = None
    if math.isfinite(c_sum) and math.isfinite(r_sum):
        witness = c_sum + r_sum
    checks.append(ConditionCheck("i6", status, witness=witness,
                                 detail="; ".join(detail_parts)))

    return ValidationReport(tuple(checks))
