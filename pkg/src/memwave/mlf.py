"""Generalized Mittag-Leffler function E_{a,b}(-x) on the negative real axis.

Everything downstream (kernel evaluation, running integrals, limit
asymptotics) reduces to E_{a,b}(-x) for a in (0, 1], moderate b and x >= 0.
Three evaluation regimes are stitched together:

* power series for x <= 1 (terms decay fast, no cancellation),
* numerical inversion of the Laplace transform z^(a-b) / (z^a + x) on a
  parabolic contour for 1 < x < 1e5 (the transform pair of the kernel
  t^(b-1) E_{a,b}(-lambda t^a)),
* the algebraic large-argument expansion for x >= 1e5.

The contour parameters below were calibrated against a multi-thousand-digit
series oracle; worst observed absolute error over a in [0.3, 1],
b in (0, 4], x in [1, 1e5] is ~1e-13.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as _gamma
from scipy.special import rgamma as _rgamma

from .exceptions import ConvergenceError, DomainError, SingularityError

SERIES_MAX_ARG = 1.0
ASYMPTOTIC_MIN_ARG = 1.0e5          # regime switch used by ml_eval
ASYMPTOTIC_PUBLIC_MIN_ARG = 1.0e2   # validity floor for ml_asymptotic
ASYMPTOTIC_TERMS = 4

# Parabolic contour z(u) = MU * (1 + i*u)^2, trapezoid step H, |k| <= K.
_CONTOUR_MU = 10.0
_CONTOUR_H = 0.075
_CONTOUR_K = 36

_SERIES_MAX_TERMS = 400
_SERIES_MAX_TERMS_ANY = 2000


class Regime(str, enum.Enum):
    SERIES = "series"
    CONTOUR = "contour"
    ASYMPTOTIC = "asymptotic"


@dataclass(frozen=True)
class MLQuery:
    """Arguments for evaluating E_{a,b}(-x)."""

    a: float
    b: float
    x: float

    def __post_init__(self):
        if not 0.0 < self.a <= 1.0:
            raise DomainError(f"first order must lie in (0, 1], got a={self.a}")
        if self.x < 0.0:
            raise DomainError(f"argument must be nonnegative, got x={self.x}")
        if not math.isfinite(self.b):
            raise DomainError(f"second parameter must be finite, got b={self.b}")


@dataclass(frozen=True)
class MLResult:
    value: float
    regime: Regime
    est_abs_error: float


@dataclass(frozen=True)
class AbelKernelSpec:
    """Power kernel scale * t^(alpha-1) / Gamma(alpha)."""

    alpha: float
    scale: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.scale <= 0.0:
            raise DomainError(f"scale must be positive, got {self.scale}")


def _series_eval(a: float, b: float, x: float) -> tuple[float, float]:
    total = float(_rgamma(b))
    abs_sum = abs(total)
    if x == 0.0:
        return total, 1e-16 * max(abs_sum, 1.0)
    power = 1.0
    for k in range(1, _SERIES_MAX_TERMS):
        power *= -x
        term = power * float(_rgamma(a * k + b))
        total += term
        abs_sum += abs(term)
        if abs(term) <= 1e-17 * max(abs(total), 1e-30) and k > 3:
            est = abs(term) + 1e-16 * abs_sum
            return total, est
    raise ConvergenceError(
        f"series for E_({a},{b})(-{x}) did not converge in {_SERIES_MAX_TERMS} terms"
    )


def _contour_eval(a: float, b: float, x: float) -> tuple[float, float]:
    def quadrature(h: float, K: int) -> float:
        u = h * np.arange(-K, K + 1)
        w = 1.0 + 1j * u
        z = _CONTOUR_MU * w * w
        integrand = np.exp(z) * z ** (a - b) / (z**a + x) * w
        return float((h * _CONTOUR_MU / np.pi * integrand.sum()).real)

    value = quadrature(_CONTOUR_H, _CONTOUR_K)
    coarse = quadrature(1.6 * _CONTOUR_H, int(_CONTOUR_K / 1.6))
    est = abs(value - coarse) + 5e-16 * (1.0 + abs(value))
    return value, est


def _asymptotic_series(a: float, b: float, x: float, n_terms: int) -> tuple[float, float]:
    # E_{a,b}(-x) ~ sum_{k>=1} (-1)^(k+1) x^(-k) / Gamma(b - a k); pole terms drop.
    total = 0.0
    sign = 1.0
    for k in range(1, n_terms + 1):
        total += sign * float(_rgamma(b - a * k)) / x**k
        sign = -sign
    est = abs(float(_rgamma(b - a * (n_terms + 1)))) / x ** (n_terms + 1) + 1e-16 * abs(total)
    return total, est


def ml_eval(query: MLQuery) -> MLResult:
    """Evaluate E_{a,b}(-x), selecting the regime from the size of x."""
    a, b, x = query.a, query.b, query.x
    if x <= SERIES_MAX_ARG:
        value, est = _series_eval(a, b, x)
        regime = Regime.SERIES
    elif x < ASYMPTOTIC_MIN_ARG:
        value, est = _contour_eval(a, b, x)
        regime = Regime.CONTOUR
    else:
        value, est = _asymptotic_series(a, b, x, ASYMPTOTIC_TERMS + 2)
        regime = Regime.ASYMPTOTIC
    if est > 1e-8:
        raise ConvergenceError(
            f"no regime reached the error target for E_({a},{b})(-{x}); estimate {est:.2e}"
        )
    return MLResult(value=value, regime=regime, est_abs_error=est)


def ml_value(a: float, b: float, x: float) -> float:
    """Shorthand for ml_eval(MLQuery(a, b, x)).value."""
    return ml_eval(MLQuery(a, b, x)).value


def ml_eval_in_regime(query: MLQuery, regime: Regime) -> MLResult:
    """Force a specific regime (used for cross-checks at the switch points)."""
    a, b, x = query.a, query.b, query.x
    if regime is Regime.SERIES:
        value, est = _series_eval(a, b, x)
    elif regime is Regime.CONTOUR:
        if x == 0.0:
            raise DomainError("contour regime requires x > 0")
        value, est = _contour_eval(a, b, x)
    else:
        value, est = _asymptotic_series(a, b, x, ASYMPTOTIC_TERMS + 2)
    return MLResult(value=value, regime=regime, est_abs_error=est)


def ml_asymptotic(a: float, b: float, x: float, n_terms: int = ASYMPTOTIC_TERMS) -> float:
    """Large-argument expansion with leading term 1/(Gamma(b-a) x).

    Requires x >= ASYMPTOTIC_PUBLIC_MIN_ARG and b - a not a nonpositive
    integer (there the leading coefficient 1/Gamma(b-a) vanishes and the
    expansion starts at a higher order; ml_eval handles that internally).
    """
    if not 0.0 < a <= 1.0:
        raise DomainError(f"first order must lie in (0, 1], got a={a}")
    if x < ASYMPTOTIC_PUBLIC_MIN_ARG:
        raise DomainError(
            f"asymptotic expansion requires x >= {ASYMPTOTIC_PUBLIC_MIN_ARG}, got {x}"
        )
    lead = b - a
    if lead <= 0.0 and abs(lead - round(lead)) < 1e-12:
        raise DomainError(
            f"b - a = {lead} is a nonpositive integer; leading Gamma factor is singular"
        )
    if n_terms < 1:
        raise DomainError("n_terms must be at least 1")
    value, _ = _asymptotic_series(a, b, x, n_terms)
    return value


def ml_antiderivative(a: float, b: float, lambda_scale: float, t: float) -> float:
    """Running integral of s^(b-1) E_{a,b}(-(lambda s)^a) from 0 to t.

    Equals t^b * E_{a,b+1}(-(lambda t)^a); its t-derivative recovers the
    integrand exactly, which is the identity the kernel catalog relies on.
    """
    if not 0.0 < a <= 1.0:
        raise DomainError(f"first order must lie in (0, 1], got a={a}")
    if b <= 0.0:
        raise DomainError(f"second parameter must be positive, got b={b}")
    if lambda_scale <= 0.0:
        raise DomainError(f"lambda_scale must be positive, got {lambda_scale}")
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got t={t}")
    if t == 0.0:
        return 0.0
    return t**b * ml_value(a, b + 1.0, (t * lambda_scale) ** a)


def abel_eval(spec: AbelKernelSpec, t: float) -> float:
    """Point value scale * t^(alpha-1) / Gamma(alpha); singular at 0 for alpha < 1."""
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got t={t}")
    if t == 0.0:
        if spec.alpha < 1.0:
            raise SingularityError(
                "power kernel with alpha < 1 is unbounded at t=0; integrate moments instead"
            )
        return spec.scale
    return spec.scale * t ** (spec.alpha - 1.0) / float(_gamma(spec.alpha))


def abel_antiderivative(spec: AbelKernelSpec, t: float) -> float:
    """Exact running integral scale * t^alpha / Gamma(alpha + 1)."""
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got t={t}")
    return spec.scale * t**spec.alpha / float(_gamma(spec.alpha + 1.0))


def ml_series_any_order(a: float, b: float, x: float) -> float:
    """Defining series of E_{a,b}(-x) for arbitrary a > 0, small-to-moderate x.

    Used for auxiliary closed forms with a = 2 (trigonometric convolutions in
    manufactured forcings); cancellation grows like e^(x^(1/a)), so callers
    keep x^(1/a) modest.
    """
    if a <= 0.0:
        raise DomainError(f"first order must be positive, got a={a}")
    if x < 0.0:
        raise DomainError(f"argument must be nonnegative, got x={x}")
    total = float(_rgamma(b))
    power = 1.0
    for k in range(1, _SERIES_MAX_TERMS_ANY):
        power *= -x
        term = power * float(_rgamma(a * k + b))
        total += term
        if abs(term) <= 1e-17 * max(abs(total), 1e-30) and k > 3:
            return total
    raise ConvergenceError(f"series for E_({a},{b})(-{x}) did not converge")
