"""Catalog of memory kernels for the nonlocal Westervelt equation.

Every family is represented as an immutable KernelSpec with closed forms for
point values, running integrals (kernel * 1 and its further antiderivatives),
total-variation / L1 norms, the small-parameter limit kernel, and the
predicted energy-norm convergence exponent of the vanishing-parameter limit.

Families and their conventions (eps is the small parameter, tau is the
dimensional scaling time):

* Zero              K = 0
* Dirac             K = mass * delta_0            (strong damping; mass in eps)
* Abel              K = eps * tau^(-alpha) * t^(alpha-1) / Gamma(alpha)
* Exponential       K = (1/eps) * exp(-t/eps)
* MittagLeffler     K = P * eps^(-b) * t^(b-1) * E_{a,b}(-(t/eps)^a),
                    P = (tau/eps)^(a-b), or rho^(a-b) in fixed-ratio mode
* LimitAbel         K = tau^(-beta) * t^(beta-1) / Gamma(beta)
                    (the a < b limit kernel; beta = b - a stored in alpha)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import quad
from scipy.special import gamma as _gamma

from .exceptions import (
    DomainError,
    QuadratureError,
    SingularityError,
    UnsupportedOperationError,
)
from .mlf import ml_value

EPS_MAX = 1.0


class KernelFamily(str, enum.Enum):
    ZERO = "zero"
    DIRAC = "dirac"
    ABEL = "abel"
    EXPONENTIAL = "exponential"
    MITTAG_LEFFLER = "mittag-leffler"
    LIMIT_ABEL = "limit-abel"


class GfeFamily(str, enum.Enum):
    GFE = "gfe"
    GFE_I = "gfe-i"
    GFE_II = "gfe-ii"
    GFE_III = "gfe-iii"


@dataclass(frozen=True)
class GfeLaw:
    """A fractional heat-flux law selecting a Mittag-Leffler parameter pair."""

    family: GfeFamily
    alpha: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.family is GfeFamily.GFE_I and self.alpha <= 0.5:
            raise DomainError(
                f"the first flux law needs alpha > 1/2 so that 2*alpha - 1 > 0; got {self.alpha}"
            )

    def ml_orders(self) -> tuple[float, float]:
        if self.family is GfeFamily.GFE_I:
            return self.alpha, 2.0 * self.alpha - 1.0
        if self.family is GfeFamily.GFE_II:
            return self.alpha, 1.0
        if self.family is GfeFamily.GFE_III:
            return 1.0, self.alpha
        return self.alpha, self.alpha


@dataclass(frozen=True)
class KernelSpec:
    family: KernelFamily
    a: float | None = None
    b: float | None = None
    alpha: float | None = None
    eps: float | None = None
    tau_theta: float | None = None
    rho: float | None = None
    fixed_ratio: bool = False

    def __post_init__(self):
        f = self.family
        set_fields = {
            name
            for name in ("a", "b", "alpha", "eps", "tau_theta", "rho")
            if getattr(self, name) is not None
        }
        expected = {
            KernelFamily.ZERO: set(),
            KernelFamily.DIRAC: {"eps"},
            KernelFamily.ABEL: {"alpha", "eps", "tau_theta"},
            KernelFamily.EXPONENTIAL: {"eps"},
            KernelFamily.MITTAG_LEFFLER: {"a", "b", "eps", "rho"}
            if self.fixed_ratio
            else {"a", "b", "eps", "tau_theta"},
            KernelFamily.LIMIT_ABEL: {"alpha", "tau_theta"},
        }[f]
        if set_fields != expected:
            raise DomainError(
                f"{f.value} kernel takes exactly the parameters {sorted(expected)}, "
                f"got {sorted(set_fields)}"
            )
        if self.fixed_ratio and f is not KernelFamily.MITTAG_LEFFLER:
            raise DomainError("fixed_ratio only applies to the Mittag-Leffler family")
        if self.eps is not None and not 0.0 < self.eps <= EPS_MAX:
            raise DomainError(f"eps must lie in (0, {EPS_MAX}], got {self.eps}")
        if self.tau_theta is not None and self.tau_theta <= 0.0:
            raise DomainError(f"tau_theta must be positive, got {self.tau_theta}")
        if self.rho is not None and self.rho <= 0.0:
            raise DomainError(f"rho must be positive, got {self.rho}")
        if self.alpha is not None:
            hi_open = f is KernelFamily.LIMIT_ABEL
            if not (0.0 < self.alpha < 1.0 or (self.alpha == 1.0 and not hi_open)):
                raise DomainError(f"alpha out of range for {f.value}: {self.alpha}")
        if f is KernelFamily.MITTAG_LEFFLER:
            if not 0.0 < self.a <= 1.0 or not 0.0 < self.b <= 1.0:
                raise DomainError(f"Mittag-Leffler orders must lie in (0, 1], got ({self.a}, {self.b})")

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "KernelSpec":
        return cls(KernelFamily.ZERO)

    @classmethod
    def dirac(cls, eps: float) -> "KernelSpec":
        return cls(KernelFamily.DIRAC, eps=eps)

    @classmethod
    def abel(cls, alpha: float, eps: float, tau_theta: float = 1.0) -> "KernelSpec":
        return cls(KernelFamily.ABEL, alpha=alpha, eps=eps, tau_theta=tau_theta)

    @classmethod
    def exponential(cls, eps: float) -> "KernelSpec":
        return cls(KernelFamily.EXPONENTIAL, eps=eps)

    @classmethod
    def mittag_leffler(
        cls,
        a: float,
        b: float,
        eps: float,
        tau_theta: float | None = 1.0,
        rho: float | None = None,
        fixed_ratio: bool = False,
    ) -> "KernelSpec":
        if fixed_ratio:
            if rho is None:
                raise DomainError("fixed-ratio mode requires rho")
            return cls(KernelFamily.MITTAG_LEFFLER, a=a, b=b, eps=eps, rho=rho, fixed_ratio=True)
        return cls(KernelFamily.MITTAG_LEFFLER, a=a, b=b, eps=eps, tau_theta=tau_theta)

    @classmethod
    def limit_abel(cls, exponent: float, tau_theta: float = 1.0) -> "KernelSpec":
        return cls(KernelFamily.LIMIT_ABEL, alpha=exponent, tau_theta=tau_theta)

    # -- helpers -------------------------------------------------------------

    def with_eps(self, eps: float) -> "KernelSpec":
        if self.eps is None:
            raise UnsupportedOperationError(
                f"{self.family.value} kernel has no small parameter to replace"
            )
        return replace(self, eps=eps)

    @property
    def scale_ratio(self) -> float:
        """The ratio entering the Mittag-Leffler prefactor: rho or tau/eps."""
        if self.family is not KernelFamily.MITTAG_LEFFLER:
            raise UnsupportedOperationError("scale_ratio is a Mittag-Leffler notion")
        return self.rho if self.fixed_ratio else self.tau_theta / self.eps

    @property
    def prefactor(self) -> float:
        return self.scale_ratio ** (self.a - self.b)

    def label(self) -> str:
        f = self.family
        if f is KernelFamily.ZERO:
            return "zero"
        if f is KernelFamily.DIRAC:
            return f"dirac_{self.eps:g}"
        if f is KernelFamily.ABEL:
            return f"abel_{self.alpha:g}"
        if f is KernelFamily.EXPONENTIAL:
            return "exponential"
        if f is KernelFamily.LIMIT_ABEL:
            return f"limitabel_{self.alpha:g}"
        mode = "fr" if self.fixed_ratio else "tf"
        return f"ml_{self.a:g}_{self.b:g}_{mode}"


@dataclass(frozen=True)
class KernelNorms:
    l1_or_tv: float
    conv1_l1: float
    T: float


def from_gfe(
    law: GfeLaw,
    eps: float,
    tau_theta: float,
    fixed_ratio: bool | None = None,
) -> KernelSpec:
    """Kernel spec from a Compte-Metzler flux law.

    Orders: first law (alpha, 2*alpha - 1), second (alpha, 1),
    third (1, alpha), plain law (alpha, alpha).  Laws with a > b default to
    fixed-ratio mode (rho = tau_theta/eps), which the vanishing-parameter
    analysis needs; pass fixed_ratio=False to study the divergent family.
    """
    a, b = law.ml_orders()
    if fixed_ratio is None:
        fixed_ratio = a > b
    if fixed_ratio:
        return KernelSpec.mittag_leffler(a, b, eps, rho=tau_theta / eps, fixed_ratio=True)
    return KernelSpec.mittag_leffler(a, b, eps, tau_theta=tau_theta)


def eval_kernel(spec: KernelSpec, t: float) -> float:
    """Point value of the kernel; Dirac masses have no point values."""
    f = spec.family
    if f is KernelFamily.DIRAC:
        raise UnsupportedOperationError("a Dirac mass has no point values; use conv_one")
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got t={t}")
    if f is KernelFamily.ZERO:
        return 0.0
    if f is KernelFamily.EXPONENTIAL:
        return math.exp(-t / spec.eps) / spec.eps
    if f is KernelFamily.ABEL:
        scale = spec.eps * spec.tau_theta ** (-spec.alpha)
        if t == 0.0:
            if spec.alpha < 1.0:
                raise SingularityError("Abel kernel with alpha < 1 is unbounded at t=0")
            return scale
        return scale * t ** (spec.alpha - 1.0) / float(_gamma(spec.alpha))
    if f is KernelFamily.LIMIT_ABEL:
        if t == 0.0:
            raise SingularityError("limit kernel is unbounded at t=0")
        beta = spec.alpha
        return spec.tau_theta ** (-beta) * t ** (beta - 1.0) / float(_gamma(beta))
    # Mittag-Leffler
    if t == 0.0:
        if spec.b < 1.0:
            raise SingularityError("Mittag-Leffler kernel with b < 1 is unbounded at t=0")
        return spec.prefactor / spec.eps
    u = t / spec.eps
    return spec.prefactor * spec.eps ** (-spec.b) * t ** (spec.b - 1.0) * ml_value(
        spec.a, spec.b, u**spec.a
    )


def conv_one_iterated(spec: KernelSpec, t: float, order: int = 1) -> float:
    """Exact repeated running integral (kernel * 1 * ... * 1), `order` ones.

    order=1 is the running integral of the kernel itself; orders 2 and 3 are
    the further antiderivatives the product-integration time stepper needs.
    All families admit closed forms (Mittag-Leffler via the antiderivative
    identity that shifts the second order up by one).
    """
    if order not in (1, 2, 3):
        raise DomainError(f"order must be 1, 2 or 3, got {order}")
    if t < 0.0:
        raise DomainError(f"time must be nonnegative, got t={t}")
    if t == 0.0:
        return 0.0
    f = spec.family
    if f is KernelFamily.ZERO:
        return 0.0
    if f is KernelFamily.DIRAC:
        return spec.eps * t ** (order - 1) / math.factorial(order - 1)
    if f is KernelFamily.EXPONENTIAL:
        e = spec.eps
        decay = -math.expm1(-t / e)  # 1 - exp(-t/e)
        if order == 1:
            return decay
        if order == 2:
            return t - e * decay
        return 0.5 * t * t - e * t + e * e * decay
    if f is KernelFamily.ABEL:
        scale = spec.eps * spec.tau_theta ** (-spec.alpha)
        p = spec.alpha + order
        return scale * t ** (p - 1.0) / float(_gamma(p))
    if f is KernelFamily.LIMIT_ABEL:
        p = spec.alpha + order
        return spec.tau_theta ** (-spec.alpha) * t ** (p - 1.0) / float(_gamma(p))
    u = t / spec.eps
    return (
        spec.prefactor
        * spec.eps ** (order - 1)
        * u ** (spec.b + order - 1.0)
        * ml_value(spec.a, spec.b + order, u**spec.a)
    )


def conv_one(spec: KernelSpec, t: float) -> float:
    """Exact running integral of the kernel over (0, t]."""
    return conv_one_iterated(spec, t, order=1)


def _ml_signed_l1(spec: KernelSpec, T: float) -> float:
    """L1 norm of a sign-changing Mittag-Leffler kernel (b < a) on (0, T).

    Works in the rescaled variable u = t/eps where the norm equals
    prefactor * int_0^{T/eps} |u^(b-1) E_{a,b}(-u^a)| du; the weak
    singularity at zero is removed by the substitution u = s^(1/b).
    """
    a, b = spec.a, spec.b
    U = T / spec.eps

    def g(u: float) -> float:
        return abs(u ** (b - 1.0) * ml_value(a, b, u**a))

    total = 0.0
    cut = min(1.0, U)
    # int_0^cut |u^(b-1) E(-u^a)| du = (1/b) int_0^(cut^b) |E(-s^(a/b))| ds
    inner, inner_err = quad(
        lambda s: abs(ml_value(a, b, s ** (a / b))), 0.0, cut**b,
        epsabs=1e-12, epsrel=1e-11, limit=200,
    )
    total += inner / b
    err = inner_err / b
    if U > 1.0:
        edges = np.geomspace(1.0, U, max(2, int(math.log10(U) * 4) + 2))
        for lo, hi in zip(edges[:-1], edges[1:]):
            part, part_err = quad(g, lo, hi, epsabs=1e-12, epsrel=1e-11, limit=200)
            total += part
            err += part_err
    if err > 1e-8 * max(total, 1.0):
        raise QuadratureError(
            f"L1 quadrature error estimate {err:.2e} too large for {spec.label()}"
        )
    return spec.prefactor * total


def norms(spec: KernelSpec, T: float) -> KernelNorms:
    """Total-variation / L1 norm on (0, T) and the L1 norm of the running integral."""
    if T <= 0.0:
        raise DomainError(f"final time must be positive, got T={T}")
    f = spec.family
    if f is KernelFamily.ZERO:
        return KernelNorms(0.0, 0.0, T)
    if f is KernelFamily.DIRAC:
        return KernelNorms(spec.eps, spec.eps * T, T)

    if f is KernelFamily.MITTAG_LEFFLER and spec.b < spec.a:
        tv = _ml_signed_l1(spec, T)
    else:
        # nonnegative kernel: the L1 norm is the running integral at T
        tv = conv_one(spec, T)

    # kernel * 1 is nonnegative for every family in the catalog, but the
    # contract is quadrature of the absolute value of the closed form
    feature = spec.eps if spec.eps is not None else T
    pts = sorted({min(feature, T), min(10 * feature, T)})
    conv_l1, quad_err = quad(
        lambda s: abs(conv_one(spec, s)), 0.0, T,
        points=pts, epsabs=1e-12, epsrel=1e-10, limit=300,
    )
    if quad_err > 1e-6 * max(conv_l1, 1.0):
        raise QuadratureError(
            f"conv1 quadrature error estimate {quad_err:.2e} too large for {spec.label()}"
        )
    return KernelNorms(tv, conv_l1, T)


def limit_kernel(spec: KernelSpec) -> KernelSpec:
    """Kernel of the limiting equation as the small parameter vanishes."""
    f = spec.family
    if f in (KernelFamily.ZERO, KernelFamily.LIMIT_ABEL):
        return spec
    if f in (KernelFamily.DIRAC, KernelFamily.ABEL, KernelFamily.EXPONENTIAL):
        return KernelSpec.zero()
    if spec.a < spec.b:
        return KernelSpec.limit_abel(spec.b - spec.a, spec.tau_theta)
    if spec.a == spec.b:
        # limit of the rescaled family is a unit point mass: strongly damped limit
        return KernelSpec.dirac(1.0)
    if spec.fixed_ratio:
        return KernelSpec.zero()
    raise DomainError(
        "Mittag-Leffler kernels with a > b have no vanishing-parameter limit "
        "unless the ratio tau_theta/eps is held fixed"
    )


def predicted_rate(spec: KernelSpec) -> float:
    """Predicted energy-norm convergence exponent of the vanishing-parameter limit."""
    f = spec.family
    if f in (KernelFamily.DIRAC, KernelFamily.ABEL, KernelFamily.EXPONENTIAL):
        return 1.0
    if f is KernelFamily.MITTAG_LEFFLER:
        if spec.a <= spec.b:
            return spec.a / 2.0
        if spec.fixed_ratio:
            return (spec.a - spec.b) / 2.0
        raise DomainError("a > b without fixed ratio has no limit, hence no rate")
    raise DomainError(f"{f.value} kernel does not depend on the small parameter")


@dataclass(frozen=True)
class DiffConvOne:
    t_grid: np.ndarray
    values: np.ndarray
    l1: float


def diff_conv_one(spec: KernelSpec, T: float, n_grid: int = 1000) -> DiffConvOne:
    """((K_eps - K_limit) * 1) on a uniform grid, plus its L1(0, T) norm.

    For Mittag-Leffler kernels with a <= b the difference has the closed form
    -tau^(a-b) t^(b-a) E_{a,1+b-a}(-(t/eps)^a) and L1 norm
    tau^(a-b) T^(1+b-a) E_{a,2+b-a}(-(T/eps)^a).  For families whose limit is
    the zero kernel it reduces to the running integral of the kernel itself.
    """
    if T <= 0.0:
        raise DomainError(f"final time must be positive, got T={T}")
    t_grid = np.linspace(0.0, T, n_grid)
    f = spec.family
    if f is KernelFamily.MITTAG_LEFFLER and spec.a <= spec.b:
        if spec.fixed_ratio:
            raise UnsupportedOperationError(
                "fixed-ratio mode is meaningful only for a > b; the a <= b "
                "difference formula assumes tau_theta fixed"
            )
        a, b, eps, tau = spec.a, spec.b, spec.eps, spec.tau_theta
        pref = tau ** (a - b)
        vals = np.empty_like(t_grid)
        vals[0] = -pref if a == b else 0.0
        for i, t in enumerate(t_grid[1:], start=1):
            vals[i] = -pref * t ** (b - a) * ml_value(a, 1.0 + b - a, (t / eps) ** a)
        l1 = pref * T ** (1.0 + b - a) * ml_value(a, 2.0 + b - a, (T / eps) ** a)
        return DiffConvOne(t_grid, vals, l1)
    if limit_kernel(spec).family is KernelFamily.ZERO:
        vals = np.array([conv_one(spec, t) for t in t_grid])
        return DiffConvOne(t_grid, vals, conv_one_iterated(spec, T, order=2))
    raise UnsupportedOperationError(
        f"difference convolution not defined for {spec.label()}"
    )
