"""Stable laws in the [alpha, c_plus, c_minus] tail-constant parametrization.

A law in the domain of attraction with tails ``P(f > t) ~ c_plus t^-alpha l(t)``
and ``P(f < -t) ~ c_minus t^-alpha l(t)`` is attracted to the variable ``S`` with

    E exp(itS) = exp(-c_alpha * (c_plus + c_minus) |t|^alpha
                     * (1 - i beta sgn(t) omega(alpha, t)))

where ``c_alpha = Gamma(1 - alpha) cos(alpha pi / 2)`` (``pi / 2`` for alpha = 1),
``beta = (c_plus - c_minus) / (c_plus + c_minus)`` and ``omega = tan(alpha pi / 2)``
(``-(2/pi) log|t|`` for alpha = 1).  In Samorodnitsky-Taqqu coordinates this is
``S_alpha(sigma, beta, 0)`` with ``sigma = (c_alpha (c_plus + c_minus))^(1/alpha)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .cadlag import CadlagPath

__all__ = [
    "StableParams",
    "TailModel",
    "NormalizingSeq",
    "ArcsineParams",
    "UnsupportedCaseError",
    "c_alpha",
    "char_fn",
    "sample_stable",
    "canonical_Bn",
    "canonical_An",
    "arcsine_cdf",
    "positivity_rho",
    "positivity_rho_exact",
    "reference_levy_path",
    "reference_levy_increments",
]


class UnsupportedCaseError(ValueError):
    """Raised for the asymmetric alpha = 1 case, whose centering is not implemented."""


def c_alpha(alpha: float) -> float:
    if alpha == 1.0:
        return math.pi / 2
    return math.gamma(1.0 - alpha) * math.cos(alpha * math.pi / 2)


@dataclass(frozen=True)
class StableParams:
    alpha: float
    c_plus: float
    c_minus: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.c_plus < 0 or self.c_minus < 0:
            raise ValueError("tail constants must be nonnegative")
        if self.c_plus + self.c_minus <= 0:
            raise ValueError("c_plus + c_minus must be positive")

    @property
    def beta_sum(self) -> float:
        return self.c_plus + self.c_minus

    @property
    def beta_diff(self) -> float:
        return self.c_plus - self.c_minus

    @property
    def beta(self) -> float:
        return self.beta_diff / self.beta_sum

    @property
    def c_alpha(self) -> float:
        return c_alpha(self.alpha)

    @property
    def scale(self) -> float:
        """Samorodnitsky-Taqqu scale ``sigma``."""
        return (self.c_alpha * self.beta_sum) ** (1.0 / self.alpha)

    @property
    def symmetric(self) -> bool:
        return self.c_plus == self.c_minus

    def omega(self, t):
        t = np.asarray(t, dtype=float)
        if self.alpha != 1.0:
            return np.full_like(t, math.tan(self.alpha * math.pi / 2))
        with np.errstate(divide="ignore"):
            return -(2.0 / math.pi) * np.log(np.abs(t))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "c_plus": self.c_plus, "c_minus": self.c_minus}


def _constant_one(t):
    return np.ones_like(np.asarray(t, dtype=float))


@dataclass(frozen=True)
class TailModel:
    """Tail ``P(f > t) ~ c_plus t^-alpha ell(t)`` and likewise for ``c_minus``.

    ``ell`` defaults to the constant 1, in which case the canonical scaling is
    ``B_n = n^(1/alpha)`` and the limit law carries the constants verbatim.
    """

    alpha: float
    c_plus: float = 1.0
    c_minus: float = 0.0
    ell: Callable = field(default=_constant_one, compare=False)
    ell_constant: float | None = 1.0
    threshold: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 2.0:
            raise ValueError(f"alpha must lie in (0, 2), got {self.alpha}")
        if self.c_plus < 0 or self.c_minus < 0 or self.c_plus + self.c_minus <= 0:
            raise ValueError("need c_plus, c_minus >= 0 with positive sum")

    @classmethod
    def pure_power(cls, alpha: float, c_plus: float = 1.0, c_minus: float = 0.0, ell: float = 1.0):
        const = float(ell)
        return cls(alpha, c_plus, c_minus, ell=lambda t: const * _constant_one(t), ell_constant=const)

    @classmethod
    def with_ell(cls, alpha: float, ell: Callable, c_plus: float = 1.0, c_minus: float = 0.0,
                 threshold: float = 0.0):
        return cls(alpha, c_plus, c_minus, ell=ell, ell_constant=None, threshold=threshold)

    @property
    def stable(self) -> StableParams:
        return StableParams(self.alpha, self.c_plus, self.c_minus)

    @property
    def symmetric(self) -> bool:
        return self.c_plus == self.c_minus

    def tail(self, t, side: str = "+"):
        t = np.asarray(t, dtype=float)
        c = self.c_plus if side == "+" else self.c_minus
        return c * t ** (-self.alpha) * self.ell(t)

    def abs_tail(self, t):
        t = np.asarray(t, dtype=float)
        return (self.c_plus + self.c_minus) * t ** (-self.alpha) * self.ell(t)


def canonical_Bn(model: TailModel, n: int, lo: float = 1e-12, hi: float = 1e300,
                 rtol: float = 1e-10) -> float:
    """Positive root of ``n ell(B) = B^alpha``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if model.ell_constant is not None:
        return (model.ell_constant * n) ** (1.0 / model.alpha)

    def g(logb):
        b = math.exp(logb)
        return model.alpha * logb - math.log(n) - math.log(float(model.ell(b)))

    a, b = math.log(lo), math.log(hi)
    ga, gb = g(a), g(b)
    if ga > 0 or gb < 0:
        raise ValueError("no root of n*ell(B) = B^alpha bracketed in [lo, hi]")
    # bisection in log B; |d log B| < rtol gives relative accuracy rtol
    while b - a > rtol:
        m = 0.5 * (a + b)
        if g(m) > 0:
            b = m
        else:
            a = m
    return math.exp(0.5 * (a + b))


def canonical_An(model: TailModel, mean: float | None, n: int) -> float:
    if model.alpha < 1.0:
        return 0.0
    if model.alpha > 1.0:
        if mean is None:
            raise ValueError("alpha > 1 needs the observable mean for centering")
        return n * float(mean)
    if model.symmetric:
        return 0.0
    raise UnsupportedCaseError("alpha = 1 centering is only available for symmetric laws")


@dataclass(frozen=True)
class NormalizingSeq:
    """Canonical ``(A_n, B_n)`` for a tail model."""

    model: TailModel
    mean: float | None = None

    def A(self, n: int) -> float:
        return canonical_An(self.model, self.mean, n)

    def B(self, n: int) -> float:
        return canonical_Bn(self.model, n)

    def strictly_stable(self) -> bool:
        """True when the limit Levy motion needs no drift correction ``a_t``."""
        try:
            self.A(1)
        except UnsupportedCaseError:
            return False
        return True


def char_fn(params: StableParams, t):
    """Characteristic function of the canonical limit law, vectorized over ``t``."""
    t = np.asarray(t, dtype=float)
    out = np.ones(t.shape, dtype=complex)
    nz = t != 0
    tt = t[nz]
    omega = params.omega(tt)
    expo = -params.c_alpha * params.beta_sum * np.abs(tt) ** params.alpha * (
        1 - 1j * params.beta * np.sign(tt) * omega
    )
    out[nz] = np.exp(expo)
    return out if out.ndim else complex(out)


def sample_stable(params: StableParams, rng: np.random.Generator, size=None):
    """Chambers-Mallows-Stuck draws of the canonical limit law."""
    alpha, beta, sigma = params.alpha, params.beta, params.scale
    if alpha == 1.0 and not params.symmetric:
        raise UnsupportedCaseError("asymmetric alpha = 1 sampling is not supported")
    v = rng.uniform(-math.pi / 2, math.pi / 2, size=size)
    w = rng.standard_exponential(size=size)
    if alpha == 1.0:
        return sigma * np.tan(v)
    zeta = beta * math.tan(math.pi * alpha / 2)
    b = math.atan(zeta) / alpha
    s = (1.0 + zeta * zeta) ** (1.0 / (2.0 * alpha))
    x = (
        s
        * np.sin(alpha * (v + b))
        / np.cos(v) ** (1.0 / alpha)
        * (np.cos(v - alpha * (v + b)) / w) ** ((1.0 - alpha) / alpha)
    )
    return sigma * x


def positivity_rho_exact(params: StableParams) -> float:
    """``P(S > 0)`` by Zolotarev's formula (strictly stable cases only)."""
    if params.alpha == 1.0:
        if not params.symmetric:
            raise UnsupportedCaseError("asymmetric alpha = 1")
        return 0.5
    return 0.5 + math.atan(params.beta * math.tan(math.pi * params.alpha / 2)) / (math.pi * params.alpha)


def positivity_rho(params: StableParams, N: int, rng: np.random.Generator) -> float:
    """``P(S > 0)``: exact for symmetric and one-sided laws, Monte Carlo otherwise."""
    if params.symmetric:
        return 0.5
    if params.alpha < 1.0 and params.c_minus == 0:
        return 1.0
    if params.alpha < 1.0 and params.c_plus == 0:
        return 0.0
    draws = sample_stable(params, rng, size=N)
    return float(np.mean(draws > 0))


@dataclass(frozen=True)
class ArcsineParams:
    rho: float

    def __post_init__(self):
        if not 0.0 < self.rho < 1.0:
            raise ValueError(f"rho must lie in (0, 1), got {self.rho}")


def _arcsine_scalar(rho: float, t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    const = math.sin(rho * math.pi) / math.pi
    if t <= 0.5:
        # s = v^(1/rho) removes the s^(rho-1) singularity at 0
        val, _ = integrate.quad(lambda v: (1.0 - v ** (1.0 / rho)) ** (-rho), 0.0, t ** rho,
                                epsabs=1e-13, epsrel=1e-12, limit=200)
        return const * val / rho
    # 1 - s = v^(1/(1-rho)) removes the (1-s)^(-rho) singularity at 1
    r = 1.0 - rho
    val, _ = integrate.quad(lambda v: (1.0 - v ** (1.0 / r)) ** (rho - 1.0), 0.0, (1.0 - t) ** r,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return 1.0 - const * val / r


def arcsine_cdf(params: ArcsineParams | float, t):
    rho = params.rho if isinstance(params, ArcsineParams) else ArcsineParams(float(params)).rho
    t = np.asarray(t, dtype=float)
    if np.any((t < 0) | (t > 1)):
        raise ValueError("t must lie in [0, 1]")
    if t.ndim == 0:
        return _arcsine_scalar(rho, float(t))
    # tabulate on the distinct values only; occupation fractions repeat a lot
    uniq, inv = np.unique(t, return_inverse=True)
    vals = np.array([_arcsine_scalar(rho, float(u)) for u in uniq])
    return vals[inv].reshape(t.shape)


def reference_levy_increments(params: StableParams, dt: np.ndarray, rng: np.random.Generator,
                              size: int | None = None) -> np.ndarray:
    """Independent increments ``dt^(1/alpha) S`` of the strictly stable motion."""
    if params.alpha == 1.0 and not params.symmetric:
        raise UnsupportedCaseError("the asymmetric alpha = 1 motion needs a drift term")
    dt = np.asarray(dt, dtype=float)
    shape = dt.shape if size is None else (size,) + dt.shape
    return dt ** (1.0 / params.alpha) * sample_stable(params, rng, size=shape)


def reference_levy_path(params: StableParams, grid, rng: np.random.Generator) -> CadlagPath:
    """Step path of the stable motion sampled on ``grid`` (which must start at 0)."""
    grid = np.asarray(grid, dtype=float)
    if grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must start at 0 and be strictly increasing")
    incs = reference_levy_increments(params, np.diff(grid), rng)
    values = np.concatenate([[0.0], np.cumsum(incs)])
    return CadlagPath(grid, values[:, None], horizon=float(grid[-1]))
