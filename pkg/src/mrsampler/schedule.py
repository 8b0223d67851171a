"""Time-dependent coefficients of the mean-reverting SDE.

The forward process is ``dx = f(t) (mu - x) dt + g(t) dw`` with the
stationarity constraint ``g(t)**2 = 2 sigma_inf**2 f(t)``.  Everything a
sampler needs is derived from the cumulative reversion
``I(t) = int_0^t f``:

    alpha(t)  = exp(-I(t))
    sigma(t)  = sigma_inf * sqrt(1 - alpha(t)**2)
    lambda(t) = log(alpha(t) / sigma(t))          (half log-SNR)

All functions accept scalars or numpy arrays of times.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

__all__ = [
    "DomainError",
    "ScheduleFamily",
    "SpacingMode",
    "Schedule",
    "TimeGrid",
    "alpha_of_t",
    "sigma_of_t",
    "lambda_of_t",
    "t_of_lambda",
    "g_squared_of_t",
    "theta_of_t",
    "make_grid",
]

DEFAULT_T_END_FRACTION = 1e-3


class DomainError(ValueError):
    """A time or log-SNR argument lies outside the schedule's support."""


class ScheduleFamily(str, enum.Enum):
    CONSTANT = "constant"
    LINEAR = "linear"
    COSINE = "cosine"


class SpacingMode(str, enum.Enum):
    UNIFORM_T = "uniform_t"
    UNIFORM_LAMBDA = "uniform_lambda"


@dataclass(frozen=True)
class Schedule:
    """Mean-reversion speed ``f(t)`` together with its closed-form integral.

    Build instances with :meth:`constant`, :meth:`linear` or :meth:`cosine`.

    * constant: ``f(t) = theta``
    * linear:   ``f(t) = theta_start + (theta_end - theta_start) t / T``
    * cosine:   ``f(t) = theta_min + (theta_max - theta_min) (1 - cos(pi t / T)) / 2``

    Every family keeps ``f > 0`` on ``[0, T]`` so that alpha is strictly
    decreasing and lambda is invertible.
    """

    family: ScheduleFamily
    params: tuple[float, ...]
    sigma_inf: float = 1.0
    t_max: float = 1.0
    _coef: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.sigma_inf > 0 and math.isfinite(self.sigma_inf)):
            raise ValueError(f"sigma_inf must be positive, got {self.sigma_inf}")
        if not (self.t_max > 0 and math.isfinite(self.t_max)):
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        family = ScheduleFamily(self.family)
        object.__setattr__(self, "family", family)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        expected = {ScheduleFamily.CONSTANT: 1, ScheduleFamily.LINEAR: 2, ScheduleFamily.COSINE: 2}
        if len(params) != expected[family]:
            raise ValueError(f"{family.value} schedule takes {expected[family]} parameters, got {len(params)}")
        if any(not (p > 0 and math.isfinite(p)) for p in params):
            raise ValueError(f"schedule parameters must be positive, got {params}")
        object.__setattr__(self, "_coef", params)

    @classmethod
    def constant(cls, theta: float = 1.0, sigma_inf: float = 1.0, t_max: float = 1.0) -> "Schedule":
        return cls(ScheduleFamily.CONSTANT, (theta,), sigma_inf, t_max)

    @classmethod
    def linear(cls, theta_start: float, theta_end: float, sigma_inf: float = 1.0, t_max: float = 1.0) -> "Schedule":
        return cls(ScheduleFamily.LINEAR, (theta_start, theta_end), sigma_inf, t_max)

    @classmethod
    def cosine(cls, theta_min: float, theta_max: float, sigma_inf: float = 1.0, t_max: float = 1.0) -> "Schedule":
        return cls(ScheduleFamily.COSINE, (theta_min, theta_max), sigma_inf, t_max)

    def theta(self, t):
        """Mean-reversion speed f(t)."""
        t = np.asarray(t, dtype=float)
        if self.family is ScheduleFamily.CONSTANT:
            return np.full_like(t, self.params[0])[()]
        a, b = self.params
        if self.family is ScheduleFamily.LINEAR:
            return (a + (b - a) * t / self.t_max)[()]
        return (a + 0.5 * (b - a) * (1.0 - np.cos(np.pi * t / self.t_max)))[()]

    def theta_integral(self, t):
        """Closed-form ``int_0^t f(tau) dtau``."""
        t = np.asarray(t, dtype=float)
        if self.family is ScheduleFamily.CONSTANT:
            return (self.params[0] * t)[()]
        a, b = self.params
        T = self.t_max
        if self.family is ScheduleFamily.LINEAR:
            return (a * t + 0.5 * (b - a) * t * t / T)[()]
        return (a * t + 0.5 * (b - a) * (t - T / np.pi * np.sin(np.pi * t / T)))[()]

    def to_dict(self) -> dict:
        return {
            "family": self.family.value,
            "params": list(self.params),
            "sigma_inf": self.sigma_inf,
            "t_max": self.t_max,
        }


def _check_t(s: Schedule, t, *, open_left: bool = False):
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t > s.t_max) or np.any(t < 0):
        raise DomainError(f"time outside [0, {s.t_max}]: {t}")
    if open_left and np.any(t == 0):
        raise DomainError("log-SNR is singular at t = 0")
    return t


def _one_minus_alpha_sq(s: Schedule, t):
    # 1 - exp(-2 I) without cancellation for small t
    return -np.expm1(-2.0 * s.theta_integral(t))


def theta_of_t(s: Schedule, t):
    return s.theta(_check_t(s, t))


def alpha_of_t(s: Schedule, t):
    """Signal retention ``exp(-int_0^t f)``; equals 1 at t = 0."""
    t = _check_t(s, t)
    return np.exp(-s.theta_integral(t))[()]


def sigma_of_t(s: Schedule, t):
    """Transition standard deviation ``sigma_inf sqrt(1 - alpha^2)``."""
    t = _check_t(s, t)
    return (s.sigma_inf * np.sqrt(_one_minus_alpha_sq(s, t)))[()]


def lambda_of_t(s: Schedule, t):
    """Half log-SNR ``log(alpha / sigma)``, strictly decreasing on (0, T]."""
    t = _check_t(s, t, open_left=True)
    integral = s.theta_integral(t)
    return (-integral - math.log(s.sigma_inf) - 0.5 * np.log(-np.expm1(-2.0 * integral)))[()]


def g_squared_of_t(s: Schedule, t):
    """Squared diffusion coefficient, fixed by ``g^2 = 2 sigma_inf^2 f``."""
    t = _check_t(s, t)
    return (2.0 * s.sigma_inf**2 * s.theta(t))[()]


def _integral_from_lambda(s: Schedule, lam):
    # lambda = -I - log(sigma_inf) - log(1 - e^{-2I}) / 2  solved for I:
    # I = log1p(exp(-2 lambda) / sigma_inf^2) / 2
    return 0.5 * np.logaddexp(0.0, -2.0 * lam - 2.0 * math.log(s.sigma_inf))


def t_of_lambda(s: Schedule, lam):
    """Inverse of :func:`lambda_of_t`.

    The constant family is inverted in closed form.  Other families recover
    the cumulative reversion ``I`` in closed form and then solve
    ``I(t) = I*`` with a bracketing root finder, which is safe because
    ``I`` is strictly increasing.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lam)):
        raise DomainError(f"log-SNR must be finite, got {lam}")
    lam_min = lambda_of_t(s, s.t_max)
    slack = 1e-12 * max(1.0, abs(lam_min))
    if np.any(lam < lam_min - slack):
        raise DomainError(f"log-SNR below lambda(T) = {lam_min}: {lam}")
    target = _integral_from_lambda(s, lam)
    if np.any(target <= 0):
        raise DomainError(f"log-SNR too large to represent a positive time: {lam}")
    i_max = float(s.theta_integral(s.t_max))
    target = np.minimum(target, i_max)

    if s.family is ScheduleFamily.CONSTANT:
        return (target / s.params[0])[()]

    def solve(i_star: float) -> float:
        if i_star >= i_max:
            return s.t_max
        return brentq(lambda t: float(s.theta_integral(t)) - i_star, 0.0, s.t_max, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)

    flat = np.array([solve(float(v)) for v in np.ravel(target)])
    return flat.reshape(target.shape)[()]


@dataclass(frozen=True)
class TimeGrid:
    """Strictly decreasing sampling times ``T = t_0 > ... > t_M = t_end``."""

    times: np.ndarray
    spacing: SpacingMode
    t_end: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        if times.ndim != 1 or times.size < 2:
            raise ValueError("a time grid needs at least two points")
        if np.any(np.diff(times) >= 0):
            raise ValueError("time grid must be strictly decreasing")
        times.setflags(write=False)
        object.__setattr__(self, "times", times)

    @property
    def nfe(self) -> int:
        return self.times.size - 1

    def lambdas(self, s: Schedule) -> np.ndarray:
        return np.asarray(lambda_of_t(s, self.times))

    def steps(self, s: Schedule) -> np.ndarray:
        """Log-SNR increments ``h_i = lambda(t_i) - lambda(t_{i-1})`` (positive)."""
        return np.diff(self.lambdas(s))


def make_grid(s: Schedule, nfe: int, spacing: SpacingMode | str = SpacingMode.UNIFORM_LAMBDA, t_end: float | None = None) -> TimeGrid:
    """Build an ``nfe``-step grid from ``T`` down to ``t_end`` (default ``1e-3 T``)."""
    spacing = SpacingMode(spacing)
    if t_end is None:
        t_end = DEFAULT_T_END_FRACTION * s.t_max
    if int(nfe) != nfe or nfe < 1:
        raise ValueError(f"nfe must be a positive integer, got {nfe}")
    nfe = int(nfe)
    if not (0 < t_end < s.t_max):
        raise ValueError(f"t_end must lie in (0, {s.t_max}), got {t_end}")
    if spacing is SpacingMode.UNIFORM_T:
        times = np.linspace(s.t_max, t_end, nfe + 1)
    else:
        lams = np.linspace(lambda_of_t(s, s.t_max), lambda_of_t(s, t_end), nfe + 1)
        times = np.atleast_1d(t_of_lambda(s, lams)).astype(float)
    times[0], times[-1] = s.t_max, t_end
    return TimeGrid(times, spacing, float(t_end))
