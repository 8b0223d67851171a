"""Score-model parameterizations, the transforms between them, and analytic oracles.

A :class:`Predictor` is any pure function ``(x, mu, t) -> vector`` tagged
with the quantity it predicts: the noise ``eps``, the clean data ``x0`` or
the velocity ``v``.  A trained network would plug in here; this package
only ships closed-form oracles for which the true score is known.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .schedule import DomainError, Schedule, alpha_of_t, sigma_of_t

__all__ = [
    "Parameterization",
    "Predictor",
    "DiracData",
    "GaussianData",
    "ConstantNoise",
    "OracleSpec",
    "data_from_noise",
    "noise_from_data",
    "phi_of_t",
    "velocity_from_pair",
    "data_from_velocity",
    "noise_from_velocity",
    "adapt",
    "make_oracle",
    "oracle_from_dict",
    "gaussian_log_density",
]


class Parameterization(str, enum.Enum):
    NOISE = "noise"
    DATA = "data"
    VELOCITY = "velocity"


@dataclass(frozen=True)
class Predictor:
    kind: Parameterization
    fn: Callable[[np.ndarray, np.ndarray, float], np.ndarray]

    def __post_init__(self):
        object.__setattr__(self, "kind", Parameterization(self.kind))

    def __call__(self, x, mu, t):
        out = np.asarray(self.fn(x, mu, t), dtype=float)
        x = np.asarray(x)
        if out.shape != x.shape:
            out = np.broadcast_to(out, x.shape).copy()
        return out


# -- parameterization transforms ---------------------------------------------


def data_from_noise(s: Schedule, x, mu, t, eps):
    a, sig = alpha_of_t(s, t), sigma_of_t(s, t)
    return (np.asarray(x) - (1.0 - a) * np.asarray(mu) - sig * np.asarray(eps)) / a


def noise_from_data(s: Schedule, x, mu, t, x0_hat):
    sig = sigma_of_t(s, t)
    if np.any(np.asarray(sig) == 0):
        raise DomainError("noise is undefined where sigma_t = 0 (t = 0)")
    a = alpha_of_t(s, t)
    return (np.asarray(x) - a * np.asarray(x0_hat) - (1.0 - a) * np.asarray(mu)) / sig


def phi_of_t(s: Schedule, t):
    """Angle with ``alpha_t = cos(phi)`` and ``sigma_t = sigma_inf sin(phi)``."""
    return np.arctan2(sigma_of_t(s, t), s.sigma_inf * alpha_of_t(s, t))[()]


def velocity_from_pair(s: Schedule, mu, t, x0, eps):
    """Velocity ``d x_t / d phi`` of the path through ``x0`` with noise ``eps``."""
    phi = phi_of_t(s, t)
    mu, x0, eps = (np.asarray(v, dtype=float) for v in (mu, x0, eps))
    return (mu - x0) * np.sin(phi) + s.sigma_inf * np.cos(phi) * eps


def data_from_velocity(s: Schedule, x, mu, t, v):
    phi = phi_of_t(s, t)
    c, sn = np.cos(phi), np.sin(phi)
    return np.asarray(x) * c + np.asarray(mu) * (1.0 - c) - np.asarray(v) * sn


def noise_from_velocity(s: Schedule, x, mu, t, v):
    phi = phi_of_t(s, t)
    c, sn = np.cos(phi), np.sin(phi)
    return (np.asarray(v) * c + (np.asarray(x) - np.asarray(mu)) * sn) / s.sigma_inf


def adapt(s: Schedule, predictor: Predictor, kind: Parameterization | str) -> Predictor:
    """Wrap ``predictor`` so it returns ``kind`` instead of its native output."""
    kind = Parameterization(kind)
    src = predictor.kind
    if src is kind:
        return predictor
    P = Parameterization

    def convert(x, mu, t):
        out = predictor(x, mu, t)
        if src is P.VELOCITY:
            if kind is P.DATA:
                return data_from_velocity(s, x, mu, t, out)
            return noise_from_velocity(s, x, mu, t, out)
        if src is P.NOISE:
            x0 = data_from_noise(s, x, mu, t, out)
            eps = out
        else:
            x0 = out
            eps = noise_from_data(s, x, mu, t, out)
        if kind is P.DATA:
            return x0
        if kind is P.NOISE:
            return eps
        return velocity_from_pair(s, mu, t, x0, eps)

    return Predictor(kind, convert)


# -- analytic oracles ---------------------------------------------------------


@dataclass(frozen=True)
class DiracData:
    """Data distribution concentrated on a single point ``x0``."""

    x0: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x0", np.asarray(self.x0, dtype=float))


@dataclass(frozen=True)
class GaussianData:
    """Isotropic Gaussian data ``N(m0, s0^2 I)``; ``s0 = 0`` degenerates to Dirac."""

    m0: np.ndarray
    s0: float

    def __post_init__(self):
        object.__setattr__(self, "m0", np.asarray(self.m0, dtype=float))
        if not self.s0 >= 0:
            raise ValueError(f"s0 must be nonnegative, got {self.s0}")
        object.__setattr__(self, "s0", float(self.s0))


@dataclass(frozen=True)
class ConstantNoise:
    """Noise predictor returning ``c`` everywhere (a zero-derivative integrand)."""

    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float))


OracleSpec = Union[DiracData, GaussianData, ConstantNoise]


def _spec_vector(spec: OracleSpec) -> np.ndarray:
    if isinstance(spec, DiracData):
        return spec.x0
    if isinstance(spec, GaussianData):
        return spec.m0
    return spec.c


def gaussian_log_density(s: Schedule, spec: GaussianData, x, mu, t):
    """Log-density of the marginal ``p_t`` implied by Gaussian data (up to no constant)."""
    a, sig = alpha_of_t(s, t), sigma_of_t(s, t)
    var = sig**2 + a**2 * spec.s0**2
    x = np.asarray(x, dtype=float)
    m = a * spec.m0 + (1.0 - a) * np.asarray(mu)
    d = x.shape[-1]
    return -0.5 * np.sum((x - m) ** 2, axis=-1) / var - 0.5 * d * np.log(2 * np.pi * var)


def make_oracle(s: Schedule, spec: OracleSpec, kind: Parameterization | str = Parameterization.NOISE, dim: int | None = None) -> Predictor:
    """Exact predictor for a known data distribution.

    Dirac and Gaussian data give the true conditional expectations of the
    noise and of ``x0`` under the marginal ``p_t``; the velocity follows by
    the usual transform.
    """
    kind = Parameterization(kind)
    vec = _spec_vector(spec)
    if vec.ndim != 1 or vec.size == 0:
        raise ValueError(f"oracle parameters must be a nonempty vector, got shape {vec.shape}")
    if dim is not None and vec.size != dim:
        raise ValueError(f"oracle dimension {vec.size} does not match D = {dim}")

    if isinstance(spec, ConstantNoise):
        c = spec.c
        native = Predictor(Parameterization.NOISE, lambda x, mu, t: np.broadcast_to(c, np.shape(x)).copy())
        return adapt(s, native, kind)

    if isinstance(spec, DiracData):
        x0, s0 = spec.x0, 0.0
    else:
        x0, s0 = spec.m0, spec.s0

    def data_fn(x, mu, t):
        if s0 == 0.0:
            return np.broadcast_to(x0, np.shape(x)).copy()
        a, sig = alpha_of_t(s, t), sigma_of_t(s, t)
        var = sig**2 + a**2 * s0**2
        m = a * x0 + (1.0 - a) * np.asarray(mu)
        return x0 + (a * s0**2 / var) * (np.asarray(x) - m)

    def noise_fn(x, mu, t):
        a, sig = alpha_of_t(s, t), sigma_of_t(s, t)
        var = sig**2 + a**2 * s0**2
        m = a * x0 + (1.0 - a) * np.asarray(mu)
        if var == 0:
            raise DomainError("noise is undefined where sigma_t = 0 (t = 0)")
        return sig * (np.asarray(x) - m) / var

    if kind is Parameterization.DATA:
        return Predictor(kind, data_fn)
    noise = Predictor(Parameterization.NOISE, noise_fn)
    if kind is Parameterization.NOISE:
        return noise
    x0_pred = Predictor(Parameterization.DATA, data_fn)
    return Predictor(kind, lambda x, mu, t: velocity_from_pair(s, mu, t, x0_pred(x, mu, t), noise(x, mu, t)))


def oracle_from_dict(d: dict) -> OracleSpec:
    """Parse ``{"kind": "dirac"|"gaussian"|"constant_noise", ...}``."""
    kind = str(d.get("kind", "")).lower()
    if kind in ("dirac", "dirac_data"):
        return DiracData(np.asarray(d["x0"], dtype=float))
    if kind in ("gaussian", "gaussian_data"):
        return GaussianData(np.asarray(d["m0"], dtype=float), float(d["s0"]))
    if kind in ("constant_noise", "constant"):
        return ConstantNoise(np.asarray(d["c"], dtype=float))
    raise ValueError(f"unknown oracle kind {d.get('kind')!r}")
