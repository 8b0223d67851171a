"""Couple a coarse stochastic run to a fine one through shared Gaussian increments.

Every stochastic step has the form ``x_next = A x_prev + (...) + S z``.
Over a coarse interval made of fine steps ``j = 1..k`` the noise reaching
the coarse endpoint is ``sum_j (prod_{l > j} A_l) S_j z_j``.  The coarse
``z`` is that sum divided by its standard deviation, so it is again
standard normal and both runs see the same Brownian path.
"""

from __future__ import annotations

import numpy as np

from ..predictor import Parameterization
from ..schedule import Schedule, TimeGrid, alpha_of_t, g_squared_of_t, lambda_of_t, sigma_of_t, theta_of_t
from .driver import Family, SamplerSpec
from .steps import posterior_coefficients

__all__ = ["linear_part", "nested_stride", "coarsen_noise"]


def linear_part(spec: SamplerSpec, s: Schedule, t_prev: float, t_next: float) -> tuple[float, float]:
    """``(A, S)``: state multiplier and noise scale of one step."""
    fam = spec.family
    if fam is Family.MR_ODE:
        return 1.0, 0.0
    if fam is Family.MR_SDE:
        h = float(lambda_of_t(s, t_next) - lambda_of_t(s, t_prev))
        sig_n = float(sigma_of_t(s, t_next))
        if spec.parameterization is Parameterization.NOISE:
            return float(alpha_of_t(s, t_next) / alpha_of_t(s, t_prev)), sig_n * float(np.sqrt(np.expm1(2 * h)))
        a = float(sig_n / sigma_of_t(s, t_prev)) * float(np.exp(-h))
        return a, sig_n * float(np.sqrt(-np.expm1(-2 * h)))
    if fam is Family.POSTERIOR:
        _, _, beta = posterior_coefficients(s, t_prev, t_next)
        return float(alpha_of_t(s, t_next) / alpha_of_t(s, t_prev)), float(np.sqrt(beta))
    dt = t_prev - t_next
    return 1.0 + float(theta_of_t(s, t_prev)) * dt, float(np.sqrt(g_squared_of_t(s, t_prev) * dt))


def nested_stride(fine: TimeGrid, coarse: TimeGrid) -> int:
    """Stride ``k`` with ``coarse.times == fine.times[::k]``; raises otherwise."""
    if fine.nfe % coarse.nfe:
        raise ValueError(f"fine grid ({fine.nfe} steps) does not refine coarse grid ({coarse.nfe} steps)")
    k = fine.nfe // coarse.nfe
    if not np.allclose(fine.times[::k], coarse.times, rtol=1e-10, atol=0):
        raise ValueError("coarse grid times are not a subset of the fine grid")
    return k


def coarsen_noise(spec: SamplerSpec, s: Schedule, fine: TimeGrid, coarse: TimeGrid, fine_noise: np.ndarray) -> np.ndarray:
    """Aggregate a ``(chains, M_f + 1, D)`` block into ``(chains, M_c + 1, D)``."""
    k = nested_stride(fine, coarse)
    fine_noise = np.asarray(fine_noise, dtype=float)
    chains, _, dim = fine_noise.shape
    out = np.zeros((chains, coarse.nfe + 1, dim))
    out[:, 0] = fine_noise[:, 0]
    if not spec.family.stochastic:
        return out
    times = fine.times
    for c in range(coarse.nfe):
        parts = [linear_part(spec, s, float(times[j - 1]), float(times[j])) for j in range(c * k + 1, (c + 1) * k + 1)]
        weights = np.empty(k)
        carry = 1.0
        for idx in range(k - 1, -1, -1):
            a, scale = parts[idx]
            weights[idx] = carry * scale
            carry *= a
        norm = np.sqrt(np.sum(weights**2))
        block = fine_noise[:, c * k + 1 : (c + 1) * k + 1]
        out[:, c + 1] = np.tensordot(block, weights, axes=([1], [0])) / norm
    return out
