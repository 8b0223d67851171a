"""Forward mean-reverting process: exact transitions and seeded noise."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .schedule import Schedule, alpha_of_t, sigma_of_t

__all__ = ["StateVec", "RandomSource", "transition_moments", "forward_sample", "reverse_terminal_moments"]


@dataclass(frozen=True)
class StateVec:
    """A sample ``x`` at time ``t`` with its condition mean ``mu``.

    ``x`` may carry leading batch axes; ``mu`` broadcasts against it.
    """

    x: np.ndarray
    mu: np.ndarray
    t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        mu = np.asarray(self.mu, dtype=float)
        if x.ndim == 0 or mu.ndim == 0 or x.shape[-1] != mu.shape[-1]:
            raise ValueError(f"x and mu must share their last dimension, got {x.shape} and {mu.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "t", float(self.t))


class RandomSource:
    """Seeded source of independent per-chain Gaussian streams.

    Chain ``i`` of master seed ``s`` always sees the same Philox stream,
    keyed by ``SeedSequence(s, spawn_key=(i,))``, so results do not depend
    on how chains are batched or distributed over workers.  Normals come
    from numpy's ``Generator.standard_normal`` (ziggurat).
    """

    def __init__(self, seed: int = 0):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed

    def chain(self, index: int) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed, spawn_key=(int(index),))
        return np.random.Generator(np.random.Philox(ss))

    def normals(self, chains: int, shape: tuple[int, ...], start: int = 0) -> np.ndarray:
        """Draw a ``(chains, *shape)`` block, one independent stream per chain."""
        out = np.empty((chains, *shape))
        for k in range(chains):
            out[k] = self.chain(start + k).standard_normal(shape)
        return out


def transition_moments(s: Schedule, x0, mu, t: float):
    """Mean and isotropic std of ``p(x_t | x_0)``."""
    x0 = np.asarray(x0, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if x0.shape[-1:] != mu.shape[-1:]:
        raise ValueError(f"dimension mismatch: x0 {x0.shape} vs mu {mu.shape}")
    a = alpha_of_t(s, t)
    return a * x0 + (1.0 - a) * mu, float(sigma_of_t(s, t))


def forward_sample(s: Schedule, x0, mu, t: float, rng: np.random.Generator, return_noise: bool = False):
    """Draw ``x_t ~ p(x_t | x_0)`` in closed form.

    With ``return_noise`` the standard normal used is returned as well,
    which is what a noise-prediction target would be trained on.
    """
    mean, std = transition_moments(s, x0, mu, t)
    z = rng.standard_normal(mean.shape)
    x = mean + std * z
    return (x, z) if return_noise else x


def reverse_terminal_moments(s: Schedule, m0, mu, t: float, s0: float = 0.0):
    """Mean and per-coordinate variance of an exact reverse run stopped at ``t``.

    The run starts from ``x_T ~ N(mu, sigma_inf^2)`` rather than the true
    ``p_T``; data is ``N(m0, s0^2 I)`` (``s0 = 0`` for a point mass).  The
    law follows from conditioning the jointly Gaussian pair ``(x_t, x_T)``.
    """
    m0 = np.asarray(m0, dtype=float)
    mu = np.asarray(mu, dtype=float)
    a_t, a_T = float(alpha_of_t(s, t)), float(alpha_of_t(s, s.t_max))
    sig_t, sig_T = float(sigma_of_t(s, t)), float(sigma_of_t(s, s.t_max))
    var_t = sig_t**2 + a_t**2 * s0**2
    var_T = sig_T**2 + a_T**2 * s0**2
    cov = (a_T / a_t) * sig_t**2 + a_t * a_T * s0**2
    k = cov / var_T
    m_t = a_t * m0 + (1.0 - a_t) * mu
    m_T = a_T * m0 + (1.0 - a_T) * mu
    mean = m_t + k * (mu - m_T)
    var = var_t - k * cov + k**2 * s.sigma_inf**2
    return mean, np.full(mean.shape, var)
