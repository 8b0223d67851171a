"""Single-step update rules.

Each function advances a state from ``x_prev.t`` down to ``t_next`` given
the buffered model output(s) at earlier grid points.  The MR rules solve
the linear part of the reverse dynamics exactly and expand only the model
output in the log-SNR ``lambda``; ``h = lambda(t_next) - lambda(t_prev)``
is positive because sampling runs backwards in time.

Order-2 rules take the two most recent buffered outputs and the time of the
older one, and use the backward difference
``D = (out_prev - out_prev2) / (lambda(t_prev) - lambda(t_prev2))``.
"""

from __future__ import annotations

import numpy as np

from ..process import StateVec
from ..schedule import Schedule, alpha_of_t, g_squared_of_t, lambda_of_t, sigma_of_t, theta_of_t

__all__ = [
    "GridError",
    "BufferUnderflow",
    "step_sde_noise_1",
    "step_sde_noise_2",
    "step_ode_noise_1",
    "step_ode_noise_2",
    "step_sde_data_1",
    "step_sde_data_2",
    "step_ode_data_1",
    "step_ode_data_2",
    "step_posterior",
    "step_euler_maruyama",
    "posterior_coefficients",
]


class GridError(ValueError):
    """Consecutive times do not decrease, so the log-SNR step is not positive."""


class BufferUnderflow(ValueError):
    """A second-order step was requested without two buffered model outputs."""


def _coeffs(s: Schedule, t_prev: float, t_next: float):
    if not t_next < t_prev:
        raise GridError(f"t_next={t_next} must be smaller than t_prev={t_prev}")
    h = float(lambda_of_t(s, t_next) - lambda_of_t(s, t_prev))
    if not h > 0:
        raise GridError(f"nonpositive log-SNR step h={h} between t={t_prev} and t={t_next}")
    return (
        float(alpha_of_t(s, t_prev)),
        float(alpha_of_t(s, t_next)),
        float(sigma_of_t(s, t_prev)),
        float(sigma_of_t(s, t_next)),
        h,
    )


def _difference(s: Schedule, t_prev: float, out_prev, out_prev2, t_prev2):
    if out_prev2 is None or t_prev2 is None:
        raise BufferUnderflow("second-order step needs two buffered model outputs")
    h_prev = float(lambda_of_t(s, t_prev) - lambda_of_t(s, t_prev2))
    if not h_prev > 0:
        raise GridError(f"nonpositive previous log-SNR step h={h_prev}")
    return (np.asarray(out_prev) - np.asarray(out_prev2)) / h_prev


def _noise(z, std: float):
    return 0.0 if z is None else std * np.asarray(z)


# -- noise prediction ---------------------------------------------------------


def _noise_update(s, x_prev, t_next, eps, d, z, weight, stochastic):
    a_p, a_n, _, sig_n, h = _coeffs(s, x_prev.t, t_next)
    ratio = a_n / a_p
    em1 = np.expm1(h)
    out = ratio * x_prev.x + (1.0 - ratio) * x_prev.mu - weight * sig_n * em1 * np.asarray(eps)
    if d is not None:
        out = out - weight * sig_n * (em1 - h) * d
    if stochastic:
        out = out + _noise(z, sig_n * np.sqrt(np.expm1(2.0 * h)))
    return out


def step_sde_noise_1(s: Schedule, x_prev: StateVec, t_next: float, eps_prev, z=None):
    return _noise_update(s, x_prev, t_next, eps_prev, None, z, 2.0, True)


def step_sde_noise_2(s: Schedule, x_prev: StateVec, t_next: float, eps_prev, eps_prev2, t_prev2, z=None):
    d = _difference(s, x_prev.t, eps_prev, eps_prev2, t_prev2)
    return _noise_update(s, x_prev, t_next, eps_prev, d, z, 2.0, True)


def step_ode_noise_1(s: Schedule, x_prev: StateVec, t_next: float, eps_prev):
    return _noise_update(s, x_prev, t_next, eps_prev, None, None, 1.0, False)


def step_ode_noise_2(s: Schedule, x_prev: StateVec, t_next: float, eps_prev, eps_prev2, t_prev2):
    d = _difference(s, x_prev.t, eps_prev, eps_prev2, t_prev2)
    return _noise_update(s, x_prev, t_next, eps_prev, d, None, 1.0, False)


# -- data prediction ----------------------------------------------------------


def _sde_data_update(s, x_prev, t_next, x0, d, z):
    a_p, a_n, sig_p, sig_n, h = _coeffs(s, x_prev.t, t_next)
    e1 = np.exp(-h)
    one_m_e2 = -np.expm1(-2.0 * h)
    e2 = 1.0 - one_m_e2
    mu_coef = 1.0 - (a_n / a_p) * e2 - a_n + a_n * e2
    out = (sig_n / sig_p) * e1 * x_prev.x + mu_coef * x_prev.mu + a_n * one_m_e2 * np.asarray(x0)
    if d is not None:
        out = out + a_n * (h - 0.5 * one_m_e2) * d
    return out + _noise(z, sig_n * np.sqrt(one_m_e2))


def _ode_data_update(s, x_prev, t_next, x0, d):
    a_p, a_n, sig_p, sig_n, h = _coeffs(s, x_prev.t, t_next)
    r = sig_n / sig_p
    mu_coef = 1.0 - r + r * a_p - a_n
    out = r * x_prev.x + mu_coef * x_prev.mu + a_n * (-np.expm1(-h)) * np.asarray(x0)
    if d is not None:
        out = out + a_n * (h + np.expm1(-h)) * d
    return out


def step_sde_data_1(s: Schedule, x_prev: StateVec, t_next: float, x0_prev, z=None):
    return _sde_data_update(s, x_prev, t_next, x0_prev, None, z)


def step_sde_data_2(s: Schedule, x_prev: StateVec, t_next: float, x0_prev, x0_prev2, t_prev2, z=None):
    d = _difference(s, x_prev.t, x0_prev, x0_prev2, t_prev2)
    return _sde_data_update(s, x_prev, t_next, x0_prev, d, z)


def step_ode_data_1(s: Schedule, x_prev: StateVec, t_next: float, x0_prev):
    return _ode_data_update(s, x_prev, t_next, x0_prev, None)


def step_ode_data_2(s: Schedule, x_prev: StateVec, t_next: float, x0_prev, x0_prev2, t_prev2):
    d = _difference(s, x_prev.t, x0_prev, x0_prev2, t_prev2)
    return _ode_data_update(s, x_prev, t_next, x0_prev, d)


# -- baselines ----------------------------------------------------------------


def posterior_coefficients(s: Schedule, t_prev: float, t_next: float):
    """Weights ``(c_x, c_0, beta)`` of the Gaussian posterior step.

    The mean is ``c_x (x_prev - mu) + c_0 (x0_hat - mu) + mu`` and the
    variance ``beta``.  ``beta`` carries no ``sigma_inf^2`` factor, exactly
    as the posterior-sampling baseline defines it.
    """
    if not t_next < t_prev:
        raise GridError(f"t_next={t_next} must be smaller than t_prev={t_prev}")
    a_i, a_im1 = float(alpha_of_t(s, t_prev)), float(alpha_of_t(s, t_next))
    i_i, i_im1 = float(s.theta_integral(t_prev)), float(s.theta_integral(t_next))
    one_m_ai2 = -np.expm1(-2.0 * i_i)
    one_m_aim12 = -np.expm1(-2.0 * i_im1)
    one_m_ratio2 = -np.expm1(-2.0 * (i_i - i_im1))
    c_x = one_m_aim12 * a_i / (one_m_ai2 * a_im1)
    c_0 = one_m_ratio2 * a_im1 / one_m_ai2
    beta = one_m_aim12 * one_m_ratio2 / one_m_ai2
    if beta < 0:
        raise GridError(f"negative posterior variance {beta}")
    return c_x, c_0, beta


def step_posterior(s: Schedule, x_prev: StateVec, t_next: float, eps_prev, z=None):
    c_x, c_0, beta = posterior_coefficients(s, x_prev.t, t_next)
    a_i, sig_i = float(alpha_of_t(s, x_prev.t)), float(sigma_of_t(s, x_prev.t))
    x, mu = x_prev.x, x_prev.mu
    x0_hat = (x - mu - sig_i * np.asarray(eps_prev)) / a_i + mu
    return c_x * (x - mu) + c_0 * (x0_hat - mu) + mu + _noise(z, np.sqrt(beta))


def step_euler_maruyama(s: Schedule, x_prev: StateVec, t_next: float, eps_prev, z=None):
    """Explicit Euler-Maruyama step of the noise-parameterized reverse SDE."""
    t = x_prev.t
    dt = t - t_next
    if not dt > 0:
        raise GridError(f"t_next={t_next} must be smaller than t_prev={t}")
    f, g2, sig = float(theta_of_t(s, t)), float(g_squared_of_t(s, t)), float(sigma_of_t(s, t))
    x, mu = x_prev.x, x_prev.mu
    out = x - f * (mu - x) * dt - (g2 / sig) * np.asarray(eps_prev) * dt
    return out + _noise(z, np.sqrt(g2 * dt))
