from .coupling import coarsen_noise, linear_part, nested_stride
from .driver import Family, NumericalFailure, SamplerSpec, Trajectory, draw_noise, run, run_chains
from .steps import (
    BufferUnderflow,
    GridError,
    posterior_coefficients,
    step_euler_maruyama,
    step_ode_data_1,
    step_ode_data_2,
    step_ode_noise_1,
    step_ode_noise_2,
    step_posterior,
    step_sde_data_1,
    step_sde_data_2,
    step_sde_noise_1,
    step_sde_noise_2,
)

__all__ = [
    "BufferUnderflow",
    "Family",
    "GridError",
    "NumericalFailure",
    "SamplerSpec",
    "Trajectory",
    "coarsen_noise",
    "draw_noise",
    "linear_part",
    "nested_stride",
    "posterior_coefficients",
    "run",
    "run_chains",
    "step_euler_maruyama",
    "step_ode_data_1",
    "step_ode_data_2",
    "step_ode_noise_1",
    "step_ode_noise_2",
    "step_posterior",
    "step_sde_data_1",
    "step_sde_data_2",
    "step_sde_noise_1",
    "step_sde_noise_2",
]
