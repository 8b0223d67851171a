"""Fast samplers for mean-reverting diffusion models.

Exponential-integrator solvers for the reverse-time SDE and probability
flow ODE of ``dx = f(t) (mu - x) dt + g(t) dw`` in noise and data
parameterization, posterior-sampling and Euler-Maruyama baselines, and
analytic oracles that stand in for trained networks.
"""

from .predictor import (
    ConstantNoise,
    DiracData,
    GaussianData,
    Parameterization,
    Predictor,
    adapt,
    make_oracle,
)
from .process import RandomSource, StateVec, forward_sample, transition_moments
from .sampler import Family, SamplerSpec, Trajectory, run, run_chains
from .schedule import Schedule, SpacingMode, TimeGrid, make_grid

__version__ = "0.1.0"

__all__ = [
    "ConstantNoise",
    "DiracData",
    "Family",
    "GaussianData",
    "Parameterization",
    "Predictor",
    "RandomSource",
    "SamplerSpec",
    "Schedule",
    "SpacingMode",
    "StateVec",
    "TimeGrid",
    "Trajectory",
    "adapt",
    "forward_sample",
    "make_grid",
    "make_oracle",
    "run",
    "run_chains",
    "transition_moments",
]
