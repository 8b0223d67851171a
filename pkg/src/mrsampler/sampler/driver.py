"""Sampling loop with model-output buffering."""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..predictor import Parameterization, Predictor, adapt
from ..process import RandomSource, StateVec
from ..schedule import Schedule, TimeGrid, lambda_of_t
from . import steps

__all__ = ["Family", "SamplerSpec", "Trajectory", "NumericalFailure", "run", "run_chains", "draw_noise"]

log = logging.getLogger(__name__)


class Family(str, enum.Enum):
    MR_SDE = "mr_sde"
    MR_ODE = "mr_ode"
    POSTERIOR = "posterior"
    EULER_MARUYAMA = "euler_maruyama"

    @property
    def stochastic(self) -> bool:
        return self is not Family.MR_ODE

    @property
    def is_mr(self) -> bool:
        return self in (Family.MR_SDE, Family.MR_ODE)


class NumericalFailure(ArithmeticError):
    """A non-finite value appeared in the state at ``step``."""

    def __init__(self, step: int, message: str = ""):
        self.step = step
        super().__init__(message or f"non-finite state at step {step}")


@dataclass(frozen=True)
class SamplerSpec:
    """One sampling configuration.

    ``parameterization`` selects the noise or data flavour of the MR
    samplers; the two baselines always consume noise predictions and ignore
    ``order``.
    """

    family: Family
    grid: TimeGrid
    parameterization: Parameterization = Parameterization.NOISE
    order: int = 1
    seed: int = 0
    denoise_final: bool = False

    def __post_init__(self):
        object.__setattr__(self, "family", Family(self.family))
        object.__setattr__(self, "parameterization", Parameterization(self.parameterization))
        if not self.family.is_mr:
            object.__setattr__(self, "parameterization", Parameterization.NOISE)
            object.__setattr__(self, "order", 1)
        elif self.parameterization is Parameterization.VELOCITY:
            raise ValueError("MR samplers run on noise or data predictions; adapt velocity predictors instead")
        if self.order not in (1, 2):
            raise ValueError(f"order must be 1 or 2, got {self.order}")
        if self.order == 2 and self.grid.nfe < 2:
            raise ValueError("order 2 needs at least two steps")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    @property
    def name(self) -> str:
        if self.family is Family.POSTERIOR:
            return "posterior"
        if self.family is Family.EULER_MARUYAMA:
            return "euler"
        kind = "n" if self.parameterization is Parameterization.NOISE else "d"
        solver = "sde" if self.family is Family.MR_SDE else "ode"
        return f"{solver}-{kind}-{self.order}"


@dataclass
class Trajectory:
    """States ``x_{t_0..t_M}`` and the buffered model outputs of one run.

    ``xs`` has shape ``(M + 1, *batch, D)`` and ``outputs`` ``(M, *batch, D)``;
    output ``i`` was evaluated at ``times[i]``.
    """

    times: np.ndarray
    xs: np.ndarray
    outputs: np.ndarray
    final: np.ndarray
    kind: Parameterization
    nfe: int
    lambdas: np.ndarray = field(default=None)

    @property
    def states(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times.tolist(), self.xs))

    @property
    def model_outputs(self) -> list[tuple[float, np.ndarray]]:
        return list(zip(self.times[:-1].tolist(), self.outputs))


_ORDER1 = {
    (Family.MR_SDE, Parameterization.NOISE): steps.step_sde_noise_1,
    (Family.MR_SDE, Parameterization.DATA): steps.step_sde_data_1,
    (Family.MR_ODE, Parameterization.NOISE): steps.step_ode_noise_1,
    (Family.MR_ODE, Parameterization.DATA): steps.step_ode_data_1,
    (Family.POSTERIOR, Parameterization.NOISE): steps.step_posterior,
    (Family.EULER_MARUYAMA, Parameterization.NOISE): steps.step_euler_maruyama,
}
_ORDER2 = {
    (Family.MR_SDE, Parameterization.NOISE): steps.step_sde_noise_2,
    (Family.MR_SDE, Parameterization.DATA): steps.step_sde_data_2,
    (Family.MR_ODE, Parameterization.NOISE): steps.step_ode_noise_2,
    (Family.MR_ODE, Parameterization.DATA): steps.step_ode_data_2,
}


def draw_noise(rng: RandomSource, chains: int, nfe: int, dim: int, start: int = 0) -> np.ndarray:
    """Per-chain Gaussian block ``(chains, nfe + 1, dim)``.

    Row 0 initializes ``x_T = mu + sigma_inf z``; row ``i`` drives step ``i``.
    ODE runs draw the same block so ``x_T`` matches the SDE run of that seed.
    """
    return rng.normals(chains, (nfe + 1, dim), start=start)


def run(
    spec: SamplerSpec,
    s: Schedule,
    predictor: Predictor,
    mu,
    rng: RandomSource | None = None,
    *,
    chains: int | None = None,
    chain_offset: int = 0,
    noise: np.ndarray | None = None,
    x_init: np.ndarray | None = None,
) -> Trajectory:
    """Run one sampler over ``spec.grid``.

    With ``chains=None`` a single unbatched chain is returned (states of
    shape ``(D,)``); otherwise states carry a leading chain axis.  ``noise``
    overrides the drawn ``(chains, M + 1, D)`` Gaussian block and ``x_init``
    overrides ``x_T``.
    """
    mu = np.asarray(mu, dtype=float)
    if mu.ndim != 1:
        raise ValueError(f"mu must be a vector, got shape {mu.shape}")
    dim = mu.size
    times = spec.grid.times
    m = spec.grid.nfe
    batched = chains is not None
    n = chains if batched else 1

    if noise is None:
        rng = rng if rng is not None else RandomSource(spec.seed)
        noise = draw_noise(rng, n, m, dim, start=chain_offset)
    noise = np.asarray(noise, dtype=float)
    if noise.shape != (n, m + 1, dim):
        raise ValueError(f"noise block must have shape {(n, m + 1, dim)}, got {noise.shape}")

    x = mu + s.sigma_inf * noise[:, 0] if x_init is None else np.broadcast_to(np.asarray(x_init, dtype=float), (n, dim)).copy()

    model = adapt(s, predictor, spec.parameterization)
    order1 = _ORDER1[(spec.family, spec.parameterization)]
    order2 = _ORDER2.get((spec.family, spec.parameterization)) if spec.order == 2 else None
    stochastic = spec.family.stochastic

    xs = np.empty((m + 1, n, dim))
    outs = np.empty((m, n, dim))
    xs[0] = x
    calls = 0
    for i in range(1, m + 1):
        t_prev, t_next = float(times[i - 1]), float(times[i])
        out = model(x, mu, t_prev)
        calls += 1
        outs[i - 1] = out
        state = StateVec(x, mu, t_prev)
        extra = {"z": noise[:, i]} if stochastic else {}
        if order2 is None or i == 1:
            x = order1(s, state, t_next, out, **extra)
        else:
            x = order2(s, state, t_next, out, outs[i - 2], float(times[i - 2]), **extra)
        if not np.all(np.isfinite(x)):
            log.error("%s: non-finite state at step %d (t=%g)", spec.name, i, t_next)
            raise NumericalFailure(i)
        xs[i] = x
        log.debug("%s step %d/%d t=%.6g", spec.name, i, m, t_next)

    final = x
    if spec.denoise_final and spec.parameterization is Parameterization.DATA:
        final = model(x, mu, float(times[-1]))
        calls += 1

    if not batched:
        xs, outs, final = xs[:, 0], outs[:, 0], final[0]
    return Trajectory(
        times=np.array(times),
        xs=xs,
        outputs=outs,
        final=np.array(final),
        kind=spec.parameterization,
        nfe=calls,
        lambdas=np.asarray(lambda_of_t(s, times)),
    )


def run_chains(
    spec: SamplerSpec,
    s: Schedule,
    predictor: Predictor,
    mu,
    chains: int,
    workers: int = 1,
    rng: RandomSource | None = None,
) -> Trajectory:
    """Run ``chains`` independent chains, split over ``workers`` threads.

    Each chain keeps its own noise stream, so the result does not depend on
    ``workers``.
    """
    if chains < 1:
        raise ValueError("chains must be positive")
    rng = rng if rng is not None else RandomSource(spec.seed)
    workers = max(1, min(int(workers), chains))
    bounds = np.linspace(0, chains, workers + 1).astype(int)

    def part(k: int) -> Trajectory:
        lo, hi = int(bounds[k]), int(bounds[k + 1])
        return run(spec, s, predictor, mu, rng, chains=hi - lo, chain_offset=lo)

    if workers == 1:
        parts = [part(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(part, range(workers)))
    first = parts[0]
    return Trajectory(
        times=first.times,
        xs=np.concatenate([p.xs for p in parts], axis=1),
        outputs=np.concatenate([p.outputs for p in parts], axis=1),
        final=np.concatenate([p.final for p in parts], axis=0),
        kind=first.kind,
        nfe=first.nfe,
        lambdas=first.lambdas,
    )
