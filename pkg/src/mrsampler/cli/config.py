"""Experiment configuration: a JSON document validated into typed settings.

Example::

    {
      "schedule": {"family": "constant", "params": [2.0], "sigma_inf": 0.5, "t_max": 5.0},
      "oracle": {"kind": "gaussian", "m0": [0.5, -1.0], "s0": 0.1, "output": "noise"},
      "mu": [1.0, 0.0],
      "sampler": {"family": "mr_sde", "parameterization": "data", "order": 2,
                  "nfe": 10, "spacing": "uniform_lambda", "seed": 0},
      "chains": 100,
      "outputs": {"dir": "out", "plots": false}
    }
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..predictor import DiracData, GaussianData, OracleSpec, Parameterization, oracle_from_dict
from ..sampler import Family, SamplerSpec
from ..schedule import Schedule, ScheduleFamily, SpacingMode, make_grid

__all__ = ["ConfigError", "ExperimentConfig", "load_config", "parse_config", "parse_method", "METHOD_NAMES"]

DEFAULT_NFE_LIST = [10, 20, 40, 80]
DEFAULT_COMPARE_NFE = [5, 10, 20, 50, 100]
DEFAULT_TRAJECTORY_METHODS = ["ode-d-1", "sde-d-1", "posterior", "euler"]
METHOD_NAMES = ("sde-n-1", "sde-n-2", "ode-n-1", "ode-n-2", "sde-d-1", "sde-d-2", "ode-d-1", "ode-d-2", "posterior", "euler")


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class ExperimentConfig:
    schedule: Schedule
    oracle: OracleSpec
    oracle_output: Parameterization
    mu: np.ndarray
    family: Family
    parameterization: Parameterization
    order: int
    nfe: int
    spacing: SpacingMode
    t_end: float
    seed: int
    denoise_final: bool = False
    chains: int = 1
    workers: int = 1
    out_dir: Path = Path("out")
    plots: bool = False
    nfe_list: tuple[int, ...] = tuple(DEFAULT_NFE_LIST)
    compare_nfe: tuple[int, ...] = tuple(DEFAULT_COMPARE_NFE)
    reference_factor: int = 100
    methods: tuple[str, ...] = tuple(DEFAULT_TRAJECTORY_METHODS)
    radius_kinds: tuple[Parameterization, ...] = (Parameterization.NOISE, Parameterization.DATA)
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.mu.size

    def grid(self, nfe: int | None = None):
        return make_grid(self.schedule, self.nfe if nfe is None else nfe, self.spacing, self.t_end)

    def sampler_spec(self, nfe: int | None = None, **overrides) -> SamplerSpec:
        kw = dict(
            family=self.family,
            grid=self.grid(nfe),
            parameterization=self.parameterization,
            order=self.order,
            seed=self.seed,
            denoise_final=self.denoise_final,
        )
        kw.update(overrides)
        return SamplerSpec(**kw)


def parse_method(name: str) -> dict:
    """``"sde-d-2"`` -> SamplerSpec keyword arguments; also ``posterior`` and ``euler``."""
    name = name.strip().lower()
    if name == "posterior":
        return {"family": Family.POSTERIOR}
    if name in ("euler", "euler_maruyama", "em"):
        return {"family": Family.EULER_MARUYAMA}
    parts = name.split("-")
    if len(parts) != 3 or parts[0] not in ("sde", "ode") or parts[1] not in ("n", "d") or parts[2] not in ("1", "2"):
        raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHOD_NAMES)}")
    return {
        "family": Family.MR_SDE if parts[0] == "sde" else Family.MR_ODE,
        "parameterization": Parameterization.NOISE if parts[1] == "n" else Parameterization.DATA,
        "order": int(parts[2]),
    }


def _get(d: dict, key: str, path: str, default: Any = ...):
    if not isinstance(d, dict):
        raise ConfigError(path, "expected an object")
    if key in d:
        return d[key]
    if default is ...:
        raise ConfigError(f"{path}.{key}" if path else key, "required key missing")
    return default


def _positive_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < 1:
        raise ConfigError(path, f"expected a positive integer, got {value!r}")
    return int(value)


def _int_list(value, path: str) -> tuple[int, ...]:
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    if not isinstance(value, (list, tuple)) or not value:
        raise ConfigError(path, f"expected a nonempty list of integers, got {value!r}")
    out = []
    for k, v in enumerate(value):
        try:
            v = int(v) if isinstance(v, str) else v
        except ValueError:
            raise ConfigError(f"{path}[{k}]", f"not an integer: {v!r}") from None
        out.append(_positive_int(v, f"{path}[{k}]"))
    return tuple(out)


def _vector(value, path: str) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, f"expected a list of numbers, got {value!r}") from None
    if arr.ndim != 1 or arr.size == 0 or not np.all(np.isfinite(arr)):
        raise ConfigError(path, "expected a nonempty list of finite numbers")
    return arr


def _parse_schedule(d: dict) -> Schedule:
    fam = str(_get(d, "family", "schedule", "constant")).lower()
    try:
        family = ScheduleFamily(fam)
    except ValueError:
        raise ConfigError("schedule.family", f"unknown family {fam!r}") from None
    default_params = {ScheduleFamily.CONSTANT: [2.0], ScheduleFamily.LINEAR: [0.5, 3.0], ScheduleFamily.COSINE: [0.5, 3.0]}[family]
    params = _get(d, "params", "schedule", default_params)
    try:
        return Schedule(family, tuple(params), float(_get(d, "sigma_inf", "schedule", 0.5)), float(_get(d, "t_max", "schedule", 5.0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError("schedule", str(exc)) from None


def parse_config(raw: dict, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config mapping; ``overrides`` maps CLI flags onto keys."""
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    raw = copy.deepcopy(raw)
    ov = {k: v for k, v in (overrides or {}).items() if v is not None}
    sampler = raw.setdefault("sampler", {})
    outputs = raw.setdefault("outputs", {})
    if "seed" in ov:
        sampler["seed"] = ov["seed"]
    if "out" in ov:
        outputs["dir"] = ov["out"]
    if "workers" in ov:
        raw["workers"] = ov["workers"]
    if "plots" in ov and ov["plots"]:
        outputs["plots"] = True
    if "nfe" in ov:
        nfes = _int_list(ov["nfe"], "--nfe")
        sampler["nfe"] = nfes[0]
        raw.setdefault("study", {})["nfe_list"] = list(nfes)
        raw.setdefault("compare", {})["nfe_list"] = list(nfes)

    schedule = _parse_schedule(raw.get("schedule", {}))

    odict = _get(raw, "oracle", "")
    try:
        oracle = oracle_from_dict(odict)
    except KeyError as exc:
        raise ConfigError(f"oracle.{exc.args[0]}", "required key missing") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError("oracle", str(exc)) from None
    vec = oracle.x0 if isinstance(oracle, DiracData) else oracle.m0 if isinstance(oracle, GaussianData) else oracle.c
    if vec.ndim != 1 or vec.size == 0:
        raise ConfigError("oracle", "oracle parameters must be a nonempty vector")
    try:
        oracle_output = Parameterization(str(odict.get("output", "noise")).lower())
    except ValueError:
        raise ConfigError("oracle.output", f"unknown parameterization {odict.get('output')!r}") from None

    mu = _vector(raw["mu"], "mu") if "mu" in raw else np.zeros(vec.size)
    if mu.size != vec.size:
        raise ConfigError("mu", f"dimension {mu.size} does not match oracle dimension {vec.size}")

    try:
        family = Family(str(_get(sampler, "family", "sampler", "mr_sde")).lower())
    except ValueError:
        raise ConfigError("sampler.family", f"unknown family {sampler.get('family')!r}") from None
    try:
        parameterization = Parameterization(str(_get(sampler, "parameterization", "sampler", "data")).lower())
    except ValueError:
        raise ConfigError("sampler.parameterization", f"unknown parameterization {sampler.get('parameterization')!r}") from None
    if family.is_mr and parameterization is Parameterization.VELOCITY:
        raise ConfigError("sampler.parameterization", "MR samplers run on noise or data predictions")
    order = _get(sampler, "order", "sampler", 1)
    if order not in (1, 2):
        raise ConfigError("sampler.order", f"must be 1 or 2, got {order!r}")
    nfe = _positive_int(_get(sampler, "nfe", "sampler", 10), "sampler.nfe")
    if order == 2 and family.is_mr and nfe < 2:
        raise ConfigError("sampler.order", "order 2 needs nfe >= 2")
    try:
        spacing = SpacingMode(str(_get(sampler, "spacing", "sampler", "uniform_lambda")).lower())
    except ValueError:
        raise ConfigError("sampler.spacing", f"unknown spacing {sampler.get('spacing')!r}") from None
    t_end = _get(sampler, "t_end", "sampler", None)
    t_end = 1e-3 * schedule.t_max if t_end is None else float(t_end)
    if not 0 < t_end < schedule.t_max:
        raise ConfigError("sampler.t_end", f"must lie in (0, {schedule.t_max}), got {t_end}")
    seed = _get(sampler, "seed", "sampler", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2**64:
        raise ConfigError("sampler.seed", f"expected an unsigned 64-bit integer, got {seed!r}")
    denoise_final = bool(_get(sampler, "denoise_final", "sampler", False))

    chains = _positive_int(raw.get("chains", 1), "chains")
    workers = _positive_int(raw.get("workers", 1), "workers")

    study = raw.get("study", {})
    nfe_list = _int_list(study.get("nfe_list", DEFAULT_NFE_LIST), "study.nfe_list")
    reference_factor = _positive_int(study.get("reference_factor", 100), "study.reference_factor")
    compare = raw.get("compare", {})
    compare_nfe = _int_list(compare.get("nfe_list", DEFAULT_COMPARE_NFE), "compare.nfe_list")

    methods = tuple(raw.get("trajectory", {}).get("methods", DEFAULT_TRAJECTORY_METHODS))
    for k, m in enumerate(methods):
        try:
            parse_method(str(m))
        except ValueError as exc:
            raise ConfigError(f"trajectory.methods[{k}]", str(exc)) from None

    kinds = raw.get("radius", {}).get("parameterizations", ["noise", "data"])
    try:
        radius_kinds = tuple(Parameterization(str(k).lower()) for k in kinds)
    except ValueError as exc:
        raise ConfigError("radius.parameterizations", str(exc)) from None
    if not radius_kinds or Parameterization.VELOCITY in radius_kinds:
        raise ConfigError("radius.parameterizations", "choose from noise and data")

    return ExperimentConfig(
        schedule=schedule,
        oracle=oracle,
        oracle_output=oracle_output,
        mu=mu,
        family=family,
        parameterization=parameterization if family.is_mr else Parameterization.NOISE,
        order=int(order) if family.is_mr else 1,
        nfe=nfe,
        spacing=spacing,
        t_end=t_end,
        seed=int(seed),
        denoise_final=denoise_final,
        chains=chains,
        workers=workers,
        out_dir=Path(str(outputs.get("dir", "out"))),
        plots=bool(outputs.get("plots", False)),
        nfe_list=nfe_list,
        compare_nfe=compare_nfe,
        reference_factor=reference_factor,
        methods=methods,
        radius_kinds=radius_kinds,
        raw=raw,
    )


def load_config(path: str | Path, overrides: dict | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("--config", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("--config", f"invalid JSON in {path}: {exc}") from None
    return parse_config(raw, overrides)


