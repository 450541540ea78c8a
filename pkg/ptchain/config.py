"""Run configuration: a strict JSON schema for every analysis.

Precedence when a run is assembled: command-line flags, then the JSON file,
then the environment (PTCHAIN_JOBS, optionally from a .env file), then the
defaults declared on RunConfig.
"""

import json
import logging
import math
import os
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import numpy as np
from dotenv import find_dotenv, load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, field_validator

from ptchain.errors import ConfigError, DomainError
from ptchain.model import (
    MAX_DENSE_SITES,
    Boundary,
    NoPerturbation,
    PerturbationSpec,
    SingleSite,
    SpinChainConfig,
    TwoSiteDoublePlus,
    TwoSiteMinus,
    TwoSitePlus,
)
from ptchain.pt import DEFAULT_COARSE_POINTS, DEFAULT_SNAP_TOL, DEFAULT_SOLVER, ThresholdSettings

logger = logging.getLogger(__name__)

JOBS_ENV = "PTCHAIN_JOBS"

_TWO_SITE = {
    "two_site_plus": TwoSitePlus,
    "two_site_minus": TwoSiteMinus,
    "two_site_double_plus": TwoSiteDoublePlus,
}


class Analysis(str, Enum):
    SPECTRUM = "spectrum"
    THRESHOLD = "threshold"
    FLOW = "flow"
    PHASE_GRID = "phase_grid"
    FIELD_RESPONSE = "field_response"
    COUPLING_SWEEP = "coupling_sweep"
    VALIDATE = "validate"


class GridRange(BaseModel):
    """Evenly spaced grid, endpoints included."""

    model_config = ConfigDict(extra="forbid")

    start: float
    stop: float
    num: int = Field(ge=2)

    def values(self) -> List[float]:
        return np.linspace(self.start, self.stop, self.num).tolist()


class PertConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["two_site_plus", "two_site_minus", "two_site_double_plus", "single_site"]
    p: Optional[int] = None
    q: Optional[int] = None
    gamma_plus: float = 1.0
    gamma_minus: float = 0.0
    sites: Optional[Literal["all"]] = None

    @field_validator("q")
    @classmethod
    def _q_only_for_pairs(cls, q, info: ValidationInfo):
        if q is not None and info.data.get("kind") == "single_site":
            raise ValueError("single_site takes no q")
        return q

    @property
    def is_batch(self) -> bool:
        return self.sites == "all"

    def required_sites(self) -> List[str]:
        if self.is_batch:
            return []
        return ["p"] if self.kind == "single_site" else ["p", "q"]

    def expand(self, n_sites: int) -> List[PerturbationSpec]:
        if self.kind == "single_site":
            ps = range(1, n_sites + 1) if self.is_batch else [self.p]
            return [SingleSite(p, self.gamma_plus, self.gamma_minus) for p in ps]
        cls = _TWO_SITE[self.kind]
        if self.is_batch:
            return [cls(p, q) for p in range(1, n_sites + 1) for q in range(1, n_sites + 1)]
        return [cls(self.p, self.q)]


Grid = Optional[Union[List[float], GridRange]]


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    N: int = Field(ge=1, le=MAX_DENSE_SITES)
    J: float = Field(1.0, ge=0)
    hz: float = 0.0
    boundary: Boundary = Boundary.OPEN
    pert: Union[Literal["none"], PertConfig] = "none"
    analysis: Analysis = Analysis.SPECTRUM
    # None: single_site runs at its own (gamma_plus, gamma_minus); pairs must set it
    gamma: Optional[float] = Field(None, ge=0)
    gamma_max: Optional[float] = Field(None, gt=0)
    tol: Optional[float] = Field(None, gt=0)
    snap_tol: float = Field(DEFAULT_SNAP_TOL, gt=0)
    coarse_points: int = Field(DEFAULT_COARSE_POINTS, ge=2)
    gamma_grid: Grid = None
    gp_grid: Grid = None
    gm_grid: Grid = None
    hz_grid: Grid = None
    hz_samples: Grid = None
    hz_fit_max: Optional[float] = Field(None, gt=0)
    J_grid: Grid = None
    site: Optional[int] = None
    solver: Literal["francis", "lapack"] = DEFAULT_SOLVER
    jobs: int = 1
    output_dir: str = "outputs"

    @field_validator("J", "hz", "gamma")
    @classmethod
    def _finite(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @field_validator("boundary")
    @classmethod
    def _ring_size(cls, v: Boundary, info: ValidationInfo) -> Boundary:
        n = info.data.get("N")
        if v is Boundary.PERIODIC and n is not None and n < 3:
            raise ValueError("periodic boundary needs N >= 3")
        return v

    @field_validator("pert")
    @classmethod
    def _pert_sites(cls, v, info: ValidationInfo):
        if v == "none":
            return v
        n = info.data.get("N")
        for name in v.required_sites():
            site = getattr(v, name)
            if site is None:
                raise ValueError(f"{v.kind} needs site {name}")
            if n is not None and not 1 <= site <= n:
                raise ValueError(f"site {name}={site} outside 1..{n}")
        return v

    @field_validator("site")
    @classmethod
    def _site_range(cls, v, info: ValidationInfo):
        n = info.data.get("N")
        if v is not None and n is not None and not 1 <= v <= n:
            raise ValueError(f"site {v} outside 1..{n}")
        return v

    @field_validator("gamma_grid", "gp_grid", "gm_grid", "hz_grid", "hz_samples", "J_grid")
    @classmethod
    def _normalise_grid(cls, v):
        if v is None:
            return v
        values = v.values() if isinstance(v, GridRange) else [float(x) for x in v]
        if not values:
            raise ValueError("grid must be nonempty")
        if not all(math.isfinite(x) for x in values):
            raise ValueError("grid must be finite")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("grid must be strictly ascending")
        return values

    @field_validator("jobs")
    @classmethod
    def _jobs(cls, v: int) -> int:
        if v == 0 or v < -1:
            raise ValueError("jobs must be >= 1, or -1 for every core")
        return v

    def chain(self) -> SpinChainConfig:
        return SpinChainConfig(self.N, self.J, self.hz, self.boundary)

    def perturbations(self) -> List[PerturbationSpec]:
        if self.pert == "none":
            return [NoPerturbation()]
        return self.pert.expand(self.N)

    def threshold_settings(self) -> ThresholdSettings:
        return ThresholdSettings(
            gamma_max=self.gamma_max,
            tol=self.tol,
            snap_tol=self.snap_tol,
            coarse_points=self.coarse_points,
            solver=self.solver,
        )


def _config_error(e: ValidationError) -> ConfigError:
    err = e.errors()[0]
    key = ".".join(str(part) for part in err["loc"]) or "<root>"
    return ConfigError(f"{key}: {err['msg']}", key=key, expected=err["type"])


def _read_json(text: str) -> Dict[str, Any]:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}", key="<root>", expected="JSON object") from e
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object", key="<root>", expected="object")
    return data


def validate_config(data: Dict[str, Any]) -> RunConfig:
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise _config_error(e) from e
    try:
        config.chain()
    except DomainError as e:
        raise ConfigError(str(e), key="N", expected="valid chain") from e
    return config


def parse_config(text: str) -> RunConfig:
    """Validated RunConfig from JSON text; unknown keys are rejected."""
    return validate_config(_read_json(text))


def serialize_config(config: RunConfig) -> str:
    return config.model_dump_json(indent=2, exclude_none=True)


def load_run_config(path: Optional[Union[str, Path]] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """Assemble a RunConfig from file, environment and command-line overrides."""
    load_dotenv(find_dotenv(usecwd=True))
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e}", key="--config", expected="readable file") from e
        data = _read_json(text)

    env_jobs = os.getenv(JOBS_ENV)
    if env_jobs and "jobs" not in data:
        try:
            data["jobs"] = int(env_jobs)
        except ValueError:
            raise ConfigError(f"{JOBS_ENV}={env_jobs!r} is not an integer", key=JOBS_ENV, expected="int")

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "pert" and isinstance(value, dict) and isinstance(data.get("pert"), dict):
            data["pert"] = {**data["pert"], **value}
        else:
            data[key] = value
    config = validate_config(data)
    logger.debug("run config: %s", serialize_config(config))
    return config
