"""
Run configuration: flat ``key = value`` text parsed into a RunConfig model.

    # comments and blank lines are ignored
    problem = gresho
    epsilon = 0.1
    nx = 50
    lambda.mode = adaptive
    lambda.c = 100

Keys left out take the problem preset's values.
"""

import logging
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ValidationError, field_validator

from .benchmarks import ProblemPreset, get_preset
from .errors import BadValue, ConfigError, UnknownKey, UnknownProblem
from .grid import Grid, make_grid
from .scheme import FluidParams, LambdaMode, SchemeParams, State
from .settings import SOLVER_DEFAULTS

logger = logging.getLogger(__name__)

# config key -> RunConfig field
CONFIG_KEYS = {
    "problem": "problem",
    "epsilon": "epsilon",
    "nx": "nx",
    "ny": "ny",
    "kappa": "kappa",
    "gamma": "gamma",
    "rho0": "rho0",
    "cfl": "cfl",
    "lambda.mode": "lambda_mode",
    "lambda.value": "lambda0",
    "lambda.c": "lambda_c",
    "t_end": "t_end",
    "max_steps": "max_steps",
    "output": "output",
    "snapshot_every": "snapshot_every",
    "record_identities": "record_identities",
    "check_residuals": "check_residuals",
}

TRUE_WORDS = {"1", "true", "yes", "on"}
FALSE_WORDS = {"0", "false", "no", "off"}


class RunConfig(BaseModel):
    problem: str
    epsilon: float
    nx: int
    ny: Optional[int] = None
    kappa: float
    gamma: float
    rho0: Optional[float] = None  # None: mean of the initial density
    cfl: float
    lambda_mode: LambdaMode
    lambda0: float
    lambda_c: float
    t_end: float
    max_steps: int = SOLVER_DEFAULTS["max_steps"]
    output: Optional[str] = None
    snapshot_every: int = 0  # 0: final snapshot only
    record_identities: bool = False
    check_residuals: bool = False

    @field_validator("epsilon", "kappa", "cfl", "lambda_c")
    @classmethod
    def _positive(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("must be positive")
        return value

    @field_validator("gamma")
    @classmethod
    def _above_one(cls, value: float) -> float:
        if not value > 1:
            raise ValueError("must exceed 1")
        return value

    @field_validator("rho0")
    @classmethod
    def _positive_or_unset(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not value > 0:
            raise ValueError("must be positive")
        return value

    @field_validator("lambda0", "t_end")
    @classmethod
    def _non_negative(cls, value: float) -> float:
        if not value >= 0:
            raise ValueError("must be non-negative")
        return value

    @field_validator("nx", "ny")
    @classmethod
    def _enough_cells(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value < SOLVER_DEFAULTS["min_cells"]:
            raise ValueError(f"needs at least {SOLVER_DEFAULTS['min_cells']} cells")
        return value

    @field_validator("max_steps")
    @classmethod
    def _at_least_one(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @field_validator("snapshot_every")
    @classmethod
    def _cadence(cls, value: int) -> int:
        if value < 0:
            raise ValueError("must be non-negative")
        return value

    @property
    def preset(self) -> ProblemPreset:
        return get_preset(self.problem)

    def with_resolution(self, nx: int) -> "RunConfig":
        """Same run on a grid with ``nx`` cells along x (y scales along)."""
        ny = None
        if self.preset.dim == 2:
            ny = nx * self.cells_per_axis()[1] // self.cells_per_axis()[0]
        return self.model_copy(update={"nx": nx, "ny": ny})

    def cells_per_axis(self) -> Tuple[int, ...]:
        preset = self.preset
        if preset.dim == 1:
            return (self.nx,)
        if self.ny is not None:
            return (self.nx, self.ny)
        return (self.nx, round(self.nx * preset.length[1] / preset.length[0]))

    def build_grid(self) -> Grid:
        preset = self.preset
        return make_grid(preset.dim, self.cells_per_axis(), preset.origin, preset.length)

    def initial_state(self, grid: Grid) -> State:
        return self.preset.initial_state(grid, self.epsilon, self.gamma)

    def fluid_params(self, initial: State) -> FluidParams:
        rho0 = self.rho0 if self.rho0 is not None else initial.rho.mean()
        return FluidParams(kappa=self.kappa, gamma=self.gamma, epsilon=self.epsilon, rho0=rho0)

    def scheme_params(self) -> SchemeParams:
        return SchemeParams(
            cfl=self.cfl,
            t_end=self.t_end,
            lambda_mode=self.lambda_mode,
            lambda0=self.lambda0,
            c=self.lambda_c,
            max_steps=self.max_steps,
        )


def preset_defaults(preset: ProblemPreset, epsilon: Optional[float] = None) -> Dict[str, object]:
    epsilon = preset.epsilons[0] if epsilon is None else epsilon
    return {
        "problem": preset.name,
        "epsilon": epsilon,
        "nx": preset.default_n,
        "kappa": preset.kappa,
        "gamma": preset.gamma,
        "rho0": preset.rho0,
        "cfl": preset.cfl_for(epsilon),
        "lambda_mode": preset.lambda_mode,
        "lambda0": preset.lambda0,
        "lambda_c": preset.c_for(epsilon),
        "t_end": preset.t_end_for(epsilon),
    }


def _parse_bool(raw: str) -> bool:
    word = raw.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _split_lines(text: str) -> List[Tuple[int, str, str, str]]:
    entries = []
    seen: Dict[str, int] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise BadValue("expected 'key = value'", line_no, line)
        key, value = (part.strip() for part in content.split("=", 1))
        key = key.lower()
        if key not in CONFIG_KEYS:
            raise UnknownKey(f"unknown key {key!r}", line_no, line)
        if key in seen:
            raise BadValue(f"key {key!r} already set on line {seen[key]}", line_no, line)
        seen[key] = line_no
        entries.append((line_no, line, key, value))
    return entries


def parse_config(text: str) -> RunConfig:
    """Parse config text, filling omitted keys from the problem preset."""
    entries = _split_lines(text)
    by_field = {CONFIG_KEYS[key]: (line_no, line, value) for line_no, line, key, value in entries}

    if "problem" not in by_field:
        raise BadValue("the 'problem' key is required")
    problem_line_no, problem_line, problem = by_field["problem"]
    try:
        preset = get_preset(problem)
    except UnknownProblem as exc:
        raise UnknownProblem(str(exc), problem_line_no, problem_line) from None

    values: Dict[str, object] = {}
    for name, (line_no, line, raw) in by_field.items():
        if name == "problem":
            continue
        try:
            if name in ("record_identities", "check_residuals"):
                values[name] = _parse_bool(raw)
            elif name == "lambda_mode":
                values[name] = LambdaMode(raw.lower())
            elif name in ("rho0", "ny") and raw.lower() in ("auto", "none"):
                values[name] = None
            else:
                values[name] = raw
        except ValueError as exc:
            raise BadValue(str(exc), line_no, line) from None

    # ε drives the per-ε preset values, so validate it before filling defaults
    epsilon = None
    if "epsilon" in values:
        line_no, line, raw = by_field["epsilon"]
        try:
            epsilon = float(raw)
        except ValueError:
            raise BadValue(f"epsilon is not a number: {raw!r}", line_no, line) from None
        if not epsilon > 0:
            raise BadValue("epsilon must be positive", line_no, line)
        if epsilon not in preset.epsilons:
            logger.warning(f"⚠️ epsilon {epsilon!r} is not one of the reference values {preset.epsilons} for {preset.name}")

    merged = preset_defaults(preset, epsilon)
    merged.update(values)
    merged["problem"] = preset.name
    try:
        return RunConfig(**merged)
    except ValidationError as exc:
        error = exc.errors()[0]
        field_name = str(error["loc"][0]) if error["loc"] else ""
        line_no, line, _ = by_field.get(field_name, (None, None, None))
        raise BadValue(f"{field_name}: {error['msg']}", line_no, line) from None


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    return parse_config(text)
