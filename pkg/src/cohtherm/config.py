"""Run configuration: INI files with [state], [bath] and [run] sections, plus figure presets.

Example::

    [state]
    kind = werner-w
    p = 0.5

    [bath]
    environment = common
    eta = 0.1
    lambda = 0.01
    kT = 0.1, 0.2, 0.5, 2, 10

    [run]
    t_max = 200
    samples = 2001
    solver = both
    output = out/werner
    cache = yes
"""

import configparser
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bath import BathSpec, time_grid
from .dynamics import ENVIRONMENTS, Scenario
from .errors import ParameterError
from .states import StateKind

OUTPUT_ENV_VAR = "COHTHERM_OUTPUT"
SOLVERS = ("ode", "analytic", "both")
DEFAULT_KT = (0.1, 0.2, 0.5, 2.0, 10.0)
DEFAULT_ETA = 0.1
DEFAULT_CUTOFF = 0.01
DEFAULT_T_MAX = 200.0
DEFAULT_SAMPLES = 2001


def output_root():
    return Path(os.environ.get(OUTPUT_ENV_VAR, "output"))


@dataclass(frozen=True)
class RunConfig:
    state: StateKind
    environment: str = "local"
    eta: float = DEFAULT_ETA
    cutoff: float = DEFAULT_CUTOFF
    kT: tuple = DEFAULT_KT
    t_max: float = DEFAULT_T_MAX
    samples: int = DEFAULT_SAMPLES
    solver: str = "both"
    output: Path = field(default_factory=output_root)
    cache: bool = True
    substeps: int = 8
    workers: int = 1
    name: str = ""

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ParameterError(f"environment must be one of {ENVIRONMENTS}", field="environment")
        if self.solver not in SOLVERS:
            raise ParameterError(f"solver must be one of {SOLVERS}, got {self.solver!r}", field="solver")
        kT = tuple(float(k) for k in self.kT)
        if not kT:
            raise ParameterError("kT list is empty", field="kT")
        for name, values in (("kT", kT), ("eta", (self.eta,)), ("lambda", (self.cutoff,)), ("t_max", (self.t_max,))):
            if not all(math.isfinite(float(v)) for v in values):
                raise ParameterError(f"{name} must be finite", field=name)
        if int(self.samples) < 2:
            raise ParameterError(f"samples must be >= 2, got {self.samples}", field="samples")
        if not float(self.t_max) > 0:
            raise ParameterError(f"t_max must be positive, got {self.t_max}", field="t_max")
        if int(self.substeps) < 4:
            raise ParameterError("substeps must be >= 4", field="substeps")
        if int(self.workers) < 1:
            raise ParameterError("workers must be >= 1", field="workers")
        for k in kT:
            BathSpec(self.eta, self.cutoff, k)
        object.__setattr__(self, "kT", kT)
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "output", Path(self.output))

    def grid(self):
        return time_grid(self.t_max, self.samples)

    def scenario(self, kT):
        bath = BathSpec(self.eta, self.cutoff, kT)
        build = Scenario.local if self.environment == "local" else Scenario.common
        return build(self.state, bath, self.grid())


_STATE_ROWS = {
    "fig2": [("ghz", None), ("star", None), ("w", None), ("wwbar", None)],
    "fig4": [(k, p) for k in ("mix-ghz-w", "werner-ghz", "werner-w") for p in (0.1, 0.5, 0.9)],
}
_STATE_ROWS["fig3"] = _STATE_ROWS["fig2"]
_STATE_ROWS["fig5"] = _STATE_ROWS["fig4"]
_ENV = {"fig2": "local", "fig3": "common", "fig4": "local", "fig5": "common"}

PRESETS = {}
for _fig, _rows in _STATE_ROWS.items():
    for _i, (_kind, _p) in enumerate(_rows):
        PRESETS[f"{_fig}{'abcdefghi'[_i]}"] = (_kind, _p, _ENV[_fig])
PRESET_GROUPS = {fig: [n for n in PRESETS if n.startswith(fig)] for fig in _STATE_ROWS}


def figure_preset(name, output=None, **overrides):
    """RunConfig for a figure panel; presets default to the analytic solver."""
    if name not in PRESETS:
        raise ParameterError(
            f"unknown preset {name!r}; valid names: {', '.join(sorted(PRESETS))}", field="preset"
        )
    kind, p, env = PRESETS[name]
    base = dict(
        state=StateKind.parse(kind, p),
        environment=env,
        solver="analytic",
        output=(output_root() / name) if output is None else Path(output),
        name=name,
    )
    base.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**base)


def expand_preset(name):
    """Panel names for a preset or a whole-figure group such as ``fig4``."""
    if name in PRESET_GROUPS:
        return list(PRESET_GROUPS[name])
    if name in PRESETS:
        return [name]
    raise ParameterError(
        f"unknown preset {name!r}; valid names: {', '.join(sorted(PRESETS) + sorted(PRESET_GROUPS))}",
        field="preset",
    )


def _parse_bool(text, key):
    lowered = str(text).strip().lower()
    if lowered in ("1", "yes", "true", "on"):
        return True
    if lowered in ("0", "no", "false", "off"):
        return False
    raise ParameterError(f"{key} must be a boolean, got {text!r}", field=key)


def _parse_floats(text, key):
    try:
        return tuple(float(x) for x in str(text).replace(";", ",").split(",") if x.strip())
    except ValueError:
        raise ParameterError(f"{key} must be a comma-separated list of numbers, got {text!r}", field=key) from None


def _num(value, key, cast=float):
    try:
        return cast(value)
    except (TypeError, ValueError):
        raise ParameterError(f"{key} must be numeric, got {value!r}", field=key) from None


def load_config(path=None, **overrides):
    """Build a RunConfig from an INI file; keyword overrides (CLI flags) win when not None."""
    values = {}
    if path is not None:
        parser = configparser.ConfigParser()
        parser.optionxform = str
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except configparser.Error as exc:
            raise ParameterError(f"malformed config file: {exc}", field="config") from None
        sec = {name: dict(parser[name]) for name in parser.sections()}
        state = sec.get("state", {})
        bath = sec.get("bath", {})
        run = sec.get("run", {})
        if "kind" in state:
            values["kind"] = state["kind"]
        if "p" in state:
            values["p"] = _num(state["p"], "p")
        for key, dest in (("eta", "eta"), ("lambda", "cutoff")):
            if key in bath:
                values[dest] = _num(bath[key], key)
        if "environment" in bath:
            values["environment"] = bath["environment"].strip().lower()
        if "kT" in bath:
            values["kT"] = _parse_floats(bath["kT"], "kT")
        if "t_max" in run:
            values["t_max"] = _num(run["t_max"], "t_max")
        for key in ("samples", "substeps", "workers"):
            if key in run:
                values[key] = _num(run[key], key, int)
        if "solver" in run:
            values["solver"] = run["solver"].strip().lower()
        if "output" in run:
            values["output"] = Path(run["output"])
        if "cache" in run:
            values["cache"] = _parse_bool(run["cache"], "cache")
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "kind" not in values:
        raise ParameterError("state kind is required ([state] kind = ...)", field="state")
    state = StateKind.parse(values.pop("kind"), values.pop("p", None))
    return RunConfig(state=state, **values)


def with_overrides(config, **overrides):
    return replace(config, **{k: v for k, v in overrides.items() if v is not None})
