"""Temperature estimation by inverting the coherence forward model.

The forward model maps kT to the C_R(t) series of a scenario using the
analytic propagator and the cached rate tables. Estimation is a scalar
search in log kT: a 33-point log-spaced scan, then golden-section
refinement of the bracket around the best scan point.
"""

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coherence import coherence_of
from .dynamics import propagate_analytic
from .errors import ParameterError

SCAN_POINTS = 33
REL_WIDTH = 1e-4
IDENTIFIABLE_MIN = 1e-6
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ThermometryResult:
    kt_hat: float
    residual: float
    identifiable: bool
    sensitivity: float
    warning: str | None = None

    def to_json(self):
        record = {
            "kt_hat": self.kt_hat,
            "residual": self.residual,
            "identifiable": self.identifiable,
            "sensitivity": self.sensitivity,
        }
        if self.warning:
            record["warning"] = self.warning
        return json.dumps(record, separators=(", ", ": "))


def forward_coherence(scenario, kT):
    return coherence_of(propagate_analytic(scenario.with_kT(kT))).c_r


def _fd_step(kT):
    return max(1e-3 * kT, 1e-4)


def sensitivity_profile(scenario, kT, t_grid=None):
    """Signed central-difference derivative dC_R/dkT along the grid."""
    if not kT > 0:
        raise ParameterError(f"kT must be positive for a derivative, got {kT}", field="kT")
    if t_grid is not None and not np.array_equal(np.asarray(t_grid, dtype=float), scenario.t_grid):
        scenario = type(scenario)(scenario.initial, scenario.environment, scenario.baths, t_grid, scenario.omega0)
    h = _fd_step(kT)
    up = forward_coherence(scenario, kT + h)
    down = forward_coherence(scenario, kT - h)
    return (up - down) / (2.0 * h)


def _misfit(observed, scenario, kT):
    model = forward_coherence(scenario, kT)
    return float(np.sqrt(np.mean((model - observed) ** 2)))


def estimate_temperature(observed, scenario, bounds, workers=1):
    """Fit kT to an observed coherence series.

    ``scenario`` supplies everything except the temperature (its baths' kT is
    ignored). Non-identifiable configurations are reported through the
    ``identifiable`` flag rather than raised.
    """
    lo, hi = (float(b) for b in bounds)
    if not (lo > 0 and hi > lo and math.isfinite(hi)):
        raise ParameterError(f"bounds must satisfy 0 < lo < hi, got {bounds}", field="bounds")
    t_obs = np.asarray(observed.t, dtype=float)
    if t_obs.shape != scenario.t_grid.shape or not np.allclose(t_obs, scenario.t_grid, rtol=1e-12, atol=1e-12):
        raise ParameterError("observed grid differs from the scenario grid", field="t_grid")
    data = np.asarray(observed.c_r, dtype=float)

    scan = np.geomspace(lo, hi, SCAN_POINTS)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            profile = np.array(list(pool.map(lambda k: _misfit(data, scenario, k), scan)))
    else:
        profile = np.array([_misfit(data, scenario, k) for k in scan])
    i = int(np.argmin(profile))  # first minimum, i.e. ties go to the smaller kT

    a = math.log(scan[max(i - 1, 0)])
    b = math.log(scan[min(i + 1, SCAN_POINTS - 1)])
    cache = {}

    def f(x):
        if x not in cache:
            cache[x] = _misfit(data, scenario, math.exp(x))
        return cache[x]

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    while math.expm1(b - a) > REL_WIDTH:
        if f(c) <= f(d):
            b, d = d, c
            c = b - _INV_PHI * (b - a)
        else:
            a, c = c, d
            d = a + _INV_PHI * (b - a)

    candidates = [(profile[i], scan[i])] + [(v, math.exp(x)) for x, v in cache.items()]
    best_val, kt_hat = min(candidates, key=lambda vk: (vk[0], vk[1]))

    warning = None
    if i in (0, SCAN_POINTS - 1):
        edge = scan[i]
        edge_val = profile[i]
        if edge_val <= best_val:
            kt_hat, best_val = float(edge), float(edge_val)
        if kt_hat == edge:
            side = "lower" if i == 0 else "upper"
            warning = f"minimum at the {side} search bound kT={edge:g}; widen the bounds"

    sens = float(np.max(np.abs(sensitivity_profile(scenario, kt_hat))))
    return ThermometryResult(
        kt_hat=float(kt_hat),
        residual=float(best_val),
        identifiable=bool(sens >= IDENTIFIABLE_MIN),
        sensitivity=sens,
        warning=warning,
    )
