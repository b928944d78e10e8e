"""Oracle cross-checks behind ``cohtherm verify``."""

import math

import numpy as np

from .bath import BathSpec, alpha_coeff, build_rate_table, gamma_rate, time_grid
from .coherence import coherence_of, relative_entropy_of_coherence
from .config import DEFAULT_CUTOFF, DEFAULT_ETA, DEFAULT_KT
from .dynamics import Scenario, max_deviation, propagate_analytic, propagate_ode_many
from .states import StateKind, make_state


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    mask = np.abs(b) > 0
    return float(np.max(np.abs(a[mask] - b[mask]) / np.abs(b[mask])))


def zero_temperature_closed_forms(t, eta=DEFAULT_ETA, cutoff=DEFAULT_CUTOFF):
    x = cutoff * t
    return {
        "gamma": 2.0 * eta * cutoff**2 * t / (1.0 + x**2),
        "Gamma": eta * np.log1p(x**2),
        "im_alpha": -eta * cutoff**3 * t**2 / (1.0 + x**2),
        "X": eta * (x - np.arctan(x)),
    }


def run_checks(quick=False):
    t_max, samples = (50.0, 501) if quick else (200.0, 2001)
    t = time_grid(t_max, samples)
    out = []

    table = build_rate_table(BathSpec(DEFAULT_ETA, DEFAULT_CUTOFF, 0.0), t)
    for column, exact in zero_temperature_closed_forms(t).items():
        err = _rel(getattr(table, column), exact)
        out.append((f"kT=0 closed form {column}", err <= 1e-6, f"max rel err {err:.2e}"))

    hot = BathSpec(DEFAULT_ETA, DEFAULT_CUTOFF, 10.0)
    asym = 4.0 * hot.eta * hot.kT * np.arctan(hot.cutoff * t[1:])
    err = _rel(gamma_rate(t[1:], hot), asym)
    out.append(("high-T asymptote kT=10", err <= 5e-3, f"max rel err {err:.2e}"))

    probe = t[:: max(1, samples // 20)]
    for kT in (0.0, 0.5, 10.0):
        spec = BathSpec(DEFAULT_ETA, DEFAULT_CUTOFF, kT)
        err = _rel(2.0 * alpha_coeff(probe, spec).real, gamma_rate(probe, spec))
        out.append((f"Re alpha = gamma/2 at kT={kT:g}", err <= 1e-9, f"max rel err {err:.2e}"))

    for name, target in (("ghz", 2), ("w", 3), ("star", 4), ("wwbar", 6)):
        c = relative_entropy_of_coherence(make_state(name))
        dev = abs(c - math.log(target))
        out.append((f"initial C_R {name} = ln {target}", dev <= 1e-9, f"deviation {dev:.1e}"))

    kinds = ["ghz", "w", "star", "wwbar"]
    for env in ("local", "common"):
        build = Scenario.local if env == "local" else Scenario.common
        scenarios = [
            build(StateKind(k), BathSpec(DEFAULT_ETA, DEFAULT_CUTOFF, kT), t) for k in kinds for kT in DEFAULT_KT
        ]
        ode = propagate_ode_many(scenarios)
        worst = max(max_deviation(propagate_analytic(s), o) for s, o in zip(scenarios, ode))
        out.append((f"ODE vs analytic, {env} env", worst <= 1e-6, f"max elementwise diff {worst:.2e}"))

    worst = 0.0
    for kT in DEFAULT_KT:
        c = coherence_of(propagate_analytic(Scenario.common(StateKind("w"), BathSpec(0.1, 0.01, kT), t))).c_r
        worst = max(worst, float(np.max(np.abs(c - math.log(3.0)))))
    out.append(("W coherence trapping, common env", worst <= 1e-8, f"max |C_R - ln 3| {worst:.1e}"))
    return out
