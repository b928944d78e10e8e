"""Ohmic reservoir: spectral density, thermal dephasing coefficients and rate tables.

Units: hbar = k_B = 1, frequencies in units of the qubit frequency omega_0,
times in 1/omega_0 and temperatures as kT in units of hbar*omega_0.

The frequency integrals are done with composite Gauss-Legendre on
[0, 50*cutoff]. Both integrands are written as

    eta * exp(-w/cutoff) * thermal(w) * kernel(w, t)

where ``kernel`` holds all the time dependence and is shared between
temperatures, so a cached kernel matrix turns a whole rate table into a
handful of matrix-vector products.
"""

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import ParameterError, QuadratureError

GL_ORDER = 8
OMEGA_MAX_FACTOR = 50.0
ABS_TOL = 1e-10
REL_TOL = 1e-8
MAX_REFINEMENTS = 6
# below SERIES_SWITCH * min(kT, cutoff) the thermal factor uses its Taylor series
SERIES_SWITCH = 1e-3

_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)


@dataclass(frozen=True)
class BathSpec:
    eta: float = 0.1
    cutoff: float = 0.01
    kT: float = 0.0

    def __post_init__(self):
        for name in ("eta", "cutoff", "kT"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value}", field=name)
            object.__setattr__(self, name, value)
        if self.eta < 0.0:
            raise ParameterError(f"coupling eta must be nonnegative, got {self.eta}", field="eta")
        if self.cutoff <= 0.0:
            raise ParameterError(f"cutoff must be positive, got {self.cutoff}", field="lambda")
        if self.kT < 0.0:
            raise ParameterError(f"kT must be nonnegative, got {self.kT}", field="kT")

    def with_kT(self, kT):
        return BathSpec(self.eta, self.cutoff, kT)

    def as_dict(self):
        return {"eta": self.eta, "lambda": self.cutoff, "kT": self.kT}


def ohmic_j(omega, spec):
    """J(w) = eta * w * exp(-w / cutoff)."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0):
        raise ParameterError("spectral density is defined for omega >= 0 only", field="omega")
    out = spec.eta * omega * np.exp(-omega / spec.cutoff)
    return out if out.ndim else float(out)


def thermal_factor(omega, kT, switch=SERIES_SWITCH, cutoff=None):
    """w * coth(w / 2kT), finite at w = 0; reduces to w when kT = 0."""
    omega = np.asarray(omega, dtype=float)
    if kT == 0.0:
        return omega.copy()
    x = omega / (2.0 * kT)
    scale = kT if cutoff is None else min(kT, cutoff)
    small = omega < switch * scale
    out = np.empty_like(omega)
    out[small] = 2.0 * kT * (1.0 + x[small] ** 2 / 3.0)
    out[~small] = omega[~small] / np.tanh(x[~small])
    return out


def _panel_count(cutoff, t_max):
    width = cutoff / 4.0
    if t_max > 0:
        width = min(width, math.pi / (4.0 * t_max))
    return int(math.ceil(OMEGA_MAX_FACTOR * cutoff / width))


@lru_cache(maxsize=32)
def _nodes(cutoff, n_panels):
    edges = np.linspace(0.0, OMEGA_MAX_FACTOR * cutoff, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    omega = (mid[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    omega.setflags(write=False)
    weights.setflags(write=False)
    return omega, weights


def _kernel(t_key, cutoff, n_panels, which):
    t = np.frombuffer(t_key, dtype=float)
    omega, _ = _nodes(cutoff, n_panels)
    arg = np.outer(t, omega)
    if which == "sin":
        # sin(w t) / w, written through sinc so w -> 0 is exact
        return t[:, None] * np.sinc(arg / np.pi)
    # 1 - cos(w t), cancellation-free form
    return 2.0 * np.sin(0.5 * arg) ** 2


# only the temperature-dependent kernel is worth keeping; Im alpha is cached as a result
_sin_kernel = lru_cache(maxsize=4)(lambda t_key, cutoff, n_panels: _kernel(t_key, cutoff, n_panels, "sin"))


def _integrate(t, spec, which, thermal, switch=SERIES_SWITCH):
    """Adaptive composite Gauss-Legendre; refines by panel doubling until two levels agree."""
    t = np.ascontiguousarray(t, dtype=float)
    t_key = t.tobytes()
    n = _panel_count(spec.cutoff, float(t.max()) if t.size else 0.0)

    def level(n_panels):
        omega, weights = _nodes(spec.cutoff, n_panels)
        f = spec.eta * np.exp(-omega / spec.cutoff)
        if thermal:
            f = f * thermal_factor(omega, spec.kT, switch=switch, cutoff=spec.cutoff)
        if which == "sin":
            kernel = _sin_kernel(t_key, spec.cutoff, n_panels)
        else:
            kernel = _kernel(t_key, spec.cutoff, n_panels, which)
        return kernel @ (weights * f)

    coarse = level(n)
    for _ in range(MAX_REFINEMENTS):
        n *= 2
        fine = level(n)
        err = np.abs(fine - coarse)
        if np.all(err <= np.maximum(ABS_TOL, REL_TOL * np.abs(fine))):
            return fine
        coarse = fine
    achieved = float(np.max(err / np.maximum(np.abs(fine), 1.0)))
    raise QuadratureError("frequency quadrature did not converge", achieved)


def _check_times(t):
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t < 0) or not np.all(np.isfinite(t)):
        raise ParameterError("times must be finite and nonnegative", field="t")
    return t


def _scalar_or_array(values, like):
    return float(values[0]) if np.ndim(like) == 0 else values


def gamma_rate(t, spec, switch=SERIES_SWITCH):
    """gamma(t) = 2 int_0^inf J(w) coth(w/2kT) sin(w t)/w dw; accepts scalars or arrays."""
    tt = _check_times(t)
    return _scalar_or_array(2.0 * _integrate(tt, spec, "sin", True, switch), t)


def alpha_coeff(t, spec):
    """Complex coefficient of the collective dephasing equation.

    Re alpha = int J coth(w/2kT) sin(w t)/w dw,  Im alpha = -int J (1 - cos w t)/w dw.
    """
    tt = _check_times(t)
    re = _integrate(tt, spec, "sin", True)
    im = _im_alpha(np.ascontiguousarray(tt).tobytes(), spec.eta, spec.cutoff)
    out = re + 1j * im
    return complex(out[0]) if np.ndim(t) == 0 else out


@lru_cache(maxsize=8)
def _im_alpha(t_key, eta, cutoff):
    # temperature independent, so shared by every kT on the same grid
    t = np.frombuffer(t_key, dtype=float)
    out = -_integrate(t, BathSpec(eta, cutoff, 0.0), "cos", False)
    out.setflags(write=False)
    return out


def check_grid(t_grid):
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size == 0:
        raise ParameterError("time grid must be a nonempty 1-D sequence", field="t_grid")
    if not np.all(np.isfinite(t)):
        raise ParameterError("time grid contains non-finite values", field="t_grid")
    if t[0] != 0.0:
        raise ParameterError(f"time grid must start at 0, starts at {t[0]}", field="t_grid")
    if t.size > 1:
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise ParameterError("time grid must be strictly increasing", field="t_grid")
        if np.max(np.abs(dt - dt[0])) > 1e-9 * dt[0] + 1e-12 * t[-1]:
            raise ParameterError("time grid must be uniform", field="t_grid")
    return t


def time_grid(t_max, samples):
    if samples < 2:
        raise ParameterError(f"samples must be >= 2, got {samples}", field="samples")
    if not (t_max > 0 and math.isfinite(t_max)):
        raise ParameterError(f"t_max must be positive and finite, got {t_max}", field="t_max")
    return np.linspace(0.0, float(t_max), int(samples))


def _cumulative(fine, t):
    """Running integral from rates sampled on the half-step grid (Simpson per interval)."""
    if t.size == 1:
        return np.zeros(1)
    h = t[1] - t[0]
    left, mid, right = fine[:-1:2], fine[1::2], fine[2::2]
    return np.concatenate(([0.0], np.cumsum(h / 6.0 * (left + 4.0 * mid + right))))


@dataclass(frozen=True, eq=False)
class RateTable:
    spec: BathSpec
    t: np.ndarray
    gamma: np.ndarray
    re_alpha: np.ndarray
    im_alpha: np.ndarray
    Gamma: np.ndarray
    X: np.ndarray

    COLUMNS = ("t", "gamma", "re_alpha", "im_alpha", "Gamma", "X")

    def matches(self, t_grid):
        t_grid = np.asarray(t_grid, dtype=float)
        return t_grid.shape == self.t.shape and np.array_equal(t_grid, self.t)

    def interpolators(self):
        """Cubic splines for (gamma, -Im alpha) for evaluation between grid points."""
        if self.t.size < 2:
            raise ParameterError("interpolation needs at least two grid points", field="t_grid")
        return CubicSpline(self.t, self.gamma), CubicSpline(self.t, -self.im_alpha)

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        cols = [getattr(self, c) for c in self.COLUMNS]
        for row in zip(*cols):
            writer.writerow([format(float(v), ".17g") for v in row])
        if fh is None:
            return buf.getvalue()


def build_rate_table(spec, t_grid):
    t = check_grid(t_grid)
    if t.size > 1:
        fine_t = np.linspace(0.0, t[-1], 2 * t.size - 1)
        fine_t[::2] = t
    else:
        fine_t = t
    half_gamma = _integrate(fine_t, spec, "sin", True)
    im_alpha = _im_alpha(np.ascontiguousarray(fine_t).tobytes(), spec.eta, spec.cutoff)
    gamma = 2.0 * half_gamma
    arrays = dict(
        t=t.copy(),
        gamma=gamma[::2].copy(),
        re_alpha=half_gamma[::2].copy(),
        im_alpha=im_alpha[::2].copy(),
        Gamma=_cumulative(gamma, t),
        X=_cumulative(-im_alpha, t),
    )
    for a in arrays.values():
        a.setflags(write=False)
    return RateTable(spec=spec, **arrays)


@lru_cache(maxsize=128)
def _cached_table(spec, t_key):
    return build_rate_table(spec, np.frombuffer(t_key, dtype=float))


def rate_table(spec, t_grid):
    """Memoised build_rate_table keyed by (spec, grid); tables are read-only."""
    t = np.ascontiguousarray(t_grid, dtype=float)
    return _cached_table(spec, t.tobytes())
