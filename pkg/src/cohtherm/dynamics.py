"""Reduced dynamics of three qubits under local or collective pure dephasing.

Two independent propagators are provided. ``propagate_analytic`` applies the
closed-form element-wise solution of the master equation; ``propagate_ode``
integrates the full matrix right-hand side with fixed-step RK4. Both work in
the lab frame, i.e. the free precession generated by H_S is kept.
"""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import __version__
from .bath import BathSpec, check_grid, rate_table
from .errors import IntegrationError, ParameterError
from .states import DIM, N_QUBITS, StateKind, basis_table, make_state

ENVIRONMENTS = ("local", "common")
CODE_VERSION = f"cohtherm-{__version__}"

_BASIS = basis_table()


@dataclass(frozen=True, eq=False)
class Scenario:
    initial: StateKind
    environment: str
    baths: tuple
    t_grid: np.ndarray = field(repr=False)
    omega0: float = 1.0

    def __post_init__(self):
        if self.environment not in ENVIRONMENTS:
            raise ParameterError(
                f"environment must be 'local' or 'common', got {self.environment!r}", field="environment"
            )
        baths = tuple(self.baths)
        expected = N_QUBITS if self.environment == "local" else 1
        if len(baths) != expected or not all(isinstance(b, BathSpec) for b in baths):
            raise ParameterError(f"{self.environment} environment needs {expected} BathSpec(s)", field="bath")
        t = check_grid(self.t_grid).copy()
        t.setflags(write=False)
        object.__setattr__(self, "baths", baths)
        object.__setattr__(self, "t_grid", t)

    @classmethod
    def local(cls, initial, bath, t_grid, omega0=1.0):
        return cls(initial, "local", (bath,) * N_QUBITS, t_grid, omega0)

    @classmethod
    def common(cls, initial, bath, t_grid, omega0=1.0):
        return cls(initial, "common", (bath,), t_grid, omega0)

    def with_kT(self, kT):
        baths = tuple(b.with_kT(kT) for b in self.baths)
        return Scenario(self.initial, self.environment, baths, self.t_grid, self.omega0)

    def canonical(self):
        t = self.t_grid
        return {
            "initial": {"name": self.initial.name, "p": self.initial.p},
            "environment": self.environment,
            "baths": [b.as_dict() for b in self.baths],
            "omega0": self.omega0,
            "grid": {"t_max": float(t[-1]), "samples": int(t.size)},
            "code": CODE_VERSION,
        }

    @property
    def digest(self):
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()


@dataclass(frozen=True, eq=False)
class Trajectory:
    t: np.ndarray
    states: np.ndarray  # (n_t, 8, 8)
    scenario_hash: str
    solver: str

    def __len__(self):
        return self.t.size

    def to_csv(self, fh=None):
        """One row per time; ``t`` then re/im pairs of the upper triangle, row-major."""
        buf = io.StringIO() if fh is None else fh
        iu, ju = np.triu_indices(DIM)
        header = ["t"]
        for i, j in zip(iu, ju):
            header += [f"re_{i}{j}", f"im_{i}{j}"]
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        upper = self.states[:, iu, ju]
        for t, row in zip(self.t, upper):
            values = [t]
            for z in row:
                values += [z.real, z.imag]
            writer.writerow([format(float(v), ".17g") for v in values])
        if fh is None:
            return buf.getvalue()


def dephasing_weight(env, m, n):
    """Exponent weight multiplying the accumulated rate for element (m, n)."""
    if not (0 <= m < DIM and 0 <= n < DIM):
        raise ParameterError(f"basis indices must lie in 0..{DIM - 1}", field="index")
    if env == "local":
        return int(np.sum(1 - _BASIS.spins[m] * _BASIS.spins[n]))
    if env == "common":
        dM = int(_BASIS.collective[m] - _BASIS.collective[n])
        return dM * dM // 2
    raise ParameterError(f"unknown environment {env!r}", field="environment")


def _weights_local():
    s = _BASIS.spins
    # (qubit, m, n): 1 - s_i(m) s_i(n)
    return 1 - s.T[:, :, None] * s.T[:, None, :]


def _tables_for(scenario, tables):
    if tables is None:
        tables = [rate_table(b, scenario.t_grid) for b in scenario.baths]
    tables = list(tables)
    if len(tables) != len(scenario.baths):
        raise ParameterError("one rate table per bath is required", field="tables")
    for tab in tables:
        if not tab.matches(scenario.t_grid):
            raise ParameterError("rate table grid does not match the scenario grid", field="t_grid")
    return tables


def _free_phase(scenario):
    M = _BASIS.collective
    dM = M[:, None] - M[None, :]
    t = scenario.t_grid
    return np.exp(-0.5j * scenario.omega0 * dM[None, :, :] * t[:, None, None])


def propagate_analytic(scenario, tables=None):
    tables = _tables_for(scenario, tables)
    rho0 = make_state(scenario.initial)
    phase = _free_phase(scenario)
    if scenario.environment == "local":
        w = _weights_local()
        Gammas = np.stack([tab.Gamma for tab in tables])  # (qubit, n_t)
        exponent = -np.einsum("qt,qmn->tmn", Gammas, w)
        factor = phase * np.exp(exponent)
    else:
        tab = tables[0]
        M = _BASIS.collective
        dM2 = (M[:, None] - M[None, :]) ** 2
        dsq = M[:, None] ** 2 - M[None, :] ** 2
        factor = (
            phase
            * np.exp(-0.5 * tab.Gamma[:, None, None] * dM2[None])
            * np.exp(1j * tab.X[:, None, None] * dsq[None])
        )
    states = rho0[None, :, :] * factor
    idx = np.arange(DIM)
    states[:, idx, idx] = rho0[idx, idx]
    states.setflags(write=False)
    return Trajectory(scenario.t_grid, states, scenario.digest, "analytic")


def _sigma_z(qubit):
    return np.diag(_BASIS.spins[:, qubit]).astype(complex)


def generator_terms(environment, omega0=1.0):
    """Master-equation right-hand side as a sum of sandwich terms.

    d rho/dt = sum_j w_j * c_j(t) * A_j @ rho @ B_j. Returns the stacks
    ``A``, ``B`` (shape (J, 8, 8)), complex weights ``w`` and the channel of
    each term; channel ``None`` marks the constant Hamiltonian part, the others
    name rate-table columns (``gamma_i`` per qubit for the local environment;
    ``gamma``, ``re_alpha``, ``im_alpha`` for the common one).
    """
    eye = np.eye(DIM, dtype=complex)
    H = 0.5 * omega0 * sum(_sigma_z(q) for q in range(N_QUBITS))
    # -i[H, rho]
    terms = [(H, eye, -1j, None), (eye, H, 1j, None)]
    if environment == "local":
        for q in range(N_QUBITS):
            sz = _sigma_z(q)
            terms += [(sz, sz, 1.0, f"gamma_{q}"), (eye, eye, -1.0, f"gamma_{q}")]
    else:
        Sz = sum(_sigma_z(q) for q in range(N_QUBITS))
        Sz2 = Sz @ Sz
        # gamma Sz rho Sz - alpha Sz^2 rho - conj(alpha) rho Sz^2
        terms += [
            (Sz, Sz, 1.0, "gamma"),
            (Sz2, eye, -1.0, "re_alpha"),
            (eye, Sz2, -1.0, "re_alpha"),
            (Sz2, eye, -1j, "im_alpha"),
            (eye, Sz2, 1j, "im_alpha"),
        ]
    A = np.stack([a for a, _, _, _ in terms])
    B = np.stack([b for _, b, _, _ in terms])
    w = np.array([c for _, _, c, _ in terms], dtype=complex)
    return A, B, w, [ch for _, _, _, ch in terms]


def _channel_samples(scenarios, channels, times):
    """Rates for each (channel, scenario) at the requested times via cubic splines."""
    out = np.empty((len(channels), len(scenarios), times.size))
    for j, sc in enumerate(scenarios):
        tables = _tables_for(sc, None)
        for k, ch in enumerate(channels):
            if ch.startswith("gamma_"):
                tab, column = tables[int(ch[-1])], "gamma"
            else:
                tab, column = tables[0], ch
            values = getattr(tab, column)
            if tab.t.size < 2:
                out[k, j] = values[0]
            else:
                out[k, j] = CubicSpline(tab.t, values)(times)
    return out


def propagate_ode_many(scenarios, substeps=8):
    """RK4 propagation of several scenarios sharing environment kind, omega0 and grid.

    The scenarios are stacked along a leading axis and stepped together, which
    is much cheaper than separate runs; each slice sees its own rates.
    """
    scenarios = list(scenarios)
    if not scenarios:
        return []
    if int(substeps) < 4:
        raise ParameterError(f"substeps must be >= 4, got {substeps}", field="substeps")
    substeps = int(substeps)
    first = scenarios[0]
    for sc in scenarios[1:]:
        if (
            sc.environment != first.environment
            or sc.omega0 != first.omega0
            or not np.array_equal(sc.t_grid, first.t_grid)
        ):
            raise ParameterError("batched scenarios must share environment, omega0 and grid")
    t = first.t_grid
    n_t = t.size
    A, B, w, term_channels = generator_terms(first.environment, first.omega0)
    channels = sorted({ch for ch in term_channels if ch is not None})

    rho = np.stack([make_state(sc.initial) for sc in scenarios]).astype(complex)
    out = np.empty((len(scenarios), n_t, DIM, DIM), dtype=complex)
    out[:, 0] = rho
    if n_t > 1:
        dt = t[1] - t[0]
        h = dt / substeps
        # rate samples at every half substep
        half_times = np.linspace(0.0, t[-1], 2 * substeps * (n_t - 1) + 1)
        rates = _channel_samples(scenarios, channels, half_times)  # (channel, scenario, time)
        # per-term coefficients, shape (time, scenario, term)
        coef = np.empty((half_times.size, len(scenarios), len(w)), dtype=complex)
        for j, ch in enumerate(term_channels):
            r = 1.0 if ch is None else rates[channels.index(ch)].T
            coef[:, :, j] = w[j] * r
        # every A_j, B_j is diagonal in the computational basis, so the sandwich
        # A rho B is rho * outer(diag A, diag B); the sum collapses to one mask per stage
        a = np.diagonal(A, axis1=1, axis2=2)
        b = np.diagonal(B, axis1=1, axis2=2)
        if not (np.allclose(A, a[:, :, None] * np.eye(DIM)) and np.allclose(B, b[:, :, None] * np.eye(DIM))):
            raise ParameterError("generator contains non-diagonal operators")
        sandwich = (a[:, :, None] * b[:, None, :]).reshape(len(w), DIM * DIM)

        def rhs(y, k):
            return (coef[k] @ sandwich).reshape(y.shape) * y

        k = 0
        for i in range(1, n_t):
            for _ in range(substeps):
                k1 = rhs(rho, k)
                k2 = rhs(rho + 0.5 * h * k1, k + 1)
                k3 = rhs(rho + 0.5 * h * k2, k + 1)
                k4 = rhs(rho + h * k3, k + 2)
                rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
                k += 2
            out[:, i] = rho

    trajectories = []
    for sc, st in zip(scenarios, out):
        _check_physical(st)
        st = np.ascontiguousarray(st)
        st.setflags(write=False)
        trajectories.append(Trajectory(sc.t_grid, st, sc.digest, "ode"))
    return trajectories


def _check_physical(states, trace_tol=1e-8, psd_tol=1e-6):
    drift = np.max(np.abs(np.trace(states, axis1=1, axis2=2) - 1.0))
    if drift > trace_tol:
        raise IntegrationError(f"trace drift {drift:.3e} exceeds {trace_tol:g}; use more substeps")
    herm = 0.5 * (states + np.conj(np.swapaxes(states, 1, 2)))
    lam_min = np.linalg.eigvalsh(herm).min()
    if lam_min < -psd_tol:
        raise IntegrationError(f"positivity violated (min eigenvalue {lam_min:.3e}); use more substeps")


def propagate_ode(scenario, substeps=8):
    return propagate_ode_many([scenario], substeps)[0]


def propagate(scenario, solver="analytic", substeps=8):
    if solver == "analytic":
        return propagate_analytic(scenario)
    if solver == "ode":
        return propagate_ode(scenario, substeps)
    raise ParameterError(f"solver must be 'analytic' or 'ode', got {solver!r}", field="solver")


def max_deviation(a, b):
    """Largest elementwise |difference| between two trajectories on the same grid."""
    if not np.array_equal(a.t, b.t):
        raise ParameterError("trajectories live on different grids", field="t_grid")
    return float(np.max(np.abs(a.states - b.states)))
