"""Relative entropy of coherence, in nats."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import NumericalError

EIGEN_FLOOR = 1e-12
LN8 = float(np.log(8.0))


def _entropy_of_spectrum(lam):
    lam = np.where(lam > EIGEN_FLOOR, lam, 1.0)  # floored eigenvalues contribute 0 via 1*ln(1)
    return -np.sum(lam * np.log(lam), axis=-1)


def _eigvalsh(rho):
    try:
        return np.linalg.eigvalsh(rho)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigen-decomposition failed: {exc}") from exc


def von_neumann_entropy(rho):
    """S(rho) = -sum lam ln lam; works on a single matrix or a stack (..., d, d)."""
    rho = np.asarray(rho)
    herm = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    s = _entropy_of_spectrum(_eigvalsh(herm))
    return float(s) if np.ndim(s) == 0 else s


def diagonal_entropy(rho):
    p = np.real(np.diagonal(np.asarray(rho), axis1=-2, axis2=-1))
    s = _entropy_of_spectrum(p)
    return float(s) if np.ndim(s) == 0 else s


def relative_entropy_of_coherence(rho):
    """C_R = S(diag rho) - S(rho). Vectorised over leading axes."""
    return diagonal_entropy(rho) - von_neumann_entropy(rho)


@dataclass(frozen=True, eq=False)
class CoherenceTrajectory:
    t: np.ndarray
    c_r: np.ndarray
    scenario_hash: str = ""
    solver: str = ""

    def to_csv(self, fh=None):
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "c_r"])
        for t, c in zip(self.t, self.c_r):
            writer.writerow([format(float(t), ".17g"), format(float(c), ".17g")])
        if fh is None:
            return buf.getvalue()

    @classmethod
    def from_csv(cls, fh, scenario_hash="", solver=""):
        rows = list(csv.reader(fh))
        if not rows or [h.strip() for h in rows[0]] != ["t", "c_r"]:
            raise ValueError("coherence CSV must start with header 't,c_r'")
        data = np.array([[float(x) for x in r] for r in rows[1:] if r], dtype=float).reshape(-1, 2)
        return cls(data[:, 0], data[:, 1], scenario_hash, solver)


def coherence_of(trajectory, check_tol=1e-10):
    c = np.atleast_1d(relative_entropy_of_coherence(trajectory.states))
    if np.any(c < -check_tol):
        raise NumericalError(f"negative coherence {c.min():.3e} beyond tolerance")
    if np.any(c > LN8 + check_tol):
        raise NumericalError(f"coherence {c.max():.6f} exceeds ln 8")
    c = np.clip(c, 0.0, LN8)
    c.setflags(write=False)
    return CoherenceTrajectory(trajectory.t, c, trajectory.scenario_hash, trajectory.solver)
