"""Three-qubit initial states and computational-basis bookkeeping.

Basis order is binary ascending with qubit 1 as the leftmost symbol, so
index 4 is |100>. The sigma_z convention is sigma_z|0> = +|0>.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError

DIM = 8
N_QUBITS = 3

PURE_KINDS = ("ghz", "w", "wbar", "wwbar", "star")
MIXED_KINDS = ("mix-ghz-w", "werner-ghz", "werner-w")
KINDS = PURE_KINDS + MIXED_KINDS


@dataclass(frozen=True)
class StateKind:
    """A named initial state; ``p`` is the mixing probability for mixed kinds."""

    name: str
    p: float | None = None

    def __post_init__(self):
        if self.name not in KINDS:
            raise ParameterError(
                f"unknown state kind {self.name!r}; expected one of {', '.join(KINDS)}",
                field="state",
            )
        if self.name in PURE_KINDS:
            if self.p is not None:
                raise ParameterError(f"pure state {self.name!r} takes no mixing parameter", field="p")
        else:
            if self.p is None:
                raise ParameterError(f"mixed state {self.name!r} requires a mixing parameter p", field="p")
            p = float(self.p)
            if not np.isfinite(p) or p < 0.0 or p > 1.0:
                raise ParameterError(f"mixing parameter p={self.p!r} outside [0, 1]", field="p")
            object.__setattr__(self, "p", p)

    @property
    def is_mixed(self):
        return self.name in MIXED_KINDS

    @property
    def label(self):
        """File-name friendly label, e.g. ``ghz`` or ``werner-w-p0.5``."""
        if self.p is None:
            return self.name
        return f"{self.name}-p{self.p:g}"

    @classmethod
    def parse(cls, name, p=None):
        name = str(name).strip().lower()
        if name in PURE_KINDS:
            return cls(name)
        return cls(name, p)


@dataclass(frozen=True)
class BasisTable:
    spins: np.ndarray  # (8, 3) per-qubit sigma_z eigenvalues
    collective: np.ndarray  # (8,) S_z eigenvalues

    def __iter__(self):
        return iter(zip(self.spins, self.collective))


def basis_table():
    spins = np.empty((DIM, N_QUBITS), dtype=int)
    for m in range(DIM):
        bits = [(m >> (N_QUBITS - 1 - q)) & 1 for q in range(N_QUBITS)]
        spins[m] = [1 - 2 * b for b in bits]
    spins.setflags(write=False)
    collective = spins.sum(axis=1)
    collective.setflags(write=False)
    return BasisTable(spins=spins, collective=collective)


def ket(*labels):
    """Equal-weight superposition of the given bit strings, normalised."""
    psi = np.zeros(DIM, dtype=complex)
    for lab in labels:
        psi[int(lab, 2)] += 1.0
    return psi / np.sqrt(len(labels))


def projector(psi):
    return np.outer(psi, psi.conj())


def _pure_ket(name):
    if name == "ghz":
        return ket("000", "111")
    if name == "w":
        return ket("100", "010", "001")
    if name == "wbar":
        return ket("011", "101", "110")
    if name == "wwbar":
        return ket("100", "010", "001", "011", "101", "110")
    if name == "star":
        return ket("000", "100", "101", "111")
    raise ParameterError(f"no pure ket for {name!r}", field="state")


def make_state(kind):
    """Density matrix of ``kind`` (a StateKind, or a kind name for pure states)."""
    if isinstance(kind, str):
        kind = StateKind.parse(kind)
    if not kind.is_mixed:
        rho = projector(_pure_ket(kind.name))
    else:
        p = kind.p
        maximally_mixed = np.eye(DIM, dtype=complex) / DIM
        ghz = projector(_pure_ket("ghz"))
        w = projector(_pure_ket("w"))
        if kind.name == "mix-ghz-w":
            rho = p * ghz + (1.0 - p) * w
        elif kind.name == "werner-ghz":
            rho = p * ghz + (1.0 - p) * maximally_mixed
        else:
            rho = p * w + (1.0 - p) * maximally_mixed
    rho.setflags(write=False)
    return rho


def check_density_matrix(rho, herm_tol=1e-12, trace_tol=1e-12, psd_tol=1e-10):
    """Raise ParameterError unless ``rho`` is an 8x8 Hermitian, unit-trace, PSD matrix."""
    rho = np.asarray(rho)
    if rho.shape != (DIM, DIM):
        raise ParameterError(f"density matrix must be {DIM}x{DIM}, got {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ParameterError(f"density matrix not Hermitian (deviation {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ParameterError(f"density matrix trace {tr.real:.15g} differs from 1")
    lam_min = np.linalg.eigvalsh(rho).min()
    if lam_min < -psd_tol:
        raise ParameterError(f"density matrix not positive semidefinite (min eigenvalue {lam_min:.3e})")
    return rho


def permutation_matrix(perm):
    """Unitary that relabels qubits: qubit q of the input goes to position perm[q]."""
    P = np.zeros((DIM, DIM))
    for m in range(DIM):
        bits = [(m >> (N_QUBITS - 1 - q)) & 1 for q in range(N_QUBITS)]
        out = [0] * N_QUBITS
        for q, b in enumerate(bits):
            out[perm[q]] = b
        n = int("".join(map(str, out)), 2)
        P[n, m] = 1.0
    return P
