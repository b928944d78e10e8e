"""Coherence dynamics of three qubits under non-Markovian thermal dephasing."""

__version__ = "0.1.0"
