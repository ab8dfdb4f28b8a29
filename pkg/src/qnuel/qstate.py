"""Liveness states of an n-player game.

Each player owns one qubit, ``|1>`` alive and ``|0>`` dead. Basis index bits
are read left to right as players 1..n, so player 0 (Alice) is the most
significant bit and ``|110>`` is index 6.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidPlayerCount, InvalidProbability, ShapeError

MAX_PLAYERS = 16
NORM_TOL = 1e-12


def check_players(n: int) -> int:
    if int(n) != n or n < 2:
        raise InvalidPlayerCount(f"need at least 2 players, got {n}")
    if n > MAX_PLAYERS:
        raise InvalidPlayerCount(f"{n} players exceeds the dense cap of {MAX_PLAYERS}")
    return int(n)


def bit_of(index: int | NDArray, player: int, n: int):
    """Liveness bit of ``player`` in basis ``index``."""
    return (index >> (n - 1 - player)) & 1


def index_to_bits(index: int, n: int) -> tuple[int, ...]:
    return tuple(int(bit_of(index, j, n)) for j in range(n))


def bits_to_index(bits) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | int(b)
    return out


def alive_table(n: int) -> NDArray[np.int8]:
    """(2**n, n) array; row k lists the liveness bits of basis state k."""
    k = np.arange(2**n)[:, None]
    return ((k >> (n - 1 - np.arange(n))[None, :]) & 1).astype(np.int8)


def _frozen(a: NDArray) -> NDArray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StateVector:
    n_players: int
    amplitudes: NDArray[np.complex128]

    def __post_init__(self):
        check_players(self.n_players)
        amps = _frozen(self.amplitudes)
        if amps.shape != (2**self.n_players,):
            raise ShapeError(f"expected {2**self.n_players} amplitudes, got shape {amps.shape}")
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return 2**self.n_players

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> NDArray[np.float64]:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, bits: str | tuple[int, ...]) -> complex:
        """Amplitude of a ket given as ``"110"`` or ``(1, 1, 0)``."""
        if isinstance(bits, str):
            bits = tuple(int(ch) for ch in bits)
        return complex(self.amplitudes[bits_to_index(bits)])

    def __repr__(self) -> str:
        terms = [
            f"({amp:.6g})|{''.join(map(str, index_to_bits(k, self.n_players)))}>"
            for k, amp in enumerate(self.amplitudes)
            if abs(amp) > 1e-15
        ]
        return "StateVector(" + " + ".join(terms) + ")"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    n_players: int
    entries: NDArray[np.complex128]

    def __post_init__(self):
        check_players(self.n_players)
        m = _frozen(self.entries)
        d = 2**self.n_players
        if m.shape != (d, d):
            raise ShapeError(f"expected ({d}, {d}) density matrix, got {m.shape}")
        object.__setattr__(self, "entries", m)

    def probabilities(self) -> NDArray[np.float64]:
        return np.real(np.diag(self.entries)).copy()

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def validate(self, tol: float = NORM_TOL, psd_tol: float = 1e-10) -> None:
        """Raise ``ShapeError`` unless Hermitian, unit trace and PSD.

        Uses a full eigendecomposition; meant for tests and debugging.
        """
        m = self.entries
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ShapeError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ShapeError(f"trace {np.trace(m)} != 1")
        if np.linalg.eigvalsh(m).min() < -psd_tol:
            raise ShapeError("density matrix is not positive semidefinite")


@dataclass(frozen=True)
class BasisOutcome:
    bits: tuple[int, ...]
    probability: float

    @property
    def label(self) -> str:
        return "".join(map(str, self.bits))

    def alive(self) -> tuple[int, ...]:
        return tuple(j for j, b in enumerate(self.bits) if b)


def all_alive(n: int) -> StateVector:
    n = check_players(n)
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[-1] = 1.0
    return StateVector(n, amps)


def basis_state(bits: str | tuple[int, ...]) -> StateVector:
    if isinstance(bits, str):
        bits = tuple(int(ch) for ch in bits)
    n = check_players(len(bits))
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[bits_to_index(bits)] = 1.0
    return StateVector(n, amps)


def measure_probabilities(s: StateVector | DensityMatrix) -> list[BasisOutcome]:
    """Computational-basis outcome distribution, one entry per basis state."""
    probs = s.probabilities()
    n = s.n_players
    return [BasisOutcome(index_to_bits(k, n), float(p)) for k, p in enumerate(probs)]


def iter_support(s: StateVector | DensityMatrix, cutoff: float = 0.0) -> Iterator[BasisOutcome]:
    for outcome in measure_probabilities(s):
        if outcome.probability > cutoff:
            yield outcome


def to_density(s: StateVector) -> DensityMatrix:
    v = s.amplitudes
    return DensityMatrix(s.n_players, np.outer(v, v.conj()))


def decohere(r: DensityMatrix, p: float) -> DensityMatrix:
    """Partial dephasing ``(1 - p) r + p diag(r)``.

    Equivalent to a full computational-basis measurement performed with
    probability ``p``.
    """
    p = check_probability(p)
    m = r.entries
    out = (1.0 - p) * m
    out[np.diag_indices_from(out)] = np.diag(m)
    return DensityMatrix(r.n_players, out)


def check_probability(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise InvalidProbability(f"probability must lie in [0, 1], got {p}")
    return p
