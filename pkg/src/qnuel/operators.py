"""Firing operators.

A player "fires" by applying a controlled rotation to the target's qubit,
with the shooter's own qubit as control. On the shooter-alive subspace the
(shooter, target) block is::

    |11> -> e^{-i alpha} cos(theta/2) |11> + i e^{i beta} sin(theta/2) |10>
    |10> -> e^{i alpha} cos(theta/2) |10> + i e^{-i beta} sin(theta/2) |11>

and every state with a dead shooter is left alone. Operators are stored
structurally and applied by index arithmetic in O(2**n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import NDArray

from .errors import InvalidPlayer, InvalidProbability, SelfTargetError, ShapeError
from .qstate import DensityMatrix, StateVector, check_players


def wrap_angle(x: float) -> float:
    """Map an angle into [-pi, pi]; the endpoints are kept as given."""
    x = float(x)
    if -math.pi <= x <= math.pi:
        return x
    return math.remainder(x, 2 * math.pi)


@dataclass(frozen=True)
class Marksmanship:
    """Shooting accuracy, stored as the rotation angle ``theta`` in [0, pi].

    ``miss`` is the miss probability ``cos^2(theta/2)`` and
    ``hit`` its complement.
    """

    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise InvalidProbability(f"theta must lie in [0, pi], got {self.theta}")

    @classmethod
    def from_miss(cls, a: float) -> Marksmanship:
        a = float(a)
        if not 0.0 <= a <= 1.0:
            raise InvalidProbability(f"miss probability must lie in [0, 1], got {a}")
        return cls(2.0 * math.acos(math.sqrt(a)))

    @classmethod
    def from_hit(cls, h: float) -> Marksmanship:
        h = float(h)
        if not 0.0 <= h <= 1.0:
            raise InvalidProbability(f"hit probability must lie in [0, 1], got {h}")
        return cls(2.0 * math.asin(math.sqrt(h)))

    @property
    def miss(self) -> float:
        return math.cos(self.theta / 2) ** 2

    @property
    def hit(self) -> float:
        return math.sin(self.theta / 2) ** 2


@dataclass(frozen=True)
class PhaseParams:
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))
        object.__setattr__(self, "beta", wrap_angle(self.beta))


@lru_cache(maxsize=None)
def pair_indices(n: int, shooter: int, target: int) -> tuple[NDArray[np.intp], NDArray[np.intp]]:
    """Basis indices with shooter alive: (target alive, target dead) pairs."""
    k = np.arange(2**n)
    smask = 1 << (n - 1 - shooter)
    tmask = 1 << (n - 1 - target)
    idx11 = k[(k & smask != 0) & (k & tmask != 0)]
    idx10 = idx11 ^ tmask
    idx11.setflags(write=False)
    idx10.setflags(write=False)
    return idx11, idx10


def rotate(amps: NDArray, n: int, shooter: int, target: int, c, s, alpha=0.0, beta=0.0) -> NDArray:
    """Apply the firing block to ``amps`` (last axis of length 2**n).

    ``c, s, alpha, beta`` may be scalars or arrays broadcasting against the
    leading batch axes of ``amps``. Returns a new array.
    """
    idx11, idx10 = pair_indices(n, shooter, target)
    out = np.array(amps, dtype=np.complex128, copy=True)
    x11 = out[..., idx11]
    x10 = out[..., idx10]
    c = np.asarray(c)[..., None]
    s = np.asarray(s)[..., None]
    ea = np.exp(1j * np.asarray(alpha))[..., None]
    eb = np.exp(1j * np.asarray(beta))[..., None]
    out[..., idx11] = c / ea * x11 + 1j * s / eb * x10
    out[..., idx10] = 1j * s * eb * x11 + c * ea * x10
    return out


def _check_player(n: int, j: int, role: str) -> int:
    if int(j) != j or not 0 <= j < n:
        raise InvalidPlayer(f"{role} index {j} out of range for {n} players")
    return int(j)


@dataclass(frozen=True)
class FiringOp:
    n_players: int
    shooter: int
    target: int
    theta: float
    alpha: float = 0.0
    beta: float = 0.0

    def __post_init__(self):
        check_players(self.n_players)
        _check_player(self.n_players, self.shooter, "shooter")
        _check_player(self.n_players, self.target, "target")
        if self.shooter == self.target:
            raise SelfTargetError(f"player {self.shooter} cannot target themselves")
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))
        object.__setattr__(self, "beta", wrap_angle(self.beta))

    def block(self) -> NDArray[np.complex128]:
        """2x2 matrix on (target alive, target dead) with the shooter alive."""
        c, s = math.cos(self.theta / 2), math.sin(self.theta / 2)
        ea, eb = np.exp(1j * self.alpha), np.exp(1j * self.beta)
        return np.array([[c / ea, 1j * s / eb], [1j * s * eb, c * ea]])

    def apply_array(self, amps: NDArray) -> NDArray:
        return rotate(
            amps, self.n_players, self.shooter, self.target,
            math.cos(self.theta / 2), math.sin(self.theta / 2), self.alpha, self.beta,
        )

    def dense(self) -> NDArray[np.complex128]:
        """Full 2**n x 2**n matrix; for validation only."""
        return self.apply_array(np.eye(2**self.n_players, dtype=np.complex128).T).T


@dataclass(frozen=True)
class IdentityOp:
    """Firing into the air."""

    n_players: int

    def __post_init__(self):
        check_players(self.n_players)

    def apply_array(self, amps: NDArray) -> NDArray:
        return np.array(amps, dtype=np.complex128, copy=True)

    def dense(self) -> NDArray[np.complex128]:
        return np.eye(2**self.n_players, dtype=np.complex128)


Operator = FiringOp | IdentityOp


def build_firing_op(
    n: int,
    shooter: int,
    target: int,
    m: Marksmanship,
    ph: PhaseParams | None = None,
) -> FiringOp:
    ph = ph or PhaseParams()
    return FiringOp(n, shooter, target, m.theta, ph.alpha, ph.beta)


def fire_in_air(n: int) -> IdentityOp:
    return IdentityOp(n)


def apply(op: Operator, s: StateVector) -> StateVector:
    if op.n_players != s.n_players:
        raise ShapeError(f"operator on {op.n_players} players applied to {s.n_players}-player state")
    return StateVector(s.n_players, op.apply_array(s.amplitudes))


def apply_to_density(op: Operator, r: DensityMatrix) -> DensityMatrix:
    """Conjugation ``U r U^dagger``."""
    if op.n_players != r.n_players:
        raise ShapeError(f"operator on {op.n_players} players applied to {r.n_players}-player density")
    # U r: columns are acted on, so transpose to put them on the last axis.
    ur = op.apply_array(r.entries.T).T
    out = op.apply_array(ur.conj()).conj()
    return DensityMatrix(r.n_players, out)
