"""Channel laws, the message-to-point grid, and per-trial randomness.

The legitimate receiver sees ``Y = X1 + X2 + S + eta1`` and the eavesdropper
sees the degraded output ``Z = Y + eta2``.  Messages are mapped onto the
centres of ``|W|`` equal sub-intervals of [-0.5, 0.5].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng

#: Largest supported message size in bits (n * rate).
MAX_MESSAGE_BITS = 1000


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


def _check_nonneg(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0:
        raise DomainError(f"{name} must be finite and >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class ChannelParams:
    """Powers and noise/state variances of a Gaussian MAC (wiretap) model."""

    p1: float
    p2: float
    sigma1_sq: float
    sigma2_sq: float = 0.0
    q: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "sigma2_sq", "q"):
            object.__setattr__(self, name, _check_nonneg(name, getattr(self, name)))
        s1 = float(self.sigma1_sq)
        if not math.isfinite(s1) or s1 <= 0:
            raise DomainError(f"sigma1_sq must be finite and > 0, got {self.sigma1_sq!r}")
        object.__setattr__(self, "sigma1_sq", s1)

    def without_state(self) -> "ChannelParams":
        return ChannelParams(self.p1, self.p2, self.sigma1_sq, self.sigma2_sq, 0.0)


def _check_index(w, cardinality) -> tuple[int, int]:
    if isinstance(w, bool) or isinstance(cardinality, bool):
        raise DomainError("message index and cardinality must be integers")
    try:
        w_i, m_i = int(w), int(cardinality)
    except (TypeError, ValueError) as exc:
        raise DomainError("message index and cardinality must be integers") from exc
    if w_i != w or m_i != cardinality:
        raise DomainError("message index and cardinality must be integers")
    if m_i < 1:
        raise DomainError(f"cardinality must be >= 1, got {cardinality}")
    if not 1 <= w_i <= m_i:
        raise DomainError(f"message index {w} outside [1, {m_i}]")
    return w_i, m_i


def theta_of_message(w: int, cardinality: int) -> float:
    """Centre of the w-th sub-interval: -0.5 + (2w-1)/(2|W|)."""
    w_i, m_i = _check_index(w, cardinality)
    return -0.5 + (2 * w_i - 1) / (2 * m_i)


def nearest_message(theta_hat: float, cardinality: int) -> int:
    """Index of the grid point closest to ``theta_hat``.

    Evaluated in exact rational arithmetic; values outside the grid clamp to
    the end points and exact midpoints go to the smaller index.
    """
    _, m = _check_index(1, cardinality)
    x = float(theta_hat)
    if not math.isfinite(x):
        raise DomainError(f"theta_hat must be finite, got {theta_hat!r}")
    # centre of w sits at t = w - 1/2 where t = (theta + 1/2) * m
    w = math.ceil((Fraction(x) + Fraction(1, 2)) * m)
    return min(max(w, 1), m)


@dataclass(frozen=True)
class MessagePoint:
    """A message index together with its grid point."""

    w: int
    cardinality: int
    theta: float = field(init=False)

    def __post_init__(self):
        w, m = _check_index(self.w, self.cardinality)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "cardinality", m)
        object.__setattr__(self, "theta", theta_of_message(w, m))


def message_cardinality(n: int, rate: float) -> int:
    """|W| = floor(2**(n*rate)), at least 1."""
    rate = float(rate)
    if not math.isfinite(rate) or rate < 0:
        raise DomainError(f"rate must be finite and >= 0, got {rate!r}")
    bits = n * rate
    if bits > MAX_MESSAGE_BITS:
        raise DomainError(
            f"message of {bits:.1f} bits (n*rate) exceeds the {MAX_MESSAGE_BITS}-bit limit"
        )
    return max(1, int(2.0**bits))


def thetas(w: np.ndarray, cardinality: int) -> np.ndarray:
    """Vectorised ``theta_of_message`` (same rounding as the scalar form)."""
    m = int(cardinality)
    if m < 1 << 52 and w.dtype != object:
        return -0.5 + (2 * w - 1).astype(np.float64) / float(2 * m)
    return np.array([-0.5 + (2 * int(v) - 1) / (2 * m) for v in w], dtype=np.float64)


def decode_offsets(w: np.ndarray, eps: np.ndarray, cardinality: int):
    """Decisions of ``nearest_message(theta_w + eps)`` for arrays of trials.

    The receiver's estimate is the grid point plus its estimation error, so
    the decision only needs the integer shift ``ceil(eps*|W| - 1/2)`` and a
    clamp at the ends of the grid.  Working with the error directly keeps the
    decision exact even when the grid is finer than float64 resolution of
    the estimate itself.  Returns ``(decoded, correct)``.
    """
    m = int(cardinality)
    shift = np.ceil(eps * float(m) - 0.5)
    shift = np.where(np.isfinite(shift), shift, np.sign(eps) * 2.0 * m)
    if w.dtype != object:
        dec = np.clip(w + np.clip(shift, -m, m).astype(np.int64), 1, m)
    else:
        dec = np.empty(w.size, dtype=object)
        dec[:] = [min(max(int(a) + int(b), 1), m) for a, b in zip(w, shift)]
    correct = np.asarray(dec == w, dtype=bool)
    return dec, correct


def channel_step(x1, x2, s, noise1, noise2):
    """One channel use: y = x1 + x2 + s + noise1 and z = y + noise2."""
    y = x1 + x2 + s + noise1
    return y, y + noise2


@dataclass(frozen=True)
class TrialSeed:
    """Identifies the randomness of one trial."""

    master_seed: int
    trial_index: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 1 << 64:
            raise DomainError("master_seed must fit in 64 bits")
        if not 0 <= int(self.trial_index) <= rng.MAX_TRIAL:
            raise DomainError("trial_index must lie in [0, 2**32)")


TRANSCRIPT_HEADER = "t,x1,u,v,y,z,s,eta1,eta2"


@dataclass(frozen=True, eq=False)
class Transcript:
    """Full record of one trial.  Arrays are indexed by time 1..n at 0..n-1."""

    n: int
    w1: int
    w2: int
    card1: int
    card2: int
    x1: np.ndarray
    u: np.ndarray
    v: np.ndarray
    x_star: np.ndarray
    y: np.ndarray
    z: np.ndarray
    s: np.ndarray
    eta1: np.ndarray
    eta2: np.ndarray
    theta_hat_1: np.ndarray
    theta_hat_2: np.ndarray
    decoded: tuple[int, int]

    @property
    def x2(self) -> np.ndarray:
        return self.u + self.v

    def __eq__(self, other):
        if not isinstance(other, Transcript):
            return NotImplemented
        scalars = ("n", "w1", "w2", "card1", "card2", "decoded")
        arrays = ("x1", "u", "v", "x_star", "y", "z", "s", "eta1", "eta2",
                  "theta_hat_1", "theta_hat_2")
        return all(getattr(self, a) == getattr(other, a) for a in scalars) and all(
            getattr(self, a).tobytes() == getattr(other, a).tobytes() for a in arrays
        )

    __hash__ = None

    def to_csv(self) -> str:
        lines = [TRANSCRIPT_HEADER]
        for i in range(self.n):
            row = (self.x1[i], self.u[i], self.v[i], self.y[i], self.z[i],
                   self.s[i], self.eta1[i], self.eta2[i])
            lines.append(",".join([str(i + 1)] + [repr(float(c)) for c in row]))
        return "\n".join(lines) + "\n"
