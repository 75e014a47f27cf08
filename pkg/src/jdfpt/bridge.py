"""Brownian-bridge first-passage results between consecutive jumps.

Between jump instants the log-asset process is a drifted Brownian motion pinned
at both ends. Working with the distance to the threshold, Y(t) = X(t) - D(t),
the pinned path is a Brownian bridge with drift mu - gamma, so the classical
constant-level bridge formulas apply exactly even for an affine threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .model import Threshold

LOG_2PI = math.log(2.0 * math.pi)


@numba.njit(cache=True, nogil=True)
def _crossing_prob(a, b, tau, sigma):
    """P(bridge from distance a to distance b over tau touches zero)."""
    if a <= 0.0 or b <= 0.0:
        return 1.0
    return math.exp(-2.0 * a * b / (tau * sigma * sigma))


@numba.njit(cache=True, nogil=True)
def _log_crossing_density(a, b, tau, drift, sigma, u):
    """log of the conditional first-passage density at elapsed time u in (0, tau).

    a, b are the start/end distances above the threshold and drift = mu - gamma.
    The density is first-passage(a -> 0 at u) * transition(0 -> b over tau - u)
    divided by the unconditional transition density a -> b over tau.
    """
    v = tau - u
    s2 = sigma * sigma
    log_y = -math.log(sigma) - 0.5 * (LOG_2PI + math.log(tau)) \
        - (b - a - drift * tau) ** 2 / (2.0 * tau * s2)
    return (
        math.log(a)
        - LOG_2PI
        - math.log(s2)
        - log_y
        - 1.5 * math.log(u)
        - 0.5 * math.log(v)
        - (b - drift * v) ** 2 / (2.0 * v * s2)
        - (a + drift * u) ** 2 / (2.0 * u * s2)
    )


@dataclass(frozen=True)
class InterjumpSegment:
    t_start: float
    t_end: float
    x_start: float  # value just after the jump at t_start
    x_end: float  # value just before the jump at t_end
    mu: float
    sigma: float
    threshold: Threshold

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError(f"segment needs t_start < t_end, got [{self.t_start}, {self.t_end}]")
        if self.sigma <= 0:
            raise ValueError("segment volatility must be positive")

    @property
    def tau(self) -> float:
        return self.t_end - self.t_start

    @property
    def start_distance(self) -> float:
        return self.x_start - self.threshold.at(self.t_start)

    @property
    def end_distance(self) -> float:
        return self.x_end - self.threshold.at(self.t_end)

    @property
    def drift(self) -> float:
        """Drift of the distance to the threshold."""
        return self.mu - self.threshold.gamma


def survival_probability(seg: InterjumpSegment) -> float:
    """Probability the bridge stays strictly above the threshold over the segment."""
    a = seg.start_distance
    if a < 0:
        raise ValueError("firm is already below its threshold at the segment start")
    b = seg.end_distance
    if b <= 0:
        return 0.0
    return -math.expm1(-2.0 * a * b / (seg.tau * seg.sigma**2))


def crossing_density(seg: InterjumpSegment, s: float) -> float:
    """Density of the first threshold crossing at time s, given both bridge endpoints.

    Integrates to ``1 - survival_probability(seg)`` over the open segment.
    """
    if not seg.t_start < s < seg.t_end:
        raise ValueError(f"crossing density is only evaluated strictly inside the segment, got s={s}")
    a = seg.start_distance
    if a < 0:
        raise ValueError("firm is already below its threshold at the segment start")
    if a == 0:
        return 0.0
    return math.exp(
        _log_crossing_density(a, seg.end_distance, seg.tau, seg.drift, seg.sigma, s - seg.t_start)
    )


@dataclass(frozen=True)
class JumpTimeline:
    """Shared jump instants with per-firm values on both sides of each jump.

    ``pre_jump[i, j]`` and ``post_jump[i, j]`` are X_i just before and after the
    (j+1)-th jump; ``x_horizon`` is the value at the horizon, where no jump occurs.
    """

    jump_times: np.ndarray
    pre_jump: np.ndarray
    post_jump: np.ndarray
    x0: np.ndarray
    x_horizon: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.jump_times, dtype=float)
        if t.size and (np.any(np.diff(t) <= 0) or t[0] <= 0 or t[-1] > self.horizon):
            raise ValueError("jump times must be strictly increasing inside (0, horizon]")

    @property
    def n_jumps(self) -> int:
        return len(self.jump_times)

    @property
    def knots(self) -> np.ndarray:
        """T_0 = 0, T_1..T_M, T_{M+1} = horizon."""
        return np.concatenate([[0.0], self.jump_times, [self.horizon]])

    def segment(self, firm: int, j: int, mu: float, sigma: float, threshold: Threshold) -> InterjumpSegment:
        """The j-th interjump segment (1-based, j = 1..M+1) of one firm."""
        m = self.n_jumps
        if not 1 <= j <= m + 1:
            raise IndexError(f"segment index {j} outside 1..{m + 1}")
        knots = self.knots
        x_start = self.x0[firm] if j == 1 else self.post_jump[firm, j - 2]
        x_end = self.x_horizon[firm] if j == m + 1 else self.pre_jump[firm, j - 1]
        return InterjumpSegment(knots[j - 1], knots[j], x_start, x_end, mu, sigma, threshold)


def first_jump_default_index(timeline: JumpTimeline, firm: int, threshold: Threshold) -> int | None:
    """Index (1-based) of the first jump that lands at or below the threshold.

    Requires every earlier pre- and post-jump value, and the pre-jump value at
    that instant, to be above the threshold. None when no such jump exists.
    """
    for j, t in enumerate(timeline.jump_times, start=1):
        d = threshold.at(t)
        if timeline.pre_jump[firm, j - 1] <= d:
            return None
        if timeline.post_jump[firm, j - 1] <= d:
            return j
    return None


def whole_horizon_density_weight(
    seg_index: int, survival_probs, first_jump_index: int | None = None
) -> tuple[float, float]:
    """Weights (on g_L(s), on the atom at T_I) for a crossing in segment L.

    The density in segment L is scaled by the survival of all earlier segments;
    when L is the first-jump default index the jump instant also carries an atom
    of mass equal to the survival through segment L.
    """
    if seg_index < 1:
        raise ValueError("segment index is 1-based")
    if first_jump_index is not None and seg_index > first_jump_index:
        return 0.0, 0.0
    p = np.asarray(survival_probs, dtype=float)
    density_w = float(np.prod(p[: seg_index - 1]))
    atom_w = float(np.prod(p[:seg_index])) if seg_index == first_jump_index else 0.0
    return density_w, atom_w


def conditional_default_mass(timeline: JumpTimeline, firm: int, mu: float, sigma: float,
                             threshold: Threshold) -> float:
    """P(default by the horizon | timeline): total mass of the whole-horizon density."""
    index = first_jump_default_index(timeline, firm, threshold)
    last = index if index is not None else timeline.n_jumps + 1
    survive = 1.0
    for j in range(1, last + 1):
        survive *= survival_probability(timeline.segment(firm, j, mu, sigma, threshold))
    return 1.0 if index is not None else 1.0 - survive
