"""Discrete probability sequences over a fixed power step.

A sequence assigns probability mass to evenly spaced power states
0, q, 2q, ... N*q and is the basic currency of the stochastic pipeline:
renewable output distributions are discretized into sequences, combined
by convolution, and queried for expectations and reserve requirements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np
from scipy import integrate

__all__ = ["ProbSeq", "discretize_pdf"]

_NORM_TOL = 1e-9


def _validate_probs(probs: np.ndarray) -> None:
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probability sequence must be a non-empty 1-D array")
    if np.any(probs < -1e-15):
        raise ValueError("probability sequence has negative entries")
    total = float(probs.sum())
    if abs(total - 1.0) > _NORM_TOL:
        raise ValueError(f"probability sequence sums to {total!r}, expected 1")


@dataclass(frozen=True, eq=False)
class ProbSeq:
    """Probability mass over power states ``i * step_q`` for i = 0..N."""

    step_q: float
    probs: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if not self.step_q > 0:
            raise ValueError(f"step must be positive, got {self.step_q!r}")
        probs = np.asarray(self.probs, dtype=float)
        _validate_probs(probs)
        probs = np.where(probs < 0.0, 0.0, probs)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @property
    def n_states(self) -> int:
        """Index of the highest state (states run 0..n_states)."""
        return self.probs.size - 1

    @property
    def powers(self) -> np.ndarray:
        """Power value of every state, in kW."""
        return np.arange(self.probs.size) * self.step_q

    def expectation(self) -> float:
        """Mean power, ``q * sum(i * probs[i])``."""
        return float(self.step_q * np.dot(np.arange(self.probs.size), self.probs))

    def convolve(self, other: "ProbSeq") -> "ProbSeq":
        """Distribution of the sum of two independent sequences.

        Both operands must share the same step; the result has
        ``n_states == a.n_states + b.n_states``.
        """
        if not math.isclose(self.step_q, other.step_q, rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError(
                f"step mismatch: {self.step_q!r} vs {other.step_q!r}"
            )
        return ProbSeq(self.step_q, np.convolve(self.probs, other.probs))

    def reserve_quantile(self, alpha: float) -> float:
        """Smallest reserve R >= 0 covering the shortfall with confidence alpha.

        The shortfall at state u is ``expectation() - u * step_q``; R covers
        state u when the shortfall does not exceed R.  Returns the least
        R >= 0 whose covered states carry total probability >= alpha.
        """
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
        mean = self.expectation()
        cum = 0.0
        # Walk states from the highest output down: shortfalls ascend.
        for u in range(self.probs.size - 1, -1, -1):
            cum += float(self.probs[u])
            if cum >= alpha - 1e-12:
                return max(0.0, mean - u * self.step_q)
        return mean  # unreachable for normalized probs; defensive

    def approx_equal(self, other: "ProbSeq", tol: float = 1e-12) -> bool:
        return (
            math.isclose(self.step_q, other.step_q, rel_tol=1e-12, abs_tol=1e-12)
            and self.probs.size == other.probs.size
            and bool(np.all(np.abs(self.probs - other.probs) <= tol))
        )


def discretize_pdf(
    pdf: Callable[[float], float] | None,
    p_max: float,
    q: float,
    *,
    cdf: Callable[[float], float] | None = None,
    point_masses: Mapping[float, float] | None = None,
) -> ProbSeq:
    """Discretize a density on [0, p_max] onto the state grid of step q.

    State 0 collects [0, q/2], interior state i collects
    [i*q - q/2, i*q + q/2], and the final state collects the truncated
    upper bin up to p_max.  When ``cdf`` is given, bin masses are exact
    CDF differences; otherwise ``pdf`` is integrated adaptively to an
    absolute tolerance of 1e-9.  ``point_masses`` maps power values to
    atoms folded into their nearest state.  The result is renormalized.
    """
    if not q > 0:
        raise ValueError(f"step must be positive, got {q!r}")
    if p_max < 0:
        raise ValueError(f"maximum power must be non-negative, got {p_max!r}")
    atoms = dict(point_masses or {})
    if any(m < 0 for m in atoms.values()):
        raise ValueError("point masses must be non-negative")

    if p_max == 0:
        return ProbSeq(q, np.array([1.0]))

    n = math.ceil(p_max / q - 1e-12)
    masses = np.zeros(n + 1)

    def bin_edges(i: int) -> tuple[float, float]:
        if i == 0:
            lo, hi = 0.0, q / 2.0
        elif i < n:
            lo, hi = i * q - q / 2.0, i * q + q / 2.0
        else:
            lo, hi = n * q - q / 2.0, n * q
        return max(0.0, min(lo, p_max)), max(0.0, min(hi, p_max))

    for i in range(n + 1):
        lo, hi = bin_edges(i)
        if hi <= lo:
            continue
        if cdf is not None:
            masses[i] = cdf(hi) - cdf(lo)
        else:
            if pdf is None:
                raise ValueError("either pdf or cdf must be provided")
            val, _ = integrate.quad(pdf, lo, hi, epsabs=1e-9, limit=200)
            masses[i] = val

    for p, m in atoms.items():
        if p < -1e-9 or p > p_max + 1e-9:
            raise ValueError(f"point mass at {p!r} outside [0, {p_max!r}]")
        state = min(n, max(0, round(p / q)))
        masses[state] += m

    masses = np.where(masses < 0.0, 0.0, masses)
    total = float(masses.sum())
    if total < 1e-12:
        raise ValueError("density carries no mass on [0, p_max]")
    return ProbSeq(q, masses / total)
