"""Closed-form density of the best of several independent candidates.

A sampler that draws N candidate cells independently from a proposal
density and keeps the one with the highest gain induces a distribution
over cells that can be written in closed form.  Grouping cells into
classes of exactly equal gain, with ``P[f(X) < g]`` and ``P[f(X) <= g]``
the proposal mass strictly below and up to a class:

    P[Y = y] = p(y) / P[f(X) = f(y)] * (P[f(X) <= f(y)]**N - P[f(X) < f(y)]**N)

Candidates may also be rejected outright, which is modeled by cells whose
gain is -inf: they always lose against any accepted candidate, and the
event that all N candidates are rejected is redistributed according to a
caller-supplied fallback distribution over the accepted support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

#: Tolerance on the total mass of a discrete distribution.
SUM_TOL = 1e-12

#: Below this gap between adjacent cumulative masses the difference of
#: N-th powers is expanded into a product to avoid cancellation.
_POWER_GAP = 1e-8


@dataclass(frozen=True, eq=False)
class DiscreteDistribution:
    """Probabilities and gains over an explicit support of cell ids."""

    support: np.ndarray
    probabilities: np.ndarray
    gains: np.ndarray

    def __post_init__(self) -> None:
        support = np.asarray(self.support, dtype=np.int64)
        probs = np.asarray(self.probabilities, dtype=np.float64)
        gains = np.asarray(self.gains, dtype=np.float64)
        if not (support.ndim == probs.ndim == gains.ndim == 1):
            raise ValueError("support, probabilities and gains must be 1-d")
        if not (len(support) == len(probs) == len(gains)) or len(support) == 0:
            raise ValueError("support, probabilities and gains must align")
        if len(np.unique(support)) != len(support):
            raise ValueError("support ids must be unique")
        if (probs < 0).any() or not np.isfinite(probs).all():
            raise ValueError("probabilities must be finite and non-negative")
        if abs(float(probs.sum()) - 1.0) > SUM_TOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, expected 1")
        if np.isnan(gains).any():
            raise ValueError("gains must not be NaN")
        for name, arr in (("support", support), ("probabilities", probs),
                          ("gains", gains)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return len(self.support)

    def prob_of(self, cell: int) -> float:
        idx = np.nonzero(self.support == cell)[0]
        if len(idx) == 0:
            raise KeyError(f"cell {cell} not in support")
        return float(self.probabilities[idx[0]])


def _power_difference(upper: float, lower: float, n: int) -> float:
    """upper**n - lower**n, stable when the two bases nearly coincide."""
    if upper == lower:
        return 0.0
    if upper - lower < _POWER_GAP:
        total = 0.0
        for i in range(n):
            total += upper ** i * lower ** (n - 1 - i)
        return (upper - lower) * total
    if upper == 0.0:
        up = 0.0
    else:
        up = math.exp(n * math.log(upper))
    if lower == 0.0:
        low = 0.0
    else:
        low = math.exp(n * math.log(lower))
    return up - low


def _selection_probabilities(
    probs: np.ndarray, gains: np.ndarray, n: int
) -> np.ndarray:
    """Per-cell mass of the argmax-gain winner among n candidates."""
    probs = probs / probs.sum()
    order = np.argsort(gains, kind="stable")
    out = np.zeros_like(probs)
    below = 0.0
    i = 0
    while i < len(order):
        j = i
        while j < len(order) and gains[order[j]] == gains[order[i]]:
            j += 1
        members = order[i:j]
        class_mass = float(probs[members].sum())
        upto = below + class_mass
        winner_mass = _power_difference(upto, below, n)
        if class_mass > 0.0:
            out[members] = probs[members] * (winner_mass / class_mass)
        below = upto
        i = j
    return out


def best_of_k_density(d: DiscreteDistribution, n: int) -> DiscreteDistribution:
    """Distribution of the highest-gain cell among n independent draws.

    All gains must be finite; use :func:`best_of_k_with_rejection` when
    some candidates can be rejected.  With n = 1 the input is returned
    unchanged up to normalization.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    if np.isinf(d.gains).any():
        raise ValueError("gains must be finite; rejection has its own entry point")
    out = _selection_probabilities(d.probabilities, d.gains, int(n))
    return DiscreteDistribution(d.support, out, d.gains)


def best_of_k_with_rejection(
    d: DiscreteDistribution, n: int, fallback: DiscreteDistribution
) -> DiscreteDistribution:
    """Best-of-n density when cells with gain -inf reject their candidate.

    The returned distribution covers only the accepted support.  The
    probability that every candidate is rejected is redistributed over the
    accepted cells proportionally to ``fallback``, whose support must
    equal the accepted support.
    """
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise ValueError("n must be a positive integer")
    if np.isposinf(d.gains).any():
        raise ValueError("gains of +inf are not meaningful")
    rejected = np.isneginf(d.gains)
    if not rejected.any():
        return best_of_k_density(d, n)
    accepted = ~rejected
    if not accepted.any() or float(d.probabilities[accepted].sum()) == 0.0:
        raise ValueError("no acceptance mass; every candidate is rejected")

    accepted_support = d.support[accepted]
    if set(fallback.support.tolist()) != set(accepted_support.tolist()):
        raise ValueError("fallback support must equal the accepted support")
    fallback_probs = np.array(
        [fallback.prob_of(cell) for cell in accepted_support]
    )

    reject_mass = float(d.probabilities[rejected].sum())
    pooled_probs = np.concatenate([d.probabilities[accepted], [reject_mass]])
    pooled_gains = np.concatenate([d.gains[accepted], [-np.inf]])
    masses = _selection_probabilities(pooled_probs, pooled_gains, int(n))
    all_rejected = masses[-1]
    out = masses[:-1] + all_rejected * fallback_probs
    return DiscreteDistribution(accepted_support, out, d.gains[accepted])
