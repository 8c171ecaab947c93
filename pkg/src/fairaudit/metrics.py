"""Quantitative measures backing the doctrine rules.

Disparity is signed (privileged rate minus protected rate); doctrine triggers
test the signed value by default so only protected-group disadvantage fires.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, MissingGroup

Z_975 = 1.959964  # normal quantile at alpha = 0.05, two-sided


@dataclass(frozen=True)
class GroupRates:
    privileged_rate: float
    protected_rate: float
    privileged_count: int
    protected_count: int


@dataclass(frozen=True)
class DisparityStats:
    disparity: float  # privileged - protected, signed
    air: float | None  # protected / privileged; None when privileged rate is 0
    z: float
    p: float
    alpha: float
    significant: bool


def accuracy(predictions: Sequence[int], labels: Sequence[int]) -> float:
    preds = np.asarray(predictions)
    labs = np.asarray(labels)
    if preds.shape != labs.shape or preds.size == 0:
        raise LengthMismatch("predictions and labels must have equal nonzero length")
    return float(np.mean(preds == labs))


def group_rates(predictions: Sequence[int], groups: Sequence[int]) -> GroupRates:
    preds = np.asarray(predictions)
    grp = np.asarray(groups)
    if preds.shape != grp.shape:
        raise LengthMismatch("predictions and groups must have equal length")
    priv = grp == 1
    prot = grp == 0
    n_priv = int(priv.sum())
    n_prot = int(prot.sum())
    if n_priv == 0 or n_prot == 0:
        raise MissingGroup("both groups must be present")
    return GroupRates(
        privileged_rate=float(preds[priv].mean()),
        protected_rate=float(preds[prot].mean()),
        privileged_count=n_priv,
        protected_count=n_prot,
    )


def disparity_stats(rates: GroupRates, alpha: float = 0.05) -> DisparityStats:
    """Signed disparity, adverse impact ratio, and a pooled two-proportion
    z-test: z = (p1 - p0) / sqrt(pbar (1 - pbar) (1/n1 + 1/n0))."""
    p1, p0 = rates.privileged_rate, rates.protected_rate
    n1, n0 = rates.privileged_count, rates.protected_count
    disparity = p1 - p0
    air = None if p1 == 0.0 else p0 / p1

    pooled = (p1 * n1 + p0 * n0) / (n1 + n0)
    if pooled in (0.0, 1.0):
        z, p = 0.0, 1.0
    else:
        se = math.sqrt(pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n0))
        z = disparity / se
        p = math.erfc(abs(z) / math.sqrt(2.0))
    return DisparityStats(disparity, air, z, p, alpha, p <= alpha)


def normal_quantile_two_sided(alpha: float) -> float:
    """z with P(|Z| > z) = alpha, solved by bisection on erfc (no scipy)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    lo, hi = 0.0, 40.0
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if math.erfc(mid / math.sqrt(2.0)) > alpha:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2.0


def accuracy_ci(acc: float, n: int, alpha: float = 0.05) -> tuple[float, float]:
    """Normal-approximation interval acc +/- z * sqrt(acc(1-acc)/n), clipped
    to [0, 1]."""
    if n < 1 or not 0.0 <= acc <= 1.0:
        raise ValueError("need n >= 1 and acc in [0, 1]")
    z = normal_quantile_two_sided(alpha)
    half = z * math.sqrt(acc * (1.0 - acc) / n)
    return max(0.0, acc - half), min(1.0, acc + half)


def pareto_frontier(records: Sequence[tuple[float, float]]) -> list[bool]:
    """Flag records on the accuracy/disparity Pareto frontier.

    A record is dominated when another has accuracy >= and disparity <= with
    at least one strict; exact duplicates of a frontier point all stay on the
    frontier. Sweep over unique points, O(n log n).
    """
    if not records:
        return []
    pts = sorted(set(records), key=lambda t: (t[1], -t[0]))  # by disparity asc
    best_acc_at: dict[float, float] = {}
    for acc, disp in pts:
        if disp not in best_acc_at or acc > best_acc_at[disp]:
            best_acc_at[disp] = acc
    disps = sorted(best_acc_at)
    prefix_best = []  # best accuracy among strictly smaller disparities
    running = -math.inf
    for d in disps:
        prefix_best.append(running)
        running = max(running, best_acc_at[d])
    strict_left = dict(zip(disps, prefix_best))

    flags = []
    for acc, disp in records:
        dominated = strict_left[disp] >= acc or best_acc_at[disp] > acc
        flags.append(not dominated)
    return flags
