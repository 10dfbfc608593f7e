"""Credible sets, their k-enlargements, and coverage bookkeeping."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .exceptions import DimensionError
from .graphmodel import (
    ClassAssignment,
    assignment_matrix,
    make_rng,
    num_assignments,
    pairwise_k_distances,
    ring_size,
)

_CHUNK = 2048


class CoverageBound(NamedTuple):
    value: float
    vacuous: bool


def _rows_to_assignments(n, rows):
    return frozenset(ClassAssignment(n, tuple(r)) for r in rows.tolist())


def set_diameter(rows, n):
    """Largest pairwise k-distance among ``rows``; stops early at ``n // 2``."""
    rows = np.asarray(rows)
    m = rows.shape[0]
    if m <= 1:
        return 0
    top = n // 2
    best = 0
    for start in range(0, m, _CHUNK):
        d = pairwise_k_distances(rows[start:start + _CHUNK], rows, n)
        best = max(best, int(d.max()))
        if best == top:
            break
    return best


def _within_radius_of_any(universe, members, n, radius):
    hit = np.zeros(universe.shape[0], dtype=bool)
    for start in range(0, members.shape[0], _CHUNK):
        d = pairwise_k_distances(universe, members[start:start + _CHUNK], n)
        hit |= (d <= radius).any(axis=1)
    return hit


@dataclass(frozen=True, eq=False)
class CredibleSet:
    n: int
    bits: np.ndarray
    level_requested: float
    level_achieved: float
    construction: str
    diameter: int
    center: ClassAssignment | None = None
    radius: int | None = None
    approximate: bool = False

    @cached_property
    def members(self):
        return _rows_to_assignments(self.n, self.bits)

    def __contains__(self, theta):
        return theta in self.members

    def __len__(self):
        return self.bits.shape[0]


def _check_level(level):
    if not 0.0 < level <= 1.0:
        raise ValueError(f"credible level must lie in (0, 1], got {level}")


def minimal_order_credible(table, level):
    """Shortest prefix of the table, sorted by decreasing weight, reaching ``level``."""
    _check_level(level)
    order = np.argsort(-table.log_weights, kind="stable")
    cum = np.cumsum(np.exp(table.log_weights[order]))
    cum /= cum[-1]
    m = int(np.searchsorted(cum, level, side="left")) + 1
    m = min(m, cum.size)
    rows = table.bits[np.sort(order[:m])]
    return CredibleSet(
        n=table.n,
        bits=rows,
        level_requested=level,
        level_achieved=float(cum[m - 1]),
        construction="minimal-order",
        diameter=set_diameter(rows, table.n),
        approximate=table.approximate,
    )


def _ball_cumulative_mass(centers, rows, weights, n):
    """``out[c, r]`` = normalised mass of the radius-``r`` ball around ``centers[c]``."""
    top = n // 2
    out = np.empty((centers.shape[0], top + 1))
    for start in range(0, centers.shape[0], _CHUNK):
        d = pairwise_k_distances(centers[start:start + _CHUNK], rows, n)
        rings = np.stack([(d == k) @ weights for k in range(top + 1)], axis=1)
        cum = np.cumsum(rings, axis=1)
        out[start:start + _CHUNK] = cum / cum[:, -1:]
    return out


def minimal_diameter_credible(table, level, centers="exhaustive", n_centers=64, seed=0):
    """Smallest ``k``-ball (then lexicographically first centre) of mass >= ``level``.

    ``centers="exhaustive"`` tries every assignment in the table; ``"sampled"``
    tries the ``n_centers // 2`` heaviest assignments plus a seeded random
    draw from the rest, for tables too large for an exhaustive search.
    """
    _check_level(level)
    n = table.n
    rows = table.bits
    weights = np.exp(table.log_weights)
    if centers == "exhaustive":
        cand = np.arange(rows.shape[0])
    elif centers == "sampled":
        heavy = np.argsort(-table.log_weights, kind="stable")[: max(1, n_centers // 2)]
        rest = np.setdiff1d(np.arange(rows.shape[0]), heavy)
        k = min(rest.size, n_centers - heavy.size)
        extra = make_rng(seed).choice(rest, size=k, replace=False) if k > 0 else rest[:0]
        cand = np.sort(np.concatenate([heavy, extra]))
    else:
        raise ValueError(f"unknown centre search {centers!r}")
    cum = _ball_cumulative_mass(rows[cand], rows, weights, n)
    radius = np.argmax(cum >= level, axis=1)  # first radius reaching level; top always does
    best_r = int(radius.min())
    c = int(np.flatnonzero(radius == best_r)[0])  # cand is sorted, so lexicographic first
    center_row = rows[cand[c]]
    center = ClassAssignment(n, tuple(center_row.tolist()))
    inside = pairwise_k_distances(center_row[None, :], rows, n)[0] <= best_r
    members = rows[inside]
    return CredibleSet(
        n=n,
        bits=members,
        level_requested=level,
        level_achieved=float(cum[c, best_r]),
        construction="minimal-diameter",
        diameter=set_diameter(members, n),
        center=center,
        radius=best_r,
        approximate=table.approximate or centers != "exhaustive",
    )


def coverage_lower_bound(n, credible_deficit_a):
    """Frequentist coverage guaranteed for credible level ``1 - a`` under the uniform prior.

    ``1 - a / b_n`` with ``b_n = 1 / |Theta_n|``; clamped at 0 and flagged
    when ``a >= b_n``.
    """
    a = float(credible_deficit_a)
    if a < 0:
        raise ValueError("credible deficit must be non-negative")
    value = 1.0 - a * num_assignments(n)
    if value <= 0.0:
        return CoverageBound(0.0, True)
    return CoverageBound(value, False)


def ball_prior_mass(n, k_n):
    """Uniform-prior mass of a ``k_n``-ball: ``sum_{k<=k_n} |V_{n,k}| / |Theta_n|``."""
    return sum(ring_size(n, k) for k in range(k_n + 1)) / num_assignments(n)


@dataclass(frozen=True, eq=False)
class ConfidenceReport:
    credible: CredibleSet
    enlargement_radius: int
    bits: np.ndarray
    prior_mass_b: float
    coverage_lower_bound: float
    vacuous_flag: bool
    approximate: bool = False

    @cached_property
    def confidence_members(self):
        return _rows_to_assignments(self.credible.n, self.bits)

    def __contains__(self, theta):
        return theta in self.confidence_members

    @property
    def member_count(self):
        return self.bits.shape[0]

    @cached_property
    def diameter(self):
        return set_diameter(self.bits, self.credible.n)

    def to_dict(self):
        members = sorted(
            "".join(map(str, r)) for r in self.bits.tolist()
        )
        return {
            "level_requested": self.credible.level_requested,
            "level_achieved": self.credible.level_achieved,
            "diameter": self.credible.diameter,
            "k_n": self.enlargement_radius,
            "member_count": self.member_count,
            "coverage_lower_bound": self.coverage_lower_bound,
            "vacuous_flag": self.vacuous_flag,
            "members": members,
            "construction": self.credible.construction,
            "confidence_diameter": self.diameter,
            "prior_mass_b": self.prior_mass_b,
            "approximate": self.approximate,
        }


def enlarge(credible, k_n, universe=None):
    """Union of the ``k_n``-balls around every member of ``credible``.

    ``universe`` is a stack of canonical bit rows (default: all of
    ``Theta_n``).  The coverage bound reported is the one for the
    underlying credible set at deficit ``1 - level_requested``; it carries
    over since the credible set is contained in its enlargement.
    """
    n = credible.n
    if not 0 <= k_n <= n // 2:
        raise ValueError(f"k_n={k_n} outside 0..{n // 2}")
    if universe is None:
        universe = assignment_matrix(n)
    universe = np.asarray(universe)
    if universe.shape[1] != 2 * n:
        raise DimensionError("universe width does not match the credible set")
    if k_n == 0:
        rows = credible.bits
    elif k_n == n // 2:
        rows = universe
    else:
        rows = universe[_within_radius_of_any(universe, credible.bits, n, k_n)]
    bound = coverage_lower_bound(n, max(0.0, 1.0 - credible.level_requested))
    return ConfidenceReport(
        credible=credible,
        enlargement_radius=k_n,
        bits=rows,
        prior_mass_b=ball_prior_mass(n, k_n),
        coverage_lower_bound=bound.value,
        vacuous_flag=bound.vacuous,
        approximate=credible.approximate,
    )


def binomial_interval(successes, trials, z=1.959963984540054):
    """Wilson score interval for an empirical coverage frequency."""
    if trials == 0:
        return (math.nan, math.nan)
    phat = successes / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))
