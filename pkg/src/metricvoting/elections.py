"""Run one positional election on a metric space.

Voters at each location rank candidates by distance (ties broken by candidate
index, identically for all voters at a location), candidates collect
mass-weighted positional scores, and the outcome records winner, in-slate
optimum, and distortion.  On exact spaces the whole computation is exact
rational arithmetic; otherwise float64.

``brute_force_outcome`` is a deliberately naive second implementation kept
free of any shared ranking/scoring code; it exists so the fast path can be
checked against it on thousands of randomized instances.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .scoring import ScoringVector, float_scores, parse_family
from .spaces import MetricSpace, random_space

#: distance-block row chunk for large derived spaces
_CHUNK_ROWS = 65536

INFINITE = math.inf


@dataclass(frozen=True)
class ElectionOutcome:
    """Scores, winner, in-slate optimum, and distortion for one election.

    ``distortion`` is winner_cost/optimum_cost, 1 when both costs are zero,
    and ``math.inf`` (with the trial meant to be flagged, never averaged)
    when only the optimum cost is zero.  ``rankings`` is populated only on
    request: row per location, entry r gives the candidate ranked r-th.
    """

    scores: tuple
    winner: int
    optimum: int
    winner_cost: object
    optimum_cost: object
    distortion: object
    rankings: Optional[np.ndarray] = None

    @property
    def infinite(self) -> bool:
        return self.distortion == INFINITE


def _distortion(winner_cost, optimum_cost):
    if optimum_cost == 0:
        return Fraction(1) if winner_cost == 0 else INFINITE
    return winner_cost / optimum_cost


def rankings(space: MetricSpace, slate: Sequence[int]) -> np.ndarray:
    """Per-location rankings: row omega lists candidate indices by
    (distance, candidate index) ascending."""
    slate = np.asarray(slate, dtype=np.int64)
    if slate.size == 0 or slate.min() < 0 or slate.max() >= space.npoints:
        raise ValueError("slate entries must be valid point indices")
    if space.exact:
        out = np.empty((space.npoints, slate.size), dtype=np.int64)
        for omega in range(space.npoints):
            row = space.matrix_exact[omega]
            out[omega] = sorted(range(slate.size), key=lambda i: (row[slate[i]], i))
        return out
    dist = space.dist_block(np.arange(space.npoints)[:, None], slate[None, :])
    return np.argsort(dist, axis=1, kind="stable")


def run_election(
    space: MetricSpace,
    slate: Sequence[int],
    vector: ScoringVector,
    keep_rankings: bool = False,
    exact: Optional[bool] = None,
) -> ElectionOutcome:
    """Score a slate of candidate locations under one scoring vector.

    Args:
        space: the voter space.
        slate: candidate locations (point indices; duplicates allowed;
            candidate identity is array position).
        vector: scoring vector with vector.n == len(slate).
        keep_rankings: also return the per-location permutation table.
        exact: force (True) or forbid (False) exact arithmetic; default uses
            exact arithmetic exactly when the space stores rationals.
    """
    slate = list(int(c) for c in slate)
    n = len(slate)
    if n < 1:
        raise ValueError("slate must contain at least one candidate")
    if any(not 0 <= c < space.npoints for c in slate):
        raise ValueError("slate entries must be valid point indices")
    if vector.n != n:
        raise ValueError(f"scoring vector is for n={vector.n}, slate has {n}")
    if exact is None:
        exact = space.exact
    if exact and not space.exact:
        raise ValueError("exact election requires an exact space")

    if exact:
        return _run_exact(space, slate, vector, keep_rankings)
    return _run_float(space, np.asarray(slate, dtype=np.int64), vector, keep_rankings)


def _run_exact(space, slate, vector, keep_rankings):
    n = len(slate)
    scores = [Fraction(0)] * n
    costs = [Fraction(0)] * n
    table = np.empty((space.npoints, n), dtype=np.int64) if keep_rankings else None
    for omega in range(space.npoints):
        row = space.matrix_exact[omega]
        mass = space.mass_exact[omega]
        order = sorted(range(n), key=lambda i: (row[slate[i]], i))
        if table is not None:
            table[omega] = order
        for pos, cand in enumerate(order):
            scores[cand] += mass * vector.scores[pos]
        for cand in range(n):
            costs[cand] += mass * row[slate[cand]]
    winner = max(range(n), key=lambda i: (scores[i], -i))
    optimum = min(range(n), key=lambda i: (costs[i], i))
    return ElectionOutcome(
        scores=tuple(scores),
        winner=winner,
        optimum=optimum,
        winner_cost=costs[winner],
        optimum_cost=costs[optimum],
        distortion=_distortion(costs[winner], costs[optimum]),
        rankings=table,
    )


def _run_float(space, slate, vector, keep_rankings):
    n = slate.size
    svec = float_scores(vector)
    scores = np.zeros(n)
    costs = np.zeros(n)
    table = np.empty((space.npoints, n), dtype=np.int64) if keep_rankings else None
    for start in range(0, space.npoints, _CHUNK_ROWS):
        rows = np.arange(start, min(start + _CHUNK_ROWS, space.npoints))
        dist = space.dist_block(rows[:, None], slate[None, :])
        order = np.argsort(dist, axis=1, kind="stable")
        if table is not None:
            table[rows] = order
        weights = space.mass[rows][:, None] * svec[None, :]
        scores += np.bincount(order.ravel(), weights=weights.ravel(), minlength=n)
        costs += space.mass[rows] @ dist
    winner = int(np.argmax(scores))
    optimum = int(np.argmin(costs))
    return ElectionOutcome(
        scores=tuple(float(s) for s in scores),
        winner=winner,
        optimum=optimum,
        winner_cost=float(costs[winner]),
        optimum_cost=float(costs[optimum]),
        distortion=_distortion(float(costs[winner]), float(costs[optimum])),
        rankings=table,
    )


def brute_force_outcome(space: MetricSpace, slate, vector: ScoringVector) -> ElectionOutcome:
    """Naive reference election, used only to cross-check ``run_election``."""
    slate = [int(c) for c in slate]
    n = len(slate)
    if vector.n != n:
        raise ValueError(f"scoring vector is for n={vector.n}, slate has {n}")
    zero = Fraction(0) if space.exact else 0.0
    scores = [zero] * n
    costs = [zero] * n
    perms = []
    for omega in range(space.npoints):
        dists = [space.distance(omega, slate[i]) for i in range(n)]
        # selection "sort" by (distance, index), written out longhand
        remaining = list(range(n))
        order = []
        while remaining:
            best = remaining[0]
            for i in remaining[1:]:
                if dists[i] < dists[best]:
                    best = i
            remaining.remove(best)
            order.append(best)
        perms.append(tuple(order))
        m = space.mass_exact[omega] if space.exact else float(space.mass[omega])
        for pos in range(n):
            scores[order[pos]] = scores[order[pos]] + m * vector.scores[pos]
        for i in range(n):
            costs[i] = costs[i] + m * dists[i]
    winner = 0
    for i in range(1, n):
        if scores[i] > scores[winner]:
            winner = i
    optimum = 0
    for i in range(1, n):
        if costs[i] < costs[optimum]:
            optimum = i
    return ElectionOutcome(
        scores=tuple(scores),
        winner=winner,
        optimum=optimum,
        winner_cost=costs[winner],
        optimum_cost=costs[optimum],
        distortion=_distortion(costs[winner], costs[optimum]),
        rankings=np.array(perms, dtype=np.int64),
    )


@dataclass(frozen=True)
class OracleResult:
    trials: int
    matches: int
    mismatches: tuple  # (trial, description)

    @property
    def ok(self) -> bool:
        return self.matches == self.trials


_ORACLE_FAMILIES = ("plurality", "veto", "kapproval:2", "borda", "dowdall", "gapproval:1/2")


def oracle_sweep(trials: int, seed: int, max_points: int = 8, max_candidates: int = 5) -> OracleResult:
    """Compare run_election against brute_force_outcome on seeded random
    exact instances (winner, optimum, and all scores must match exactly)."""
    matches = 0
    mismatches = []
    for t in range(trials):
        rng = np.random.default_rng([101, seed, t])
        npts = int(rng.integers(2, max_points + 1))
        n = int(rng.integers(1, max_candidates + 1))
        space = random_space(int(rng.integers(0, 2**31)), npts, "iid-unit-interval-distances")
        slate = rng.integers(0, npts, size=n).tolist()
        family = parse_family(_ORACLE_FAMILIES[t % len(_ORACLE_FAMILIES)])
        vector = family.score_vector(n)
        fast = run_election(space, slate, vector)
        naive = brute_force_outcome(space, slate, vector)
        problems = []
        if fast.winner != naive.winner:
            problems.append(f"winner {fast.winner} != {naive.winner}")
        if fast.optimum != naive.optimum:
            problems.append(f"optimum {fast.optimum} != {naive.optimum}")
        if fast.scores != naive.scores:
            problems.append("scores differ")
        if fast.distortion != naive.distortion:
            problems.append("distortion differs")
        if problems:
            mismatches.append((t, "; ".join(problems)))
        else:
            matches += 1
    return OracleResult(trials, matches, tuple(mismatches))
