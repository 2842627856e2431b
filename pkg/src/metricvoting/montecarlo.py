"""Seeded i.i.d. candidate sampling and expected-distortion estimation.

Each trial draws its own counter-based RNG stream keyed by (seed, trial
index), so a run is a pure function of its inputs, trials can execute in any
order on any number of workers, and two runs over disjoint trial ranges merge
into exactly the run over the union.  Per-trial outcomes are kept (one float
per trial), and every summary statistic is a canonical reduction over the
trial-ordered array, which is what makes the merge byte-identical.
"""

from __future__ import annotations

import itertools
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._hash import trial_generator
from .elections import run_election
from .scoring import RuleFamily
from .spaces import MetricSpace, one_median

_ENUMERATION_CAP = 1_000_000


def sample_candidates(space: MetricSpace, n: int, seed: int, trial_index: int) -> np.ndarray:
    """n i.i.d. draws from the space's mass distribution (inverse CDF)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = trial_generator(seed, trial_index)
    u = rng.random(n)
    idx = np.searchsorted(space.cum_mass, u, side="right")
    return np.minimum(idx, space.npoints - 1).astype(np.int64)


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo estimate of expected distortion.

    Trials whose in-slate optimum has zero cost but whose winner does not are
    flagged infinite: they are counted in ``infinite_flag_count`` and
    excluded from the mean, never averaged.  ``winner_distance_histogram``
    maps each distinct distance r from the 1-median to the empirical
    probability that the winner lands at distance >= r.
    """

    trials: int
    trial_start: int
    mean: float
    stderr: float
    ci95_low: float
    ci95_high: float
    max_observed: float
    infinite_flag_count: int
    winner_distance_histogram: tuple
    distortions: np.ndarray = field(compare=False, repr=False, default=None)
    winner_distances: np.ndarray = field(compare=False, repr=False, default=None)


def _summarize(distortions, winner_distances, knots, trial_start) -> Estimate:
    finite = distortions[np.isfinite(distortions)]
    inf_count = int(distortions.size - finite.size)
    if finite.size:
        mean = float(np.mean(finite))
        std = float(np.std(finite, ddof=1)) if finite.size > 1 else 0.0
        stderr = std / math.sqrt(finite.size)
        max_obs = float(finite.max())
    else:
        mean = stderr = max_obs = math.nan
    hist = tuple(
        (float(r), float(np.mean(winner_distances >= r))) for r in knots
    )
    return Estimate(
        trials=int(distortions.size),
        trial_start=trial_start,
        mean=mean,
        stderr=stderr,
        ci95_low=mean - 1.96 * stderr,
        ci95_high=mean + 1.96 * stderr,
        max_observed=max_obs,
        infinite_flag_count=inf_count,
        winner_distance_histogram=hist,
        distortions=distortions,
        winner_distances=winner_distances,
    )


def _trial_batch(space, vector, n, seed, start, count, median_index):
    dstr = np.empty(count)
    wdist = np.empty(count)
    for i in range(count):
        t = start + i
        slate = sample_candidates(space, n, seed, t)
        outcome = run_election(space, slate, vector, exact=False)
        dstr[i] = float(outcome.distortion)
        wdist[i] = float(
            space.dist_block(np.asarray([median_index]), np.asarray([int(slate[outcome.winner])]))[0]
        )
    return dstr, wdist


def estimate_distortion(
    space: MetricSpace,
    family: RuleFamily,
    n: int,
    trials: int,
    seed: int,
    trial_start: int = 0,
    jobs: int = 1,
) -> Estimate:
    """Estimate expected distortion over ``trials`` independent elections."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vector = family.score_vector(n)
    median_index = one_median(space)
    knots = np.unique(space.distances_from(median_index))

    if jobs <= 1 or trials < 4:
        dstr, wdist = _trial_batch(space, vector, n, seed, trial_start, trials, median_index)
    else:
        step = -(-trials // jobs)
        ranges = [
            (trial_start + off, min(step, trials - off))
            for off in range(0, trials, step)
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    _trial_batch,
                    *zip(*[(space, vector, n, seed, s, c, median_index) for s, c in ranges]),
                )
            )
        dstr = np.concatenate([p[0] for p in parts])
        wdist = np.concatenate([p[1] for p in parts])
    return _summarize(dstr, wdist, knots, trial_start)


def merge_estimates(a: Estimate, b: Estimate) -> Estimate:
    """Combine runs over disjoint trial ranges; associative by construction."""
    first, second = (a, b) if a.trial_start <= b.trial_start else (b, a)
    if first.trial_start + first.trials > second.trial_start:
        raise ValueError("estimates overlap in trial indices")
    knots = [r for r, _ in a.winner_distance_histogram]
    return _summarize(
        np.concatenate([first.distortions, second.distortions]),
        np.concatenate([first.winner_distances, second.winner_distances]),
        knots,
        first.trial_start,
    )


def exact_expected_distortion(space: MetricSpace, family: RuleFamily, n: int):
    """Expected distortion by exhaustive enumeration of ordered slates.

    Exact rational arithmetic on exact spaces.  Zero-cost-optimum slates (the
    infinite-distortion policy) are excluded from the average and reported
    via a warning, mirroring how the Monte Carlo estimator flags them.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    npts = space.npoints
    if npts**n > _ENUMERATION_CAP:
        raise ValueError(f"P^n = {npts**n} exceeds enumeration cap {_ENUMERATION_CAP}")
    vector = family.score_vector(n)
    masses = space.mass_exact if space.exact else space.mass
    zero = Fraction(0) if space.exact else 0.0
    total = zero
    weight = zero
    infinite_mass = zero
    for slate in itertools.product(range(npts), repeat=n):
        prob = masses[slate[0]]
        for loc in slate[1:]:
            prob = prob * masses[loc]
        outcome = run_election(space, slate, vector)
        if outcome.infinite:
            infinite_mass = infinite_mass + prob
        else:
            total = total + prob * outcome.distortion
            weight = weight + prob
    if infinite_mass > 0:
        warnings.warn(
            f"excluding probability mass {float(infinite_mass):g} of zero-cost-optimum slates"
        )
    if weight == 0:
        raise ValueError("all slates have infinite distortion")
    return total / weight


@dataclass(frozen=True)
class SufficiencyCheck:
    """Empirical tail-event and winner-containment counts.

    For each grid radius r (the distinct distances from the 1-median at and
    beyond r_tilde), ``event_counts`` counts trials where more than (1-z)*n
    candidates fell outside the ball B(o, r), ``winner_outside_counts``
    counts winners outside B(o, 3r), and ``violation_counts`` counts trials
    where the tail event did NOT occur yet the winner still escaped
    B(o, 3r).  The point of the probe: escapes should only ever co-occur
    with the tail event, and the tail event itself should be rarer than
    e/(1-z) times the mass outside the radius.
    """

    z: float
    tilde_y: float
    r_tilde: float
    median_index: int
    trials: int
    radii: tuple
    outside_mass_at: tuple  # V(r) per radius
    event_counts: tuple
    winner_outside_counts: tuple
    violation_counts: tuple


def sufficiency_probe(
    space: MetricSpace,
    family: RuleFamily,
    n: int,
    trials: int,
    seed: int,
    z,
) -> SufficiencyCheck:
    """Record tail events E_r and winner escapes over a grid of radii."""
    z = float(z)
    if not 0.5 < z < 1.0:
        raise ValueError("z must lie in (1/2, 1)")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    vector = family.score_vector(n)
    median_index = one_median(space)
    dist_from_o = space.distances_from(median_index)
    knots = np.unique(dist_from_o)
    ball_mass = np.array([float(space.mass[dist_from_o <= r].sum()) for r in knots])

    tilde_y = (1.0 - 1.0 / math.e) + z / math.e
    at_least = np.nonzero(ball_mass >= tilde_y - 1e-12)[0]
    r_tilde = float(knots[at_least[0]])
    grid = knots[knots >= r_tilde]
    v_of_r = np.array([1.0 - float(space.mass[dist_from_o <= r].sum()) for r in grid])

    threshold = (1.0 - z) * n
    events = np.zeros(grid.size, dtype=np.int64)
    escapes = np.zeros(grid.size, dtype=np.int64)
    violations = np.zeros(grid.size, dtype=np.int64)
    for t in range(trials):
        slate = sample_candidates(space, n, seed, t)
        cand_d = dist_from_o[slate]
        outcome = run_election(space, slate, vector, exact=False)
        wd = float(dist_from_o[slate[outcome.winner]])
        outside = (cand_d[:, None] > grid[None, :]).sum(axis=0)
        event = outside > threshold
        escape = wd > 3.0 * grid
        events += event
        escapes += escape
        violations += (~event) & escape
    return SufficiencyCheck(
        z=z,
        tilde_y=tilde_y,
        r_tilde=r_tilde,
        median_index=int(median_index),
        trials=trials,
        radii=tuple(float(r) for r in grid),
        outside_mass_at=tuple(float(v) for v in v_of_r),
        event_counts=tuple(int(c) for c in events),
        winner_outside_counts=tuple(int(c) for c in escapes),
        violation_counts=tuple(int(c) for c in violations),
    )
