"""Acceptance suite: one test per shipped criterion.

Each test prints a single ``ACCEPTANCE k <name>: PASS`` line (visible with
``pytest -s``) once its assertions survive; a failing assert is the FAIL
line.  Every scenario pins its seeds and tolerances, so passes are
reproducible exactly or to the stated statistical slack.
"""

import math
import os
import time
import warnings
from fractions import Fraction as F

import pytest

from conftest import assert_cost_identities

from metricvoting import (
    MetricSpace,
    classify_by_limit,
    estimate_distortion,
    exact_expected_distortion,
    oracle_sweep,
    random_space,
    run_experiment,
    scan,
    sufficiency_probe,
)
from metricvoting.scoring import (
    Borda,
    Dowdall,
    GammaApproval,
    KApproval,
    Plurality,
    Veto,
)

JOBS = min(os.cpu_count() or 1, 4)
SEED = 2025

FAMILY_CYCLE = [Plurality(), Veto(), KApproval(3), GammaApproval(F(1, 2)), Borda(), Dowdall()]


def _passed(num, name, detail=""):
    print(f"\nACCEPTANCE {num} {name}: PASS {detail}".rstrip())


# --------------------------------------------------------------------------
# criterion 1: classification table


def test_criterion_1_classification_table():
    t0 = time.perf_counter()
    expected = {
        Borda(): "ConstantByLimit",
        GammaApproval(F(1, 2)): "ConstantByLimit",
        Plurality(): "SuperConstantByLimit",
        KApproval(3): "SuperConstantByLimit",
        Dowdall(): "SuperConstantByLimit",
        Veto(): "IndeterminateLimit",
    }
    for family, verdict in expected.items():
        assert classify_by_limit(family) == verdict, family.spec
    elapsed = time.perf_counter() - t0
    assert elapsed < 1.0
    _passed(1, "classification table", f"({elapsed:.3f}s)")


# --------------------------------------------------------------------------
# criterion 2: exact-rational condition scan


def test_criterion_2_condition_scan():
    t0 = time.perf_counter()
    verdicts = {}
    reports = {}
    for family in FAMILY_CYCLE:
        reports[family.spec] = scan(family, n_min=4, n_max=2000)
        verdicts[family.spec] = reports[family.spec].verdict.kind
    elapsed = time.perf_counter() - t0

    assert verdicts["borda"] == "CertifiedConstantWithinHorizon"
    assert verdicts["gapproval:1/2"] == "CertifiedConstantWithinHorizon"
    for spec in ("plurality", "veto", "kapproval:3", "dowdall"):
        assert verdicts[spec] == "FailsEverywhereOnGrid", spec

    def cell(spec, y, n):
        for c in reports[spec].cells:
            if c.y == y and c.n == n:
                return c
        raise AssertionError("grid cell missing")

    borda_cell = cell("borda", F(9, 10), 11)
    assert (borda_cell.lhs, borda_cell.rhs) == (F(81, 20), F(27, 50))
    assert borda_cell.holds
    plur_cell = cell("plurality", F(9, 10), 11)
    assert (plur_cell.lhs, plur_cell.rhs) == (F(9, 10), F(9, 10))
    assert not plur_cell.holds  # equality fails by strictness

    assert elapsed < 30.0
    _passed(2, "condition scan", f"({elapsed:.2f}s single-threaded)")


# --------------------------------------------------------------------------
# criterion 3: oracle equivalence


def _small_exact_scenarios():
    line = MetricSpace([F(1, 2), F(3, 10), F(1, 5)], matrix=[[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    asym = MetricSpace([F(2, 5), F(1, 4), F(7, 20)], matrix=[[0, 1, 3], [1, 0, 2], [3, 2, 0]])
    two = MetricSpace([F(3, 4), F(1, 4)], matrix=[[0, 1], [1, 0]])
    iid4 = random_space(5, 4, "iid-unit-interval-distances")
    iid5 = random_space(6, 5, "iid-unit-interval-distances")
    return [
        (line, Borda(), 3),
        (asym, Plurality(), 3),
        (asym, Veto(), 3),
        (two, Plurality(), 2),
        (two, Borda(), 3),
        (line, Dowdall(), 3),
        (line, GammaApproval(F(1, 2)), 4),
        (iid4, Borda(), 3),
        (iid4, KApproval(2), 3),
        (iid5, Veto(), 3),
    ]


def test_criterion_3_oracle_equivalence():
    sweep = oracle_sweep(trials=1000, seed=SEED)
    assert sweep.ok, sweep.mismatches[:5]

    checked = 0
    for space, family, n in _small_exact_scenarios():
        exact = exact_expected_distortion(space, family, n)
        est = estimate_distortion(space, family, n, trials=2500, seed=SEED)
        assert est.infinite_flag_count == 0
        assert abs(est.mean - float(exact)) <= 3 * est.stderr + 1e-12, family.spec
        checked += 1
    assert checked == 10
    _passed(3, "oracle equivalence", "(1000/1000 matches; 10 enumerated scenarios)")


# --------------------------------------------------------------------------
# criterion 4: basic cost-fact invariants on >= 200 spaces


def test_criterion_4_cost_fact_invariants():
    count = 0
    for seed in range(120):
        assert_cost_identities(random_space(seed, 2 + seed % 12, "iid-unit-interval-distances"))
        count += 1
    for seed in range(100):
        assert_cost_identities(random_space(seed, 5 + seed % 20, "uniform-box-L2"))
        count += 1
    assert count >= 200
    _passed(4, "basic cost facts", f"({count} spaces, exact + 1e-12 layered identity)")


# --------------------------------------------------------------------------
# criterion 5: linear distortion envelope


def test_criterion_5_linear_envelope():
    t0 = time.perf_counter()
    for seed in range(100):
        space = random_space(seed, 20, "uniform-box-L2")
        family = FAMILY_CYCLE[seed % len(FAMILY_CYCLE)]
        for n in (2, 4, 8):
            est = estimate_distortion(space, family, n, trials=200, seed=SEED + seed)
            assert est.infinite_flag_count == 0
            assert est.mean <= (n + 1) + 3 * est.stderr, (seed, family.spec, n)
    for space, family, n in _small_exact_scenarios():
        assert exact_expected_distortion(space, family, n) <= n + 1
    elapsed = time.perf_counter() - t0
    assert elapsed < 120.0
    _passed(5, "linear envelope", f"(300 estimates + 10 exact, {elapsed:.1f}s)")


# --------------------------------------------------------------------------
# criterion 6: sufficiency probes


def test_criterion_6_sufficiency_probes():
    z = 0.75
    bound_factor = math.e / (1 - z)
    for seed in range(20):
        space = random_space(seed, 20, "uniform-box-L2")
        probe = sufficiency_probe(space, Borda(), 64, trials=200, seed=SEED + seed, z=z)
        for v_r, events in zip(probe.outside_mass_at, probe.event_counts):
            p_hat = events / probe.trials
            stderr = math.sqrt(p_hat * (1 - p_hat) / probe.trials)
            assert p_hat <= bound_factor * v_r + 3 * stderr + 1e-12, seed
        assert all(v == 0 for v in probe.violation_counts), seed
    _passed(6, "sufficiency probes", "(20 spaces, tail bound + containment)")


# --------------------------------------------------------------------------
# criterion 7: adversarial necessity at full desk scale


@pytest.fixture(scope="module")
def full_scale_plurality_report():
    t0 = time.perf_counter()
    report = run_experiment(1.25, Plurality(), trials=200, seed=SEED, jobs=JOBS)
    return report, time.perf_counter() - t0


def test_criterion_7_adversarial_necessity(full_scale_plurality_report):
    report, elapsed = full_scale_plurality_report
    p = report.params
    assert (p.far_mass, p.cluster_distance, p.min_candidates) == (0.25, 5.0, 64)
    assert (p.n_candidates, p.near_locations, p.far_atoms) == (64, 64**3, 512)
    assert not report.condition_holds_at_cap  # the necessity premise holds

    pr_event = report.pr_event
    stderr_event = math.sqrt(max(pr_event * (1 - pr_event), 1e-12) / report.trials)
    assert pr_event >= 0.5 - 3 * stderr_event, pr_event

    assert report.pr_far_winner_given_event >= 0.9
    assert report.min_distortion_given_far >= 1.5 * 0.95

    assert elapsed <= 600.0
    _passed(
        7,
        "adversarial necessity",
        f"(PrE={pr_event:.3f}, PrF|E={report.pr_far_winner_given_event:.3f}, "
        f"min dstr|F={report.min_distortion_given_far:.3f}, {elapsed:.0f}s)",
    )


# --------------------------------------------------------------------------
# criterion 8: distortion growth for plurality


def _growth_rho(n: int) -> float:
    # the linear-growth adaptation of the construction: scale the target
    # distortion with n, anchored at rho = 5/4 for n = 16
    return 1.25 * n / 16


def _growth_experiment(family, n):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return run_experiment(
            _growth_rho(n), family, trials=200, seed=SEED,
            n_override=n, big_n_override=4096, m_atoms=512, jobs=JOBS,
        )


@pytest.fixture(scope="module")
def growth_reports_plurality():
    return {n: _growth_experiment(Plurality(), n) for n in (16, 32, 64)}


def test_criterion_8_plurality_growth(growth_reports_plurality):
    stats = {
        n: (rep.mean_distortion, rep.stderr_distortion)
        for n, rep in growth_reports_plurality.items()
    }
    for small, large in ((16, 32), (32, 64)):
        mean_s, err_s = stats[small]
        mean_l, err_l = stats[large]
        assert mean_l - mean_s > 3 * (err_s + err_l), (small, large, stats)
    _passed(
        8,
        "plurality growth",
        "(means " + ", ".join(f"n={n}: {m:.2f}" for n, (m, _) in sorted(stats.items())) + ")",
    )


# --------------------------------------------------------------------------
# criterion 9: every scenario above rerun with Borda stays bounded


@pytest.fixture(scope="module")
def full_scale_borda_report():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return run_experiment(1.25, Borda(), trials=200, seed=SEED, jobs=JOBS)


def test_criterion_9_borda_bounded(full_scale_borda_report, growth_reports_plurality):
    means = []  # (label, n, mean, stderr)

    for seed in range(100):
        space = random_space(seed, 20, "uniform-box-L2")
        for n in (2, 4, 8):
            est = estimate_distortion(space, Borda(), n, trials=200, seed=SEED + seed)
            means.append((f"envelope-{seed}", n, est.mean, est.stderr))

    for seed in range(20):
        space = random_space(seed, 20, "uniform-box-L2")
        est = estimate_distortion(space, Borda(), 64, trials=200, seed=SEED + seed)
        means.append((f"probe-{seed}", 64, est.mean, est.stderr))

    full = full_scale_borda_report
    assert full.condition_holds_at_cap  # control case: premise warning fired
    means.append(("adversarial-full", 64, full.mean_distortion, full.stderr_distortion))

    for n in (16, 32, 64):
        rep = _growth_experiment(Borda(), n)
        means.append((f"growth-{n}", n, rep.mean_distortion, rep.stderr_distortion))

    worst = max(m for _, _, m, _ in means)
    assert worst <= 16.0, max(means, key=lambda t: t[2])
    for label, n, mean, stderr in means:
        if n >= 64:
            assert mean <= 10.0 + 3 * stderr, (label, mean)
    _passed(9, "borda bounded", f"({len(means)} scenarios, worst mean {worst:.3f})")
