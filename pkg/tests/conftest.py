from fractions import Fraction as F

import numpy as np
import pytest

from metricvoting import MetricSpace, one_median, outside_mass, social_cost


def distance_knots(space, i):
    """Sorted distinct distances from point i, with 0 prepended."""
    if space.exact:
        return sorted(set(space.matrix_exact[i]) | {F(0)})
    return sorted(set(np.unique(space.distances_from(i)).tolist()) | {0.0})


def assert_cost_identities(space, tol_float=1e-9, tol_layer=1e-12):
    """The three basic cost facts every space must satisfy: the triangle
    bound cost(i) <= cost(o) + d(i, o), the layered-cost identity
    cost(i) = sum (r_{k+1} - r_k) * outside_mass(i, r_k), and the median
    floor cost(o) >= r * outside_mass(o, r).  Exact spaces are held to
    exact (in)equality; float spaces to the stated tolerances."""
    med = one_median(space)
    med_cost = social_cost(space, med)
    for i in range(space.npoints):
        cost_i = social_cost(space, i)
        bound = med_cost + space.distance(i, med)
        if space.exact:
            assert cost_i <= bound
        else:
            assert cost_i <= bound + tol_float
        knots = distance_knots(space, i)
        layered = sum(
            (knots[k + 1] - knots[k]) * outside_mass(space, i, knots[k])
            for k in range(len(knots) - 1)
        )
        if space.exact:
            assert layered == cost_i
        else:
            assert abs(layered - cost_i) <= tol_layer
    for r in distance_knots(space, med):
        floor = r * outside_mass(space, med, r)
        if space.exact:
            assert med_cost >= floor
        else:
            assert med_cost >= floor - tol_float


@pytest.fixture
def line_space():
    """Three points on a line at 0, 1, 3 with masses 1/2, 3/10, 1/5."""
    return MetricSpace(
        [F(1, 2), F(3, 10), F(1, 5)],
        matrix=[[0, 1, 3], [1, 0, 2], [3, 2, 0]],
        label="line-0-1-3",
    )


@pytest.fixture
def asym_line_space():
    """Same line geometry, masses chosen so plurality misfires sometimes."""
    return MetricSpace(
        [F(2, 5), F(1, 4), F(7, 20)],
        matrix=[[0, 1, 3], [1, 0, 2], [3, 2, 0]],
        label="asym-line",
    )


@pytest.fixture
def two_point_space():
    return MetricSpace([F(3, 4), F(1, 4)], matrix=[[0, 1], [1, 0]])
