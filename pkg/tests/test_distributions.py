import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lfprior import DiscreteDistribution, EmptyDistributionError, SupportSet, merge_and_prune, reflect, validate
from lfprior.distributions import sort_atoms

UNIT = SupportSet.interval(0.0, 1.0)


def test_single_atom_is_valid():
    assert validate(DiscreteDistribution([0.5], [1.0]), UNIT) is None


def test_mass_sum_violation():
    v = validate(DiscreteDistribution([0.2, 0.8], [0.6, 0.5]), UNIT)
    assert v.invariant == "sum"
    assert "1.1" in v.detail


def test_point_outside_support():
    v = validate(DiscreteDistribution([1.5], [1.0]), UNIT)
    assert (v.invariant, v.index) == ("support", 0)


def test_first_violation_wins():
    v = validate(DiscreteDistribution([0.2, 2.0], [-0.5, 1.5]), UNIT)
    assert (v.invariant, v.index) == ("nonnegative", 0)


def test_length_mismatch_and_nonfinite():
    assert validate(DiscreteDistribution([[0.1], [0.2]], [1.0])).invariant == "length"
    assert validate(DiscreteDistribution([np.nan], [1.0])).invariant == "finite"


def test_dimension_mismatch():
    v = validate(DiscreteDistribution([[0.1, 0.2]], [1.0]), UNIT)
    assert v.invariant == "dimension"


def test_merge_close_pair_to_centroid():
    out = merge_and_prune(DiscreteDistribution([0.3, 0.3001], [0.5, 0.5]), 0.01, 0.0)
    np.testing.assert_allclose(out.points[:, 0], [0.30005], atol=1e-15)
    np.testing.assert_array_equal(out.masses, [1.0])


def test_prune_then_renormalize():
    out = merge_and_prune(DiscreteDistribution([0.1, 0.9], [1 - 1e-9, 1e-9]), 0.0, 1e-6)
    np.testing.assert_array_equal(out.points[:, 0], [0.1])
    np.testing.assert_array_equal(out.masses, [1.0])


def test_merge_identity_case():
    d = DiscreteDistribution([0.2, 0.5, 0.8], [1 / 3, 1 / 3, 1 / 3])
    assert merge_and_prune(d, 0.0, 0.0) == d


def test_merge_everything_pruned():
    with pytest.raises(EmptyDistributionError, match="empty distribution"):
        merge_and_prune(DiscreteDistribution([0.1, 0.9], [0.5, 0.5]), 0.0, 0.9)


def test_merge_keeps_mean():
    d = DiscreteDistribution([0.1, 0.1005, 0.5, 0.9, 0.9004], [0.1, 0.3, 0.2, 0.25, 0.15])
    out = merge_and_prune(d, 1e-3, 0.0)
    assert out.size == 3
    np.testing.assert_allclose(out.mean(), d.mean(), atol=1e-15)


def test_reflect_examples():
    r = reflect(DiscreteDistribution([-1.0, 2.0], [0.4, 0.6]), 0.0)
    np.testing.assert_array_equal(r.points[:, 0], [1.0, -2.0])
    np.testing.assert_array_equal(r.masses, [0.4, 0.6])
    fixed = DiscreteDistribution([0.0], [1.0])
    assert reflect(fixed, 0.0) == fixed
    np.testing.assert_array_equal(reflect(DiscreteDistribution([0.25, 0.75], [0.5, 0.5]), 0.5).points[:, 0], [0.75, 0.25])


def test_json_roundtrip_keeps_nested_points():
    d = DiscreteDistribution([0.25, 0.75], [0.5, 0.5])
    data = json.loads(json.dumps(d.to_json()))
    assert data["points"] == [[0.25], [0.75]]
    assert DiscreteDistribution.from_json(data) == d


def test_arrays_are_read_only():
    d = DiscreteDistribution([0.1, 0.2], [0.5, 0.5])
    with pytest.raises(ValueError):
        d.masses[0] = 1.0


def test_sort_atoms_lexicographic():
    d = sort_atoms(DiscreteDistribution([[0.5, 0.1], [0.2, 0.9], [0.5, 0.0]], [0.2, 0.3, 0.5]))
    np.testing.assert_array_equal(d.points, [[0.2, 0.9], [0.5, 0.0], [0.5, 0.1]])
    np.testing.assert_array_equal(d.masses, [0.3, 0.5, 0.2])


@st.composite
def priors(draw, max_atoms=8):
    d = draw(st.integers(1, max_atoms))
    pts = draw(st.lists(st.floats(0.0, 1.0), min_size=d, max_size=d))
    w = np.array(draw(st.lists(st.floats(1e-3, 1.0), min_size=d, max_size=d)))
    return DiscreteDistribution(pts, w / w.sum())


@settings(max_examples=200, deadline=None)
@given(priors(), st.floats(0.0, 0.2), st.floats(0.0, 0.1))
def test_merge_output_is_valid(dist, radius, threshold):
    if dist.masses.max() < threshold:
        return
    out = merge_and_prune(dist, radius, threshold)
    assert validate(out, UNIT) is None
    assert abs(out.masses.sum() - 1.0) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(priors())
def test_reflect_twice_about_zero_is_identity(dist):
    assert reflect(reflect(dist, 0.0), 0.0) == dist


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(0, 2**20), min_size=1, max_size=8), st.sampled_from([0.5, 0.25, -1.0, 2.0]))
def test_reflect_twice_on_dyadic_points_is_identity(ticks, center):
    # 2c - x is exact only when it is representable, which dyadic points and centers guarantee
    d = DiscreteDistribution(np.array(ticks) / 2.0**20, np.full(len(ticks), 1.0 / len(ticks)))
    assert reflect(reflect(d, center), center) == d
