import math
from fractions import Fraction as F

import numpy as np
import pytest

import golden
from ifsquant.engine import enumerate_optimal_sets, optimal_set, quantization_error
from ifsquant.exceptions import CapExceeded
from ifsquant.measure import Region, closed, node_error, region_interval, tail
from ifsquant.oracle import (
    SampleBatch,
    empirical_mass,
    exhaustive_min,
    kmeans_1d_exact,
    lloyd,
    mc_distortion,
    mc_distortion_stats,
    read_batch_values,
    sample,
    write_batch,
)

BATCH = sample(300_000)


def test_sample_determinism():
    again = sample(300_000)
    assert np.array_equal(BATCH.values, again.values)
    threaded = sample(300_000, threads=4)
    assert np.array_equal(BATCH.values, threaded.values)
    other_seed = sample(10_000, seed=1)
    assert not np.array_equal(other_seed.values, sample(10_000, seed=2).values)


def test_sample_values_in_unit_interval():
    assert BATCH.values.min() >= 0.0
    assert BATCH.values.max() <= 1.0
    assert BATCH.count == BATCH.values.size == 300_000


def test_sample_rejects_bad_args():
    with pytest.raises(ValueError):
        sample(0)
    with pytest.raises(ValueError):
        sample(10, depth=0)
    with pytest.raises(ValueError):
        sample(10, seed=-1)


def test_sample_moments():
    assert abs(BATCH.values.mean() - 4 / 7) < 2e-3
    assert abs(BATCH.values.var() - 288 / 3577) < 2e-3


def test_sample_region_masses():
    assert abs(empirical_mass(BATCH, 0.5, 0.625) - 3 / 8) < 4e-3
    assert abs(empirical_mass(BATCH, 0.0, 0.25) - 1 / 4) < 4e-3
    # the support leaves the open gaps between cylinders empty
    assert empirical_mass(BATCH, 0.2500001, 0.4999999) == 0.0
    assert empirical_mass(BATCH, 0.6250001, 0.7499999) == 0.0


def test_sample_tail_support():
    # tail region of (1,) spans [1/2, 1] and carries 3/4 of the mass
    lo, hi = region_interval(tail(1))
    assert (float(lo), float(hi)) == (0.5, 1.0)
    assert abs(empirical_mass(BATCH, 0.5, 1.0) - 0.75) < 4e-3


def test_lloyd_two_means():
    result = lloyd(BATCH, 2, [0.2, 0.8])
    assert abs(result.centers[0] - 1 / 7) < 2e-3
    assert abs(result.centers[1] - 5 / 7) < 2e-3


def test_lloyd_three_means():
    result = lloyd(BATCH, 3, [0.1, 0.5, 0.9])
    exact = [1 / 7, 4 / 7, 6 / 7]
    assert max(abs(c - e) for c, e in zip(result.centers, exact)) < 2e-3


def test_lloyd_one_mean():
    result = lloyd(BATCH, 1, [0.3])
    assert abs(result.centers[0] - 4 / 7) < 1e-3


def test_lloyd_validates_init():
    with pytest.raises(ValueError):
        lloyd(BATCH, 2, [0.5])
    with pytest.raises(ValueError):
        lloyd(BATCH, 2, [0.8, 0.2])


def test_lloyd_reseeds_empty_cluster():
    xs = np.array([0.6, 0.62, 0.7, 0.9])
    crafted = SampleBatch(xs, 0, 1, xs.size)
    result = lloyd(crafted, 2, [0.1, 0.65])
    # the left cluster starts empty; reseeding must still yield two centers
    assert result.centers.size == 2
    assert result.centers[0] < result.centers[1]
    assert result.distortion < np.var(xs)


def _brute_min_cost(xs, k):
    xs = np.sort(xs)
    n = len(xs)
    prefix = np.concatenate(([0.0], np.cumsum(xs)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(xs * xs)))

    def cost(i, j):
        count = j - i + 1
        sx = prefix[j + 1] - prefix[i]
        return prefix_sq[j + 1] - prefix_sq[i] - sx * sx / count

    dp = [cost(0, j) for j in range(n)]
    for _ in range(k - 1):
        dp = [
            min(dp[i - 1] + cost(i, j) for i in range(1, j + 1))
            if j >= 1
            else math.inf
            for j in range(n)
        ]
    return dp[n - 1]


@pytest.mark.parametrize("k", [1, 2, 3, 4, 6])
def test_kmeans_matches_quadratic_dp(k):
    rng = np.random.default_rng(42 + k)
    xs = rng.random(180)
    batch = SampleBatch(xs, 0, 1, xs.size)
    result = kmeans_1d_exact(batch, k)
    expected = _brute_min_cost(xs, k) / xs.size
    got = mc_distortion(batch, result.centers)
    assert got == pytest.approx(expected, rel=1e-9, abs=1e-12)


def test_kmeans_one_mean_is_sample_mean():
    result = kmeans_1d_exact(BATCH, 1)
    assert result.centers[0] == pytest.approx(float(BATCH.values.mean()), abs=1e-15)


def test_kmeans_five_means_near_exact():
    result = kmeans_1d_exact(BATCH, 5)
    exact = [1 / 28, 5 / 28, 4 / 7, 11 / 14, 13 / 14]
    assert max(abs(c - e) for c, e in zip(result.centers, exact)) < 3e-3


@pytest.mark.parametrize("init", [(0.2, 0.8), (0.1, 0.3), (0.5, 0.9), (0.05, 0.97)])
def test_kmeans_never_worse_than_lloyd(init):
    dp = kmeans_1d_exact(BATCH, 2)
    local = lloyd(BATCH, 2, list(init))
    assert dp.distortion <= local.distortion + 1e-12


def test_kmeans_rejects_bad_k():
    with pytest.raises(ValueError):
        kmeans_1d_exact(BATCH, 0)
    small = SampleBatch(np.array([0.1, 0.2]), 0, 1, 2)
    with pytest.raises(ValueError):
        kmeans_1d_exact(small, 3)


def test_mc_distortion_two_means():
    estimate, stderr = mc_distortion_stats(BATCH, [1 / 7, 5 / 7])
    assert abs(estimate - 69 / 3577) < max(4 * stderr, 1e-3)


def test_mc_distortion_single_center():
    assert abs(mc_distortion(BATCH, [4 / 7]) - 288 / 3577) < 2e-3


def test_mc_distortion_center_order_is_irrelevant():
    a = mc_distortion(BATCH, [0.7, 0.1, 0.4])
    b = mc_distortion(BATCH, [0.1, 0.4, 0.7])
    assert a == b


def test_mc_distortion_tracks_exact_error_for_small_n():
    for n in range(1, 9):
        centers = [float(c) for c in optimal_set(n).points()]
        estimate, stderr = mc_distortion_stats(BATCH, centers)
        assert abs(estimate - float(quantization_error(n))) < 4 * stderr


def test_exhaustive_min_two_means():
    best, frontier = exhaustive_min(2)
    assert best == F(69, 3577)
    assert frontier == (closed(1), tail(1))


def test_exhaustive_min_six_means():
    best, _ = exhaustive_min(6)
    assert best == golden.GOLDEN_V[6]


def test_exhaustive_matches_greedy_and_enumeration():
    for n in range(2, 13):
        best, frontier = exhaustive_min(n)
        assert best == quantization_error(n)
        identities = frozenset((r.kind, r.word) for r in frontier)
        members = {
            frozenset(q.signature()) for q in enumerate_optimal_sets(n, cap=1000)
        }
        assert identities in members


def _all_frontier_values(n):
    # Unpruned enumeration of every split frontier of size n (deduplicated
    # by frontier identity): the oracle's oracle.
    seen = {}

    def expand(frontier: frozenset, splits_left: int):
        if splits_left == 0:
            if frontier not in seen:
                seen[frontier] = sum((node_error(r) for r in frontier), F(0))
            return
        for region in frontier:
            word = (
                region.word + (1,)
                if region.kind == "closed"
                else region.word[:-1] + (region.word[-1] + 1,)
            )
            child = (frontier - {region}) | {
                Region("closed", word),
                Region("tail", word),
            }
            expand(child, splits_left - 1)

    expand(frozenset([closed()]), n - 1)
    return seen


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_exhaustive_against_unpruned_enumeration(n):
    best, _ = exhaustive_min(n)
    assert best == min(_all_frontier_values(n).values())


def test_exhaustive_cap():
    with pytest.raises(CapExceeded):
        exhaustive_min(10, cap=5)


def test_exhaustive_rejects_out_of_range():
    with pytest.raises(ValueError):
        exhaustive_min(1)
    with pytest.raises(ValueError):
        exhaustive_min(14)


def test_batch_io_roundtrip(tmp_path):
    path = tmp_path / "batch.bin"
    small = sample(1000, depth=10, seed=7)
    write_batch(small, path)
    raw = path.read_bytes()
    assert raw[:8] == b"IFSQSMP1"
    assert int.from_bytes(raw[8:16], "little") == 1000
    values = read_batch_values(path)
    assert np.array_equal(values, small.values)


def test_batch_io_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"NOTMAGIC" + (1000).to_bytes(8, "little"))
    with pytest.raises(ValueError):
        read_batch_values(path)
    path.write_bytes(b"IFSQSMP1" + (9).to_bytes(8, "little") + b"\x00" * 16)
    with pytest.raises(ValueError):
        read_batch_values(path)
