"""Independent numerical checks for the exact engine.

Sampling follows the measure's letter distribution directly (ancestral
truncation), Lloyd iteration and the exact 1-D k-means DP see only float
samples, and the exhaustive search walks every split frontier of a given
size; none of them trust the greedy selection rule they are used to check.
"""

from __future__ import annotations

import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import measure
from .exceptions import CapExceeded
from .measure import CLOSED, TAIL, Region

CHUNK_SIZE = 65536
BATCH_MAGIC = b"IFSQSMP1"
DEFAULT_DEPTH = 40
DEFAULT_SEED = 20240317

_LEAF = 64  # divide-and-conquer switches to a 2-D block below this width


@dataclass(frozen=True)
class SampleBatch:
    """Deterministic float samples of the measure.

    values is a read-only float64 array, a pure function of
    (seed, depth, count) regardless of thread count.
    """

    values: np.ndarray
    seed: int
    depth: int
    count: int


def _letters(u: np.ndarray) -> np.ndarray:
    # Invert the letter CDF: mass of letters <= j is 1 - 3/2^(j+1), so a
    # uniform u lands on letter floor(log2(3/(1-u))).
    j = np.floor(np.log2(3.0 / (1.0 - u))).astype(np.int64)
    return np.maximum(j, 1)


def _chunk_values(seed: int, index: int, size: int, depth: int) -> np.ndarray:
    rng = np.random.default_rng([seed, index])
    uniforms = rng.random((depth, size))
    x = np.full(size, 4.0 / 7.0)
    for level in range(depth - 1, -1, -1):
        letters = _letters(uniforms[level])
        scale = np.ldexp(1.0, -(letters + 1))
        x = scale * x + 1.0 - np.ldexp(1.0, -(letters - 1))
    return x


def sample(
    count: int,
    depth: int = DEFAULT_DEPTH,
    seed: int = DEFAULT_SEED,
    threads: int = 1,
) -> SampleBatch:
    """Draw `count` samples: each composes `depth` random letter maps
    applied to the global mean.

    Letters come from the exact inverse CDF, so the infinite alphabet needs
    no truncation; at the default depth the truncation displacement is below
    2^-80.  Values are produced in fixed 65536-wide chunks seeded by
    (seed, chunk index) and concatenated in chunk order, which makes the
    result identical for any thread count.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    sizes = [
        min(CHUNK_SIZE, count - start) for start in range(0, count, CHUNK_SIZE)
    ]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(
                    lambda pair: _chunk_values(seed, pair[0], pair[1], depth),
                    enumerate(sizes),
                )
            )
    else:
        parts = [
            _chunk_values(seed, index, size, depth)
            for index, size in enumerate(sizes)
        ]
    values = np.concatenate(parts) if len(parts) > 1 else parts[0]
    values.setflags(write=False)
    return SampleBatch(values, seed, depth, count)


def empirical_mass(batch: SampleBatch, lo: float, hi: float) -> float:
    """Fraction of samples falling in [lo, hi]."""
    return float(np.mean((batch.values >= lo) & (batch.values <= hi)))


def _min_sq(batch: SampleBatch, centers) -> np.ndarray:
    c = np.sort(np.asarray(centers, dtype=float))
    if c.size == 0:
        raise ValueError("need at least one center")
    mids = (c[1:] + c[:-1]) / 2.0
    idx = np.searchsorted(mids, batch.values)
    diff = batch.values - c[idx]
    return diff * diff


def mc_distortion(batch: SampleBatch, centers) -> float:
    """Mean over samples of the squared distance to the nearest center."""
    return float(_min_sq(batch, centers).mean())


def mc_distortion_stats(batch: SampleBatch, centers) -> tuple[float, float]:
    """(estimate, standard error) of the Monte Carlo distortion."""
    d = _min_sq(batch, centers)
    return float(d.mean()), float(d.std(ddof=1) / math.sqrt(d.size))


@dataclass(frozen=True)
class ClusterResult:
    """Centers with the empirical (nearest-center) distortion on the batch.

    iterations counts Lloyd sweeps; it is 0 for the exact DP solver.
    """

    centers: np.ndarray
    distortion: float
    iterations: int = 0


def lloyd(
    batch: SampleBatch,
    k: int,
    init,
    max_iters: int = 200,
    tol: float = 1e-10,
) -> ClusterResult:
    """Alternate nearest-center assignment and cluster means until the
    largest center movement drops below `tol`.

    Empty-cluster policy: the center is reseeded at the sample point
    farthest from its assigned center, and iteration continues.
    """
    centers = np.array(init, dtype=float)
    if centers.size != k:
        raise ValueError(f"init must supply {k} centers, got {centers.size}")
    if k > 1 and not np.all(np.diff(centers) > 0):
        raise ValueError("init must be strictly increasing")
    xs = batch.values
    if k > xs.size:
        raise ValueError(f"k={k} exceeds sample count {xs.size}")
    iterations = 0
    for iterations in range(1, max_iters + 1):
        mids = (centers[1:] + centers[:-1]) / 2.0
        idx = np.searchsorted(mids, xs)
        counts = np.bincount(idx, minlength=k)
        if np.any(counts == 0):
            d2 = (xs - centers[idx]) ** 2
            for empty in np.nonzero(counts == 0)[0]:
                farthest = int(np.argmax(d2))
                centers[empty] = xs[farthest]
                d2[farthest] = -1.0  # do not reuse the same point
            centers = np.sort(centers)
            continue
        sums = np.bincount(idx, weights=xs, minlength=k)
        updated = np.sort(sums / counts)
        movement = float(np.max(np.abs(updated - centers)))
        centers = updated
        if movement < tol:
            break
    return ClusterResult(centers, mc_distortion(batch, centers), iterations)


_BLOCK_LIMIT = 1 << 22  # max elements for one 2-D block evaluation


def _scan_one(dp_prev, prefix, prefix_sq, j, ilo, ihi):
    cands = np.arange(ilo, min(ihi, j) + 1)
    sums = prefix[j + 1] - prefix[cands]
    costs = (
        dp_prev[cands - 1]
        + prefix_sq[j + 1]
        - prefix_sq[cands]
        - sums * sums / (j + 1 - cands)
    )
    pick = int(np.argmin(costs))
    return float(costs[pick]), int(cands[pick])


def _fill_block(dp_prev, dp_new, opt, prefix, prefix_sq, jlo, jhi, ilo, ihi):
    # The block's candidate window narrows to [opt(jlo), opt(jhi)]; on the
    # long plateaus of this data that usually collapses to a single column.
    dp_new[jlo], opt[jlo] = _scan_one(dp_prev, prefix, prefix_sq, jlo, ilo, ihi)
    if jhi == jlo:
        return
    lo_opt = int(opt[jlo])
    dp_new[jhi], opt[jhi] = _scan_one(dp_prev, prefix, prefix_sq, jhi, lo_opt, ihi)
    if jhi - jlo == 1:
        return
    hi_opt = int(opt[jhi])
    js = np.arange(jlo + 1, jhi)
    cands = np.arange(lo_opt, min(hi_opt, jhi - 1) + 1)
    if js.size * cands.size > _BLOCK_LIMIT:
        # Rare wide window (a plateau jump): scan row by row, narrowing as
        # the monotone optimum advances, instead of materializing a huge
        # 2-D block.
        running = lo_opt
        for j in range(jlo + 1, jhi):
            dp_new[j], opt[j] = _scan_one(
                dp_prev, prefix, prefix_sq, j, running, hi_opt
            )
            running = int(opt[j])
        return
    counts = js[:, None] - cands[None, :] + 1
    sums = prefix[js + 1][:, None] - prefix[cands][None, :]
    costs = (
        dp_prev[cands - 1][None, :]
        + prefix_sq[js + 1][:, None]
        - prefix_sq[cands][None, :]
        - sums * sums / np.maximum(counts, 1)
    )
    costs[counts < 1] = np.inf
    pick = np.argmin(costs, axis=1)
    dp_new[js] = costs[np.arange(js.size), pick]
    opt[js] = cands[pick]


def _fill_row(dp_prev, dp_new, opt, first, prefix, prefix_sq):
    # Optimal last-cluster start positions are monotone in the right
    # endpoint, so each row fills by divide and conquer on the endpoint.
    n = dp_new.size
    stack = [(first, n - 1, first, n - 1)]
    while stack:
        jlo, jhi, ilo, ihi = stack.pop()
        if jlo > jhi:
            continue
        if jhi - jlo <= _LEAF:
            _fill_block(dp_prev, dp_new, opt, prefix, prefix_sq, jlo, jhi, ilo, ihi)
            continue
        mid = (jlo + jhi) // 2
        cands = np.arange(ilo, min(ihi, mid) + 1)
        sums = prefix[mid + 1] - prefix[cands]
        costs = (
            dp_prev[cands - 1]
            + prefix_sq[mid + 1]
            - prefix_sq[cands]
            - sums * sums / (mid + 1 - cands)
        )
        pick = int(np.argmin(costs))
        dp_new[mid] = costs[pick]
        best = int(cands[pick])
        opt[mid] = best
        stack.append((jlo, mid - 1, ilo, best))
        stack.append((mid + 1, jhi, best, ihi))


def kmeans_1d_exact(batch: SampleBatch, k: int) -> ClusterResult:
    """Globally optimal k-clustering of the sample under squared error.

    Interval dynamic programming over the sorted sample: the cost of any
    contiguous run comes from prefix sums in O(1), and each DP row fills in
    O(n log n) via divide and conquer over the monotone split positions.
    """
    xs = np.sort(batch.values)
    n = int(xs.size)
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    if k == 1:
        centers = np.array([float(xs.mean())])
        return ClusterResult(centers, mc_distortion(batch, centers))
    prefix = np.concatenate(([0.0], np.cumsum(xs)))
    prefix_sq = np.concatenate(([0.0], np.cumsum(xs * xs)))
    dp = prefix_sq[1:] - prefix[1:] ** 2 / np.arange(1, n + 1)
    opts: list[np.ndarray] = []
    for row in range(2, k + 1):
        dp_new = np.full(n, np.inf)
        opt = np.zeros(n, dtype=np.int64)
        _fill_row(dp, dp_new, opt, row - 1, prefix, prefix_sq)
        opts.append(opt)
        dp = dp_new
    starts = []
    j = n - 1
    for row in range(k, 1, -1):
        i = int(opts[row - 2][j])
        starts.append(i)
        j = i - 1
    starts.reverse()
    bounds = [0] + starts + [n]
    centers = np.array(
        [float(xs[a:b].mean()) for a, b in zip(bounds, bounds[1:])]
    )
    return ClusterResult(centers, mc_distortion(batch, centers))


def _split_region(region: Region) -> tuple[Region, Region]:
    w = region.word
    if region.kind == CLOSED:
        child = w + (1,)
    else:
        child = w[:-1] + (w[-1] + 1,)
    return Region(CLOSED, child), Region(TAIL, child)


def exhaustive_min(
    n: int, cap: int = 10_000_000
) -> tuple[Fraction, tuple[Region, ...]]:
    """Exact minimum total error over ALL split frontiers of size n.

    Depth-first over leaf/split decisions, always resolving the pending
    region of maximal error next (so each frontier is reached exactly
    once), pruning any branch whose committed leaf error already reaches
    the best complete frontier.  Node errors come straight from the
    measure formulas, independent of the greedy engine.

    Returns (best total error, best frontier's regions left to right).
    """
    if not 2 <= n <= 13:
        raise ValueError(f"exhaustive search supports 2 <= n <= 13, got {n}")
    if cap < 1:
        raise ValueError(f"cap must be >= 1, got {cap}")
    best_v: Fraction | None = None
    best_regions: tuple[Region, ...] = ()
    states = 0

    def walk(pending, splits_left, committed, fixed):
        nonlocal best_v, best_regions, states
        states += 1
        if states > cap:
            raise CapExceeded(f"exhaustive search exceeded {cap} states")
        if best_v is not None and committed >= best_v:
            return
        if splits_left == 0:
            total = committed
            for err, _ in pending:
                total += err
            if best_v is None or total < best_v:
                best_v = total
                best_regions = tuple(r for _, r in fixed) + tuple(
                    r for _, r in pending
                )
            return
        pick = max(range(len(pending)), key=lambda i: pending[i][0])
        err, region = pending[pick]
        rest = pending[:pick] + pending[pick + 1 :]
        first, second = _split_region(region)
        walk(
            rest
            + [
                (measure.node_error(first), first),
                (measure.node_error(second), second),
            ],
            splits_left - 1,
            committed,
            fixed,
        )
        walk(rest, splits_left, committed + err, fixed + [(err, region)])

    root = Region(CLOSED, ())
    walk([(measure.VARIANCE, root)], n - 1, Fraction(0), [])
    assert best_v is not None
    ordered = tuple(
        sorted(best_regions, key=lambda r: measure.region_interval(r)[0])
    )
    return best_v, ordered


def write_batch(batch: SampleBatch, path) -> None:
    """Write a batch as flat binary: 8-byte magic, little-endian uint64
    count, then count little-endian float64 values."""
    header = struct.pack("<8sQ", BATCH_MAGIC, batch.count)
    Path(path).write_bytes(header + batch.values.astype("<f8").tobytes())


def read_batch_values(path) -> np.ndarray:
    """Read back the values of a written batch."""
    raw = Path(path).read_bytes()
    if len(raw) < 16:
        raise ValueError("batch file too short")
    magic, count = struct.unpack_from("<8sQ", raw)
    if magic != BATCH_MAGIC:
        raise ValueError(f"bad batch magic {magic!r}")
    values = np.frombuffer(raw, dtype="<f8", offset=16)
    if values.size != count:
        raise ValueError(f"batch count {count} does not match payload {values.size}")
    return values
