"""Streaming weighted prime races A(x) = sum_{p<=x} w(p) p^{-sigma}.

The race is consumed in blocks of primes. Block sums are exactly rounded
(math.fsum) and folded into a double-double prefix, so checkpoint values are
accurate to a couple of ulps; per-prime values for sign tracking come from a
block-local cumulative sum whose worst-case float error is folded into
`running_error`. Per-segment work is pure and may run on worker threads; the
fold that owns sign detection is strictly sequential, so results are
bit-identical for any worker count.
"""

from __future__ import annotations

import itertools
import math
import os
import sys
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Sequence, TypeVar

import numpy as np

from .characters import DirichletWeight
from .errors import CapabilityError, ValidationError
from .sieve import DEFAULT_SEGMENT_SIZE, base_primes, segment_bounds, sieve_segment

_BLOCK = 1 << 15
_U = sys.float_info.epsilon / 2  # unit roundoff

WORKERS_ENV = "PRIMERACE_WORKERS"

_T = TypeVar("_T")
_R = TypeVar("_R")


def worker_count() -> int:
    """Worker count from the environment; 1 (sequential) when unset."""
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ValidationError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def _ordered_map(
    fn: Callable[[_T], _R], items: Iterable[_T], workers: int
) -> Iterator[_R]:
    """Apply fn with bounded prefetch, yielding results in input order."""
    if workers <= 1:
        for item in items:
            yield fn(item)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        pending: deque = deque()
        it = iter(items)
        for item in itertools.islice(it, workers + 1):
            pending.append(pool.submit(fn, item))
        for item in it:
            done = pending.popleft()
            pending.append(pool.submit(fn, item))
            yield done.result()
        while pending:
            yield pending.popleft().result()


def _dd_add(hi: float, lo: float, x: float) -> tuple[float, float]:
    """Add x to the double-double value hi + lo (TwoSum + renormalize)."""
    s = hi + x
    bv = s - hi
    err = (hi - (s - bv)) + (x - bv)
    lo += err
    new_hi = s + lo
    new_lo = lo - (new_hi - s)
    return new_hi, new_lo


@dataclass(frozen=True)
class RacePoint:
    x: int
    value: float
    error_bound: float
    effective_sign: int


@dataclass(frozen=True)
class SignChangeEvent:
    prime: int
    value: float
    error_bound: float
    sign_before: int
    sign_after: int
    ambiguous: bool


@dataclass
class RaceSeries:
    """A(x) sampled at checkpoints, with optional per-prime sign tracking."""

    weight: DirichletWeight
    sigma: float
    x_max: int
    checkpoints: tuple[int, ...]
    points: list[RacePoint]
    sign_events: list[SignChangeEvent] | None
    final_value: float
    final_sign: int
    first_positive_x: int | None
    running_error: float

    @property
    def values(self) -> list[tuple[int, float]]:
        return [(p.x, p.value) for p in self.points]

    @property
    def tracks_signs(self) -> bool:
        return self.sign_events is not None


@dataclass(frozen=True)
class SignChangeReport:
    change_count: int
    change_locations: tuple[int, ...]
    final_sign: int
    first_positive_x: int | None
    ambiguous_count: int


def effective_sign_changes(
    values: Sequence[float], initial_sign: int = 0
) -> tuple[list[int], int]:
    """Reference scalar implementation of the sign-change convention.

    The effective sign at a position is the sign of the value if nonzero,
    otherwise the last nonzero sign (initially `initial_sign`). A change is a
    -/+ or +/- transition of the effective sign; zeros never count. Returns
    (indices of changes, final effective sign).
    """
    eff = initial_sign
    changes = []
    for i, v in enumerate(values):
        s = (v > 0) - (v < 0)
        if s != 0:
            if eff != 0 and s != eff:
                changes.append(i)
            eff = s
    return changes, eff


def _block_sign_scan(avals: np.ndarray, carry: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized effective-sign scan over one block.

    Returns (indices where the effective sign flips, effective sign at every
    position). `carry` is the effective sign entering the block.
    """
    s = np.sign(avals)
    n = len(s)
    marker = np.where(s != 0, np.arange(1, n + 1), 0)
    last_nz = np.maximum.accumulate(marker)
    filled = np.where(last_nz > 0, s[np.maximum(last_nz - 1, 0)], float(carry))
    prev = np.empty_like(filled)
    prev[0] = carry
    prev[1:] = filled[:-1]
    changes = np.flatnonzero((prev != 0) & (filled != prev))
    return changes, filled


def default_checkpoints(x_max: int) -> tuple[int, ...]:
    """Geometric checkpoints (ratio 10^(1/16)) plus every power of 10 and x_max."""
    pts = {x_max}
    k = 5  # 10^(5/16) ~ 2.05, the first value >= 2
    while True:
        v = round(10 ** (k / 16))
        if v > x_max:
            break
        if v >= 2:
            pts.add(v)
        k += 1
    d = 10
    while d <= x_max:
        pts.add(d)
        d *= 10
    return tuple(sorted(pts))


def _validate_race_args(sigma: float, x_max: int, checkpoints) -> tuple[int, ...]:
    if not 0.0 <= sigma <= 1.0:
        raise ValidationError(f"sigma must lie in [0, 1], got {sigma}")
    if x_max < 1:
        raise ValidationError(f"x_max must be >= 1, got {x_max}")
    if checkpoints is None:
        return default_checkpoints(x_max)
    cps = tuple(int(c) for c in checkpoints)
    if any(b <= a for a, b in zip(cps, cps[1:])):
        raise ValidationError("checkpoints must be strictly ascending")
    if cps and (cps[0] < 1 or cps[-1] > x_max):
        raise ValidationError(
            f"checkpoints must lie in [1, x_max={x_max}], got range "
            f"[{cps[0]}, {cps[-1]}]"
        )
    return cps


def _prepare_segment(args) -> list[tuple[np.ndarray, np.ndarray, np.ndarray, float, float]]:
    """Sieve one segment and precompute per-block contributions (pure)."""
    (lo, hi), w, sigma, shared_base, segment_size = args
    primes = sieve_segment(lo, hi, base=shared_base, max_width=segment_size).primes
    blocks = []
    for off in range(0, len(primes), _BLOCK):
        blk = primes[off : off + _BLOCK]
        wv = w.values_at_primes(blk)
        if sigma == 0.0:
            contrib = wv
        else:
            contrib = wv * np.exp(-sigma * np.log(blk.astype(np.float64)))
        cum = np.cumsum(contrib)
        block_sum = math.fsum(contrib.tolist())
        abs_weight = float(np.sum(np.abs(contrib)))
        blocks.append((blk, contrib, cum, block_sum, abs_weight))
    return blocks


def weighted_race(
    w: DirichletWeight,
    sigma: float,
    x_max: int,
    checkpoints: Sequence[int] | None = None,
    *,
    segment_size: int = DEFAULT_SEGMENT_SIZE,
    track_signs: bool = True,
    workers: int | None = None,
) -> RaceSeries:
    """Stream the race to x_max, sampling A at checkpoints and tracking signs.

    `running_error` bounds the absolute float error of any reported value:
    2 ulp per term for p^{-sigma} plus the summation-scheme bound. At sigma=0
    with a character weight every value is an exact integer and the bound is 0.
    """
    cps = _validate_race_args(sigma, x_max, checkpoints)
    if workers is None:
        workers = worker_count()

    exact = sigma == 0.0 and w.is_character
    shared_base = base_primes(math.isqrt(x_max)) if x_max >= 2 else None
    tasks = (
        ((lo, hi), w, sigma, shared_base, segment_size)
        for lo, hi in segment_bounds(x_max, segment_size)
    )

    dd_hi = dd_lo = 0.0
    total_weight = 0.0
    block_weight_max = 0.0
    value_max = 0.0
    err = 0.0
    carry = 0
    first_positive: int | None = None
    events: list[SignChangeEvent] | None = [] if track_signs else None
    points: list[RacePoint] = []
    ci = 0

    for seg_blocks in _ordered_map(_prepare_segment, tasks, workers):
        for blk, contrib, cum, block_sum, abs_weight in seg_blocks:
            prefix = dd_hi + dd_lo
            while ci < len(cps) and cps[ci] < blk[0]:
                points.append(RacePoint(cps[ci], prefix, err, carry))
                ci += 1

            avals = prefix + cum
            change_idx, filled = _block_sign_scan(avals, carry)

            total_weight += abs_weight
            block_weight_max = max(block_weight_max, abs_weight)
            value_max = max(value_max, float(np.max(np.abs(avals))))
            if not exact:
                err = _U * (2.0 * total_weight + _BLOCK * block_weight_max + value_max)

            if events is not None:
                for i in change_idx.tolist():
                    before = carry if i == 0 else int(filled[i - 1])
                    events.append(
                        SignChangeEvent(
                            prime=int(blk[i]),
                            value=float(avals[i]),
                            error_bound=err,
                            sign_before=before,
                            sign_after=int(filled[i]),
                            ambiguous=abs(float(avals[i])) <= err,
                        )
                    )
            if first_positive is None:
                pos = np.flatnonzero(avals > 0.0)
                if len(pos):
                    first_positive = int(blk[pos[0]])

            while ci < len(cps) and cps[ci] <= blk[-1]:
                k = int(np.searchsorted(blk, cps[ci], side="right"))
                if k == 0:
                    value, eff = prefix, carry
                else:
                    value = math.fsum([dd_hi, dd_lo, math.fsum(contrib[:k].tolist())])
                    eff = int(filled[k - 1])
                points.append(RacePoint(cps[ci], value, err, eff))
                ci += 1

            if len(filled):
                carry = int(filled[-1])
            dd_hi, dd_lo = _dd_add(dd_hi, dd_lo, block_sum)

    final_value = dd_hi + dd_lo
    while ci < len(cps):
        points.append(RacePoint(cps[ci], final_value, err, carry))
        ci += 1

    return RaceSeries(
        weight=w,
        sigma=sigma,
        x_max=x_max,
        checkpoints=cps,
        points=points,
        sign_events=events,
        final_value=final_value,
        final_sign=carry,
        first_positive_x=first_positive,
        running_error=err,
    )


def detect_sign_changes(series: RaceSeries) -> SignChangeReport:
    """Assemble the sign-change report from a tracked race."""
    if series.sign_events is None:
        raise CapabilityError(
            "series was computed without per-prime sign tracking"
        )
    events = series.sign_events
    return SignChangeReport(
        change_count=len(events),
        change_locations=tuple(e.prime for e in events),
        final_sign=series.final_sign,
        first_positive_x=series.first_positive_x,
        ambiguous_count=sum(1 for e in events if e.ambiguous),
    )


def race_at_points(
    w: DirichletWeight,
    sigma: float,
    points: Sequence[int],
    *,
    workers: int | None = None,
) -> list[tuple[int, float]]:
    """A at exactly the requested ascending points; matches race checkpoints."""
    if not points:
        return []
    series = weighted_race(
        w,
        sigma,
        int(max(points)),
        checkpoints=points,
        track_signs=False,
        workers=workers,
    )
    return series.values


def race_extended(
    w: DirichletWeight,
    sigma: float,
    points: Sequence[int],
    dps: int = 40,
) -> list[tuple[int, float]]:
    """Extended-precision (mpmath) recomputation of A at the given points.

    Oracle-mode reference for desk-scale runs; far slower than the streaming
    race and intended for verification, not production sweeps.
    """
    from mpmath import mp, mpf

    from .sieve import prime_stream

    if any(b <= a for a, b in zip(points, points[1:])):
        raise ValidationError("points must be strictly ascending")
    old_dps = mp.dps
    mp.dps = dps
    try:
        sig = mpf(sigma)
        total = mpf(0)
        out = []
        pi = 0
        for p in prime_stream(int(max(points))):
            while pi < len(points) and points[pi] < p:
                out.append((int(points[pi]), float(total)))
                pi += 1
            wp = w.at(p)
            if wp:
                total += wp * mpf(p) ** (-sig)
        while pi < len(points):
            out.append((int(points[pi]), float(total)))
            pi += 1
        return out
    finally:
        mp.dps = old_dps
