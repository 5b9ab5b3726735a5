"""Spinning wheels and the counter-based random stream behind them.

The random source is a pure function of (seed, counter): output i is
splitmix64 applied to seed + (i+1) * golden gamma.  Draws never mutate
shared state, so any day can be re-derived from the seed alone and a
replay can mirror the counter without generating a single value.

Wheel moments are exact rationals computed from the weights, never
sampled.  Slot selection uses a scaled 64-bit multiply, which keeps the
selection bias below total_weight / 2**64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Mapping, Sequence

from .model import EventCard, EventKind, TICKS_PER_HOUR, WheelConfig

_MASK64 = (1 << 64) - 1
_MASK128 = (1 << 128) - 1
_GAMMA = 0x9E3779B97F4A7C15


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return z ^ (z >> 31)


@dataclass(frozen=True)
class RngState:
    seed: int
    counter: int = 0

    def output(self) -> int:
        """The 64-bit value at the current counter position."""
        step = (self.counter + 1) & _MASK128
        return _mix64((self.seed + step * _GAMMA) & _MASK64)

    def next(self) -> tuple[int, "RngState"]:
        return self.output(), RngState(self.seed, (self.counter + 1) & _MASK128)

    def skip(self, steps: int) -> "RngState":
        return RngState(self.seed, (self.counter + steps) & _MASK128)


def _scaled_pick(raw: int, total: int) -> int:
    # maps a u64 onto 0..total-1 with at most total/2**64 bias
    return (raw * total) >> 64


@dataclass(frozen=True)
class WheelStats:
    mean: Fraction
    variance: Fraction

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


class Wheel:
    """Runtime form of a WheelConfig: cumulative weights plus cached moments."""

    def __init__(self, config: WheelConfig):
        if not config.slots:
            raise ValueError("wheel needs at least one slot")
        cumulative: list[int] = []
        running = 0
        for value, weight in config.slots:
            if weight < 1 or int(weight) != weight:
                raise ValueError(f"slot weight {weight!r} must be a positive integer")
            if int(value) != value or value < 0:
                raise ValueError(f"slot value {value!r} must be a non-negative integer")
            running += weight
            cumulative.append(running)
        self.config = config
        self.values = tuple(v for v, _ in config.slots)
        self.cumulative = tuple(cumulative)
        self.total_weight = running
        mean = Fraction(sum(v * w for v, w in config.slots), running)
        second = Fraction(sum(v * v * w for v, w in config.slots), running)
        self.stats_ticks = WheelStats(mean=mean, variance=second - mean * mean)

    def pick(self, raw: int) -> int:
        """Slot value for one u64 of randomness."""
        target = _scaled_pick(raw, self.total_weight)
        lo, hi = 0, len(self.cumulative) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if self.cumulative[mid] <= target:
                lo = mid + 1
            else:
                hi = mid
        return self.values[lo]


def build_wheel(config: WheelConfig) -> Wheel:
    return Wheel(config)


def wheel_stats(config: WheelConfig) -> WheelStats:
    """Exact population moments of the wheel, in hours."""
    ticks_stats = Wheel(config).stats_ticks
    return WheelStats(
        mean=ticks_stats.mean / TICKS_PER_HOUR,
        variance=ticks_stats.variance / (TICKS_PER_HOUR * TICKS_PER_HOUR),
    )


def spin(wheel: Wheel, rng: RngState) -> tuple[int, RngState]:
    """One wheel spin: consumes exactly one counter step."""
    raw, rng = rng.next()
    return wheel.pick(raw), rng


def pick_member(team_size: int, rng: RngState) -> tuple[int, RngState]:
    raw, rng = rng.next()
    return 1 + _scaled_pick(raw, team_size), rng


@dataclass(frozen=True)
class DayDraws:
    """Everything random about one day, shared by every team in lockstep."""
    day: int
    event: tuple[str, Mapping[str, Any]] | None
    progress: Mapping[int, int]
    rng_steps: int

    def to_payload(self) -> dict[str, Any]:
        return {
            "day": self.day,
            "event": None if self.event is None
            else {"card": self.event[0], "params": dict(self.event[1])},
            "progress": {str(i): v for i, v in sorted(self.progress.items())},
            "rng_steps": self.rng_steps,
        }


def draws_from_payload(payload: Mapping[str, Any]) -> DayDraws:
    raw_event = payload.get("event")
    event = None
    if raw_event is not None:
        event = (raw_event["card"], dict(raw_event.get("params", {})))
    return DayDraws(
        day=payload["day"],
        event=event,
        progress={int(i): v for i, v in payload["progress"].items()},
        rng_steps=payload["rng_steps"],
    )


def event_wheel(deck: Sequence[EventCard]) -> Wheel:
    """Wheel over deck positions, weighted by each card's weight."""
    return Wheel(WheelConfig(slots=tuple((i, c.weight) for i, c in enumerate(deck))))


def resolve_event_params(
    card: EventCard, team_size: int, rng: RngState
) -> tuple[dict[str, Any], RngState, int]:
    """Fill in the card parameters every team must share.

    Only an absence card with no fixed member costs a draw; everything
    else on a card is static configuration.
    """
    params = dict(card.params)
    steps = 0
    if card.kind is EventKind.ABSENCE and "member" not in params:
        member, rng = pick_member(team_size, rng)
        params["member"] = member
        steps = 1
    return params, rng, steps


def draw_day(
    day: int,
    sprint_day: int,
    team_size: int,
    progress_wheel: Wheel,
    deck: Sequence[EventCard],
    rng: RngState,
) -> tuple[DayDraws, RngState]:
    """Draw one day's shared randomness: event first, then member progress.

    The events wheel stays untouched on the first day of each sprint.
    Progress values are drawn for member indexes in ascending order, one
    step each, so the step count is fully determined by the inputs.
    """
    steps = 0
    event: tuple[str, Mapping[str, Any]] | None = None
    if sprint_day >= 2:
        raw, rng = rng.next()
        steps += 1
        card = deck[event_wheel(deck).pick(raw)]
        params, rng, extra = resolve_event_params(card, team_size, rng)
        steps += extra
        event = (card.id, params)
    progress: dict[int, int] = {}
    for index in range(1, team_size + 1):
        value, rng = spin(progress_wheel, rng)
        progress[index] = value
        steps += 1
    return DayDraws(day=day, event=event, progress=progress, rng_steps=steps), rng


class CalibrationError(ValueError):
    """No wheel meets the requested moments; carries the nearest achieved."""

    def __init__(self, message: str, nearest_mean: float, nearest_sd: float):
        super().__init__(message)
        self.nearest_mean = nearest_mean
        self.nearest_sd = nearest_sd


def _counts_to_config(counts: Mapping[int, int]) -> WheelConfig:
    slots = tuple((v, c) for v, c in sorted(counts.items()) if c > 0)
    return WheelConfig(slots=slots)


def _window_search(
    values: Sequence[int],
    slot_count: int,
    sum_lo: Fraction,
    sum_hi: Fraction,
    var_lo: Fraction,
    var_hi: Fraction,
) -> dict[int, int] | None:
    """First equal-weight multiset (deterministic order) in the moment window.

    Values must be sorted descending and the extreme values are forced to
    appear at least once.  Pruning is on reachable sum / sum-of-squares
    intervals given the remaining slot budget.
    """
    lo_s = math.ceil(sum_lo)
    hi_s = math.floor(sum_hi)
    if lo_s > hi_s:
        return None
    vmax, vmin = values[0], values[-1]
    n = slot_count
    if vmin * n > hi_s or vmax * n < lo_s:
        return None
    # bounds on the final sum of squares over every sum in the window
    q_hi_total = n * var_hi + Fraction(hi_s * hi_s, n)
    q_lo_total = n * var_lo + Fraction(lo_s * lo_s, n)

    def q_window_ok(k: int, s: int, q: int, level: int) -> bool:
        rem = n - k
        if rem == 0:
            return q_lo_total <= q <= q_hi_total
        largest = values[level] if level < len(values) else vmin
        budget_hi = hi_s - s - rem * vmin
        budget_lo = max(0, lo_s - s - rem * vmin)
        if budget_hi < 0:
            return False
        # max extra sum-of-squares: concentrate the budget on big values
        span = largest - vmin
        if span == 0:
            add_hi = rem * largest * largest
        else:
            full = min(rem, budget_hi // span)
            part = budget_hi - full * span
            add_hi = (
                full * largest * largest
                + (0 if full == rem else (vmin + part) * (vmin + part))
                + max(0, rem - full - 1) * vmin * vmin
            )
        # min extra sum-of-squares: spread the low budget evenly
        add_lo = rem * vmin * vmin + (
            Fraction(budget_lo * budget_lo, rem) + 2 * vmin * budget_lo
        )
        return q + add_lo <= q_hi_total and q + add_hi >= q_lo_total

    def sum_ok(k: int, s: int, level: int) -> bool:
        rem = n - k
        largest = values[level] if level < len(values) else vmin
        return s + rem * vmin <= hi_s and s + rem * largest >= lo_s

    best: dict[int, int] | None = None

    def walk(level: int, k: int, s: int, q: int, counts: dict[int, int]) -> bool:
        nonlocal best
        if k == n:
            if not (lo_s <= s <= hi_s):
                return False
            if counts.get(vmax, 0) < 1 or counts.get(vmin, 0) < 1:
                return False
            mean = Fraction(s, n)
            var = Fraction(q, n) - mean * mean
            if var_lo <= var <= var_hi:
                best = dict(counts)
                return True
            return False
        if level >= len(values):
            return False
        value = values[level]
        # forced copies keep the extremes present
        forced = 1 if value in (vmax, vmin) else 0
        max_copies = n - k - (1 if value != vmin and counts.get(vmin, 0) == 0 else 0)
        for copies in range(max_copies, forced - 1, -1):
            k2, s2, q2 = k + copies, s + copies * value, q + copies * value * value
            if k2 > n or not sum_ok(k2, s2, level + 1):
                continue
            if not q_window_ok(k2, s2, q2, level + 1):
                continue
            if copies:
                counts[value] = copies
            if walk(level + 1, k2, s2, q2, counts):
                return True
            counts.pop(value, None)
        return False

    walk(0, 0, 0, 0, {})
    return best


def _nearest_mean_then_sd(
    values: Sequence[int],
    slot_count: int,
    target_mean: Fraction,
    target_sd: Fraction,
    node_budget: int = 2_000_000,
) -> dict[int, int]:
    """Fallback when the window is empty: report-worthy nearest wheel.

    Nearest means smallest |mean error| first (exact, via a subset-sum
    table), then smallest |sd error| among multisets achieving that sum
    (searched under a node budget).
    """
    n = slot_count
    vmax, vmin = values[0], values[-1]
    base = vmax + vmin
    rows = [1]  # rows[k] = bitset over sums reachable with k free slots
    for _ in range(n - 2):
        step = 0
        for v in values:
            step |= rows[-1] << v
        rows.append(step)
    target_sum = target_mean * n
    best_sum, best_err = None, None
    free = rows[-1]
    s = 0
    while free:
        if free & 1:
            err = abs(Fraction(base + s) - target_sum)
            if best_err is None or err < best_err or (err == best_err and base + s < best_sum):
                best_sum, best_err = base + s, err
        free >>= 1
        s += 1
    assert best_sum is not None

    # a guaranteed witness multiset for best_sum, biggest values first
    witness = {vmax: 1, vmin: 1}
    need = best_sum - base
    for k in range(n - 2, 0, -1):
        for v in values:
            if need - v >= 0 and (rows[k - 1] >> (need - v)) & 1:
                witness[v] = witness.get(v, 0) + 1
                need -= v
                break
    assert need == 0

    mean = Fraction(best_sum, n)
    target_var = target_sd * target_sd

    def gap_of(counts: Mapping[int, int]) -> Fraction:
        q = sum(v * v * c for v, c in counts.items())
        return abs(Fraction(q, n) - mean * mean - target_var)

    best_counts: dict[int, int] | None = dict(witness)
    best_gap: Fraction | None = gap_of(witness)
    nodes = 0

    def walk(level: int, k: int, s: int, q: int, counts: dict[int, int]) -> None:
        nonlocal best_counts, best_gap, nodes
        nodes += 1
        if nodes > node_budget:
            return
        if k == n:
            if s != best_sum or counts.get(vmax, 0) < 1 or counts.get(vmin, 0) < 1:
                return
            var = Fraction(q, n) - mean * mean
            gap = abs(var - target_var)
            if best_gap is None or gap < best_gap:
                best_gap, best_counts = gap, dict(counts)
            return
        if level >= len(values):
            return
        value = values[level]
        forced = 1 if value in (vmax, vmin) else 0
        largest_next = values[level + 1] if level + 1 < len(values) else vmin
        for copies in range(n - k, forced - 1, -1):
            s2 = s + copies * value
            rem = n - k - copies
            if s2 + rem * vmin > best_sum or s2 + rem * largest_next < best_sum:
                continue
            if copies:
                counts[value] = copies
            walk(level + 1, k + copies, s2, q + copies * value * value, counts)
            counts.pop(value, None)

    walk(0, 0, 0, 0, {})
    assert best_counts is not None
    return best_counts


def calibrate_wheel(
    target_mean: float | str,
    target_sd: float | str,
    slot_count: int = 20,
    value_set: Sequence[int] | None = None,
    tolerance: float | str = "0.05",
) -> WheelConfig:
    """Find an equal-weight wheel hitting the requested hour moments.

    Values are hour units from value_set (default 0..12), converted to
    ticks internally.  The result always contains the smallest and the
    largest value of the set.  Same inputs, same wheel: the search is a
    deterministic depth-first walk.  When no wheel lands within the
    tolerance on both moments, raises CalibrationError carrying the
    nearest achieved pair (nearest by mean error, then sd error).
    """
    if slot_count < 2 or slot_count > 24:
        raise ValueError("slot_count must be between 2 and 24")
    hour_values = sorted(set(value_set if value_set is not None else range(13)))
    if len(hour_values) < 2:
        raise ValueError("value_set needs at least two distinct values")
    values = sorted((v * TICKS_PER_HOUR for v in hour_values), reverse=True)

    tol = Fraction(str(tolerance)) * TICKS_PER_HOUR
    mean_t = Fraction(str(target_mean)) * TICKS_PER_HOUR
    sd_t = Fraction(str(target_sd)) * TICKS_PER_HOUR
    if sd_t < 0:
        raise ValueError("target sd must not be negative")

    n = slot_count
    sd_lo = max(Fraction(0), sd_t - tol)
    sd_hi = sd_t + tol
    counts = _window_search(
        values, n,
        sum_lo=(mean_t - tol) * n,
        sum_hi=(mean_t + tol) * n,
        var_lo=sd_lo * sd_lo,
        var_hi=sd_hi * sd_hi,
    )
    if counts is not None:
        return _counts_to_config(counts)

    nearest = _counts_to_config(
        _nearest_mean_then_sd(values, n, mean_t, sd_t)
    )
    got = wheel_stats(nearest)
    raise CalibrationError(
        f"no {n}-slot wheel over values {hour_values} reaches "
        f"mean {target_mean} sd {target_sd} within {tolerance}; "
        f"nearest achieved mean {float(got.mean)} sd {got.sd}",
        nearest_mean=float(got.mean),
        nearest_sd=got.sd,
    )
