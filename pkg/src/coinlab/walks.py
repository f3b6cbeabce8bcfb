"""Symmetric +/-1 walks and adversarial stopping rules.

A walk is a finite stream of fair coinflips. An adversary may truncate the
stream at a point of its choosing; the rules here range from "never stop"
to a clairvoyant stop at the most extreme prefix sum inside a window.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MAX_STREAM_LENGTH",
    "WalkTrace",
    "StoppingStrategy",
    "StoppedStream",
    "generate_walk",
    "apply_stop",
]

# Streams longer than this are outside the supported regime; prefix sums
# then always fit comfortably in int64.
MAX_STREAM_LENGTH = 2**31


@dataclass(frozen=True, eq=False)
class WalkTrace:
    """A fully realized walk: steps plus derived prefix statistics.

    ``prefix_sums[k]`` is the sum of the first ``k`` steps, so the array has
    one more entry than ``steps`` and starts at 0. Extremes are taken over
    all prefixes including the empty one; ``argmax``/``argmin`` report the
    smallest attaining prefix index.
    """

    steps: np.ndarray
    prefix_sums: np.ndarray
    run_max: int
    run_min: int
    argmax: int
    argmin: int

    @classmethod
    def from_steps(cls, steps) -> "WalkTrace":
        steps = np.asarray(steps, dtype=np.int8)
        if steps.ndim != 1:
            raise ValueError("steps must be one-dimensional")
        if steps.size > MAX_STREAM_LENGTH:
            raise ValueError(f"stream length {steps.size} exceeds cap {MAX_STREAM_LENGTH}")
        if steps.size and not np.all(np.abs(steps) == 1):
            raise ValueError("steps must all be +1 or -1")
        prefix = np.zeros(steps.size + 1, dtype=np.int64)
        np.cumsum(steps, out=prefix[1:])
        amax = int(np.argmax(prefix))
        amin = int(np.argmin(prefix))
        return cls(
            steps=steps,
            prefix_sums=prefix,
            run_max=int(prefix[amax]),
            run_min=int(prefix[amin]),
            argmax=amax,
            argmin=amin,
        )

    def __len__(self) -> int:
        return int(self.steps.size)


def generate_walk(length: int, rng: np.random.Generator) -> WalkTrace:
    """Draw a fair +/-1 walk of the given length from ``rng``.

    The same generator state always reproduces the same trace bit for bit.
    """
    if length < 0:
        raise ValueError("length must be non-negative")
    if length > MAX_STREAM_LENGTH:
        raise ValueError(f"stream length {length} exceeds cap {MAX_STREAM_LENGTH}")
    steps = rng.integers(0, 2, size=length, dtype=np.int8) * 2 - 1
    return WalkTrace.from_steps(steps)


def _as_direction(direction) -> int:
    if direction in (+1, -1):
        return int(direction)
    if direction == "+":
        return +1
    if direction == "-":
        return -1
    raise ValueError(f"direction must be +1/-1 (or '+'/'-'), got {direction!r}")


def _checked_window(window) -> tuple[int, int] | None:
    if window is None:
        return None
    lo, hi = int(window[0]), int(window[1])
    if not 1 <= lo <= hi:
        raise ValueError(f"window must satisfy 1 <= lo <= hi, got ({lo},{hi})")
    return lo, hi


@dataclass(frozen=True)
class StoppingStrategy:
    """An adversary's rule for truncating a stream.

    Use the classmethod constructors; ``kind`` is one of ``no_stop``,
    ``fixed_length``, ``first_hit``, ``omniscient_extreme``. Windows are
    inclusive prefix-index ranges ``(lo, hi)`` with ``1 <= lo <= hi <= len``;
    ``None`` means the full stream.
    """

    kind: str
    length: int | None = None
    threshold: int | None = None
    direction: int = +1
    window: tuple[int, int] | None = None

    @classmethod
    def no_stop(cls) -> "StoppingStrategy":
        return cls(kind="no_stop")

    @classmethod
    def fixed_length(cls, k: int) -> "StoppingStrategy":
        if k < 0:
            raise ValueError("fixed stop point must be >= 0")
        return cls(kind="fixed_length", length=int(k))

    @classmethod
    def first_hit(cls, threshold: int, direction=+1, window=None) -> "StoppingStrategy":
        if threshold < 1:
            raise ValueError("first-hit threshold must be >= 1")
        return cls(
            kind="first_hit",
            threshold=int(threshold),
            direction=_as_direction(direction),
            window=_checked_window(window),
        )

    @classmethod
    def omniscient_extreme(cls, direction=+1, window=None) -> "StoppingStrategy":
        return cls(
            kind="omniscient_extreme",
            direction=_as_direction(direction),
            window=_checked_window(window),
        )

    def describe(self) -> str:
        if self.kind == "no_stop":
            return "no_stop"
        if self.kind == "fixed_length":
            return f"fixed_length({self.length})"
        sign = "+" if self.direction > 0 else "-"
        if self.kind == "first_hit":
            return f"first_hit({self.threshold},{sign},window={self.window})"
        return f"omniscient_extreme({sign},window={self.window})"


@dataclass(frozen=True)
class StoppedStream:
    """Outcome of applying a stopping rule: where it stopped and the value there."""

    stop_index: int
    value: int
    strategy_used: StoppingStrategy


def _resolve_window(strategy: StoppingStrategy, length: int) -> tuple[int, int]:
    lo, hi = strategy.window if strategy.window is not None else (1, length)
    if not (1 <= lo <= hi <= length):
        raise ValueError(f"window ({lo},{hi}) invalid for stream of length {length}")
    return lo, hi


def apply_stop(trace: WalkTrace, strategy: StoppingStrategy) -> StoppedStream:
    """Apply ``strategy`` to ``trace`` and report the stop point and stopped value.

    ``first_hit`` stops at the first prefix inside the window whose sum
    reaches the threshold in the targeted direction, and at the window's
    upper bound if that never happens. ``omniscient_extreme`` stops at the
    most extreme prefix sum in the window, smallest index on ties.
    """
    n = len(trace)
    if strategy.kind == "no_stop":
        stop = n
    elif strategy.kind == "fixed_length":
        stop = strategy.length
        if not (0 <= stop <= n):
            raise ValueError(f"fixed stop point {stop} outside [0, {n}]")
    elif strategy.kind == "first_hit":
        lo, hi = _resolve_window(strategy, n)
        segment = trace.prefix_sums[lo : hi + 1] * strategy.direction
        hits = np.nonzero(segment >= strategy.threshold)[0]
        stop = int(lo + hits[0]) if hits.size else hi
    elif strategy.kind == "omniscient_extreme":
        lo, hi = _resolve_window(strategy, n)
        segment = trace.prefix_sums[lo : hi + 1] * strategy.direction
        stop = int(lo + np.argmax(segment))
    else:
        raise ValueError(f"unknown stopping rule {strategy.kind!r}")
    return StoppedStream(
        stop_index=stop,
        value=int(trace.prefix_sums[stop]),
        strategy_used=strategy,
    )
