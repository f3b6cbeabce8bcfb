"""Stopped-column coin matrices and spectral-norm concentration checks.

A round's coin matrix holds each processor's stream as a column; the
adversary may truncate some columns, which splits the matrix into an
unstopped +/-1 matrix plus a correction supported on the truncated
suffixes. Summing columns across rounds gives the iteration-sum matrix
whose operator norm the concentration claim controls. Norms come from
power iteration on the Gram operator with a deterministic seeded start.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np

from .bounds import Params, derive
from .mc import McEstimate, VerificationVerdict, run_blocks, verdict_for
from .walks import StoppingStrategy, WalkTrace, apply_stop

__all__ = [
    "StoppedCoinMatrix",
    "IterationSumMatrices",
    "NormEstimate",
    "NormBoundReport",
    "ConvergenceError",
    "SpectralCheckError",
    "build_H",
    "build_G",
    "spectral_norm",
    "norm_2x2",
    "verify_norm_bound",
    "export_csv",
]

# Matrices stay small (hundreds of rows/columns); dense numpy throughout.
_POWER_START_SEED = 0x5EED
_NORM_TRIAL_BLOCK = 64


class ConvergenceError(RuntimeError):
    """Power iteration ran out of iterations; carries the best estimate."""

    def __init__(self, message: str, best: "NormEstimate"):
        super().__init__(message)
        self.best = best


class SpectralCheckError(RuntimeError):
    """A structural identity on computed norms failed beyond tolerance."""


@dataclass(frozen=True, eq=False)
class StoppedCoinMatrix:
    """One round's coin matrix with adversarial column truncation.

    stopped = unstopped + correction; the correction is zero outside the
    truncated columns, where it cancels each column's suffix below its stop
    point (stop point k keeps the first k entries).
    """

    stopped: np.ndarray
    unstopped: np.ndarray
    correction: np.ndarray
    stopped_columns: tuple[int, ...]
    stop_points: dict[int, int]

    def validate(self) -> None:
        n = self.unstopped.shape[0]
        if self.unstopped.shape != (n, n):
            raise SpectralCheckError("unstopped matrix must be square")
        if np.any(np.abs(self.unstopped) != 1):
            raise SpectralCheckError("unstopped entries must be +/-1")
        if not np.array_equal(self.stopped, self.unstopped + self.correction):
            raise SpectralCheckError("stopped != unstopped + correction")
        mask = np.zeros(n, dtype=bool)
        mask[list(self.stopped_columns)] = True
        if np.any(self.correction[:, ~mask]):
            raise SpectralCheckError("correction leaks outside stopped columns")
        for j in self.stopped_columns:
            k = self.stop_points[j]
            if not 0 <= k <= n:
                raise SpectralCheckError(f"stop point {k} outside [0, {n}]")
            if np.any(self.stopped[:k, j] != self.unstopped[:k, j]) or np.any(self.stopped[k:, j]):
                raise SpectralCheckError(f"column {j} not truncated at {k}")


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def build_H(n: int, t_stopped: int, adversary: StoppingStrategy, seed,
            stopped_columns=None) -> StoppedCoinMatrix:
    """Fill an n x n coin matrix and let ``adversary`` truncate the chosen
    columns (the first ``t_stopped`` by default).

    ``seed`` may be an int or an existing Generator to draw from.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not 0 <= t_stopped <= n:
        raise ValueError(f"t_stopped must lie in [0, n], got {t_stopped}")
    if stopped_columns is None:
        stopped_columns = tuple(range(t_stopped))
    else:
        stopped_columns = tuple(int(j) for j in stopped_columns)
        if len(stopped_columns) != t_stopped:
            raise ValueError("stopped_columns length must equal t_stopped")
        if any(not 0 <= j < n for j in stopped_columns):
            raise ValueError("stopped column index out of range")
        if len(set(stopped_columns)) != len(stopped_columns):
            raise ValueError("stopped columns must be distinct")
    rng = _as_rng(seed)
    unstopped = (rng.integers(0, 2, size=(n, n), dtype=np.int8) * 2 - 1).astype(np.int64)
    correction = np.zeros_like(unstopped)
    stop_points: dict[int, int] = {}
    for j in stopped_columns:
        trace = WalkTrace.from_steps(unstopped[:, j])
        k = apply_stop(trace, adversary).stop_index
        stop_points[j] = k
        correction[k:, j] = -unstopped[k:, j]
    return StoppedCoinMatrix(
        stopped=unstopped + correction,
        unstopped=unstopped,
        correction=correction,
        stopped_columns=stopped_columns,
        stop_points=stop_points,
    )


@dataclass(frozen=True, eq=False)
class IterationSumMatrices:
    """Column sums of m rounds' coin matrices (rows = rounds).

    stopped_sums = full_sums + correction_sums, with the bad columns zeroed
    in all three.
    """

    stopped_sums: np.ndarray
    full_sums: np.ndarray
    correction_sums: np.ndarray
    bad_columns: tuple[int, ...]
    rounds: tuple[StoppedCoinMatrix, ...]

    def validate(self) -> None:
        if not np.array_equal(self.stopped_sums, self.full_sums + self.correction_sums):
            raise SpectralCheckError("stopped_sums != full_sums + correction_sums")
        bad = list(self.bad_columns)
        if bad and (np.any(self.stopped_sums[:, bad]) or np.any(self.full_sums[:, bad])
                    or np.any(self.correction_sums[:, bad])):
            raise SpectralCheckError("bad columns must be identically zero")


def build_G(params: Params, adversary: StoppingStrategy, seed,
            bad_columns=None) -> IterationSumMatrices:
    """Build the m x n iteration-sum matrices for ``params``.

    Round i draws from substream (seed, i) when ``seed`` is an int, or
    sequentially when it is a Generator. The adversary truncates the first
    t columns each round; the last t columns are the bad processors (zeroed
    in the sums) unless ``bad_columns`` says otherwise.
    """
    n, t, m = params.n, params.t, params.m
    if bad_columns is None:
        bad_columns = tuple(range(n - t, n))
    else:
        bad_columns = tuple(int(j) for j in bad_columns)
    overlap = set(bad_columns) & set(range(t))
    if overlap:
        raise ValueError(f"bad columns {sorted(overlap)} collide with stopped columns")
    gen = _as_rng(seed) if isinstance(seed, np.random.Generator) else None
    stopped_sums = np.zeros((m, n), dtype=np.int64)
    full_sums = np.zeros((m, n), dtype=np.int64)
    rounds = []
    keep = np.ones(n, dtype=np.int64)
    keep[list(bad_columns)] = 0
    for i in range(m):
        rng = gen if gen is not None else np.random.default_rng(np.random.SeedSequence((int(seed), i)))
        round_matrix = build_H(n, t, adversary, rng)
        stopped_sums[i] = round_matrix.stopped.sum(axis=0) * keep
        full_sums[i] = round_matrix.unstopped.sum(axis=0) * keep
        rounds.append(round_matrix)
    return IterationSumMatrices(
        stopped_sums=stopped_sums,
        full_sums=full_sums,
        correction_sums=stopped_sums - full_sums,
        bad_columns=bad_columns,
        rounds=tuple(rounds),
    )


@dataclass(frozen=True)
class NormEstimate:
    """A spectral-norm value with a certified relative error bound."""

    value: float
    relative_error_bound: float
    iterations_used: int

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "relative_error_bound": self.relative_error_bound,
            "iterations_used": self.iterations_used,
        }


def _power_attempt(gram: np.ndarray, rel_tol: float, max_iters: int,
                   attempt: int) -> tuple[bool, float, float, int]:
    rng = np.random.default_rng(np.random.SeedSequence((_POWER_START_SEED, attempt)))
    v = rng.standard_normal(gram.shape[0])
    v /= np.linalg.norm(v)
    theta = 0.0
    residual = math.inf
    for it in range(1, max_iters + 1):
        w = gram @ v
        theta = float(v @ w)
        # The Gram operator is symmetric PSD, so the Rayleigh residual
        # bounds the distance from theta to the nearest eigenvalue. Gain
        # deltas are NOT used: they go quiet long before convergence when
        # the start vector lands near an eigenvector.
        residual = float(np.linalg.norm(w - theta * v))
        if theta > 0 and residual <= rel_tol * theta:
            return True, theta, residual, it
        norm_w = float(np.linalg.norm(w))
        if norm_w == 0.0:
            break  # start vector fell in the kernel; restart
        v = w / norm_w
    return False, theta, residual, max_iters


def spectral_norm(matrix, rel_tol: float = 1e-6, max_power_iters: int = 10_000) -> NormEstimate:
    """Largest singular value via power iteration on the Gram operator.

    Deterministic: the start vector comes from a fixed internal seed, with
    one restart from a second substream if the first attempt stalls. Raises
    ConvergenceError (carrying the best estimate) if both attempts exhaust
    ``max_power_iters``.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.size == 0:
        raise ValueError("matrix must be two-dimensional and non-empty")
    if not np.any(a):
        raise ValueError("matrix is identically zero; the norm estimate would be degenerate")
    if not (0.0 < rel_tol < 1.0):
        raise ValueError("rel_tol must lie in (0, 1)")
    if max_power_iters < 1:
        raise ValueError("max_power_iters must be >= 1")
    gram = a @ a.T if a.shape[0] <= a.shape[1] else a.T @ a
    total_iters = 0
    best_theta = 0.0
    best_err = math.inf
    for attempt in range(2):
        ok, theta, err, used = _power_attempt(gram, rel_tol, max_power_iters, attempt)
        total_iters += used
        if theta > best_theta:
            best_theta, best_err = theta, err
        if ok:
            return NormEstimate(
                value=math.sqrt(theta),
                # first-order: relative error in sigma is half the relative
                # error in the Gram eigenvalue
                relative_error_bound=(err / theta) / 2.0 if theta > 0 else 0.0,
                iterations_used=total_iters,
            )
    best = NormEstimate(
        value=math.sqrt(best_theta),
        relative_error_bound=math.inf if best_theta == 0.0 else (best_err / best_theta) / 2.0,
        iterations_used=total_iters,
    )
    raise ConvergenceError(
        f"power iteration did not converge within {max_power_iters} iterations (two starts)",
        best,
    )


def norm_2x2(matrix) -> float:
    """Closed-form largest singular value of a 2x2 matrix (test oracle)."""
    a = np.asarray(matrix, dtype=np.float64)
    if a.shape != (2, 2):
        raise ValueError("norm_2x2 requires a 2x2 matrix")
    trace = float(np.sum(a * a))
    det = float(np.linalg.det(a)) ** 2
    disc = max(trace * trace / 4.0 - det, 0.0)
    return math.sqrt(trace / 2.0 + math.sqrt(disc))


def _norm_trial_counter(rng, count, start, *, params_dict, adversary, threshold,
                        rel_tol) -> list:
    params = Params(**params_dict)
    half = threshold / 2.0
    g_exc = r_exc = z_exc = 0
    sum_g = sum_r = sum_z = 0.0
    for _ in range(count):
        mats = build_G(params, adversary, rng)
        g_norm = spectral_norm(mats.stopped_sums, rel_tol).value
        r_norm = spectral_norm(mats.full_sums, rel_tol).value
        if np.any(mats.correction_sums):
            z_norm = spectral_norm(mats.correction_sums, rel_tol).value
        else:
            z_norm = 0.0
        allowance = 10.0 * rel_tol * (r_norm + z_norm) + 1e-9
        if g_norm > r_norm + z_norm + allowance:
            raise SpectralCheckError(
                f"triangle inequality violated: |G|={g_norm} > |R|+|Z|={r_norm + z_norm}"
            )
        g_exc += g_norm > threshold
        r_exc += r_norm > half
        z_exc += z_norm > half
        sum_g += g_norm
        sum_r += r_norm
        sum_z += z_norm
    return [g_exc, r_exc, z_exc, sum_g, sum_r, sum_z]


@dataclass(frozen=True)
class NormBoundReport:
    """Exceedance rates of the iteration-sum norms against the threshold."""

    params: Params
    trials: int
    seed: int
    threshold: float
    probability_bound: float
    exceedance: VerificationVerdict
    half_threshold_exceedances: dict
    mean_norms: dict
    triangle_checked: bool

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "threshold": self.threshold,
            "probability_bound": self.probability_bound,
            "exceedance": self.exceedance.to_dict(),
            "half_threshold_exceedances": self.half_threshold_exceedances,
            "mean_norms": self.mean_norms,
            "triangle_checked": self.triangle_checked,
        }


def verify_norm_bound(params: Params, trials: int = 1000, seed: int = 0, workers: int = 1,
                      rel_tol: float = 1e-6,
                      adversary: StoppingStrategy | None = None) -> NormBoundReport:
    """Sample iteration-sum matrices and check the norm threshold claim.

    Verifies Pr(|G| > (6+2eps) sqrt(n(m+n))) against the 2/(m+n) bound,
    reports the unstopped and correction norms against the half threshold
    (the union-bound split), and hard-fails on any triangle-inequality
    violation between the three computed norms.
    """
    if adversary is None:
        adversary = StoppingStrategy.omniscient_extreme(direction=-1)
    thresholds = derive(params)
    threshold = thresholds.norm_threshold
    counter = partial(
        _norm_trial_counter,
        params_dict=params.to_dict(),
        adversary=adversary,
        threshold=threshold,
        rel_tol=rel_tol,
    )
    tallies = run_blocks(counter, trials, seed, _NORM_TRIAL_BLOCK, workers)
    g_exc, r_exc, z_exc = (int(v) for v in tallies[:3])
    sum_g, sum_r, sum_z = (float(v) for v in tallies[3:])
    bound = 2.0 / (params.m + params.n)
    est = McEstimate.from_counts(g_exc, trials, seed)
    exceedance = verdict_for(
        claim_id="iteration_sum_norm_exceedance",
        empirical=est,
        bound=bound,
        relation="<=",
        details={"threshold": threshold},
    )
    return NormBoundReport(
        params=params,
        trials=trials,
        seed=seed,
        threshold=threshold,
        probability_bound=bound,
        exceedance=exceedance,
        half_threshold_exceedances={
            "full_sums": r_exc,
            "correction_sums": z_exc,
            "half_threshold": threshold / 2.0,
        },
        mean_norms={
            "stopped_sums": sum_g / trials,
            "full_sums": sum_r / trials,
            "correction_sums": sum_z / trials,
        },
        triangle_checked=True,
    )


def export_csv(matrix, path, fmt: str = "%d") -> None:
    """Write a matrix as comma-separated values."""
    np.savetxt(path, np.asarray(matrix), fmt=fmt, delimiter=",")
