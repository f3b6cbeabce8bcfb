"""coinlab: a verification lab for adversarially stopped coinflip sums.

Exact combinatorics and Monte Carlo experiments for the deviation behavior
of summed coin streams under adversarial stopping, a one-round global-coin
simulator, and spectral-norm concentration checks for iteration-sum
matrices.
"""
from .bounds import ClaimReport, DerivedThresholds, Params, check_claims, derive, lemma52_part1_bound
from .exact import (
    ExactProb,
    chernoff_tail,
    prob_max_ge_enumeration,
    prob_max_ge_reflection,
    prob_sum_eq,
    prob_sum_ge,
)
from .iteration import (
    AgreementResult,
    IterationConfig,
    IterationRecord,
    good_event_frequency,
    run_agreement,
    run_iteration,
)
from .matrices import (
    ConvergenceError,
    IterationSumMatrices,
    NormBoundReport,
    NormEstimate,
    SpectralCheckError,
    StoppedCoinMatrix,
    build_G,
    build_H,
    norm_2x2,
    spectral_norm,
    verify_norm_bound,
)
from .mc import (
    Lemma52Part2Report,
    McEstimate,
    VerificationVerdict,
    clopper_pearson,
    verify_fact3_mc,
    verify_lemma52_part1,
    verify_lemma52_part2,
    verify_lemma71,
)
from .walks import StoppedStream, StoppingStrategy, WalkTrace, apply_stop, generate_walk

__version__ = "0.1.0"
