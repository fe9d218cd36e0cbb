"""Reward-guided discrete diffusion sampling on enumerable toy spaces.

The package centers on a Metropolis-Hastings chain over clean sequences
whose proposals corrupt and partially reverse a discrete diffusion model,
plus best-of-n, particle-filter, and stepwise-selection baselines, and an
exact enumeration engine that verifies the chain's stationary distribution
to floating-point precision.
"""

from .baselines import (
    BaselineConfig,
    BonResult,
    SelectionRule,
    SmcResult,
    SvddResult,
    best_of_n,
    intermediate_reward,
    selection_weights,
    smc,
    svdd,
)
from .core import (
    CategoricalDist,
    NoiseSchedule,
    Sequence,
    Vocabulary,
    chain_rng,
    linear_schedule,
    sample_categorical,
    sample_index,
    sample_rows,
)
from .csmc_sampler import (
    BatchResult,
    ChainResult,
    CsmcConfig,
    ProposalRecord,
    acceptance,
    draw_samples,
    propose,
    retained_length,
    run_batched,
    run_chain,
)
from .denoiser import (
    CountingDenoiser,
    DataDistribution,
    Denoiser,
    FactorizedDenoiser,
    OracleDenoiser,
    sample_x0_prediction,
)
from .diagnostics import (
    SummaryStats,
    acceptance_rate,
    autocorrelation,
    diversity,
    reward_summary,
)
from .exact_engine import (
    EnumeratedSpace,
    VerificationReport,
    exact_mh_kernel,
    exact_mstep_kernel,
    exact_proposal_kernel,
    exact_target,
    power_iteration,
    reversibility_residual,
    reward_vector,
    stationarity_residual,
    tv_distance,
    verify_fixture,
)
from .forward_process import (
    ModelKind,
    TransitionModel,
    corrupt,
    cumulative_matrix,
    marginal,
    marginal_matrix,
    posterior,
    posterior_window,
    posterior_window_tensor,
    transition_matrix,
    transition_matrix_window,
)
from .rewards import (
    ExternalRewardClient,
    GatedBracketReward,
    PatternReward,
    RewardEvaluationError,
    RewardFn,
    RewardTransportError,
    TokenCountReward,
    evaluate_reward,
)
from .reverse_sampler import (
    denoise_jump,
    denoise_step,
    generate,
    partial_reverse,
    prior_sample,
    reverse_grid,
)

__all__ = [name for name in dir() if not name.startswith("_")]
