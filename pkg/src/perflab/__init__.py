"""perflab: a numerical laboratory for performative prediction.

Models instances where deploying parameters theta changes the sampled
distribution D(theta), estimates and optimizes the deployed (performative)
risk, certifies regularity conditions empirically, and validates distance
and suboptimality bounds against brute-force oracles.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import ConstantSet, Instance, ParamBox, SeedSpec, project
from .config import (
    dumps_instance,
    instances_equal,
    load_instance,
    load_instance_path,
    make_gaussian_mean_instance,
)
from .distmaps import (
    GaussianLocationScale,
    SampleBatch,
    StrategicResponse,
    analytic_sensitivity,
    closed_form_mean_cov,
    data_region,
    sample,
    score,
)
from .errors import (
    ConfigError,
    ContractError,
    DivergenceError,
    MissingConstantError,
    PerflabError,
    UnsupportedMapError,
)
from .losses import (
    LogisticRidge,
    SquaredRidge,
    analytic_constants,
    grad_theta,
    grad_z,
    loss_value,
)
from .risk import (
    GradEstimate,
    RiskEstimate,
    dpr,
    fd_grad_pr,
    performative_gradient,
    pr,
    subopt_gap,
)
from .transport import W1Estimate, w1, w1_gaussian
from .solvers import (
    OracleResult,
    Trajectory,
    fixed_point_oracle_ps,
    grid_oracle_po,
    inner_argmin,
    pgd,
    rgd,
    rrm,
)
from .conditions import (
    ChainAudit,
    ConditionReport,
    TheoremReport,
    chain_audit,
    chain_audit_target,
    check_condition,
    check_lipschitz,
    check_mixture_dominance,
    check_rsi_transfer,
    check_sensitivity,
    check_smoothness,
    check_target_condition,
    check_weak_convexity_transfer,
)
from .targets import (
    ProbeTarget,
    dpr_target,
    flat_bottom_target,
    pr_target,
    quadratic_target,
    quartic_target,
)
from .bounds import (
    Certificate,
    certify_all,
    distance_bound_bounded_shift,
    distance_bound_sensitivity,
    gap_inequality_residual,
    pl_transport_ratio_probe,
    pr_gap_bound,
    stable_optimality_certificate,
)
