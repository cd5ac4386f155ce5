"""Analysis of power series that converge on the whole real line.

Coefficient-side obstructions to boundedness (quantitative log-concavity,
sign-run constants), machine-checkable unboundedness certificates, the
backward-shift algebra, convergence-notion counterexamples, and exact
complementary Bell sequence analytics, all with explicit-precision
arithmetic and certified bounds.
"""

__version__ = "0.1.0"

from .bigreal import (
    DEFAULT_PREC,
    BoundedSeriesError,
    RangeOverflowError,
    UndecidableAtPrecision,
)
from .exactnum import QC, QuadVal, exact_sqrt, format_rational, parse_rational
from .series import (
    EvalResult,
    SeriesSpec,
    SignRule,
    TailBound,
    add,
    alternate_flip,
    bell_egf,
    cauchy_product,
    coeff,
    cos_series,
    evaluate,
    exp_neg_2m,
    exp_neg_half_2m,
    exp_neg_sq_over_m,
    explicit,
    gaussian,
    hash_signs,
    l1_norm,
    poly_gaussian,
    recover_head,
    scale,
    series_from_json,
    series_to_json,
    sin_scaled,
    sin_series,
    sup_norm_estimate,
    theta_series,
    user_tail,
)
from .turan import (
    EnvelopeScan,
    LogProfile,
    ThetaPsi,
    ThresholdResult,
    TuranProfile,
    envelope_argmax,
    estimate_chi,
    half_chain_audit,
    run_weight_tail,
    sign_runs,
    theta_psi,
    theta_psi_retry,
    threshold_audit,
    threshold_solve,
    verify_taylor_like,
)
from .certify import (
    Certificate,
    InconclusiveError,
    Witness,
    WindowPreconditionError,
    certify_unbounded,
    recheck,
    witness,
)
from .shift import (
    LeftExtension,
    PeanoResult,
    ResolventSolution,
    kernel_test,
    left_extend,
    peano_membership,
    resolvent_solve,
    shift,
)
from .topology import (
    DensityRow,
    TopologyReport,
    counterexample_suite,
    density_demo,
    erratum_report,
    l1_distance,
)
from .bell import (
    BellSequence,
    bell_sign_runs,
    complementary_bell,
    complementary_bell_egf,
    turan_ratio,
    turan_ratio_table,
    wilf_scan,
)
