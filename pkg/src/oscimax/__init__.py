"""Numerical laboratory for oscillatory maximal averages.

The package measures the sliding-window averages

    (1/2r) * integral over [x-r, x+r] of f(t) exp(i g(x, x-t)) dt

over all radii r > 0, for compactly supported test functions f and a small
algebra of phase families g, and compares the measurements against the
analytic bounds that govern them: pointwise domination by the plain maximal
average, lower bounds near shrinking atoms, decay past the support, and
weighted-norm control of the total mass.
"""

from .errors import PhaseDomainError, PreconditionError
from .experiments import (
    ExperimentReport,
    exp_case_census,
    exp_counterexample_divergence,
    exp_decay_remark,
    exp_logbeta_growth,
    exp_positive_bound,
    exp_weight_admissibility,
)
from .maximal import (
    CASE_LABELS,
    MaximalSample,
    SearchConfig,
    classify_case,
    classify_case_detail,
    m_cut_auto,
    maximal_value,
    radius_function,
)
from .norms import (
    UNDEFINED,
    EmbeddingCheck,
    LoglogCheck,
    NormReport,
    WeightReport,
    check_embedding_q,
    check_llogl_lemma,
    cpl_norm,
    hl_maximal,
    hl_maximal_exact,
    llogl_norm,
    lp_derivative,
    lq_norm,
    norm_report,
    power_weight,
    psi_weight,
    weight_admissibility,
    weighted_l1,
)
from .oscquad import (
    QuadResult,
    average,
    fresnel_segment,
    ibp_tail_bound,
    integral_increments,
    osc_integral,
    phase_dt_static,
)
from .phase import (
    Coeff,
    CurvedPowerSum,
    LaurentPoly,
    Quadratic,
    Separable,
    ZeroPhase,
    binom_coeff,
    binom_series_tail,
    dt_abs_sup,
    eval_phase,
    modified_amplitude_phase,
    phase_dt,
    phase_from_json,
    phase_to_json,
)
from .testfns import (
    CounterexampleSpec,
    PiecewiseConstantFn,
    SmoothTestFn,
    atom_fbeta,
    char_fn,
    counterexample_part1,
    counterexample_part2,
    fn_from_json,
    random_step_corpus,
    smooth_bump,
)

__version__ = "0.1.0"

__all__ = [n for n in dir() if not n.startswith("_")]
