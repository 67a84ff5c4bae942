from .analysis import (
    PdfEstimate,
    ScreeningResult,
    SobolReport,
    TooManyFailures,
    analyze_second_order,
    coefficient_of_variation,
    default_sample_count,
    evaluate_batch,
    evaluate_point,
    fit_pce,
    pdf_estimate,
    screen_first_order,
    sobol_report,
)
from .params import (
    DesignMatrix,
    UncertainParameter,
    apply_parameters,
    default_parameters,
    latin_hypercube,
    sample,
)
from .pce import (
    PolynomialChaosRegressor,
    RankDeficient,
    ZeroVariance,
    design_matrix,
    legendre_normalized,
    moments,
    n_terms,
    sobol_total,
    total_degree_indices,
)

__all__ = [
    "DesignMatrix",
    "PdfEstimate",
    "PolynomialChaosRegressor",
    "RankDeficient",
    "ScreeningResult",
    "SobolReport",
    "TooManyFailures",
    "UncertainParameter",
    "ZeroVariance",
    "analyze_second_order",
    "apply_parameters",
    "coefficient_of_variation",
    "default_parameters",
    "default_sample_count",
    "design_matrix",
    "evaluate_batch",
    "evaluate_point",
    "fit_pce",
    "latin_hypercube",
    "legendre_normalized",
    "moments",
    "n_terms",
    "pdf_estimate",
    "sample",
    "screen_first_order",
    "sobol_report",
    "sobol_total",
    "total_degree_indices",
]
