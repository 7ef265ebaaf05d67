"""Nonparametric estimators for bivariate current-status and interval-censored data.

Three estimators of a bivariate distribution function from censored
observations: the NPMLE on canonical-rectangle corners (or a user sieve)
with Fenchel duality certification, the boundary-corrected smoothed MLE,
and a purely discrete local-ratio plug-in estimator, together with their
asymptotic bias/sd formulas and a Monte Carlo comparison harness.
"""

from .censdata import (
    CASE2,
    CURRENT_STATUS,
    CensoringRectangle,
    CurrentStatusObs,
    Dataset,
    DatasetError,
    RectangleParseError,
    RectangleValidationError,
    bf_csv_path,
    bf_dataset,
    cs_to_rectangles,
    parse_rectangle_csv,
    serialize_rectangle_csv,
)
from .geometry import (
    CanonicalRectangle,
    IncidenceMatrix,
    finite_sentinel,
    incidence,
    mass_candidates,
    maximal_intersections,
    upper_corners,
)
from .kernels import (
    KernelSpec,
    TRIWEIGHT_SECOND_MOMENT,
    TRIWEIGHT_SQUARED_INTEGRAL,
    fourth_order_triweight,
    integrated_fourth_order_triweight,
    integrated_triweight,
    integrated_triweight_tail,
    triweight,
)
from .npmle import (
    CertificateError,
    DiscreteDistribution,
    FitReport,
    UnfittableDataError,
    fenchel_check_cs,
    fenchel_check_ic2,
    fit,
    fit_dataset,
    loglik,
    random_sieve,
)
from .plugin import (
    EmptyCellError,
    PluginGrid,
    build_plugin_grid,
    cumulate_masses,
    plugin_asymptotics,
    plugin_eval,
    plugin_eval_boundary,
    scale_constant,
    solve_masses,
)
from .simstudy import (
    Scenario,
    StudyResult,
    make_cs_sample,
    run_study,
    sample_truth,
)
from .smle import (
    SmleEstimate,
    default_bandwidth,
    smle_asymptotics,
    smle_eval,
    smle_grid,
    smle_marginal,
)

__version__ = "0.1.0"
