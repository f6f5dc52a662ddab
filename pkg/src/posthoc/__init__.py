"""Post hoc false-positive bounds for arbitrary hypothesis selections.

Calibrate a family of candidate rejection sets so that, with probability at
least 1 - alpha, *every* set in the family contains no more true nulls than
its budget allows. From that single guarantee, ``vbar``/``sbar`` give valid
false-positive upper bounds and true-discovery lower bounds for any selection
of hypotheses, chosen after seeing the data.

Layout:

- :mod:`posthoc.bounds` — reference families and the bounds themselves
- :mod:`posthoc.templates` — threshold templates (linear, balanced) and the
  pivotal statistic used to calibrate them
- :mod:`posthoc.calibration` — lambda-calibration against Monte Carlo or
  sign-flip null samples, single-step and step-down
- :mod:`posthoc.models` — Gaussian location models, p-values, samplers
- :mod:`posthoc.experiments` — Monte Carlo harness (joint-error and power
  grids, reference tables) with CSV output
- :mod:`posthoc.cli` — ``posthoc`` command-line interface
- :mod:`posthoc.service` — HTTP service (``posthoc.service.create_app``)

The CLI and service are not imported here so that ``import posthoc`` stays
light; use ``posthoc.cli``/``posthoc.service`` directly.
"""

from .bounds import (
    BoundDetail,
    FamilyMember,
    ReferenceFamily,
    ThresholdFamily,
    as_pvalues,
    bound_detail,
    sbar,
    sbar_topk_curve,
    simes_family,
    truncate_family,
    vbar,
    vstar_bruteforce,
    zeta_tilde,
)
from .calibration import (
    Calibration,
    calibrate_known,
    calibrate_unknown,
    calibrator_from_matrix,
    known_calibrator,
    materialize,
    step_down,
    unknown_calibrator,
)
from .experiments import (
    CSV_COLUMNS,
    ExperimentConfig,
    ResultRow,
    averaged_power,
    balanced_grid_config,
    bh_rejections,
    default_alpha_grid,
    derived_mubar,
    jer_grid_config,
    jer_violation,
    power_grid_config,
    resolve_threads,
    run_jer_grid,
    run_orderstat_table,
    run_power_grid,
    run_size_table,
    select_scenario,
    write_csv,
)
from .models import (
    DataModel,
    NullJointSampler,
    flip_statistics,
    normal_upper_tail,
    orderstat_cdf_independent,
    pvalues,
    read_matrix_csv,
    sample_dataset,
    sign_flip,
    sign_flip_transforms,
    test_statistics,
    toeplitz_covariance,
    write_matrix_csv,
)
from .templates import (
    BalancedTemplate,
    ExactBalancedIndependent,
    LinearTemplate,
    fit_balanced_known,
    fit_balanced_unknown,
    psi,
    psi_many,
    template_from_json,
    template_to_json,
)

__version__ = "0.1.0"

__all__ = [
    # bounds
    "BoundDetail",
    "FamilyMember",
    "ReferenceFamily",
    "ThresholdFamily",
    "as_pvalues",
    "bound_detail",
    "sbar",
    "sbar_topk_curve",
    "simes_family",
    "truncate_family",
    "vbar",
    "vstar_bruteforce",
    "zeta_tilde",
    # templates
    "BalancedTemplate",
    "ExactBalancedIndependent",
    "LinearTemplate",
    "fit_balanced_known",
    "fit_balanced_unknown",
    "psi",
    "psi_many",
    "template_from_json",
    "template_to_json",
    # calibration
    "Calibration",
    "calibrate_known",
    "calibrate_unknown",
    "calibrator_from_matrix",
    "known_calibrator",
    "materialize",
    "step_down",
    "unknown_calibrator",
    # models
    "DataModel",
    "NullJointSampler",
    "flip_statistics",
    "normal_upper_tail",
    "orderstat_cdf_independent",
    "pvalues",
    "read_matrix_csv",
    "sample_dataset",
    "sign_flip",
    "sign_flip_transforms",
    "test_statistics",
    "toeplitz_covariance",
    "write_matrix_csv",
    # experiments
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ResultRow",
    "averaged_power",
    "balanced_grid_config",
    "bh_rejections",
    "default_alpha_grid",
    "derived_mubar",
    "jer_grid_config",
    "jer_violation",
    "power_grid_config",
    "resolve_threads",
    "run_jer_grid",
    "run_orderstat_table",
    "run_power_grid",
    "run_size_table",
    "select_scenario",
    "write_csv",
    "__version__",
]
