"""Partial conjunction testing over voxel-by-subject p-value maps."""

__version__ = "0.1.0"

from .core import (LowerBounds, PcField, PValueMatrix, PValueRangeError, RejectionSet,
                   TruthVector, new_pvalue_matrix)
from .combine import conditional_pc, fisher_pc_pvalue, pc_field
from .metrics import aggregate, overall_fdp, power_beta, trial_metrics
from .procedures import (Procedure, adafilter, analyze, benjamini_heller, bh, cofilter_adaptive,
                         cofilter_fixed, default_tau_grid, superimpose)
from .simulate import EquiCorrScenario, PhantomScenario, delta_profile, run_study, simulate_trials

__all__ = [
    "LowerBounds", "PcField", "PValueMatrix", "PValueRangeError", "RejectionSet", "TruthVector",
    "new_pvalue_matrix", "conditional_pc", "fisher_pc_pvalue", "pc_field", "aggregate",
    "overall_fdp", "power_beta", "trial_metrics", "Procedure", "adafilter", "analyze",
    "benjamini_heller", "bh", "cofilter_adaptive", "cofilter_fixed", "default_tau_grid",
    "superimpose", "EquiCorrScenario", "PhantomScenario", "delta_profile", "run_study",
    "simulate_trials",
]
