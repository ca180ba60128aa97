"""Group-sequential multiple testing with correlation-exploiting bounds.

The package computes exact efficacy boundaries for every intersection
hypothesis of a closed testing family, using the known correlation
structure among test statistics (overlapping populations, shared control
arms) to relax weighted-Bonferroni group-sequential bounds, and ships the
supporting pieces: alpha-spending functions, a multivariate normal
integrator, the closure/shortcut test executors, and an operating-
characteristics simulator.
"""

from .boundaries import (BoundaryTable, ConsonanceViolation,
                         SubsetAnalysisBounds, check_consonance, full_table,
                         solve_alpha_star, solve_inflation, verify_exactness)
from .closure import (RejectionState, run_analysis, run_shortcut, run_trial,
                      shortcut_available)
from .correlation import (ArmPopulationCounts, CorrelationMatrix,
                          corr_from_overlap, corr_multiarm_multipop,
                          corr_shared_control, events_from_prevalence)
from .design import (DesignError, DesignSpec, EventCountMatrix, SpendMethod,
                     SpendingPlan, SpendingTimePolicy, Violation, WeightScheme,
                     WeightingStrategy, all_subsets, load_design, mask_of,
                     parse_design, subset_members, subset_weights, validate)
from .gsbounds import SingleBoundResult, gs_single_bounds
from .mvn import MvnProblem, MvnResult, bvn_cdf, mvn_cdf, orthant_prob
from .simulate import MethodRates, Scenario, SimResult, logrank_z, simulate
from .spending import SpendingFunction, check_well_ordered, spend, spending_time

__version__ = "0.1.0"
