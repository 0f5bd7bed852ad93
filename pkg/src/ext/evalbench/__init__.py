from .ood import OOD_BUCKET, OOD_SOIL, ood_scenarios
from .perturb import PerturbedEnv, perturb_wrap
from .report import (EvalReport, SchemaMismatch, bootstrap_ci95, comparison_table,
                     mean_ci95, plot_reports, recompute_metrics, write_report_csv)
from .suites import (PAPER_SUITE_SIZES, REPORT_SUCCESS_ERROR, EvalSuite,
                     evaluate_dig, evaluate_reach, evaluate_recovery)

__all__ = ["EvalReport", "EvalSuite", "OOD_BUCKET", "OOD_SOIL",
           "PAPER_SUITE_SIZES", "PerturbedEnv", "REPORT_SUCCESS_ERROR",
           "SchemaMismatch", "bootstrap_ci95", "comparison_table",
           "evaluate_dig", "evaluate_reach", "evaluate_recovery", "mean_ci95",
           "ood_scenarios", "perturb_wrap", "plot_reports", "recompute_metrics",
           "write_report_csv"]
