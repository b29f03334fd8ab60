from htdp.harness.audits import AUDITS, AuditResult, run_audits
from htdp.harness.config import ExperimentConfig, load_config, parse_config
from htdp.harness.runner import read_rows, rows_to_csv, run_experiment, write_rows
from htdp.harness.scaling import ScalingReport, fit_scaling

__all__ = [
    "AUDITS", "AuditResult", "run_audits", "ExperimentConfig", "load_config", "parse_config",
    "read_rows", "rows_to_csv", "run_experiment", "write_rows", "ScalingReport", "fit_scaling",
]
