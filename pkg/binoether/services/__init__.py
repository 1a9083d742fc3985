"""Services package"""
from binoether.services.calibration_cache import CalibrationCache, get_calibration_cache
from binoether.services.experiment_service import default_config, run_experiment
from binoether.services import report_service

__all__ = [
    "CalibrationCache",
    "get_calibration_cache",
    "default_config",
    "run_experiment",
    "report_service",
]
