"""
Experiment configuration validation
Collects every problem in a config before anything runs
"""

import logging
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError

from binoether.errors import ConfigValidationError
from binoether.models import ExperimentConfig

logger = logging.getLogger(__name__)

REQUIRED_KEYS = ("model", "dt", "T", "initial.preset")

PRESETS = {
    "toda": ("random",),
    "nse": ("gaussian", "planewave", "snapshot"),
    "kdv": ("gaussian", "soliton", "snapshot"),
    "mkdv": ("gaussian", "constant", "zero", "snapshot"),
}

METHODS = {
    "toda": ("leapfrog", "rk4", "yoshida4"),
    "nse": ("strang", "yoshida4"),
    "kdv": ("ifrk4",),
    "mkdv": ("ifrk4",),
}

# Above these steps the FD time derivatives in residual checks lose accuracy
COARSE_DT = {"toda": 1e-2, "nse": 5e-3, "kdv": 5e-3, "mkdv": 5e-3}


class ExperimentValidator:
    """Validates a flat key=value experiment config"""

    def __init__(self, values: Mapping[str, Optional[str]], source: str = "<config>"):
        self.values = dict(values)
        self.source = source
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def validate(self) -> ExperimentConfig:
        """
        Run all checks
        Returns the parsed config, raises ConfigValidationError listing every error
        """
        logger.info(f"🔍 Validating experiment config {self.source}...")

        self._validate_required()
        config = self._validate_schema()
        if config is not None:
            self._validate_model_params(config)
            self._check_time_step(config)
            self._check_snapshot(config)

        if self.errors:
            error_msg = self._format_errors()
            logger.error(f"\n{error_msg}")
            raise ConfigValidationError(error_msg)

        if self.warnings:
            logger.warning(f"\n{self._format_warnings()}")

        logger.info("✅ Experiment config valid")
        return config

    def _validate_required(self):
        missing = [k for k in REQUIRED_KEYS if not self.values.get(k)]
        if missing:
            self.errors.append(f"❌ Missing required fields: {', '.join(missing)}")

    def _validate_schema(self) -> Optional[ExperimentConfig]:
        if self.errors:
            return None
        try:
            return ExperimentConfig.from_flat(self.values)
        except ValidationError as e:
            for err in e.errors():
                loc = ".".join(str(p) for p in err["loc"]) or "config"
                self.errors.append(f"❌ {loc}: {err['msg']}")
        return None

    def _validate_model_params(self, config: ExperimentConfig):
        if config.initial.preset not in PRESETS[config.model]:
            self.errors.append(
                f"❌ Preset '{config.initial.preset}' not available for {config.model}\n"
                f"   Choose one of: {', '.join(PRESETS[config.model])}"
            )
        if config.method and config.method not in METHODS[config.model]:
            self.errors.append(
                f"❌ Method '{config.method}' not available for {config.model}\n"
                f"   Choose one of: {', '.join(METHODS[config.model])}"
            )
        if config.model != "toda":
            if config.grid_n is not None and config.grid_n & (config.grid_n - 1):
                self.errors.append(f"❌ grid_n must be a power of two, got {config.grid_n}")
            if config.n is not None:
                self.warnings.append(f"⚠️  n is ignored for {config.model}")
        elif config.grid_n is not None or config.length is not None:
            self.warnings.append("⚠️  grid_n and length are ignored for toda")

    def _check_time_step(self, config: ExperimentConfig):
        if config.dt > COARSE_DT[config.model]:
            self.warnings.append(
                f"⚠️  dt = {config.dt:g} is coarse for {config.model} "
                f"(residual checks expect dt <= {COARSE_DT[config.model]:g})"
            )
        if config.dt >= config.T:
            self.errors.append(f"❌ dt = {config.dt:g} must be smaller than T = {config.T:g}")

    def _check_snapshot(self, config: ExperimentConfig):
        if config.initial.preset == "snapshot" and config.initial.path:
            if not Path(config.initial.path).is_file():
                self.errors.append(f"❌ Snapshot file not found: {config.initial.path}")

    def _format_errors(self) -> str:
        lines = [
            "=" * 60,
            f"❌ CONFIG VALIDATION FAILED ({self.source})",
            "=" * 60,
            "",
        ]
        for i, error in enumerate(self.errors, 1):
            lines.append(f"{i}. {error}")
            lines.append("")
        lines.append("=" * 60)
        return "\n".join(lines)

    def _format_warnings(self) -> str:
        lines = ["", "⚠️  CONFIG WARNINGS:", "-" * 60]
        for warning in self.warnings:
            lines.append(f"• {warning}")
        lines.append("-" * 60)
        return "\n".join(lines)


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    """Read a flat key=value file and validate it"""
    path = Path(path)
    if not path.is_file():
        raise ConfigValidationError(f"Config file not found: {path}")
    return validate_values(dotenv_values(path), source=str(path))


def validate_values(values: Mapping[str, Optional[str]], source: str = "<config>") -> ExperimentConfig:
    return ExperimentValidator(values, source).validate()


def config_values(config: ExperimentConfig) -> Dict[str, str]:
    """Flatten a config back to key=value pairs"""
    out: Dict[str, str] = {}
    data = config.model_dump(exclude_none=True)
    initial = data.pop("initial")
    tolerances = data.pop("tolerances", {})
    for key, value in data.items():
        out[key] = str(value)
    out["initial.preset"] = initial["preset"]
    if initial.get("path"):
        out["initial.path"] = initial["path"]
    for key, value in initial.get("params", {}).items():
        out[f"initial.{key}"] = repr(float(value))
    for key, value in tolerances.items():
        out[f"tolerance.{key}"] = repr(float(value))
    return out
