"""Pydantic models for experiment configuration and verification reports"""

from typing import Any, Dict, List, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

ModelName = Literal["toda", "nse", "kdv", "mkdv"]
Direction = Literal["below", "above", "info"]


class InitialSpec(BaseModel):
    """Initial-condition preset and its parameters"""
    preset: str = Field(..., description="random, gaussian, soliton, planewave, constant, zero or snapshot")
    params: Dict[str, float] = Field(default_factory=dict, description="Preset parameters")
    path: Optional[str] = Field(default=None, description="Snapshot file for the snapshot preset")


class ExperimentConfig(BaseModel):
    """One experiment: model, discretization, initial data, tolerances"""
    model: ModelName = Field(..., description="Model to verify")
    n: Optional[int] = Field(default=None, ge=1, le=64, description="Toda particle count")
    grid_n: Optional[int] = Field(default=None, ge=16, description="Grid sample count")
    length: Optional[float] = Field(default=None, gt=0, description="Periodic box length")
    initial: InitialSpec = Field(..., description="Initial-condition spec")
    dt: float = Field(..., gt=0, description="Time step")
    T: float = Field(..., gt=0, description="Final time")
    method: Optional[str] = Field(default=None, description="Integrator or scheme")
    tolerances: Dict[str, float] = Field(default_factory=dict, description="Check name -> tolerance")
    seed: int = Field(default=0, description="Random seed")
    output: Optional[str] = Field(default=None, description="Report output directory")
    format: Literal["json", "csv"] = Field(default="json", description="Report format")

    @field_validator("tolerances")
    @classmethod
    def validate_tolerances(cls, v):
        bad = [k for k, tol in v.items() if not tol > 0]
        if bad:
            raise ValueError(f"Tolerances must be positive: {', '.join(sorted(bad))}")
        return v

    @model_validator(mode="after")
    def validate_model_fields(self):
        if self.model == "toda" and self.n is None:
            raise ValueError("Toda experiments need n")
        if self.initial.preset == "snapshot" and not self.initial.path:
            raise ValueError("Snapshot preset needs initial.path")
        return self

    @classmethod
    def from_flat(cls, values: Mapping[str, Optional[str]]) -> "ExperimentConfig":
        """
        Build from flat key=value pairs

        `tolerance.<check>` and `initial.<param>` populate the nested maps;
        `initial.preset` and `initial.path` are the preset name and snapshot path.
        """
        data: Dict[str, Any] = {}
        tolerances: Dict[str, str] = {}
        initial: Dict[str, Any] = {"params": {}}
        for key, value in values.items():
            if value is None:
                continue
            if key.startswith("tolerance."):
                tolerances[key.split(".", 1)[1]] = value
            elif key in ("initial.preset", "initial.path"):
                initial[key.split(".", 1)[1]] = value
            elif key.startswith("initial."):
                initial["params"][key.split(".", 1)[1]] = value
            else:
                data[key] = value
        if "preset" in initial:
            data["initial"] = initial
        if tolerances:
            data["tolerances"] = tolerances
        return cls.model_validate(data)


class CheckResult(BaseModel):
    """Outcome of one verification check"""
    model_config = ConfigDict(populate_by_name=True)

    name: str = Field(..., description="Check name")
    value: float = Field(..., description="Measured value")
    tolerance: float = Field(..., description="Threshold")
    passed: bool = Field(..., alias="pass", description="Whether the check passed")
    provenance: str = Field(default="", description="Claim the check verifies")
    direction: Direction = Field(default="below", description="below: |value| <= tol; above: |value| > tol")
    skipped: Optional[str] = Field(default=None, description="Reason when the check did not run")

    @classmethod
    def evaluate(
        cls,
        name: str,
        value: float,
        tolerance: float,
        provenance: str = "",
        direction: Direction = "below",
    ) -> "CheckResult":
        value = float(value)
        if direction == "below":
            passed = abs(value) <= tolerance
        elif direction == "above":
            passed = abs(value) > tolerance
        else:
            passed = True
        return cls(
            name=name,
            value=value,
            tolerance=float(tolerance),
            passed=passed,
            provenance=provenance,
            direction=direction,
        )

    @classmethod
    def skip(cls, name: str, reason: str, provenance: str = "") -> "CheckResult":
        return cls(name=name, value=0.0, tolerance=0.0, passed=True, provenance=provenance,
                   direction="info", skipped=reason)


class CalibrationRecord(BaseModel):
    """Conventions fixed for the run"""
    toda: Optional[Dict[str, Any]] = Field(default=None, description="Sign/pairing convention of the Y -> I pipeline")
    bracket_scales: Dict[str, float] = Field(default_factory=dict, description="Field bracket scale per structure")
    normalizations: Dict[str, float] = Field(default_factory=dict, description="Display L_E omega normalization per model")


class Report(BaseModel):
    """Verification report for one experiment (or the combined suite)"""
    config: Dict[str, Any] = Field(default_factory=dict, description="Configuration echo")
    calibration: CalibrationRecord = Field(default_factory=CalibrationRecord)
    series: Dict[str, List[List[float]]] = Field(default_factory=dict, description="name -> [[t, value], ...]")
    checks: List[CheckResult] = Field(default_factory=list)
    metadata: Dict[str, Any] = Field(default_factory=dict, description="Runtime metadata")
    exit_code: int = Field(default=0, description="Process exit code for this report")

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> List[CheckResult]:
        return [c for c in self.checks if not c.passed]

    def add(self, check: CheckResult) -> CheckResult:
        self.checks.append(check)
        return check

    def add_series(self, name: str, times, values) -> None:
        self.series[name] = [[float(t), float(v)] for t, v in zip(times, values)]

    def comparable(self) -> Dict[str, Any]:
        """Dump without the timing block, for determinism comparisons"""
        data = self.model_dump(by_alias=True)
        data["metadata"] = {k: v for k, v in data["metadata"].items() if k != "timing"}
        return data
