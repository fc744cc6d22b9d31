"""Experiment reports, acceptance results and run manifests."""

from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from app.constants import ACCEPTANCE_SCHEMA, REPORT_SCHEMA

SCORER_NAMES = ("confidence", "perturbation", "prototype", "vae", "cds", "discriminator")


class SeedMetrics(BaseModel):
    """Metrics of one seed's pipeline run."""

    seed: int
    accuracy: float = Field(..., ge=0.0, le=1.0)
    erm_accuracy: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    auc_ukc: Optional[float] = Field(default=None, ge=0.0, le=1.0)
    auc_ukd: Optional[float] = Field(default=None, ge=0.0, le=1.0, description="w_d vs is_ukd")
    auc_ukd_recon: Optional[float] = Field(default=None, ge=0.0, le=1.0, description="raw L_re vs is_ukd")
    domain_separation: Dict[str, Optional[float]] = Field(default_factory=dict)
    ablations: Dict[str, float] = Field(default_factory=dict, description="test accuracy per switched-off component")
    w_uc_range: List[float] = Field(default_factory=list, description="[min, max] of final w_uc")
    w_d_range: List[float] = Field(default_factory=list, description="[min, max] of w_d")
    max_softmax_row_error: float = Field(default=0.0, ge=0.0)


class Aggregate(BaseModel):
    """Mean and (population) std of one metric across seeds."""

    mean: Optional[float]
    std: Optional[float]
    n: int


class MetricReport(BaseModel):
    """Per-seed rows plus aggregates. `runtime_seconds` is excluded from the body."""

    schema_version: str = Field(default=REPORT_SCHEMA, alias="schema")
    scenario: str
    config: Dict[str, Any]
    seeds: List[SeedMetrics]
    aggregate: Dict[str, Aggregate]
    runtime_seconds: float = 0.0

    model_config = {"populate_by_name": True}

    def body(self) -> Dict[str, Any]:
        """Deterministic part of the report (no timing)."""
        return self.model_dump(mode="json", by_alias=True, exclude={"runtime_seconds"})


class CriterionResult(BaseModel):
    """Outcome of one acceptance criterion."""

    number: int
    name: str
    passed: bool
    value: Optional[float] = None
    threshold: Optional[float] = None
    detail: str = ""


class AcceptanceReport(BaseModel):
    schema_version: str = Field(default=ACCEPTANCE_SCHEMA, alias="schema")
    seeds: List[int]
    criteria: List[CriterionResult]
    experiment: Optional[MetricReport] = None

    model_config = {"populate_by_name": True}

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.criteria)

    def body(self) -> Dict[str, Any]:
        data = self.model_dump(mode="json", by_alias=True, exclude={"experiment"})
        if self.experiment is not None:
            data["experiment"] = self.experiment.body()
        return data


class RunManifest(BaseModel):
    """Everything needed to rerun a CLI invocation exactly."""

    subcommand: str
    argv: List[str]
    config: Dict[str, Any] = Field(default_factory=dict)
    seeds: List[int] = Field(default_factory=list)
    inputs: Dict[str, str] = Field(default_factory=dict)
    outputs: Dict[str, str] = Field(default_factory=dict)
    tool_version: str
    started_at: str
    finished_at: Optional[str] = None
    status: str = "running"
    error: Optional[str] = None
    runtime_seconds: Optional[float] = None
