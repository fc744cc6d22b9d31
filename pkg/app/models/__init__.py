"""Pydantic models and sample containers."""

from app.models.reports import (
    SCORER_NAMES,
    AcceptanceReport,
    Aggregate,
    CriterionResult,
    MetricReport,
    RunManifest,
    SeedMetrics,
)
from app.models.scenario import (
    ClassSpec,
    DomainSpec,
    SampleSet,
    Scenario,
    ScenarioCounts,
    ScenarioSpec,
)
from app.models.training import AugmentConfig, LossBreakdown, TrainConfig, VaeConfig

__all__ = [
    # reports
    "SCORER_NAMES",
    "AcceptanceReport",
    "Aggregate",
    "CriterionResult",
    "MetricReport",
    "RunManifest",
    "SeedMetrics",
    # scenario
    "ClassSpec",
    "DomainSpec",
    "SampleSet",
    "Scenario",
    "ScenarioCounts",
    "ScenarioSpec",
    # training
    "AugmentConfig",
    "LossBreakdown",
    "TrainConfig",
    "VaeConfig",
]
