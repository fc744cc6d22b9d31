"""Metrics and multi-seed experiments."""

from __future__ import annotations

import time
from typing import Any, Optional, Sequence

import numpy as np
from scipy.stats import rankdata

from app.exceptions import ConfigError, MetricError
from app.logging import get_logger, log_context
from app.models.reports import SCORER_NAMES, Aggregate, MetricReport, SeedMetrics
from app.models.scenario import Scenario, ScenarioSpec
from app.models.training import AugmentConfig, TrainConfig
from app.networks.bundle import ModelBundle
from app.networks.vae import Vae
from app.services.cds_service import CdsResult, GmmFit, posterior_ukd, recon_errors, run_cds
from app.services.doe_service import PrototypeSet, score_unlabeled
from app.services.synthdata_service import generate_from_spec, with_seed
from app.services.training_service import erm_config, predict, train
from app.utils.seeding import stage_rng

logger = get_logger(__name__)

# Component ablations: report label -> TrainConfig switches turned off
ABLATIONS: dict[str, dict[str, bool]] = {
    "w/o SSL": {"use_ssl": False},
    "w/o DOE": {"use_doe": False},
    "w/o CDS": {"use_cds": False},
    "w/o DA": {"use_adversarial": False},
}


def auc_roc(scores: np.ndarray, labels: np.ndarray) -> float:
    """P(random positive outranks random negative), ties counted ½.

    Uses the Mann-Whitney rank-sum form with average ranks for ties.

    Raises:
        MetricError: On length mismatch or single-class labels
    """
    scores = np.asarray(scores, dtype=np.float64).reshape(-1)
    labels = np.asarray(labels).reshape(-1).astype(bool)
    if scores.shape != labels.shape:
        raise MetricError("scores and labels differ in length", details={"scores": scores.size, "labels": labels.size})
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise MetricError("AUC needs both positive and negative labels", details={"positives": n_pos, "negatives": n_neg})
    ranks = rankdata(scores, method="average")
    u = ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    predictions = np.asarray(predictions).reshape(-1)
    labels = np.asarray(labels).reshape(-1)
    if predictions.shape != labels.shape:
        raise MetricError(
            "predictions and labels differ in length",
            details={"predictions": predictions.size, "labels": labels.size},
        )
    if labels.size == 0:
        raise MetricError("accuracy of an empty set is undefined")
    return float(np.mean(predictions == labels))


def _optional_auc(scores: np.ndarray, labels: np.ndarray) -> Optional[float]:
    labels = np.asarray(labels, dtype=bool)
    if labels.size == 0 or labels.all() or not labels.any():
        return None
    return auc_roc(scores, labels)


def domain_separation(
    bundle: ModelBundle,
    protos: PrototypeSet,
    vae: Optional[Vae],
    gmm: Optional[GmmFit],
    scenario: Scenario,
    aug: AugmentConfig,
    rng: np.random.Generator,
) -> dict[str, Optional[float]]:
    """AUC against is_ukd on the unlabeled pool for every scorer.

    Every scorer is oriented so that larger means "more likely unknown
    domain". Scorers that cannot be computed, or whose AUC is undefined,
    map to None.
    """
    pool = scenario.unlabeled
    table: dict[str, Optional[float]] = {name: None for name in SCORER_NAMES}
    if len(pool) == 0:
        return table

    probs = bundle.predict_proba(pool.x)
    ukc = score_unlabeled(bundle, protos, pool.x, aug, rng)
    table["confidence"] = _optional_auc(1.0 - probs.max(axis=1), pool.is_ukd)
    table["perturbation"] = _optional_auc(ukc.p_ood, pool.is_ukd)
    table["prototype"] = _optional_auc(ukc.d_avg, pool.is_ukd)
    if vae is not None:
        l_re = recon_errors(vae, pool.x)
        table["vae"] = _optional_auc(l_re, pool.is_ukd)
        if gmm is not None:
            table["cds"] = _optional_auc(posterior_ukd(gmm, l_re), pool.is_ukd)
    table["discriminator"] = _optional_auc(
        bundle.discriminate_dom(bundle.extract(pool.x)).data[:, 0], pool.is_ukd
    )
    return table


def _run_seed(
    spec: ScenarioSpec,
    config: TrainConfig,
    seed: int,
    with_erm: bool,
    ablations: Sequence[str] = (),
) -> SeedMetrics:
    scenario = generate_from_spec(with_seed(spec, seed))
    cfg = config.model_copy(update={"seed": seed})
    pool = scenario.unlabeled

    cds: Optional[CdsResult] = None
    if not cfg.drop_unlabeled and len(pool) > 0:
        cds = run_cds(scenario, cfg)
    bundle = ModelBundle.from_config(scenario.input_dim, scenario.known_class_count, cfg)
    result = train(scenario, bundle, cds, cfg)

    test_probs = bundle.predict_proba(scenario.test.x)
    metrics: dict[str, Any] = {
        "seed": seed,
        "accuracy": accuracy(np.argmax(test_probs, axis=1), scenario.test.class_id),
        "max_softmax_row_error": float(np.max(np.abs(test_probs.sum(axis=1) - 1.0))) if len(scenario.test) else 0.0,
    }
    if result.ukc_scores is not None:
        w_uc = result.ukc_scores.w_uc
        metrics["auc_ukc"] = _optional_auc(1.0 - w_uc, pool.is_ukc)
        metrics["w_uc_range"] = [float(w_uc.min()), float(w_uc.max())]
    if cds is not None:
        metrics["auc_ukd"] = _optional_auc(cds.scores.w_d, pool.is_ukd)
        metrics["auc_ukd_recon"] = _optional_auc(cds.scores.l_re, pool.is_ukd)
        metrics["w_d_range"] = [float(cds.scores.w_d.min()), float(cds.scores.w_d.max())]
        metrics["domain_separation"] = domain_separation(
            bundle,
            result.prototypes,
            cds.vae,
            cds.gmm,
            scenario,
            cfg.aug,
            stage_rng(seed, "scoring"),
        )

    if with_erm:
        erm_bundle = ModelBundle.from_config(scenario.input_dim, scenario.known_class_count, cfg)
        train(scenario, erm_bundle, None, erm_config(cfg))
        metrics["erm_accuracy"] = accuracy(predict(erm_bundle, scenario.test.x), scenario.test.class_id)

    # Domain separation does not depend on the switches, so every variant reuses `cds`
    metrics["ablations"] = {}
    for name in ablations:
        variant = cfg.model_copy(update=ABLATIONS[name])
        variant_bundle = ModelBundle.from_config(scenario.input_dim, scenario.known_class_count, variant)
        with log_context(ablation=name):
            train(scenario, variant_bundle, cds, variant)
        metrics["ablations"][name] = accuracy(predict(variant_bundle, scenario.test.x), scenario.test.class_id)

    seed_metrics = SeedMetrics(**metrics)
    logger.info(
        "Seed finished",
        seed=seed,
        accuracy=seed_metrics.accuracy,
        erm_accuracy=seed_metrics.erm_accuracy,
        auc_ukc=seed_metrics.auc_ukc,
        auc_ukd=seed_metrics.auc_ukd,
    )
    return seed_metrics


def aggregate(rows: Sequence[SeedMetrics]) -> dict[str, Aggregate]:
    """Mean and population std of every numeric column over the seeds that have it."""
    columns: dict[str, list[float]] = {}

    def add(name: str, value: Optional[float]) -> None:
        columns.setdefault(name, [])
        if value is not None:
            columns[name].append(value)

    for row in rows:
        for name in ("accuracy", "erm_accuracy", "auc_ukc", "auc_ukd", "auc_ukd_recon"):
            add(name, getattr(row, name))
        for scorer in SCORER_NAMES:
            add(f"domain_separation.{scorer}", row.domain_separation.get(scorer))
        for name, value in row.ablations.items():
            add(f"ablation.{name}", value)
    if rows and all(row.erm_accuracy is not None for row in rows):
        columns["accuracy_gain"] = [row.accuracy - row.erm_accuracy for row in rows]

    return {
        name: Aggregate(
            mean=float(np.mean(values)) if values else None,
            std=float(np.std(values)) if values else None,
            n=len(values),
        )
        for name, values in columns.items()
    }


def run_experiment(
    spec: ScenarioSpec,
    config: TrainConfig,
    seeds: Sequence[int],
    scenario_name: str = "custom",
    with_erm: bool = True,
    ablations: Sequence[str] = (),
) -> MetricReport:
    """Full pipeline per seed, then aggregation.

    Each seed regenerates the scenario from `spec` with that seed, pre-trains
    the VAE, fits the mixture, trains the networks and, unless disabled,
    trains the supervised baseline on the same labeled data. Every name in
    `ablations` (keys of `ABLATIONS`) trains one more model with that
    component switched off and reports its test accuracy.

    Raises:
        MetricError: If `seeds` is empty
        ConfigError: On an unknown ablation name
    """
    if len(seeds) == 0:
        raise MetricError("run_experiment needs at least one seed")
    unknown = [name for name in ablations if name not in ABLATIONS]
    if unknown:
        raise ConfigError("Unknown ablation", details={"unknown": unknown, "choices": list(ABLATIONS)})
    started = time.perf_counter()
    rows = []
    for seed in seeds:
        with log_context(seed=seed, stage="experiment"):
            rows.append(_run_seed(spec, config, int(seed), with_erm, ablations))
    report = MetricReport(
        scenario=scenario_name,
        config=config.model_dump(mode="json"),
        seeds=rows,
        aggregate=aggregate(rows),
        runtime_seconds=time.perf_counter() - started,
    )
    logger.info("Experiment finished", seeds=len(rows), runtime_seconds=report.runtime_seconds)
    return report
