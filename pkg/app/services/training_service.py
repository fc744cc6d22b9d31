"""Joint optimization of F, C, D and D′.

Epochs before `warmup_epochs` minimize cross-entropy on the labeled split
only. Afterwards every epoch:

1. recomputes prototypes from the labeled features and the known-class
   weights w_uc of the unlabeled pool,
2. reads w′_ud = D′(F(x_u)) as constants,
3. runs mini-batch SGD on L_CE + β·L_SSL + the gradient-reversed
   adversarial term (λ = α),

and, in both phases, D′ takes one full-pool L_dom step on detached features
at the end of the epoch.

Labeled shuffling, unlabeled shuffling, augmentation and scoring each draw
from their own stream, so the degenerate configuration (no unlabeled data,
β = α = 0) replays `train_supervised` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.constants import RAMPUP_SHARPNESS
from app.exceptions import ConfigError, NumericError, TrainingDivergedError
from app.logging import get_logger
from app.models.scenario import Scenario
from app.models.training import AugmentConfig, LossBreakdown, TrainConfig
from app.networks.bundle import ModelBundle
from app.numerics import Tensor, bce, column, cross_entropy, one_hot, row_sq_norm, sgd_step
from app.services.cds_service import CdsResult, domain_loss
from app.services.doe_service import PrototypeSet, UkcScores, labeled_prototypes, score_unlabeled
from app.services.synthdata_service import augment
from app.utils.seeding import stage_rng

logger = get_logger(__name__)


@dataclass
class TrainResult:
    """Trained bundle, per-epoch history and the final unlabeled weights."""

    bundle: ModelBundle
    history: list[LossBreakdown]
    w_uc: np.ndarray
    w_ud: np.ndarray
    w_d: np.ndarray
    prototypes: Optional[PrototypeSet] = None
    ukc_scores: Optional[UkcScores] = None
    l_ce_trace: list[float] = field(default_factory=list)


def rampup(epoch: int, warmup_epochs: int) -> float:
    """exp(−5(1 − t)²) with t = min(epoch / warmup_epochs, 1)."""
    if epoch < 0:
        raise ConfigError("epoch must be non-negative", details={"epoch": epoch})
    if warmup_epochs <= 0:
        return 1.0
    t = min(epoch / warmup_epochs, 1.0)
    return math.exp(-RAMPUP_SHARPNESS * (1.0 - t) ** 2)


def consistency_loss(
    bundle: ModelBundle,
    x_u: np.ndarray,
    w_uc: np.ndarray,
    aug: AugmentConfig,
    rng: np.random.Generator,
) -> Tensor:
    """Π-model term: mean_i w_uc,i · ‖p(view₁) − p(view₂)‖₂².

    Both views are differentiated; the weights are constants.
    """
    view_1 = augment(x_u, aug, rng)
    view_2 = augment(x_u, aug, rng)
    p_1 = bundle.classify(bundle.extract(view_1))
    p_2 = bundle.classify(bundle.extract(view_2))
    per_sample = row_sq_norm(p_1 - p_2)
    return (per_sample * column(w_uc)).sum() * (1.0 / per_sample.rows)


def adversarial_loss(
    bundle: ModelBundle,
    x_l: np.ndarray,
    x_u: np.ndarray,
    w_ud: np.ndarray,
    w_uc: np.ndarray,
    lam: float,
    reverse: bool = True,
) -> Tensor:
    """−mean_l log(1 − D(F(x_l))) − mean_u w_ud·w_uc·log D(F(x_u)).

    With `reverse`, the gradient flowing from D into F is multiplied by −lam;
    D's own parameters always see the plain gradient. `reverse=False` is the
    unreversed reference used to check the reversal.
    """
    if lam < 0:
        raise ConfigError("Reversal coefficient must be non-negative", details={"lam": lam})
    scale = lam if reverse else None
    d_l = bundle.discriminate_adv(bundle.extract(x_l), scale)
    loss = bce(d_l, np.zeros(d_l.shape), np.ones(d_l.shape))
    if np.asarray(x_u).shape[0] == 0:
        return loss
    d_u = bundle.discriminate_adv(bundle.extract(x_u), scale)
    weights = column(np.asarray(w_ud) * np.asarray(w_uc))
    return loss + bce(d_u, np.ones(d_u.shape), weights)


def erm_config(config: TrainConfig) -> TrainConfig:
    """The supervised-only degenerate configuration (β = α = 0, no unlabeled data)."""
    return config.model_copy(update={"beta_max": 0.0, "alpha_max": 0.0, "drop_unlabeled": True})


def predict(bundle: ModelBundle, xs: np.ndarray) -> np.ndarray:
    return bundle.predict(xs)


def _batches(order: np.ndarray, batch_size: int) -> list[np.ndarray]:
    return [order[start : start + batch_size] for start in range(0, order.shape[0], batch_size)]


def _ce_step(bundle: ModelBundle, x: np.ndarray, targets: np.ndarray, lr: float) -> float:
    loss = cross_entropy(bundle.classify(bundle.extract(x)), targets)
    loss.backward()
    sgd_step(bundle.store, lr)
    return loss.item()


def _record(epoch: int, phase: str, **values: float) -> LossBreakdown:
    entry = LossBreakdown(epoch=epoch, phase=phase, **values)
    for name, value in values.items():
        if not math.isfinite(value):
            raise TrainingDivergedError(f"Non-finite {name} in epoch summary", epoch=epoch)
    return entry


def _mean(values: np.ndarray | list[float]) -> float:
    return float(np.mean(values)) if len(values) else 0.0


def train_supervised(scenario: Scenario, bundle: ModelBundle, config: TrainConfig) -> list[LossBreakdown]:
    """Plain cross-entropy loop over the labeled split.

    Draws its shuffles from the same labeled stream as `train`.
    """
    shuffle_rng = stage_rng(config.seed, "labeled_shuffle")
    x_l = scenario.labeled.x
    targets = one_hot(scenario.labeled.class_id, bundle.known_class_count)
    history: list[LossBreakdown] = []
    bundle.store.zero_grad()
    for epoch in range(config.total_epochs):
        r = rampup(epoch, config.warmup_epochs)
        losses = []
        for batch, idx in enumerate(_batches(shuffle_rng.permutation(x_l.shape[0]), config.batch_size)):
            try:
                losses.append(_ce_step(bundle, x_l[idx], targets[idx], config.lr))
            except NumericError as e:
                raise TrainingDivergedError(f"Supervised training diverged: {e.message}", epoch=epoch, batch=batch) from e
        history.append(
            _record(
                epoch,
                "warmup" if epoch < config.warmup_epochs else "joint",
                l_ce=_mean(losses),
                l_ssl=0.0,
                l_adv=0.0,
                l_dom=0.0,
                alpha=config.alpha_max * r,
                beta=config.beta_max * r,
                mean_w_uc=0.0,
                mean_w_d=0.0,
                mean_w_ud=0.0,
            )
        )
        logger.debug("Supervised epoch finished", epoch=epoch, l_ce=history[-1].l_ce)
    return history


def _domain_step(bundle: ModelBundle, x_l: np.ndarray, x_u: np.ndarray, w_d: np.ndarray, lr: float) -> float:
    """One full-pool L_dom step for D′; F receives no gradient."""
    v_l = Tensor(bundle.extract(x_l).data)
    v_u = Tensor(bundle.extract(x_u).data)
    loss = domain_loss(bundle.discriminate_dom(v_l), bundle.discriminate_dom(v_u), w_d)
    loss.backward()
    sgd_step(bundle.store, lr)
    return loss.item()


def train(
    scenario: Scenario,
    bundle: ModelBundle,
    cds: Optional[CdsResult],
    config: TrainConfig,
) -> TrainResult:
    """Run the full schedule on `bundle` (updated in place).

    Args:
        scenario: Validated scenario; only labeled and unlabeled splits are used
        bundle: Freshly initialized networks
        cds: Domain separation of the unlabeled pool; required when the pool is
            used and `use_cds` is on
        config: Schedule, coefficients and ablation switches

    Raises:
        ConfigError: If domain separation is required but missing
        TrainingDivergedError: On a non-finite loss, with epoch/batch
    """
    x_l = scenario.labeled.x
    y_l = scenario.labeled.class_id
    targets = one_hot(y_l, bundle.known_class_count)
    x_u = np.zeros((0, scenario.input_dim)) if config.drop_unlabeled else scenario.unlabeled.x
    n_l, n_u = x_l.shape[0], x_u.shape[0]
    if n_l == 0:
        raise ConfigError("Training needs at least one labeled sample")

    use_cds = config.use_cds and n_u > 0
    if use_cds:
        if cds is None or len(cds.scores) != n_u:
            raise ConfigError("Domain separation scores for the unlabeled pool are required", details={"n_u": n_u})
        w_d = cds.scores.w_d
    else:
        w_d = np.ones(n_u)

    shuffle_rng = stage_rng(config.seed, "labeled_shuffle")
    unlabeled_rng = stage_rng(config.seed, "unlabeled_shuffle")
    augment_rng = stage_rng(config.seed, "augment")
    scoring_rng = stage_rng(config.seed, "scoring")

    w_uc = np.ones(n_u)
    w_ud = np.ones(n_u)
    # Without DOE the Π-model sees the pool re-weighted by w_d alone
    ssl_weights = w_uc if config.use_doe else w_d
    history: list[LossBreakdown] = []
    bundle.store.zero_grad()
    logger.info(
        "Training started",
        epochs=config.total_epochs,
        warmup=config.warmup_epochs,
        labeled=n_l,
        unlabeled=n_u,
        use_doe=config.use_doe,
        use_cds=use_cds,
        use_adversarial=config.use_adversarial,
        use_ssl=config.use_ssl,
    )

    for epoch in range(config.total_epochs):
        r = rampup(epoch, config.warmup_epochs)
        alpha, beta = config.alpha_max * r, config.beta_max * r
        joint = epoch >= config.warmup_epochs
        ce_losses: list[float] = []
        ssl_losses: list[float] = []
        adv_losses: list[float] = []

        if joint and n_u > 0:
            if config.use_doe:
                protos = labeled_prototypes(bundle, x_l, y_l)
                w_uc = score_unlabeled(bundle, protos, x_u, config.aug, scoring_rng).w_uc
                ssl_weights = w_uc
            if use_cds:
                w_ud = bundle.discriminate_dom(bundle.extract(x_u)).data[:, 0].copy()

        labeled_batches = _batches(shuffle_rng.permutation(n_l), config.batch_size)
        if not joint or n_u == 0:
            for batch, idx in enumerate(labeled_batches):
                try:
                    ce_losses.append(_ce_step(bundle, x_l[idx], targets[idx], config.lr))
                except NumericError as e:
                    raise TrainingDivergedError(f"Training diverged: {e.message}", epoch=epoch, batch=batch) from e
        else:
            unlabeled_batches = _batches(unlabeled_rng.permutation(n_u), config.batch_size)
            steps = max(len(labeled_batches), len(unlabeled_batches))
            for batch in range(steps):
                if batch and batch % len(labeled_batches) == 0:
                    labeled_batches = _batches(shuffle_rng.permutation(n_l), config.batch_size)
                idx_l = labeled_batches[batch % len(labeled_batches)]
                idx_u = unlabeled_batches[batch % len(unlabeled_batches)]
                try:
                    total = cross_entropy(bundle.classify(bundle.extract(x_l[idx_l])), targets[idx_l])
                    ce_losses.append(total.item())
                    if config.use_ssl and beta > 0.0:
                        ssl = consistency_loss(bundle, x_u[idx_u], ssl_weights[idx_u], config.aug, augment_rng)
                        ssl_losses.append(ssl.item())
                        total = total + ssl * beta
                    if config.use_adversarial:
                        adv = adversarial_loss(bundle, x_l[idx_l], x_u[idx_u], w_ud[idx_u], w_uc[idx_u], lam=alpha)
                        adv_losses.append(adv.item())
                        total = total + adv
                    total.backward()
                    sgd_step(bundle.store, config.lr)
                except NumericError as e:
                    raise TrainingDivergedError(f"Training diverged: {e.message}", epoch=epoch, batch=batch) from e

        l_dom = 0.0
        if use_cds:
            try:
                l_dom = _domain_step(bundle, x_l, x_u, w_d, config.lr)
            except NumericError as e:
                raise TrainingDivergedError(f"Domain discriminator diverged: {e.message}", epoch=epoch) from e

        history.append(
            _record(
                epoch,
                "joint" if joint else "warmup",
                l_ce=_mean(ce_losses),
                l_ssl=_mean(ssl_losses),
                l_adv=_mean(adv_losses),
                l_dom=l_dom,
                alpha=alpha,
                beta=beta,
                mean_w_uc=_mean(w_uc),
                mean_w_d=_mean(w_d),
                mean_w_ud=_mean(w_ud),
            )
        )
        if epoch == config.warmup_epochs:
            logger.info("Joint phase started", epoch=epoch, alpha=alpha, beta=beta)
        logger.debug("Epoch finished", **history[-1].model_dump())

    protos = labeled_prototypes(bundle, x_l, y_l)
    ukc_scores: Optional[UkcScores] = None
    if n_u > 0:
        ukc_scores = score_unlabeled(bundle, protos, x_u, config.aug, scoring_rng)
        if config.use_doe:
            w_uc = ukc_scores.w_uc
        if use_cds:
            w_ud = bundle.discriminate_dom(bundle.extract(x_u)).data[:, 0].copy()

    logger.info(
        "Training finished",
        epochs=config.total_epochs,
        final_l_ce=history[-1].l_ce if history else None,
    )
    return TrainResult(
        bundle=bundle,
        history=history,
        w_uc=w_uc,
        w_ud=w_ud,
        w_d=w_d,
        prototypes=protos,
        ukc_scores=ukc_scores,
        l_ce_trace=[h.l_ce for h in history],
    )
