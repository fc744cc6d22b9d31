"""Dual-path outlier estimation: how likely is an unlabeled sample to be known-class?

Two signals are combined per unlabeled sample:

1. Prototype path: average L2 distance `d_avg` of the sample's (clean)
   features to the per-class mean features of the labeled set.
2. Prediction path: `p_ood`, the absolute difference between the top
   class probabilities of two independently augmented views.

The raw score z = d_avg · p_ood is min-max normalized over the whole
unlabeled pool into [1e-6, 1] and the inlier weight is w_uc = 1 − σ(z).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.constants import POOL_DEGENERATE_RANGE, POOL_DEGENERATE_VALUE, POOL_EPSILON
from app.exceptions import DimensionError, EmptyPoolError, MissingClassError, UsslError
from app.logging import get_logger
from app.models.training import AugmentConfig
from app.networks.bundle import ModelBundle
from app.services.synthdata_service import augment

logger = get_logger(__name__)


@dataclass
class PrototypeSet:
    """One mean feature vector per known class.

    Attributes:
        prototypes: (K, D_feat) class means
        counts: (K,) number of contributing samples per class
    """

    prototypes: np.ndarray
    counts: np.ndarray

    @property
    def known_class_count(self) -> int:
        return int(self.prototypes.shape[0])


@dataclass
class UkcScores:
    """Per-sample unknown-class scores for an unlabeled pool.

    Attributes:
        d: (n, K) distances to each prototype
        d_avg: (n,) mean distance
        p_ood: (n,) top-probability disagreement of two augmented views
        raw: (n,) d_avg · p_ood
        w_uc: (n,) known-class weight 1 − σ(raw)
    """

    d: np.ndarray
    d_avg: np.ndarray
    p_ood: np.ndarray
    raw: np.ndarray
    w_uc: np.ndarray

    def __len__(self) -> int:
        return int(self.w_uc.shape[0])


def compute_prototypes(features: np.ndarray, labels: np.ndarray, known_class_count: int) -> PrototypeSet:
    """Per-class mean of `features` over samples labeled j, for j in [0, K).

    Raises:
        MissingClassError: If some known class has no sample
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    counts = np.bincount(labels, minlength=known_class_count)[:known_class_count]
    for j, n in enumerate(counts):
        if n == 0:
            raise MissingClassError(j)
    sums = np.zeros((known_class_count, features.shape[1]))
    np.add.at(sums, labels, features)
    return PrototypeSet(prototypes=sums / counts[:, None], counts=counts)


def distance_profile(v: np.ndarray, protos: PrototypeSet) -> tuple[np.ndarray, float]:
    """(d, d_avg) for one feature vector: d_j = ||v − v_j||₂, d_avg = mean_j d_j.

    Raises:
        DimensionError: If widths differ
    """
    d = distance_matrix(np.asarray(v, dtype=np.float64).reshape(1, -1), protos)[0]
    return d, float(d.mean())


def distance_matrix(features: np.ndarray, protos: PrototypeSet) -> np.ndarray:
    """(n, K) L2 distances of every row to every prototype."""
    if features.shape[1] != protos.prototypes.shape[1]:
        raise DimensionError(
            f"Feature width {features.shape[1]} does not match prototype width {protos.prototypes.shape[1]}",
            shapes=[features.shape, protos.prototypes.shape],
        )
    diff = features[:, None, :] - protos.prototypes[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=2))


def prediction_disagreement(p1: np.ndarray, p2: np.ndarray) -> np.ndarray | float:
    """|max(p1) − max(p2)| per row (or for a single pair of vectors)."""
    p1 = np.asarray(p1, dtype=np.float64)
    p2 = np.asarray(p2, dtype=np.float64)
    out = np.abs(p1.max(axis=-1) - p2.max(axis=-1))
    return float(out) if out.ndim == 0 else out


def normalize_pool(z: np.ndarray) -> np.ndarray:
    """Pool-level min-max map of raw scores into [1e-6, 1].

    A constant pool (range below 1e-12) maps to 0.5 everywhere.

    Raises:
        EmptyPoolError: If the pool is empty
        UsslError: If any raw score is negative
    """
    z = np.asarray(z, dtype=np.float64)
    if z.size == 0:
        raise EmptyPoolError("Cannot normalize an empty pool")
    if np.any(z < 0):
        raise UsslError("Raw outlier scores must be non-negative", details={"min": float(z.min())})
    z_min, z_max = float(z.min()), float(z.max())
    if z_max - z_min < POOL_DEGENERATE_RANGE:
        return np.full(z.shape, POOL_DEGENERATE_VALUE)
    return np.clip((z - z_min) / (z_max - z_min), POOL_EPSILON, 1.0)


def score_unlabeled(
    bundle: ModelBundle,
    protos: PrototypeSet,
    unlabeled: np.ndarray,
    aug_cfg: AugmentConfig,
    rng: np.random.Generator,
) -> UkcScores:
    """Score a whole unlabeled pool (read-only on the bundle).

    Clean features feed the prototype path; two independent augmentations
    feed the prediction path.
    """
    unlabeled = np.asarray(unlabeled, dtype=np.float64)
    features = bundle.extract(unlabeled).data
    d = distance_matrix(features, protos)
    d_avg = d.mean(axis=1)
    view_1 = augment(unlabeled, aug_cfg, rng)
    view_2 = augment(unlabeled, aug_cfg, rng)
    p_ood = prediction_disagreement(bundle.predict_proba(view_1), bundle.predict_proba(view_2))
    raw = d_avg * p_ood
    w_uc = 1.0 - normalize_pool(raw)
    logger.debug(
        "Unlabeled pool scored",
        n=int(unlabeled.shape[0]),
        mean_d_avg=float(d_avg.mean()),
        mean_p_ood=float(np.mean(p_ood)),
        mean_w_uc=float(w_uc.mean()),
    )
    return UkcScores(d=d, d_avg=d_avg, p_ood=np.asarray(p_ood), raw=raw, w_uc=w_uc)


def labeled_prototypes(bundle: ModelBundle, x: np.ndarray, labels: np.ndarray) -> PrototypeSet:
    """Prototypes of the bundle's current features over a labeled set."""
    return compute_prototypes(bundle.extract(x).data, labels, bundle.known_class_count)
