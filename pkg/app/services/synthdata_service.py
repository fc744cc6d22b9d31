"""Synthetic scenario generation and feature-space augmentation.

A scenario is built from isotropic gaussian classes pushed through an
invertible affine map per domain:

    x = T_d · s + shift_d + noise_d · ε,    s ~ N(mean_c, scale_c² I)

Domain 0 is the known domain. Labeled, validation and test splits only hold
known classes from domain 0; the unlabeled split mixes known samples,
unknown-class (UKC) samples from domain 0 and unknown-domain (UKD) samples
of known classes from domains 1.. in the proportions of `ScenarioCounts`.
"""

from __future__ import annotations

import math
from typing import Literal, Sequence

import numpy as np
from pydantic import ValidationError as PydanticValidationError

from app.exceptions import ScenarioError
from app.logging import get_logger
from app.models.scenario import (
    ClassSpec,
    DomainSpec,
    SampleSet,
    Scenario,
    ScenarioCounts,
    ScenarioSpec,
)
from app.models.training import AugmentConfig

logger = get_logger(__name__)

ScenarioKind = Literal["close-set", "open-set", "universal"]
SCENARIO_KINDS: tuple[str, ...] = ("close-set", "open-set", "universal")


def generate_scenario(
    class_specs: Sequence[ClassSpec],
    domain_specs: Sequence[DomainSpec],
    counts: ScenarioCounts,
    known_class_count: int,
    seed: int,
) -> Scenario:
    """Draw a scenario; a pure function of its arguments.

    Raises:
        ScenarioError: On fewer than two known classes, a degenerate domain
            transform or counts that cannot be honored
    """
    try:
        spec = ScenarioSpec(
            classes=list(class_specs),
            domains=list(domain_specs),
            counts=counts,
            known_class_count=known_class_count,
            seed=seed,
        )
    except PydanticValidationError as e:
        raise ScenarioError(f"Invalid scenario: {e.errors()[0]['msg']}", details={"errors": e.errors()}) from e
    return generate_from_spec(spec)


def generate_from_spec(spec: ScenarioSpec) -> Scenario:
    """Draw the scenario described by a validated `ScenarioSpec`."""
    k = spec.known_class_count
    counts = spec.counts
    d = spec.input_dim
    n_classes = len(spec.classes)
    n_domains = len(spec.domains)

    means = np.asarray([c.mean for c in spec.classes], dtype=np.float64)
    scales = np.asarray([c.scale for c in spec.classes], dtype=np.float64)
    transforms = [np.asarray(dom.transform, dtype=np.float64) for dom in spec.domains]
    for i, t in enumerate(transforms):
        if abs(np.linalg.det(t)) <= 1e-6:
            raise ScenarioError(f"Domain {i} transform is not invertible", details={"domain": i})

    rng = np.random.default_rng(spec.seed)

    def draw(class_id: np.ndarray, domain_id: np.ndarray) -> SampleSet:
        n = class_id.shape[0]
        s = means[class_id] + scales[class_id][:, None] * rng.standard_normal((n, d))
        x = np.empty((n, d))
        for dom in np.unique(domain_id):
            rows = domain_id == dom
            spec_d = spec.domains[dom]
            noise = spec_d.noise_scale * rng.standard_normal((int(rows.sum()), d))
            x[rows] = s[rows] @ transforms[dom].T + np.asarray(spec_d.shift) + noise
        return SampleSet(
            x=x,
            class_id=class_id,
            domain_id=domain_id,
            is_ukc=class_id >= k,
            is_ukd=domain_id != 0,
        )

    labeled = draw(np.repeat(np.arange(k), counts.labeled_per_class), np.zeros(k * counts.labeled_per_class, dtype=np.int64))

    n_ukc, n_ukd, n_known = counts.unlabeled_ukc, counts.unlabeled_ukd, counts.unlabeled_known
    unknown_classes = n_classes - k
    class_u = np.concatenate(
        [
            np.arange(n_known) % k,
            k + np.arange(n_ukc) % max(unknown_classes, 1),
            np.arange(n_ukd) % k,
        ]
    ).astype(np.int64)
    domain_u = np.concatenate(
        [
            np.zeros(n_known + n_ukc, dtype=np.int64),
            1 + np.arange(n_ukd) % max(n_domains - 1, 1),
        ]
    ).astype(np.int64)
    order = rng.permutation(class_u.shape[0])
    unlabeled = draw(class_u[order], domain_u[order])

    val = draw(np.arange(counts.val) % k, np.zeros(counts.val, dtype=np.int64))
    test = draw(np.arange(counts.test) % k, np.zeros(counts.test, dtype=np.int64))

    scenario = Scenario(
        labeled=labeled,
        unlabeled=unlabeled,
        val=val,
        test=test,
        known_class_count=k,
        input_dim=d,
        meta={"seed": spec.seed},
    )
    scenario.validate()
    logger.debug(
        "Scenario generated",
        seed=spec.seed,
        labeled=len(labeled),
        unlabeled=len(unlabeled),
        ukc=n_ukc,
        ukd=n_ukd,
    )
    return scenario


def augment(x: np.ndarray, cfg: AugmentConfig, rng: np.random.Generator) -> np.ndarray:
    """Strong feature-space augmentation of a vector or a batch of rows.

    Adds N(0, noise_std²) elementwise, then zeroes each coordinate
    independently with probability drop_prob.
    """
    x = np.asarray(x, dtype=np.float64)
    noisy = x + rng.normal(0.0, cfg.noise_std, size=x.shape)
    keep = rng.random(x.shape) >= cfg.drop_prob
    return np.where(keep, noisy, 0.0)


def rotation_in_plane(dim: int, degrees: float, axes: tuple[int, int] = (0, 1)) -> np.ndarray:
    """Identity except for a rotation by `degrees` in the plane of `axes`."""
    theta = math.radians(degrees)
    i, j = axes
    t = np.eye(dim)
    t[i, i] = math.cos(theta)
    t[i, j] = -math.sin(theta)
    t[j, i] = math.sin(theta)
    t[j, j] = math.cos(theta)
    return t


# Known-class spread; neighbouring classes are 8.5 apart on the circle
KNOWN_SCALE = 1.5
# The preset's label budget is small so unlabeled data carries real signal
PRESET_LABELED_PER_CLASS = 5


def default_scenario_spec(seed: int = 0, input_dim: int = 8) -> ScenarioSpec:
    """Universal setting at desk scale.

    Four known classes (scale 1.5) on a radius-6 circle in the (0, 1) plane
    with five labels each. The two unknown-class blobs sit on that circle
    halfway between known classes 0/1 and 2/3, where any known-class
    decision boundary has to cross them. The unknown domain rotates the
    (0, 1) plane by 30° and shifts every other coordinate by 3.
    """
    known = []
    for j in range(4):
        mean = np.zeros(input_dim)
        mean[0] = 6.0 * math.cos(j * math.pi / 2)
        mean[1] = 6.0 * math.sin(j * math.pi / 2)
        known.append(ClassSpec(mean=mean.tolist(), scale=KNOWN_SCALE))
    unknown = []
    for angle in (math.pi / 4, 5 * math.pi / 4):
        mean = np.zeros(input_dim)
        mean[0] = 6.0 * math.cos(angle)
        mean[1] = 6.0 * math.sin(angle)
        unknown.append(ClassSpec(mean=mean.tolist(), scale=1.0))
    shift = [0.0, 0.0] + [3.0] * (input_dim - 2)
    domains = [
        DomainSpec(transform=np.eye(input_dim).tolist(), shift=[0.0] * input_dim),
        DomainSpec(transform=rotation_in_plane(input_dim, 30.0).tolist(), shift=shift),
    ]
    return ScenarioSpec(
        classes=known + unknown,
        domains=domains,
        counts=ScenarioCounts(labeled_per_class=PRESET_LABELED_PER_CLASS),
        known_class_count=4,
        seed=seed,
    )


def preset_scenario(kind: str, seed: int = 0) -> ScenarioSpec:
    """The three settings: close-set, open-set (UKC) and universal (UKC + UKD)."""
    if kind not in SCENARIO_KINDS:
        raise ScenarioError(f"Unknown scenario preset '{kind}'", details={"choices": list(SCENARIO_KINDS)})
    spec = default_scenario_spec(seed)
    fractions = {
        "close-set": (0.0, 0.0),
        "open-set": (0.3, 0.0),
        "universal": (0.3, 0.3),
    }[kind]
    counts = spec.counts.model_copy(update={"ukc_fraction": fractions[0], "ukd_fraction": fractions[1]})
    return spec.model_copy(update={"counts": counts})


def with_seed(spec: ScenarioSpec, seed: int) -> ScenarioSpec:
    return spec.model_copy(update={"seed": seed})
