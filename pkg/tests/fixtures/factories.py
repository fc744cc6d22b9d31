"""Test factories for building common objects"""

import numpy as np

from app.models.scenario import ClassSpec, DomainSpec, SampleSet, Scenario, ScenarioCounts, ScenarioSpec
from app.models.training import AugmentConfig, TrainConfig, VaeConfig
from app.networks.bundle import ModelBundle
from app.services.synthdata_service import generate_from_spec, rotation_in_plane


def make_spec(seed=0, **count_overrides):
    """
    Small universal scenario in 4-D: two known classes, one unknown class,
    one unknown domain. Cheap enough for every unit test.
    """
    counts = {
        "labeled_per_class": 8,
        "val": 10,
        "test": 12,
        "unlabeled": 20,
        "ukc_fraction": 0.25,
        "ukd_fraction": 0.25,
    }
    counts.update(count_overrides)
    return ScenarioSpec(
        classes=[
            ClassSpec(mean=[4.0, 0.0, 0.0, 0.0], scale=0.5),
            ClassSpec(mean=[-4.0, 0.0, 0.0, 0.0], scale=0.5),
            ClassSpec(mean=[0.0, 8.0, 0.0, 0.0], scale=0.5),
        ],
        domains=[
            DomainSpec(transform=np.eye(4).tolist(), shift=[0.0] * 4),
            DomainSpec(transform=rotation_in_plane(4, 20.0).tolist(), shift=[2.0] * 4, noise_scale=0.1),
        ],
        counts=ScenarioCounts(**counts),
        known_class_count=2,
        seed=seed,
    )


def make_scenario(seed=0, **count_overrides):
    """Return the scenario drawn from `make_spec`."""
    return generate_from_spec(make_spec(seed, **count_overrides))


def make_sample_set(x, class_id, domain_id=None, known_class_count=2):
    """SampleSet with flags derived from ids."""
    class_id = np.asarray(class_id)
    domain_id = np.zeros_like(class_id) if domain_id is None else np.asarray(domain_id)
    return SampleSet(
        x=np.asarray(x, dtype=np.float64),
        class_id=class_id,
        domain_id=domain_id,
        is_ukc=class_id >= known_class_count,
        is_ukd=domain_id != 0,
    )


def make_config(**overrides):
    """
    Few-epoch configuration with narrow networks.
    """
    values = {
        "total_epochs": 4,
        "warmup_epochs": 2,
        "lr": 0.05,
        "batch_size": 8,
        "feature_hidden": 8,
        "feature_dim": 4,
        "head_hidden": 4,
        "aug": AugmentConfig(noise_std=0.3, drop_prob=0.1),
        "vae": VaeConfig(latent_dim=2, hidden=6, epochs=3, lr=0.005, batch_size=8),
    }
    values.update(overrides)
    return TrainConfig(**values)


def make_bundle(input_dim=4, known_class_count=2, seed=0):
    """Narrow networks matching `make_config`."""
    return ModelBundle(
        input_dim=input_dim,
        known_class_count=known_class_count,
        seed=seed,
        feature_hidden=8,
        feature_dim=4,
        head_hidden=4,
    )


def make_empty_scenario(input_dim=3):
    """Scenario with no samples at all."""
    empty = SampleSet.empty(input_dim)
    return Scenario(
        labeled=empty,
        unlabeled=empty,
        val=empty,
        test=empty,
        known_class_count=0,
        input_dim=input_dim,
    )
