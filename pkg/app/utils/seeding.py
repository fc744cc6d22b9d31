"""Per-stage random streams derived from one root seed."""

from __future__ import annotations

import numpy as np

from app.exceptions import ConfigError

# Order is part of the reproducibility contract: appending is safe, reordering is not
STAGES: tuple[str, ...] = (
    "labeled_shuffle",
    "unlabeled_shuffle",
    "augment",
    "scoring",
    "vae",
)


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Independent generator for `stage`, a pure function of (seed, stage)."""
    if stage not in STAGES:
        raise ConfigError(f"Unknown random stage '{stage}'", details={"stages": list(STAGES)})
    children = np.random.SeedSequence(seed).spawn(len(STAGES))
    return np.random.default_rng(children[STAGES.index(stage)])
