"""Training configuration and per-epoch loss records."""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class AugmentConfig(BaseModel):
    """Feature-space strong augmentation: additive gaussian noise, then dropout."""

    model_config = ConfigDict(extra="forbid")

    noise_std: float = Field(
        default=0.5,
        ge=0.0,
        description="Std dev of the additive N(0, noise_std^2) perturbation",
    )
    drop_prob: float = Field(
        default=0.1,
        ge=0.0,
        lt=1.0,
        description="Independent per-coordinate zeroing probability",
    )


class VaeConfig(BaseModel):
    """VAE architecture and pre-training schedule; mixture fit settings."""

    model_config = ConfigDict(extra="forbid")

    latent_dim: int = Field(default=4, ge=1)
    hidden: int = Field(default=32, ge=1, description="Hidden width of encoder and decoder")
    kl_weight: float = Field(default=1e-3, ge=0.0)
    epochs: int = Field(default=100, ge=0)
    lr: float = Field(default=1e-3, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    gmm_max_iters: int = Field(default=200, ge=1)
    gmm_tol: float = Field(default=1e-8, gt=0.0)


class TrainConfig(BaseModel):
    """Joint-training configuration.

    Defaults follow the reference protocol: 200 epochs with an 80-epoch
    exponential rampup, constant SGD learning rate 3e-4, batch size 32.
    """

    model_config = ConfigDict(extra="forbid")

    total_epochs: int = Field(default=200, ge=0)
    warmup_epochs: int = Field(default=80, ge=0)
    lr: float = Field(default=3e-4, gt=0.0)
    batch_size: int = Field(default=32, ge=1)
    alpha_max: float = Field(default=0.1, ge=0.0, description="Adversarial coefficient at full rampup")
    beta_max: float = Field(default=1.0, ge=0.0, description="Consistency coefficient at full rampup")
    aug: AugmentConfig = Field(default_factory=AugmentConfig)
    vae: VaeConfig = Field(default_factory=VaeConfig)
    seed: int = Field(default=0, ge=0)

    # Architecture
    feature_hidden: int = Field(default=64, ge=1)
    feature_dim: int = Field(default=32, ge=1)
    head_hidden: int = Field(default=16, ge=1)

    # Component switches (ablations)
    use_doe: bool = Field(default=True, description="False: every w_uc is 1 and the consistency term is weighted by w_d")
    use_cds: bool = Field(default=True, description="False: every unlabeled sample is treated as unknown-domain")
    use_adversarial: bool = Field(default=True, description="False: no adversarial term")
    use_ssl: bool = Field(default=True, description="False: no consistency term")
    drop_unlabeled: bool = Field(default=False, description="Train on the labeled split only")

    @model_validator(mode="after")
    def _warmup_within_total(self) -> "TrainConfig":
        if self.warmup_epochs > self.total_epochs:
            raise ValueError(
                f"warmup_epochs ({self.warmup_epochs}) exceeds total_epochs ({self.total_epochs})"
            )
        return self


class LossBreakdown(BaseModel):
    """One epoch of the objective, term by term."""

    epoch: int
    phase: Literal["warmup", "joint"]
    l_ce: float
    l_ssl: float
    l_adv: float
    l_dom: float
    alpha: float
    beta: float
    mean_w_uc: float
    mean_w_d: float
    mean_w_ud: float


LOSS_COLUMNS: tuple[str, ...] = tuple(LossBreakdown.model_fields)
