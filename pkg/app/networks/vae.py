"""Variational autoencoder used for class-agnostic domain separation."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from app.exceptions import ConfigError
from app.models.training import VaeConfig
from app.networks.mlp import Mlp, MlpSpec
from app.numerics import ParameterStore, Tensor, row_sq_norm
from app.numerics.tensor import Operand, as_matrix


@dataclass
class VaeOutput:
    """Forward pass results.

    Attributes:
        x_hat: Reconstruction, same shape as the input
        recon: Per-sample ||x - x_hat||^2, shape (n, 1)
        kl: Batch-mean KL(q(z|x) || N(0, I)), shape (1, 1)
    """

    x_hat: Tensor
    recon: Tensor
    kl: Tensor


class Vae:
    """Encoder g: x → (μ, log σ²); decoder f: z → x̂ (linear head)."""

    def __init__(
        self,
        input_dim: int,
        latent_dim: int = 4,
        hidden: Sequence[int] = (32,),
        kl_weight: float = 1e-3,
        seed: int = 0,
    ) -> None:
        if latent_dim >= input_dim:
            raise ConfigError(
                "VAE latent_dim must be smaller than input_dim",
                details={"latent_dim": latent_dim, "input_dim": input_dim},
            )
        if kl_weight < 0:
            raise ConfigError("kl_weight must be non-negative", details={"kl_weight": kl_weight})
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.kl_weight = kl_weight
        self.store = ParameterStore()
        rng = np.random.default_rng(seed)
        self.encoder = Mlp(
            MlpSpec(layer_sizes=[input_dim, *hidden, 2 * latent_dim]),
            self.store,
            "g",
            rng,
        )
        self.decoder = Mlp(
            MlpSpec(layer_sizes=[latent_dim, *reversed(tuple(hidden)), input_dim]),
            self.store,
            "f",
            rng,
        )

    @classmethod
    def from_config(cls, input_dim: int, config: VaeConfig, seed: int) -> "Vae":
        return cls(
            input_dim=input_dim,
            latent_dim=config.latent_dim,
            hidden=(config.hidden,),
            kl_weight=config.kl_weight,
            seed=seed,
        )

    def encode(self, x: Operand) -> tuple[Tensor, Tensor]:
        """(μ, log σ²), each (n, latent_dim)."""
        stats = self.encoder(x)
        return stats.columns(0, self.latent_dim), stats.columns(self.latent_dim, 2 * self.latent_dim)

    def decode(self, z: Operand) -> Tensor:
        return self.decoder(z)

    def forward(self, x: Operand, rng: Optional[np.random.Generator] = None) -> VaeOutput:
        """Reparameterized forward pass.

        With `rng`, z = μ + σ⊙ε (training); without, z = μ (scoring mode).
        """
        x = x if isinstance(x, Tensor) else Tensor(as_matrix(x))
        mu, logvar = self.encode(x)
        if rng is None:
            z = mu
        else:
            eps = rng.standard_normal(mu.shape)
            z = mu + (logvar * 0.5).exp() * eps
        x_hat = self.decode(z)
        recon = row_sq_norm(x - x_hat)
        kl_rows = (1.0 + logvar - mu.square() - logvar.exp()).sum_rows()
        kl = kl_rows.sum() * (-0.5 / x.rows)
        return VaeOutput(x_hat=x_hat, recon=recon, kl=kl)

    def objective(self, output: VaeOutput) -> Tensor:
        """mean L_re + kl_weight · KL."""
        return output.recon.mean() + output.kl * self.kl_weight

    def save(self, path: Path) -> None:
        self.store.save(path)

    def load(self, path: Path) -> None:
        self.store.load(path)


def vae_forward(vae: Vae, x: Operand, rng: Optional[np.random.Generator] = None) -> VaeOutput:
    """Functional form of `Vae.forward`."""
    return vae.forward(x, rng)
