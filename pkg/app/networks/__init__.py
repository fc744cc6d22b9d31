"""The networks: feature extractor, classifier, discriminators and the VAE."""

from app.networks.bundle import ModelBundle
from app.networks.mlp import Mlp, MlpSpec, glorot_uniform
from app.networks.vae import Vae, VaeOutput, vae_forward

__all__ = [
    "ModelBundle",
    "Mlp",
    "MlpSpec",
    "glorot_uniform",
    "Vae",
    "VaeOutput",
    "vae_forward",
]
