"""Feature extractor, classifier and the two domain discriminators."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np

from app.constants import PARAM_PREFIXES
from app.exceptions import ConfigError
from app.models.training import TrainConfig
from app.networks.mlp import Mlp, MlpSpec
from app.numerics import ParameterStore, Tensor, grad_reverse
from app.numerics.tensor import Operand


class ModelBundle:
    """F, C, D and D′ sharing one ParameterStore with disjoint name prefixes.

    - F: input_dim → feature_hidden → feature_dim (relu)
    - C: feature_dim → head_hidden → K softmax
    - D: feature_dim → head_hidden → 1 sigmoid (adversarial)
    - D′: feature_dim → head_hidden → 1 sigmoid (non-adversarial)
    """

    def __init__(
        self,
        input_dim: int,
        known_class_count: int,
        seed: int,
        feature_hidden: int = 64,
        feature_dim: int = 32,
        head_hidden: int = 16,
    ) -> None:
        if known_class_count < 2:
            raise ConfigError("At least two known classes are required", details={"k": known_class_count})
        self.input_dim = input_dim
        self.known_class_count = known_class_count
        self.feature_dim = feature_dim
        self.seed = seed
        self.store = ParameterStore()
        rng = np.random.default_rng(seed)
        self.extractor = Mlp(
            MlpSpec(layer_sizes=[input_dim, feature_hidden, feature_dim], output_head="linear"),
            self.store,
            PARAM_PREFIXES["extractor"],
            rng,
        )
        self.classifier = Mlp(
            MlpSpec(layer_sizes=[feature_dim, head_hidden, known_class_count], output_head="softmax"),
            self.store,
            PARAM_PREFIXES["classifier"],
            rng,
        )
        self.adversarial = Mlp(
            MlpSpec(layer_sizes=[feature_dim, head_hidden, 1], output_head="sigmoid"),
            self.store,
            PARAM_PREFIXES["adversarial"],
            rng,
        )
        self.domain = Mlp(
            MlpSpec(layer_sizes=[feature_dim, head_hidden, 1], output_head="sigmoid"),
            self.store,
            PARAM_PREFIXES["domain"],
            rng,
        )

    @classmethod
    def from_config(cls, input_dim: int, known_class_count: int, config: TrainConfig) -> "ModelBundle":
        return cls(
            input_dim=input_dim,
            known_class_count=known_class_count,
            seed=config.seed,
            feature_hidden=config.feature_hidden,
            feature_dim=config.feature_dim,
            head_hidden=config.head_hidden,
        )

    def extract(self, x: Operand) -> Tensor:
        """Features V = F(x), shape (batch, feature_dim)."""
        return self.extractor(x)

    def classify(self, v: Operand) -> Tensor:
        """Class probabilities over the known classes."""
        return self.classifier(v)

    def discriminate_adv(self, v: Operand, lam: Optional[float] = None) -> Tensor:
        """D(v); with `lam`, gradients into v are reversed and scaled by lam."""
        if lam is not None:
            v = grad_reverse(v, lam)
        return self.adversarial(v)

    def discriminate_dom(self, v: Operand) -> Tensor:
        """D′(v): probability of belonging to an unknown domain."""
        return self.domain(v)

    def predict_proba(self, x: np.ndarray) -> np.ndarray:
        return self.classify(self.extract(x)).numpy()

    def predict(self, x: np.ndarray) -> np.ndarray:
        """Argmax class predictions."""
        return np.argmax(self.predict_proba(x), axis=1)

    def save(self, path: Path) -> None:
        self.store.save(path)

    def load(self, path: Path) -> None:
        self.store.load(path)
