"""Scenario description models and the in-memory sample containers."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.constants import SPLITS
from app.exceptions import ScenarioError


class ClassSpec(BaseModel):
    """Isotropic gaussian class: mean vector and std dev."""

    model_config = ConfigDict(extra="forbid")

    mean: List[float] = Field(..., min_length=1)
    scale: float = Field(..., gt=0.0)


class DomainSpec(BaseModel):
    """Invertible affine domain map x -> T·s + shift, plus additive noise."""

    model_config = ConfigDict(extra="forbid")

    transform: List[List[float]]
    shift: List[float]
    noise_scale: float = Field(default=0.0, ge=0.0)

    @model_validator(mode="after")
    def _invertible(self) -> "DomainSpec":
        matrix = np.asarray(self.transform, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"transform must be square, got shape {matrix.shape}")
        if matrix.shape[0] != len(self.shift):
            raise ValueError("shift length must match transform size")
        if abs(np.linalg.det(matrix)) <= 1e-6:
            raise ValueError("transform is not invertible (|det| <= 1e-6)")
        return self


class ScenarioCounts(BaseModel):
    """Split sizes. Unlabeled composition is derived from the two fractions."""

    model_config = ConfigDict(extra="forbid")

    labeled_per_class: int = Field(default=50, ge=1)
    val: int = Field(default=200, ge=0)
    test: int = Field(default=200, ge=0)
    unlabeled: int = Field(default=600, ge=0)
    ukc_fraction: float = Field(default=0.3, ge=0.0, le=1.0)
    ukd_fraction: float = Field(default=0.3, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def _fractions(self) -> "ScenarioCounts":
        if self.ukc_fraction + self.ukd_fraction > 1.0 + 1e-12:
            raise ValueError("ukc_fraction + ukd_fraction must not exceed 1")
        return self

    @property
    def unlabeled_ukc(self) -> int:
        return int(round(self.unlabeled * self.ukc_fraction))

    @property
    def unlabeled_ukd(self) -> int:
        return int(round(self.unlabeled * self.ukd_fraction))

    @property
    def unlabeled_known(self) -> int:
        return self.unlabeled - self.unlabeled_ukc - self.unlabeled_ukd


class ScenarioSpec(BaseModel):
    """Everything `generate_scenario` needs.

    Classes [0, known_class_count) are known; the rest are unknown classes.
    Domain 0 is the known domain.
    """

    model_config = ConfigDict(extra="forbid")

    classes: List[ClassSpec]
    domains: List[DomainSpec]
    counts: ScenarioCounts = Field(default_factory=ScenarioCounts)
    known_class_count: int = Field(..., ge=2)
    seed: int = Field(default=0, ge=0)

    @property
    def input_dim(self) -> int:
        return len(self.classes[0].mean)

    @model_validator(mode="after")
    def _consistent(self) -> "ScenarioSpec":
        dims = {len(c.mean) for c in self.classes} | {len(d.shift) for d in self.domains}
        if len(dims) != 1:
            raise ValueError(f"inconsistent input dimensions {sorted(dims)}")
        if self.known_class_count > len(self.classes):
            raise ValueError("known_class_count exceeds the number of class specs")
        if not self.domains:
            raise ValueError("at least the known domain (domain 0) is required")
        if self.counts.unlabeled_ukc and len(self.classes) == self.known_class_count:
            raise ValueError("unknown-class samples requested but no unknown class specs given")
        if self.counts.unlabeled_ukd and len(self.domains) < 2:
            raise ValueError("unknown-domain samples requested but only the known domain is given")
        return self


@dataclass
class SampleSet:
    """Columnar sample list: one row of `x` per sample."""

    x: np.ndarray
    class_id: np.ndarray
    domain_id: np.ndarray
    is_ukc: np.ndarray
    is_ukd: np.ndarray

    def __post_init__(self) -> None:
        self.x = np.ascontiguousarray(self.x, dtype=np.float64)
        self.class_id = np.asarray(self.class_id, dtype=np.int64)
        self.domain_id = np.asarray(self.domain_id, dtype=np.int64)
        self.is_ukc = np.asarray(self.is_ukc, dtype=bool)
        self.is_ukd = np.asarray(self.is_ukd, dtype=bool)
        n = self.x.shape[0]
        if any(len(a) != n for a in (self.class_id, self.domain_id, self.is_ukc, self.is_ukd)):
            raise ScenarioError("SampleSet columns have different lengths")

    def __len__(self) -> int:
        return int(self.x.shape[0])

    @classmethod
    def empty(cls, input_dim: int) -> "SampleSet":
        return cls(
            x=np.zeros((0, input_dim)),
            class_id=np.zeros(0, dtype=np.int64),
            domain_id=np.zeros(0, dtype=np.int64),
            is_ukc=np.zeros(0, dtype=bool),
            is_ukd=np.zeros(0, dtype=bool),
        )

    def subset(self, mask: np.ndarray) -> "SampleSet":
        return SampleSet(
            x=self.x[mask],
            class_id=self.class_id[mask],
            domain_id=self.domain_id[mask],
            is_ukc=self.is_ukc[mask],
            is_ukd=self.is_ukd[mask],
        )

    def equals(self, other: "SampleSet") -> bool:
        return (
            np.array_equal(self.x, other.x)
            and np.array_equal(self.class_id, other.class_id)
            and np.array_equal(self.domain_id, other.domain_id)
            and np.array_equal(self.is_ukc, other.is_ukc)
            and np.array_equal(self.is_ukd, other.is_ukd)
        )


@dataclass
class Scenario:
    """Labeled / unlabeled / val / test splits with ground-truth mismatch flags."""

    labeled: SampleSet
    unlabeled: SampleSet
    val: SampleSet
    test: SampleSet
    known_class_count: int
    input_dim: int
    meta: dict = field(default_factory=dict)

    def split(self, name: str) -> SampleSet:
        if name not in SPLITS:
            raise ScenarioError(f"Unknown split '{name}'")
        return getattr(self, name)

    def validate(self) -> None:
        """Check ground-truth consistency of every split.

        Raises:
            ScenarioError: On any violated invariant
        """
        k = self.known_class_count
        for name in SPLITS:
            samples = self.split(name)
            if samples.x.shape[1] != self.input_dim:
                raise ScenarioError(f"Split '{name}' has feature width {samples.x.shape[1]}, expected {self.input_dim}")
            if not np.array_equal(samples.is_ukc, samples.class_id >= k):
                raise ScenarioError(f"Split '{name}': is_ukc disagrees with class_id >= {k}")
            if not np.array_equal(samples.is_ukd, samples.domain_id != 0):
                raise ScenarioError(f"Split '{name}': is_ukd disagrees with domain_id != 0")
            if name != "unlabeled" and (samples.is_ukc.any() or samples.is_ukd.any()):
                raise ScenarioError(f"Split '{name}' may only hold known-class, known-domain samples")

    def without_unlabeled(self) -> "Scenario":
        return Scenario(
            labeled=self.labeled,
            unlabeled=SampleSet.empty(self.input_dim),
            val=self.val,
            test=self.test,
            known_class_count=self.known_class_count,
            input_dim=self.input_dim,
            meta=dict(self.meta),
        )

    def equals(self, other: "Scenario") -> bool:
        return (
            self.known_class_count == other.known_class_count
            and self.input_dim == other.input_dim
            and all(self.split(n).equals(other.split(n)) for n in SPLITS)
        )
