"""Custom exceptions for ussl-desk.

This module defines a hierarchy of exceptions for better error handling:

- UsslError: Base exception for all custom errors
  - DimensionError: Shape mismatch between matrices or network widths
  - NumericError: Non-finite values produced by a numeric operation
  - ConfigError: Invalid configuration file, override or value
  - DataError: Malformed CSV / scenario file, missing input file
  - ScenarioError: Invalid scenario construction
  - MissingClassError: Known class without samples when building prototypes
  - EmptyPoolError: Score normalization over an empty pool
  - DegenerateFitError: Mixture fit over all-identical inputs
  - TrainingDivergedError: Non-finite loss during training
  - MetricError: Undefined metric (single-class AUC, length mismatch)
  - ReportError: Jinja2 report rendering errors
"""

from typing import Any, Dict, Optional, Sequence, Tuple


class UsslError(Exception):
    """Base exception for ussl-desk.

    All custom exceptions inherit from this class, allowing
    catch-all handling in the CLI.

    Attributes:
        message: Human-readable error description
        details: Optional dict with additional context
    """

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        self.message = message
        self.details = details or {}
        super().__init__(self.message)


class DimensionError(UsslError):
    """Shape mismatch.

    Attributes:
        shapes: The offending shapes, in operand order
    """

    def __init__(
        self,
        message: str,
        shapes: Sequence[Tuple[int, ...]] = (),
        details: Optional[Dict[str, Any]] = None,
    ):
        self.shapes = tuple(tuple(s) for s in shapes)
        super().__init__(message, details)


class NumericError(UsslError):
    """A public numeric operation produced NaN or Inf."""

    pass


class ConfigError(UsslError):
    """Invalid configuration.

    Raised when:
    - A config file has unknown keys
    - A value fails validation (e.g. negative learning rate)
    - A `--set` override is not of the form key=value
    """

    pass


class DataError(UsslError):
    """Malformed input data.

    Attributes:
        message: Error description
        line_number: 1-based line where the error occurred (if available)
        details: Additional context
    """

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.line_number = line_number
        super().__init__(message, details)


class ScenarioError(UsslError):
    """Scenario construction error (degenerate transform, impossible counts)."""

    pass


class MissingClassError(UsslError):
    """A known class has zero samples in the prototype pool.

    Attributes:
        class_id: The empty class
    """

    def __init__(self, class_id: int, details: Optional[Dict[str, Any]] = None):
        self.class_id = class_id
        super().__init__(f"Known class {class_id} has no labeled samples", details)


class EmptyPoolError(UsslError):
    """Pool normalization requested over zero samples."""

    pass


class DegenerateFitError(UsslError):
    """Two-component mixture requested over all-identical inputs."""

    pass


class TrainingDivergedError(UsslError):
    """Non-finite loss during training.

    Attributes:
        epoch: Epoch index (0-based)
        batch: Batch index within the epoch (None for per-epoch steps)
    """

    def __init__(
        self,
        message: str,
        epoch: int,
        batch: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.epoch = epoch
        self.batch = batch
        super().__init__(message, details)


class MetricError(UsslError):
    """Metric undefined for the given input."""

    pass


class ReportError(UsslError):
    """Report template rendering error.

    Attributes:
        line_number: Template line where the error occurred (if available)
    """

    def __init__(
        self,
        message: str,
        line_number: Optional[int] = None,
        details: Optional[Dict[str, Any]] = None,
    ):
        self.line_number = line_number
        super().__init__(message, details)


__all__ = [
    "UsslError",
    "DimensionError",
    "NumericError",
    "ConfigError",
    "DataError",
    "ScenarioError",
    "MissingClassError",
    "EmptyPoolError",
    "DegenerateFitError",
    "TrainingDivergedError",
    "MetricError",
    "ReportError",
]
