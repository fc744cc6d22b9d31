"""Unit tests for custom exceptions."""

import pytest

from app.exceptions import (
    ConfigError,
    DataError,
    DegenerateFitError,
    DimensionError,
    EmptyPoolError,
    MetricError,
    MissingClassError,
    NumericError,
    ReportError,
    ScenarioError,
    TrainingDivergedError,
    UsslError,
)


@pytest.mark.unit
class TestUsslError:
    """Tests for base UsslError exception."""

    def test_basic_instantiation(self):
        """Should create exception with message."""
        exc = UsslError("Test error")
        assert exc.message == "Test error"
        assert exc.details == {}
        assert str(exc) == "Test error"

    def test_with_details(self):
        """Should create exception with message and details."""
        exc = UsslError("Test error", details={"key": "value"})
        assert exc.details == {"key": "value"}

    @pytest.mark.parametrize(
        "cls",
        [ConfigError, NumericError, ScenarioError, EmptyPoolError, DegenerateFitError, MetricError],
    )
    def test_plain_subclasses(self, cls):
        """Should be catchable as UsslError."""
        with pytest.raises(UsslError):
            raise cls("boom")


@pytest.mark.unit
class TestStructuredErrors:
    """Tests for exceptions carrying extra attributes."""

    def test_dimension_error_shapes(self):
        """Should keep the offending shapes as tuples."""
        exc = DimensionError("mismatch", shapes=[(2, 3), [3, 4]])
        assert exc.shapes == ((2, 3), (3, 4))

    def test_data_error_line_number(self):
        """Should expose the line number."""
        exc = DataError("bad row", line_number=7)
        assert exc.line_number == 7
        assert isinstance(exc, UsslError)

    def test_missing_class_message(self):
        """Should name the empty class."""
        exc = MissingClassError(2)
        assert exc.class_id == 2
        assert "2" in exc.message

    def test_training_diverged_location(self):
        """Should carry epoch and batch."""
        exc = TrainingDivergedError("nan", epoch=3, batch=1)
        assert (exc.epoch, exc.batch) == (3, 1)

    def test_report_error_line_number(self):
        """Should keep the template line."""
        assert ReportError("syntax", line_number=4).line_number == 4
