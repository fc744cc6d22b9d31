"""Unit tests for logging helpers."""

import json
import logging

import numpy as np
import pytest

from app.logging import ARRAY_INLINE_LIMIT, numpy_values, resolve_level


@pytest.mark.unit
class TestNumpyValues:
    """Tests for the numpy-to-JSON processor."""

    def test_scalars_become_python_numbers(self):
        """numpy scalars should be unwrapped."""
        event = numpy_values(None, "info", {"epoch": np.int64(3), "l_ce": np.float64(0.25)})
        assert event == {"epoch": 3, "l_ce": 0.25}
        assert type(event["epoch"]) is int
        json.dumps(event)

    def test_small_arrays_inline(self):
        """Arrays within the inline limit should be logged as lists."""
        event = numpy_values(None, "info", {"w": np.array([0.5, 1.0])})
        assert event["w"] == [0.5, 1.0]

    def test_large_arrays_summarized(self):
        """Larger arrays should become a shape/mean/range summary."""
        values = np.arange(ARRAY_INLINE_LIMIT + 2, dtype=float)
        event = numpy_values(None, "info", {"w": values})
        assert event["w"] == {
            "shape": [ARRAY_INLINE_LIMIT + 2],
            "mean": float(values.mean()),
            "min": 0.0,
            "max": float(ARRAY_INLINE_LIMIT + 1),
        }
        json.dumps(event)

    def test_non_finite_entries_skipped_in_summary(self):
        """NaN entries should not poison the summary statistics."""
        values = np.ones(ARRAY_INLINE_LIMIT + 1)
        values[0] = np.nan
        event = numpy_values(None, "info", {"w": values})
        assert event["w"]["mean"] == 1.0

    def test_other_values_untouched(self):
        """Plain values should pass through."""
        event = numpy_values(None, "info", {"event": "Epoch finished", "phase": "joint"})
        assert event == {"event": "Epoch finished", "phase": "joint"}


@pytest.mark.unit
class TestResolveLevel:
    """Tests for log level resolution."""

    @pytest.mark.parametrize(
        "debug,name,expected",
        [
            (False, None, logging.INFO),
            (True, None, logging.DEBUG),
            (True, "warning", logging.WARNING),
            (False, "ERROR", logging.ERROR),
            (False, "loud", logging.INFO),
        ],
    )
    def test_levels(self, debug, name, expected):
        """Explicit names win over the debug default; unknown names fall back to INFO."""
        assert resolve_level(debug, name) == expected
