"""Unit tests for the scenario CSV codec and plain tables"""

import tempfile
from pathlib import Path

import numpy as np
import pytest

from app.exceptions import DataError
from app.utils.csv_utils import csv_header, load_csv, save_csv, write_table
from tests.fixtures.factories import make_scenario


@pytest.fixture
def temp_dir():
    """Create a temporary directory for CSV files"""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield Path(tmpdir)


def _write(path, text):
    path.write_text(text)
    return path


@pytest.mark.unit
class TestSaveLoad:
    """Tests for save_csv / load_csv"""

    def test_header(self):
        """Fixed columns then f0..f{d-1}"""
        assert csv_header(2) == ["split", "class_id", "domain_id", "is_ukc", "is_ukd", "f0", "f1"]

    def test_bit_exact_reload(self, scenario, temp_dir):
        """Every split should reload bit-identically"""
        path = temp_dir / "scenario.csv"
        save_csv(scenario, path)
        loaded = load_csv(path)
        assert loaded.equals(scenario)

    def test_known_class_count_inferred(self, scenario, temp_dir):
        """K should be inferred from non-UKC class ids"""
        path = temp_dir / "scenario.csv"
        save_csv(scenario, path)
        assert load_csv(path).known_class_count == 2

    def test_close_set_reload(self, temp_dir):
        """A scenario without unknown samples should also reload"""
        scenario = make_scenario(ukc_fraction=0.0, ukd_fraction=0.0)
        save_csv(scenario, temp_dir / "s.csv")
        assert load_csv(temp_dir / "s.csv").equals(scenario)


@pytest.mark.unit
class TestMalformedInput:
    """Tests for DataError reporting"""

    HEADER = "split,class_id,domain_id,is_ukc,is_ukd,f0,f1\n"

    def test_missing_file(self, temp_dir):
        """Should raise DataError for a missing file"""
        with pytest.raises(DataError):
            load_csv(temp_dir / "missing.csv")

    def test_empty_file(self, temp_dir):
        """Should raise DataError at line 1"""
        with pytest.raises(DataError) as exc_info:
            load_csv(_write(temp_dir / "e.csv", ""))
        assert exc_info.value.line_number == 1

    def test_bad_header(self, temp_dir):
        """Should reject unexpected fixed columns"""
        with pytest.raises(DataError):
            load_csv(_write(temp_dir / "h.csv", "a,b,c\n"))

    def test_wrong_column_count(self, temp_dir):
        """Should report the offending line"""
        text = self.HEADER + "labeled,0,0,0,0,1.0,2.0\nlabeled,1,0,0,0,1.0\n"
        with pytest.raises(DataError) as exc_info:
            load_csv(_write(temp_dir / "w.csv", text))
        assert exc_info.value.line_number == 3

    def test_non_numeric_feature(self, temp_dir):
        """Should report unparsable floats with their line"""
        text = self.HEADER + "labeled,0,0,0,0,abc,2.0\n"
        with pytest.raises(DataError) as exc_info:
            load_csv(_write(temp_dir / "n.csv", text))
        assert exc_info.value.line_number == 2

    def test_bad_flag(self, temp_dir):
        """Flags must be 0 or 1"""
        text = self.HEADER + "labeled,0,0,yes,0,1.0,2.0\n"
        with pytest.raises(DataError):
            load_csv(_write(temp_dir / "f.csv", text))

    def test_unknown_split(self, temp_dir):
        """Unknown split names are rejected"""
        text = self.HEADER + "train,0,0,0,0,1.0,2.0\n"
        with pytest.raises(DataError):
            load_csv(_write(temp_dir / "s.csv", text))

    def test_inconsistent_flags(self, temp_dir):
        """is_ukd must agree with domain_id"""
        text = self.HEADER + "labeled,0,0,0,0,1.0,2.0\nunlabeled,1,1,0,0,1.0,2.0\n"
        with pytest.raises(DataError):
            load_csv(_write(temp_dir / "i.csv", text))

    def test_unknown_sample_in_labeled_split(self, temp_dir):
        """Labeled rows may not be UKD"""
        text = self.HEADER + "labeled,0,1,0,1,1.0,2.0\nlabeled,1,0,0,0,1.0,2.0\n"
        with pytest.raises(DataError):
            load_csv(_write(temp_dir / "u.csv", text))


@pytest.mark.unit
class TestWriteTable:
    """Tests for plain tables"""

    def test_cells(self, temp_dir):
        """Bools as 0/1, floats with 17 digits, None as empty"""
        path = temp_dir / "t.csv"
        write_table(path, ["a", "b", "c", "d"], [[True, 0.1, None, 3], [np.bool_(False), np.float64(2.5), "x", 4]])
        assert path.read_text() == "a,b,c,d\n1,0.10000000000000001,,3\n0,2.5,x,4\n"
