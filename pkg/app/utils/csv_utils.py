"""Scenario CSV codec.

Layout (one row per sample, splits in the order labeled, unlabeled, val, test):

    split,class_id,domain_id,is_ukc,is_ukd,f0,...,f{d-1}

Floats are written with 17 significant digits, which round-trips float64
exactly. Flags are 0/1.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable

import numpy as np

from app.constants import CSV_FIXED_COLUMNS, FLOAT_FORMAT, SPLITS
from app.exceptions import DataError, ScenarioError
from app.logging import get_logger
from app.models.scenario import SampleSet, Scenario

logger = get_logger(__name__)


def csv_header(input_dim: int) -> list[str]:
    return [*CSV_FIXED_COLUMNS, *(f"f{i}" for i in range(input_dim))]


def format_float(value: float) -> str:
    return format(float(value), FLOAT_FORMAT)


def save_csv(scenario: Scenario, path: Path) -> None:
    """Write every split of `scenario` to `path`."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(csv_header(scenario.input_dim))
        for split in SPLITS:
            samples = scenario.split(split)
            for i in range(len(samples)):
                writer.writerow(
                    [
                        split,
                        int(samples.class_id[i]),
                        int(samples.domain_id[i]),
                        int(samples.is_ukc[i]),
                        int(samples.is_ukd[i]),
                        *(format_float(v) for v in samples.x[i]),
                    ]
                )
    logger.debug("Scenario CSV written", path=str(path))


def _parse_flag(value: str, column: str, line: int) -> bool:
    if value not in ("0", "1"):
        raise DataError(f"Line {line}: column '{column}' must be 0 or 1, got '{value}'", line_number=line)
    return value == "1"


def load_csv(path: Path) -> Scenario:
    """Read a scenario written by `save_csv` (or by hand in the same layout).

    The known-class count is inferred as one plus the largest class id among
    samples not flagged as unknown-class.

    Raises:
        DataError: Missing file, bad header, malformed row (with line number)
            or inconsistent feature width
    """
    if not path.exists():
        raise DataError(f"Scenario file not found: {path}", details={"path": str(path)})

    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError("Scenario file is empty", line_number=1)
        if header[: len(CSV_FIXED_COLUMNS)] != CSV_FIXED_COLUMNS:
            raise DataError(f"Unexpected header columns: {header[:len(CSV_FIXED_COLUMNS)]}", line_number=1)
        feature_cols = header[len(CSV_FIXED_COLUMNS):]
        if feature_cols != [f"f{i}" for i in range(len(feature_cols))]:
            raise DataError("Feature columns must be named f0..f{d-1}", line_number=1)
        input_dim = len(feature_cols)
        width = len(header)

        rows: dict[str, list[tuple]] = {split: [] for split in SPLITS}
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                raise DataError(
                    f"Line {line}: expected {width} columns, got {len(row)}",
                    line_number=line,
                    details={"expected": width, "got": len(row)},
                )
            split = row[0]
            if split not in rows:
                raise DataError(f"Line {line}: unknown split '{split}'", line_number=line)
            try:
                class_id = int(row[1])
                domain_id = int(row[2])
                features = [float(v) for v in row[len(CSV_FIXED_COLUMNS):]]
            except ValueError as e:
                raise DataError(f"Line {line}: {e}", line_number=line) from e
            if not all(np.isfinite(features)):
                raise DataError(f"Line {line}: non-finite feature value", line_number=line)
            is_ukc = _parse_flag(row[3], "is_ukc", line)
            is_ukd = _parse_flag(row[4], "is_ukd", line)
            rows[split].append((class_id, domain_id, is_ukc, is_ukd, features, line))

    known = [r[0] for split_rows in rows.values() for r in split_rows if not r[2]]
    known_class_count = max(known) + 1 if known else 0

    sets = {}
    for split, split_rows in rows.items():
        for class_id, domain_id, is_ukc, is_ukd, _, line in split_rows:
            if is_ukc != (class_id >= known_class_count):
                raise DataError(f"Line {line}: is_ukc inconsistent with class_id {class_id}", line_number=line)
            if is_ukd != (domain_id != 0):
                raise DataError(f"Line {line}: is_ukd inconsistent with domain_id {domain_id}", line_number=line)
        if split_rows:
            sets[split] = SampleSet(
                x=np.asarray([r[4] for r in split_rows], dtype=np.float64).reshape(-1, input_dim),
                class_id=np.asarray([r[0] for r in split_rows]),
                domain_id=np.asarray([r[1] for r in split_rows]),
                is_ukc=np.asarray([r[2] for r in split_rows]),
                is_ukd=np.asarray([r[3] for r in split_rows]),
            )
        else:
            sets[split] = SampleSet.empty(input_dim)

    scenario = Scenario(
        known_class_count=known_class_count,
        input_dim=input_dim,
        meta={"source": str(path)},
        **sets,
    )
    try:
        scenario.validate()
    except ScenarioError as e:
        raise DataError(f"Inconsistent scenario file: {e.message}") from e
    logger.debug("Scenario CSV loaded", path=str(path), known_classes=known_class_count)
    return scenario


def write_table(path: Path, header: list[str], rows: Iterable[Iterable[object]]) -> None:
    """Plain CSV table; floats use the same 17-digit format as scenario files."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])


def _cell(value: object) -> object:
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if value is None:
        return ""
    return value
