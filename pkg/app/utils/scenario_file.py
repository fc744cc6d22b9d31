"""Plain-text KEY=VALUE scenario descriptions.

Example:

    seed=0
    known_class_count=4
    labeled_per_class=50
    ukc_fraction=0.3
    class_0_mean=6,0,0,0,0,0,0,0
    class_0_scale=1
    domain_1_transform=0.866,-0.5,0,...;0.5,0.866,0,...;...
    domain_1_shift=3,3,3,3,3,3,3,3
    domain_1_noise_scale=0

Vectors are comma separated; matrix rows are separated by ';'.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import Optional

from dotenv import dotenv_values
from pydantic import ValidationError as PydanticValidationError

from app.exceptions import DataError
from app.models.scenario import ClassSpec, DomainSpec, ScenarioCounts, ScenarioSpec
from app.utils.csv_utils import format_float

_CLASS_KEY = re.compile(r"^class_(\d+)_(mean|scale)$")
_DOMAIN_KEY = re.compile(r"^domain_(\d+)_(transform|shift|noise_scale)$")
_COUNT_KEYS = set(ScenarioCounts.model_fields)


def _vector(values) -> str:
    return ",".join(format_float(v) for v in values)


def write_scenario_file(spec: ScenarioSpec, path: Path) -> None:
    """Serialize `spec`; floats use 17 significant digits."""
    lines = [
        "# ussl scenario description",
        f"seed={spec.seed}",
        f"known_class_count={spec.known_class_count}",
    ]
    for key, value in spec.counts.model_dump().items():
        lines.append(f"{key}={format_float(value) if isinstance(value, float) else value}")
    for i, cls in enumerate(spec.classes):
        lines.append(f"class_{i}_mean={_vector(cls.mean)}")
        lines.append(f"class_{i}_scale={format_float(cls.scale)}")
    for i, dom in enumerate(spec.domains):
        lines.append(f"domain_{i}_transform={';'.join(_vector(row) for row in dom.transform)}")
        lines.append(f"domain_{i}_shift={_vector(dom.shift)}")
        lines.append(f"domain_{i}_noise_scale={format_float(dom.noise_scale)}")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")


def _floats(raw: Optional[str], key: str) -> list[float]:
    if raw is None or raw.strip() == "":
        raise DataError(f"Key '{key}' has no value")
    try:
        return [float(v) for v in raw.split(",")]
    except ValueError as e:
        raise DataError(f"Key '{key}': {e}") from e


def read_scenario_file(path: Path) -> ScenarioSpec:
    """Parse a description written by `write_scenario_file` (or by hand).

    Raises:
        DataError: Missing file, unknown keys, malformed values or a spec
            that fails validation
    """
    if not path.exists():
        raise DataError(f"Scenario description not found: {path}", details={"path": str(path)})
    values = dotenv_values(path)

    classes: dict[int, dict] = {}
    domains: dict[int, dict] = {}
    counts: dict[str, str] = {}
    top: dict[str, str] = {}
    for key, raw in values.items():
        if match := _CLASS_KEY.match(key):
            idx, field = int(match.group(1)), match.group(2)
            classes.setdefault(idx, {})[field] = _floats(raw, key) if field == "mean" else raw
        elif match := _DOMAIN_KEY.match(key):
            idx, field = int(match.group(1)), match.group(2)
            if field == "transform":
                rows = (raw or "").split(";")
                domains.setdefault(idx, {})[field] = [_floats(row, key) for row in rows]
            elif field == "shift":
                domains.setdefault(idx, {})[field] = _floats(raw, key)
            else:
                domains.setdefault(idx, {})[field] = raw
        elif key in _COUNT_KEYS:
            counts[key] = raw or ""
        elif key in ("seed", "known_class_count"):
            top[key] = raw or ""
        else:
            raise DataError(f"Unknown key '{key}' in scenario description", details={"path": str(path)})

    if sorted(classes) != list(range(len(classes))) or sorted(domains) != list(range(len(domains))):
        raise DataError("Class and domain indices must be contiguous from 0", details={"path": str(path)})

    try:
        return ScenarioSpec(
            classes=[ClassSpec(**classes[i]) for i in range(len(classes))],
            domains=[DomainSpec(**domains[i]) for i in range(len(domains))],
            counts=ScenarioCounts(**counts),
            **top,
        )
    except PydanticValidationError as e:
        raise DataError(f"Invalid scenario description: {e.errors()[0]['msg']}", details={"path": str(path)}) from e
