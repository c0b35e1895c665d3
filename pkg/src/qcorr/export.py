"""
CSV and JSON artifacts.

All files are UTF-8 with LF line endings; floats are written with repr(), the
shortest string that round-trips, so reruns are byte-identical.
"""

import csv
import json
import math
from pathlib import Path
from typing import Any, Dict, Iterable, Sequence

import numpy as np

from .analysis import ScanReport
from .errors import DomainError
from .events import MatchedPairs, StationStream

EVENTS_HEADER = ("pair_tag", "station", "setting_rad", "outcome")
MATCHED_HEADER = ("pair_tag", "theta1_rad", "theta2_rad", "a", "b")
SCAN_HEADER = ("dtheta_rad", "model_P", "oracle_E", "mc_P", "abs_diff")
PATTERN_HEADER = ("dx", "pattern")


def format_float(value: float) -> str:
    return repr(float(value))


def format_outcome(value: int) -> str:
    return "+1" if value == 1 else "-1"


def parse_outcome(text: str) -> int:
    if text not in ("+1", "-1", "1"):
        raise DomainError(f"Invalid outcome {text!r}")
    return -1 if text == "-1" else 1


def _json_safe(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: Path, data: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_json_safe(data), indent=2, ensure_ascii=False, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[str]]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return path


def scan_rows(report: ScanReport):
    for values in zip(report.dtheta, report.model_P, report.oracle_E, report.mc_P, report.abs_diff):
        yield [format_float(v) for v in values]


def write_scan_csv(path: Path, report: ScanReport) -> Path:
    return write_csv(path, SCAN_HEADER, scan_rows(report))


def scan_to_dict(report: ScanReport) -> Dict[str, Any]:
    return {
        "rows": [dict(zip(SCAN_HEADER, values)) for values in zip(
            report.dtheta.tolist(),
            report.model_P.tolist(),
            report.oracle_E.tolist(),
            report.mc_P.tolist(),
            report.abs_diff.tolist(),
        )],
        "max_abs_diff": report.max_abs_diff,
    }


def write_events_csv(path: Path, stream_a: StationStream, stream_b: StationStream) -> Path:
    """One row per station event, ordered by tag with station A before B."""
    tags = np.concatenate([stream_a.pair_tag, stream_b.pair_tag])
    station = np.concatenate([np.zeros(len(stream_a), dtype=np.int8), np.ones(len(stream_b), dtype=np.int8)])
    settings = np.concatenate([stream_a.setting, stream_b.setting])
    outcomes = np.concatenate([stream_a.outcome, stream_b.outcome])
    order = np.lexsort((station, tags))

    labels = ("A", "B")
    setting_text: Dict[float, str] = {}

    def rows():
        for i in order:
            setting = float(settings[i])
            if setting not in setting_text:
                setting_text[setting] = format_float(setting)
            yield (str(int(tags[i])), labels[station[i]], setting_text[setting], format_outcome(outcomes[i]))

    return write_csv(path, EVENTS_HEADER, rows())


def read_events_csv(path: Path) -> Dict[str, StationStream]:
    """Rebuild per-station streams (keys "A" and "B") from an events CSV."""
    columns: Dict[str, list] = {"A": [], "B": []}
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != EVENTS_HEADER:
            raise DomainError(f"Unexpected events CSV header in {path}")
        for row in reader:
            if row["station"] not in columns:
                raise DomainError(f"Unknown station {row['station']!r} in {path}")
            columns[row["station"]].append(
                (int(row["pair_tag"]), float(row["setting_rad"]), parse_outcome(row["outcome"]))
            )

    def stream(name: str) -> StationStream:
        records = columns[name]
        return StationStream(
            station=name,
            pair_tag=np.array([r[0] for r in records], dtype=np.int64),
            setting=np.array([r[1] for r in records], dtype=float),
            outcome=np.array([r[2] for r in records], dtype=np.int8),
        )

    return {"A": stream("A"), "B": stream("B")}


def write_matched_csv(path: Path, matched: MatchedPairs) -> Path:
    cache: Dict[float, str] = {}

    def text(value: float) -> str:
        value = float(value)
        if value not in cache:
            cache[value] = format_float(value)
        return cache[value]

    rows = (
        (str(int(tag)), text(t1), text(t2), format_outcome(a), format_outcome(b))
        for tag, t1, t2, a, b in zip(matched.pair_tag, matched.theta1, matched.theta2, matched.a, matched.b)
    )
    return write_csv(path, MATCHED_HEADER, rows)


def write_pattern_csv(path: Path, dx: np.ndarray, pattern: np.ndarray) -> Path:
    rows = ((format_float(d), format_float(p)) for d, p in zip(dx, pattern))
    return write_csv(path, PATTERN_HEADER, rows)
