"""JSONL prediction files, run configuration, and deterministic serialization."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .geometry import GeometryError, Polygon
from .matching import DEFAULT_WEIGHTS, MatchingError, PredictionSet, TextInstance
from .mms import DEFAULT_EMA_MOMENTUM, DEFAULT_LAMBDA_SCALE, REDUCE_MEAN, REDUCE_SUM
from .textmetrics import Alphabet


class SchemaError(ValueError):
    """A prediction file violated the JSONL schema; carries file and line."""

    def __init__(self, path, line_no: int, message: str):
        self.path = str(path)
        self.line_no = line_no
        super().__init__(f"{self.path}:{line_no}: {message}")


@dataclass(frozen=True)
class RunConfig:
    """Engine configuration; defaults follow the published operating point."""

    t_det: float = 0.4
    t_rec: float = 0.7
    enable_cc: bool = True
    stage: str = "o2o"
    k_o2m: int = 3
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    lambda_scale: float = DEFAULT_LAMBDA_SCALE
    ema_momentum: float = DEFAULT_EMA_MOMENTUM
    reduction: str = REDUCE_SUM
    alphabet_path: Optional[str] = None
    text_fallback: bool = False

    def __post_init__(self):
        if self.reduction not in (REDUCE_SUM, REDUCE_MEAN):
            raise ValueError(f"unknown reduction {self.reduction!r}")

    def to_dict(self) -> dict:
        return {
            "t_det": self.t_det,
            "t_rec": self.t_rec,
            "enable_cc": self.enable_cc,
            "stage": self.stage,
            "k_o2m": self.k_o2m,
            "weights": list(self.weights),
            "lambda_scale": self.lambda_scale,
            "ema_momentum": self.ema_momentum,
            "reduction": self.reduction,
            "alphabet_path": self.alphabet_path,
            "text_fallback": self.text_fallback,
        }

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def load_alphabet(self) -> Alphabet:
        if self.alphabet_path is None:
            return Alphabet()
        return Alphabet.from_file(self.alphabet_path)


def _require(condition: bool, path, line_no: int, message: str):
    if not condition:
        raise SchemaError(path, line_no, message)


def _parse_instance(obj, idx: int, width: int, height: int, path, line_no: int) -> TextInstance:
    where = f"instances[{idx}]"
    _require(isinstance(obj, dict), path, line_no, f"{where} must be an object")
    for key in ("polygon", "score", "transcription", "char_conf"):
        _require(key in obj, path, line_no, f"{where} missing key {key!r}")
    polygon = obj["polygon"]
    _require(
        isinstance(polygon, list) and len(polygon) >= 4 and len(polygon) % 2 == 0,
        path,
        line_no,
        f"{where}.polygon must list an even number (>= 4) of points",
    )
    points = []
    for p in polygon:
        _require(
            isinstance(p, list) and len(p) == 2,
            path,
            line_no,
            f"{where}.polygon points must be [x, y] pairs",
        )
        x, y = float(p[0]), float(p[1])
        _require(
            np.isfinite(x) and np.isfinite(y),
            path,
            line_no,
            f"{where}.polygon has non-finite coordinates",
        )
        points.append((x / width, y / height))
    score = obj["score"]
    _require(
        isinstance(score, (int, float)) and 0.0 <= float(score) <= 1.0,
        path,
        line_no,
        f"{where}.score must lie in [0, 1]",
    )
    transcription = obj["transcription"]
    _require(
        isinstance(transcription, str), path, line_no, f"{where}.transcription must be a string"
    )
    char_conf = obj["char_conf"]
    _require(
        isinstance(char_conf, list) and len(char_conf) == len(transcription),
        path,
        line_no,
        f"{where}.char_conf must match the transcription length",
    )
    dists = None
    if obj.get("char_dists") is not None:
        raw = obj["char_dists"]
        _require(
            isinstance(raw, list) and all(isinstance(r, list) for r in raw),
            path,
            line_no,
            f"{where}.char_dists must be a list of rows",
        )
        dists = np.asarray(raw, dtype=float)
    try:
        return TextInstance(
            polygon=Polygon(tuple(points)),
            score=float(score),
            transcription=transcription,
            char_conf=tuple(float(c) for c in char_conf),
            char_dists=dists,
        )
    except (MatchingError, GeometryError) as exc:
        raise SchemaError(path, line_no, f"{where}: {exc}") from exc


def load_predictions(path: str | Path) -> list[PredictionSet]:
    """Read a JSONL prediction file; pixel coordinates become normalized."""
    path = Path(path)
    sets: list[PredictionSet] = []
    with path.open("r", encoding="utf-8") as handle:
        for line_no, raw in enumerate(handle, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(path, line_no, f"invalid JSON: {exc.msg}") from exc
            _require(isinstance(obj, dict), path, line_no, "row must be an object")
            if "spotmatch_header" in obj:
                continue
            for key in ("image_id", "width", "height", "instances"):
                _require(key in obj, path, line_no, f"missing key {key!r}")
            width, height = obj["width"], obj["height"]
            _require(
                isinstance(width, int) and isinstance(height, int) and width > 0 and height > 0,
                path,
                line_no,
                "width/height must be positive integers",
            )
            _require(
                isinstance(obj["instances"], list), path, line_no, "instances must be a list"
            )
            instances = tuple(
                _parse_instance(inst, i, width, height, path, line_no)
                for i, inst in enumerate(obj["instances"])
            )
            sets.append(
                PredictionSet(
                    image_id=str(obj["image_id"]),
                    width=width,
                    height=height,
                    instances=instances,
                )
            )
    return sets


def prediction_set_to_obj(pred: PredictionSet, include_dists: bool = True) -> dict:
    """Inverse of the loader: normalized coordinates go back to pixels."""
    instances = []
    for inst in pred.instances:
        row = {
            "polygon": [[x * pred.width, y * pred.height] for x, y in inst.polygon.points],
            "score": inst.score,
            "transcription": inst.transcription,
            "char_conf": list(inst.char_conf),
        }
        if include_dists and inst.char_dists is not None:
            row["char_dists"] = inst.char_dists.tolist()
        instances.append(row)
    return {
        "image_id": pred.image_id,
        "width": pred.width,
        "height": pred.height,
        "instances": instances,
    }


def write_predictions(path: str | Path, sets, include_dists: bool = True):
    with Path(path).open("w", encoding="utf-8") as handle:
        for pred in sets:
            handle.write(
                json.dumps(prediction_set_to_obj(pred, include_dists), sort_keys=True)
            )
            handle.write("\n")


def dumps_row(obj: dict) -> str:
    """Canonical one-line JSON for deterministic output files."""
    return json.dumps(obj, sort_keys=True)
