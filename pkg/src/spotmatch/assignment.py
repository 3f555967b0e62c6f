"""Progressive sample assignment: filter teacher predictions, match, tier the labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .matching import (
    DEFAULT_WEIGHTS,
    MatchedPair,
    MatchResult,
    PredictionSet,
    cost_matrix,
    hungarian,
    one_to_many_assign,
)
from .textmetrics import Alphabet

STAGE_O2M = "o2m"
STAGE_O2O = "o2o"

DET_ONLY = "det_only"
E2E = "e2e"


class AssignmentError(ValueError):
    """Invalid assignment input (bad thresholds, mismatched images, bad indices)."""


@dataclass(frozen=True)
class PsaConfig:
    t_det: float = 0.4
    t_rec: float = 0.7
    enable_cc: bool = True
    stage: str = STAGE_O2O
    k_o2m: int = 3
    weights: tuple[float, float, float] = DEFAULT_WEIGHTS
    text_fallback: bool = False

    def __post_init__(self):
        for name, value in (("t_det", self.t_det), ("t_rec", self.t_rec)):
            if not 0.0 <= value <= 1.0:
                raise AssignmentError(f"{name} must lie in [0, 1], got {value}")
        if self.stage not in (STAGE_O2M, STAGE_O2O):
            raise AssignmentError(f"stage must be '{STAGE_O2M}' or '{STAGE_O2O}'")
        if self.k_o2m < 1:
            raise AssignmentError(f"k_o2m must be >= 1, got {self.k_o2m}")


@dataclass(frozen=True)
class HierarchicalLabels:
    """Matched pairs split into detection-only and end-to-end tiers."""

    det_only: tuple[tuple[int, int], ...]
    e2e: tuple[tuple[int, int], ...]
    dropped: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "det_only", tuple(tuple(p) for p in self.det_only))
        object.__setattr__(self, "e2e", tuple(tuple(p) for p in self.e2e))
        object.__setattr__(self, "dropped", tuple(self.dropped))
        if set(self.det_only) & set(self.e2e):
            raise AssignmentError("a pair may belong to exactly one tier")

    def all_pairs(self) -> list[tuple[int, int]]:
        return sorted(set(self.det_only) | set(self.e2e))

    def tier_of(self, pair: tuple[int, int]) -> str:
        if pair in set(self.e2e):
            return E2E
        if pair in set(self.det_only):
            return DET_ONLY
        raise AssignmentError(f"pair {pair} not in labels")


def is_void_text(transcription: str) -> bool:
    """Void means empty after stripping whitespace (padding is stripped at decode)."""
    return transcription.strip() == ""


def joint_constraint_filter(
    teacher: PredictionSet, t_det: float
) -> tuple[PredictionSet, tuple[int, ...]]:
    """Drop teacher predictions scoring below the detection threshold or with
    void decoded text; returns the retained set and the dropped original indices."""
    retained = []
    dropped = []
    for idx, inst in enumerate(teacher.instances):
        if inst.score >= t_det and not is_void_text(inst.transcription):
            retained.append(inst)
        else:
            dropped.append(idx)
    kept_set = PredictionSet(
        image_id=teacher.image_id,
        width=teacher.width,
        height=teacher.height,
        instances=tuple(retained),
    )
    return kept_set, tuple(dropped)


def recognition_filter(
    matches: MatchResult,
    teacher: PredictionSet,
    student: PredictionSet,
    t_rec: float,
    enable_cc: bool,
    dropped: tuple[int, ...] = (),
) -> HierarchicalLabels:
    """Promote matched pairs to the end-to-end tier when the teacher's
    recognition confidence beats the threshold and, with confidence
    comparison on, strictly exceeds the student's."""
    det_only = []
    e2e = []
    for pair in matches.pairs:
        if pair.teacher >= len(teacher.instances) or pair.student >= len(student.instances):
            raise AssignmentError(f"match pair {pair.student, pair.teacher} out of range")
        c_t = teacher.instances[pair.teacher].confidence
        c_s = student.instances[pair.student].confidence
        if c_t > t_rec and (not enable_cc or c_t > c_s):
            e2e.append((pair.student, pair.teacher))
        else:
            det_only.append((pair.student, pair.teacher))
    return HierarchicalLabels(
        det_only=tuple(det_only), e2e=tuple(e2e), dropped=tuple(dropped)
    )


def assign(
    teacher: PredictionSet,
    student: PredictionSet,
    cfg: PsaConfig,
    alphabet: Optional[Alphabet] = None,
) -> tuple[HierarchicalLabels, MatchResult]:
    """Full pipeline: joint constraint filter, cost matrix, stage-appropriate
    matching, recognition filter. Teacher indices in the output refer to the
    original unfiltered prediction set."""
    if teacher.image_id != student.image_id:
        raise AssignmentError(
            f"image mismatch: teacher {teacher.image_id!r} vs student {student.image_id!r}"
        )
    retained, dropped = joint_constraint_filter(teacher, cfg.t_det)
    kept = [i for i in range(len(teacher.instances)) if i not in set(dropped)]
    matrix = cost_matrix(
        student,
        retained,
        weights=cfg.weights,
        alphabet=alphabet,
        text_fallback=cfg.text_fallback,
    )
    if cfg.stage == STAGE_O2O:
        match = hungarian(matrix)
    else:
        match = one_to_many_assign(matrix, cfg.k_o2m)
    remapped = MatchResult(
        pairs=tuple(
            MatchedPair(p.student, kept[p.teacher], p.cost) for p in match.pairs
        ),
        mode=match.mode,
    )
    labels = recognition_filter(
        remapped, teacher, student, cfg.t_rec, cfg.enable_cc, dropped
    )
    return labels, remapped
