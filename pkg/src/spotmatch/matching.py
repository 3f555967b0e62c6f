"""Student-to-pseudo-label cost computation and bipartite assignment."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .geometry import GeometryError, Polygon
from .textmetrics import Alphabet, instance_confidence, text_disparity

FOCAL_ALPHA = 0.25
FOCAL_GAMMA = 2.0
SCORE_CLAMP = 1e-6
PROB_FLOOR = 1e-12
DEFAULT_WEIGHTS = (1.0, 1.0, 0.5)
DEFAULT_MAX_TEXT_LEN = 25

ONE_TO_ONE = "one-to-one"
ONE_TO_MANY = "one-to-many"


class MatchingError(ValueError):
    """Invalid matching input (bad scores, missing distributions, shape mismatch)."""


@dataclass(frozen=True, eq=False)
class TextInstance:
    """One predicted text instance: region, score, decoded text, confidences."""

    polygon: Polygon
    score: float
    transcription: str
    char_conf: tuple[float, ...] = ()
    char_dists: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise MatchingError(f"classification score {self.score} outside [0, 1]")
        conf = tuple(float(c) for c in self.char_conf)
        if len(conf) != len(self.transcription):
            raise MatchingError(
                f"char_conf length {len(conf)} != transcription length {len(self.transcription)}"
            )
        if any(not 0.0 <= c <= 1.0 for c in conf):
            raise MatchingError("character confidence outside [0, 1]")
        object.__setattr__(self, "char_conf", conf)
        if self.char_dists is not None:
            dists = np.asarray(self.char_dists, dtype=float)
            if dists.ndim != 2:
                raise MatchingError("char_dists must be a 2-D slot-by-symbol matrix")
            sums = dists.sum(axis=1)
            if not np.all(np.abs(sums - 1.0) <= 1e-6):
                raise MatchingError("char_dists rows must sum to 1 within 1e-6")
            if len(self.transcription) > dists.shape[0]:
                raise MatchingError(
                    f"transcription longer than decoder length {dists.shape[0]}"
                )
            dists.setflags(write=False)
            object.__setattr__(self, "char_dists", dists)

    @property
    def confidence(self) -> float:
        """Mean character confidence; 0.0 for instances with no decoded text."""
        if not self.char_conf:
            return 0.0
        return instance_confidence(self.char_conf)


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """All instances of one model on one image, normalized coordinates."""

    image_id: str
    width: int
    height: int
    instances: tuple[TextInstance, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "instances", tuple(self.instances))
        if self.width <= 0 or self.height <= 0:
            raise MatchingError("image dimensions must be positive")

    def __len__(self) -> int:
        return len(self.instances)


@dataclass(frozen=True)
class CostBreakdown:
    cls_cost: float
    text_cost: float
    coord_cost: float
    total: float


@dataclass(frozen=True)
class MatchedPair:
    student: int
    teacher: int
    cost: CostBreakdown


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple[MatchedPair, ...]
    mode: str

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        students = [p.student for p in self.pairs]
        if len(set(students)) != len(students):
            raise MatchingError("duplicate student index in match result")
        if self.mode == ONE_TO_ONE:
            teachers = [p.teacher for p in self.pairs]
            if len(set(teachers)) != len(teachers):
                raise MatchingError("duplicate teacher index in one-to-one match")
        elif self.mode != ONE_TO_MANY:
            raise MatchingError(f"unknown match mode {self.mode!r}")

    def index_pairs(self) -> list[tuple[int, int]]:
        return [(p.student, p.teacher) for p in self.pairs]


def focal_cost(score: float, target: int) -> float:
    """Focal classification cost of one score against a binary target."""
    s = min(max(float(score), SCORE_CLAMP), 1.0 - SCORE_CLAMP)
    if target == 1:
        return FOCAL_ALPHA * (1.0 - s) ** FOCAL_GAMMA * -math.log(s)
    return (1.0 - FOCAL_ALPHA) * s**FOCAL_GAMMA * -math.log(1.0 - s)


def text_cost(student: TextInstance, pseudo: str, alphabet: Alphabet) -> float:
    """Mean negative log-probability of the pseudo transcription under the
    student's per-slot distributions, padding slots included."""
    dists = student.char_dists
    if dists is None:
        raise MatchingError(
            "student instance has no character distributions; enable the "
            "decoded-text disparity fallback to match on transcriptions"
        )
    if dists.shape[1] != alphabet.dist_width:
        raise MatchingError(
            f"char_dists width {dists.shape[1]} != alphabet width {alphabet.dist_width}"
        )
    if not pseudo:
        raise MatchingError("pseudo transcription is empty")
    slots = dists.shape[0]
    targets = [alphabet.index_of(c) for c in pseudo[:slots]]
    targets += [alphabet.pad_index] * (slots - len(targets))
    probs = dists[np.arange(slots), targets]
    return float(np.mean(-np.log(np.maximum(probs, PROB_FLOOR))))


def coord_cost(a: Polygon, b: Polygon) -> float:
    """Mean absolute coordinate difference over all boundary points."""
    if len(a.points) != len(b.points):
        raise GeometryError(
            f"point count mismatch: {len(a.points)} vs {len(b.points)}"
        )
    return float(np.mean(np.abs(a.as_array() - b.as_array())))


def cost_matrix(
    students: PredictionSet,
    pseudos: PredictionSet,
    weights: Sequence[float] = DEFAULT_WEIGHTS,
    alphabet: Alphabet | None = None,
    text_fallback: bool = False,
) -> list[list[CostBreakdown]]:
    """Composite cost of every student against every retained pseudo-label.

    Retained pseudo-labels all carry a binarized positive target, so the
    classification term depends on the student score only.
    """
    w_cls, w_text, w_coord = (float(w) for w in weights)
    alphabet = alphabet or Alphabet()
    matrix: list[list[CostBreakdown]] = []
    for student in students.instances:
        row = []
        for pseudo in pseudos.instances:
            cls_c = focal_cost(student.score, 1)
            if student.char_dists is None and text_fallback:
                text_c = text_disparity(student.transcription, pseudo.transcription)
            else:
                text_c = text_cost(student, pseudo.transcription, alphabet)
            coord_c = coord_cost(student.polygon, pseudo.polygon)
            total = w_cls * cls_c + w_text * text_c + w_coord * coord_c
            row.append(CostBreakdown(cls_c, text_c, coord_c, total))
        matrix.append(row)
    return matrix


def _optimal_completion(sub: np.ndarray, pairs_needed: int) -> Optional[float]:
    if pairs_needed == 0:
        return 0.0
    if sub.size == 0 or min(sub.shape) < pairs_needed:
        return None
    rows, cols = linear_sum_assignment(sub)
    return float(sub[rows, cols].sum())


def solve_assignment(costs) -> list[tuple[int, int]]:
    """Minimum-cost bipartite matching of cardinality min(N, M).

    Among all optimal assignments, returns the lexicographically smallest
    (student, teacher) pair list: each row in turn takes the lowest column
    that still permits an optimal completion.
    """
    costs = np.asarray(costs, dtype=float)
    if costs.size == 0:
        return []
    if costs.ndim != 2:
        raise MatchingError("cost matrix must be 2-D")
    if not np.isfinite(costs).all():
        raise MatchingError("cost matrix entries must be finite")
    n, m = costs.shape
    rows, cols = linear_sum_assignment(costs)
    target = float(costs[rows, cols].sum())
    tol = 1e-9 * max(1.0, abs(target))
    need = min(n, m)
    pairs: list[tuple[int, int]] = []
    available = list(range(m))
    fixed = 0.0
    for i in range(n):
        pairs_needed = need - len(pairs)
        if pairs_needed == 0:
            break
        placed = False
        for j in available:
            sub_cols = [c for c in available if c != j]
            sub = costs[np.ix_(range(i + 1, n), sub_cols)]
            completion = _optimal_completion(sub, pairs_needed - 1)
            if completion is None:
                continue
            if fixed + costs[i, j] + completion <= target + tol:
                pairs.append((i, j))
                available.remove(j)
                fixed += float(costs[i, j])
                placed = True
                break
        # an unmatched row is only possible when students outnumber labels;
        # the remaining rows then must carry the optimum
        if not placed and n - i - 1 < pairs_needed:
            raise MatchingError("assignment refinement failed to place a row")
    return pairs


def _totals(matrix: list[list[CostBreakdown]]) -> np.ndarray:
    if not matrix:
        return np.zeros((0, 0))
    return np.array([[c.total for c in row] for row in matrix], dtype=float)


def hungarian(matrix: list[list[CostBreakdown]]) -> MatchResult:
    """Optimal one-to-one assignment over a cost-breakdown grid."""
    totals = _totals(matrix)
    pairs = solve_assignment(totals) if totals.size else []
    return MatchResult(
        pairs=tuple(MatchedPair(i, j, matrix[i][j]) for i, j in pairs),
        mode=ONE_TO_ONE,
    )


def one_to_many_assign(matrix: list[list[CostBreakdown]], k: int) -> MatchResult:
    """Greedy one-to-many assignment: each pseudo-label claims up to k students.

    Candidate (student, pseudo) pairs are consumed in ascending cost order
    with (cost, student, teacher) as the deterministic sort key.
    """
    if k < 1:
        raise MatchingError(f"one-to-many multiplicity must be >= 1, got {k}")
    totals = _totals(matrix)
    if totals.size == 0:
        return MatchResult(pairs=(), mode=ONE_TO_MANY)
    n, m = totals.shape
    order = sorted(
        ((totals[i, j], i, j) for i in range(n) for j in range(m)),
    )
    taken_students: set[int] = set()
    teacher_load = [0] * m
    pairs = []
    for _, i, j in order:
        if i in taken_students or teacher_load[j] >= k:
            continue
        taken_students.add(i)
        teacher_load[j] += 1
        pairs.append(MatchedPair(i, j, matrix[i][j]))
    pairs.sort(key=lambda p: (p.student, p.teacher))
    return MatchResult(pairs=tuple(pairs), mode=ONE_TO_MANY)
