"""Mutual mining factors (spatial/content loss modulation), loss aggregation, EMA."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assignment import DET_ONLY, E2E, HierarchicalLabels
from .geometry import Polygon, polygon_diou
from .matching import PredictionSet, TextInstance
from .textmetrics import text_disparity

DEFAULT_LAMBDA_SCALE = 20.0
DEFAULT_T_REC = 0.7
DEFAULT_OMEGA_SUP = 1.0
DEFAULT_OMEGA_UNSUP = 2.0
DEFAULT_EMA_MOMENTUM = 0.9996

REDUCE_SUM = "sum"
REDUCE_MEAN = "mean"


class MmsError(ValueError):
    """Invalid factor/loss input (misaligned lengths, bad momentum)."""


@dataclass(frozen=True)
class PairFactors:
    """Loss modulation for one matched pair, plus the measurements behind it."""

    student: int
    teacher: int
    tier: str
    alpha: float
    beta: float
    diou: float
    disparity: float


@dataclass(frozen=True)
class FactorSet:
    factors: tuple[PairFactors, ...]
    lambda_scale: float = DEFAULT_LAMBDA_SCALE

    def __len__(self) -> int:
        return len(self.factors)


@dataclass(frozen=True)
class LossTerms:
    """Supervised loss plus per-matched-pair unsupervised base losses."""

    l_sup: float
    cls: tuple[float, ...]
    reg: tuple[float, ...]
    rec: tuple[float, ...]
    omega_sup: float = DEFAULT_OMEGA_SUP
    omega_unsup: float = DEFAULT_OMEGA_UNSUP

    def __post_init__(self):
        object.__setattr__(self, "cls", tuple(float(v) for v in self.cls))
        object.__setattr__(self, "reg", tuple(float(v) for v in self.reg))
        object.__setattr__(self, "rec", tuple(float(v) for v in self.rec))
        if not (len(self.cls) == len(self.reg) == len(self.rec)):
            raise MmsError("per-pair loss lists must have equal lengths")
        values = (self.l_sup, *self.cls, *self.reg, *self.rec)
        if any(not math.isfinite(v) or v < 0 for v in values):
            raise MmsError("loss components must be finite and non-negative")


def sci_factor(teacher_poly: Polygon, student_poly: Polygon) -> float:
    """Recognition-loss modulation from spatial consistency: 1 + DIoU."""
    return 1.0 + polygon_diou(teacher_poly, student_poly)


def crc_factor(
    teacher: TextInstance,
    student: TextInstance,
    t_rec: float = DEFAULT_T_REC,
    lambda_scale: float = DEFAULT_LAMBDA_SCALE,
    enable_cc: bool = True,
) -> float:
    """Regression-loss modulation from transcription disparity.

    Applies only to pairs that qualify for end-to-end supervision (teacher
    confidence above the threshold and, with confidence comparison enabled,
    strictly above the student's); everything else keeps factor 1.
    """
    c_t = teacher.confidence
    c_s = student.confidence
    if c_t > t_rec and (not enable_cc or c_t > c_s):
        return 1.0 + lambda_scale * text_disparity(
            teacher.transcription, student.transcription
        )
    return 1.0


def compute_factors(
    labels: HierarchicalLabels,
    teacher: PredictionSet,
    student: PredictionSet,
    t_rec: float = DEFAULT_T_REC,
    lambda_scale: float = DEFAULT_LAMBDA_SCALE,
    enable_cc: bool = True,
    apply_mms: bool = True,
) -> FactorSet:
    """Per-pair modulation factors for all matched pairs of one image.

    Mutual mining runs in the one-to-one stage only; with ``apply_mms`` off
    both factors stay 1 while the underlying DIoU/disparity measurements are
    still reported for audit.
    """
    factors = []
    tiers = [(pair, DET_ONLY) for pair in labels.det_only]
    tiers += [(pair, E2E) for pair in labels.e2e]
    tiers.sort(key=lambda item: item[0])
    for (s_idx, t_idx), tier in tiers:
        t_inst = teacher.instances[t_idx]
        s_inst = student.instances[s_idx]
        diou = polygon_diou(t_inst.polygon, s_inst.polygon)
        disparity = text_disparity(t_inst.transcription, s_inst.transcription)
        if apply_mms:
            alpha = 1.0 + diou
            beta = crc_factor(t_inst, s_inst, t_rec, lambda_scale, enable_cc)
        else:
            alpha = 1.0
            beta = 1.0
        factors.append(
            PairFactors(
                student=s_idx,
                teacher=t_idx,
                tier=tier,
                alpha=alpha,
                beta=beta,
                diou=diou,
                disparity=disparity,
            )
        )
    return FactorSet(factors=tuple(factors), lambda_scale=lambda_scale)


def unsupervised_loss(
    terms: LossTerms, factors: FactorSet, reduction: str = REDUCE_SUM
) -> float:
    """Overall training loss: supervised part plus factor-modulated
    unsupervised classification/regression/recognition parts.

    Recognition terms contribute only for end-to-end pairs; detection-only
    transcriptions stay out of the optimization. ``reduction`` switches the
    per-pair aggregation between plain sum and pair-count mean.
    """
    if reduction not in (REDUCE_SUM, REDUCE_MEAN):
        raise MmsError(f"unknown reduction {reduction!r}")
    n = len(factors.factors)
    if len(terms.cls) != n:
        raise MmsError(
            f"loss lists cover {len(terms.cls)} pairs but factor set has {n}"
        )
    cls_sum = 0.0
    reg_sum = 0.0
    rec_sum = 0.0
    for i, pf in enumerate(factors.factors):
        cls_sum += terms.cls[i]
        reg_sum += pf.beta * terms.reg[i]
        if pf.tier == E2E:
            rec_sum += pf.alpha * terms.rec[i]
    if reduction == REDUCE_MEAN and n > 0:
        cls_sum /= n
        reg_sum /= n
        rec_sum /= n
    return (
        terms.omega_sup * terms.l_sup
        + terms.omega_unsup * cls_sum
        + terms.omega_unsup * (reg_sum + rec_sum)
    )


def ema_update(teacher_params, student_params, momentum: float = DEFAULT_EMA_MOMENTUM):
    """Elementwise exponential moving average: m * teacher + (1 - m) * student."""
    if not 0.0 <= momentum <= 1.0:
        raise MmsError(f"momentum must lie in [0, 1], got {momentum}")
    teacher_arr = np.asarray(teacher_params, dtype=float)
    student_arr = np.asarray(student_params, dtype=float)
    if teacher_arr.shape != student_arr.shape:
        raise MmsError(
            f"parameter shape mismatch: {teacher_arr.shape} vs {student_arr.shape}"
        )
    return momentum * teacher_arr + (1.0 - momentum) * student_arr
