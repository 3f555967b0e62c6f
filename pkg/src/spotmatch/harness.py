"""Synthetic scene generation, spotting evaluation, and deviation/similarity statistics."""

from __future__ import annotations

import math
import string
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .geometry import Polygon, polygon_diou, polygon_iou
from .matching import PredictionSet, TextInstance
from .textmetrics import Alphabet, levenshtein, text_disparity

LETTERS = string.ascii_uppercase + string.ascii_lowercase
DECODER_LEN = 25
MIN_CORRELATION_PAIRS = 30
# displacement (normalized units) at which character corruption doubles
DEVIATION_REF = 0.02


class HarnessError(ValueError):
    """Invalid harness input (bad config, duplicate image ids, too few pairs)."""


@dataclass(frozen=True)
class SynthConfig:
    seed: int
    n_instances: int
    k_points: int = 5
    jitter_sigma: float = 0.0
    char_error_rate: float = 0.0
    score_noise: float = 0.0

    def __post_init__(self):
        if self.n_instances < 0:
            raise HarnessError("n_instances must be >= 0")
        if self.k_points < 2:
            raise HarnessError("k_points must be >= 2")
        if not 0.0 <= self.char_error_rate <= 1.0:
            raise HarnessError("char_error_rate must lie in [0, 1]")
        if self.jitter_sigma < 0 or self.score_noise < 0:
            raise HarnessError("noise scales must be >= 0")


@dataclass(frozen=True)
class PerImageCounts:
    image_id: str
    tp: int
    fp: int
    fn: int


@dataclass(frozen=True)
class EvalReport:
    precision: float
    recall: float
    f1: float
    e2e_hmean_none: float
    e2e_hmean_full: Optional[float]
    per_image: tuple[PerImageCounts, ...] = ()


@dataclass(frozen=True)
class CorrelationReport:
    pearson_r: float
    bin_edges: tuple[float, ...]
    bin_means: tuple[float, ...]
    bin_counts: tuple[int, ...]


def _instance_dists(transcription: str, char_conf, alphabet: Alphabet) -> np.ndarray:
    """Per-slot distributions consistent with a decoded text: the decoded
    symbol carries its confidence, the rest of the mass spreads uniformly."""
    width = alphabet.dist_width
    dists = np.zeros((DECODER_LEN, width))
    for slot in range(DECODER_LEN):
        if slot < len(transcription):
            target = alphabet.index_of(transcription[slot])
            conf = float(char_conf[slot])
        else:
            target = alphabet.pad_index
            conf = 1.0
        if conf >= 1.0:
            dists[slot, target] = 1.0
        else:
            dists[slot, :] = (1.0 - conf) / (width - 1)
            dists[slot, target] = conf
    return dists


def _ribbon(rng: np.random.Generator, cell: tuple[float, float, float, float], k: int) -> Polygon:
    x_lo, y_lo, cw, ch = cell
    x0 = x_lo + 0.15 * cw
    x1 = x_lo + 0.85 * cw
    yc = y_lo + ch * rng.uniform(0.4, 0.6)
    height = ch * rng.uniform(0.3, 0.45)
    xs = np.linspace(x0, x1, k)
    wobble = 0.1 * height
    top = [(x, yc - height / 2 + rng.uniform(-wobble, wobble)) for x in xs]
    bottom = [(x, yc + height / 2 + rng.uniform(-wobble, wobble)) for x in xs]
    return Polygon(tuple(top) + tuple(reversed(bottom)))


def _perturb_instance(
    rng: np.random.Generator,
    gt: TextInstance,
    cfg: SynthConfig,
    alphabet: Alphabet,
) -> TextInstance:
    pts = gt.polygon.as_array()
    jitter = rng.normal(0.0, cfg.jitter_sigma, pts.shape) if cfg.jitter_sigma > 0 else np.zeros(pts.shape)
    moved = np.clip(pts + jitter, 0.0, 1.0)
    deviation = float(np.mean(np.hypot(jitter[:, 0], jitter[:, 1])))
    # corruption grows with the realized displacement of this instance:
    # recognition degrades when localization drifts
    p_corrupt = min(0.95, cfg.char_error_rate * (1.0 + deviation / DEVIATION_REF))
    chars = []
    confs = []
    for ch in gt.transcription:
        if p_corrupt > 0 and rng.random() < p_corrupt:
            choices = [c for c in LETTERS if c != ch]
            chars.append(choices[int(rng.integers(len(choices)))])
            confs.append(float(np.clip(rng.uniform(0.3, 0.7), 0.0, 1.0)))
        else:
            chars.append(ch)
            confs.append(float(np.clip(1.0 - abs(rng.normal(0.0, cfg.score_noise)), 0.05, 1.0)))
    text = "".join(chars)
    score = float(np.clip(1.0 - abs(rng.normal(0.0, cfg.score_noise)), 0.02, 1.0))
    return TextInstance(
        polygon=Polygon(tuple(map(tuple, moved))),
        score=score,
        transcription=text,
        char_conf=tuple(confs),
        char_dists=_instance_dists(text, confs, alphabet),
    )


def synth_scene(
    cfg: SynthConfig, image_id: Optional[str] = None, alphabet: Optional[Alphabet] = None
) -> tuple[PredictionSet, PredictionSet, PredictionSet]:
    """Deterministic synthetic scene: ground truth plus independently
    perturbed teacher and student prediction sets.

    Character corruption probability grows with the realized polygon
    deviation of each instance, so recognition quality degrades together
    with localization quality.
    """
    alphabet = alphabet or Alphabet()
    rng = np.random.default_rng(cfg.seed)
    image_id = image_id or f"scene-{cfg.seed}"
    n = cfg.n_instances
    gt_instances = []
    if n > 0:
        cols = math.ceil(math.sqrt(n))
        rows = math.ceil(n / cols)
        for idx in range(n):
            r, c = divmod(idx, cols)
            cell = (c / cols, r / rows, 1.0 / cols, 1.0 / rows)
            poly = _ribbon(rng, cell, cfg.k_points)
            length = int(rng.integers(3, 11))
            text = "".join(LETTERS[int(rng.integers(len(LETTERS)))] for _ in range(length))
            conf = (1.0,) * length
            gt_instances.append(
                TextInstance(
                    polygon=poly,
                    score=1.0,
                    transcription=text,
                    char_conf=conf,
                    char_dists=_instance_dists(text, conf, alphabet),
                )
            )
    teacher = [_perturb_instance(rng, g, cfg, alphabet) for g in gt_instances]
    student = [_perturb_instance(rng, g, cfg, alphabet) for g in gt_instances]

    def as_set(instances):
        return PredictionSet(image_id=image_id, width=1000, height=1000, instances=tuple(instances))

    return as_set(gt_instances), as_set(teacher), as_set(student)


def synth_corpus(
    cfg: SynthConfig, n_images: int, alphabet: Optional[Alphabet] = None
) -> list[tuple[PredictionSet, PredictionSet, PredictionSet]]:
    """Multiple scenes with independent child seeds derived from cfg.seed."""
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_images)
    scenes = []
    for idx, child in enumerate(seeds):
        child_seed = int(child.generate_state(1)[0])
        scene_cfg = SynthConfig(
            seed=child_seed,
            n_instances=cfg.n_instances,
            k_points=cfg.k_points,
            jitter_sigma=cfg.jitter_sigma,
            char_error_rate=cfg.char_error_rate,
            score_noise=cfg.score_noise,
        )
        scenes.append(synth_scene(scene_cfg, image_id=f"scene-{cfg.seed}-{idx:04d}", alphabet=alphabet))
    return scenes


def _content_key(inst: TextInstance):
    return (inst.transcription, inst.polygon.points)


def _match_image(
    preds: PredictionSet, gts: PredictionSet, iou_thresh: float
) -> dict[int, tuple[int, float]]:
    """Greedy score-descending matching; returns pred index -> (gt index, iou).

    Ties (equal scores, equal overlaps) break on instance content so the
    outcome is invariant under reordering within the image.
    """
    order = sorted(
        range(len(preds.instances)),
        key=lambda i: (-preds.instances[i].score, _content_key(preds.instances[i])),
    )
    claimed: set[int] = set()
    matches: dict[int, tuple[int, float]] = {}
    for i in order:
        best = None
        for j, gt in enumerate(gts.instances):
            if j in claimed:
                continue
            iou = polygon_iou(preds.instances[i].polygon, gt.polygon)
            if iou < iou_thresh:
                continue
            key = (-iou, _content_key(gt))
            if best is None or key < best[0]:
                best = (key, j, iou)
        if best is not None:
            matches[i] = (best[1], best[2])
            claimed.add(best[1])
    return matches


def _check_aligned(preds: Sequence[PredictionSet], gts: Sequence[PredictionSet]):
    pred_ids = [p.image_id for p in preds]
    gt_ids = [g.image_id for g in gts]
    if len(set(pred_ids)) != len(pred_ids) or len(set(gt_ids)) != len(gt_ids):
        raise HarnessError("duplicate image ids in evaluation input")
    if set(pred_ids) != set(gt_ids):
        raise HarnessError("prediction and ground-truth image ids do not align")


def _prf(tp: int, n_pred: int, n_gt: int) -> tuple[float, float, float]:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gt if n_gt else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def detection_prf(
    preds: Sequence[PredictionSet], gts: Sequence[PredictionSet], iou_thresh: float = 0.5
) -> EvalReport:
    """Micro-averaged detection precision/recall/F1 at an IoU threshold."""
    _check_aligned(preds, gts)
    gt_by_id = {g.image_id: g for g in gts}
    tp = fp = fn = 0
    per_image = []
    for pred in preds:
        gt = gt_by_id[pred.image_id]
        matches = _match_image(pred, gt, iou_thresh)
        img_tp = len(matches)
        img_fp = len(pred.instances) - img_tp
        img_fn = len(gt.instances) - img_tp
        per_image.append(PerImageCounts(pred.image_id, img_tp, img_fp, img_fn))
        tp += img_tp
        fp += img_fp
        fn += img_fn
    precision, recall, f1 = _prf(tp, tp + fp, tp + fn)
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=f1,
        e2e_hmean_none=0.0,
        e2e_hmean_full=None,
        per_image=tuple(per_image),
    )


def lexicon_correct(word: str, lexicon: Sequence[str]) -> str:
    """Nearest lexicon word by edit distance; ties break lexicographically."""
    if not lexicon:
        return word
    best = None
    for candidate in sorted(lexicon):
        d = levenshtein(word.lower(), candidate.lower())
        if best is None or d < best[0]:
            best = (d, candidate)
    return best[1]


def e2e_hmean(
    preds: Sequence[PredictionSet],
    gts: Sequence[PredictionSet],
    lexicon: Optional[Sequence[str]] = None,
    iou_thresh: float = 0.5,
) -> float:
    """End-to-end F1: a true positive needs the detection overlap and a
    case-insensitive transcription match, after optional lexicon correction."""
    _check_aligned(preds, gts)
    gt_by_id = {g.image_id: g for g in gts}
    tp = n_pred = n_gt = 0
    for pred in preds:
        gt = gt_by_id[pred.image_id]
        matches = _match_image(pred, gt, iou_thresh)
        n_pred += len(pred.instances)
        n_gt += len(gt.instances)
        for i, (j, _) in matches.items():
            word = pred.instances[i].transcription
            if lexicon is not None:
                word = lexicon_correct(word, lexicon)
            if word.lower() == gt.instances[j].transcription.lower():
                tp += 1
    return _prf(tp, n_pred, n_gt)[2]


def evaluate(
    preds: Sequence[PredictionSet],
    gts: Sequence[PredictionSet],
    lexicon: Optional[Sequence[str]] = None,
    iou_thresh: float = 0.5,
) -> EvalReport:
    """Detection P/R/F1 plus end-to-end H-mean without and (optionally) with lexicon."""
    det = detection_prf(preds, gts, iou_thresh)
    none_h = e2e_hmean(preds, gts, None, iou_thresh)
    full_h = e2e_hmean(preds, gts, lexicon, iou_thresh) if lexicon is not None else None
    return EvalReport(
        precision=det.precision,
        recall=det.recall,
        f1=det.f1,
        e2e_hmean_none=none_h,
        e2e_hmean_full=full_h,
        per_image=det.per_image,
    )


def correlation_report(pairs: Sequence[tuple[float, float]], n_bins: int = 10) -> CorrelationReport:
    """Pearson correlation plus an equal-count binned mean-similarity curve."""
    if len(pairs) < MIN_CORRELATION_PAIRS:
        raise HarnessError(
            f"correlation needs >= {MIN_CORRELATION_PAIRS} pairs, got {len(pairs)}"
        )
    arr = np.asarray(pairs, dtype=float)
    x, y = arr[:, 0], arr[:, 1]
    if np.std(x) == 0 or np.std(y) == 0:
        r = 0.0
    else:
        r = float(np.corrcoef(x, y)[0, 1])
    edges = np.quantile(x, np.linspace(0.0, 1.0, n_bins + 1))
    means = []
    counts = []
    for b in range(n_bins):
        lo, hi = edges[b], edges[b + 1]
        mask = (x >= lo) & (x < hi) if b < n_bins - 1 else (x >= lo) & (x <= hi)
        counts.append(int(mask.sum()))
        means.append(float(y[mask].mean()) if mask.any() else float("nan"))
    return CorrelationReport(
        pearson_r=r,
        bin_edges=tuple(float(e) for e in edges),
        bin_means=tuple(means),
        bin_counts=tuple(counts),
    )


def deviation_similarity_pairs(
    seed: int,
    n_pairs: int,
    jitter_levels: Sequence[float] = (0.002, 0.006, 0.01, 0.015, 0.02, 0.025, 0.03, 0.035, 0.04, 0.05),
    char_error_rate: float = 0.2,
    k_points: int = 5,
) -> list[tuple[float, float, float]]:
    """(DIoU, IoU, text similarity) of teacher/student twins at graded jitter.

    Teacher and student instances descend from the same ground-truth
    instance, so pairs correspond by construction and no matching runs.
    """
    per_level = math.ceil(n_pairs / len(jitter_levels))
    seeds = np.random.SeedSequence(seed).spawn(len(jitter_levels))
    out: list[tuple[float, float, float]] = []
    for level, child in zip(jitter_levels, seeds):
        level_seed = int(child.generate_state(1)[0])
        collected = 0
        scene_idx = 0
        while collected < per_level:
            cfg = SynthConfig(
                seed=level_seed + scene_idx,
                n_instances=16,
                k_points=k_points,
                jitter_sigma=level,
                char_error_rate=char_error_rate,
                score_noise=0.1,
            )
            _, teacher, student = synth_scene(cfg)
            for t_inst, s_inst in zip(teacher.instances, student.instances):
                diou = polygon_diou(t_inst.polygon, s_inst.polygon)
                iou = polygon_iou(t_inst.polygon, s_inst.polygon)
                sim = 1.0 - text_disparity(t_inst.transcription, s_inst.transcription)
                out.append((diou, iou, sim))
                collected += 1
                if collected >= per_level:
                    break
            scene_idx += 1
    return out[:n_pairs]
