"""Command-line surface: assign, evaluate, synth, correlate."""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .assignment import AssignmentError, PsaConfig, assign
from .fileio import (
    RunConfig,
    SchemaError,
    dumps_row,
    load_predictions,
    prediction_set_to_obj,
)
from .geometry import GeometryError
from .matching import MatchingError
from .harness import (
    HarnessError,
    SynthConfig,
    correlation_report,
    deviation_similarity_pairs,
    evaluate,
    synth_corpus,
)
from .mms import compute_factors

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_ID_MISMATCH = 3
EXIT_PRECONDITION = 4


class IdMismatchError(ValueError):
    pass


def _thread_count() -> int:
    raw = os.environ.get("SPOTMATCH_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_config(args) -> RunConfig:
    weights = tuple(float(w) for w in args.weights.split(","))
    if len(weights) != 3:
        raise SystemExit("--weights expects three comma-separated values")
    return RunConfig(
        t_det=args.t_det,
        t_rec=args.t_rec,
        enable_cc=not args.no_cc,
        stage=args.stage,
        k_o2m=args.k,
        weights=weights,
        lambda_scale=args.lambda_scale,
        reduction=args.reduction,
        alphabet_path=args.alphabet,
        text_fallback=args.text_fallback,
    )


def _header(config: RunConfig, command: str) -> str:
    return dumps_row(
        {
            "spotmatch_header": 1,
            "command": command,
            "fingerprint": config.fingerprint(),
            "config": config.to_dict(),
        }
    )


def _assign_image(pair, config: RunConfig, alphabet) -> dict:
    teacher, student = pair
    psa = PsaConfig(
        t_det=config.t_det,
        t_rec=config.t_rec,
        enable_cc=config.enable_cc,
        stage=config.stage,
        k_o2m=config.k_o2m,
        weights=config.weights,
        text_fallback=config.text_fallback,
    )
    labels, match = assign(teacher, student, psa, alphabet=alphabet)
    factors = compute_factors(
        labels,
        teacher,
        student,
        t_rec=config.t_rec,
        lambda_scale=config.lambda_scale,
        enable_cc=config.enable_cc,
        apply_mms=config.stage == "o2o",
    )
    cost_by_pair = {(p.student, p.teacher): p.cost for p in match.pairs}
    rows = []
    for pf in factors.factors:
        cost = cost_by_pair[(pf.student, pf.teacher)]
        rows.append(
            {
                "student": pf.student,
                "teacher": pf.teacher,
                "tier": pf.tier,
                "alpha": pf.alpha,
                "beta": pf.beta,
                "diou": pf.diou,
                "disparity": pf.disparity,
                "cost": {
                    "cls": cost.cls_cost,
                    "text": cost.text_cost,
                    "coord": cost.coord_cost,
                    "total": cost.total,
                },
            }
        )
    return {
        "image_id": teacher.image_id,
        "det_only": [list(p) for p in labels.det_only],
        "e2e": [list(p) for p in labels.e2e],
        "dropped": list(labels.dropped),
        "pairs": rows,
    }


def cmd_assign(args) -> int:
    config = _run_config(args)
    teachers = load_predictions(args.teacher)
    students = load_predictions(args.student)
    teacher_ids = [t.image_id for t in teachers]
    student_ids = [s.image_id for s in students]
    if teacher_ids != student_ids:
        raise IdMismatchError(
            f"image ids do not align: teacher {teacher_ids} vs student {student_ids}"
        )
    alphabet = config.load_alphabet()
    work = list(zip(teachers, students))
    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(lambda p: _assign_image(p, config, alphabet), work))
    else:
        rows = [_assign_image(p, config, alphabet) for p in work]
    out = Path(args.out)
    with out.open("w", encoding="utf-8") as handle:
        handle.write(_header(config, "assign") + "\n")
        for row in rows:
            handle.write(dumps_row(row) + "\n")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    preds = load_predictions(args.pred)
    gts = load_predictions(args.gt)
    lexicon = None
    if args.lexicon:
        lexicon = [
            line.strip()
            for line in Path(args.lexicon).read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]
    report = evaluate(preds, gts, lexicon=lexicon, iou_thresh=args.iou_thresh)
    payload = {
        "precision": report.precision,
        "recall": report.recall,
        "f1": report.f1,
        "e2e_hmean_none": report.e2e_hmean_none,
        "e2e_hmean_full": report.e2e_hmean_full,
        "per_image": [
            {"image_id": c.image_id, "tp": c.tp, "fp": c.fp, "fn": c.fn}
            for c in report.per_image
        ],
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(
        seed=args.seed,
        n_instances=args.instances,
        k_points=args.k_points,
        jitter_sigma=args.jitter,
        char_error_rate=args.char_error_rate,
        score_noise=args.score_noise,
    )
    scenes = synth_corpus(cfg, args.images)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    names = ("gt.jsonl", "teacher.jsonl", "student.jsonl")
    header = dumps_row(
        {
            "spotmatch_header": 1,
            "command": "synth",
            "config": {
                "seed": cfg.seed,
                "images": args.images,
                "n_instances": cfg.n_instances,
                "k_points": cfg.k_points,
                "jitter_sigma": cfg.jitter_sigma,
                "char_error_rate": cfg.char_error_rate,
                "score_noise": cfg.score_noise,
            },
        }
    )
    for which, name in enumerate(names):
        path = out_dir / name
        with path.open("w", encoding="utf-8") as handle:
            handle.write(header + "\n")
            for scene in scenes:
                handle.write(dumps_row(prediction_set_to_obj(scene[which])) + "\n")
    return EXIT_OK


def cmd_correlate(args) -> int:
    if args.pairs < 30:
        print("correlate needs at least 30 pairs", file=sys.stderr)
        return EXIT_PRECONDITION
    triples = deviation_similarity_pairs(args.seed, args.pairs)
    alignment = correlation_report([(d, s) for d, _, s in triples])
    deviation = correlation_report([(1.0 - d, s) for d, _, s in triples])
    iou_axis = correlation_report([(i, s) for _, i, s in triples])
    payload = {
        "n_pairs": len(triples),
        "pearson_r_diou": alignment.pearson_r,
        "pearson_r_iou": iou_axis.pearson_r,
        "pearson_r_deviation": deviation.pearson_r,
        "deviation_axis": "1 - diou",
        "bin_edges": list(deviation.bin_edges),
        "bin_means": list(deviation.bin_means),
        "bin_counts": list(deviation.bin_counts),
    }
    text = json.dumps(payload, sort_keys=True, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    if args.csv:
        lines = ["bin,deviation_lo,deviation_hi,mean_similarity,count"]
        for b in range(len(deviation.bin_means)):
            lines.append(
                f"{b},{deviation.bin_edges[b]},{deviation.bin_edges[b + 1]},"
                f"{deviation.bin_means[b]},{deviation.bin_counts[b]}"
            )
        Path(args.csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return EXIT_OK


def _add_config_flags(sub):
    sub.add_argument("--t-det", type=float, default=0.4, dest="t_det")
    sub.add_argument("--t-rec", type=float, default=0.7, dest="t_rec")
    sub.add_argument("--lambda-scale", type=float, default=20.0, dest="lambda_scale")
    sub.add_argument("--stage", choices=("o2m", "o2o"), default="o2o")
    sub.add_argument("--k", type=int, default=3)
    sub.add_argument("--weights", default="1.0,1.0,0.5")
    sub.add_argument("--no-cc", action="store_true", dest="no_cc")
    sub.add_argument("--reduction", choices=("sum", "mean"), default="sum")
    sub.add_argument("--alphabet", default=None)
    sub.add_argument("--text-fallback", action="store_true", dest="text_fallback")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spotmatch",
        description="Hierarchical pseudo-label assignment and loss modulation for text spotting",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_assign = subs.add_parser("assign", help="match teacher/student files, emit labels and factors")
    p_assign.add_argument("teacher")
    p_assign.add_argument("student")
    p_assign.add_argument("--out", required=True)
    _add_config_flags(p_assign)
    p_assign.set_defaults(func=cmd_assign)

    p_eval = subs.add_parser("evaluate", help="detection P/R/F1 and end-to-end H-mean")
    p_eval.add_argument("pred")
    p_eval.add_argument("gt")
    p_eval.add_argument("--lexicon", default=None)
    p_eval.add_argument("--iou-thresh", type=float, default=0.5, dest="iou_thresh")
    p_eval.add_argument("--out", default=None)
    p_eval.set_defaults(func=cmd_evaluate)

    p_synth = subs.add_parser("synth", help="generate a synthetic gt/teacher/student corpus")
    p_synth.add_argument("--seed", type=int, required=True)
    p_synth.add_argument("--images", type=int, default=1)
    p_synth.add_argument("--instances", type=int, default=8)
    p_synth.add_argument("--k-points", type=int, default=5, dest="k_points")
    p_synth.add_argument("--jitter", type=float, default=0.0)
    p_synth.add_argument("--char-error-rate", type=float, default=0.0, dest="char_error_rate")
    p_synth.add_argument("--score-noise", type=float, default=0.0, dest="score_noise")
    p_synth.add_argument("--out-dir", required=True, dest="out_dir")
    p_synth.set_defaults(func=cmd_synth)

    p_corr = subs.add_parser("correlate", help="deviation/similarity correlation report")
    p_corr.add_argument("--seed", type=int, default=0)
    p_corr.add_argument("--pairs", type=int, default=10000)
    p_corr.add_argument("--out", default=None)
    p_corr.add_argument("--csv", default=None)
    p_corr.set_defaults(func=cmd_correlate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SchemaError, MatchingError, AssignmentError, GeometryError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_SCHEMA
    except IdMismatchError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ID_MISMATCH
    except HarnessError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_ID_MISMATCH


if __name__ == "__main__":
    sys.exit(main())
