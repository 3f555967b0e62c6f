"""Regenerate the fixture corpus and the reviewed golden assign output.

Run from the repository root:  python3 fixtures/generate.py
The golden file is frozen in tests; regenerate only when the wire format
changes intentionally, and re-review the diff by hand.
"""

from pathlib import Path

from spotmatch import PredictionSet, SynthConfig, TextInstance, synth_scene
from spotmatch.cli import main
from spotmatch.fileio import write_predictions

ROOT = Path(__file__).parent


def tweak(instance: TextInstance, **kwargs) -> TextInstance:
    fields = {
        "polygon": instance.polygon,
        "score": instance.score,
        "transcription": instance.transcription,
        "char_conf": instance.char_conf,
        "char_dists": instance.char_dists,
    }
    fields.update(kwargs)
    return TextInstance(**fields)


def build_corpus():
    teachers = []
    students = []
    gts = []

    # image 1: moderate noise, one teacher forced under the detection
    # threshold and one with void text so both filter branches show up
    cfg = SynthConfig(seed=1001, n_instances=5, k_points=4, jitter_sigma=0.012, char_error_rate=0.25, score_noise=0.25)
    gt, teacher, student = synth_scene(cfg, image_id="img-001")
    t_insts = list(teacher.instances)
    t_insts[1] = tweak(t_insts[1], score=0.1)
    t_insts[3] = tweak(t_insts[3], transcription="", char_conf=(), char_dists=None)
    teacher = PredictionSet(teacher.image_id, teacher.width, teacher.height, tuple(t_insts))
    gts.append(gt)
    teachers.append(teacher)
    students.append(student)

    # image 2: nothing predicted anywhere
    empty = PredictionSet("img-002", 800, 600, ())
    gts.append(empty)
    teachers.append(empty)
    students.append(empty)

    # image 3: heavier noise
    cfg = SynthConfig(seed=1003, n_instances=4, k_points=5, jitter_sigma=0.03, char_error_rate=0.45, score_noise=0.3)
    gt, teacher, student = synth_scene(cfg, image_id="img-003")
    gts.append(gt)
    teachers.append(teacher)
    students.append(student)

    # image 4: light noise so confident teachers promote pairs to the
    # end-to-end tier and disparities drive beta above 1
    cfg = SynthConfig(seed=1004, n_instances=6, k_points=4, jitter_sigma=0.01, char_error_rate=0.15, score_noise=0.08)
    gt, teacher, student = synth_scene(cfg, image_id="img-004")
    gts.append(gt)
    teachers.append(teacher)
    students.append(student)
    return gts, teachers, students


def main_():
    gts, teachers, students = build_corpus()
    write_predictions(ROOT / "gt.jsonl", gts, include_dists=False)
    write_predictions(ROOT / "teacher.jsonl", teachers, include_dists=False)
    write_predictions(ROOT / "student.jsonl", students, include_dists=True)
    words = sorted(
        {inst.transcription for gt in gts for inst in gt.instances}
        | {"NEVER", "USED", "WORDS"}
    )
    (ROOT / "lexicon.txt").write_text("\n".join(words) + "\n", encoding="utf-8")
    code = main(
        [
            "assign",
            str(ROOT / "teacher.jsonl"),
            str(ROOT / "student.jsonl"),
            "--out",
            str(ROOT / "golden_assign.jsonl"),
        ]
    )
    assert code == 0, code


if __name__ == "__main__":
    main_()
