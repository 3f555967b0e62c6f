import json
import os

import numpy as np
import pytest

from spotmatch.cli import main
from spotmatch.fileio import RunConfig, SchemaError, load_predictions, write_predictions
from spotmatch.textmetrics import text_disparity
from conftest import FIXTURES

TEACHER = str(FIXTURES / "teacher.jsonl")
STUDENT = str(FIXTURES / "student.jsonl")
GT = str(FIXTURES / "gt.jsonl")
GOLDEN = FIXTURES / "golden_assign.jsonl"
LEXICON = str(FIXTURES / "lexicon.txt")


class TestAssignCommand:
    def test_matches_golden_bytes(self, tmp_path):
        out = tmp_path / "out.jsonl"
        assert main(["assign", TEACHER, STUDENT, "--out", str(out)]) == 0
        assert out.read_bytes() == GOLDEN.read_bytes()

    def test_deterministic_across_runs(self, tmp_path):
        first = tmp_path / "a.jsonl"
        second = tmp_path / "b.jsonl"
        main(["assign", TEACHER, STUDENT, "--out", str(first)])
        main(["assign", TEACHER, STUDENT, "--out", str(second)])
        assert first.read_bytes() == second.read_bytes()

    def test_parallel_matches_sequential(self, tmp_path):
        par = tmp_path / "par.jsonl"
        os.environ["SPOTMATCH_THREADS"] = "4"
        try:
            main(["assign", TEACHER, STUDENT, "--out", str(par)])
        finally:
            del os.environ["SPOTMATCH_THREADS"]
        assert par.read_bytes() == GOLDEN.read_bytes()

    def test_empty_instances_everywhere(self, tmp_path):
        empty = tmp_path / "empty.jsonl"
        empty.write_text(
            json.dumps({"image_id": "a", "width": 10, "height": 10, "instances": []}) + "\n"
        )
        out = tmp_path / "out.jsonl"
        assert main(["assign", str(empty), str(empty), "--out", str(out)]) == 0
        rows = [json.loads(l) for l in out.read_text().splitlines()]
        assert rows[1] == {"image_id": "a", "det_only": [], "e2e": [], "dropped": [], "pairs": []}

    def test_corrupt_line_exits_2_and_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(
            json.dumps({"image_id": "a", "width": 10, "height": 10, "instances": []})
            + "\n{not json\n"
        )
        code = main(["assign", str(bad), str(bad), "--out", str(tmp_path / "o.jsonl")])
        assert code == 2
        err = capsys.readouterr().err
        assert "bad.jsonl:2" in err

    def test_schema_violation_names_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text(json.dumps({"image_id": "a", "width": 10, "instances": []}) + "\n")
        code = main(["assign", str(bad), str(bad), "--out", str(tmp_path / "o.jsonl")])
        assert code == 2
        assert "bad.jsonl:1" in capsys.readouterr().err

    def test_id_mismatch_exits_3(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        a.write_text(json.dumps({"image_id": "x", "width": 10, "height": 10, "instances": []}) + "\n")
        b.write_text(json.dumps({"image_id": "y", "width": 10, "height": 10, "instances": []}) + "\n")
        assert main(["assign", str(a), str(b), "--out", str(tmp_path / "o.jsonl")]) == 3

    def test_header_carries_fingerprint(self, tmp_path):
        out = tmp_path / "out.jsonl"
        main(["assign", TEACHER, STUDENT, "--out", str(out)])
        header = json.loads(out.read_text().splitlines()[0])
        assert header["spotmatch_header"] == 1
        assert header["fingerprint"] == RunConfig().fingerprint()

    def test_alphabet_width_mismatch_exits_2(self, tmp_path, capsys):
        tiny = tmp_path / "alphabet.txt"
        tiny.write_text("a\nb\nc\n")
        code = main(["assign", TEACHER, STUDENT, "--alphabet", str(tiny), "--out", str(tmp_path / "o.jsonl")])
        assert code == 2
        assert "width" in capsys.readouterr().err


class TestEvaluateCommand:
    def test_perfect_predictions(self, tmp_path, capsys):
        assert main(["evaluate", GT, GT]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["precision"] == payload["recall"] == payload["f1"] == 1.0
        assert payload["e2e_hmean_none"] == 1.0
        assert payload["e2e_hmean_full"] is None

    def test_lexicon_improves_teacher_predictions(self, tmp_path):
        out = tmp_path / "report.json"
        assert main(["evaluate", TEACHER, GT, "--lexicon", LEXICON, "--out", str(out)]) == 0
        payload = json.loads(out.read_text())
        assert payload["e2e_hmean_none"] <= payload["e2e_hmean_full"] <= payload["f1"]
        assert payload["e2e_hmean_none"] < payload["e2e_hmean_full"]

    def test_misaligned_ids_exit_3(self, tmp_path):
        other = tmp_path / "other.jsonl"
        other.write_text(json.dumps({"image_id": "zz", "width": 5, "height": 5, "instances": []}) + "\n")
        assert main(["evaluate", str(other), GT]) == 3


class TestSynthCommand:
    def test_seed_determinism(self, tmp_path):
        d1 = tmp_path / "one"
        d2 = tmp_path / "two"
        args = ["synth", "--seed", "42", "--images", "2", "--instances", "5", "--jitter", "0.01", "--char-error-rate", "0.2"]
        assert main(args + ["--out-dir", str(d1)]) == 0
        assert main(args + ["--out-dir", str(d2)]) == 0
        for name in ("gt.jsonl", "teacher.jsonl", "student.jsonl"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_files_load_back(self, tmp_path):
        d = tmp_path / "out"
        main(["synth", "--seed", "7", "--images", "1", "--instances", "4", "--out-dir", str(d)])
        sets = load_predictions(d / "teacher.jsonl")
        assert len(sets) == 1
        assert len(sets[0].instances) == 4

    def test_graded_jitter_decreases_similarity(self, tmp_path):
        means = []
        for level, jitter in enumerate((0.004, 0.02, 0.05)):
            d = tmp_path / f"level{level}"
            main([
                "synth", "--seed", "11", "--images", "4", "--instances", "8",
                "--jitter", str(jitter), "--char-error-rate", "0.25", "--out-dir", str(d),
            ])
            teachers = load_predictions(d / "teacher.jsonl")
            students = load_predictions(d / "student.jsonl")
            sims = [
                1.0 - text_disparity(t.transcription, s.transcription)
                for t_set, s_set in zip(teachers, students)
                for t, s in zip(t_set.instances, s_set.instances)
            ]
            means.append(float(np.mean(sims)))
        assert means[0] > means[1] > means[2]


class TestCorrelateCommand:
    def test_too_few_pairs_exit_4(self):
        assert main(["correlate", "--pairs", "29"]) == 4

    def test_report_and_csv(self, tmp_path):
        out = tmp_path / "report.json"
        csv = tmp_path / "curve.csv"
        assert main(["correlate", "--seed", "3", "--pairs", "600", "--out", str(out), "--csv", str(csv)]) == 0
        payload = json.loads(out.read_text())
        assert payload["n_pairs"] == 600
        assert payload["pearson_r_diou"] > 0.4
        lines = csv.read_text().splitlines()
        assert lines[0].startswith("bin,")
        assert len(lines) == 11


class TestRoundTrip:
    def test_write_then_load_is_lossless(self, tmp_path):
        sets = load_predictions(STUDENT)
        path = tmp_path / "roundtrip.jsonl"
        write_predictions(path, sets)
        again = load_predictions(path)
        assert len(again) == len(sets)
        for a, b in zip(sets, again):
            assert a.image_id == b.image_id
            for ia, ib in zip(a.instances, b.instances):
                assert ia.transcription == ib.transcription
                assert ia.score == ib.score
                pa = np.array(ia.polygon.points)
                pb = np.array(ib.polygon.points)
                assert np.max(np.abs(pa - pb)) < 1e-9

    def test_loader_rejects_bad_score(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        row = {
            "image_id": "a",
            "width": 10,
            "height": 10,
            "instances": [
                {
                    "polygon": [[0, 0], [5, 0], [5, 5], [0, 5]],
                    "score": 1.7,
                    "transcription": "hi",
                    "char_conf": [0.9, 0.9],
                }
            ],
        }
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(SchemaError, match="score"):
            load_predictions(path)

    def test_loader_rejects_odd_polygon(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        row = {
            "image_id": "a",
            "width": 10,
            "height": 10,
            "instances": [
                {
                    "polygon": [[0, 0], [5, 0], [5, 5]],
                    "score": 0.5,
                    "transcription": "hi",
                    "char_conf": [0.9, 0.9],
                }
            ],
        }
        path.write_text(json.dumps(row) + "\n")
        with pytest.raises(SchemaError, match="even"):
            load_predictions(path)
