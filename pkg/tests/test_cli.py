import json

import numpy as np
import pytest

import cli
from models.imageModel import GrayImage, RgbImage
from services import bench, gaborbank, imgcore, phantoms


@pytest.fixture
def model_path(tmp_path):
    blocks = tmp_path / "blocks"
    blocks.mkdir()
    rows = []
    for name, value, label in [("a.pgm", 10, "face"), ("b.pgm", 200, "nonface"), ("c.pgm", 120, "nonface")]:
        imgcore.save_pnm(GrayImage(np.full((60, 60), float(value))), blocks / name)
        rows.append(f"{name},{label}\n")
    manifest = blocks / "manifest.txt"
    manifest.write_text("".join(rows))
    out = tmp_path / "model.knn"
    assert cli.run(["train-knn", str(manifest), "--out", str(out)]) == 0
    return str(out)


def blank_frame(tmp_path, side=80, name="blank.pgm"):
    path = tmp_path / name
    imgcore.save_pnm(GrayImage(np.full((side, side), 128.0)), path)
    return str(path)


def test_train_knn_reports_samples(tmp_path, capsys, model_path):
    assert "3 samples written" in capsys.readouterr().out
    assert open(model_path).readline().strip() == "KNN3 60 60 3"


def test_demod_is_reproducible(tmp_path, rng):
    src = tmp_path / "in.pgm"
    imgcore.save_pnm(GrayImage(rng.random((80, 80)) * 255), src)
    first, second = tmp_path / "fm1.pgm", tmp_path / "fm2.pgm"
    am = tmp_path / "am.pgm"
    assert cli.run(["demod", str(src), "--out-fm", str(first), "--out-am", str(am)]) == 0
    assert cli.run(["--threads", "3", "demod", str(src), "--out-fm", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert imgcore.load_pnm(am).pixels.shape == (80, 80)


def test_demod_scale_group_and_channel_dump(tmp_path, rng):
    src = tmp_path / "in.pgm"
    imgcore.save_pnm(GrayImage(rng.random((40, 40)) * 255), src)
    dump = tmp_path / "channels"
    assert cli.run(["demod", str(src), "--scale", "3", "--dump-channels", str(dump)]) == 0
    assert len(list(dump.iterdir())) == 4


def test_demod_needs_an_output(tmp_path):
    assert cli.run(["demod", blank_frame(tmp_path)]) == 1


def test_demod_unknown_scale_group_is_a_usage_error(tmp_path):
    assert cli.run(["demod", blank_frame(tmp_path), "--scale", "7", "--out-fm", str(tmp_path / "fm.pgm")]) == 1


def test_duplicate_filter_override_is_a_usage_error(tmp_path, capsys):
    params = tmp_path / "bank.txt"
    params.write_text("0.25 30 3 0.5 0\n0.25 30 2 0.5 1\n")
    args = ["--filter-params", str(params), "demod", blank_frame(tmp_path), "--out-fm", str(tmp_path / "fm.pgm")]
    assert cli.run(args) == 1
    assert "Duplicate" in capsys.readouterr().err


def test_unexpected_value_error_exits_with_one(tmp_path, monkeypatch, capsys):
    def broken(path=None):
        raise ValueError("broken table")

    monkeypatch.setattr(gaborbank, "build_filterbank", broken)
    assert cli.run(["demod", blank_frame(tmp_path), "--out-fm", str(tmp_path / "fm.pgm")]) == 1
    assert "broken table" in capsys.readouterr().err


def test_missing_input_is_an_io_error(tmp_path):
    assert cli.run(["demod", str(tmp_path / "nope.pgm"), "--out-fm", str(tmp_path / "fm.pgm")]) == 2


def test_bad_option_value_is_a_usage_error(tmp_path):
    assert cli.run(["--knn-k", "4", "demod", blank_frame(tmp_path), "--out-fm", str(tmp_path / "fm.pgm")]) == 1
    assert cli.run(["no-such-command"]) == 1


def test_detect_blank_frame(tmp_path, capsys, model_path):
    capsys.readouterr()
    assert cli.run(["detect", blank_frame(tmp_path), "--model", model_path]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["frame"] == "blank.pgm"
    assert report["detections"] == []
    assert "timings" not in report


def test_detect_without_model(tmp_path):
    assert cli.run(["detect", blank_frame(tmp_path), "--model", str(tmp_path / "none.knn")]) == 3


def test_detect_model_block_size_mismatch(tmp_path, model_path):
    assert cli.run(["--block-size", "40", "detect", blank_frame(tmp_path), "--model", model_path]) == 3


def test_detect_every_frame_rejected(tmp_path, model_path):
    assert cli.run(["detect", blank_frame(tmp_path, side=40), "--model", model_path]) == 4


def test_detect_thread_count_does_not_change_output(tmp_path, rng, model_path):
    frames = tmp_path / "frames"
    frames.mkdir()
    for n in range(10):
        rgb = rng.integers(0, 256, size=(216, 216, 3)).astype(np.uint8)
        rgb[30 + n:130 + n, 40:140] = phantoms.BLACK_RGB
        rgb[140:190, 100 + 3 * n:150 + 3 * n] = phantoms.SKIN_RGB
        imgcore.save_pnm(RgbImage(rgb), frames / f"f{n:02d}.ppm")
    one, many = tmp_path / "one.jsonl", tmp_path / "many.jsonl"
    overlays = tmp_path / "overlays"
    assert cli.run(["--threads", "1", "detect", str(frames), "--model", model_path,
                    "--json", str(one), "--overlay-dir", str(overlays)]) == 0
    assert cli.run(["--threads", "8", "detect", str(frames), "--model", model_path, "--json", str(many)]) == 0
    assert one.read_bytes() == many.read_bytes()
    lines = one.read_text().splitlines()
    assert [json.loads(line)["frame"] for line in lines] == [f"f{n:02d}.ppm" for n in range(10)]
    assert sorted(p.name for p in overlays.iterdir()) == [f"f{n:02d}.ppm" for n in range(10)]
    for line in lines:
        report = json.loads(line)
        stages = [d["kind"] for d in report["detections"]] + [a["stage"] for a in report["abstentions"]]
        # frames are large enough for the head stage to run
        assert "back_of_head" in stages
        assert not any("head window" in a["reason"] for a in report["abstentions"])


def test_detect_report_into_missing_directory_is_an_io_error(tmp_path, model_path):
    out = tmp_path / "missing" / "o.json"
    assert cli.run(["detect", blank_frame(tmp_path), "--model", model_path, "--json", str(out)]) == 2
    assert not out.exists()


def test_detect_overlay_dir_that_cannot_be_created(tmp_path, model_path):
    blocker = tmp_path / "file.txt"
    blocker.write_text("")
    overlays = blocker / "overlays"
    assert cli.run(["detect", blank_frame(tmp_path), "--model", model_path, "--overlay-dir", str(overlays)]) == 2


def test_detect_accepts_the_tree_alias(tmp_path, capsys, model_path):
    capsys.readouterr()
    assert cli.run(["--classifier", "fig412", "detect", blank_frame(tmp_path), "--model", model_path]) == 0
    assert json.loads(capsys.readouterr().out)["frame"] == "blank.pgm"
    assert cli.run(["--classifier", "oak", "detect", blank_frame(tmp_path), "--model", model_path]) == 1


def test_filterbank_listing(tmp_path, capsys):
    out = tmp_path / "tiling.pgm"
    assert cli.run(["filterbank", "--out-response", str(out), "--size", "32"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len([line for line in lines if line.startswith("group ")]) == 36
    assert len(lines) == 1 + 54 + 36
    assert imgcore.load_pnm(out).pixels.shape == (32, 32)


def test_evaluate(tmp_path, capsys):
    imgcore.save_pnm(phantoms.face_block(), tmp_path / "l.pgm")
    imgcore.save_pnm(phantoms.face_block(mirror=True), tmp_path / "r.pgm")
    manifest = tmp_path / "truth.txt"
    manifest.write_text("l.pgm,left\nr.pgm,right\n")
    assert cli.run(["evaluate", str(manifest)]) == 0
    out = capsys.readouterr().out
    assert "left: 1/1 (100.0%)" in out
    assert "right: 1/1 (100.0%)" in out
    assert "abstained: 0" in out


def test_evaluate_bad_row(tmp_path):
    manifest = tmp_path / "truth.txt"
    manifest.write_text("l.pgm,up\n")
    assert cli.run(["evaluate", str(manifest)]) == 1


def test_evaluate_heads(tmp_path, capsys):
    imgcore.save_pnm(phantoms.head_frame(), tmp_path / "r.ppm")
    imgcore.save_pnm(phantoms.head_frame(mirror=True), tmp_path / "l.ppm")
    imgcore.save_pnm(phantoms.head_frame(with_skin=False), tmp_path / "plain.ppm")
    manifest = tmp_path / "heads.txt"
    manifest.write_text("# away direction\nr.ppm,right\nl.ppm,left\nplain.ppm,left\n")
    assert cli.run(["evaluate-heads", str(manifest)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[:2] == ["r.ppm: right -> right", "l.ppm: left -> left"]
    assert lines[2].startswith("plain.ppm: left -> none (no skin region")
    assert lines[3:] == ["left: 1/1 (100.0%)", "right: 1/1 (100.0%)", "abstained: 1"]


def test_evaluate_heads_missing_frame_is_an_io_error(tmp_path):
    manifest = tmp_path / "heads.txt"
    manifest.write_text("gone.ppm,left\n")
    assert cli.run(["evaluate-heads", str(manifest)]) == 2


def fake_results(passed):
    return [
        {"name": "one", "measured": "1", "tolerance": "< 2", "passed": True, "seconds": 0.1},
        {"name": "two", "measured": "3", "tolerance": "< 2", "passed": passed, "seconds": 0.2},
    ]


@pytest.mark.parametrize("passed, code", [(True, 0), (False, 1)])
def test_bench_output(monkeypatch, capsys, passed, code):
    monkeypatch.setattr(bench, "run_all", lambda cfg: fake_results(passed))
    assert cli.run(["bench"]) == code
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("PASS one")
    assert lines[1].startswith("PASS two" if passed else "FAIL two")
