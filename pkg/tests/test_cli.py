import numpy as np
import pytest

from segfuse import (
    BinaryMask,
    IntensityMap,
    ScoreMap,
    Volume,
    read_sgm,
    write_sgm,
)
from segfuse.cli import main


def write_scalar_scores(tmp_path, values):
    paths = []
    for k, v in enumerate(values, start=1):
        p = tmp_path / f"m{k}.sgm"
        write_sgm(Volume([ScoreMap(np.float32([[v]]))]), p)
        paths.append(str(p))
    return paths


def write_scalar_mask(tmp_path, name, value):
    p = tmp_path / name
    write_sgm(Volume([BinaryMask([[value]])]), p)
    return str(p)


class TestFuse:
    def test_msm_on_reference_scores(self, tmp_path):
        inputs = write_scalar_scores(tmp_path, (0.6, 0.7, 0.1))
        out = tmp_path / "fused.sgm"
        assert main(["fuse", "--method", "msm", "--inputs", *inputs, "--output", str(out)]) == 0
        assert read_sgm(out)[0] == BinaryMask([[0]])

    def test_mbm_on_reference_scores(self, tmp_path):
        inputs = write_scalar_scores(tmp_path, (0.6, 0.7, 0.1))
        out = tmp_path / "fused.sgm"
        assert main(["fuse", "--method", "mbm", "--inputs", *inputs, "--output", str(out)]) == 0
        assert read_sgm(out)[0] == BinaryMask([[1]])

    def test_shape_mismatch_names_both_files(self, tmp_path, capsys):
        a = tmp_path / "a.sgm"
        write_sgm(Volume([ScoreMap(np.float32([[0.5]]))]), a)
        b = tmp_path / "b.sgm"
        write_sgm(Volume([ScoreMap(np.float32([[0.5, 0.5]]))]), b)
        code = main(["fuse", "--method", "msm", "--inputs", str(a), str(b),
                     "--output", str(tmp_path / "o.sgm")])
        assert code == 1
        err = capsys.readouterr().err
        assert "a.sgm" in err and "b.sgm" in err
        assert not (tmp_path / "o.sgm").exists()

    def test_bad_threshold_is_a_usage_error(self, tmp_path):
        inputs = write_scalar_scores(tmp_path, (0.5,))
        with pytest.raises(SystemExit) as exc:
            main(["fuse", "--method", "msm", "--threshold", "1.5",
                  "--inputs", *inputs, "--output", str(tmp_path / "o.sgm")])
        assert exc.value.code == 2


class TestDsc:
    def test_prints_four_decimals(self, tmp_path, capsys):
        gt = tmp_path / "gt.sgm"
        write_sgm(Volume([BinaryMask([[1, 0, 0, 0]] * 4)]), gt)
        seg = tmp_path / "seg.sgm"
        write_sgm(Volume([BinaryMask([[1, 1, 0, 0]] * 3 + [[0, 0, 0, 0]])]), seg)
        assert main(["dsc", str(gt), str(seg)]) == 0
        assert capsys.readouterr().out == "0.6000\n"

    def test_missing_file_is_a_runtime_error(self, tmp_path, capsys):
        gt = write_scalar_mask(tmp_path, "gt.sgm", 1)
        assert main(["dsc", gt, str(tmp_path / "nope.sgm")]) == 1
        assert "error:" in capsys.readouterr().err


def build_reference_subject(tmp_path):
    """One single-pixel subject: GT=1, model scores 0.6 / 0.7 / 0.1."""
    gt = write_scalar_mask(tmp_path, "gt.sgm", 1)
    models = write_scalar_scores(tmp_path, (0.6, 0.7, 0.1))
    manifest = tmp_path / "manifest.tsv"
    manifest.write_text(f"s1\tgt.sgm\t{';'.join(p.split('/')[-1] for p in models)}\n")
    return manifest


class TestEval:
    def test_reference_subject_report(self, tmp_path, capsys):
        manifest = build_reference_subject(tmp_path)
        out_csv = tmp_path / "report.csv"
        assert main(["eval", "--manifest", str(manifest), "--out-csv", str(out_csv)]) == 0
        lines = out_csv.read_text().splitlines()
        assert lines[0] == "subject,method,dsc"
        assert lines[1:6] == [
            "s1,model1,1.0000",
            "s1,model2,1.0000",
            "s1,model3,0.0000",
            "s1,msm,0.0000",
            "s1,mbm,1.0000",
        ]
        assert "mean,mbm,1.0000" in lines

    def test_empty_manifest_exits_one(self, tmp_path, capsys):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("# nothing here\n")
        assert main(["eval", "--manifest", str(manifest), "--out-csv", str(tmp_path / "r.csv")]) == 1
        assert "no subjects" in capsys.readouterr().err

    def test_parallel_output_is_byte_identical(self, tmp_path):
        assert main(["simulate", "--subjects", "4", "--models", "good,good,bad",
                     "--size", "48", "--seed", "9", "--out", str(tmp_path / "cohort"),
                     "--radius-range", "2,6"]) == 0
        manifest = str(tmp_path / "cohort" / "manifest.tsv")
        for jobs in ("1", "3"):
            assert main(["eval", "--manifest", manifest, "--jobs", jobs,
                         "--out-csv", str(tmp_path / f"r{jobs}.csv")]) == 0
        assert (tmp_path / "r1.csv").read_bytes() == (tmp_path / "r3.csv").read_bytes()

    def test_failure_names_offending_subject(self, tmp_path, capsys):
        manifest = tmp_path / "m.tsv"
        manifest.write_text("s7\tmissing_gt.sgm\tmissing_model.sgm\n")
        assert main(["eval", "--manifest", str(manifest), "--out-csv", str(tmp_path / "r.csv")]) == 1
        assert "s7" in capsys.readouterr().err


class TestStats:
    def test_plain_column(self, tmp_path, capsys):
        csv_path = tmp_path / "vals.csv"
        csv_path.write_text("run,dsc\na,1\nb,2\nc,3\nd,4\n")
        assert main(["stats", "--csv", str(csv_path)]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out == [
            "mean,2.5000",
            "max,4.0000",
            "q75,3.2500",
            "median,2.5000",
            "q25,1.7500",
            "min,1.0000",
        ]

    def test_method_filter_recomputes_report_stats(self, tmp_path, capsys):
        manifest = build_reference_subject(tmp_path)
        out_csv = tmp_path / "report.csv"
        main(["eval", "--manifest", str(manifest), "--out-csv", str(out_csv)])
        assert main(["stats", "--csv", str(out_csv), "--method", "mbm"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "mean,1.0000"  # single subject, mbm DSC 1
        assert len(out) == 6

    def test_non_numeric_value_is_an_error(self, tmp_path, capsys):
        csv_path = tmp_path / "vals.csv"
        csv_path.write_text("run,dsc\na,oops\n")
        assert main(["stats", "--csv", str(csv_path)]) == 1
        assert "line 2" in capsys.readouterr().err

    def test_missing_column(self, tmp_path, capsys):
        csv_path = tmp_path / "vals.csv"
        csv_path.write_text("run,score\na,1\n")
        assert main(["stats", "--csv", str(csv_path)]) == 1
        assert "dsc" in capsys.readouterr().err


class TestOverlay:
    def make_inputs(self, tmp_path, size=8):
        rng = np.random.default_rng(0)
        bg = tmp_path / "bg.sgm"
        write_sgm(Volume([IntensityMap(rng.uniform(size=(size, size)))]), bg)
        gt_arr = np.zeros((size, size), np.uint8)
        gt_arr[2:5, 2:5] = 1
        gt = tmp_path / "gt.sgm"
        write_sgm(Volume([BinaryMask(gt_arr)]), gt)
        seg_arr = np.zeros((size, size), np.uint8)
        seg_arr[3:6, 3:6] = 1
        seg = tmp_path / "seg.sgm"
        write_sgm(Volume([BinaryMask(seg_arr)]), seg)
        return str(bg), str(gt), str(seg)

    def test_writes_ppm(self, tmp_path):
        bg, gt, seg = self.make_inputs(tmp_path)
        out = tmp_path / "o.ppm"
        assert main(["overlay", "--background", bg, "--gt", gt, "--seg", seg,
                     "--out", str(out)]) == 0
        blob = out.read_bytes()
        assert blob.startswith(b"P6\n8 8\n255\n")
        assert len(blob) == len(b"P6\n8 8\n255\n") + 8 * 8 * 3

    def test_zoom_flag_pastes_inset(self, tmp_path):
        bg, gt, seg = self.make_inputs(tmp_path)
        plain = tmp_path / "plain.ppm"
        zoomed = tmp_path / "zoomed.ppm"
        main(["overlay", "--background", bg, "--gt", gt, "--seg", seg, "--out", str(plain)])
        assert main(["overlay", "--background", bg, "--gt", gt, "--seg", seg,
                     "--zoom", "2,2,2,2", "--factor", "2", "--out", str(zoomed)]) == 0
        assert plain.read_bytes() != zoomed.read_bytes()

    def test_zoom_out_of_bounds_exits_one(self, tmp_path, capsys):
        bg, gt, seg = self.make_inputs(tmp_path)
        code = main(["overlay", "--background", bg, "--gt", gt, "--seg", seg,
                     "--zoom", "7,7,4,4", "--out", str(tmp_path / "o.ppm")])
        assert code == 1
        assert "out of bounds" in capsys.readouterr().err

    def test_bad_slice_index(self, tmp_path, capsys):
        bg, gt, seg = self.make_inputs(tmp_path)
        code = main(["overlay", "--background", bg, "--gt", gt, "--seg", seg,
                     "--slice", "5", "--out", str(tmp_path / "o.ppm")])
        assert code == 1
        assert "slice" in capsys.readouterr().err


class TestPreprocess:
    def make_volume(self, tmp_path, arr):
        p = tmp_path / "in.sgm"
        write_sgm(Volume([IntensityMap(np.float32(arr))]), p)
        return str(p)

    def test_noop_pipeline_is_byte_identical(self, tmp_path):
        src = self.make_volume(tmp_path, np.arange(16.0).reshape(4, 4))
        out = tmp_path / "out.sgm"
        assert main(["preprocess", "--input", src, "--output", str(out),
                     "--normalize", "none"]) == 0
        assert out.read_bytes() == (tmp_path / "in.sgm").read_bytes()

    def test_crop_pad_and_normalize(self, tmp_path):
        src = self.make_volume(tmp_path, np.arange(16.0).reshape(4, 4))
        out = tmp_path / "out.sgm"
        assert main(["preprocess", "--input", src, "--output", str(out),
                     "--width", "6", "--height", "6"]) == 0
        vol = read_sgm(out, kind="intensity")
        assert (vol.width, vol.height) == (6, 6)
        assert abs(vol[0].data.mean()) < 1e-6  # the padded slice is z-scored
        assert abs(vol[0].data.std() - 1.0) < 1e-6
        assert vol[0].data[0, 0] == vol[0].data[5, 5]  # fill corners share one value

    def test_label_follows_the_image(self, tmp_path):
        src = self.make_volume(tmp_path, np.arange(16.0).reshape(4, 4))
        label_arr = np.zeros((4, 4), np.uint8)
        label_arr[1:3, 1:3] = 1
        label = tmp_path / "label.sgm"
        write_sgm(Volume([BinaryMask(label_arr)]), label)
        out, label_out = tmp_path / "out.sgm", tmp_path / "label_out.sgm"
        assert main(["preprocess", "--input", src, "--output", str(out),
                     "--label", str(label), "--label-output", str(label_out),
                     "--rotation", "45", "--scale-x", "1.3"]) == 0
        warped = read_sgm(label_out)
        assert warped.kind == "mask"
        assert set(np.unique(warped[0].data)) <= {0, 1}

    def test_label_without_output_path(self, tmp_path, capsys):
        src = self.make_volume(tmp_path, np.zeros((2, 2)))
        label = write_scalar_mask(tmp_path, "l.sgm", 1)
        code = main(["preprocess", "--input", src, "--output", str(tmp_path / "o.sgm"),
                     "--label", label])
        assert code == 1
        assert "--label-output" in capsys.readouterr().err


class TestSimulate:
    def test_single_subject_outputs(self, tmp_path):
        out = tmp_path / "cohort"
        assert main(["simulate", "--subjects", "1", "--models", "good",
                     "--size", "32", "--seed", "4", "--out", str(out),
                     "--radius-range", "2,5"]) == 0
        files = sorted(p.relative_to(out).as_posix() for p in out.rglob("*") if p.is_file())
        assert files == ["manifest.tsv", "s01/gt.sgm", "s01/model_1.sgm"]

    def test_repeat_runs_are_identical(self, tmp_path):
        args = ["simulate", "--subjects", "2", "--models", "good,bad", "--size", "32",
                "--seed", "6", "--radius-range", "2,5"]
        assert main(args + ["--out", str(tmp_path / "a")]) == 0
        assert main(args + ["--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a" / "manifest.tsv").read_text() == (
            tmp_path / "b" / "manifest.tsv"
        ).read_text()

    def test_parallel_generation_matches_sequential(self, tmp_path):
        args = ["simulate", "--subjects", "3", "--models", "good,good", "--size", "32",
                "--seed", "2", "--radius-range", "2,5"]
        assert main(args + ["--out", str(tmp_path / "seq"), "--jobs", "1"]) == 0
        assert main(args + ["--out", str(tmp_path / "par"), "--jobs", "3"]) == 0
        for rel in ("manifest.tsv", "s02/gt.sgm", "s03/model_2.sgm"):
            assert (tmp_path / "seq" / rel).read_bytes() == (tmp_path / "par" / rel).read_bytes()

    def test_empty_model_list_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--subjects", "1", "--models", "", "--out", str(tmp_path / "c")])
        assert exc.value.code == 2

    def test_unknown_preset_is_a_usage_error(self, tmp_path):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--subjects", "1", "--models", "mediocre",
                  "--out", str(tmp_path / "c")])
        assert exc.value.code == 2


def test_unknown_flag_is_a_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["dsc", "--frobnicate"])
    assert exc.value.code == 2
