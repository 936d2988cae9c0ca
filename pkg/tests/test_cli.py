import csv
import io
import json

import pytest

from fraclab.cli import EXIT_DIVERGENT, EXIT_HYPOTHESIS, EXIT_INVALID, EXIT_OK, main, resolve_config, build_parser


def run(argv, environ=None):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, stdout=out, stderr=err, environ=environ or {})
    return code, out.getvalue(), err.getvalue()


def run_json(argv, environ=None):
    code, out, err = run(argv, environ)
    return code, (json.loads(out) if out else None), err


BASE = ["--n", "1", "--m", "2", "--gamma", "1"]


def test_classify_nontrivial():
    code, rep, _ = run_json(["classify", *BASE, "--p", "2,2", "--delta", "-0.5"])
    assert code == EXIT_OK
    assert rep["verdict"]["status"] == "nontrivial_example_exists"
    assert rep["verdict"]["case_label"] in list("abcdef")
    assert rep["config"]["delta"] == -0.5


def test_classify_trivial():
    code, rep, _ = run_json(["classify", *BASE, "--p", "2,2", "--delta", "0.5"])
    assert code == EXIT_OK and rep["verdict"]["status"] == "trivial_v_infinite"


def test_classify_related():
    code, rep, _ = run_json(["classify", *BASE, "--p", "2,2", "--delta", "0", "--related"])
    assert rep["verdict"]["status"] == "related_weights_line"


@pytest.mark.parametrize("argv", [
    ["classify", *BASE, "--p", "2,x", "--delta", "0"],
    ["classify", *BASE, "--p", "2", "--delta", "0"],
    ["classify", "--n", "1", "--m", "2", "--gamma", "3", "--p", "2,2", "--delta", "0"],
    ["classify", *BASE, "--p", "2,2"],
    ["region-plot", "--n", "1", "--m", "2", "--gamma", "1.5", "--resolution", "8"],
    ["estimate-lip", "--delta", "0.5", "--function", "nope"],
])
def test_invalid_input_exits_2(argv):
    code, out, err = run(argv)
    assert code == EXIT_INVALID and out == "" and err.startswith("fraclab: error:")


def test_unknown_command_is_usage_error():
    code, _, _ = run(["frobnicate"])
    assert code == 2


def test_construct_case_b(tmp_path):
    code, rep, _ = run_json(["construct", "--n", "1", "--m", "2", "--gamma", "1.6", "--p", "1.45,1.45",
                             "--delta", "0.2"])
    assert code == EXIT_OK
    assert rep["pair"]["label"] == "b"
    assert rep["pair"]["exponents"]["betas"] == pytest.approx([0.0103448275862] * 2, rel=1e-9)


def test_construct_trivial_exits_3():
    code, rep, _ = run_json(["construct", *BASE, "--p", "2,2", "--delta", "0.5"])
    assert code == EXIT_HYPOTHESIS
    assert rep["verdict"]["status"] == "trivial_v_infinite"


def test_construct_with_h_report(tmp_path):
    table = tmp_path / "h.csv"
    code, rep, _ = run_json(["construct", "--n", "1", "--m", "2", "--gamma", "1.6", "--p", "1.45,1.45",
                             "--delta", "0.2", "--emit-h-report", "--n-radii", "5", "--n-centers", "2",
                             "--csv", str(table)])
    assert code == EXIT_OK
    assert rep["h_report"]["balls_tested"] == 15
    assert rep["h_report"]["divergence_witness"] is None
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["center_0", "radius", "full", "local", "global"] and len(rows) == 16


def test_check_h_expect_finite_flags_divergence(tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"w": {"variant": "Constant", "c": 1.0},
                                "vvec": [{"variant": "Constant", "c": 1.0}]}))
    argv = ["check-h", "--n", "1", "--m", "1", "--gamma", "0.75", "--p", "2", "--delta", "1.5",
            "--pair", str(pair), "--n-radii", "7", "--n-centers", "0"]
    code, rep, _ = run_json(argv)
    assert code == EXIT_OK and rep["h_report"]["divergence_witness"] is not None
    code, _, _ = run_json(argv + ["--expect-finite"])
    assert code == EXIT_DIVERGENT


def test_check_h_constant_pair(tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"w": {"variant": "Constant", "c": 1.0},
                                "vvec": [{"variant": "Constant", "c": 1.0}]}))
    code, rep, _ = run_json(["check-h", "--n", "1", "--m", "1", "--gamma", "0.75", "--p", "2",
                             "--delta", "0.25", "--pair", str(pair), "--n-radii", "5", "--n-centers", "2",
                             "--expect-finite"])
    assert code == EXIT_OK
    assert rep["h_report"]["sup_full"] == pytest.approx((4 / 3) ** 0.5, rel=1e-6)


def test_check_h_rejects_bad_pair(tmp_path):
    pair = tmp_path / "pair.json"
    pair.write_text(json.dumps({"w": {"variant": "Constant", "c": 1.0}, "vvec": []}))
    code, _, err = run(["check-h", "--n", "1", "--m", "1", "--gamma", "0.75", "--p", "2",
                        "--delta", "0.25", "--pair", str(pair)])
    assert code == EXIT_INVALID and "weight pair" in err


def test_verify_bound_skips_when_p_too_small():
    code, rep, _ = run_json(["verify-bound", "--n", "1", "--m", "2", "--gamma", "0.5", "--p", "2,2",
                             "--delta", "-1"])
    assert code == EXIT_HYPOTHESIS
    assert rep["status"] == "hypotheses not met"
    assert rep["message"].startswith("skipped: p = 1 does not exceed n/gamma = 2")
    assert "forward" not in rep


def test_estimate_lip(tmp_path):
    table = tmp_path / "lip.csv"
    code, rep, _ = run_json(["estimate-lip", "--n", "1", "--delta", "1", "--function", "linear",
                             "--n-radii", "5", "--n-centers", "2", "--csv", str(table)])
    assert code == EXIT_OK
    assert rep["lip_report"]["sup"] == pytest.approx(0.25, rel=1e-8)
    assert len(table.read_text().splitlines()) == 16


def test_estimate_lip_weight_and_function_grammar():
    code, rep, _ = run_json(["estimate-lip", "--n", "1", "--delta", "0", "--function", "indicator",
                             "--weight", "power:0", "--n-radii", "3", "--n-centers", "0"])
    assert code == EXIT_OK and rep["lip_report"]["sup"] == pytest.approx(0.5, rel=1e-8)


@pytest.mark.parametrize("gamma,flat", [(1.5, True), (1.0, False), (0.5, False)])
def test_region_plot_sheets(tmp_path, gamma, flat):
    table, poly = tmp_path / "cells.csv", tmp_path / "poly.json"
    code, rep, _ = run_json(["region-plot", "--n", "1", "--m", "2", "--gamma", str(gamma), "--resolution", "20",
                             "--csv", str(table), "--polygon", str(poly)])
    assert code == EXIT_OK and rep["cells"] == 400
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["inv_p", "delta", "status", "case_label"] and len(rows) == 401
    p = json.loads(poly.read_text())
    assert (p["flat_top"] is not None) == flat
    assert sum(rep["cell_counts"].values()) == 400


def test_kernel_bound():
    code, rep, _ = run_json(["kernel-bound", "--n", "1", "--m", "2", "--gamma", "1", "--p", "2,2",
                             "--samples", "500", "--radius", "1"])
    assert code == EXIT_OK
    assert rep["ball"]["radius"] == 1.0


def test_lemma22_outside_hypothesis_exits_3():
    code, rep, _ = run_json(["lemma22", "--n", "1", "--m", "2", "--gamma", "1.6", "--p", "2,2",
                             "--delta", "0.45", "--n-radii", "3", "--n-centers", "0"])
    assert code == EXIT_HYPOTHESIS and "error" in rep


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"n": 1, "m": 2, "gamma": 1.0, "p": "2,2", "delta": 0.5, "seed": 5}))
    code, rep, _ = run_json(["classify", "--config", str(cfg)])
    assert rep["verdict"]["status"] == "trivial_v_infinite"
    code, rep, _ = run_json(["classify", "--config", str(cfg), "--delta", "-0.5"])
    assert rep["verdict"]["status"] == "nontrivial_example_exists"
    assert rep["config"]["delta"] == -0.5 and rep["config"]["seed"] == 5


def test_config_rejects_unknown_keys(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"gama": 1.0}))
    code, _, err = run(["classify", "--config", str(cfg)])
    assert code == EXIT_INVALID and "unknown config key" in err


def test_seed_precedence(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"seed": 5}))
    parser = build_parser()
    args = parser.parse_args(["check-h", "--config", str(cfg)])
    assert resolve_config(args, {})["seed"] == 5
    assert resolve_config(args, {"FRACLAB_SEED": "9"})["seed"] == 9
    args = parser.parse_args(["check-h", "--config", str(cfg), "--seed", "3"])
    assert resolve_config(args, {"FRACLAB_SEED": "9"})["seed"] == 3
    with pytest.raises(ValueError):
        resolve_config(parser.parse_args(["check-h"]), {"FRACLAB_SEED": "x"})


def test_env_seed_changes_plan(tmp_path):
    argv = ["estimate-lip", "--n", "1", "--delta", "0.5", "--function", "abs-power:0.5",
            "--n-radii", "3", "--n-centers", "2"]
    _, a, _ = run(argv, {"FRACLAB_SEED": "1"})
    _, b, _ = run(argv, {"FRACLAB_SEED": "2"})
    assert json.loads(a)["config"]["seed"] == 1
    assert json.loads(a)["lip_report"]["per_ball"] != json.loads(b)["lip_report"]["per_ball"]


@pytest.mark.parametrize("argv", [
    ["classify", *BASE, "--p", "2,2", "--delta", "-0.5"],
    ["construct", "--n", "1", "--m", "2", "--gamma", "1.6", "--p", "1.45,1.45", "--delta", "0.2",
     "--emit-h-report", "--n-radii", "4", "--n-centers", "2"],
    ["estimate-lip", "--n", "1", "--delta", "0.3", "--function", "abs-power:0.3", "--n-radii", "4",
     "--n-centers", "2"],
    ["kernel-bound", "--n", "1", "--m", "2", "--gamma", "1", "--p", "2,2", "--samples", "300"],
])
def test_reruns_are_byte_identical(argv):
    first = run(argv)
    second = run(argv)
    assert first == second and first[0] == EXIT_OK


def test_out_file(tmp_path):
    out = tmp_path / "rep.json"
    code, text, _ = run(["classify", *BASE, "--p", "2,2", "--delta", "-0.5", "--out", str(out)])
    assert code == EXIT_OK and text == ""
    assert json.loads(out.read_text())["verdict"]["status"] == "nontrivial_example_exists"
