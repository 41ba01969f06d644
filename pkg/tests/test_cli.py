"""End-to-end command tests: parsing, precedence, exit codes, bundles."""

import json

import jsonschema
import numpy as np
import pytest

from divlab.cli import (
    EXIT_CONFIG,
    EXIT_NUMERIC,
    EXIT_OK,
    ExperimentConfig,
    build_parser,
    main,
    parse_config_file,
    parse_distribution_file,
    parse_schedule,
)
from divlab.dists import DiscreteDist, DiscreteJoint, RngSeed
from divlab.errors import ParseError
from divlab.reports import REPORT_MANIFEST_SCHEMA, config_hash, format_cell


@pytest.fixture
def vec_file(tmp_path):
    f = tmp_path / "p.txt"
    f.write_text("# a comment line\n0.75 0.25\n")
    return f


@pytest.fixture
def joint_file(tmp_path):
    f = tmp_path / "joint.txt"
    f.write_text("0.4 0.1  # trailing comment\n0.1 0.4\n")
    return f


# ---------------------------------------------------------------------------
# file parsing


def test_parse_vector(vec_file):
    d = parse_distribution_file(vec_file)
    assert isinstance(d, DiscreteDist)
    assert np.allclose(d.probs, [0.75, 0.25])


def test_parse_joint(joint_file):
    j = parse_distribution_file(joint_file)
    assert isinstance(j, DiscreteJoint)
    assert np.allclose(j.table, [[0.4, 0.1], [0.1, 0.4]])


def test_parse_reports_offending_line(tmp_path):
    f = tmp_path / "bad.txt"
    f.write_text("0.5 0.5\n0.5 oops\n")
    with pytest.raises(ParseError, match="2"):
        parse_distribution_file(f)


def test_parse_rejects_ragged_rows(tmp_path):
    f = tmp_path / "ragged.txt"
    f.write_text("0.5 0.5\n1.0\n")
    with pytest.raises(ParseError):
        parse_distribution_file(f)


def test_parse_rejects_non_square_table(tmp_path):
    f = tmp_path / "rect.txt"
    f.write_text("0.2 0.2 0.1\n0.2 0.2 0.1\n")
    with pytest.raises(ParseError, match="square"):
        parse_distribution_file(f)


def test_parse_mass_tolerance(tmp_path):
    f = tmp_path / "off.txt"
    f.write_text("0.7 0.31\n")
    with pytest.raises(ParseError, match="renormalize"):
        parse_distribution_file(f)
    d = parse_distribution_file(f, renormalize=True)
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_parse_accepts_tiny_drift(tmp_path):
    f = tmp_path / "drift.txt"
    f.write_text(f"{0.75 + 2e-10!r} 0.25\n")
    d = parse_distribution_file(f)
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)


def test_parse_missing_file():
    with pytest.raises(ParseError):
        parse_distribution_file("/nonexistent/p.txt")


def test_parse_config_file(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("# run settings\nseed = 9\npis = 0.1,0.5\n\nks=1,2 # inline\n")
    opts = parse_config_file(f)
    assert opts == {"seed": "9", "pis": "0.1,0.5", "ks": "1,2"}


def test_parse_config_rejects_bad_lines(tmp_path):
    f = tmp_path / "run.cfg"
    f.write_text("just words\n")
    with pytest.raises(ParseError, match="1"):
        parse_config_file(f)


@pytest.mark.parametrize(
    "text,eps0",
    [("constant:0.4", 0.4), ("linear:100", 1.0), ("invsigmoid:50:1000", 50 / 51)],
)
def test_parse_schedule_forms(text, eps0):
    assert parse_schedule(text).epsilon_at(0) == pytest.approx(eps0)


@pytest.mark.parametrize("text", ["constant", "linear:abc", "warp:1", "constant:2.0"])
def test_parse_schedule_rejects(text):
    with pytest.raises(ParseError):
        parse_schedule(text)


# ---------------------------------------------------------------------------
# config resolution


def _resolve_args(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    from divlab.cli import _resolve

    return _resolve(args, args.defaults)


def test_flag_overrides_config_overrides_default(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("ks = 1,2\nseed = 5\n")
    cfg = _resolve_args(["js-limits", "--config", str(cfg_file), "--ks", "3,4"])
    assert cfg.get_str("ks") == "3,4"
    assert cfg.seed == RngSeed(5)
    cfg2 = _resolve_args(["js-limits", "--config", str(cfg_file), "--seed", "8"])
    assert cfg2.get_str("ks") == "1,2"
    assert cfg2.seed == RngSeed(8)
    cfg3 = _resolve_args(["js-limits"])
    assert cfg3.get_str("ks") == "1,2,3,4"
    assert cfg3.seed == RngSeed(0)


def test_unknown_config_key_rejected(tmp_path):
    cfg_file = tmp_path / "run.cfg"
    cfg_file.write_text("nonsense = 1\n")
    with pytest.raises(ParseError, match="nonsense"):
        _resolve_args(["js-limits", "--config", str(cfg_file)])


def test_experiment_config_getters():
    cfg = ExperimentConfig(
        "x", RngSeed(0), None,
        {"a": "3", "b": "2.5", "c": "true", "d": "1, 2,3", "e": "zz"},
    )
    assert cfg.get_int("a") == 3
    assert cfg.get_float("b") == 2.5
    assert cfg.get_bool("c") is True
    assert cfg.get_floats("d") == [1.0, 2.0, 3.0]
    with pytest.raises(ParseError):
        cfg.get_int("e")
    with pytest.raises(ParseError):
        cfg.get_bool("e")


def test_unknown_flag_exits_with_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["js-limits", "--frobnicate", "1"])
    assert exc.value.code == 2


# ---------------------------------------------------------------------------
# whole commands


def test_js_limits_writes_bundle(tmp_path):
    out = tmp_path / "run"
    assert main(["js-limits", "--out", str(out), "--seed", "7"]) == EXIT_OK
    manifest = json.loads((out / "manifest.json").read_text())
    jsonschema.validate(manifest, REPORT_MANIFEST_SCHEMA)
    assert manifest["experiment"] == "js-limits"
    assert (out / "tables" / "limits.csv").exists()
    assert (out / "config.txt").exists()


def test_rerun_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    main(["divergence", "--p", _write_vec(tmp_path), "--q", _write_vec(tmp_path, "q.txt"),
          "--out", str(a), "--seed", "3"])
    main(["divergence", "--p", _write_vec(tmp_path), "--q", _write_vec(tmp_path, "q.txt"),
          "--out", str(b), "--seed", "3"])
    for name in ("summary.csv", "js_grid.csv"):
        assert (a / "tables" / name).read_bytes() == (b / "tables" / name).read_bytes()
    assert (a / "manifest.json").read_bytes() == (b / "manifest.json").read_bytes()


def _write_vec(tmp_path, name="p.txt"):
    f = tmp_path / name
    if name == "p.txt":
        f.write_text("0.75 0.25\n")
    else:
        f.write_text("0.5 0.5\n")
    return str(f)


def test_config_round_trip(tmp_path):
    first = tmp_path / "first"
    again = tmp_path / "again"
    main(["js-limits", "--out", str(first), "--seed", "21", "--ks", "1,2"])
    code = main(["js-limits", "--config", str(first / "config.txt"), "--out", str(again)])
    assert code == EXIT_OK
    assert (first / "tables" / "limits.csv").read_bytes() == (
        again / "tables" / "limits.csv"
    ).read_bytes()


def test_missing_required_distribution_is_config_error(tmp_path, capsys):
    code = main(["divergence", "--out", str(tmp_path / "x")])
    assert code == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


def test_bad_distribution_file_is_config_error(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("0.5 0.6\n")
    ok = tmp_path / "ok.txt"
    ok.write_text("0.5 0.5\n")
    code = main(["divergence", "--p", str(bad), "--q", str(ok), "--out", str(tmp_path / "x")])
    assert code == EXIT_CONFIG


def test_degenerate_window_is_numeric_error(tmp_path, capsys):
    code = main([
        "figure1", "--out", str(tmp_path / "x"), "--pis", "0.5",
        "--resolution", "32", "--bounds", "100,101,100,101",
    ])
    assert code == EXIT_NUMERIC
    assert "numeric" in capsys.readouterr().err


def test_ss_inconsistency_command(tmp_path):
    out = tmp_path / "scan"
    code = main([
        "ss-inconsistency", "--out", str(out), "--seed", "5",
        "--epsilons", "0,1", "--restarts", "1", "--brute-points", "0",
        "--max-iters", "200",
    ])
    assert code == EXIT_OK
    scan = (out / "tables" / "scan.csv").read_text().splitlines()
    assert scan[0].startswith("epsilon,")
    assert len(scan) == 3
    assert (out / "figures" / "tv_curve.svg").stat().st_size > 0


def test_ss_train_command(tmp_path):
    out = tmp_path / "train"
    code = main([
        "ss-train", "--out", str(out), "--seed", "2",
        "--num-sequences", "2000", "--schedule", "constant:1",
        "--checkpoint-every", "1000",
    ])
    assert code == EXIT_OK
    rows = (out / "tables" / "trace.csv").read_text().splitlines()
    assert len(rows) == 3
    assert (out / "tables" / "model_rows.csv").exists()


def test_figure1_command_small(tmp_path):
    out = tmp_path / "fig"
    code = main([
        "figure1", "--out", str(out), "--pis", "0.5", "--resolution", "32",
        "--max-iters", "80",
    ])
    assert code == EXIT_OK
    fits = (out / "tables" / "fits.csv").read_text().splitlines()
    header, row = fits
    values = dict(zip(header.split(","), row.split(",")))
    assert float(values["variance"]) == pytest.approx(2.0, abs=0.05)
    assert float(values["ml_variance"]) == 2.5
    assert (out / "figures" / "heatmap_pi_0.png").stat().st_size > 0
    assert (out / "figures" / "contours.svg").stat().st_size > 0


def test_adversarial_command_small(tmp_path):
    out = tmp_path / "adv"
    code = main([
        "adversarial", "--out", str(out), "--seed", "4", "--pis", "0.5",
        "--rounds", "30",
    ])
    assert code == EXIT_OK
    summary = (out / "tables" / "summary.csv").read_text().splitlines()
    assert len(summary) == 2
    assert (out / "tables" / "trace_0.csv").exists()


# ---------------------------------------------------------------------------
# report helpers


def test_format_cell_rules():
    assert format_cell(True) == "true"
    assert format_cell(3) == "3"
    assert format_cell(0.1) == repr(0.1)
    assert format_cell("x") == "x"


def test_config_hash_sensitivity():
    base = config_hash("e", 0, {"a": "1"})
    assert base == config_hash("e", 0, {"a": "1"})
    assert base != config_hash("e", 1, {"a": "1"})
    assert base != config_hash("e", 0, {"a": "2"})
    assert len(base) == 64
