import json
import subprocess
import sys

import numpy as np
import pytest

from kswave.cli import main, parse_config, read_config_file, run
from kswave.errors import MissingCommand, TypeMismatch, UnknownKey, NonPositiveParameter
from kswave.exact import sample_profile
from kswave.io import read_profile_csv, write_profile_csv

REF = "--chi 2 --k 1 --c 2 --a 4 --ur 1".split()


def test_parse_reference_command():
    cfg = parse_config(["exact", *REF, "--dw", "0.25", "--zmin", "-10", "--zmax", "5", "--n", "601"], environ={})
    assert cfg.command == "exact"
    assert cfg.params.chi == 2 and cfg.params.K == 1 and cfg.params.A == 4
    assert cfg.epsilons == [0.25]
    assert cfg.settings["n"] == 601 and cfg.settings["zmin"] == -10.0


def test_missing_command():
    with pytest.raises(MissingCommand, match="usage"):
        parse_config([], environ={})
    with pytest.raises(MissingCommand):
        parse_config(["explode"], environ={})


def test_negative_diffusion_rejected():
    with pytest.raises(TypeMismatch):
        parse_config(["exact", "--dw", "-1"], environ={})


def test_bad_values_rejected():
    with pytest.raises(TypeMismatch):
        parse_config(["exact", "--n", "many"], environ={})
    with pytest.raises(TypeMismatch):
        parse_config(["exact", "--format", "xml"], environ={})
    with pytest.raises(NonPositiveParameter):
        parse_config(["exact", "--chi", "-2"], environ={})


def test_unknown_flag_rejected():
    with pytest.raises(UnknownKey):
        parse_config(["exact", "--colour", "red"], environ={})


def test_eps_list_sorted_descending():
    cfg = parse_config(["converge", "--eps", "1e-2,1e-1,3e-3,3e-2"], environ={})
    assert cfg.epsilons == [1e-1, 3e-2, 1e-2, 3e-3]


def test_config_file_and_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# reference run\ncommand = exact\nchi = 3   # stronger\nn = 11\nout = from-file\n")
    assert read_config_file(path)["chi"] == "3"
    cfg = parse_config(["--config", str(path)], environ={})
    assert cfg.command == "exact" and cfg.params.chi == 3.0 and cfg.settings["n"] == 11
    assert str(cfg.out_dir) == "from-file"
    cfg = parse_config(["--config", str(path)], environ={"KSWAVE_OUT": "from-env"})
    assert str(cfg.out_dir) == "from-env"
    cfg = parse_config(["--config", str(path), "--chi", "4", "--out", "from-flag"], environ={"KSWAVE_OUT": "e"})
    assert cfg.params.chi == 4.0 and str(cfg.out_dir) == "from-flag"


def test_config_file_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("command = exact\ncolour = red\n")
    with pytest.raises(UnknownKey):
        parse_config(["--config", str(path)], environ={})


def test_main_exit_codes(tmp_path, capsys):
    assert main([]) == 2
    assert main(["exact", "--out", str(tmp_path), "--dw", "2.5"]) == 1
    assert "DiffusionExceedsChi" in capsys.readouterr().err
    assert main(["exact", "--out", str(tmp_path), "--dw", "0.25", "--n", "21"]) == 0
    assert main(["pde", "--out", str(tmp_path), "--cells", "64", "--t-end", "0.1", "--every", "0.1"]) == 1


def _run(tmp_path, *argv):
    cfg = parse_config([*argv, "--out", str(tmp_path)], environ={})
    report = run(cfg)
    assert report.exit_status == 0, report.message
    return report, json.loads((tmp_path / f"{cfg.command}_summary.json").read_text())


def test_exact_command_output(tmp_path):
    report, summary = _run(tmp_path, "exact", *REF, "--dw", "1,0.5,0.25", "--n", "101")
    assert report.files == ["exact_dw1.csv", "exact_dw0.5.csv", "exact_dw0.25.csv"]
    assert all(v < 1e-8 for k, v in summary["metrics"].items())
    assert summary["provenance"]["version"] and len(summary["provenance"]["config_hash"]) == 64
    lines = (tmp_path / "exact_dw0.25.csv").read_text().splitlines()
    assert lines[0].startswith("# construction=exact") and lines[1] == "z,u,w"
    assert len(lines) == 2 + 101


def test_csv_round_trip(tmp_path, base):
    prof = sample_profile("exact", -10, 5, 257, base.replace(mu=0.0, eps=0.25))
    back = read_profile_csv(write_profile_csv(prof, tmp_path / "p.csv"))
    np.testing.assert_array_equal(back.z, prof.z)
    np.testing.assert_array_equal(back.u, prof.u)
    np.testing.assert_array_equal(back.w, prof.w)
    assert back.construction == "exact" and back.coordinate == "z"


def test_limit_and_singular_agree(tmp_path):
    _run(tmp_path, "limit", *REF, "--n", "1000")
    _run(tmp_path, "singular", *REF, "--n", "1000")
    lim = read_profile_csv(tmp_path / "limit.csv")
    sing = read_profile_csv(tmp_path / "singular.csv")
    np.testing.assert_array_equal(lim.z, sing.z)
    np.testing.assert_allclose(sing.u, lim.u, rtol=0, atol=1e-12)
    np.testing.assert_allclose(sing.w, lim.w, rtol=0, atol=1e-12)


def test_converge_reports_slope(tmp_path):
    _, summary = _run(tmp_path, "converge", "--eps", "1e-1,3e-2,1e-2,3e-3")
    assert abs(summary["metrics"]["fitted_slope"] - 1.0) <= 0.3
    table = (tmp_path / "converge.csv").read_text().splitlines()
    assert table[0] == "epsilon,end_state_gap,profile_distance" and len(table) == 5


def test_json_format(tmp_path):
    report, _ = _run(tmp_path, "limit", "--n", "11", "--format", "json")
    data = json.loads((tmp_path / "limit.json").read_text())
    assert data["coordinate"] == "z" and len(data["u"]) == 11


def test_manifolds_and_validate(tmp_path):
    _, summary = _run(tmp_path, "manifolds", "--eps", "0.1,0.01")
    assert summary["metrics"]["S_r_verdict"] == "repelling"
    assert summary["metrics"]["max_invariance_residual"] < 1e-12
    _, summary = _run(tmp_path, "validate")
    assert summary["metrics"]["all_passed"]


def test_small_pde_run(tmp_path):
    _, summary = _run(tmp_path, "pde", "--eps", "0.25", "--cells", "400", "--t-end", "1", "--every", "0.25")
    m = summary["metrics"]
    assert m["snapshots"] == 5
    assert abs(m["speed"] - 2.0) < 0.1
    assert (tmp_path / "pde_0004.csv").exists()


@pytest.mark.parametrize(
    "argv",
    [
        ["exact", "--dw", "1,0.25", "--n", "51"],
        ["singular", "--n", "101"],
        ["shoot", "--eps", "0.03"],
        ["pde", "--eps", "0.25", "--cells", "200", "--t-end", "0.5", "--every", "0.125"],
    ],
)
def test_outputs_are_byte_identical(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    _run(a, *argv)
    _run(b, *argv)
    names = sorted(p.name for p in a.iterdir())
    assert names == sorted(p.name for p in b.iterdir())
    for name in names:
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "kswave", "limit", "--n", "5", "--out", str(tmp_path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(proc.stdout)["files"] == ["limit.csv"]
