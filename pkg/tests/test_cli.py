import numpy as np
import pytest

from risparking.channel import load_matrix
from risparking.cli import float_list, int_list, main
from risparking.harness import read_results


def test_list_parsing():
    assert int_list("1,5,10-12") == [1, 5, 10, 11, 12]
    assert float_list("10,inf,-3.5") == [10.0, np.inf, -3.5]


def test_build_matrix(tmp_path, capsys, default_matrix):
    assert main(["build-matrix", "--ris-count", "2", "--out", str(tmp_path)]) == 0
    A = load_matrix(tmp_path / "sensing_matrix_ris2.rism")
    assert A.tobytes() == default_matrix.entries.tobytes()
    assert "600x110" in capsys.readouterr().out


def test_run_single_point(capsys):
    assert main(["run", "--trials", "2", "--snr", "30", "--vehicles", "4", "--ris-count", "2"]) == 0
    out = capsys.readouterr().out
    assert out.count("\n") == 3 and "30" in out


def test_sweep_and_report(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["sweep", "--trials", "2", "--snr", "20", "--vehicles", "1,3", "--out", str(out),
                 "--seed", "4"]) == 0
    rows = read_results(out / "results.csv")
    assert [r.vehicle_count for r in rows] == [1, 3] and all(r.seed == 4 for r in rows)
    assert (out / "manifest.json").exists() and (out / "trials.csv").exists()
    capsys.readouterr()
    assert main(["report", str(out / "results.csv")]) == 0
    assert "det. rate" in capsys.readouterr().out


def test_figure_preset(tmp_path):
    from risparking.cli import _config, make_parser
    args = make_parser().parse_args(["sweep", "--figure", "4", "--fast", "--vehicles", "5"])
    cfg = _config(args)
    assert cfg.sweep.ris_count == [1, 2, 4] and cfg.sweep.snr_db == [30.0]
    assert cfg.sweep.trials == 100 and cfg.sweep.vehicle_count == [5]


def test_config_error_exit_code(tmp_path, capsys):
    p = tmp_path / "cfg.json"
    p.write_text('{"detection": {"tau1": 0.9}}')
    assert main(["run", "--config", str(p)]) == 2
    assert "detection.tau1" in capsys.readouterr().err


def test_missing_subcommand():
    with pytest.raises(SystemExit):
        main([])
