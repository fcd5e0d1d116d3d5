import csv
import json
import math

import numpy as np
import pytest

from risparking.harness import (ConfigError, ExperimentConfig, ExperimentResult, ResultRow,
                                config_from_dict, format_report, load_config, read_results,
                                resolve_workers, run_sweep, run_trial, write_results)


def test_empty_file_gives_defaults(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("")
    cfg = load_config(p)
    g = cfg.geometry
    assert (g.nx, g.ny, g.cell_size) == (10, 11, 2.5)
    assert cfg.acquisition.K == 300 and cfg.radio.frequency == 3e9
    assert cfg.sweep.ris_count == [2] and cfg.sweep.trials == 1000
    assert len(g.ris_layouts["2"]) == 2
    assert (cfg.detection.tau1, cfg.detection.tau2, cfg.detection.eta) == (0.25, 0.55, 0.5)
    scene = cfg.scene(4)
    assert {r.center for r in scene.ris} == {(7.5, 7.5, 3), (-7.5, 7.5, 3), (-7.5, -7.5, 3),
                                             (7.5, -7.5, 3)}
    assert cfg.scene(1).ris[0].center == (0, 0, 3)


def test_threshold_order_rejected():
    with pytest.raises(ConfigError, match="detection.tau1"):
        config_from_dict({"detection": {"tau1": 0.6, "tau2": 0.55}})


def test_unknown_fields_warn():
    with pytest.warns(UserWarning, match="bogus"):
        cfg = config_from_dict({"bogus": 1, "sweep": {"trials": 5}})
    assert cfg.sweep.trials == 5
    with pytest.warns(UserWarning, match="sweep.colour"):
        config_from_dict({"sweep": {"colour": "red"}})


@pytest.mark.parametrize("data, field", [
    ({"acquisition": {"K": 0}}, "acquisition.K"),
    ({"acquisition": {"K": "many"}}, "acquisition.K"),
    ({"sweep": {"ris_count": [3]}}, "ris_layouts"),
    ({"sweep": {"vehicle_count": [41]}}, "sweep.vehicle_count"),
    ({"recovery": {"sparsity_mode": "guess"}}, "recovery.sparsity_mode"),
    ({"geometry": {"lane_rows": [2, 5, 7]}}, "geometry"),
    ({"geometry": {"tx": [[0, 0]]}}, "geometry.tx"),
])
def test_validation_names_field(data, field):
    with pytest.raises(ConfigError, match=field):
        config_from_dict(data)


def test_bad_json(tmp_path):
    p = tmp_path / "cfg.json"
    p.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(p)


def test_inf_snr_and_complex_gain():
    cfg = config_from_dict({"sweep": {"snr_db": ["inf", 30]}, "radio": {"gain": [0, 2]}})
    assert math.isinf(cfg.sweep.snr_db[0])
    assert cfg.radio_config().gain == 2j
    assert json.loads(json.dumps(cfg.to_dict()))["sweep"]["snr_db"][0] == "inf"


def test_noiseless_empty_lot(default_cfg, default_matrix, default_layout):
    rec = run_trial(default_cfg, 2, math.inf, 0, 0, A=default_matrix, layout=default_layout)
    assert rec.metrics.detection_rate == 1.0 and rec.metrics.far == 0.0
    assert rec.metrics.D == 0 and rec.metrics.D2 == 0


def test_trial_deterministic(default_cfg, default_matrix, default_layout):
    a = run_trial(default_cfg, 2, 20.0, 12, 3, A=default_matrix, layout=default_layout)
    b = run_trial(default_cfg, 2, 20.0, 12, 3, A=default_matrix, layout=default_layout)
    c = run_trial(default_cfg, 2, 20.0, 12, 4, A=default_matrix, layout=default_layout)
    assert a == b
    assert a.metrics.nmse != c.metrics.nmse


def test_default_point_detects_all(default_cfg, default_matrix, default_layout):
    rates = [run_trial(default_cfg, 2, 30.0, 15, i, A=default_matrix, layout=default_layout)
             .metrics.detection_rate for i in range(20)]
    assert np.mean(rates) == 1.0


def test_previous_interval_mode(default_matrix):
    cfg = config_from_dict({"acquisition": {"reference_mode": "previous",
                                            "background_vehicles": 30},
                            "sweep": {"vehicle_count": [1, 5, 10]}})
    rec = run_trial(cfg, 2, 30.0, 5, 0, A=default_matrix)
    assert rec.metrics.D == 5 and rec.sparsity == 10
    with pytest.raises(ConfigError):
        config_from_dict({"acquisition": {"reference_mode": "previous",
                                          "background_vehicles": 30},
                          "sweep": {"vehicle_count": [11]}})


def test_fixed_sparsity_mode(default_matrix):
    cfg = config_from_dict({"recovery": {"sparsity_mode": "fixed", "fixed_sparsity": 80}})
    rec = run_trial(cfg, 2, 30.0, 3, 0, A=default_matrix)
    assert rec.sparsity == 80


def small_cfg(**sweep):
    cfg = ExperimentConfig()
    cfg.sweep.snr_db = sweep.get("snr_db", [20.0])
    cfg.sweep.vehicle_count = sweep.get("vehicle_count", [0, 4])
    cfg.sweep.ris_count = sweep.get("ris_count", [2])
    cfg.sweep.trials = sweep.get("trials", 3)
    return cfg


def test_sweep_shape_and_aggregation():
    cfg = small_cfg(snr_db=[30.0, 10.0], ris_count=[1, 2])
    res = run_sweep(cfg, workers=1)
    keys = [(r.ris_count, r.snr_db, r.vehicle_count) for r in res.rows]
    assert keys == sorted(keys) and len(keys) == 8
    assert len(res.records) == 8 * 3
    row = res.rows[-1]
    recs = [r for r in res.records if (r.ris_count, r.snr_db, r.vehicle_count) ==
            (row.ris_count, row.snr_db, row.vehicle_count)]
    assert row.detection_rate == pytest.approx(np.mean([r.metrics.detection_rate for r in recs]))
    assert row.nmse_db == pytest.approx(10 * np.log10(np.mean([r.metrics.nmse for r in recs])))


def test_single_point_single_trial():
    res = run_sweep(small_cfg(vehicle_count=[5], trials=1), workers=1)
    assert len(res.rows) == 1 and res.rows[0].trials == 1


def test_thread_count_does_not_change_results(monkeypatch):
    cfg = small_cfg()
    a = run_sweep(cfg, workers=1)
    monkeypatch.setenv("RIS_SIM_THREADS", "3")
    assert resolve_workers(8) == 3
    b = run_sweep(cfg, workers=8)
    assert a.rows == b.rows


def test_header_only_csv(tmp_path):
    paths = write_results(ExperimentResult(), tmp_path)
    assert paths["results"].read_bytes() == \
        b"ris_count,snr_db,vehicle_count,detection_rate,nmse_db,far,trials,seed\n"
    assert read_results(paths["results"]) == []


def test_csv_roundtrip(tmp_path):
    rows = [ResultRow(2, 30.0, 7, 1 / 3, -21.123456789012345, 0.1 + 0.2, 100, 0),
            ResultRow(1, math.inf, 0, 1.0, math.nan, 0.0, 100, 5)]
    paths = write_results(ExperimentResult(rows), tmp_path)
    back = read_results(paths["results"])
    assert back[0] == rows[0]
    assert math.isinf(back[1].snr_db) and math.isnan(back[1].nmse_db)
    text = paths["results"].read_text()
    assert "\r" not in text and "0.30000000000000004" in text


def test_write_twice_byte_identical(tmp_path):
    cfg = small_cfg()
    a = write_results(run_sweep(cfg, workers=1), tmp_path / "a", cfg)
    b = write_results(run_sweep(cfg, workers=1), tmp_path / "b", cfg)
    assert a["results"].read_bytes() == b["results"].read_bytes()
    manifest = json.loads(a["manifest"].read_text())
    assert manifest["config"]["master_seed"] == 0 and "numpy" in manifest


def test_trials_file_recomputes_aggregates(tmp_path):
    cfg = small_cfg(vehicle_count=[6])
    paths = write_results(run_sweep(cfg, workers=1), tmp_path, cfg)
    with paths["trials"].open() as fh:
        trials = list(csv.DictReader(fh))
    row = read_results(paths["results"])[0]
    assert row.detection_rate == pytest.approx(np.mean([float(t["detection_rate"]) for t in trials]))


def test_write_error_has_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_results(ExperimentResult(), blocker / "sub")


def test_report_table():
    text = format_report([ResultRow(2, 30.0, 7, 0.95, -20.5, 0.01, 100, 0)])
    assert "0.9500" in text and "-20.50" in text
