import json
import math
import os

import numpy as np
import pytest

from scfsim.config import ConfigError, SimConfig, config_hash, load_config
from scfsim.harness import (ResultTable, build_system, delta_se, emit_results,
                            load_results, run_experiment, worker_count)
from scfsim.validation import run_invariant_checks

TINY = dict(L=5, K=6, N=2, tau=3, trials=256, b_da=4, b_ad=4, seed=13)


def test_load_config_defaults(tmp_path):
    empty = tmp_path / "empty.json"
    empty.write_text("")
    cfg = load_config(empty)
    assert cfg.tau == 10 and cfg.tau_c == 200
    assert cfg.p_max_mw == 100.0
    assert cfg.asd_deg == 15.0 and cfg.eta_db == -20.0
    sigma2_dbm = 10 * math.log10(cfg.sigma2_mw)
    assert abs(sigma2_dbm - (-96.0)) < 0.02      # -174 + 10log10(20e6) + 5


def test_load_config_validation(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tau": 200, "tau_c": 200}))
    with pytest.raises(ConfigError, match="tau"):
        load_config(bad)
    unknown = tmp_path / "unknown.json"
    unknown.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(ConfigError, match="bogus"):
        load_config(unknown)
    garbled = tmp_path / "garbled.json"
    garbled.write_text("{not json")
    with pytest.raises(ConfigError, match="parse"):
        load_config(garbled)


def test_load_config_single_override(tmp_path):
    path = tmp_path / "override.json"
    path.write_text(json.dumps({"b_ad": 4}))
    cfg = load_config(path)
    assert cfg.b_ad == 4
    assert cfg.replace(b_ad=SimConfig().b_ad) == SimConfig()


def test_config_hash_tracks_content():
    assert config_hash(SimConfig()) == config_hash(SimConfig())
    assert config_hash(SimConfig()) != config_hash(SimConfig(seed=1))


def test_emit_empty_table_and_roundtrip(tmp_path):
    table = ResultTable(columns=("a", "b"), rows=[], meta={"x": 1})
    csv_path = tmp_path / "empty.csv"
    emit_results(table, "csv", csv_path)
    assert csv_path.read_bytes() == b"a,b\r\n"

    full = ResultTable(columns=("a", "b"), rows=[(0.1 + 0.2, "sum"), (1e-300, 3)],
                       meta={"x": 1})
    json_path = tmp_path / "t.json"
    emit_results(full, "json", json_path)
    back = load_results(json_path)
    assert [list(r) for r in back.rows] == [list(r) for r in full.rows]
    assert back.meta == full.meta

    csv2 = tmp_path / "t.csv"
    emit_results(full, "csv", csv2)
    first = csv2.read_text().splitlines()[1].split(",")
    assert float(first[0]) == 0.1 + 0.2          # 17 significant digits survive

    with pytest.raises(Exception):
        emit_results(full, "yaml", tmp_path / "t.yaml")


def test_unknown_experiment_rejected():
    with pytest.raises(Exception, match="unknown experiment"):
        run_experiment("frisbee", SimConfig(**TINY))


def test_sweep_rows_and_monotone_bits():
    cfg = SimConfig(**{**TINY, "b_da": 1})
    table = run_experiment("sum-se-vs-bits", cfg, workers=1)
    assert table.columns == ("sweep", "value", "ue_index", "se", "stderr",
                             "config_hash", "seed", "trials")
    sums = [r[3] for r in table.rows
            if r[0] == "b_ad:distributed" and r[2] == "sum"]
    assert len(sums) == 5
    assert all(b >= a - 1e-12 for a, b in zip(sums, sums[1:]))
    assert all(r[5] == config_hash(cfg) and r[6] == cfg.seed for r in table.rows)


def test_cdf_rows_are_a_distribution():
    cfg = SimConfig(**TINY)
    table = run_experiment("cdf-vs-nu", cfg, workers=1)
    by_label = {}
    for row in table.rows:
        by_label.setdefault(row[0], []).append((row[1], row[2]))
    for label, pairs in by_label.items():
        ses = [p[0] for p in pairs]
        cdf = [p[1] for p in pairs]
        assert ses == sorted(ses)
        assert cdf == sorted(cdf)
        assert cdf[-1] == pytest.approx(1.0)


def test_worker_determinism():
    cfg = SimConfig(**TINY)
    one = run_experiment("sum-se-vs-N", cfg, workers=1)
    two = run_experiment("sum-se-vs-N", cfg, workers=2)
    assert one.rows == two.rows


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("SCFSIM_WORKERS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("SCFSIM_WORKERS", "8")
    assert worker_count() == 8
    monkeypatch.setenv("SCFSIM_WORKERS", "zero")
    with pytest.raises(Exception):
        worker_count()


def test_delta_se():
    from scfsim.se_mc import SEReport
    rep = SEReport(se=np.array([0.5, 2.0, 1.0]), prelog=0.95,
                   scheme="distributed", detector="mrc", weighting="lsfd",
                   evaluation="closed-form")
    assert delta_se(rep) == 1.5
    with pytest.raises(ValueError):
        SEReport(se=np.array([0.5]), prelog=1.0, scheme="distributed",
                 detector="mrc", weighting="lsfd", evaluation="closed-form")
    with pytest.raises(ValueError):
        SEReport(se=np.array([-0.1]), prelog=0.9, scheme="distributed",
                 detector="mrc", weighting="lsfd", evaluation="closed-form")


def test_build_system_strategies_differ():
    cfg = SimConfig(**TINY)
    _, cl_a, pw_a = build_system(cfg, 3)
    _, cl_e, pw_e = build_system(cfg, 3, strategy="equal-power")
    assert np.allclose(pw_e.p_ddot, pw_e.p_ddot[0])
    assert not np.allclose(pw_a.p_ddot, pw_a.p_ddot[0])
    with pytest.raises(Exception, match="strategy"):
        build_system(cfg, 3, strategy="bogus")


def test_invariant_checks_pass():
    cfg = SimConfig(**TINY)
    results = run_invariant_checks(cfg, 5)
    failed = [name for name, ok, _ in results if not ok]
    assert failed == []


def test_validate_experiment_rows():
    cfg = SimConfig(L=3, K=4, N=2, tau=2, trials=4000, b_da=1, b_ad=2, seed=1)
    table = run_experiment("validate-closed-forms", cfg, workers=1)
    metrics = {r[0] for r in table.rows}
    assert "theorem1-kernel" in metrics and "distributed-se" in metrics
    assert "centralized-se" in metrics
