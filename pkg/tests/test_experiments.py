import json
from pathlib import Path

import pytest

from soficlab.cli import main
from soficlab.experiments import (
    REGISTRY,
    RunContext,
    config_checksum,
    run_experiment,
    validate_config,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def _e8_cfg(tmp_path: Path, **over) -> dict:
    cfg = json.loads((CONFIG_DIR / "e8.json").read_text())
    cfg["ns"] = [8, 16]
    cfg["out_dir"] = str(tmp_path / "e8")
    cfg.update(over)
    return cfg


def test_registry_covers_all_nine():
    assert sorted(REGISTRY) == [f"E{i}" for i in range(1, 10)]


def test_config_checksum_stable_and_sensitive():
    cfg = {"experiment": "E8", "seed": 1, "ns": [8], "schema_version": 1}
    a = config_checksum(cfg)
    assert len(a) == 12 and int(a, 16) >= 0
    assert config_checksum(dict(reversed(list(cfg.items())))) == a
    assert config_checksum({**cfg, "seed": 2}) != a


def test_validate_config_reports_problems():
    assert validate_config({"experiment": "E42"}) != []
    missing = validate_config({"experiment": "E8", "schema_version": 1})
    assert any("seed" in p for p in missing)
    bad_seed = validate_config(
        {
            "experiment": "E8",
            "schema_version": 1,
            "seed": "20260821",
            "ns": [8],
            "eps": 0.05,
            "cluster_threshold": 0.05,
            "pair_eps": 0.2,
            "pair_stat_threshold": 0.9,
            "vertex_pairs": 10,
        }
    )
    assert any("seed" in p for p in bad_seed)
    cfg5 = json.loads((CONFIG_DIR / "e5.json").read_text())
    assert validate_config(cfg5) == []
    cfg5["epsilons"] = cfg5["epsilons"][:-1]
    assert any("epsilons" in p for p in validate_config(cfg5))
    cfg5["seeds"] = "not-a-list"
    assert any("seeds" in p for p in validate_config(cfg5))


@pytest.mark.parametrize("name", sorted(p.name for p in CONFIG_DIR.glob("e*.json")))
def test_shipped_configs_validate(name):
    cfg = json.loads((CONFIG_DIR / name).read_text())
    assert validate_config(cfg) == []


def test_run_experiment_writes_artifacts(tmp_path):
    cfg = _e8_cfg(tmp_path)
    code = run_experiment(cfg, RunContext())
    assert code == 0
    out = tmp_path / "e8"
    table = (out / "e8_convergence.csv").read_text()
    first, header = table.splitlines()[:2]
    assert first == f"# config_checksum={config_checksum(cfg)}"
    assert header.startswith("n,vertices,F_radius,epsilon,lw_defect")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["experiment"] == "E8"
    assert summary["passed"] is True
    assert summary["config_checksum"] == config_checksum(cfg)


def test_run_experiment_deterministic_bytes(tmp_path):
    cfg = _e8_cfg(tmp_path)
    run_experiment(cfg, RunContext(out_dir=tmp_path / "a"))
    run_experiment(cfg, RunContext(threads=4, out_dir=tmp_path / "b"))
    a = (tmp_path / "a" / "e8_convergence.csv").read_text()
    b = (tmp_path / "b" / "e8_convergence.csv").read_text()
    assert a == b


def test_run_experiment_rejects_invalid_config():
    with pytest.raises(ValueError):
        run_experiment({"experiment": "E8"}, RunContext())


def test_cli_validate_and_run(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_e8_cfg(tmp_path)))
    assert main(["validate", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "ok: E8" in out

    assert main(["run", str(cfg_path)]) == 0
    out = capsys.readouterr().out
    assert "E8: pass" in out
    assert (tmp_path / "e8" / "summary.json").exists()


def test_cli_validate_rejects_bad_config(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"experiment": "E8", "schema_version": 1}))
    assert main(["validate", str(bad)]) == 1
    assert "invalid:" in capsys.readouterr().err
    assert main(["validate", str(tmp_path / "missing.json")]) == 1
    assert main(["run", str(tmp_path / "missing.json")]) == 1


def test_cli_out_override_and_seed(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg = _e8_cfg(tmp_path)
    cfg_path.write_text(json.dumps(cfg))
    other = tmp_path / "elsewhere"
    assert main(["run", str(cfg_path), "--out", str(other)]) == 0
    capsys.readouterr()
    assert (other / "summary.json").exists()
    assert not (tmp_path / "e8").exists()
    # --out must not perturb the digest baked into the table
    table = (other / "e8_convergence.csv").read_text()
    assert table.splitlines()[0] == f"# config_checksum={config_checksum(cfg)}"


def test_cli_budget_refusal_writes_diagnostic(tmp_path, capsys):
    cfg = json.loads((CONFIG_DIR / "e5.json").read_text())
    cfg["out_dir"] = str(tmp_path / "e5")
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    assert main(["run", str(cfg_path), "--budget", "100"]) == 1
    err = capsys.readouterr().err
    assert "budget" in err
    diag = json.loads((tmp_path / "e5" / "diagnostic.json").read_text())
    assert diag["type"] == "BudgetExceededError"
    assert "budget" in diag["error"]
    assert diag["experiment"] == "E5"


def test_cli_report_table(tmp_path, capsys):
    cfg_path = tmp_path / "cfg.json"
    cfg_path.write_text(json.dumps(_e8_cfg(tmp_path, out_dir=str(tmp_path / "res" / "e8"))))
    assert main(["run", str(cfg_path)]) == 0
    capsys.readouterr()
    assert main(["report", str(tmp_path / "res")]) == 0
    out = capsys.readouterr().out
    assert "E8" in out and "pass" in out
    assert main(["report", str(tmp_path / "nowhere")]) == 1
