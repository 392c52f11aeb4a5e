import csv
import json
import os

import pytest

from nonclt import cli
from nonclt.errors import HorizonTooSmall


def read(path):
    with open(path) as fh:
        return list(csv.reader(fh))


def test_run_block_writes_four_tables(tmp_path):
    verdicts = cli.run_block(1 / 9, 1 / 9, 100, str(tmp_path))
    assert all(v.passed for v in verdicts)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["block_beta.csv", "block_covariance.csv", "block_matrices.csv",
                     "block_variance.csv"]
    assert len(read(tmp_path / "block_beta.csv")) == 101


def test_run_block_single_row(tmp_path):
    verdicts = cli.run_block(1 / 20, 1 / 50, 1, str(tmp_path))
    assert all(v.passed for v in verdicts)
    for name in ("block_beta.csv", "block_covariance.csv", "block_variance.csv"):
        assert len(read(tmp_path / name)) == 2


def test_block_subcommand_exit_codes(tmp_path, capsys):
    assert cli.main(["block", "--epsilon", "0.1", "--theta", "0.05", "--out", str(tmp_path)]) == 0
    assert cli.main(["block", "--epsilon", "0.2", "--theta", "0.05", "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "InvalidParams" in err


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["block", "--epsilon", "0.1", "--theta", "0.1", "--n-max", "3"]) == 0
    assert (tmp_path / "envout" / "block_beta.csv").exists()


def test_no_temp_files_left(tmp_path):
    cli.run_block(1 / 9, 1 / 9, 5, str(tmp_path))
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".tmp-")]


def small_config(tmp_path, **kw):
    data = {"horizon": 10**4, "trials": 2000, "seed": 3, "output_dir": str(tmp_path)}
    data.update(kw)
    return cli.ExperimentConfig.from_dict(data)


def test_config_validation():
    with pytest.raises(ValueError):
        cli.ExperimentConfig.from_dict({"horizon": 0})
    with pytest.raises(ValueError):
        cli.ExperimentConfig.from_dict({"bogus": 1})
    with pytest.raises(ValueError):
        cli.ExperimentConfig.from_dict({"rates": {"preset": "stretched-exp", "alpha": 1.5}})
    cfg = cli.ExperimentConfig()
    assert len(cfg.t_values()) == 101 and cfg.t_values()[50] == 0.0


def test_run_full_outputs_and_determinism(tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        verdicts = cli.run_full(small_config(d), str(d))
        outs.append({p.name: p.read_bytes() for p in d.iterdir()})
    assert set(outs[0]) == {"levels.csv", "validation.csv", "beta_vs_zeta.csv",
                            "dissipation.csv", "cf_distance.csv", "summary.csv"}
    assert outs[0] == outs[1]
    names = [v.name for v in verdicts]
    assert any(n.startswith("(i)") for n in names) and any(n.startswith("(iv)") for n in names)
    by = {v.name[:4]: v.passed for v in verdicts}
    assert by["(i) "] and by["(ii)"]


def test_run_full_seed_changes_monte_carlo(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    cli.run_full(small_config(a, seed=1), str(a))
    cli.run_full(small_config(b, seed=2), str(b))
    assert (a / "levels.csv").read_bytes() == (b / "levels.csv").read_bytes()
    assert (a / "dissipation.csv").read_bytes() != (b / "dissipation.csv").read_bytes()


def test_run_full_horizon_too_small(tmp_path):
    with pytest.raises(HorizonTooSmall, match="achieved J="):
        cli.run_full(small_config(tmp_path, horizon=10), str(tmp_path))


def test_verify_exit_code_on_error(tmp_path, capsys):
    code = cli.main(["verify", "--preset", "stretched-exp", "--horizon", "10",
                     "--trials", "100", "--out", str(tmp_path)])
    assert code == 2
    err = capsys.readouterr().err
    assert "HorizonTooSmall" in err and "hint:" in err


def test_config_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"horizon": 2000, "levels": 2, "trials": 10}))
    args = cli.make_parser().parse_args(["levels", "--config", str(path), "--trials", "50"])
    cfg = cli.config_from_args(args)
    assert (cfg.horizon, cfg.levels, cfg.trials) == (2000, 2, 50)


def test_profiles():
    args = cli.make_parser().parse_args(["verify", "--quick"])
    cfg = cli.config_from_args(args)
    assert (cfg.trials, cfg.horizon) == (10**4, 10**3)


def test_rates_file(tmp_path):
    path = tmp_path / "rates.txt"
    path.write_text("\n".join(str(0.5 ** (k ** 0.5)) for k in range(1, 501)))
    code = cli.main(["envelope", "--rates", str(path), "--horizon", "500",
                     "--out", str(tmp_path / "o")])
    assert code == 0
    assert read(tmp_path / "o" / "envelope.csv")[0] == ["x", "phi"]


def test_levels_and_simulate_subcommands(tmp_path):
    assert cli.main(["levels", "--preset", "stretched-exp", "--horizon", "10000",
                     "--out", str(tmp_path)]) == 0
    rows = read(tmp_path / "levels.csv")
    assert len(rows) == 5
    assert cli.main(["simulate", "--preset", "stretched-exp", "--horizon", "10000",
                     "--trials", "500", "--out", str(tmp_path)]) == 0
    assert len(read(tmp_path / "dissipation.csv")) == 4


def test_appendix_subcommand(tmp_path):
    assert cli.main(["appendix", "--trials", "20000", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "coding_report.csv").exists()


def test_svg_output(tmp_path):
    pytest.importorskip("matplotlib")
    assert cli.main(["envelope", "--preset", "stretched-exp", "--horizon", "1000", "--svg",
                     "--out", str(tmp_path)]) == 0
    assert (tmp_path / "envelope.svg").read_text().lstrip().startswith("<?xml")
