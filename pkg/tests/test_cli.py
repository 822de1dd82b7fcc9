import json

from roughswitch.cli import main

FAST = ["--paths", "256", "--dual-iters", "10", "--mlp-epochs", "2", "--rff-dim", "16",
        "--gbt-rounds", "10"]


def price_args(market, *extra):
    prices, options, days = market
    return ["price", "--prices", prices, "--options", options, "--ticker", "SYN",
            "--date", days[-20], *FAST, *extra]


def test_price_json_and_table(market, capsys):
    assert main(price_args(market, "--regressor", "linear")) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["bounds"][0]["method"] == "Linear Signature"
    assert main(price_args(market, "--regressor", "linear", "--output", "table")) == 0
    assert "Gap %" in capsys.readouterr().out


def test_config_file_and_flag_override(market, tmp_path, capsys):
    assert main(price_args(market, "--dump-config", "--seed", "5")) == 0
    cfg = json.loads(capsys.readouterr().out)
    assert cfg["seed"] == 5 and cfg["paths"] == 256
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    assert main(["price", "--config", str(path), "--seed", "9", "--dump-config"]) == 0
    again = json.loads(capsys.readouterr().out)
    assert again["seed"] == 9 and again["ticker"] == "SYN"


def test_error_exit_code(market, capsys):
    assert main(price_args(market, "--ticker", "NOPE")) == 2
    assert "[data]" in capsys.readouterr().err
    assert main(["hurst", "--prices", "/no/such/file.csv", "--ticker", "X"]) == 2


def test_hurst_and_simulate(market, tmp_path, capsys):
    assert main(["hurst", "--prices", market[0], "--ticker", "SYN"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "date,hurst" and len(lines) == 1 + 259 - 31
    out = tmp_path / "paths.npz"
    assert main(["simulate", "--engine", "rbergomi", "--paths", "128", "--out", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["engine_tag"] == "RoughBergomi" and out.exists()


def test_selftest(capsys):
    assert main(["selftest", "--paths", "256"]) == 0
    assert "FAIL" not in capsys.readouterr().out
