import csv
import io
import json

import pytest

from vqc_lottery import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


FAST = ["--epochs", "2", "--seeds", "0-1"]


def test_presets_are_applied():
    cfg = cli.build_config({}, {"dataset": "wine", "model": "mvqc"})
    assert (cfg.n_layers, cfg.data_reuploading) == (16, False)
    assert cfg.learning_rate == 0.0562921735356738800
    assert cfg.init_range == 0.35300000000000000
    assert cfg.seeds == list(range(10))
    cfg = cli.build_config({}, {"dataset": "iris2", "model": "snn"})
    assert cfg.weight_decay == 0.00037958686849631810
    assert len(cli.PRESETS) == 10


def test_flags_override_config_file_and_preset():
    cfg = cli.build_config({"dataset": "iris2", "model": "bvqc", "n_layers": 3}, {"n_layers": 5, "epochs": 7})
    assert cfg.n_layers == 5 and cfg.epochs == 7
    assert cfg.learning_rate == cli.PRESETS[("iris2", "bvqc")][0]


def test_weak_iterative_run(tmp_path, capsys):
    out = tmp_path / "run"
    code, stdout, _ = run(["run", "--dataset", "iris2", "--model", "mvqc", *FAST, "--out", str(out)], capsys)
    assert code == 0
    summary = rows((out / "summary.csv").read_text())
    seeds = {r["seed"] for r in summary}
    assert seeds == {"0", "1"}
    for seed in seeds:
        counts = [int(r["remaining_count"]) for r in summary if r["seed"] == seed]
        assert counts[0] == 180 and counts == sorted(counts, reverse=True)
        assert counts[-1] > int(0.08 * 180)
    ticket = rows(stdout)
    assert ticket[0]["dataset"] == "iris2" and ticket[0]["n_seeds"] == "2"
    assert json.loads((out / "config.json").read_text())["n_layers"] == 15


def test_run_is_deterministic(tmp_path, capsys):
    args = ["run", "--dataset", "iris2", "--model", "bvqc", "--mode", "weak-oneshot", "--ratios", "0.5,0.8", *FAST]
    run([*args, "--out", str(tmp_path / "a")], capsys)
    run([*args, "--out", str(tmp_path / "b"), "--workers", "2"], capsys)
    for name in ("summary.csv", "records.jsonl"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_file(tmp_path, capsys):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"dataset": "iris2", "model": "snn", "seeds": [4], "epochs": 1, "rw_threshold": 1000}))
    code, stdout, _ = run(["run", "--config", str(conf), "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    (row,) = rows(stdout)
    assert row["winning_ticket_percent"] == "100.0" and row["n_pruned_levels"] == "0"


def test_strong_ea_run_and_trace(tmp_path, capsys):
    out = tmp_path / "ea"
    code, _, _ = run(["run", "--dataset", "iris2", "--model", "bvqc", "--mode", "strong-ea",
                      "--seeds", "0,1", "--generations", "4", "--population", "8", "--out", str(out)], capsys)
    assert code == 0
    summary = rows((out / "summary.csv").read_text())
    assert [r["generation"] for r in summary if r["seed"] == "0"] == ["0", "1", "2", "3", "4"]
    assert {"best_val_accuracy", "best_remaining_percent"} <= set(summary[0])
    code, text, _ = run(["plot-data", str(out), "--kind", "ea-trace"], capsys)
    assert code == 0 and len(rows(text)) == 2 * 5
    code, _, err = run(["plot-data", str(out), "--kind", "weak-curve"], capsys)
    assert code == 1 and "match" in err


def test_weak_curve_row_count(tmp_path, capsys):
    out = tmp_path / "w"
    run(["run", "--dataset", "iris2", "--model", "snn", "--mode", "weak-oneshot", "--ratios", "0.2,0.4,0.6,0.8",
         "--epochs", "3", "--seeds", "0-2", "--out", str(out)], capsys)
    code, text, _ = run(["plot-data", str(out / "records.jsonl"), "--kind", "weak-curve"], capsys)
    assert code == 0
    assert len(rows(text)) == 3 * 5 * 3 * 2


def test_plot_data_without_records(capsys):
    code, text, _ = run(["plot-data", "--kind", "weak-curve"], capsys)
    assert code == 0 and text.strip() == ",".join(cli.CURVE_HEADER)


def test_summarize_round_trip(tmp_path, capsys):
    out = tmp_path / "s"
    _, stdout, _ = run(["run", "--dataset", "iris2", "--model", "bvqc", *FAST, "--out", str(out)], capsys)
    target = tmp_path / "table.csv"
    code, _, _ = run(["summarize", str(tmp_path), "--out", str(target)], capsys)
    assert code == 0 and target.read_text() == stdout
    records = cli.read_records([out])
    assert cli.run_summary(records) == (out / "summary.csv").read_text()


def test_summarize_empty_directory(tmp_path, capsys):
    code, _, err = run(["summarize", str(tmp_path)], capsys)
    assert code == 1 and err


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--dataset", "mnist", "--out", "x"],
        ["run", "--dataset", "iris", "--model", "bvqc", "--out", "x"],
        ["run", "--mode", "lottery", "--out", "x"],
        ["run", "--seeds", "a-b", "--out", "x"],
        ["run", "--ratios", "0.5,0.2", "--out", "x"],
        ["run", "--population", "3", "--out", "x"],
    ],
)
def test_usage_errors(argv, tmp_path, capsys):
    argv = [a if a != "x" else str(tmp_path / "x") for a in argv]
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(cli.main(argv))
    assert exc.value.code == 2
    assert not (tmp_path / "x").exists()


def test_int_list_parser():
    assert cli._int_list("0-2,7") == [0, 1, 2, 7]
    assert cli._int_list("5") == [5]
