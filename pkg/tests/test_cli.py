"""End-to-end checks of the command-line front end."""

import csv

import pytest
import yaml

from multcp import model
from multcp.cli import main
from multcp.policing import (Declaration, TraceRecord, write_declarations_csv,
                             write_trace_csv)

SCENARIO = {
    "links": [
        {"name": "bn", "bandwidth": 5e6, "delay": 0.01, "queue": "red",
         "red": {"thresh": 4, "maxthresh": 12, "limit": 16}},
        {"name": "acc", "bandwidth": 50e6, "delay": 0.002},
    ],
    "flows": [
        {"variant": "sack", "route": ["acc", "bn"], "n": 2.0},
        {"variant": "sack", "route": ["acc", "bn"]},
    ],
    "duration": 5.0,
    "warmup": 1.0,
    "seed": 3,
}


def write_scenario(tmp_path, data=SCENARIO):
    path = tmp_path / "scenario.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_simulate_to_file_and_trace(tmp_path):
    scenario = write_scenario(tmp_path)
    out = tmp_path / "flows.csv"
    trace = tmp_path / "trace.csv"
    rc = main(["simulate", str(scenario), "-o", str(out),
               "--trace-out", str(trace)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0][:5] == ["seed", "flow_id", "variant", "n_weight",
                           "throughput_Bps"]
    assert len(rows) == 3 and rows[1][2] == "sack"
    trace_rows = read_rows(trace)
    assert trace_rows[0] == ["time_ns", "flow_id", "event", "cwnd_before",
                             "cwnd_after", "seq", "ack"]
    assert len(trace_rows) > 10


def test_simulate_defaults_to_stdout(tmp_path, capsys):
    rc = main(["simulate", str(write_scenario(tmp_path))])
    assert rc == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("seed,flow_id,variant")
    assert len(out) == 3


def test_simulate_missing_scenario_fails(tmp_path, capsys):
    rc = main(["simulate", str(tmp_path / "nope.yaml")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_model_table_matches_library(tmp_path):
    out = tmp_path / "model.csv"
    rc = main(["model", "--n-grid", "1,4", "--p-grid", "1e-3",
               "--packet", "1000", "--rtt", "0.1", "-o", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0] == ["n", "p", "throughput_Bps", "gain_ratio"]
    assert len(rows) == 3
    got = float(rows[2][2])
    assert got == pytest.approx(model.multcp_throughput(4, 1e-3, 1000, 0.1))
    assert float(rows[2][3]) == pytest.approx(model.gain_ratio(4))


def test_model_oracle_columns(tmp_path):
    out = tmp_path / "model.csv"
    rc = main(["model", "--n-grid", "2", "--p-grid", "1e-3", "--oracle",
               "--cycles", "2000", "-o", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0][-2:] == ["oracle_Bps", "rel_err"]
    assert float(rows[1][-1]) < 0.1


def test_model_rejects_bad_grid(capsys):
    assert main(["model", "--n-grid", "1,zap"]) == 1
    assert "--n-grid" in capsys.readouterr().err


def write_network(tmp_path):
    path = tmp_path / "net.yaml"
    path.write_text(yaml.safe_dump(
        {"capacities": {"l1": 10.0}, "routes": [["l1"], ["l1"]]}))
    return path


def test_fairness_check_allocate_maxmin(tmp_path, capsys):
    rc = main(["fairness-check", str(write_network(tmp_path)),
               "--allocate", "maxmin"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "connection,rate"
    rates = [float(line.split(",")[1]) for line in lines[1:]]
    assert rates == pytest.approx([5.0, 5.0])


def test_fairness_check_allocate_wpf_weighted(tmp_path, capsys):
    rc = main(["fairness-check", str(write_network(tmp_path)),
               "--allocate", "wpf", "--weights", "3,1"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    rates = [float(line.split(",")[1]) for line in lines[1:]]
    assert rates == pytest.approx([7.5, 2.5])


def test_fairness_check_verdicts(tmp_path, capsys):
    net = write_network(tmp_path)
    assert main(["fairness-check", str(net), "--rates", "5,5"]) == 0
    out = capsys.readouterr().out
    assert "maxmin: PASS" in out and "weighted-pf: PASS" in out
    assert main(["fairness-check", str(net), "--rates", "1,2"]) == 0
    out = capsys.readouterr().out
    assert "maxmin: FAIL" in out and "weighted-pf: FAIL" in out


def test_fairness_check_rate_count_mismatch(tmp_path, capsys):
    rc = main(["fairness-check", str(write_network(tmp_path)),
               "--rates", "1,2,3"])
    assert rc == 1
    assert "expected 2 entries" in capsys.readouterr().err


def test_alloc_exact_proportions(tmp_path):
    out = tmp_path / "alloc.csv"
    rc = main(["alloc", "--prices", "3,1", "--budget", "8000",
               "--segment", "1000", "-o", str(out)])
    assert rc == 0
    rows = read_rows(out)
    assert rows[0] == ["connection", "price", "buffer_bytes"]
    assert [int(r[2]) for r in rows[1:]] == [6000, 2000]


def compliant_trace(n: float, losses: int = 6) -> list[TraceRecord]:
    ratio = (n - 0.5) / n
    records = []
    w = 40.0
    for k in range(losses):
        records.append(TraceRecord(time_ns=k * 10**8, flow_id=0,
                                   event="loss-detected", cwnd_before=w,
                                   cwnd_after=w * ratio, seq=None, ack=None))
        w = w * ratio + 5.0
    return records


def test_police_compliant_and_bill(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    decls = tmp_path / "decls.csv"
    write_trace_csv(compliant_trace(2.0), trace)
    write_declarations_csv([Declaration(0, 2.0, 0, 10**9)], decls)
    rc = main(["police", "--trace", str(trace), "--declarations", str(decls)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "flow 0 declared_n=2" in out and "compliant" in out
    assert "bill over [0,1000000000) ns: 2.000000 weight-seconds" in out


def test_police_flags_violation(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    decls = tmp_path / "decls.csv"
    write_trace_csv(compliant_trace(4.0), trace)
    write_declarations_csv([Declaration(0, 2.0, 0, 10**9)], decls)
    rc = main(["police", "--trace", str(trace), "--declarations", str(decls),
               "--period", "0:2000000000"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "violation" in out and "observed_n=4.0" in out
    assert "bill over [0,2000000000)" in out


def test_police_bad_period(tmp_path, capsys):
    trace = tmp_path / "trace.csv"
    decls = tmp_path / "decls.csv"
    write_trace_csv(compliant_trace(2.0), trace)
    write_declarations_csv([Declaration(0, 2.0, 0, 10**9)], decls)
    rc = main(["police", "--trace", str(trace), "--declarations", str(decls),
               "--period", "oops"])
    assert rc == 1
    assert "--period" in capsys.readouterr().err


def test_sweep_gain_writes_both_csvs(tmp_path):
    out = tmp_path / "gain"
    rc = main(["sweep", "gain", "--variant", "sack", "--n-grid", "2",
               "--seeds", "1", "--flows", "2", "-o", str(out)])
    assert rc == 0
    samples = read_rows(out / "gain.csv")
    summary = read_rows(out / "gain_summary.csv")
    assert samples[0] == ["variant", "n", "seed", "gain"]
    assert summary[0] == ["variant", "n", "mean_gain", "std_gain", "seeds"]
    assert len(samples) == 2 and len(summary) == 2
    assert float(samples[1][3]) > 1.0     # weight 2 beats weight 1


def test_sweep_fairness_summary_to_stdout(capsys):
    rc = main(["sweep", "fairness", "--n-grid", "1", "--seeds", "1",
               "--flows", "2"])
    assert rc == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "n,mean_std_over_mean,std,seeds"
    assert len(lines) == 2


def test_unknown_subcommand_exits_two():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2
