import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from efpp import runner
from efpp.cli import main
from efpp.config import ConfigError, ExperimentConfig
from efpp.estimators import ReplicateRecord
from efpp.geometry import rotation_to
from efpp.records import (
    SUMMARY_HEADER, ProvenanceError, load_runs, parse_records, persist, read_records, read_summary,
    record_line,
)

SMALL = ExperimentConfig(n_grid=(16, 24), replicates=6, master_seed=99)


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(alpha=1.0)
    with pytest.raises(ConfigError):
        ExperimentConfig(n_grid=(32, 16))
    with pytest.raises(ConfigError):
        ExperimentConfig(padding_policy="huge")
    with pytest.raises(ConfigError):
        ExperimentConfig(direction=(1.0, 0.0, 0.0))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"alpha": 2.0, "colour": "red"})


def test_config_json_round_trip(tmp_path):
    cfg = ExperimentConfig(d=3, alpha=2.5, n_grid=(8, 16), direction=(0.0, 1.0, 1.0))
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    back = ExperimentConfig.load(path)
    assert back == cfg
    assert back.hash == cfg.hash
    assert cfg.replace(output_dir="elsewhere").hash == cfg.hash
    assert cfg.replace(master_seed=1).hash != cfg.hash
    assert np.allclose(cfg.unit, [0, 1 / math.sqrt(2), 1 / math.sqrt(2)])


@pytest.mark.parametrize("policy", ["compact", "wide"])
def test_padding_policies(policy):
    cfg = ExperimentConfig(padding_policy=policy)
    n = 64
    box = cfg.box(n)
    assert box.lo[0] == -16 and box.hi[0] == 80
    if policy == "compact":
        expect = max(n**0.75, 4 * math.sqrt(n) ** (1 / 1.5))
    else:
        expect = max(8 * n**0.75 * (1 + math.log(n)), 4 * math.sqrt(n) ** (1 / 1.5))
    assert box.half_widths[1] == pytest.approx(expect)


def test_rotated_box_contains_rotated_padding():
    cfg = ExperimentConfig(direction=(1.0, 1.0))
    n = 64
    base = ExperimentConfig().box(n)
    corners = np.array([[x, y] for x in (base.lo[0], base.hi[0]) for y in (base.lo[1], base.hi[1])])
    rotated = rotation_to(cfg.unit)(corners)
    assert cfg.box(n).contains(rotated, slack=1e-9).all()
    assert cfg.box(n).contains(cfg.endpoint(n)).all()


finite = st.floats(allow_nan=False, allow_infinity=False)
records_st = st.builds(
    ReplicateRecord,
    n=st.integers(1, 10**6),
    replicate_index=st.integers(0, 10**6),
    seed=st.integers(0, 2**64 - 1),
    t_n=st.none() | finite,
    wandering=st.none() | st.floats(0, 1e12),
    slab=st.dictionaries(finite.map(lambda v: repr(float(v))), st.none() | finite, max_size=5),
    flags=st.lists(st.sampled_from(["touched_boundary", "F_n_violated", "slab_missed", "failed"]), unique=True),
)


@settings(max_examples=1000, deadline=None)
@given(records_st)
def test_record_round_trip(rec):
    back = parse_records(record_line(rec))[0]
    assert back == rec
    assert record_line(back) == record_line(rec)
    assert set(json.loads(record_line(rec))) == {"n", "replicate_index", "seed", "t_n", "wandering", "slab", "flags"}


def test_record_rejects_extra_fields():
    line = json.loads(record_line(ReplicateRecord(1, 0, 0, 1.0, 0.0)))
    line["extra"] = 1
    with pytest.raises(ValueError):
        ReplicateRecord.from_dict(line)


def test_empty_outputs(tmp_path):
    persist(tmp_path, [], SMALL)
    assert (tmp_path / "records.jsonl").read_text() == ""
    assert (tmp_path / "summary.csv").read_text() == ",".join(SUMMARY_HEADER) + "\n"


def test_summary_matches_recomputation(tmp_path):
    recs = runner.run_records(SMALL)
    recs.append(ReplicateRecord(16, 99, 0, 1e6, 1.0, {}, ["touched_boundary"]))
    persist(tmp_path, recs, SMALL)
    rows = {int(r["n"]): r for r in read_summary(tmp_path / "summary.csv")}
    for n in SMALL.n_grid:
        lines = [json.loads(l) for l in (tmp_path / "records.jsonl").read_text().splitlines()]
        t = [l["t_n"] for l in lines if l["n"] == n and not l["flags"].count("touched_boundary")]
        w = sorted(l["wandering"] for l in lines if l["n"] == n and "touched_boundary" not in l["flags"])
        mean = sum(t) / len(t)
        var = sum((v - mean) ** 2 for v in t) / (len(t) - 1)
        assert float(rows[n]["mean_t"]) == pytest.approx(mean, rel=1e-12)
        assert float(rows[n]["var_t"]) == pytest.approx(var, rel=1e-10)
        assert float(rows[n]["se_t"]) == pytest.approx(math.sqrt(var / len(t)), rel=1e-10)
        assert float(rows[n]["median_wander"]) == pytest.approx(np.median(w))
        assert int(rows[n]["replicates"]) == len(t)


def test_worker_count_does_not_change_records(tmp_path):
    runner.run_experiment(SMALL, tmp_path / "one", workers=1)
    runner.run_experiment(SMALL, tmp_path / "eight", workers=8)
    a = (tmp_path / "one" / "records.jsonl").read_bytes()
    assert a == (tmp_path / "eight" / "records.jsonl").read_bytes()
    assert len(a.splitlines()) == 12


def test_resume_recomputes_only_missing(tmp_path, monkeypatch):
    full = tmp_path / "full"
    runner.run_experiment(SMALL, full)
    lines = (full / "records.jsonl").read_text().splitlines()
    crashed = tmp_path / "crashed"
    crashed.mkdir()
    (crashed / "config.json").write_text(SMALL.to_json())
    # an interrupted run leaves some records and a torn last line
    (crashed / "records.jsonl.partial").write_text("\n".join(lines[:7:2]) + "\n" + lines[9][:20])
    calls = []
    real = runner.run_replicate
    monkeypatch.setattr(runner, "run_replicate", lambda c, n, i: calls.append((n, i)) or real(c, n, i))
    runner.run_experiment(SMALL, crashed)
    assert len(calls) == 12 - 4
    assert (crashed / "records.jsonl").read_bytes() == (full / "records.jsonl").read_bytes()
    assert not (crashed / "records.jsonl.partial").exists()
    assert json.loads((crashed / "manifest.json").read_text())["resumed"]


def test_resume_refuses_other_config(tmp_path):
    (tmp_path / "config.json").write_text(SMALL.replace(master_seed=1).to_json())
    (tmp_path / "records.jsonl.partial").write_text("")
    with pytest.raises(ConfigError):
        runner.run_experiment(SMALL, tmp_path)


def test_manifest_contents(tmp_path):
    runner.run_experiment(SMALL, tmp_path)
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["config_hash"] == SMALL.hash
    assert man["completed_by_n"] == {"16": 6, "24": 6}
    assert {"tool_version", "started", "finished", "flag_counts"} <= set(man)
    assert len(read_records(tmp_path / "records.jsonl")) == man["records"]


def test_load_runs_refuses_mixed_hashes(tmp_path):
    persist(tmp_path / "a", [], SMALL)
    persist(tmp_path / "b", [], SMALL.replace(master_seed=5))
    with pytest.raises(ProvenanceError):
        load_runs([tmp_path / "a", tmp_path / "b"])
    digest, _ = load_runs([tmp_path / "a", tmp_path / "a"])
    assert digest == SMALL.hash


# command line


def test_cli_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err
    assert main([]) == 1


def test_cli_config_errors(tmp_path):
    assert main(["mu", "--alpha", "0.9", "--out", str(tmp_path)]) == 1
    assert main(["mu", "--config", str(tmp_path / "missing.json")]) == 1
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["mu", "--config", str(tmp_path / "bad.json")]) == 1


def test_cli_verify_quick(capsys):
    assert main(["verify", "--quick"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) >= 8
    assert all(line.endswith("PASS") for line in out)


def test_cli_mu_twice_is_byte_identical(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(ExperimentConfig(n_grid=(16, 32, 64), replicates=5, master_seed=3).to_json())
    assert main(["mu", "--config", str(cfg), "--out", str(tmp_path / "a"), "--workers", "1"]) == 0
    assert main(["mu", "--config", str(cfg), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    assert (tmp_path / "a" / "records.jsonl").read_bytes() == (tmp_path / "b" / "records.jsonl").read_bytes()
    mu = json.loads((tmp_path / "a" / "mu.json").read_text())
    assert mu["config_hash"] == ExperimentConfig.load(cfg).hash
    assert main(["report", str(tmp_path / "a"), str(tmp_path / "b")]) == 0


def test_cli_wander(tmp_path, capsys):
    assert main(["wander", "--n", "64", "--replicates", "100", "--seed", "7", "--out", str(tmp_path)]) == 0
    recs = read_records(tmp_path / "records.jsonl")
    assert len(recs) == 100
    assert np.median([r.wandering for r in recs]) > 0
    assert "median" in capsys.readouterr().out


def test_cli_env_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("EFPP_OUT", str(tmp_path / "env"))
    assert main(["gen", "--n", "16"]) == 0
    assert (tmp_path / "env" / "points.txt").exists()


def test_cli_geodesic_and_probe(tmp_path):
    assert main(["geodesic", "--n", "32", "--from", "1,1", "--to", "30,-2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "geodesic.txt").read_text().startswith("# efpp-geodesic total=")
    assert main(["geodesic", "--n", "32", "--to", "1,2,3", "--out", str(tmp_path)]) == 1
    assert main(["geodesic", "--n", "32", "--to", "500,0", "--out", str(tmp_path)]) == 1
    assert main(["probe", "--n", "64", "--replicates", "2", "--out", str(tmp_path)]) == 0
    assert len(json.loads((tmp_path / "probe.json").read_text())["by_n"]["64"]["values"]) == 2


def test_cli_gap_and_concentration(tmp_path):
    args = ["--n", "16,32,64", "--replicates", "8", "--out", str(tmp_path)]
    assert main(["gap", *args]) == 0
    with open(tmp_path / "gap.csv") as fh:
        assert len(list(csv.DictReader(fh))) == 3
    assert main(["concentration", *args]) == 0
    conc = json.loads((tmp_path / "concentration.json").read_text())
    assert set(conc["curves"]) == {"16", "32", "64"}


def test_cli_io_failure_marks_partial(tmp_path):
    out = tmp_path / "o"
    (out / "summary.csv").mkdir(parents=True)
    assert main(["mu", "--n", "16,32,64", "--replicates", "2", "--out", str(out)]) == 2
    assert (out / "summary.csv.partial").exists()
    assert (out / "records.jsonl.partial").exists()


def test_cli_report_mixed_hash(tmp_path):
    persist(tmp_path / "a", [], SMALL)
    persist(tmp_path / "b", [], SMALL.replace(alpha=2.0))
    assert main(["report", str(tmp_path / "a"), str(tmp_path / "b")]) == 1
