"""Persistence of replicate records, the per-n summary and run manifests."""

from __future__ import annotations

import csv
import io
import json
import os
from pathlib import Path

import numpy as np

from . import __version__
from .estimators import ReplicateRecord, usable

RECORDS = "records.jsonl"
SUMMARY = "summary.csv"
MANIFEST = "manifest.json"
CONFIG = "config.json"
PARTIAL_SUFFIX = ".partial"
SUMMARY_HEADER = ["n", "mean_t", "se_t", "var_t", "median_wander", "q90_wander", "replicates"]


class ProvenanceError(ValueError):
    """Outputs from different configurations were mixed."""


def record_line(rec: ReplicateRecord) -> str:
    # json emits the shortest round-trip repr for floats
    return json.dumps(rec.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)


def parse_records(text: str) -> list[ReplicateRecord]:
    return [ReplicateRecord.from_dict(json.loads(ln)) for ln in text.splitlines() if ln.strip()]


def read_records(path) -> list[ReplicateRecord]:
    return parse_records(Path(path).read_text())


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except OSError:
        # leave a marker so nobody mistakes a truncated file for a result
        path.with_name(path.name + PARTIAL_SUFFIX).touch(exist_ok=True)
        raise


def _fmt(x) -> str:
    return "" if x is None or not np.isfinite(x) else repr(float(x))


def summary_rows(records) -> list[list[str]]:
    rows = []
    for n in sorted({r.n for r in records}):
        good = usable(r for r in records if r.n == n)
        t = np.asarray([r.t_n for r in good], dtype=float)
        w = np.asarray([r.wandering for r in good if r.wandering is not None], dtype=float)
        var = float(np.var(t, ddof=1)) if t.size > 1 else None
        rows.append([
            str(n),
            _fmt(float(t.mean()) if t.size else None),
            _fmt(float(np.sqrt(var / t.size)) if var is not None else None),
            _fmt(var),
            _fmt(float(np.median(w)) if w.size else None),
            _fmt(float(np.percentile(w, 90)) if w.size else None),
            str(int(t.size)),
        ])
    return rows


def summary_csv(records) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    writer.writerows(summary_rows(records))
    return buf.getvalue()


def read_summary(path) -> list[dict]:
    with Path(path).open() as fh:
        return list(csv.DictReader(fh))


def persist(out_dir, records, config, extra: dict | None = None) -> Path:
    """Write ``records.jsonl``, ``summary.csv``, ``config.json`` and ``manifest.json``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    records = sorted(records, key=lambda r: (r.n, r.replicate_index))
    _atomic_write(out / RECORDS, "".join(record_line(r) + "\n" for r in records))
    _atomic_write(out / SUMMARY, summary_csv(records))
    _atomic_write(out / CONFIG, config.to_json() + "\n")
    per_n, failures = {}, {}
    for r in records:
        per_n[str(r.n)] = per_n.get(str(r.n), 0) + (r.t_n is not None)
        for f in r.flags:
            failures[f] = failures.get(f, 0) + 1
    manifest = {
        "config_hash": config.hash, "tool_version": __version__, "records": len(records),
        "completed_by_n": per_n, "flag_counts": failures, "complete": True,
    }
    manifest.update(extra or {})
    _atomic_write(out / MANIFEST, json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return out


def read_manifest(out_dir) -> dict:
    return json.loads((Path(out_dir) / MANIFEST).read_text())


def load_runs(dirs) -> tuple[str, list[ReplicateRecord]]:
    """Records from several output directories; all must share one config hash."""
    hashes, records = set(), []
    for d in dirs:
        hashes.add(read_manifest(d)["config_hash"])
        records.extend(read_records(Path(d) / RECORDS))
    if len(hashes) != 1:
        raise ProvenanceError(f"refusing to combine outputs with config hashes {sorted(hashes)}")
    return hashes.pop(), records
