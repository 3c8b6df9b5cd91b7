"""Replicate execution, with a process pool and crash-resume."""

from __future__ import annotations

import json
import multiprocessing as mp
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import ConfigError, ExperimentConfig
from .estimators import ReplicateRecord, record_from_geodesic
from .geodesic import geodesic
from .poisson import CapacityError, EmptySampleError, SeedPolicy, sample_poisson
from .records import CONFIG, PARTIAL_SUFFIX, RECORDS, parse_records, persist, record_line


def replicate_seed(config: ExperimentConfig, n: int, index: int) -> SeedPolicy:
    return SeedPolicy(config.master_seed, index, stream=n)


def replicate_sample(config: ExperimentConfig, n: int, index: int):
    return sample_poisson(config.box(n), config.intensity, replicate_seed(config, n, index))


def run_replicate(config: ExperimentConfig, n: int, index: int) -> ReplicateRecord:
    """One geodesic from the origin to ``n u``; solver failures become a ``failed`` flag."""
    policy = replicate_seed(config, n, index)
    try:
        sample = sample_poisson(config.box(n), config.intensity, policy)
        g = geodesic(sample, np.zeros(config.d), config.endpoint(n), config.alpha)
        psi = config.psi
        psi_n = float(psi(n))
        levels = psi.slab_levels(n, config.lambda_count)
        _, empty = sample.cover
        return record_from_geodesic(
            g, n, index, policy.seed, levels, psi_n,
            empty_ball=empty, psi_alpha=psi_n ** (1 / config.alpha), direction=config.direction,
        )
    except (CapacityError, EmptySampleError, RuntimeError, MemoryError) as exc:
        return ReplicateRecord(n, index, policy.seed, None, None, {}, ["failed", f"error={type(exc).__name__}"])


def _task(args):
    config, n, index = args
    return run_replicate(config, n, index)


def _jobs(config: ExperimentConfig, skip=frozenset()):
    return [(config, n, i) for n in config.n_grid for i in range(config.replicates) if (n, i) not in skip]


def _iterate(jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        for job in jobs:
            yield _task(job)
        return
    with mp.get_context("fork").Pool(workers) as pool:
        yield from pool.imap_unordered(_task, jobs, chunksize=max(1, len(jobs) // (8 * workers)))


def run_records(config: ExperimentConfig, workers: int = 1) -> list[ReplicateRecord]:
    """All replicates of the grid, sorted by ``(n, replicate_index)``."""
    out = list(_iterate(_jobs(config), workers))
    return sorted(out, key=lambda r: (r.n, r.replicate_index))


def run_experiment(config: ExperimentConfig, out_dir, workers: int = 1) -> list[ReplicateRecord]:
    """Run the grid into ``out_dir``, resuming from ``records.jsonl.partial`` if present.

    Each finished replicate is appended to the partial file immediately, so an
    interrupted run loses at most the replicates in flight.
    """
    started = datetime.now(timezone.utc).isoformat()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    partial = out / (RECORDS + PARTIAL_SUFFIX)
    cfg_path = out / CONFIG
    done: dict = {}
    if partial.exists():
        if not cfg_path.exists() or ExperimentConfig.load(cfg_path).hash != config.hash:
            raise ConfigError(f"{partial} belongs to a different configuration")
        try:
            recs = parse_records(partial.read_text())
        except (ValueError, KeyError):
            # drop a torn final line from a crash mid-write
            lines = partial.read_text().splitlines()[:-1]
            recs = parse_records("\n".join(lines))
        done = {(r.n, r.replicate_index): r for r in recs}
        partial.write_text("".join(record_line(r) + "\n" for r in done.values()))
    else:
        cfg_path.write_text(config.to_json() + "\n")
    jobs = _jobs(config, skip=set(done))
    with partial.open("a") as fh:
        for rec in _iterate(jobs, workers):
            done[(rec.n, rec.replicate_index)] = rec
            fh.write(record_line(rec) + "\n")
            fh.flush()
    records = sorted(done.values(), key=lambda r: (r.n, r.replicate_index))
    finished = datetime.now(timezone.utc).isoformat()
    persist(out, records, config, {"started": started, "finished": finished, "resumed": len(jobs) < len(done)})
    partial.unlink()
    return records


def load_or_run(config: ExperimentConfig, out_dir, workers: int = 1) -> list[ReplicateRecord]:
    """Reuse a finished run in ``out_dir`` with the same config hash, else run it."""
    from .records import MANIFEST, read_records

    out = Path(out_dir)
    man = out / MANIFEST
    if man.exists() and (out / RECORDS).exists():
        meta = json.loads(man.read_text())
        if meta.get("config_hash") == config.hash and meta.get("complete"):
            return read_records(out / RECORDS)
    return run_experiment(config, out, workers)
