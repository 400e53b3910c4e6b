"""Experiment execution and run comparison.

A run directory holds one subdirectory per seed (flows.csv, ports.csv,
timeseries.csv, summary.json) plus a top-level manifest.json recording the
fully-resolved config and artifact version.  Re-running a manifest reproduces
the CSVs byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import json
import os
from dataclasses import asdict

from . import __version__
from .config import resolve, to_sim_config
from .metrics import RunMetrics
from .simulator import ConfigError, Simulation
from .sweep import memory_utilization_sweep, write_sweep_csv


class IncompatibleRuns(Exception):
    pass


def _run_network_seed(resolved: dict, seed: int, seed_dir: str) -> dict:
    sim = Simulation(to_sim_config(resolved), seed)
    metrics = sim.run()
    metrics.write(seed_dir)
    return metrics.summary()


def _run_sweep_seed(resolved: dict, seed: int, seed_dir: str) -> dict:
    ms = resolved["memory_sweep"]
    tr = resolved["tracker"]
    rows = memory_utilization_sweep(
        seed=seed,
        connections=ms["connections"],
        packets=ms["packets"],
        step_percent=ms["step_percent"],
        block_size_bits=tr["block_size_bits"],
        cap_blocks=tr["cap_blocks"],
        min_degree=ms["min_degree"],
        max_degree=ms["max_degree"],
    )
    os.makedirs(seed_dir, exist_ok=True)
    write_sweep_csv(rows, os.path.join(seed_dir, "sweep.csv"))
    crossings = [r.ooo_percent for r in rows
                 if r.hd_total_bytes_per_conn > r.static_total_bytes_per_conn]
    summary = {
        "rows": [asdict(r) for r in rows],
        "crossover_percent": crossings[0] if crossings else None,
        "counters": {"seed": seed},
    }
    with open(os.path.join(seed_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return summary


def _seed_worker(args) -> tuple[int, dict]:
    resolved, seed, seed_dir = args
    if resolved["experiment"] == "memory-sweep":
        return seed, _run_sweep_seed(resolved, seed, seed_dir)
    return seed, _run_network_seed(resolved, seed, seed_dir)


def run_experiment(config: dict, out_dir: str, seeds: list[int] | None = None,
                   workers: int = 1) -> dict:
    """Validate, run every seed, persist metrics; returns the manifest dict."""
    if "config" in config and "artifact_version" in config:
        config = config["config"]  # accept a manifest as the config source
    resolved = resolve(config)
    if resolved["experiment"] not in ("network", "memory-sweep"):
        raise ConfigError(f"unknown experiment {resolved['experiment']!r}")
    if seeds is not None:
        resolved = dict(resolved, seeds=list(seeds))
    if resolved["experiment"] == "network":
        to_sim_config(resolved)  # validate before touching the filesystem
    os.makedirs(out_dir, exist_ok=True)
    manifest = {"artifact_version": __version__, "config": resolved}
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    jobs = [(resolved, seed, os.path.join(out_dir, f"seed_{seed}"))
            for seed in resolved["seeds"]]
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = dict(pool.map(_seed_worker, jobs))
    else:
        results = dict(_seed_worker(job) for job in jobs)
    manifest["summaries"] = {str(seed): results[seed] for seed in resolved["seeds"]}
    return manifest


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


def _metric_value(summary: dict, metric: str):
    for key in (metric, f"{metric}_ns"):
        node = summary
        ok = True
        for part in key.split("."):
            if isinstance(node, dict) and part in node:
                node = node[part]
            else:
                ok = False
                break
        if ok and isinstance(node, (int, float)):
            return node
    raise IncompatibleRuns(f"metric {metric!r} not found in summary")


def _load_run(run_dir: str) -> dict[int, dict]:
    out = {}
    for entry in sorted(os.listdir(run_dir)):
        path = os.path.join(run_dir, entry, "summary.json")
        if entry.startswith("seed_") and os.path.exists(path):
            with open(path) as fh:
                out[int(entry.split("_", 1)[1])] = json.load(fh)
    if not out:
        raise IncompatibleRuns(f"no seed summaries under {run_dir}")
    return out


def compare(run_dirs: list[str], metric: str, baseline: str) -> dict:
    """Per-seed metric ratios of each run against the baseline run.

    Lower-is-better metrics give improvement_percent = (base - x) / base * 100.
    """
    if baseline not in run_dirs:
        run_dirs = [baseline] + list(run_dirs)
    summaries = {d: _load_run(d) for d in run_dirs}
    base = summaries[baseline]
    edges = {json.dumps(s.get("bucket_edges")) for runs in summaries.values()
             for s in runs.values() if "bucket_edges" in s}
    if len(edges) > 1:
        raise IncompatibleRuns("runs use different flow-size bucketings")
    rows = []
    for d in run_dirs:
        if d == baseline:
            continue
        shared = sorted(set(base) & set(summaries[d]))
        if not shared:
            raise IncompatibleRuns(f"no common seeds between {baseline} and {d}")
        per_seed = []
        for seed in shared:
            b = _metric_value(base[seed], metric)
            v = _metric_value(summaries[d][seed], metric)
            per_seed.append({
                "seed": seed,
                "baseline": b,
                "value": v,
                "ratio": v / b if b else None,
                "improvement_percent": (b - v) / b * 100 if b else None,
            })
        ratios = [r["ratio"] for r in per_seed if r["ratio"] is not None]
        imps = [r["improvement_percent"] for r in per_seed
                if r["improvement_percent"] is not None]
        rows.append({
            "run": d,
            "per_seed": per_seed,
            "mean_ratio": sum(ratios) / len(ratios) if ratios else None,
            "mean_improvement_percent": sum(imps) / len(imps) if imps else None,
        })
    return {"metric": metric, "baseline": baseline, "comparisons": rows}


def comparison_csv(result: dict) -> str:
    lines = ["run,seed,baseline,value,ratio,improvement_percent"]
    for row in result["comparisons"]:
        for s in row["per_seed"]:
            lines.append(
                f"{row['run']},{s['seed']},{s['baseline']},{s['value']},"
                f"{s['ratio']},{s['improvement_percent']}")
        lines.append(f"{row['run']},mean,,,{row['mean_ratio']},"
                     f"{row['mean_improvement_percent']}")
    return "\n".join(lines) + "\n"


def comparison_text(result: dict) -> str:
    out = [f"metric: {result['metric']}   baseline: {result['baseline']}"]
    for row in result["comparisons"]:
        out.append(f"  {row['run']}:")
        for s in row["per_seed"]:
            out.append(
                f"    seed {s['seed']}: {s['value']:.4g} vs {s['baseline']:.4g}"
                f"  (ratio {s['ratio']:.3f}, improvement "
                f"{s['improvement_percent']:.1f}%)")
        out.append(
            f"    mean ratio {row['mean_ratio']:.3f}, mean improvement "
            f"{row['mean_improvement_percent']:.1f}%")
    return "\n".join(out) + "\n"


def load_metrics(out_dir: str, seed: int) -> RunMetrics:
    return RunMetrics.load(os.path.join(out_dir, f"seed_{seed}"))
