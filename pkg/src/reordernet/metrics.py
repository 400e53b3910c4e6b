"""Measurement records, CSV/JSON persistence, and summary computation.

Summary scalars are always recomputed from the raw records, so a summary
loaded from disk must equal one recomputed from the accompanying CSVs.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import asdict, dataclass, fields

DEFAULT_BUCKET_EDGES = [2**k for k in range(10, 23)]  # 1 KB .. 4 MB


@dataclass(slots=True)
class FlowRecord:
    flow_id: int
    src: str
    dst: str
    size_bytes: int
    verb: str
    query_id: int | None
    start_ns: int
    fct_ns: int | None
    packets: int
    hops: int
    data_arrivals: int
    reordered_arrivals: int
    retransmissions: int
    recovery_triggers: int
    max_bitmap_bytes: int
    sack_count: int
    nack_count: int
    failure_hit: bool
    completed: bool


@dataclass(slots=True)
class PortRecord:
    port: str
    kind: str  # host | switch
    paused_ns: int
    pause_events: int
    tx_bytes: int
    tx_packets: int
    drops: int


@dataclass(slots=True)
class TimeSample:
    time_ns: int
    conn_count: int
    bitmap_bytes: int
    metadata_bytes: int
    total_bytes: int
    delivered_bytes: int
    throughput_bps: float


@dataclass
class RunMetrics:
    seed: int
    flows: list[FlowRecord]
    ports: list[PortRecord]
    samples: list[TimeSample]
    counters: dict

    # -- persistence --------------------------------------------------------

    def write(self, out_dir: str, bucket_edges: list[int] | None = None) -> None:
        os.makedirs(out_dir, exist_ok=True)
        _write_csv(os.path.join(out_dir, "flows.csv"), self.flows, FlowRecord)
        _write_csv(os.path.join(out_dir, "ports.csv"), self.ports, PortRecord)
        _write_csv(os.path.join(out_dir, "timeseries.csv"), self.samples, TimeSample)
        with open(os.path.join(out_dir, "summary.json"), "w") as fh:
            json.dump(self.summary(bucket_edges), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, run_dir: str) -> "RunMetrics":
        flows = _read_csv(os.path.join(run_dir, "flows.csv"), FlowRecord)
        ports = _read_csv(os.path.join(run_dir, "ports.csv"), PortRecord)
        samples = _read_csv(os.path.join(run_dir, "timeseries.csv"), TimeSample)
        summary_path = os.path.join(run_dir, "summary.json")
        counters = {}
        if os.path.exists(summary_path):
            with open(summary_path) as fh:
                counters = json.load(fh).get("counters", {})
        return cls(seed=counters.get("seed", 0), flows=flows, ports=ports,
                   samples=samples, counters=counters)

    # -- summary --------------------------------------------------------------

    def summary(self, bucket_edges: list[int] | None = None) -> dict:
        edges = bucket_edges or DEFAULT_BUCKET_EDGES
        done = [f for f in self.flows if f.completed]
        fcts = [f.fct_ns for f in done]
        out = {
            "bucket_edges": edges,
            "flows_total": len(self.flows),
            "flows_completed": len(done),
            "fct_mean_ns": _mean(fcts),
            "fct_median_ns": _percentile(fcts, 50),
            "fct_p99_ns": _percentile(fcts, 99),
            "buckets": {},
            "counters": dict(self.counters),
        }
        for lo, hi, label in _buckets(edges):
            sub = [f for f in done if lo < f.size_bytes <= hi]
            vals = [f.fct_ns for f in sub]
            reord = sum(f.reordered_arrivals for f in sub)
            arr = sum(f.data_arrivals for f in sub)
            out["buckets"][label] = {
                "flows": len(sub),
                "fct_mean_ns": _mean(vals),
                "fct_median_ns": _percentile(vals, 50),
                "fct_p99_ns": _percentile(vals, 99),
                "reordering_fraction": reord / arr if arr else 0.0,
            }
        arr = sum(f.data_arrivals for f in self.flows)
        reord = sum(f.reordered_arrivals for f in self.flows)
        out["reordering_fraction"] = reord / arr if arr else 0.0
        out["recovery_triggers"] = sum(f.recovery_triggers for f in self.flows)
        out["retransmissions"] = sum(f.retransmissions for f in self.flows)
        out["sack_count"] = sum(f.sack_count for f in self.flows)
        out["nack_count"] = sum(f.nack_count for f in self.flows)
        out["paused_ns_host_ports"] = sum(
            p.paused_ns for p in self.ports if p.kind == "host")
        out["paused_ns_switch_ports"] = sum(
            p.paused_ns for p in self.ports if p.kind == "switch")
        out["port_drops"] = sum(p.drops for p in self.ports)
        out["bitmap_bytes_mean"] = _mean([s.bitmap_bytes for s in self.samples])
        out["mem_total_bytes_mean"] = _mean([s.total_bytes for s in self.samples])
        if done:
            span = max(f.start_ns + f.fct_ns for f in done) - min(
                f.start_ns for f in self.flows)
            out["aggregate_throughput_bps"] = (
                sum(f.size_bytes for f in done) * 8 / (span * 1e-9) if span else None)
        else:
            out["aggregate_throughput_bps"] = None
        qcts = self._qcts()
        if qcts:
            vals = sorted(qcts.values())
            out["qct_mean_ns"] = _mean(vals)
            out["qct_p99_ns"] = _percentile(vals, 99)
            out["queries_completed"] = len(vals)
        return out

    def _qcts(self) -> dict[int, int]:
        """Query completion time: last flow completion per fully-done query."""
        groups: dict[int, list[FlowRecord]] = {}
        for f in self.flows:
            if f.query_id is not None:
                groups.setdefault(f.query_id, []).append(f)
        out = {}
        for qid, members in groups.items():
            if all(m.completed for m in members):
                out[qid] = max(m.start_ns + m.fct_ns for m in members) - min(
                    m.start_ns for m in members
                )
        return out


def _buckets(edges: list[int]):
    lo = 0
    for hi in edges:
        yield lo, hi, f"<={hi}"
        lo = hi
    yield lo, float("inf"), f">{edges[-1]}"


def _mean(vals) -> float | None:
    return sum(vals) / len(vals) if vals else None


def _percentile(vals, pct) -> float | None:
    if not vals:
        return None
    ordered = sorted(vals)
    idx = max(0, min(len(ordered) - 1, -(-pct * len(ordered) // 100) - 1))
    return ordered[idx]


_BOOLS = {"True": True, "False": False}


def _write_csv(path: str, rows, cls) -> None:
    names = [f.name for f in fields(cls)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in rows:
            d = asdict(row) if not hasattr(row, "__slots__") else {
                n: getattr(row, n) for n in names}
            w.writerow(["" if d[n] is None else d[n] for n in names])


def _read_csv(path: str, cls) -> list:
    spec = {f.name: f.type for f in fields(cls)}
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for raw in reader:
            kw = {}
            for name, typ in spec.items():
                val = raw[name]
                if val == "":
                    kw[name] = None
                elif typ in ("int", "int | None"):
                    kw[name] = int(val)
                elif typ == "float":
                    kw[name] = float(val)
                elif typ == "bool":
                    kw[name] = _BOOLS[val]
                else:
                    kw[name] = val
            out.append(cls(**kw))
    return out
