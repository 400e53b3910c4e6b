"""Acceptance suite: one test per criterion, printing a PASS line each.

Simulation scenarios are cached per (config, seed) and shared between
criteria; seeds run in parallel workers.  Run with ``pytest -v -rA`` to see
the per-criterion lines.
"""

import concurrent.futures
import random
from dataclasses import replace

import pytest

from reordernet.bitmap import UNCAPPED, HdBitmap, Track
from reordernet.memctrl import ControllerConfig, MemController
from reordernet.simulator import (
    SimConfig,
    Simulation,
    analytic_idle_fct_ns,
    analytic_rtt_ns,
    data_wire_bytes,
)
from reordernet.sweep import memory_utilization_sweep

from .oracles import SetTrackerOracle
from .test_memctrl import _check_invariants, _fuzz

SEEDS = [1, 2, 3, 4, 5]
DESK_CLOS = {"kind": "clos", "spines": 4, "leaves": 4, "hosts_per_leaf": 8}
JELLYFISH = {"kind": "jellyfish", "switches": 20, "degree": 3, "hosts": 32, "seed": 1}
INCAST_CLOS = {"kind": "clos", "spines": 4, "leaves": 4, "hosts_per_leaf": 14}

_CACHE: dict = {}


def _run_one(args):
    cfg, seed = args
    return Simulation(cfg, seed).run()


def runs(cfg: SimConfig, seeds=SEEDS):
    """Summaries plus raw metrics for each seed, memoized across criteria."""
    key = (repr(cfg), tuple(seeds))
    if key not in _CACHE:
        jobs = [(cfg, s) for s in seeds]
        with concurrent.futures.ProcessPoolExecutor(max_workers=2) as pool:
            metrics = list(pool.map(_run_one, jobs))
        _CACHE[key] = [(m, m.summary()) for m in metrics]
    return _CACHE[key]


def clos80(flows=300, **kw):
    base = dict(topology=DESK_CLOS, timeout_rtt_mult=8.0,
                traffic={"kind": "cdf", "cdf": "heavy_tailed", "load": 0.8,
                         "flows": flows})
    base.update(kw)
    return SimConfig(**base)


def _fct_means(results):
    return [s["fct_mean_ns"] for _, s in results]


def _mean(vals):
    return sum(vals) / len(vals)


# -- 1: reference trace ---------------------------------------------------------


def test_acceptance_01_trace_reproduction():
    bm = HdBitmap(0, 8, 2)
    heads = []
    for seq in (0, 6, 8, 11, 15, 1, 2, 3, 4, 5, 7):
        bm.track(seq)
        heads.append(bm.head)
    assert heads[0] == 1          # head 0 -> 1 after seq 0
    assert heads[-1] == 9         # head 1 -> 9 after the 1..7 batch
    assert bm.grow_events == 1    # one growth event, at seq 11
    assert bm.merge_events == 1   # one linear -> circular merge
    assert bm.circular_size == bm.dynamic_size == 2
    print("ACCEPTANCE 1 PASS: trace heads 0->1->9, one growth, one merge")


# -- 2: oracle equivalence --------------------------------------------------------


def test_acceptance_02_oracle_equivalence():
    rng = random.Random(20260810)
    counts = {8: 3334, 64: 3333, 256: 3333}
    checked = 0
    for n, reps in counts.items():
        for _ in range(reps):
            block_bits = rng.choice([8, 16, 32, 64])
            if rng.random() < 0.3:
                cap = UNCAPPED
                cap_bits = None
            else:
                min_cap = -(-n // block_bits)
                cap = rng.randrange(min_cap, min_cap + 6)
                cap_bits = cap * block_bits
            arrivals = list(range(n))
            rng.shuffle(arrivals)
            bm = HdBitmap(0, block_bits, cap)
            oracle = SetTrackerOracle(0, cap_bits)
            for seq in arrivals:
                out = bm.track(seq)
                want = oracle.feed(seq)
                got = {Track.IN_ORDER: "in_order", Track.TRACKED: "ooo",
                       Track.GREW: "ooo", Track.DUPLICATE: "duplicate",
                       Track.UNTRACKABLE: "untrackable"}[out]
                assert got == want
                assert bm.head == oracle.head
                checked += 1
            assert bm.head == n
    print(f"ACCEPTANCE 2 PASS: 10,000 permutations, {checked} steps, 100% match")


# -- 3: memory-utilization trend ---------------------------------------------------


def test_acceptance_03_memory_trend():
    rows = memory_utilization_sweep(seed=1)
    for r in rows:
        assert r.hd_bitmap_bytes_per_conn <= r.static_bitmap_bytes_per_conn, (
            f"bitmap bytes exceed static at {r.ooo_percent}%")
    assert rows[0].hd_total_bytes_per_conn == 0.0
    crossings = [r.ooo_percent for r in rows
                 if r.hd_total_bytes_per_conn > r.static_total_bytes_per_conn]
    assert crossings, "dynamic total never crosses the static 41 B/connection"
    assert 50 <= crossings[0] <= 70, f"crossover at {crossings[0]}%"
    print(f"ACCEPTANCE 3 PASS: bitmap always <= static, 0 B at 0% OOO, "
          f"total crosses 41 B at {crossings[0]}% OOO")


# -- 4: static-vs-dynamic parity -----------------------------------------------------


def test_acceptance_04_static_dynamic_parity():
    hd = runs(clos80(lb="drill", tracker="hd"))
    static = runs(clos80(lb="drill", tracker="static", static_bits=128))
    fct_hd, fct_st = _mean(_fct_means(hd)), _mean(_fct_means(static))
    rel = abs(fct_hd - fct_st) / fct_st
    assert rel <= 0.10, f"mean FCT differs by {rel:.1%}"
    mem_hd = _mean([s["bitmap_bytes_mean"] for _, s in hd])
    mem_st = _mean([s["bitmap_bytes_mean"] for _, s in static])
    assert mem_hd < mem_st, f"{mem_hd} !< {mem_st}"
    print(f"ACCEPTANCE 4 PASS: FCT within {rel:.1%} (<=10%), bitmap bytes "
          f"{mem_hd:.0f} B < {mem_st:.0f} B")


# -- 5: recovery-trigger separation ---------------------------------------------------


def test_acceptance_05_recovery_triggers():
    none = runs(clos80(flows=150, lb="spray", tracker="none"))
    hd = runs(clos80(flows=150, lb="spray", tracker="hd"))
    t_none = sum(s["recovery_triggers"] for _, s in none)
    t_hd = sum(s["recovery_triggers"] for _, s in hd)
    assert t_none >= 10 * max(1, t_hd), f"{t_none} vs {t_hd}"
    print(f"ACCEPTANCE 5 PASS: triggers {t_none} (no ordering) >= 10x {t_hd} "
          f"(dynamic bitmap)")


# -- 6: FCT direction ------------------------------------------------------------------


def test_acceptance_06_fct_direction():
    spray_hd = _fct_means(runs(clos80(lb="spray", tracker="hd")))
    ecmp = _fct_means(runs(clos80(lb="ecmp", tracker="none")))
    ideal = _fct_means(runs(clos80(lb="spray", tracker="ideal")))
    wins = sum(1 for a, b in zip(spray_hd, ecmp) if a < b)
    assert wins >= 4, f"spray+hd beats ecmp in only {wins}/5 seeds"
    rel = abs(_mean(spray_hd) - _mean(ideal)) / _mean(ideal)
    assert rel <= 0.15, f"spray+hd differs from ideal layer by {rel:.1%}"
    print(f"ACCEPTANCE 6 PASS: spray+hd < ecmp in {wins}/5 seeds; "
          f"within {rel:.1%} of the ideal ordering layer")


# -- 7: reordering-factor trends ---------------------------------------------------------


def _bucket_reorder(summary, keys, invert=False):
    small = ("<=1024", "<=2048", "<=4096")
    mid = ("<=8192", "<=16384", "<=32768", "<=65536")
    sel = []
    for k, v in summary["buckets"].items():
        is_small = k in small
        is_big = k not in small + mid
        if (keys == "small" and is_small) or (keys == "big" and is_big):
            sel.append(v)
    flows = sum(b["flows"] for b in sel)
    return sum(b["reordering_fraction"] * b["flows"] for b in sel) / flows


def test_acceptance_07_reordering_trends():
    cfg80 = clos80(lb="spray", tracker="hd", window_packets=36,
                   timeout_rtt_mult=30.0)
    cfg30 = replace(cfg80, traffic=dict(cfg80.traffic, load=0.3))
    r80, r30 = runs(cfg80), runs(cfg30)
    frac80 = _mean([s["reordering_fraction"] for _, s in r80])
    frac30 = _mean([s["reordering_fraction"] for _, s in r30])
    assert frac80 > frac30, f"{frac80} !> {frac30}"
    big = _mean([_bucket_reorder(s, "big") for _, s in r80])
    small = _mean([_bucket_reorder(s, "small") for _, s in r80])
    assert big > small, f">=64KB {big} !> <=4KB {small}"
    print(f"ACCEPTANCE 7 PASS: reordering {frac80:.3f}@80% > {frac30:.3f}@30%; "
          f">=64KB flows {big:.3f} > <=4KB flows {small:.3f}")


# -- 8: PFC direction ----------------------------------------------------------------------


def test_acceptance_08_pfc_direction():
    ecmp = runs(clos80(lb="ecmp", tracker="none"))
    spray = runs(clos80(lb="spray", tracker="hd"))
    wins = sum(1 for (_, a), (_, b) in zip(ecmp, spray)
               if a["paused_ns_host_ports"] > b["paused_ns_host_ports"])
    assert wins >= 4, f"ecmp pauses server ports more in only {wins}/5 seeds"
    for m, s in list(ecmp) + list(spray):
        assert m.counters["dropped_data"] == 0
        assert m.counters["dropped_ctrl"] == 0
    print(f"ACCEPTANCE 8 PASS: server-port pause ecmp > spray+hd in {wins}/5 "
          f"seeds; lossless runs recorded zero drops")


# -- 9: jellyfish direction -------------------------------------------------------------------


def _jelly_cfg(lb, tracker):
    return SimConfig(topology=JELLYFISH, pfc=False, buffer_bytes=4_000_000,
                     lb=lb, tracker=tracker, timeout_rtt_mult=30.0,
                     horizon_ns=8_000_000,
                     traffic={"kind": "cdf", "cdf": "heavy_tailed",
                              "load": 0.8, "flows": 4000})


def test_acceptance_09_jellyfish_throughput():
    fksp = runs(_jelly_cfg("fksp", "none"))
    po2 = runs(_jelly_cfg("po2", "hd"))
    ratios = []
    for (mf, _), (mp, _) in zip(fksp, po2):
        thr_f = mf.counters["delivered_payload_bytes"]
        thr_p = mp.counters["delivered_payload_bytes"]
        ratios.append(thr_p / thr_f)
    mean_ratio = _mean(ratios)
    assert mean_ratio >= 1.5, f"po2/fksp throughput ratio {mean_ratio:.2f}"
    print(f"ACCEPTANCE 9 PASS: po2+hd over fksp throughput ratio "
          f"{mean_ratio:.2f} (>= 1.5) per seed {[round(r, 2) for r in ratios]}")


# -- 10: incast direction ------------------------------------------------------------------------


def _incast_cfg(deflection, tracker, load):
    return SimConfig(topology=INCAST_CLOS, pfc=False, deflection=deflection,
                     tracker=tracker, recovery="sr", buffer_bytes=150_000,
                     port_queue_cap_bytes=25_000, timeout_rtt_mult=8.0,
                     horizon_ns=2_000_000_000,
                     traffic={"kind": "incast", "fan_in": 50,
                              "flow_bytes": 40_000, "epochs": 6, "load": load})


def test_acceptance_10_incast_deflection():
    lines = []
    for load in (0.3, 0.5):
        defl = runs(_incast_cfg(True, "hd", load))
        irn = runs(_incast_cfg(False, "none", load))
        q_defl = _mean([s["qct_mean_ns"] for _, s in defl])
        q_irn = _mean([s["qct_mean_ns"] for _, s in irn])
        lines.append((load, q_defl, q_irn))
    load, q_defl, q_irn = lines[-1]  # highest tested load
    assert q_defl <= q_irn, f"deflection QCT {q_defl} > {q_irn} at {load:.0%}"
    print(f"ACCEPTANCE 10 PASS: 50:1 incast at {load:.0%}: deflection+hd QCT "
          f"{q_defl / 1e6:.2f} ms <= selective-repeat-alone {q_irn / 1e6:.2f} ms")


# -- 11: failure resilience -----------------------------------------------------------------------


def _fail_cfg(policy, tracker, frac):
    return SimConfig(topology=DESK_CLOS, lb=policy, tracker=tracker,
                     timeout_rtt_mult=8.0, horizon_ns=1_000_000_000,
                     traffic={"kind": "cdf", "cdf": "heavy_tailed",
                              "load": 0.5, "flows": 600},
                     failures={"interval_ns": 500_000, "fraction": frac})


def _hit_slowdowns(results, cfg):
    wire = data_wire_bytes(cfg.payload_bytes, True)
    vals = []
    for m, _ in results:
        for f in m.flows:
            if f.failure_hit and f.completed:
                ideal = analytic_idle_fct_ns(f.packets, f.hops, wire,
                                             cfg.link_bw_bps, cfg.prop_ns)
                vals.append(f.fct_ns / ideal)
    return vals


def test_acceptance_11_failure_resilience():
    gaps = {}
    for frac in (0.05, 0.10):
        e_cfg = _fail_cfg("ecmp", "none", frac)
        s_cfg = _fail_cfg("spray", "hd", frac)
        ecmp = _hit_slowdowns(runs(e_cfg), e_cfg)
        spray = _hit_slowdowns(runs(s_cfg), s_cfg)
        assert ecmp and spray, "no failure-affected flows measured"
        gaps[frac] = _mean(ecmp) - _mean(spray)
    assert gaps[0.05] > 0, f"gap at 5% is {gaps[0.05]:.2f}"
    assert gaps[0.10] >= gaps[0.05], f"gap shrank: {gaps}"
    print(f"ACCEPTANCE 11 PASS: slowdown gap ecmp-vs-spray+hd grows "
          f"{gaps[0.05]:.1f} -> {gaps[0.10]:.1f} from 5% to 10% failures")


# -- 12: write-hold overhead -----------------------------------------------------------------------


def test_acceptance_12_write_hold_one_rtt():
    fcts = {}
    hops = None
    for hold in (False, True):
        cfg = SimConfig(topology=DESK_CLOS, write_hold=hold,
                        traffic={"kind": "single", "src": "h0", "dst": "h31",
                                 "size_bytes": 10_000, "verb": "write"})
        sim = Simulation(cfg, 1)
        fcts[hold] = sim.run().flows[0].fct_ns
        hops = sim.flows[0].hops
    wire = data_wire_bytes(1000, True)
    rtt = analytic_rtt_ns(hops, wire, 10_000_000_000, 1000)
    diff = fcts[True] - fcts[False]
    assert diff == rtt, f"hold overhead {diff} ns != analytic rtt {rtt} ns"
    print(f"ACCEPTANCE 12 PASS: write-hold overhead is exactly one RTT "
          f"({rtt} ns)")


# -- 13: memory-controller invariants ----------------------------------------------------------------


def test_acceptance_13_controller_fuzz():
    cfg = ControllerConfig(total_blocks=512, max_connections=24)
    traces = []
    for _ in range(2):
        ctrl = MemController(cfg)
        traces.append(_fuzz(ctrl, 100_000, seed=42))
        _check_invariants(ctrl)
    assert traces[0] == traces[1], "allocation indices differ across reruns"
    print(f"ACCEPTANCE 13 PASS: 100,000-step fuzz clean, deterministic "
          f"({len(traces[0])} operations)")
