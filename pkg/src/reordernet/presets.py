"""Named desk-scale experiment presets.

Each preset expands to one or more (cell_name, config) pairs; cells run as
independent experiments under one output directory.  These mirror the
evaluation scenarios at a scale that finishes on a laptop; every parameter
remains overridable.
"""

from __future__ import annotations

import copy

DESK_CLOS = {"kind": "clos", "spines": 4, "leaves": 4, "hosts_per_leaf": 8}
INCAST_CLOS = {"kind": "clos", "spines": 4, "leaves": 4, "hosts_per_leaf": 14}
DESK_FATTREE = {"kind": "fattree", "k": 4}
# Same switch count and per-switch port budget as the 4-ary fat-tree, with
# the reference evaluation's host density (1.6 hosts per switch).
DESK_JELLYFISH = {"kind": "jellyfish", "switches": 20, "degree": 3, "hosts": 32, "seed": 1}


def _cfg(**kw) -> dict:
    base: dict = {"topology": dict(DESK_CLOS)}
    base.update(copy.deepcopy(kw))
    return base


def _cells_lb_sweep() -> list[tuple[str, dict]]:
    cells = []
    for load in (0.3, 0.5, 0.8):
        for policy in ("ecmp", "spray", "drill", "po2"):
            for tracker in ("none", "hd", "ideal"):
                name = f"load{int(load * 100)}_{policy}_{tracker}"
                cells.append((name, _cfg(
                    lb={"policy": policy},
                    tracker={"kind": tracker},
                    traffic={"load": load, "flows": 300},
                )))
    return cells


def _cells_static_vs_dynamic() -> list[tuple[str, dict]]:
    dyn = _cfg(lb={"policy": "drill"}, tracker={"kind": "hd"},
               traffic={"load": 0.8, "flows": 300})
    static = _cfg(lb={"policy": "drill"},
                  tracker={"kind": "static", "static_bits": 128},
                  traffic={"load": 0.8, "flows": 300})
    return [("drill80_hd", dyn), ("drill80_static16B", static)]


def _cells_recovery_triggers() -> list[tuple[str, dict]]:
    return [
        ("spray80_none", _cfg(lb={"policy": "spray"}, tracker={"kind": "none"},
                              traffic={"load": 0.8, "flows": 250})),
        ("spray80_hd", _cfg(lb={"policy": "spray"}, tracker={"kind": "hd"},
                            traffic={"load": 0.8, "flows": 250})),
    ]


def _cells_jellyfish() -> list[tuple[str, dict]]:
    common = {"traffic": {"load": 0.8, "flows": 300},
              "switch": {"pfc": False, "buffer_bytes": 4_000_000}}
    return [
        ("fattree_ecmp", _cfg(topology=dict(DESK_FATTREE),
                              lb={"policy": "ecmp"}, tracker={"kind": "none"},
                              **copy.deepcopy(common))),
        ("jellyfish_fksp", _cfg(topology=dict(DESK_JELLYFISH),
                                lb={"policy": "fksp"}, tracker={"kind": "none"},
                                **copy.deepcopy(common))),
        ("jellyfish_po2_hd", _cfg(topology=dict(DESK_JELLYFISH),
                                  lb={"policy": "po2"}, tracker={"kind": "hd"},
                                  **copy.deepcopy(common))),
    ]


def _cells_incast() -> list[tuple[str, dict]]:
    cells = []
    for load in (0.1, 0.3, 0.5):
        traffic = {"kind": "incast", "fan_in": 50, "flow_bytes": 40_000,
                   "epochs": 8, "load": load}
        lossy = {"pfc": False, "buffer_bytes": 150_000,
                 "port_queue_cap_bytes": 25_000}
        cells.append((f"incast{int(load * 100)}_deflect_hd", _cfg(
            topology=dict(INCAST_CLOS),
            switch=dict(lossy, deflection=True),
            tracker={"kind": "hd"},
            transport={"recovery": "sr"},
            traffic=traffic,
            horizon_ns=2_000_000_000,
        )))
        cells.append((f"incast{int(load * 100)}_irn", _cfg(
            topology=dict(INCAST_CLOS),
            switch=dict(lossy),
            tracker={"kind": "none"},
            transport={"recovery": "sr"},
            traffic=traffic,
            horizon_ns=2_000_000_000,
        )))
    return cells


def _cells_failures() -> list[tuple[str, dict]]:
    cells = []
    for frac in (0.01, 0.05, 0.10):
        for name, policy, tracker in (("ecmp_none", "ecmp", "none"),
                                      ("spray_hd", "spray", "hd")):
            cells.append((f"fail{int(frac * 100):02d}_{name}", _cfg(
                lb={"policy": policy},
                tracker={"kind": tracker},
                traffic={"load": 0.5, "flows": 300},
                failures={"interval_ns": 2_000_000, "fraction": frac},
                horizon_ns=2_000_000_000,
            )))
    return cells


def _cells_srpt() -> list[tuple[str, dict]]:
    cells = []
    for policy in ("ecmp", "po2"):
        for sched in ("fifo", "srpt"):
            cells.append((f"{policy}_{sched}", _cfg(
                lb={"policy": policy},
                switch={"scheduling": sched},
                tracker={"kind": "hd", "cap_blocks": 0},  # uncapped
                traffic={"load": 0.8, "flows": 300},
            )))
    return cells


def _cells_write_hold() -> list[tuple[str, dict]]:
    base = dict(
        traffic={"kind": "single", "size_bytes": 10_000, "verb": "write"},
        seeds=[1],
    )
    hold = _cfg(transport={"write_hold": True}, **copy.deepcopy(base))
    nohold = _cfg(transport={"write_hold": False}, **copy.deepcopy(base))
    return [("write_hold", hold), ("write_nohold", nohold)]


PRESETS: dict[str, tuple[str, callable]] = {
    "memory-sweep": (
        "dynamic vs static tracking memory across reordering-connection fractions",
        lambda: [("memory_sweep", {"experiment": "memory-sweep", "seeds": [1]})],
    ),
    "clos-lb-sweep": (
        "load x policy x tracker FCT grid on the desk-scale leaf-spine fabric",
        _cells_lb_sweep,
    ),
    "static-vs-dynamic": (
        "FCT and memory of the dynamic tracker vs an adequate static bitmap",
        _cells_static_vs_dynamic,
    ),
    "recovery-triggers": (
        "recovery triggers with vs without ordering support under spraying",
        _cells_recovery_triggers,
    ),
    "jellyfish-throughput": (
        "fat-tree vs jellyfish with flow-level and per-packet routing",
        _cells_jellyfish,
    ),
    "incast-deflection": (
        "fan-in bursts with deflection+ordering vs selective repeat alone",
        _cells_incast,
    ),
    "failure-resilience": (
        "periodic link failures: per-flow hashing vs spraying with ordering",
        _cells_failures,
    ),
    "srpt-scheduling": (
        "FIFO vs shortest-remaining-first scheduling with an uncapped tracker",
        _cells_srpt,
    ),
    "write-hold": (
        "one-sided write flows with and without last-packet hold-off",
        _cells_write_hold,
    ),
}


def preset_cells(name: str) -> list[tuple[str, dict]]:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; try: {', '.join(sorted(PRESETS))}")
    return PRESETS[name][1]()
