"""Experiment configuration: schema, defaults, validation, resolution.

Configs are JSON objects.  Every field has a default; unknown keys are
rejected with the offending path (fail-fast).  ``resolve`` produces the fully
defaulted dict that gets recorded in the run manifest, and ``to_sim_config``
turns it into the simulator's internal form.
"""

from __future__ import annotations

import copy
import json

from .simulator import ConfigError, SimConfig

DEFAULTS: dict = {
    "experiment": "network",  # network | memory-sweep
    "topology": {"kind": "clos", "spines": 4, "leaves": 4, "hosts_per_leaf": 8},
    "link": {"bandwidth_gbps": 10.0, "propagation_ns": 1000},
    "switch": {
        "buffer_bytes": 262_144,
        "pfc": True,
        "deflection": False,
        "scheduling": "fifo",
        "port_queue_cap_bytes": None,
    },
    "lb": {"policy": "ecmp", "k_paths": 8},
    "tracker": {
        "kind": "hd",
        "block_size_bits": 16,
        "cap_blocks": 16,
        "static_bits": 256,
        "nic_total_blocks": 16384,
        "nic_metadata_blocks": 24,
        "nic_max_connections": 250,
    },
    "transport": {
        "recovery": "gbn",
        "window_packets": None,
        "timeout_rtt_multiple": 3.0,
        "payload_bytes": 1000,
        "write_hold": False,
    },
    "traffic": {
        "kind": "cdf",
        "cdf": "heavy_tailed",
        "load": 0.5,
        "flows": 200,
        "verb": "send_recv",
        "write_fraction": 0.0,
        "fan_in": 50,
        "flow_bytes": 40_000,
        "epochs": 10,
        "src": None,
        "dst": None,
        "size_bytes": 10_000,
    },
    "failures": None,  # or {"interval_ns": int, "fraction": float}
    "memory_sweep": {
        "connections": 20,
        "packets": 256,
        "step_percent": 10,
        "min_degree": 0.1,
        "max_degree": 1.0,
    },
    "seeds": [1, 2, 3, 4, 5],
    "horizon_ns": None,
    "sample_interval_ns": 1_000_000,
}

_TOPOLOGY_KEYS = {
    "clos": {"kind", "spines", "leaves", "hosts_per_leaf"},
    "fattree": {"kind", "k"},
    "jellyfish": {"kind", "switches", "degree", "hosts", "seed"},
}
_FAILURE_KEYS = {"interval_ns", "fraction"}


def _check_keys(given: dict, allowed, path: str) -> None:
    for key in given:
        if key not in allowed:
            raise ConfigError(f"unknown config key {path + key!r}")


def resolve(user: dict) -> dict:
    """Merge a user config over the defaults, rejecting unknown keys."""
    if not isinstance(user, dict):
        raise ConfigError("config must be a JSON object")
    _check_keys(user, set(DEFAULTS), "")
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in user.items():
        if key == "topology":
            if not isinstance(val, dict) or "kind" not in val:
                raise ConfigError("topology must be an object with a 'kind'")
            allowed = _TOPOLOGY_KEYS.get(val["kind"])
            if allowed is None:
                raise ConfigError(f"unknown topology kind {val['kind']!r}")
            _check_keys(val, allowed, "topology.")
            cfg["topology"] = dict(val)
        elif key == "failures":
            if val is not None:
                _check_keys(val, _FAILURE_KEYS, "failures.")
                if "fraction" not in val:
                    raise ConfigError("failures.fraction is required")
                merged = {"interval_ns": 2_000_000}
                merged.update(val)
                val = merged
            cfg["failures"] = val
        elif isinstance(DEFAULTS[key], dict) and isinstance(val, dict):
            _check_keys(val, set(DEFAULTS[key]), f"{key}.")
            cfg[key].update(val)
        else:
            cfg[key] = val
    if not cfg["seeds"]:
        raise ConfigError("seeds must not be empty")
    return cfg


def apply_overrides(user: dict, overrides: list[str]) -> dict:
    """Apply ``a.b=value`` strings onto a raw config dict."""
    out = copy.deepcopy(user)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        path, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = path.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override path {path!r} crosses a non-object")
        node[parts[-1]] = value
    return out


def to_sim_config(cfg: dict) -> SimConfig:
    """Build the simulator-facing config from a resolved config dict."""
    link = cfg["link"]
    sw = cfg["switch"]
    lb = cfg["lb"]
    tr = cfg["tracker"]
    tp = cfg["transport"]
    sim = SimConfig(
        topology=dict(cfg["topology"]),
        link_bw_bps=round(link["bandwidth_gbps"] * 1e9),
        prop_ns=link["propagation_ns"],
        buffer_bytes=sw["buffer_bytes"],
        pfc=sw["pfc"],
        deflection=sw["deflection"],
        scheduling=sw["scheduling"],
        port_queue_cap_bytes=sw["port_queue_cap_bytes"],
        lb=lb["policy"],
        k_paths=lb["k_paths"],
        tracker=tr["kind"],
        block_size_bits=tr["block_size_bits"],
        cap_blocks=tr["cap_blocks"],
        static_bits=tr["static_bits"],
        nic_total_blocks=tr["nic_total_blocks"],
        nic_metadata_blocks=tr["nic_metadata_blocks"],
        nic_max_connections=tr["nic_max_connections"],
        recovery=tp["recovery"],
        window_packets=tp["window_packets"],
        timeout_rtt_mult=tp["timeout_rtt_multiple"],
        payload_bytes=tp["payload_bytes"],
        write_hold=tp["write_hold"],
        traffic={k: v for k, v in cfg["traffic"].items() if v is not None},
        failures=cfg["failures"],
        horizon_ns=cfg["horizon_ns"],
        sample_interval_ns=cfg["sample_interval_ns"],
    )
    sim.validate()
    return sim
