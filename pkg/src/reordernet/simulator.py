"""Deterministic discrete-event network simulator.

Store-and-forward output-queued switches, shared-buffer accounting with
ingress-charged PFC, optional deflection and shortest-remaining-first
scheduling, per-packet and per-flow load balancing, periodic link failures,
and hosts running the ordering-layer endpoints.

All timestamps are integer nanoseconds.  Events are processed in
(time, kind priority, insertion order) order, so identical configuration and
seed reproduce identical runs bit for bit.
"""

from __future__ import annotations

import heapq
import random
import zlib
from collections import deque
from dataclasses import dataclass, field

from .core import ORDERING_METADATA_BYTES, BASE_HEADER_BYTES, CONTROL_PACKET_BYTES, Verb
from .endpoint import Receiver, RecoveryMode, Sender, TrackerKind
from .memctrl import ControllerConfig, MemController
from .metrics import FlowRecord, PortRecord, RunMetrics, TimeSample
from .topology import Topology, bfs_distances, build_topology, k_shortest_paths, next_hop_sets
from .traffic import FlowSpec, incast_flows, load_cdf, poisson_flows


class ConfigError(Exception):
    pass


class InvariantViolation(Exception):
    pass


# Event priorities at equal timestamps.
_P_FAILURE = 0
_P_PAUSE = 1
_P_ARRIVAL = 2
_P_TXDONE = 3
_P_FLOW = 4
_P_TIMER = 5
_P_SAMPLE = 6

HOP_TTL = 64


@dataclass
class SimConfig:
    """Fully-resolved scenario; built by config.resolve() or directly in tests."""

    topology: dict = field(default_factory=lambda: {
        "kind": "clos", "spines": 4, "leaves": 4, "hosts_per_leaf": 8})
    link_bw_bps: int = 10_000_000_000
    prop_ns: int = 1000
    buffer_bytes: int = 262_144
    pfc: bool = True
    deflection: bool = False
    scheduling: str = "fifo"  # fifo | srpt
    port_queue_cap_bytes: int | None = None  # lossy mode; default buffer/ports
    lb: str = "ecmp"  # ecmp | spray | drill | po2 | fksp
    k_paths: int = 8
    tracker: str = "hd"  # hd | static | ideal | none
    block_size_bits: int = 16
    cap_blocks: int = 16  # 0 = uncapped
    static_bits: int = 256
    nic_total_blocks: int = 16384
    nic_metadata_blocks: int = 24
    nic_max_connections: int = 250
    recovery: str = "gbn"  # gbn | sr
    window_packets: int | None = None  # None: one path BDP
    timeout_rtt_mult: float = 3.0
    payload_bytes: int = 1000
    write_hold: bool = False
    traffic: dict = field(default_factory=lambda: {
        "kind": "cdf", "cdf": "heavy_tailed", "load": 0.5, "flows": 200})
    failures: dict | None = None
    horizon_ns: int | None = None
    sample_interval_ns: int = 1_000_000
    max_events: int = 300_000_000

    def validate(self) -> None:
        if self.scheduling not in ("fifo", "srpt"):
            raise ConfigError(f"unknown scheduling {self.scheduling!r}")
        if self.lb not in ("ecmp", "spray", "drill", "po2", "fksp"):
            raise ConfigError(f"unknown lb policy {self.lb!r}")
        if self.tracker not in ("hd", "static", "ideal", "none"):
            raise ConfigError(f"unknown tracker {self.tracker!r}")
        if self.recovery not in ("gbn", "sr"):
            raise ConfigError(f"unknown recovery {self.recovery!r}")
        if self.payload_bytes <= 0:
            raise ConfigError("payload_bytes must be positive")
        if self.tracker == "hd" and self.cap_blocks:
            ctrl_cfg = ControllerConfig(
                self.nic_total_blocks, 2, self.nic_metadata_blocks,
                self.nic_max_connections)
            blocks_per_bm = -(-self.block_size_bits // 16)
            if self.cap_blocks * blocks_per_bm > ctrl_cfg.max_bitmap_blocks:
                raise ConfigError(
                    "bitmap cap needs more blocks than the relative-address "
                    "table can record")


# ---------------------------------------------------------------------------
# Runtime objects
# ---------------------------------------------------------------------------


class SimPacket:
    __slots__ = ("flow", "payload", "is_data", "dst", "wire", "route", "hop",
                 "ttl", "charged")

    def __init__(self, flow, payload, is_data, dst, wire, route=None):
        self.flow = flow
        self.payload = payload
        self.is_data = is_data
        self.dst = dst
        self.wire = wire
        self.route = route
        self.hop = 0
        self.ttl = HOP_TTL
        self.charged = None  # (switch, ingress_name) while buffered there


class Port:
    __slots__ = ("owner", "peer", "name", "bw_bps", "prop_ns", "is_host", "srpt",
                 "fifo", "heap", "ctr", "queued_bytes", "busy", "current",
                 "paused", "pause_start_ns", "paused_ns", "pause_events",
                 "tx_bytes", "tx_packets", "drops", "cap_bytes")

    def __init__(self, owner, peer, bw_bps, prop_ns, is_host, srpt, cap_bytes):
        self.owner = owner
        self.peer = peer
        self.name = f"{owner}->{peer}"
        self.bw_bps = bw_bps
        self.prop_ns = prop_ns
        self.is_host = is_host
        self.srpt = srpt
        self.fifo = deque()
        self.heap = []
        self.ctr = 0
        self.queued_bytes = 0
        self.busy = False
        self.current = None
        self.paused = False
        self.pause_start_ns = 0
        self.paused_ns = 0
        self.pause_events = 0
        self.tx_bytes = 0
        self.tx_packets = 0
        self.drops = 0
        self.cap_bytes = cap_bytes

    def tx_ns(self, nbytes: int) -> int:
        return (nbytes * 8_000_000_000 + self.bw_bps // 2) // self.bw_bps

    def push(self, spkt: SimPacket) -> None:
        self.queued_bytes += spkt.wire
        if self.srpt:
            remaining = spkt.payload.flow_remaining_bytes if spkt.is_data else 0
            self.ctr += 1
            heapq.heappush(self.heap, (remaining, self.ctr, spkt))
        else:
            self.fifo.append(spkt)

    def pop(self) -> SimPacket:
        if self.srpt:
            spkt = heapq.heappop(self.heap)[2]
        else:
            spkt = self.fifo.popleft()
        self.queued_bytes -= spkt.wire
        return spkt

    def pending(self) -> int:
        return len(self.heap) + len(self.fifo)

    def drain(self) -> list[SimPacket]:
        out = [item[2] for item in self.heap] + list(self.fifo)
        self.heap.clear()
        self.fifo.clear()
        self.queued_bytes = 0
        return out


class SwitchNode:
    __slots__ = ("name", "ports", "buffer_bytes", "occupancy", "ingress_bytes",
                 "pause_sent", "xoff", "xon", "spray_cursor", "drill_best")

    def __init__(self, name, buffer_bytes):
        self.name = name
        self.ports: dict[str, Port] = {}
        self.buffer_bytes = buffer_bytes
        self.occupancy = 0
        self.ingress_bytes: dict[str, int] = {}
        self.pause_sent: set[str] = set()
        self.xoff = 0
        self.xon = 0
        self.spray_cursor: dict[int, int] = {}
        self.drill_best: dict[str, str] = {}


class HostNode:
    __slots__ = ("name", "uplink", "attach", "receivers", "controller",
                 "conn_pool", "senders")

    def __init__(self, name, attach):
        self.name = name
        self.attach = attach
        self.uplink: Port | None = None
        self.receivers: dict[int, Receiver] = {}
        self.senders: dict[int, "FlowState"] = {}
        self.controller: MemController | None = None
        self.conn_pool: list[int] = list(range(255, -1, -1))


class FlowState:
    __slots__ = ("spec", "sender", "receiver", "n_packets", "completed",
                 "fct_ns", "failure_hit", "path", "conn_id", "hops",
                 "injected", "arrived")

    def __init__(self, spec: FlowSpec):
        self.spec = spec
        self.sender: Sender | None = None
        self.receiver: Receiver | None = None
        self.n_packets = 0
        self.completed = False
        self.fct_ns: int | None = None
        self.failure_hit = False
        self.path: list[str] | None = None
        self.conn_id: int | None = None
        self.hops = 0
        self.injected = 0
        self.arrived = 0


# ---------------------------------------------------------------------------
# Analytic helpers (also used by tests as oracles' building blocks)
# ---------------------------------------------------------------------------


def tx_time_ns(nbytes: int, bw_bps: int) -> int:
    return (nbytes * 8_000_000_000 + bw_bps // 2) // bw_bps


def data_wire_bytes(payload: int, with_metadata: bool) -> int:
    return payload + BASE_HEADER_BYTES + (ORDERING_METADATA_BYTES if with_metadata else 0)


def analytic_rtt_ns(hops: int, data_wire: int, bw_bps: int, prop_ns: int,
                    ctrl_wire: int = CONTROL_PACKET_BYTES) -> int:
    """Sender-perceived round trip on an idle path: the gap from finishing a
    data packet's transmission to receiving its acknowledgment, with
    store-and-forward at every hop."""
    txd = tx_time_ns(data_wire, bw_bps)
    txa = tx_time_ns(ctrl_wire, bw_bps)
    return (hops - 1) * txd + hops * txa + 2 * hops * prop_ns


def analytic_idle_fct_ns(n_packets: int, hops: int, data_wire: int,
                         bw_bps: int, prop_ns: int) -> int:
    """Completion time of a window-unconstrained flow on an idle path,
    measured at full arrival of the last packet."""
    txd = tx_time_ns(data_wire, bw_bps)
    return (n_packets + hops - 1) * txd + hops * prop_ns


# ---------------------------------------------------------------------------
# Simulation
# ---------------------------------------------------------------------------


class Simulation:
    def __init__(self, cfg: SimConfig, seed: int):
        cfg.validate()
        self.cfg = cfg
        self.seed = seed
        self.topo: Topology = build_topology(dict(cfg.topology))
        self.now = 0
        self.heap: list = []
        self._ctr = 0
        self.rng_net = random.Random(f"net:{seed}")
        self.rng_fail = random.Random(f"fail:{seed}")
        self.dead_links: set[tuple[str, str]] = set()
        self._build_nodes()
        self._build_routing()
        self.flows: list[FlowState] = [FlowState(s) for s in self._gen_traffic()]
        self._completed = 0
        self._senders_done = 0
        self._started = 0
        # conservation counters
        self.injected_data = 0
        self.arrived_data = 0
        self.dropped_data = 0
        self.live_data = 0
        self.injected_ctrl = 0
        self.arrived_ctrl = 0
        self.dropped_ctrl = 0
        self.nic_payload_drops = 0
        self.delivered_payload_bytes = 0
        self._bin_delivered = 0
        self.data_wire_total = 0
        self.ctrl_wire_total = 0
        self.failure_drops = 0
        self.samples: list[TimeSample] = []
        self._metadata_on_wire = cfg.tracker in ("hd", "static")

    # -- construction -------------------------------------------------------

    def _build_nodes(self) -> None:
        cfg = self.cfg
        self.nodes: dict[str, SwitchNode | HostNode] = {}
        srpt = cfg.scheduling == "srpt"
        for sw in self.topo.switches:
            self.nodes[sw] = SwitchNode(sw, cfg.buffer_bytes)
        for host in self.topo.hosts:
            self.nodes[host] = HostNode(host, self.topo.host_attach[host])
        default_cap = None
        for node in self.topo.switches:
            n_ports = len(self.topo.adj[node])
            share = cfg.buffer_bytes // n_ports
            max_wire = data_wire_bytes(cfg.payload_bytes, True)
            headroom = 2 * (cfg.link_bw_bps * cfg.prop_ns // 8_000_000_000) + 2 * max_wire
            sw = self.nodes[node]
            sw.xoff = share - headroom
            sw.xon = sw.xoff // 2
            if cfg.pfc and sw.xoff < max_wire:
                raise ConfigError(
                    f"buffer too small for lossless operation at {node}")
        for a, b in self.topo.links():
            for src, dst in ((a, b), (b, a)):
                node = self.nodes[src]
                is_host = isinstance(node, HostNode)
                cap = cfg.port_queue_cap_bytes
                if cap is None:
                    cap = cfg.buffer_bytes // max(1, len(self.topo.adj[src]))
                port = Port(src, dst, cfg.link_bw_bps, cfg.prop_ns, is_host,
                            srpt, cap)
                if is_host:
                    node.uplink = port
                else:
                    node.ports[dst] = port
                    node.ingress_bytes[dst] = 0
        if cfg.tracker == "hd":
            for host in self.topo.hosts:
                self.nodes[host].controller = MemController(ControllerConfig(
                    cfg.nic_total_blocks, 2, cfg.nic_metadata_blocks,
                    cfg.nic_max_connections))

    def _build_routing(self) -> None:
        self.next_hops = next_hop_sets(self.topo, self.dead_links)
        self.host_dist: dict[str, dict[str, int]] = {
            dst: bfs_distances(self.topo, dst, self.dead_links)
            for dst in self.topo.hosts
        }
        self.kpaths: dict[tuple[str, str], list[list[str]]] = {}
        if self.cfg.lb in ("po2", "fksp"):
            for src in self.topo.hosts:
                for dst in self.topo.hosts:
                    if src != dst:
                        self.kpaths[(src, dst)] = k_shortest_paths(
                            self.topo, src, dst, self.cfg.k_paths, self.dead_links)

    def _gen_traffic(self) -> list[FlowSpec]:
        t = dict(self.cfg.traffic)
        kind = t.pop("kind", "cdf")
        hosts = self.topo.hosts
        if kind == "cdf":
            cdf = load_cdf(t.get("cdf", "heavy_tailed"))
            return poisson_flows(
                seed=self.seed,
                n_flows=t.get("flows", 200),
                load=t.get("load", 0.5),
                hosts=hosts,
                host_bw_bps=self.cfg.link_bw_bps,
                cdf=cdf,
                verb=Verb.WRITE if t.get("verb") == "write" else Verb.SEND_RECV,
                write_fraction=t.get("write_fraction", 0.0),
            )
        if kind == "incast":
            return incast_flows(
                seed=self.seed,
                fan_in=t.get("fan_in", 50),
                flow_bytes=t.get("flow_bytes", 40_000),
                epochs=t.get("epochs", 10),
                load=t.get("load", 0.5),
                hosts=hosts,
                host_bw_bps=self.cfg.link_bw_bps,
            )
        if kind == "single":
            # One flow on an otherwise idle network (analytic comparisons).
            return [FlowSpec(0, t.get("src", hosts[0]), t.get("dst", hosts[-1]),
                             t.get("size_bytes", 10_000), 0,
                             verb=Verb.WRITE if t.get("verb") == "write"
                             else Verb.SEND_RECV)]
        raise ConfigError(f"unknown traffic kind {kind!r}")

    # -- event plumbing -------------------------------------------------------

    def _push(self, t: int, prio: int, fn, arg) -> None:
        self._ctr += 1
        heapq.heappush(self.heap, (t, prio, self._ctr, fn, arg))

    def run(self) -> RunMetrics:
        cfg = self.cfg
        for fl in self.flows:
            self._push(fl.spec.arrival_ns, _P_FLOW, self._ev_flow_arrival, fl)
        self._push(cfg.sample_interval_ns, _P_SAMPLE, self._ev_sample, None)
        if cfg.failures:
            self._push(cfg.failures["interval_ns"], _P_FAILURE,
                       self._ev_failure, None)
        events = 0
        horizon = cfg.horizon_ns
        while self.heap:
            t, prio, _, fn, arg = heapq.heappop(self.heap)
            if horizon is not None and t > horizon:
                break
            events += 1
            if events > cfg.max_events:
                raise InvariantViolation("event budget exhausted; runaway run")
            self.now = t
            fn(arg)
        return self._finalize()

    def _all_done(self) -> bool:
        return (self._completed == len(self.flows)
                and self._senders_done == self._started)

    # -- events ----------------------------------------------------------------

    def _ev_flow_arrival(self, fl: FlowState) -> None:
        cfg = self.cfg
        spec = fl.spec
        hops = self.host_dist[spec.dst].get(spec.src)
        if hops is None:
            hops = 4  # partitioned at start; recovered by a later epoch
        fl.hops = hops
        wire = data_wire_bytes(cfg.payload_bytes, self._metadata_on_wire)
        rtt = analytic_rtt_ns(hops, wire, cfg.link_bw_bps, cfg.prop_ns)
        if cfg.window_packets is not None:
            window = cfg.window_packets
        else:
            bdp_bytes = cfg.link_bw_bps * rtt // 8_000_000_000
            window = max(1, -(-bdp_bytes // wire))
        fl.sender = Sender(
            conn=spec.flow_id & 0xFF,
            first_seq=0,
            total_bytes=spec.size_bytes,
            payload_bytes=cfg.payload_bytes,
            window_packets=window,
            recovery=RecoveryMode.SR if cfg.recovery == "sr" else RecoveryMode.GBN,
            timeout_ns=max(1, round(cfg.timeout_rtt_mult * rtt)),
            verb=spec.verb,
            write_hold=cfg.write_hold,
        )
        fl.n_packets = fl.sender.n_packets
        fl.sender.last_heard_ns = self.now  # timer baseline is the flow start
        if cfg.lb == "fksp":
            paths = self.kpaths.get((spec.src, spec.dst)) or []
            fl.path = self.rng_net.choice(paths) if paths else None
        self.nodes[spec.src].senders[spec.flow_id] = fl
        self._started += 1
        self._pump(fl)
        self._push(self.now + fl.sender.timeout_ns, _P_TIMER, self._ev_timer, fl)

    def _ev_timer(self, fl: FlowState) -> None:
        sender = fl.sender
        if sender.done:
            return
        if sender.timeout_due(self.now):
            for pkt in sender.on_timeout(self.now):
                self._send_data(fl, pkt)
        nxt = max(self.now + 1, sender.last_heard_ns + sender.timeout_ns)
        self._push(nxt, _P_TIMER, self._ev_timer, fl)

    def _ev_sample(self, _arg) -> None:
        cfg = self.cfg
        conn_count = 0
        bitmap_bytes = 0
        metadata_bytes = 0
        for host in self.topo.hosts:
            node = self.nodes[host]
            if cfg.tracker == "hd":
                util = node.controller.utilization()
                conn_count += len(util["per_connection"])
                bitmap_bytes += util["bitmap_bytes_in_use"]
                metadata_bytes += util["metadata_bytes_in_use"]
            elif cfg.tracker == "static":
                live = [r for r in node.receivers.values()
                        if not r.completion_notified and r.expected_seq is not None]
                conn_count += len(live)
                bitmap_bytes += len(live) * (cfg.static_bits // 8)
                metadata_bytes += len(live) * 9
        interval = cfg.sample_interval_ns
        self.samples.append(TimeSample(
            time_ns=self.now,
            conn_count=conn_count,
            bitmap_bytes=bitmap_bytes,
            metadata_bytes=metadata_bytes,
            total_bytes=bitmap_bytes + metadata_bytes,
            delivered_bytes=self._bin_delivered,
            throughput_bps=self._bin_delivered * 8 / (interval * 1e-9),
        ))
        self._bin_delivered = 0
        if not self._all_done():
            self._push(self.now + interval, _P_SAMPLE, self._ev_sample, None)

    def _ev_failure(self, _arg) -> None:
        cfg = self.cfg
        links = self.topo.switch_links()
        self.dead_links = set()  # previous epoch's failed links recover
        frac = cfg.failures["fraction"]
        count = min(len(links), max(1, round(frac * len(links))))
        failed = self.rng_fail.sample(sorted(links), count)
        self.dead_links = set(failed)
        for a, b in failed:
            for owner, peer in ((a, b), (b, a)):
                port = self.nodes[owner].ports[peer]
                for spkt in port.drain():
                    self._drop(spkt, "failure", port)
        self._build_routing()
        for fl in self.flows:
            if fl.path and not fl.completed:
                if any(((x, y) if x < y else (y, x)) in self.dead_links
                       for x, y in zip(fl.path, fl.path[1:])):
                    paths = self.kpaths.get((fl.spec.src, fl.spec.dst)) or []
                    fl.path = self.rng_net.choice(paths) if paths else None
                    fl.failure_hit = True
        if not self._all_done():
            self._push(self.now + cfg.failures["interval_ns"], _P_FAILURE,
                       self._ev_failure, None)

    def _ev_pause(self, arg) -> None:
        port, on = arg
        if on:
            if not port.paused:
                port.paused = True
                port.pause_start_ns = self.now
                port.pause_events += 1
        elif port.paused:
            port.paused = False
            port.paused_ns += self.now - port.pause_start_ns
            self._kick(port)

    def _ev_tx_done(self, port: Port) -> None:
        spkt = port.current
        port.current = None
        port.busy = False
        port.tx_bytes += spkt.wire
        port.tx_packets += 1
        if spkt.charged is not None:
            self._uncharge(spkt)
        link = (port.owner, port.peer) if port.owner < port.peer else (port.peer, port.owner)
        if link in self.dead_links:
            self._drop(spkt, "failure", port)
        else:
            self._push(self.now + port.prop_ns, _P_ARRIVAL, self._ev_arrival,
                       (port.peer, port.owner, spkt))
        self._kick(port)

    def _ev_arrival(self, arg) -> None:
        node_name, from_name, spkt = arg
        link = (node_name, from_name) if node_name < from_name else (from_name, node_name)
        if link in self.dead_links:
            self._drop(spkt, "failure", None)
            return
        node = self.nodes[node_name]
        if isinstance(node, HostNode):
            self._nic_receive(node, spkt)
        else:
            self._forward(node, from_name, spkt)

    # -- switch logic -----------------------------------------------------------

    def _forward(self, sw: SwitchNode, from_name: str, spkt: SimPacket) -> None:
        spkt.ttl -= 1
        if spkt.ttl <= 0:
            self._drop(spkt, "ttl", None)
            return
        dst = spkt.dst
        if self.topo.host_attach.get(dst) == sw.name:
            out = sw.ports[dst]
        elif spkt.route is not None:
            spkt.hop += 1  # this switch is route[hop]
            nxt_i = spkt.hop + 1
            if nxt_i >= len(spkt.route) or spkt.route[spkt.hop] != sw.name:
                self._drop(spkt, "route", None)
                return
            nxt = spkt.route[nxt_i]
            port = sw.ports.get(nxt)
            if port is None or self._link_dead(sw.name, nxt):
                self._drop(spkt, "failure", None)
                return
            out = port
        else:
            eligible = self.next_hops[sw.name].get(dst)
            if not eligible:
                self._drop(spkt, "failure", None)
                return
            out = sw.ports[self._select(sw, spkt, eligible)]
        self._enqueue(sw, out, spkt, from_name)

    def _link_dead(self, a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) in self.dead_links

    def _select(self, sw: SwitchNode, spkt: SimPacket, eligible: list[str]) -> str:
        cfg = self.cfg
        if len(eligible) == 1:
            return eligible[0]
        flow_id = spkt.flow.spec.flow_id
        if cfg.lb == "ecmp":
            key = f"{self.seed}:{sw.name}:{flow_id}"
            return eligible[zlib.crc32(key.encode()) % len(eligible)]
        if cfg.lb == "spray":
            cur = sw.spray_cursor.get(flow_id, 0)
            sw.spray_cursor[flow_id] = cur + 1
            return eligible[cur % len(eligible)]
        if cfg.lb == "drill":
            rng = self.rng_net
            cands = {rng.choice(eligible), rng.choice(eligible)}
            best = sw.drill_best.get(spkt.dst)
            if best in eligible:
                cands.add(best)
            chosen = min(cands, key=lambda nb: (sw.ports[nb].queued_bytes, nb))
            sw.drill_best[spkt.dst] = chosen
            return chosen
        # po2/fksp packets are source-routed; reaching here means the packet
        # lost its route (deflection) and continues ecmp-style.
        key = f"{self.seed}:{sw.name}:{flow_id}"
        return eligible[zlib.crc32(key.encode()) % len(eligible)]

    def _enqueue(self, sw: SwitchNode, out: Port, spkt: SimPacket,
                 ingress: str) -> None:
        cfg = self.cfg
        wire = spkt.wire
        if cfg.pfc:
            sw.occupancy += wire
            if sw.occupancy > sw.buffer_bytes:
                raise InvariantViolation(f"lossless buffer overflow at {sw.name}")
            sw.ingress_bytes[ingress] = sw.ingress_bytes.get(ingress, 0) + wire
            spkt.charged = (sw, ingress)
            out.push(spkt)
            self._kick(out)
            if sw.ingress_bytes[ingress] > sw.xoff and ingress not in sw.pause_sent:
                sw.pause_sent.add(ingress)
                self._send_pfc(sw, ingress, True)
            return
        if (out.queued_bytes + wire > out.cap_bytes
                or sw.occupancy + wire > sw.buffer_bytes):
            if cfg.deflection:
                alt = self._deflect_port(sw, out, spkt, wire)
                if alt is not None:
                    spkt.route = None  # deflected: continue hop-by-hop
                    sw.occupancy += wire
                    spkt.charged = (sw, ingress)
                    sw.ingress_bytes[ingress] = sw.ingress_bytes.get(ingress, 0) + wire
                    alt.push(spkt)
                    self._kick(alt)
                    return
            self._drop(spkt, "overflow", out)
            return
        sw.occupancy += wire
        spkt.charged = (sw, ingress)
        sw.ingress_bytes[ingress] = sw.ingress_bytes.get(ingress, 0) + wire
        out.push(spkt)
        self._kick(out)

    def _deflect_port(self, sw: SwitchNode, intended: Port, spkt: SimPacket,
                      wire: int) -> Port | None:
        cands = []
        for peer, port in sw.ports.items():
            if port is intended:
                continue
            if peer in self.topo.host_attach and peer != spkt.dst:
                continue  # never deflect into the wrong host
            if self._link_dead(sw.name, peer):
                continue
            if port.queued_bytes + wire > port.cap_bytes:
                continue
            cands.append(port)
        if not cands or sw.occupancy + wire > sw.buffer_bytes:
            return None
        cands.sort(key=lambda p: p.name)
        return self.rng_net.choice(cands)

    def _send_pfc(self, sw: SwitchNode, upstream: str, on: bool) -> None:
        up_node = self.nodes[upstream]
        if isinstance(up_node, HostNode):
            port = up_node.uplink
        else:
            port = up_node.ports[sw.name]
        self._push(self.now + port.prop_ns, _P_PAUSE, self._ev_pause, (port, on))

    def _uncharge(self, spkt: SimPacket) -> None:
        sw, ingress = spkt.charged
        spkt.charged = None
        sw.occupancy -= spkt.wire
        sw.ingress_bytes[ingress] -= spkt.wire
        if (self.cfg.pfc and ingress in sw.pause_sent
                and sw.ingress_bytes[ingress] < sw.xon):
            sw.pause_sent.discard(ingress)
            self._send_pfc(sw, ingress, False)

    def _kick(self, port: Port) -> None:
        if port.busy or port.paused or not port.pending():
            return
        spkt = port.pop()
        port.busy = True
        port.current = spkt
        self._push(self.now + port.tx_ns(spkt.wire), _P_TXDONE,
                   self._ev_tx_done, port)

    # -- host / NIC logic ---------------------------------------------------------

    def _pump(self, fl: FlowState) -> None:
        for pkt in fl.sender.pump():
            self._send_data(fl, pkt)

    def _route_for(self, src: str, dst: str, fl: FlowState,
                   reverse: bool) -> list[str] | None:
        cfg = self.cfg
        if cfg.lb == "fksp":
            if fl.path is None:
                return None
            return list(reversed(fl.path)) if reverse else list(fl.path)
        if cfg.lb == "po2":
            paths = self.kpaths.get((src, dst))
            if not paths:
                return None
            if len(paths) == 1:
                return list(paths[0])
            rng = self.rng_net
            a = rng.randrange(len(paths))
            b = rng.randrange(len(paths))
            pa, pb = paths[a], paths[b]
            la = self._path_load(pa)
            lb = self._path_load(pb)
            return list(pa) if (la, a) <= (lb, b) else list(pb)
        return None

    def _path_load(self, path: list[str]) -> int:
        total = 0
        for a, b in zip(path, path[1:]):
            node = self.nodes[a]
            port = node.uplink if isinstance(node, HostNode) else node.ports.get(b)
            if port is not None:
                total += port.queued_bytes
        return total

    def _send_data(self, fl: FlowState, pkt) -> None:
        src = fl.spec.src
        host = self.nodes[src]
        wire = pkt.size_bytes + BASE_HEADER_BYTES + (
            ORDERING_METADATA_BYTES if self._metadata_on_wire else 0)
        route = self._route_for(src, fl.spec.dst, fl, reverse=False)
        spkt = SimPacket(fl, pkt, True, fl.spec.dst, wire, route)
        self.injected_data += 1
        self.live_data += 1
        fl.injected += 1
        self.data_wire_total += wire
        host.uplink.push(spkt)
        self._kick(host.uplink)

    def _send_ctrl(self, fl: FlowState, ctrl) -> None:
        src = fl.spec.dst  # control flows back from the receiver
        host = self.nodes[src]
        route = self._route_for(src, fl.spec.src, fl, reverse=True)
        spkt = SimPacket(fl, ctrl, False, fl.spec.src, CONTROL_PACKET_BYTES, route)
        self.injected_ctrl += 1
        self.ctrl_wire_total += CONTROL_PACKET_BYTES
        host.uplink.push(spkt)
        self._kick(host.uplink)

    def _nic_receive(self, host: HostNode, spkt: SimPacket) -> None:
        fl = spkt.flow
        if spkt.is_data:
            self.arrived_data += 1
            self.live_data -= 1
            if host.name != fl.spec.dst:
                self._drop_at_nic(fl)
                return
            fl.arrived += 1
            rx = fl.receiver
            if rx is None:
                rx = self._make_receiver(host, fl)
            ev = rx.on_packet(spkt.payload)
            if ev.payload_dropped:
                self.nic_payload_drops += 1
            if ev.delivered is not None:
                lo, hi = ev.delivered
                self.delivered_payload_bytes += self._range_bytes(fl, lo, hi)
                self._bin_delivered += self._range_bytes(fl, lo, hi)
            if rx.completion():
                self._flow_complete(host, fl)
            self._send_ctrl(fl, ev.control)
        else:
            self.arrived_ctrl += 1
            sender_fl = self.nodes[fl.spec.src].senders.get(fl.spec.flow_id)
            if sender_fl is None:
                return
            sender = sender_fl.sender
            was_done = sender.done
            for pkt in sender.on_control(spkt.payload, self.now):
                self._send_data(sender_fl, pkt)
            self._pump(sender_fl)
            if sender.done and not was_done:
                self._senders_done += 1

    def _make_receiver(self, host: HostNode, fl: FlowState) -> Receiver:
        cfg = self.cfg
        conn = host.conn_pool.pop() if host.conn_pool else 255
        fl.conn_id = conn
        rx = Receiver(
            conn,
            tracker_kind=TrackerKind(cfg.tracker),
            controller=host.controller if cfg.tracker == "hd" else None,
            block_size_bits=cfg.block_size_bits,
            cap_blocks=cfg.cap_blocks,
            static_bits=cfg.static_bits,
        )
        host.receivers[fl.spec.flow_id] = rx
        fl.receiver = rx
        return rx

    def _range_bytes(self, fl: FlowState, lo: int, hi: int) -> int:
        payload = self.cfg.payload_bytes
        total = (hi - lo) * payload
        if hi == fl.n_packets:  # last packet may be partial
            total += fl.spec.size_bytes - fl.n_packets * payload
        return total

    def _flow_complete(self, host: HostNode, fl: FlowState) -> None:
        if fl.completed:
            return
        fl.completed = True
        fl.fct_ns = self.now - fl.spec.arrival_ns
        self._completed += 1
        if fl.conn_id is not None:
            host.conn_pool.append(fl.conn_id)
            fl.conn_id = None
        # The receiver object stays so late retransmissions get re-acked;
        # its tracking memory was already released by completion().

    def _drop_at_nic(self, fl: FlowState) -> None:
        # Deflection can strand a packet at a host that is not its
        # destination; the NIC discards it and recovery resends.
        self.nic_payload_drops += 1

    # -- drops ------------------------------------------------------------------

    def _drop(self, spkt: SimPacket, reason: str, port: Port | None) -> None:
        if spkt.charged is not None:
            self._uncharge(spkt)
        if port is not None:
            port.drops += 1
        if reason == "failure":
            self.failure_drops += 1
            spkt.flow.failure_hit = True
        if spkt.is_data:
            self.dropped_data += 1
            self.live_data -= 1
        else:
            self.dropped_ctrl += 1

    # -- finalization -------------------------------------------------------------

    def _finalize(self) -> RunMetrics:
        for name in self.topo.switches + self.topo.hosts:
            node = self.nodes[name]
            ports = [node.uplink] if isinstance(node, HostNode) else node.ports.values()
            for port in ports:
                if port.paused:
                    port.paused_ns += self.now - port.pause_start_ns
                    port.paused = False
        flow_rows = []
        for fl in self.flows:
            rx = fl.receiver
            flow_rows.append(FlowRecord(
                flow_id=fl.spec.flow_id,
                src=fl.spec.src,
                dst=fl.spec.dst,
                size_bytes=fl.spec.size_bytes,
                verb=fl.spec.verb.value,
                query_id=fl.spec.query_id,
                start_ns=fl.spec.arrival_ns,
                fct_ns=fl.fct_ns,
                packets=fl.n_packets,
                hops=fl.hops,
                data_arrivals=rx.data_arrivals if rx else fl.arrived,
                reordered_arrivals=rx.reordered_arrivals if rx else 0,
                retransmissions=fl.sender.retransmissions if fl.sender else 0,
                recovery_triggers=fl.sender.recovery_triggers if fl.sender else 0,
                max_bitmap_bytes=rx.max_bitmap_bytes if rx else 0,
                sack_count=rx.sack_sent if rx else 0,
                nack_count=rx.nack_sent if rx else 0,
                failure_hit=fl.failure_hit,
                completed=fl.completed,
            ))
        port_rows = []
        for name in self.topo.hosts + self.topo.switches:
            node = self.nodes[name]
            ports = [node.uplink] if isinstance(node, HostNode) else [
                node.ports[k] for k in sorted(node.ports)]
            for port in ports:
                port_rows.append(PortRecord(
                    port=port.name,
                    kind="host" if isinstance(node, HostNode) else "switch",
                    paused_ns=port.paused_ns,
                    pause_events=port.pause_events,
                    tx_bytes=port.tx_bytes,
                    tx_packets=port.tx_packets,
                    drops=port.drops,
                ))
        total_wire = self.data_wire_total + self.ctrl_wire_total
        counters = {
            "seed": self.seed,
            "end_ns": self.now,
            "injected_data": self.injected_data,
            "arrived_data": self.arrived_data,
            "dropped_data": self.dropped_data,
            "in_flight_data": self.live_data,
            "injected_ctrl": self.injected_ctrl,
            "arrived_ctrl": self.arrived_ctrl,
            "dropped_ctrl": self.dropped_ctrl,
            "failure_drops": self.failure_drops,
            "nic_payload_drops": self.nic_payload_drops,
            "delivered_payload_bytes": self.delivered_payload_bytes,
            "data_wire_bytes": self.data_wire_total,
            "ctrl_wire_bytes": self.ctrl_wire_total,
            "metadata_wire_bytes": (ORDERING_METADATA_BYTES * self.injected_data
                                    if self._metadata_on_wire else 0),
            "overhead_fraction": (
                (self.ctrl_wire_total
                 + (ORDERING_METADATA_BYTES * self.injected_data
                    if self._metadata_on_wire else 0)) / total_wire
                if total_wire else 0.0),
        }
        return RunMetrics(seed=self.seed, flows=flow_rows, ports=port_rows,
                          samples=self.samples, counters=counters)


def run_simulation(cfg: SimConfig, seed: int) -> RunMetrics:
    return Simulation(cfg, seed).run()
