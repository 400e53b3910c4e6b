"""Topology construction and routing structures.

Three topology families: Clos (leaf-spine), three-tier fat-tree, and
Jellyfish (random regular graph among switches).  All construction is
deterministic given the spec (and seed, for Jellyfish).

Routing support: per-switch equal-cost next-hop sets toward every host
(hop-by-hop policies) and k-shortest loop-free paths per host pair
(source-routed policies).
"""

from __future__ import annotations

import heapq
import random
from collections import deque
from dataclasses import dataclass, field


class InfeasibleSpec(Exception):
    pass


@dataclass
class Topology:
    kind: str
    hosts: list[str] = field(default_factory=list)
    switches: list[str] = field(default_factory=list)
    adj: dict[str, list[str]] = field(default_factory=dict)
    host_attach: dict[str, str] = field(default_factory=dict)

    def add_link(self, a: str, b: str) -> None:
        self.adj.setdefault(a, []).append(b)
        self.adj.setdefault(b, []).append(a)

    def links(self) -> list[tuple[str, str]]:
        """Undirected link list, each as a sorted pair, deterministic order."""
        seen = set()
        out = []
        for a in list(self.hosts) + list(self.switches):
            for b in self.adj.get(a, []):
                key = (a, b) if a < b else (b, a)
                if key not in seen:
                    seen.add(key)
                    out.append(key)
        return out

    def switch_links(self) -> list[tuple[str, str]]:
        hostset = set(self.hosts)
        return [l for l in self.links() if l[0] not in hostset and l[1] not in hostset]

    def is_connected(self) -> bool:
        nodes = self.hosts + self.switches
        if not nodes:
            return True
        seen = {nodes[0]}
        stack = [nodes[0]]
        while stack:
            for nb in self.adj.get(stack.pop(), []):
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == len(nodes)


def build_topology(spec: dict) -> Topology:
    kind = spec.get("kind")
    if kind == "clos":
        return _clos(spec["spines"], spec["leaves"], spec["hosts_per_leaf"])
    if kind == "fattree":
        return _fattree(spec["k"])
    if kind == "jellyfish":
        return _jellyfish(spec["switches"], spec["degree"], spec["hosts"], spec.get("seed", 1))
    raise InfeasibleSpec(f"unknown topology kind {kind!r}")


def _clos(spines: int, leaves: int, hosts_per_leaf: int) -> Topology:
    if min(spines, leaves, hosts_per_leaf) <= 0:
        raise InfeasibleSpec("clos parameters must be positive")
    topo = Topology(kind="clos")
    topo.switches = [f"spine{i}" for i in range(spines)] + [f"leaf{i}" for i in range(leaves)]
    for l in range(leaves):
        for s in range(spines):
            topo.add_link(f"leaf{l}", f"spine{s}")
        for h in range(hosts_per_leaf):
            host = f"h{l * hosts_per_leaf + h}"
            topo.hosts.append(host)
            topo.host_attach[host] = f"leaf{l}"
            topo.add_link(host, f"leaf{l}")
    return topo


def _fattree(k: int) -> Topology:
    if k <= 0 or k % 2:
        raise InfeasibleSpec("fat-tree arity must be positive and even")
    half = k // 2
    topo = Topology(kind="fattree")
    cores = [f"core{i}" for i in range(half * half)]
    topo.switches.extend(cores)
    hid = 0
    for pod in range(k):
        edges = [f"edge{pod}_{i}" for i in range(half)]
        aggs = [f"agg{pod}_{i}" for i in range(half)]
        topo.switches.extend(edges + aggs)
        for e in edges:
            for a in aggs:
                topo.add_link(e, a)
            for _ in range(half):
                host = f"h{hid}"
                hid += 1
                topo.hosts.append(host)
                topo.host_attach[host] = e
                topo.add_link(host, e)
        for j, a in enumerate(aggs):
            for c in range(half):
                topo.add_link(a, cores[j * half + c])
    return topo


def _jellyfish(n_switches: int, degree: int, n_hosts: int, seed: int) -> Topology:
    """Random degree-regular connected graph; hosts spread round-robin."""
    if n_switches <= 0 or degree <= 0 or n_hosts <= 0:
        raise InfeasibleSpec("jellyfish parameters must be positive")
    if degree >= n_switches:
        raise InfeasibleSpec("degree must be below switch count")
    if (n_switches * degree) % 2:
        raise InfeasibleSpec("switch count times degree must be even")
    rng = random.Random(f"jellyfish:{seed}")
    for _ in range(200):
        edges = _random_regular(rng, n_switches, degree)
        if edges is None:
            continue
        topo = Topology(kind="jellyfish")
        topo.switches = [f"s{i}" for i in range(n_switches)]
        for a, b in sorted(edges):
            topo.add_link(f"s{a}", f"s{b}")
        for h in range(n_hosts):
            host = f"h{h}"
            sw = f"s{h % n_switches}"
            topo.hosts.append(host)
            topo.host_attach[host] = sw
            topo.add_link(host, sw)
        if topo.is_connected():
            return topo
    raise InfeasibleSpec("could not build a connected regular graph")


def _random_regular(rng: random.Random, n: int, d: int) -> set[tuple[int, int]] | None:
    """One attempt at a simple d-regular graph by stub matching."""
    stubs = [v for v in range(n) for _ in range(d)]
    rng.shuffle(stubs)
    edges: set[tuple[int, int]] = set()
    for i in range(0, len(stubs), 2):
        a, b = stubs[i], stubs[i + 1]
        if a == b:
            return None
        key = (a, b) if a < b else (b, a)
        if key in edges:
            return None
        edges.add(key)
    return edges


# ---------------------------------------------------------------------------
# Routing
# ---------------------------------------------------------------------------


def bfs_distances(
    topo: Topology, dst: str, dead_links: set[tuple[str, str]] | None = None
) -> dict[str, int]:
    """Hop distance from every node to ``dst``.

    Hosts are terminals: they receive distances but are never expanded, so
    no path routes through a host.
    """
    dead = dead_links or set()
    dist = {dst: 0}
    frontier = deque([dst])
    while frontier:
        node = frontier.popleft()
        for nb in topo.adj[node]:
            if ((node, nb) if node < nb else (nb, node)) in dead:
                continue
            if nb not in dist:
                dist[nb] = dist[node] + 1
                if nb not in topo.host_attach:
                    frontier.append(nb)
    return dist


def next_hop_sets(
    topo: Topology, dead_links: set[tuple[str, str]] | None = None
) -> dict[str, dict[str, list[str]]]:
    """Equal-cost next hops: result[switch][dst_host] = sorted neighbor list.

    Computed from per-destination BFS over the surviving graph; a link in
    ``dead_links`` (sorted pairs) is excluded.
    """
    dead = dead_links or set()

    def alive(a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) not in dead

    table: dict[str, dict[str, list[str]]] = {sw: {} for sw in topo.switches}
    for dst in topo.hosts:
        dist = bfs_distances(topo, dst, dead)
        for sw in topo.switches:
            if sw not in dist:
                continue
            hops = [
                nb
                for nb in topo.adj[sw]
                if alive(sw, nb) and dist.get(nb, -1) == dist[sw] - 1
            ]
            if hops:
                table[sw][dst] = sorted(hops)
    return table


def k_shortest_paths(
    topo: Topology,
    src: str,
    dst: str,
    k: int,
    dead_links: set[tuple[str, str]] | None = None,
) -> list[list[str]]:
    """Up to k loop-free paths in nondecreasing hop order (lexicographic ties).

    Lazy-deviation variant of repeated shortest-path search: expands simple
    paths in (length, nodes) order, which yields deterministic results.
    """
    if src == dst:
        raise ValueError("src and dst must differ")
    dead = dead_links or set()

    def alive(a: str, b: str) -> bool:
        return ((a, b) if a < b else (b, a)) not in dead

    hostset = set(topo.hosts)
    paths: list[list[str]] = []
    heap: list[tuple[int, list[str]]] = [(0, [src])]
    pops: dict[str, int] = {}
    while heap and len(paths) < k:
        length, path = heapq.heappop(heap)
        last = path[-1]
        pops[last] = pops.get(last, 0) + 1
        if last == dst:
            paths.append(path)
            continue
        if pops[last] > k:
            continue  # enough shortest detours already pass through here
        for nb in sorted(topo.adj[last]):
            if nb in path:
                continue
            if nb in hostset and nb != dst:
                continue
            if not alive(last, nb):
                continue
            heapq.heappush(heap, (length + 1, path + [nb]))
    return paths
