"""Traffic generation: flow-size CDF sampling, Poisson arrivals, incast.

Flow-size CDFs are plain-text two-column files (size_bytes cum_prob),
nondecreasing in both columns and ending at probability 1.0.  Sampling uses
inverse-transform with linear interpolation between points; probability mass
below the first point collapses onto the first size.

Offered load is defined as offered bytes per second divided by the aggregate
host line rate.
"""

from __future__ import annotations

import importlib.resources
import math
import random
from dataclasses import dataclass

from .core import Verb

BUNDLED_CDFS = ("heavy_tailed", "high_variance")


class CdfError(ValueError):
    pass


@dataclass(slots=True)
class FlowSpec:
    flow_id: int
    src: str
    dst: str
    size_bytes: int
    arrival_ns: int
    verb: Verb = Verb.SEND_RECV
    query_id: int | None = None


def load_cdf(source: str) -> list[tuple[int, float]]:
    """Load a CDF by bundled name or file path."""
    if source in BUNDLED_CDFS:
        text = (
            importlib.resources.files("reordernet.data")
            .joinpath(f"{source}.cdf")
            .read_text()
        )
    else:
        with open(source) as fh:
            text = fh.read()
    return parse_cdf(text)


def parse_cdf(text: str) -> list[tuple[int, float]]:
    points: list[tuple[int, float]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise CdfError(f"line {lineno}: expected 'size_bytes cum_prob'")
        size, prob = int(parts[0]), float(parts[1])
        if size <= 0 or not 0.0 <= prob <= 1.0:
            raise CdfError(f"line {lineno}: size must be positive, prob in [0, 1]")
        if points and (size <= points[-1][0] or prob < points[-1][1]):
            raise CdfError(f"line {lineno}: sizes and probabilities must be nondecreasing")
        points.append((size, prob))
    if not points or points[-1][1] != 1.0:
        raise CdfError("CDF must end at probability 1.0")
    return points


def sample_size(cdf: list[tuple[int, float]], rng: random.Random) -> int:
    u = rng.random()
    prev_size, prev_p = cdf[0]
    if u <= prev_p:
        return prev_size
    for size, p in cdf[1:]:
        if u <= p:
            frac = (u - prev_p) / (p - prev_p)
            return max(1, round(prev_size + frac * (size - prev_size)))
        prev_size, prev_p = size, p
    return cdf[-1][0]


def cdf_mean(cdf: list[tuple[int, float]]) -> float:
    """Analytic mean of the piecewise-linear inverse-transform sampler."""
    mean = cdf[0][0] * cdf[0][1]
    for (s0, p0), (s1, p1) in zip(cdf, cdf[1:]):
        mean += (p1 - p0) * (s0 + s1) / 2
    return mean


def poisson_flows(
    seed: int,
    n_flows: int,
    load: float,
    hosts: list[str],
    host_bw_bps: int,
    cdf: list[tuple[int, float]],
    verb: Verb = Verb.SEND_RECV,
    write_fraction: float = 0.0,
) -> list[FlowSpec]:
    """Poisson flow arrivals at the configured fraction of aggregate host rate."""
    if not 0 < load:
        raise ValueError("load must be positive")
    if len(hosts) < 2:
        raise ValueError("need at least two hosts")
    rng = random.Random(f"traffic:{seed}")
    mean_bits = cdf_mean(cdf) * 8
    rate_per_ns = load * len(hosts) * host_bw_bps / mean_bits / 1e9
    flows = []
    t = 0.0
    for i in range(n_flows):
        t += rng.expovariate(rate_per_ns)
        src = rng.choice(hosts)
        dst = rng.choice(hosts)
        while dst == src:
            dst = rng.choice(hosts)
        v = verb
        if write_fraction and rng.random() < write_fraction:
            v = Verb.WRITE
        flows.append(
            FlowSpec(i, src, dst, sample_size(cdf, rng), round(t), verb=v)
        )
    return flows


def incast_flows(
    seed: int,
    fan_in: int,
    flow_bytes: int,
    epochs: int,
    load: float,
    hosts: list[str],
    host_bw_bps: int,
) -> list[FlowSpec]:
    """Synchronized fan-in bursts: one victim per epoch, fan_in senders.

    Epoch spacing is set so the victim link carries ``load`` of its line rate
    on average: interval = fan_in * flow_bytes * 8 / (load * host_bw).
    """
    if fan_in >= len(hosts):
        raise ValueError("fan_in must leave at least one victim host")
    rng = random.Random(f"incast:{seed}")
    interval = fan_in * flow_bytes * 8 / (load * host_bw_bps) * 1e9
    flows = []
    fid = 0
    for epoch in range(epochs):
        start = round(epoch * interval)
        victim = rng.choice(hosts)
        senders = rng.sample([h for h in hosts if h != victim], fan_in)
        for src in senders:
            flows.append(
                FlowSpec(fid, src, victim, flow_bytes, start, query_id=epoch)
            )
            fid += 1
    return flows


def empirical_load(flows: list[FlowSpec], hosts: list[str], host_bw_bps: int) -> float:
    """Offered bytes over the generation span, as a fraction of host line rate."""
    if len(flows) < 2:
        return 0.0
    span_ns = max(f.arrival_ns for f in flows) - min(f.arrival_ns for f in flows)
    if span_ns <= 0:
        return math.inf
    total_bits = sum(f.size_bytes for f in flows) * 8
    return total_bits / (span_ns * 1e-9) / (len(hosts) * host_bw_bps)
