import random

import pytest

from reordernet.traffic import (
    CdfError,
    cdf_mean,
    empirical_load,
    incast_flows,
    load_cdf,
    parse_cdf,
    poisson_flows,
    sample_size,
)

HOSTS = [f"h{i}" for i in range(16)]


def test_parse_cdf_validation():
    with pytest.raises(CdfError):
        parse_cdf("1000 0.5\n500 1.0\n")  # sizes must grow
    with pytest.raises(CdfError):
        parse_cdf("1000 0.5\n2000 0.4\n")  # probs must not decrease
    with pytest.raises(CdfError):
        parse_cdf("1000 0.5\n")  # must end at 1.0
    with pytest.raises(CdfError):
        parse_cdf("1000 0.5 extra\n2000 1.0\n")
    cdf = parse_cdf("# comment\n1000 0.5\n\n2000 1.0\n")
    assert cdf == [(1000, 0.5), (2000, 1.0)]


def test_bundled_cdfs_load():
    for name in ("heavy_tailed", "high_variance"):
        cdf = load_cdf(name)
        assert cdf[-1][1] == 1.0
        assert cdf_mean(cdf) > 0


def test_sampling_bounds_and_mean():
    cdf = parse_cdf("1000 0.25\n2000 0.75\n10000 1.0\n")
    rng = random.Random(1)
    samples = [sample_size(cdf, rng) for _ in range(40_000)]
    assert min(samples) >= 1000 and max(samples) <= 10000
    mean = sum(samples) / len(samples)
    assert abs(mean - cdf_mean(cdf)) / cdf_mean(cdf) < 0.02


def test_poisson_flows_offered_load():
    cdf = load_cdf("heavy_tailed")
    flows = poisson_flows(seed=3, n_flows=4000, load=0.6, hosts=HOSTS,
                          host_bw_bps=10_000_000_000, cdf=cdf)
    assert len(flows) == 4000
    assert all(f.src != f.dst for f in flows)
    assert all(f.arrival_ns >= 0 for f in flows)
    got = empirical_load(flows, HOSTS, 10_000_000_000)
    assert abs(got - 0.6) / 0.6 < 0.15


def test_poisson_flows_deterministic():
    cdf = load_cdf("heavy_tailed")
    kw = dict(n_flows=50, load=0.5, hosts=HOSTS, host_bw_bps=10_000_000_000, cdf=cdf)
    a = poisson_flows(seed=9, **kw)
    b = poisson_flows(seed=9, **kw)
    c = poisson_flows(seed=10, **kw)
    assert a == b
    assert a != c


def test_incast_structure():
    flows = incast_flows(seed=1, fan_in=8, flow_bytes=40_000, epochs=5,
                         load=0.5, hosts=HOSTS, host_bw_bps=10_000_000_000)
    assert len(flows) == 40
    for epoch in range(5):
        group = [f for f in flows if f.query_id == epoch]
        assert len(group) == 8
        assert len({f.dst for f in group}) == 1  # one victim
        assert len({f.src for f in group}) == 8  # distinct senders
        assert group[0].dst not in {f.src for f in group}
        assert len({f.arrival_ns for f in group}) == 1  # synchronized
    # Epoch spacing keeps the victim link at the configured load on average.
    interval = flows[8].arrival_ns - flows[0].arrival_ns
    expect = 8 * 40_000 * 8 / (0.5 * 10_000_000_000) * 1e9
    assert abs(interval - expect) < 2


def test_incast_fan_in_bound():
    with pytest.raises(ValueError):
        incast_flows(seed=1, fan_in=16, flow_bytes=1000, epochs=1, load=0.5,
                     hosts=HOSTS, host_bw_bps=10_000_000_000)
