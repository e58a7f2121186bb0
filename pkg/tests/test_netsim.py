import io
import json
import random
from dataclasses import replace

import pytest

from osr.netsim import (
    ConfigError,
    Metrics,
    RadioModel,
    SimConfig,
    Topology,
    TopologyError,
    World,
    gen_linear_topology,
    gen_uniform_topology,
    preset,
    read_event_log,
    run,
    write_event_log,
)
from osr.netsim.radio import LinkStreams, reception_roll
from osr.scenarios import _all_pairs

SMALL = replace(preset("linear74"), downward=60, warmup_cycles=1)


def perfect_links(topo):
    return {pair: 1.0 for pair in _all_pairs(topo)}


# ------------------------------------------------------------------ radio

def test_radio_law():
    r = RadioModel(0.9, 20.0)
    assert r.probability(0.0) == pytest.approx(0.9)
    assert r.probability(10.0) == pytest.approx(0.675)
    assert r.probability(20.0) == 0.0 and r.probability(25.0) == 0.0
    with pytest.raises(ValueError):
        r.probability(-1)


def test_reception_frequency_half_range():
    r, rng, n = RadioModel(), random.Random(2), 100_000
    hits = sum(reception_roll(r, 10.0, rng) for _ in range(n))
    sigma = (0.675 * 0.325 / n) ** 0.5
    assert abs(hits / n - 0.675) < 3 * sigma


def test_out_of_range_never_received():
    rng = random.Random(0)
    assert not any(reception_roll(RadioModel(), 21.0, rng) for _ in range(1000))


def test_link_streams_independent_and_seeded():
    a, b = LinkStreams(1), LinkStreams(1)
    first = [a.get(1, 2).random() for _ in range(3)]
    a.get(2, 1).random()
    assert [b.get(1, 2).random() for _ in range(3)] == first


# ------------------------------------------------------------------ topology

def test_linear_depth():
    assert gen_linear_topology().sink_depth() == 68
    assert gen_linear_topology(69, twig_spec=()).sink_depth() == 68
    with pytest.raises(TopologyError):
        gen_linear_topology(60, depth=68)


def test_uniform_topology_reproducible():
    a = gen_uniform_topology(100, seed=3)
    b = gen_uniform_topology(100, seed=3)
    assert a.positions == b.positions and a.is_connected()
    assert a.positions[0] == (0.0, 0.0)


def test_uniform_density_scaling():
    topo = gen_uniform_topology(400, seed=1)
    xs = [p[0] for p in topo.positions.values()]
    assert max(xs) <= 100.0 * (400 / 225) ** 0.5


def test_topology_file_roundtrip(tmp_path):
    topo = gen_linear_topology()
    path = tmp_path / "t.json"
    topo.save(path)
    assert Topology.load(path) == topo
    doc = json.loads(path.read_text())
    assert set(doc) == {"nodes", "sink", "range"}
    with pytest.raises(TopologyError):
        Topology.from_json({"nodes": [{"id": 1, "x": 0, "y": 0}], "sink": 0, "range": 1})


# ------------------------------------------------------------------ config

def test_config_validation():
    with pytest.raises(ConfigError):
        SimConfig(max_bflt_len=0).validate()
    with pytest.raises(ConfigError):
        SimConfig(k=4).validate()
    with pytest.raises(ConfigError):
        SimConfig(mtu=30).validate()
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"nope": 1})
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"nodes": "many"})
    assert SimConfig.from_dict({"load_balance": "yes"}).load_balance is True


# ------------------------------------------------------------------ world

def test_perfect_links_deliver_everything():
    topo = gen_linear_topology()
    world = World(replace(SMALL, p_max=1.0), topo, perfect_links(topo))
    m = world.run().metrics
    assert m.pdr == 1.0 and m.active_or_packets == 0
    assert m.ucast_retx == 0


def test_dead_link_exhausts_retries_then_broadcasts():
    topo = Topology({0: (0.0, 0.0), 1: (10.0, 0.0), 2: (20.0, 0.0)}, 0, 20.0)
    cfg = replace(SMALL, topology="file", topology_file="x", max_retx=3, bcast_repeats=1, downward=0)
    world = World(cfg, topo, {(0, 1): 1.0, (1, 0): 1.0, (1, 2): 0.0, (2, 1): 1.0})
    world.cycle = 0
    world.nodes[1].osr.children.observe_upward(2)
    world.nodes[0].osr.children.observe_upward(1)
    from osr.collection import UpwardPacket
    world.sink.routes.sink_update(UpwardPacket(2, 0, (2, 1)), 0)
    world.dispatch(2)
    world.drain()
    tx = [d for _, n, k, d in world.events if k == "tx" and n == 1]
    assert [d["attempt"] for d in tx if d["type"] == "U"] == [0, 1, 2, 3]
    assert tx[-1]["type"] == "B" and world.metrics.active_or_packets == 1


def test_isolated_broadcast_reaches_nobody():
    topo = Topology({0: (0.0, 0.0), 5: (500.0, 0.0)}, 0, 20.0)
    cfg = replace(SMALL, topology="file", topology_file="x", downward=0)
    world = World(cfg, topo)
    from osr.bloom import encode_path
    from osr.node import DownwardPacket, TxType
    world._send_frame(5, DownwardPacket(TxType.BROADCAST, 0, 9, 4, encode_path([9], 16)))
    world.drain()
    assert not any(k == "rx" for _, _, k, _ in world.events)


def test_replay_reproduces_metrics():
    res = run(SMALL)
    buf = io.StringIO()
    write_event_log(res.events, buf)
    buf.seek(0)
    again = Metrics.replay(read_event_log(buf))
    assert again.summary() == res.metrics.summary()
    assert again.bucket_pdr() == res.metrics.bucket_pdr()


def test_same_seed_same_log():
    assert run(SMALL).events == run(SMALL).events
    assert run(SMALL).events != run(replace(SMALL, seed=2)).events


def test_duplicate_count_by_hand():
    """Hand-count duplicate transmissions on a five-node run and compare."""
    topo = Topology({0: (0, 0), 1: (10, 0), 2: (20, 0), 3: (10, 10), 4: (20, 10)}, 0, 15.0)
    cfg = replace(SMALL, topology="file", topology_file="x", downward=40, p_max=0.8)
    res = World(cfg, topo).run()
    routes, dup, total = {}, 0, 0
    for _, node, kind, d in res.events:
        if kind == "dispatch":
            routes[(d["seq"], d["dest"])] = set(d["route"]) | {0}
        elif kind == "tx":
            total += 1
            if d["type"] == "B" or node not in routes[(d["seq"], d["dest"])]:
                dup += 1
    s = res.metrics.summary()
    assert s["dup_tx"] == dup and s["tx_downward"] == total


def test_max_retx_monotone():
    base = replace(SMALL, downward=80, p_max=0.8, bcast_repeats=1)
    e2e = {0: [], 3: []}
    pdr = {0: 0.0, 3: 0.0}
    for seed in range(1, 11):
        for retx in (0, 3):
            s = run(replace(base, max_retx=retx, seed=seed)).metrics.summary()
            e2e[retx].append(s["e2e_pdr"])
            pdr[retx] += s["pdr"]
    # with no retries collection starves, so few packets are even dispatched:
    # the end-to-end ratio is compared seed by seed, the dispatched-packet PDR on average
    assert all(b >= a for a, b in zip(e2e[0], e2e[3]))
    assert pdr[3] >= pdr[0]


def test_noroute_is_logged_not_fatal():
    topo = Topology({0: (0, 0), 1: (10, 0)}, 0, 20.0)
    cfg = replace(SMALL, topology="file", topology_file="x", downward=0)
    world = World(cfg, topo)
    assert world.dispatch(1) is None
    assert world.metrics.no_route == 1


def test_bucket_pdr():
    m = Metrics()
    m.hops_sent.update({1: 2, 6: 1})
    m.hops_delivered.update({1: 1, 6: 1})
    assert m.bucket_pdr() == {(1, 5): 0.5, (6, 6): 1.0}
