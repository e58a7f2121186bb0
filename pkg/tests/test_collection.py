import io
import json
import random

import pytest

from osr.bloom import encode_path
from osr.collection import (
    LinkEstimate,
    LoopDetected,
    NoRoute,
    RouteTable,
    Sink,
    UpwardPacket,
    forward_upward,
    load_balance_parent,
    select_parent,
)
from osr.node import OSRNode, TxType


def test_single_neighbor_sink():
    assert select_parent(None, {0: (0.0, 1.2)}) == 0


def test_tie_prefers_smaller_id():
    assert select_parent(None, {9: (1.0, 1.0), 4: (1.0, 1.0)}) == 4


@pytest.mark.parametrize("alt, switch", [(1.6, False), (1.4, True), (1.5, True)])
def test_hysteresis(alt, switch):
    cands = {1: (1.0, 1.0), 2: (alt - 1.0, 1.0)}
    assert (select_parent(1, cands) == 2) is switch


def test_no_finite_candidate():
    assert select_parent(3, {3: (float("inf"), 1.0)}) is None


def test_load_balance_window():
    cands = {1: (1.0, 1.0), 2: (1.5, 1.0), 3: (3.5, 1.0)}
    rng = random.Random(0)
    picks = {load_balance_parent(cands, rng) for _ in range(200)}
    assert picks == {1, 2}


def test_link_estimate_ewma():
    est = LinkEstimate(5, 1.0, alpha=0.5)
    assert est.update(3.0) == 2.0
    assert est.update(0.0) == 1.0
    with pytest.raises(ValueError):
        LinkEstimate(5, alpha=0.0)


def test_upward_accumulation():
    pkt = UpwardPacket.originate(7, 0)
    for hop in (3, 2):
        pkt = forward_upward(hop, pkt)
    assert pkt.path_so_far == (7, 3, 2)
    with pytest.raises(LoopDetected):
        forward_upward(3, pkt)


def test_route_reversal_and_staleness():
    rt = RouteTable(staleness=4)
    rt.sink_update(UpwardPacket(9, 0, (9, 4)), cycle=2)
    assert rt.lookup(9, 5) == (4, 9)
    with pytest.raises(NoRoute):
        rt.lookup(9, 6)
    with pytest.raises(NoRoute):
        rt.lookup(1234)
    assert rt.fresh(5) == [9] and rt.fresh(6) == []


def test_route_dump():
    rt = RouteTable()
    rt.sink_update(UpwardPacket(9, 0, (9, 4)), cycle=1)
    buf = io.StringIO()
    rt.dump(buf)
    assert json.loads(buf.getvalue()) == {"9": {"path": [4, 9], "cycle": 1}}


def test_sink_dispatch_two_hop():
    sink = Sink()
    sink.routes.sink_update(UpwardPacket(9, 0, (9, 4)), 0)
    sink.node.children.observe_upward(4)
    pkt, targets = sink.dispatch_downward(9, b"x", 0)
    assert pkt.hop_ttl == 4 and pkt.path_bflt == encode_path([4, 9], 16)
    assert targets == (4,) and pkt.tx_type == TxType.UNICAST
    assert pkt.key in sink.node.history


def test_sink_dispatch_adjacent_dest():
    sink = Sink()
    sink.routes.sink_update(UpwardPacket(9, 0, (9,)), 0)
    pkt, _ = sink.dispatch_downward(9)
    assert pkt.path_bflt.m == 8 and 9 in pkt.path_bflt


def test_sink_filter_capped():
    sink = Sink(max_bflt_len=16)
    path = tuple(range(68, 0, -1))
    sink.routes.sink_update(UpwardPacket(1, 0, path), 0)
    pkt, _ = sink.dispatch_downward(1)
    assert pkt.path_bflt.m == 128 and pkt.hop_ttl == 136


def test_sink_multicasts_when_children_match():
    sink = Sink(OSRNode(0))
    sink.routes.sink_update(UpwardPacket(9, 0, (9, 4)), 0)
    bf = encode_path([4, 9], 16)
    extra = next(i for i in range(10, 70000) if i in bf)
    sink.node.children.observe_upward(extra)
    pkt, targets = sink.dispatch_downward(9)
    assert targets == tuple(sorted({4, extra})) and pkt.tx_type == TxType.MULTICAST


def test_unknown_destination():
    with pytest.raises(NoRoute):
        Sink().dispatch_downward(3)
