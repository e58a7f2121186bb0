"""Hand-built micro-topologies exercising passive and active opportunistic routing.

All links are forced to probability 0 or 1, so the outcome is fixed.
"""
from dataclasses import dataclass, field, replace

from osr.bloom import encode_path
from osr.collection import UpwardPacket
from osr.netsim.config import SimConfig
from osr.netsim.topology import LINEAR_NODES, Topology, gen_linear_topology
from osr.netsim.world import World

SCENARIOS = ("passive-or", "active-or", "linear-reach")

_CFG = SimConfig(
    topology="file", topology_file="<scenario>", max_bflt_len=16, max_retx=3,
    bcast_repeats=1, p_max=1.0, downward=0,
)


@dataclass
class ScenarioResult:
    name: str
    passed: bool
    checks: list = field(default_factory=list)
    trace: list = field(default_factory=list)

    def check(self, label, ok):
        self.checks.append((label, bool(ok)))
        if not ok:
            self.passed = False

    def report(self):
        lines = [f"scenario {self.name}: {'PASS' if self.passed else 'FAIL'}"]
        lines += [f"  [{'ok' if ok else 'FAIL'}] {label}" for label, ok in self.checks]
        if not self.passed:
            lines.append("  trace:")
            lines += [f"    {t}" for t in self.trace]
        return "\n".join(lines)


def _scattered(ids):
    # far apart: no link exists unless forced
    return Topology({nid: (1000.0 * i, 0.0) for i, nid in enumerate(ids)}, ids[0], 20.0)


def _links(pairs, broken=()):
    prob = {}
    for a, b in pairs:
        prob[(a, b)] = 1.0
        prob[(b, a)] = 1.0
    for a, b in broken:
        prob[(a, b)] = 0.0
        prob[(b, a)] = 0.0
    return prob


def _first_id(pred, start, taken):
    nid = start
    while nid in taken or not pred(nid):
        nid += 1
    return nid


def _trace(world, key):
    out = []
    for tick, node, kind, d in world.events:
        if (d.get("seq"), d.get("dest")) != key:
            continue
        if kind == "rx":
            out.append(f"t={tick} node {node} rx {d['type']} from {d['from']}")
        elif kind == "act":
            tgt = f" -> {d['targets']}" if d.get("targets") else ""
            why = f" ({d['reason']})" if d.get("reason") else ""
            out.append(f"t={tick} node {node} {d['action']}{tgt}{why}")
        elif kind == "dispatch":
            out.append(f"t={tick} sink dispatch route {d['route']}")
    return out


def _prime(world, children, routes):
    world.cycle = 0
    for parent, kids in children.items():
        for kid in kids:
            world.nodes[parent].osr.children.observe_upward(kid)
    for dest, path in routes.items():
        pkt = UpwardPacket(dest, 0, tuple(reversed(path)))
        world.sink.routes.sink_update(pkt, 0)


def _acts(world, key, node):
    return [d["action"] for _, n, kind, d in world.events
            if kind == "act" and n == node and (d.get("seq"), d.get("dest")) == key]


def _rx_from(world, key, node):
    return [d["from"] for _, n, kind, d in world.events
            if kind == "rx" and n == node and (d.get("seq"), d.get("dest")) == key]


def passive_or(max_bflt_len=16):
    """Route P -> C1 -> T with C1 -> T broken; C2 is a false-positive child of P and a parent of T."""
    sink, p, c1, t = 0, 1, 2, 3
    route = [p, c1, t]
    bf = encode_path(route, max_bflt_len)
    c2 = _first_id(lambda i: i in bf, 4, set(route) | {sink})
    ids = [sink, p, c1, t, c2]
    links = _links([(sink, p), (p, c1), (p, c2), (c1, c2), (c1, t), (c2, t)], broken=[(c1, t)])
    cfg = replace(_CFG, max_bflt_len=max_bflt_len)
    world = World(cfg, _scattered(ids), links)
    _prime(world, {sink: [p], p: [c1, c2], c1: [t], c2: [t]}, {t: route})
    pkt = world.dispatch(t)
    world.drain()

    res = ScenarioResult("passive-or", True)
    key = pkt.key
    res.trace = _trace(world, key)
    res.check(f"C2={c2} is a false-positive match of the route filter", c2 in pkt.path_bflt)
    res.check("P multicasts to both matched children", "multicast" in _acts(world, key, p))
    res.check("T delivers the packet", "deliver" in _acts(world, key, t))
    res.check("T receives it from C2", c2 in _rx_from(world, key, t))
    res.check("C1 -> T unicast fails", "broadcast" in _acts(world, key, c1))
    res.check("exactly one delivery", world.metrics.delivered == 1)
    return res


def active_or(max_bflt_len=16):
    """P loses its link to T; P_A and P_B (parents of T) relay the broadcast, U ignores it."""
    sink, p, t, pa, pb = 0, 1, 2, 3, 4
    route = [p, t]
    bf = encode_path(route, max_bflt_len)
    u = _first_id(lambda i: i not in bf, 5, {sink, p, t, pa, pb})
    x = _first_id(lambda i: i not in bf, u + 1, {sink, p, t, pa, pb, u})
    ids = [sink, p, t, pa, pb, u, x]
    links = _links(
        [(sink, p), (p, pa), (p, pb), (p, u), (pa, t), (pb, t), (u, x), (p, t)], broken=[(p, t)]
    )
    world = World(replace(_CFG, max_bflt_len=max_bflt_len), _scattered(ids), links)
    _prime(world, {sink: [p], p: [t], pa: [t], pb: [t], u: [x]}, {t: route})
    pkt = world.dispatch(t)
    world.drain()

    res = ScenarioResult("active-or", True)
    key = pkt.key
    res.trace = _trace(world, key)
    res.check("P falls back to broadcast after unicast failure", "broadcast" in _acts(world, key, p))
    res.check("U (T not a child) ignores the broadcast", _acts(world, key, u) == ["ignore"])
    res.check("P_A forwards to T", "unicast" in _acts(world, key, pa))
    res.check("P_B forwards to T", "unicast" in _acts(world, key, pb))
    res.check("T delivers exactly once", _acts(world, key, t).count("deliver") == 1)
    res.check("T receives from a parent-set member", set(_rx_from(world, key, t)) <= {pa, pb})
    res.check("one packet with active OR", world.metrics.active_or_packets == 1)
    return res


def linear_reach(max_bflt_len=40):
    """Lossless 74-node chain: one collection cycle, then one packet to every node."""
    topo = gen_linear_topology(LINEAR_NODES)
    links = {pair: 1.0 for pair in _all_pairs(topo)}
    cfg = replace(_CFG, topology="linear", topology_file=None, max_bflt_len=max_bflt_len)
    world = World(cfg, topo, links)
    world.start_cycle(reschedule=False)
    world.drain()
    targets = [i for i in topo.ids if i != topo.sink]
    for dest in targets:
        world.dispatch(dest)
        world.drain()

    m = world.metrics
    res = ScenarioResult("linear-reach", True)
    res.check(f"all {len(targets)} non-sink nodes delivered", m.delivered == len(targets) == m.sent)
    res.check("max reachable hops is 68", m.max_hops == 68)
    res.check("no active opportunistic routing", m.active_or_packets == 0)
    if not res.passed:
        lost = sorted(set(targets) - {d for _, d in m.delivered_keys()})
        res.trace = [f"undelivered: {lost}"]
    return res


def _all_pairs(topo):
    for a, nbrs in topo.adjacency().items():
        for b in nbrs:
            yield (a, b)


def run_scenario(name):
    fn = {"passive-or": passive_or, "active-or": active_or, "linear-reach": linear_reach}.get(name)
    if fn is None:
        raise KeyError(name)
    return fn()
