"""Deterministic discrete-event world hosting collection and downward OSR.

Time is an integer tick (one millisecond). Events with equal ticks run in the
order they were scheduled, and every random draw comes from a named
``random.Random`` stream derived from the run seed, so a config plus seed
fully determines the event log.
"""
import heapq
import random
from dataclasses import dataclass, field

from osr.bloom import SINK_ID
from osr.collection import (
    LOAD_BALANCE_PROB,
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
from osr.netsim.metrics import Metrics
from osr.netsim.radio import LinkStreams, RadioModel, distance
from osr.netsim.topology import Topology, gen_linear_topology, gen_uniform_topology
from osr.node import ActionKind, ChildTable, DupHistory, OSRNode, TxType

_TYPE_CODE = {TxType.UNICAST: "U", TxType.MULTICAST: "M", TxType.BROADCAST: "B"}
INF = float("inf")


@dataclass
class SimNode:
    osr: OSRNode
    estimates: dict = field(default_factory=dict)
    parent: int = None
    cost: float = INF
    up_seq: int = 0


@dataclass
class RunResult:
    metrics: Metrics
    events: list
    world: "World"


def build_topology(cfg):
    if cfg.topology == "linear":
        return gen_linear_topology(cfg.nodes, radio_range=cfg.radio_range)
    if cfg.topology == "uniform":
        return gen_uniform_topology(cfg.nodes, cfg.area_side, cfg.topology_seed, cfg.radio_range)
    return Topology.load(cfg.topology_file)


class World:
    """One isolated simulation.

    ``link_prob`` optionally overrides the radio model with explicit per
    ordered-pair reception probabilities; pairs absent from it fall back to
    the distance law, and a probability of 0 removes the link.
    """

    def __init__(self, cfg, topology=None, link_prob=None):
        self.cfg = cfg.validate()
        self.topology = topology if topology is not None else build_topology(cfg)
        self.radio = RadioModel(cfg.p_max, self.topology.range, cfg.loss_exponent)
        self.sink_id = self.topology.sink
        self.now = 0
        self.cycle = -1
        self.events = []
        self.metrics = Metrics(self.sink_id)
        self._queue = []
        self._order = 0
        self._links = LinkStreams(cfg.seed)
        self._rng_up = random.Random(f"upward:{cfg.seed}")
        self._rng_traffic = random.Random(f"traffic:{cfg.seed}")
        self._rng_balance = random.Random(f"balance:{cfg.seed}")

        self.prob = self._link_table(link_prob or {})
        self.neighbors = {i: [] for i in self.topology.ids}
        for a, b in sorted(self.prob):
            self.neighbors[a].append(b)

        self.nodes = {}
        for nid in self.topology.ids:
            osr = OSRNode(
                nid,
                ChildTable(cfg.child_capacity, cfg.ttl_init),
                DupHistory(cfg.dup_capacity),
                max_bflt_len=cfg.max_bflt_len,
            )
            node = SimNode(osr)
            for nb in self.neighbors[nid]:
                node.estimates[nb] = LinkEstimate(nb, self._model_etx(nid, nb), cfg.etx_alpha)
            self.nodes[nid] = node
        self.nodes[self.sink_id].cost = 0.0
        self.sink = Sink(
            self.nodes[self.sink_id].osr, RouteTable(cfg.ttl_init), cfg.max_bflt_len, cfg.k
        )
        self._payload = bytes(cfg.down_payload)
        self._targets = [i for i in self.topology.ids if i != self.sink_id]

    # ----------------------------------------------------------- plumbing

    def _link_table(self, override):
        pos = self.topology.positions
        table = {}
        for a, nbrs in self.topology.adjacency().items():
            for b in nbrs:
                p = self.radio.probability(distance(pos[a], pos[b]))
                if p > 0.0:
                    table[(a, b)] = p
        for (a, b), p in override.items():
            if p > 0.0:
                table[(a, b)] = float(p)
            else:
                table.pop((a, b), None)
        return table

    def _ack_p(self, sender, receiver):
        return self.prob.get((receiver, sender), 0.0) * self.cfg.ack_scale

    def _model_etx(self, a, b):
        p = self.prob[(a, b)] * self._ack_p(a, b)
        return 1.0 / p if p > 0 else 1e6

    def emit(self, node, kind, tick=None, **details):
        ev = (self.now if tick is None else tick, node, kind, details)
        self.metrics.apply(ev)
        if self.cfg.log_events:
            self.events.append(ev)

    def schedule(self, tick, fn, *args):
        self._order += 1
        heapq.heappush(self._queue, (tick, self._order, fn, args))

    def drain(self, until=None):
        queue = self._queue
        while queue:
            if until is not None and queue[0][0] > until:
                break
            tick, _, fn, args = heapq.heappop(queue)
            self.now = tick
            fn(*args)

    def _roll(self, sender, receiver):
        p = self.prob.get((sender, receiver), 0.0)
        return p > 0.0 and self._links.get(sender, receiver).random() < p

    def _unicast_attempts(self, sender, receiver):
        """Return ``(first data reception attempt or None, acked, attempts)``."""
        got = None
        for attempt in range(self.cfg.max_retx + 1):
            if self._roll(sender, receiver):
                if got is None:
                    got = attempt
                ack_p = self._ack_p(sender, receiver)
                if ack_p > 0.0 and self._links.get(receiver, sender).random() < ack_p:
                    return got, True, attempt + 1
        return got, False, self.cfg.max_retx + 1

    def _learn(self, sender, receiver, acked, attempts):
        est = self.nodes[sender].estimates.get(receiver)
        if est is not None:
            est.update(attempts if acked else 2 * attempts)

    # ----------------------------------------------------------- collection

    def start_cycle(self, reschedule=True):
        self.cycle += 1
        self.emit(self.sink_id, "cycle", cycle=self.cycle)
        for node in self.nodes.values():
            node.osr.children.decay()
        self.update_routing()
        for nid in self._targets:
            self.schedule(self.now + self._rng_up.randrange(self.cfg.cycle_ticks), self._originate, nid)
        if reschedule:
            self.schedule(self.now + self.cfg.cycle_ticks, self.start_cycle)

    def update_routing(self):
        """Converge advertised path costs, then let every node pick a parent."""
        cost = {nid: INF for nid in self.nodes}
        cost[self.sink_id] = 0.0
        heap = [(0.0, self.sink_id)]
        while heap:
            c, v = heapq.heappop(heap)
            if c > cost[v]:
                continue
            for u in self.neighbors[v]:
                est = self.nodes[u].estimates.get(v)
                if est is None:
                    continue
                cand = c + est.etx
                if cand < cost[u]:
                    cost[u] = cand
                    heapq.heappush(heap, (cand, u))
        balance = self.cfg.load_balance
        for nid in self._targets:
            node = self.nodes[nid]
            node.cost = cost[nid]
            cands = {
                nb: (cost[nb], est.etx)
                for nb, est in node.estimates.items()
                if cost[nb] < cost[nid]
            }
            if balance and self._rng_balance.random() < LOAD_BALANCE_PROB:
                node.parent = load_balance_parent(cands, self._rng_balance)
            else:
                node.parent = select_parent(node.parent, cands)

    def _originate(self, nid):
        node = self.nodes[nid]
        if node.parent is None:
            self.emit(nid, "udrop", origin=nid, reason="no-parent")
            return
        pkt = UpwardPacket.originate(nid, node.up_seq, self.cfg.up_payload)
        node.up_seq += 1
        self.emit(nid, "ugen", origin=nid)
        self._send_up(nid, pkt)

    def _send_up(self, nid, pkt):
        parent = self.nodes[nid].parent
        if parent is None:
            self.emit(nid, "udrop", origin=pkt.origin, reason="no-parent")
            return
        got, acked, attempts = self._unicast_attempts(nid, parent)
        air = self.cfg.airtime_ticks
        for a in range(attempts):
            self.emit(nid, "utx", tick=self.now + a * air, to=parent, attempt=a, origin=pkt.origin)
        self._learn(nid, parent, acked, attempts)
        if got is not None:
            self.schedule(self.now + (got + 1) * air, self._recv_up, parent, nid, pkt)
        elif not acked:
            self.emit(nid, "udrop", origin=pkt.origin, reason="link")

    def _recv_up(self, nid, sender, pkt):
        self.emit(nid, "urx", origin=pkt.origin, **{"from": sender})
        self.nodes[nid].osr.children.observe_upward(sender)
        if nid == self.sink_id:
            self.sink.routes.sink_update(pkt, self.cycle)
            self.emit(nid, "usink", origin=pkt.origin, hops=len(pkt.path_so_far))
            return
        try:
            fwd = forward_upward(nid, pkt)
        except LoopDetected:
            self.emit(nid, "udrop", origin=pkt.origin, reason="loop")
            return
        self._send_up(nid, fwd)

    # ----------------------------------------------------------- downward

    def pick_target(self):
        if self.cfg.target_mode == "collected":
            fresh = self.sink.routes.fresh(self.cycle)
            return self._rng_traffic.choice(fresh) if fresh else None
        return self._rng_traffic.choice(self._targets)

    def _dispatch_next(self, remaining):
        self.dispatch(self.pick_target())
        if remaining > 1:
            self.schedule(self.now + self.cfg.interval_ticks, self._dispatch_next, remaining - 1)

    def dispatch(self, dest):
        """Issue one downward packet from the sink; returns it or ``None`` on NoRoute."""
        if dest is None:
            self.emit(self.sink_id, "noroute", dest=None)
            return None
        try:
            pkt, targets = self.sink.dispatch_downward(dest, self._payload, self.cycle)
        except NoRoute:
            self.emit(self.sink_id, "noroute", dest=dest)
            return None
        route = list(self.sink.routes.lookup(dest))
        tx = "multicast" if pkt.tx_type == TxType.MULTICAST else "unicast"
        self.emit(self.sink_id, "dispatch", seq=pkt.seq, dest=dest, route=route, tx=tx, targets=list(targets))
        if pkt.tx_type == TxType.MULTICAST:
            self._send_frame(self.sink_id, pkt)
        else:
            self._send_unicast_down(self.sink_id, targets[0], pkt, TxType.UNICAST)
        return pkt

    def _send_frame(self, nid, pkt):
        """Link-layer broadcast (used for both multicast and opportunistic broadcast)."""
        frame = pkt.pack()
        self.emit(nid, "tx", seq=pkt.seq, dest=pkt.dest, type=_TYPE_CODE[pkt.tx_type], to=None, attempt=0)
        air = self.cfg.airtime_ticks
        for nb in self.neighbors[nid]:
            for copy in range(self.cfg.bcast_repeats):
                if self._roll(nid, nb):
                    self.schedule(self.now + (copy + 1) * air, self._recv_down, nb, nid, frame)
                    break

    def _send_unicast_down(self, nid, to, pkt, received_as):
        frame = pkt.pack()
        got, acked, attempts = self._unicast_attempts(nid, to)
        air = self.cfg.airtime_ticks
        for a in range(attempts):
            self.emit(nid, "tx", tick=self.now + a * air, seq=pkt.seq, dest=pkt.dest, type="U", to=to, attempt=a)
        self._learn(nid, to, acked, attempts)
        if got is not None:
            self.schedule(self.now + (got + 1) * air, self._recv_down, to, nid, frame)
        if not acked:
            self.schedule(self.now + attempts * air, self._unicast_failed, nid, pkt, received_as)

    def _unicast_failed(self, nid, pkt, received_as):
        action = self.nodes[nid].osr.on_unicast_failure(pkt, received_as)
        self.emit(nid, "act", seq=pkt.seq, dest=pkt.dest, action=action.kind.value, reason=action.reason or "unicast-failed")
        if action.kind == ActionKind.BROADCAST:
            self._send_frame(nid, action.packet)

    def _recv_down(self, nid, sender, frame):
        node = self.nodes[nid].osr
        action, pkt = node.handle_frame(frame)
        seq, dest = (pkt.seq, pkt.dest) if pkt is not None else (None, None)
        rx_type = _TYPE_CODE[pkt.tx_type] if pkt is not None else "?"
        self.emit(nid, "rx", seq=seq, dest=dest, type=rx_type, **{"from": sender})
        self.emit(nid, "act", seq=seq, dest=dest, action=action.kind.value, reason=action.reason, targets=list(action.targets))
        if action.kind == ActionKind.UNICAST:
            self._send_unicast_down(nid, action.targets[0], action.packet, pkt.tx_type)
        elif action.kind == ActionKind.MULTICAST:
            self._send_frame(nid, action.packet)

    # ----------------------------------------------------------- driver

    def run(self):
        cfg = self.cfg
        start = cfg.warmup_cycles * cfg.cycle_ticks + 1
        end = start + cfg.downward * cfg.interval_ticks
        self.schedule(0, self.start_cycle)
        if cfg.downward:
            self.schedule(start, self._dispatch_next, cfg.downward)
        self.drain(until=end)
        return RunResult(self.metrics, self.events, self)


def run(cfg, topology=None):
    """Execute one configured experiment and return its metrics and event log."""
    return World(cfg, topology).run()
