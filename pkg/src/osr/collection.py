"""Simplified upward collection: ETX parent choice, path piggybacking, sink tomography.

Upward packets carry the raw list of ids they traverse, which is all the sink
needs to rebuild the reverse (downward) route of every origin.
"""
import json
import math
from dataclasses import dataclass, field

from osr.bloom import NUM_HASHES, SINK_ID, encode_path
from osr.node import DEFAULT_TTL_INIT, DownwardPacket, OSRNode, TxType

SWITCH_THRESHOLD = 0.5
LOAD_BALANCE_PROB = 0.25
LOAD_BALANCE_WINDOW = 1.0


class NoRoute(LookupError):
    pass


class LoopDetected(RuntimeError):
    pass


@dataclass
class LinkEstimate:
    neighbor: int
    etx: float = 1.0
    alpha: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        self.etx = max(1.0, self.etx)

    def update(self, sample):
        self.etx = max(1.0, (1.0 - self.alpha) * self.etx + self.alpha * sample)
        return self.etx


def _costs(candidates):
    return {nb: adv + link for nb, (adv, link) in candidates.items() if math.isfinite(adv + link)}


def select_parent(current, candidates, threshold=SWITCH_THRESHOLD):
    """Pick the minimum-cost parent with hysteresis.

    ``candidates`` maps neighbor id to ``(advertised path etx, link etx)``.
    Returns ``None`` if no candidate has a finite cost. The current parent is
    kept unless the best alternative beats it by at least ``threshold``.
    """
    costs = _costs(candidates)
    if not costs:
        return None
    best = min(costs, key=lambda nb: (costs[nb], nb))
    if current in costs and costs[current] - costs[best] < threshold:
        return current
    return best


def load_balance_parent(candidates, rng, window=LOAD_BALANCE_WINDOW):
    """Uniform choice among candidates within ``window`` etx of the best."""
    costs = _costs(candidates)
    if not costs:
        return None
    floor = min(costs.values())
    pool = sorted(nb for nb, c in costs.items() if c - floor <= window)
    return pool[rng.randrange(len(pool))]


@dataclass(frozen=True)
class UpwardPacket:
    origin: int
    origin_seq: int
    path_so_far: tuple
    payload_len: int = 60

    @classmethod
    def originate(cls, origin, origin_seq, payload_len=60):
        return cls(origin, origin_seq, (origin,), payload_len)


def forward_upward(node_id, pkt):
    """Append ``node_id`` to the carried path; raise :class:`LoopDetected` on a repeat."""
    if node_id in pkt.path_so_far:
        raise LoopDetected(f"node {node_id} already on path {pkt.path_so_far}")
    return UpwardPacket(pkt.origin, pkt.origin_seq, pkt.path_so_far + (node_id,), pkt.payload_len)


@dataclass
class RouteEntry:
    path: tuple
    cycle: int


class RouteTable:
    def __init__(self, staleness=DEFAULT_TTL_INIT):
        self.staleness = staleness
        self.routes = {}

    def sink_update(self, pkt, cycle):
        path = tuple(reversed(pkt.path_so_far))
        if len(set(path)) != len(path):
            raise LoopDetected(f"non-simple path {path}")
        self.routes[pkt.origin] = RouteEntry(path, cycle)

    def lookup(self, dest, cycle=None):
        entry = self.routes.get(dest)
        if entry is None:
            raise NoRoute(dest)
        if cycle is not None and cycle - entry.cycle >= self.staleness:
            raise NoRoute(dest)
        return entry.path

    def fresh(self, cycle):
        return sorted(d for d, e in self.routes.items() if cycle - e.cycle < self.staleness)

    def __contains__(self, dest):
        return dest in self.routes

    def __len__(self):
        return len(self.routes)

    def dump(self, fp):
        rows = {str(d): {"path": list(e.path), "cycle": e.cycle} for d, e in sorted(self.routes.items())}
        json.dump(rows, fp, indent=1)


@dataclass
class Sink:
    """Sink-side state: the downward routing node plus tomography and sequence numbers."""

    node: OSRNode = field(default_factory=lambda: OSRNode(SINK_ID))
    routes: RouteTable = field(default_factory=RouteTable)
    max_bflt_len: int = 16
    k: int = NUM_HASHES
    next_seq: int = 0

    def dispatch_downward(self, dest, payload=b"", cycle=None):
        """Build a downward packet for ``dest`` and decide the first-hop transmission.

        Returns ``(packet, targets)``; ``packet.tx_type`` tells whether the
        targets are reached by unicast or multicast. Raises :class:`NoRoute`.
        """
        path = self.routes.lookup(dest, cycle)
        bf = encode_path(path, self.max_bflt_len, self.k)
        seq = self.next_seq
        self.next_seq = (self.next_seq + 1) & 0xFFFF
        targets = set(self.node.children.matched_children(bf))
        targets.add(path[0])
        tx = TxType.MULTICAST if len(targets) > 1 else TxType.UNICAST
        pkt = DownwardPacket(tx, seq, dest, min(0xFF, 2 * len(path)), bf, payload)
        self.node.history.record(pkt.key)
        return pkt, tuple(sorted(targets))
