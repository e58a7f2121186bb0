"""Run metrics, computed as a fold over the event log.

The simulator never mutates :class:`Metrics` directly; every counter is
derived from :meth:`Metrics.apply`, so replaying a saved log reproduces the
live numbers exactly.

Event records are ``(tick, node, kind, details)``. Kinds:

``dispatch``  sink issued a downward packet (seq, dest, route)
``noroute``   sink had no fresh route to dest
``tx``        one downward link-layer transmission attempt (seq, dest, type, to, attempt)
``rx``        a downward frame was received (seq, dest, from, type)
``act``       forwarding decision taken by a node (seq, dest, action, reason)
``ugen``/``utx``/``urx``/``usink``/``udrop``  upward traffic
``cycle``     start of a collection cycle
"""
import json
from collections import Counter, defaultdict

from osr.bloom import SINK_ID

HOP_BUCKET = 5
FORWARD_ACTIONS = ("unicast", "multicast", "broadcast")


class Metrics:
    def __init__(self, sink=SINK_ID):
        self.sink = sink
        self.sent = 0
        self.delivered = 0
        self.no_route = 0
        self.malformed = 0
        self.hops_sent = Counter()
        self.hops_delivered = Counter()
        self.max_hops = 0
        self.tx_unicast = 0
        self.tx_multicast = 0
        self.tx_broadcast = 0
        self.ucast_sessions = 0
        self.ucast_retx = 0
        self.dup_tx = 0
        self.node_tx = Counter()
        self.node_rx = Counter()
        self.forwards = Counter()
        self.actions = defaultdict(Counter)
        self.up_generated = 0
        self.up_delivered = 0
        self.up_dropped = 0
        self.cycles = 0
        self._routes = {}
        self._route_len = {}
        self._active = set()
        self._passive = set()
        self._delivered = set()

    def apply(self, event):
        tick, node, kind, d = event
        if kind == "tx":
            key = (d["seq"], d["dest"])
            self.node_tx[node] += 1
            t = d["type"]
            if t == "U":
                self.tx_unicast += 1
                if d["attempt"] == 0:
                    self.ucast_sessions += 1
                else:
                    self.ucast_retx += 1
            elif t == "M":
                self.tx_multicast += 1
            else:
                self.tx_broadcast += 1
            on_route = self._routes.get(key, ())
            if t == "B" or node not in on_route:
                self.dup_tx += 1
        elif kind == "rx":
            self.node_rx[node] += 1
        elif kind == "act":
            key = (d["seq"], d["dest"])
            action = d["action"]
            self.actions[key][action] += 1
            if action in FORWARD_ACTIONS:
                self.forwards[key] += 1
            if action == "broadcast":
                self._active.add(key)
            elif action == "multicast":
                self._passive.add(key)
            elif action == "deliver" and key not in self._delivered:
                self._delivered.add(key)
                self.delivered += 1
                hops = self._hops(key)
                self.hops_delivered[hops] += 1
                self.max_hops = max(self.max_hops, hops)
            elif action == "ignore" and d.get("reason") == "malformed":
                self.malformed += 1
        elif kind == "dispatch":
            key = (d["seq"], d["dest"])
            route = tuple(d["route"])
            self._routes[key] = frozenset(route) | {self.sink}
            self._route_len[key] = len(route)
            self.sent += 1
            self.hops_sent[len(route)] += 1
            if d.get("tx") == "multicast":
                self._passive.add(key)
        elif kind == "noroute":
            self.no_route += 1
        elif kind == "utx":
            self.node_tx[node] += 1
        elif kind == "urx":
            self.node_rx[node] += 1
        elif kind == "ugen":
            self.up_generated += 1
        elif kind == "usink":
            self.up_delivered += 1
        elif kind == "udrop":
            self.up_dropped += 1
        elif kind == "cycle":
            self.cycles += 1

    def _hops(self, key):
        return self._route_len.get(key, 0)

    @classmethod
    def replay(cls, events, sink=SINK_ID):
        m = cls(sink)
        for ev in events:
            m.apply(ev)
        return m

    # -------------------------------------------------------------- derived

    @property
    def pdr(self):
        return self.delivered / self.sent if self.sent else None

    @property
    def active_or_packets(self):
        return len(self._active)

    @property
    def passive_or_packets(self):
        return len(self._passive)

    @property
    def tx_downward(self):
        return self.tx_unicast + self.tx_multicast + self.tx_broadcast

    def bucket_pdr(self, width=HOP_BUCKET, max_hops=None):
        """PDR per hop-distance bucket ``[lo, hi]``; buckets with no traffic are omitted."""
        top = max_hops or max(self.hops_sent, default=0)
        out = {}
        for lo in range(1, top + 1, width):
            hi = min(lo + width - 1, top)
            s = sum(self.hops_sent[h] for h in range(lo, hi + 1))
            if s:
                out[(lo, hi)] = sum(self.hops_delivered[h] for h in range(lo, hi + 1)) / s
        return out

    def forwards_per_packet(self):
        return dict(self.forwards)

    def delivered_keys(self):
        return set(self._delivered)

    def route_length(self, key):
        return self._hops(key)

    def summary(self):
        def frac(a, b):
            return a / b if b else None

        n_nodes = max(len((set(self.node_tx) | set(self.node_rx)) - {self.sink}), 1)
        tx_no_sink = sum(v for k, v in self.node_tx.items() if k != self.sink)
        rx_no_sink = sum(v for k, v in self.node_rx.items() if k != self.sink)
        return {
            "sent": self.sent,
            "delivered": self.delivered,
            "pdr": frac(self.delivered, self.sent),
            "e2e_pdr": frac(self.delivered, self.sent + self.no_route),
            "max_hops": self.max_hops,
            "no_route": self.no_route,
            "malformed": self.malformed,
            "tx_downward": self.tx_downward,
            "tx_unicast": self.tx_unicast,
            "tx_multicast": self.tx_multicast,
            "tx_broadcast": self.tx_broadcast,
            "ucast_retx_ratio": frac(self.ucast_retx, self.tx_unicast),
            "dup_tx": self.dup_tx,
            "dup_fraction": frac(self.dup_tx, self.tx_downward),
            "active_or_fraction": frac(self.active_or_packets, self.sent),
            "passive_or_fraction": frac(self.passive_or_packets, self.sent),
            "up_generated": self.up_generated,
            "up_delivered": self.up_delivered,
            "mean_tx_per_node": tx_no_sink / n_nodes,
            "mean_rx_per_node": rx_no_sink / n_nodes,
        }


def write_event_log(events, fp):
    for tick, node, kind, details in events:
        fp.write(json.dumps([tick, node, kind, details], separators=(",", ":")))
        fp.write("\n")


def read_event_log(fp):
    events = []
    for line in fp:
        line = line.strip()
        if line:
            tick, node, kind, details = json.loads(line)
            events.append((tick, node, kind, details))
    return events
