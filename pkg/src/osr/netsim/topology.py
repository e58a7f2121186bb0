"""Topology generators and the JSON topology file format.

File layout::

    {"nodes": [{"id": 0, "x": 0.0, "y": 0.0}, ...], "sink": 0, "range": 20.0}
"""
import json
import math
import random
from collections import deque
from dataclasses import dataclass

from osr.bloom import MAX_NODE_ID, SINK_ID

LINEAR_NODES = 74
LINEAR_DEPTH = 68
DEFAULT_TWIGS = ((12, 1), (27, 1), (41, 1), (55, 1), (66, 1))

UNIFORM_SIDE_225 = 100.0
UNIFORM_RANGE = 15.0


class TopologyError(ValueError):
    pass


@dataclass
class Topology:
    positions: dict
    sink: int = SINK_ID
    range: float = 20.0

    def __post_init__(self):
        if self.sink not in self.positions:
            raise TopologyError("sink missing from topology")
        for nid, (x, y) in self.positions.items():
            if not 0 <= nid <= MAX_NODE_ID:
                raise TopologyError(f"node id {nid} out of range")
            if not (math.isfinite(x) and math.isfinite(y)):
                raise TopologyError(f"node {nid} has non-finite coordinates")

    @property
    def ids(self):
        return sorted(self.positions)

    def __len__(self):
        return len(self.positions)

    def adjacency(self):
        """Neighbors strictly inside the radio range (zero-probability edges excluded)."""
        ids = self.ids
        adj = {i: [] for i in ids}
        pos = self.positions
        r = self.range
        for ai, a in enumerate(ids):
            ax, ay = pos[a]
            for b in ids[ai + 1 :]:
                bx, by = pos[b]
                if math.hypot(ax - bx, ay - by) < r:
                    adj[a].append(b)
                    adj[b].append(a)
        return adj

    def hop_depths(self, source=None):
        source = self.sink if source is None else source
        adj = self.adjacency()
        depth = {source: 0}
        queue = deque([source])
        while queue:
            u = queue.popleft()
            for v in adj[u]:
                if v not in depth:
                    depth[v] = depth[u] + 1
                    queue.append(v)
        return depth

    def is_connected(self):
        return len(self.hop_depths()) == len(self.positions)

    def sink_depth(self):
        return max(self.hop_depths().values())

    def diameter(self):
        adj = self.adjacency()
        best = 0
        for s in adj:
            depth = {s: 0}
            queue = deque([s])
            while queue:
                u = queue.popleft()
                for v in adj[u]:
                    if v not in depth:
                        depth[v] = depth[u] + 1
                        queue.append(v)
            if len(depth) != len(adj):
                return math.inf
            best = max(best, max(depth.values()))
        return best

    def to_json(self):
        nodes = [{"id": i, "x": self.positions[i][0], "y": self.positions[i][1]} for i in self.ids]
        return {"nodes": nodes, "sink": self.sink, "range": self.range}

    def save(self, path):
        with open(path, "w") as fp:
            json.dump(self.to_json(), fp, indent=1)

    @classmethod
    def from_json(cls, obj):
        try:
            positions = {int(n["id"]): (float(n["x"]), float(n["y"])) for n in obj["nodes"]}
            if len(positions) != len(obj["nodes"]):
                raise TopologyError("duplicate node ids")
            return cls(positions, int(obj["sink"]), float(obj["range"]))
        except (KeyError, TypeError) as exc:
            raise TopologyError(f"bad topology document: {exc}") from exc

    @classmethod
    def load(cls, path):
        with open(path) as fp:
            return cls.from_json(json.load(fp))


def gen_linear_topology(n_nodes=LINEAR_NODES, twig_spec=DEFAULT_TWIGS, radio_range=20.0, depth=None):
    """Backbone chain from the sink plus short perpendicular twigs.

    Backbone nodes sit exactly ``range/2`` apart, so only consecutive nodes are
    strictly inside range. ``twig_spec`` lists ``(backbone index, length)``
    pairs; the backbone receives every node the twigs do not use. Raises
    :class:`TopologyError` if the BFS depth differs from ``depth`` (68 for the
    default 74-node layout).
    """
    twig_spec = tuple(twig_spec or ())
    twig_nodes = sum(length for _, length in twig_spec)
    backbone = n_nodes - twig_nodes
    if backbone < 2:
        raise TopologyError("not enough nodes for a backbone")
    spacing = radio_range / 2.0
    positions = {}
    for i in range(backbone):
        positions[i] = (i * spacing, 0.0)
    next_id = backbone
    for t, (anchor, length) in enumerate(twig_spec):
        if not 0 < anchor < backbone or length < 1:
            raise TopologyError(f"bad twig {(anchor, length)}")
        side = 1.0 if t % 2 == 0 else -1.0
        for j in range(1, length + 1):
            positions[next_id] = (anchor * spacing, side * j * spacing)
            next_id += 1
    topo = Topology(positions, SINK_ID, radio_range)
    got = topo.hop_depths()
    if len(got) != n_nodes:
        raise TopologyError("linear topology is not connected")
    if depth is None and n_nodes == LINEAR_NODES:
        depth = LINEAR_DEPTH
    if depth is not None and max(got.values()) != depth:
        raise TopologyError(f"linear topology depth {max(got.values())} != {depth}")
    return topo


def gen_uniform_topology(n_nodes=225, side=None, seed=1, radio_range=UNIFORM_RANGE, max_tries=1000):
    """Uniform placement in a square with the sink at the origin corner.

    ``side`` defaults to a value that keeps the 225-node density: larger
    networks grow both sides by ``sqrt(n / 225)``. Placement is redrawn until
    the connectivity graph is connected.
    """
    if n_nodes < 2:
        raise TopologyError("need at least two nodes")
    if side is None:
        side = UNIFORM_SIDE_225 * math.sqrt(n_nodes / 225.0)
    rng = random.Random(f"topology:{seed}:{n_nodes}")
    for _ in range(max_tries):
        positions = {SINK_ID: (0.0, 0.0)}
        for nid in range(1, n_nodes):
            positions[nid] = (rng.uniform(0.0, side), rng.uniform(0.0, side))
        topo = Topology(positions, SINK_ID, radio_range)
        if topo.is_connected():
            return topo
    raise TopologyError(f"no connected placement after {max_tries} tries")
