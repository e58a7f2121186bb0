"""Per-node downward routing state: child set, duplicate history, forwarding decision."""
import enum
import struct
from collections import deque
from dataclasses import dataclass, field, replace

from osr.bloom import BloomFilter

DEFAULT_TTL_INIT = 4
DEFAULT_CHILD_CAPACITY = 20
DEFAULT_DUP_CAPACITY = 16

# tx_type:2 | reserved:6, seq:16, dest:16, hop_ttl:8, bflt_len:8 -- network byte order
_HEADER = struct.Struct("!BHHBB")
HEADER_LEN = _HEADER.size


class TxType(enum.IntEnum):
    UNICAST = 0
    MULTICAST = 1
    BROADCAST = 2


class MalformedPacket(ValueError):
    pass


@dataclass(frozen=True)
class DownwardPacket:
    tx_type: TxType
    seq: int
    dest: int
    hop_ttl: int
    path_bflt: BloomFilter
    payload: bytes = b""

    @property
    def key(self):
        return (self.seq, self.dest)

    @property
    def bflt_len(self):
        return self.path_bflt.nbytes

    def pack(self):
        if not 0 <= self.hop_ttl <= 0xFF:
            raise ValueError(f"hop_ttl {self.hop_ttl} does not fit in 8 bits")
        head = _HEADER.pack(
            (int(self.tx_type) & 0x3) << 6, self.seq & 0xFFFF, self.dest, self.hop_ttl, self.bflt_len
        )
        return head + bytes(self.path_bflt.bits) + self.payload

    @classmethod
    def unpack(cls, frame, max_bflt_len=0xFF):
        if len(frame) < HEADER_LEN:
            raise MalformedPacket("frame shorter than header")
        first, seq, dest, hop_ttl, bflt_len = _HEADER.unpack_from(frame)
        raw_type = first >> 6
        if raw_type > TxType.BROADCAST:
            raise MalformedPacket(f"unknown tx_type {raw_type}")
        if bflt_len == 0 or bflt_len > max_bflt_len:
            raise MalformedPacket(f"bflt_len {bflt_len} out of range")
        end = HEADER_LEN + bflt_len
        if len(frame) < end:
            raise MalformedPacket("truncated path filter")
        bf = BloomFilter(8 * bflt_len, bits=frame[HEADER_LEN:end])
        return cls(TxType(raw_type), seq, dest, hop_ttl, bf, bytes(frame[end:]))


class ChildTable:
    """Direct children with freshness counters.

    A child is (re)inserted with ``ttl_init`` every time this node forwards an
    upward packet received from it and loses one unit per collection cycle.
    """

    def __init__(self, capacity=DEFAULT_CHILD_CAPACITY, ttl_init=DEFAULT_TTL_INIT):
        if capacity < 1 or ttl_init < 1:
            raise ValueError("capacity and ttl_init must be positive")
        self.capacity = capacity
        self.ttl_init = ttl_init
        self.entries = {}

    def observe_upward(self, link_sender):
        entries = self.entries
        if link_sender not in entries and len(entries) >= self.capacity:
            victim = min(entries, key=lambda c: (entries[c], c))
            del entries[victim]
        entries[link_sender] = self.ttl_init

    def decay(self):
        self.entries = {c: t - 1 for c, t in self.entries.items() if t > 1}

    def matched_children(self, bf):
        return sorted(c for c in self.entries if c in bf)

    def ttl(self, child):
        return self.entries.get(child, 0)

    def __contains__(self, child):
        return child in self.entries

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries))


class DupHistory:
    def __init__(self, capacity=DEFAULT_DUP_CAPACITY):
        self._ring = deque(maxlen=capacity)

    def __contains__(self, key):
        return key in self._ring

    def record(self, key):
        if key not in self._ring:
            self._ring.append(key)

    def __len__(self):
        return len(self._ring)


class ActionKind(enum.Enum):
    DELIVER = "deliver"
    UNICAST = "unicast"
    MULTICAST = "multicast"
    BROADCAST = "broadcast"
    IGNORE = "ignore"


@dataclass(frozen=True)
class ForwardAction:
    kind: ActionKind
    targets: tuple = ()
    packet: DownwardPacket = None
    reason: str = ""

    @classmethod
    def ignore(cls, reason):
        return cls(ActionKind.IGNORE, reason=reason)


@dataclass
class OSRNode:
    node_id: int
    children: ChildTable = field(default_factory=ChildTable)
    history: DupHistory = field(default_factory=DupHistory)
    max_bflt_len: int = 0xFF
    active_or: int = 0
    malformed: int = 0

    def handle_frame(self, frame):
        try:
            pkt = DownwardPacket.unpack(frame, self.max_bflt_len)
        except MalformedPacket:
            self.malformed += 1
            return ForwardAction.ignore("malformed"), None
        return self.handle_downward(pkt), pkt

    def handle_downward(self, pkt):
        if pkt.bflt_len > self.max_bflt_len:
            self.malformed += 1
            return ForwardAction.ignore("malformed")
        key = pkt.key
        if key in self.history:
            return ForwardAction.ignore("duplicate")
        if pkt.dest == self.node_id:
            self.history.record(key)
            return ForwardAction(ActionKind.DELIVER)
        hop_ttl = pkt.hop_ttl - 1
        if hop_ttl <= 0:
            return ForwardAction.ignore("ttl")
        bf = pkt.path_bflt
        if pkt.tx_type == TxType.MULTICAST and self.node_id not in bf:
            return ForwardAction.ignore("not-member")
        matches = self.children.matched_children(bf)
        if not matches:
            return ForwardAction.ignore("no-match")
        self.history.record(key)
        if len(matches) > 1:
            out = replace(pkt, hop_ttl=hop_ttl, tx_type=TxType.MULTICAST)
            return ForwardAction(ActionKind.MULTICAST, tuple(matches), out)
        out = replace(pkt, hop_ttl=hop_ttl, tx_type=TxType.UNICAST)
        return ForwardAction(ActionKind.UNICAST, tuple(matches), out)

    def on_unicast_failure(self, sent, received_as):
        """React to a unicast of ``sent`` exhausting its retransmissions.

        ``received_as`` is the tx_type the packet arrived with here. Packets that
        themselves arrived by opportunistic broadcast are not re-broadcast.
        """
        if received_as == TxType.BROADCAST:
            return ForwardAction.ignore("no-broadcast-chain")
        self.active_or += 1
        return ForwardAction(ActionKind.BROADCAST, (), replace(sent, tx_type=TxType.BROADCAST))
