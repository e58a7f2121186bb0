"""Opportunistic source routing: Bloom-filter source routes for downward traffic in low-power networks."""
from osr.bloom import BloomFilter, analytic_fp_rate, encode_path, filter_length_for, hash_indices, query
from osr.node import ChildTable, DownwardPacket, DupHistory, ForwardAction, OSRNode, TxType

__version__ = "0.1.0"

__all__ = [
    "BloomFilter", "analytic_fp_rate", "encode_path", "filter_length_for", "hash_indices",
    "query", "ChildTable", "DownwardPacket", "DupHistory", "ForwardAction", "OSRNode", "TxType",
]
