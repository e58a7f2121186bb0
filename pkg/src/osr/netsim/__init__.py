"""Discrete-event simulator for collection plus source-routed downward traffic."""
from osr.netsim.config import PRESETS, ConfigError, SimConfig, preset
from osr.netsim.metrics import Metrics, read_event_log, write_event_log
from osr.netsim.radio import RadioModel
from osr.netsim.topology import Topology, TopologyError, gen_linear_topology, gen_uniform_topology
from osr.netsim.world import RunResult, World, run

__all__ = [
    "PRESETS", "ConfigError", "SimConfig", "preset", "Metrics", "read_event_log",
    "write_event_log", "RadioModel", "Topology", "TopologyError", "gen_linear_topology",
    "gen_uniform_topology", "RunResult", "World", "run",
]
