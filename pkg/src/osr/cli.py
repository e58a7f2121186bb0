"""Command-line experiment harness.

    osr run --preset linear74 --seed 1 --output out/
    osr fpcurve --max-bflt-len 40 --hops 1..70
    osr scenario passive-or
    osr sweep --preset grid400 --param max_bflt_len --values 10,20

Exit status is 0 on success, 1 for configuration errors and 2 when a
scenario assertion fails.
"""
import argparse
import csv
import io
import json
import math
import os
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields

from osr.bloom import analytic_fp_rate, filter_length_for, monte_carlo_fp, space_saving
from osr.netsim.config import PRESETS, ConfigError, SimConfig, coerce, preset
from osr.netsim.topology import TopologyError
from osr.netsim.world import run as run_sim
from osr.netsim.metrics import write_event_log
from osr.scenarios import SCENARIOS, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SCENARIO = 2

CONFIG_COLUMNS = (
    "preset", "topology", "nodes", "topology_seed", "seed", "max_bflt_len",
    "max_retx", "bcast_repeats", "p_max", "downward",
)
METRIC_COLUMNS = (
    "sent", "delivered", "pdr", "e2e_pdr", "min_bucket_pdr", "max_hops", "no_route", "malformed",
    "tx_downward", "tx_unicast", "tx_multicast", "tx_broadcast", "ucast_retx_ratio",
    "dup_tx", "dup_fraction", "active_or_fraction", "passive_or_fraction",
    "up_generated", "up_delivered", "mean_tx_per_node", "mean_rx_per_node",
)
RUN_COLUMNS = CONFIG_COLUMNS + METRIC_COLUMNS
SWEEP_COLUMNS = ("param", "value") + RUN_COLUMNS
FPCURVE_COLUMNS = ("hops", "m_bits", "fp_analytic", "space_saving", "fp_monte_carlo")

_FIELD_NAMES = tuple(f.name for f in fields(SimConfig))


class CliError(Exception):
    """Bad invocation; reported with exit status 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


# ------------------------------------------------------------------ helpers

def parse_values(text, key=None):
    """``"1..5"`` or ``"10,20"`` (ranges may be mixed with lists)."""
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..", 1)
            try:
                lo, hi = int(lo), int(hi)
            except ValueError:
                raise CliError(f"bad range {part!r}") from None
            if hi < lo:
                raise CliError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(coerce(key, part) if key else _int(part))
    if not out:
        raise CliError("empty value list")
    return out


def _int(text):
    try:
        return int(text)
    except ValueError:
        raise CliError(f"expected an integer, got {text!r}") from None


def _normalize_key(key):
    key = key.replace("-", "_")
    if key not in _FIELD_NAMES:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def build_config(args):
    """Preset, then config file, then explicit flags; later sources win."""
    file_data = {}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fp:
                file_data = json.load(fp)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(file_data, dict):
            raise ConfigError("config file must hold a JSON object")
    name = args.preset or file_data.pop("preset", None)
    file_data.pop("preset", None)
    base = preset(name) if name else SimConfig()
    cfg = SimConfig.from_dict({_normalize_key(k): v for k, v in file_data.items()}, base)
    flags = {}
    for key in _FIELD_NAMES:
        value = getattr(args, f"opt_{key}", None)
        if value is not None:
            flags[key] = value
    if getattr(args, "seed", None) is not None:
        flags["seed"] = args.seed
    cfg = SimConfig.from_dict(flags, cfg)
    return name or "custom", cfg.validate()


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.6f}".rstrip("0").rstrip(".") if value != int(value) else str(int(value))
    return str(value)


def run_row(name, cfg, keep_events=False):
    """Execute one run; returns the CSV row and (optionally) the event log."""
    res = run_sim(cfg)
    summary = res.metrics.summary()
    buckets = res.metrics.bucket_pdr()
    summary["min_bucket_pdr"] = min(buckets.values()) if buckets else None
    row = {"preset": name}
    for col in CONFIG_COLUMNS[1:]:
        row[col] = getattr(cfg, col)
    for col in METRIC_COLUMNS:
        row[col] = summary[col]
    return row, (res.events if keep_events else None)


def _sweep_point(job):
    name, cfg = job
    row, _ = run_row(name, cfg)
    return row


def write_csv(fp, columns, rows):
    writer = csv.DictWriter(fp, fieldnames=list(columns), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: _fmt(row.get(c)) for c in columns})


def _open_output(path, default_name):
    """``--output`` may name a directory (created) or a file."""
    if path is None:
        return None
    if path.endswith(os.sep) or os.path.isdir(path) or not os.path.splitext(path)[1]:
        os.makedirs(path, exist_ok=True)
        return os.path.join(path, default_name)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _emit_csv(path, columns, rows):
    if path is None:
        write_csv(sys.stdout, columns, rows)
        return
    with open(path, "w", newline="") as fp:
        write_csv(fp, columns, rows)


# ----------------------------------------------------------------- commands

def cmd_run(args):
    name, cfg = build_config(args)
    row, events = run_row(name, cfg, keep_events=True)
    out = _open_output(args.output, "metrics.csv")
    _emit_csv(out, RUN_COLUMNS, [row])
    if out is not None:
        folder, base = os.path.split(os.path.splitext(out)[0])
        prefix = "" if base == "metrics" else base + "."
        if cfg.log_events:
            with open(os.path.join(folder, prefix + "events.jsonl"), "w") as fp:
                write_event_log(events, fp)
        with open(os.path.join(folder, prefix + "config.json"), "w") as fp:
            json.dump({"preset": name, **cfg.to_dict()}, fp, indent=1, sort_keys=True)
        print(f"pdr={_fmt(row['pdr'])} max_hops={row['max_hops']} -> {out}", file=sys.stderr)
    return EXIT_OK


def fpcurve_rows(hops, max_bflt_len, k=3, mc_queries=0, seed=0):
    rows = []
    for h in hops:
        if h < 1:
            raise CliError("hop counts must be positive")
        m = filter_length_for(h, max_bflt_len)
        row = {
            "hops": h,
            "m_bits": m,
            "fp_analytic": analytic_fp_rate(m, k, h),
            "space_saving": space_saving(h, max_bflt_len),
        }
        if mc_queries:
            row["fp_monte_carlo"] = monte_carlo_fp(m, h, queries=mc_queries, seed=seed)
        rows.append(row)
    return rows


def cmd_fpcurve(args):
    if args.k != 3:
        raise ConfigError("only k=3 is supported")
    if args.max_bflt_len < 1:
        raise ConfigError("max-bflt-len must be positive")
    hops = parse_values(args.hops)
    rows = fpcurve_rows(hops, args.max_bflt_len, args.k, args.monte_carlo, args.seed or 0)
    _emit_csv(_open_output(args.output, "fpcurve.csv"), FPCURVE_COLUMNS, rows)
    return EXIT_OK


def cmd_scenario(args):
    names = SCENARIOS if args.name == "all" else (args.name,)
    failed = False
    text = io.StringIO()
    for n in names:
        res = run_scenario(n)
        print(res.report(), file=text)
        failed |= not res.passed
    sys.stdout.write(text.getvalue())
    if args.output:
        path = _open_output(args.output, "scenario.txt")
        with open(path, "w") as fp:
            fp.write(text.getvalue())
    return EXIT_SCENARIO if failed else EXIT_OK


def summary_rows(rows, columns):
    """Mean and sample standard deviation of every numeric column."""
    mean, std = {"param": "seed", "value": "mean"}, {"param": "seed", "value": "stddev"}
    for col in columns:
        vals = [r[col] for r in rows if isinstance(r.get(col), (int, float)) and not isinstance(r.get(col), bool)]
        if col in ("param", "value") or len(vals) != len(rows) or not vals:
            continue
        mean[col] = statistics.fmean(vals)
        std[col] = statistics.stdev(vals) if len(vals) > 1 else 0.0
    return [mean, std]


def cmd_sweep(args):
    key = _normalize_key(args.param)
    name, cfg = build_config(args)
    values = sorted(set(parse_values(args.values, key)))
    jobs = []
    for v in values:
        point = SimConfig.from_dict({key: v, "log_events": False}, cfg).validate()
        jobs.append((name, point))
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_point, jobs))
    else:
        rows = [_sweep_point(j) for j in jobs]
    for v, row in zip(values, rows):
        row["param"] = key
        row["value"] = v
    rows.sort(key=lambda r: r["value"])
    if key == "seed" and len(rows) > 1:
        rows += summary_rows(rows, SWEEP_COLUMNS)
    _emit_csv(_open_output(args.output, "sweep.csv"), SWEEP_COLUMNS, rows)
    return EXIT_OK


# ------------------------------------------------------------------- parser

def _add_common(p):
    p.add_argument("--seed", type=int, default=None, help="traffic / radio RNG seed")
    p.add_argument("--output", default=None, help="output directory or file (default: stdout)")
    p.add_argument("--config", default=None, help="JSON config file; flags override it")


def _add_sim_flags(p):
    p.add_argument("--preset", choices=sorted(PRESETS), default=None)
    g = p.add_argument_group("config overrides (one flag per config key)")
    for key in _FIELD_NAMES:
        if key == "seed":
            continue
        g.add_argument(f"--{key.replace('_', '-')}", dest=f"opt_{key}", default=None, metavar="V")


def make_parser():
    parser = _Parser(prog="osr", description="Opportunistic source routing experiments")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run one simulation; write metrics CSV and event log")
    _add_common(p)
    _add_sim_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fpcurve", help="analytic false-positive and space-saving curve")
    _add_common(p)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--max-bflt-len", type=int, default=40, help="filter cap in bytes")
    p.add_argument("--hops", default="1..70", help="hop counts, e.g. 1..70 or 5,10,20")
    p.add_argument("--monte-carlo", type=int, default=0, metavar="QUERIES",
                   help="add an empirical column from this many random queries")
    p.set_defaults(func=cmd_fpcurve)

    p = sub.add_parser("scenario", help="deterministic micro-topology checks")
    _add_common(p)
    p.add_argument("name", choices=SCENARIOS + ("all",))
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("sweep", help="one run per parameter value")
    _add_common(p)
    _add_sim_flags(p)
    p.add_argument("--param", required=True, help="config key to vary")
    p.add_argument("--values", required=True, help="comma list and/or lo..hi ranges")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TopologyError, CliError) as exc:
        print(f"osr: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
