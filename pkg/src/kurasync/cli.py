"""Command-line front end.

Frequencies are accepted in plain Hz or with an `MHz` suffix; times in
seconds or with a `us` suffix. Every output CSV gets a sidecar
`<output>.manifest.json` with the fully resolved configuration, the master
seed and the code version; re-running the recorded arguments reproduces the
CSV byte for byte.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .detectors import DetectorSpec, Scheme
from .integrator import TraceRecorder, estimate_linewidth, random_initial_state, run
from .model import (DEFAULT_CORE_FREQS, DEFAULT_DT, DEFAULT_K_CC, DEFAULT_K_IC,
                    TopologySpec, build_network)
from .readout import (DEFAULT_FILTER_RADIUS, GridSpec, SCHEMA_VERSION, SimProtocol,
                      build_map, count_patterns, map_metadata, read_manifest,
                      read_map_csv, robust_filter, write_manifest, write_map_csv)
from .rng import RngStream
from .sweeps import (SweepSpec, sweep_coupling, sweep_input_frequency, sweep_noise,
                     sweep_tau, sweep_threshold, write_sweep_csv)


class _Parser(argparse.ArgumentParser):
    # spec'd exit codes: 1 = invalid arguments, 2 = runtime failure
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def parse_freq(text: str) -> float:
    t = text.strip()
    if t.lower().endswith("mhz"):
        return float(t[:-3]) * 1e6
    return float(t)


def parse_time(text: str) -> float:
    t = text.strip()
    if t.lower().endswith("us"):
        return float(t[:-2]) * 1e-6
    return float(t)


def parse_freq_list(text: str) -> tuple[float, ...]:
    return tuple(parse_freq(p) for p in text.split(",") if p.strip())


def parse_range(text: str, conv=parse_freq) -> np.ndarray:
    """start:stop:step, inclusive of stop up to rounding."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"range must be start:stop:step, got {text!r}")
    start, stop, step = (conv(p) for p in parts)
    n = int(math.floor((stop - start) / step + 0.5)) + 1
    return start + step * np.arange(n)

def parse_grid(text: str) -> tuple[int, int]:
    a, _, b = text.partition("x")
    return int(a), int(b or a)


def _topology_args(p: argparse.ArgumentParser, n_inputs: int = 2):
    p.add_argument("--config", help="JSON file with the topology fields")
    p.add_argument("--cores", type=parse_freq_list, help="core natural frequencies")
    p.add_argument("--inputs", type=parse_freq_list, help="input natural frequencies")
    p.add_argument("--k-cc", type=parse_freq, help=f"core-core coupling (default {DEFAULT_K_CC:g} Hz)")
    p.add_argument("--k-ic", type=parse_freq, help=f"input-core coupling (default {DEFAULT_K_IC:g} Hz)")
    p.add_argument("--fwhm", type=parse_freq, help="oscillator linewidth FWHM in Hz")
    p.add_argument("--dt", type=parse_time, help=f"integration step (default {DEFAULT_DT:g} s)")


def _protocol_args(p: argparse.ArgumentParser):
    p.add_argument("--cooldown", type=parse_time, default=0.5e-6)
    p.add_argument("--tau", type=parse_time, default=0.5e-6)
    p.add_argument("--reps", type=int, default=10)


def _common_args(p: argparse.ArgumentParser):
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--cache-dir", default=None)
    p.add_argument("-o", "--output", required=True)


def resolve_topology(args, *, default_inputs=(600e6, 600e6),
                     default_cores=DEFAULT_CORE_FREQS) -> TopologySpec:
    base = {}
    if getattr(args, "config", None):
        base = TopologySpec.from_json(args.config).to_dict()
    return TopologySpec(
        core_frequencies=args.cores or tuple(base.get("core_frequencies_hz", default_cores)),
        input_frequencies=(args.inputs if args.inputs is not None
                           else tuple(base.get("input_frequencies_hz", default_inputs))),
        k_cc=args.k_cc if args.k_cc is not None else base.get("k_cc_hz", DEFAULT_K_CC),
        k_ic=args.k_ic if args.k_ic is not None else base.get("k_ic_hz", DEFAULT_K_IC),
        noise_fwhm=args.fwhm if args.fwhm is not None else base.get("noise_fwhm_hz", 0.0),
        dt=args.dt if args.dt is not None else base.get("dt_s", DEFAULT_DT),
    )


def _manifest(args, command: str, extra: dict, outputs: list[str]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "master_seed": getattr(args, "seed", None),
        "outputs": outputs,
        "argv": sys.argv[1:],
        **extra,
    }


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def cmd_simulate_trace(args) -> int:
    topo = resolve_topology(args, default_inputs=())
    network = build_network(topo)
    rng = RngStream(args.seed, stream_id=0)
    state = random_initial_state(network, rng)
    rec = TraceRecorder(stride=args.stride)
    run(network, args.duration, state, rng, observers=[rec])
    n = network.n
    with open(args.output, "w") as fh:
        fh.write("t_s," + ",".join(f"phi_{i}" for i in range(n)) + ","
                 + ",".join(f"sin_{i}" for i in range(n)) + "\n")
        for t, row in zip(rec.times, rec.rows):
            vals = [_fmt(t)] + [_fmt(v) for v in row] + [_fmt(math.sin(v)) for v in row]
            fh.write(",".join(vals) + "\n")
    meta = _manifest(args, "simulate-trace",
                     {"kind": "trace", "topology": topo.to_dict(),
                      "duration_s": args.duration, "stride": args.stride},
                     [args.output])
    write_manifest(args.output + ".manifest.json", meta)
    return 0


def cmd_sweep_1d(args) -> int:
    topo = resolve_topology(args, default_cores=(560e6, 580e6), default_inputs=(600e6,))
    if len(topo.input_frequencies) != 1:
        topo = TopologySpec(topo.core_frequencies, (600e6,), topo.k_cc,
                            topo.k_ic, topo.noise_fwhm, topo.dt)
    fa = np.asarray(args.input_range, dtype=float)
    protocol = SimProtocol(total_time=args.cooldown + args.tau, cooldown=args.cooldown,
                           tau=args.tau, repetitions=args.reps)
    fa, meanf, var, direct, ff = sweep_input_frequency(
        topo, fa, protocol=protocol, master_seed=args.seed, workers=args.workers)
    n_core = len(topo.core_frequencies)
    with open(args.output, "w") as fh:
        cols = [f"meanf_{i + 1}" for i in range(n_core)] + ["meanf_A"]
        fh.write("fA_Hz," + ",".join(cols) + ",var_raw,direct_raw,flipflop_raw\n")
        for i, f in enumerate(fa):
            vals = [_fmt(f)] + [_fmt(v) for v in meanf[i]] + \
                   [_fmt(var[i]), _fmt(direct[i]), _fmt(ff[i])]
            fh.write(",".join(vals) + "\n")
    meta = _manifest(args, "sweep-1d",
                     {"kind": "sweep_1d", "topology": topo.to_dict(),
                      "protocol": protocol.to_dict()}, [args.output])
    write_manifest(args.output + ".manifest.json", meta)
    return 0


def _grid_from_args(args, default_steps: int) -> GridSpec:
    steps = parse_grid(args.grid) if args.grid else (default_steps, default_steps)
    fa_lo, fa_hi = (parse_freq(p) for p in args.fa_range.split(":"))
    fb_lo, fb_hi = (parse_freq(p) for p in args.fb_range.split(":"))
    return GridSpec(fa_lo, fa_hi, steps[0], fb_lo, fb_hi, steps[1])


def cmd_map(args) -> int:
    topo = resolve_topology(args)
    network = build_network(topo)
    scheme = Scheme({"direct": "direct", "flipflop": "flipflop",
                     "variance": "variance"}[args.detector])
    if args.threshold is not None:
        detector = DetectorSpec(scheme, args.threshold)
    else:
        detector = DetectorSpec.default(scheme)
    grid = _grid_from_args(args, 200)
    protocol = SimProtocol(total_time=args.cooldown + args.tau, cooldown=args.cooldown,
                           tau=args.tau, repetitions=args.reps)
    rmap = build_map(network, protocol, detector, grid, args.seed,
                     workers=args.workers, cache_dir=args.cache_dir)
    write_map_csv(args.output, rmap)
    meta = _manifest(args, "map", {**map_metadata(network, protocol, grid, detector,
                                                  args.seed),
                                   "topology": topo.to_dict()}, [args.output])
    write_manifest(args.output + ".manifest.json", meta)
    return 0


def cmd_count_patterns(args) -> int:
    metadata = read_manifest(args.manifest) if args.manifest else None
    rmap = read_map_csv(args.map_csv, metadata)
    filtered = robust_filter(rmap, args.radius)
    n, codes = count_patterns(filtered)
    print(f"patterns: {n}")
    print("codes: " + " ".join(str(c) for c in codes))
    if args.output:
        write_map_csv(args.output, filtered)
    return 0


def _run_sweep(args, kind: str) -> int:
    topo = resolve_topology(args)
    protocol = SimProtocol(total_time=args.cooldown + args.tau, cooldown=args.cooldown,
                           tau=args.tau, repetitions=args.reps)
    grid = None
    if args.grid:
        ga, gb = parse_grid(args.grid)
        fa_lo, fa_hi = (parse_freq(p) for p in args.fa_range.split(":"))
        fb_lo, fb_hi = (parse_freq(p) for p in args.fb_range.split(":"))
        grid = GridSpec(fa_lo, fa_hi, ga, fb_lo, fb_hi, gb)

    if kind == "threshold":
        result = sweep_threshold(
            topo, variance_thresholds=args.variance_thresholds,
            counter_thresholds=[int(v) for v in args.counter_thresholds],
            protocol=protocol, grid=grid, master_seed=args.seed,
            filter_radius=args.radius, workers=args.workers, cache_dir=args.cache_dir)
    else:
        if kind == "coupling":
            parameter = args.vary
            values = args.values
        elif kind == "noise":
            parameter, values = "fwhm", args.values
        else:
            parameter, values = "tau", args.values
        spec = SweepSpec(parameter=parameter, values=tuple(values), topology=topo,
                         protocol=protocol, grid=grid, master_seed=args.seed,
                         filter_radius=args.radius)
        if kind == "coupling":
            result = sweep_coupling(spec, workers=args.workers, cache_dir=args.cache_dir)
        elif kind == "noise":
            result = sweep_noise(spec, workers=args.workers, cache_dir=args.cache_dir)
        else:
            result = sweep_tau(spec, ref_tau=args.ref_tau, workers=args.workers,
                               cache_dir=args.cache_dir)
    write_sweep_csv(args.output, result)
    meta = _manifest(args, f"sweep-{kind}",
                     {"kind": f"sweep_{kind}", **result.metadata}, [args.output])
    write_manifest(args.output + ".manifest.json", meta)
    return 0


def cmd_linewidth(args) -> int:
    est = estimate_linewidth(args.fwhm, args.observation, dt=args.dt or DEFAULT_DT,
                             seed=args.seed)
    print(f"estimated_fwhm_hz: {est:.6g}")
    return 0


def build_parser() -> _Parser:
    p = _Parser(prog="kurasync",
                description="Coupled-oscillator recognition network simulator")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate-trace", parents=[], help="record a phase trace")
    _topology_args(sp)
    sp.add_argument("--duration", type=parse_time, default=1e-6)
    sp.add_argument("--stride", type=int, default=1)
    _common_args(sp)
    sp.set_defaults(func=cmd_simulate_trace)

    sp = sub.add_parser("sweep-1d", help="calibration sweep of one input frequency")
    _topology_args(sp)
    sp.add_argument("--input-range", type=parse_range, default=parse_range("470e6:670e6:1e6"))
    _protocol_args(sp)
    sp.set_defaults(reps=1)
    _common_args(sp)
    sp.set_defaults(func=cmd_sweep_1d)

    sp = sub.add_parser("map", help="build a readout map")
    _topology_args(sp)
    sp.add_argument("--detector", choices=["variance", "direct", "flipflop"], required=True)
    sp.add_argument("--threshold", type=float, default=None)
    sp.add_argument("--grid", default="200x200")
    sp.add_argument("--fa-range", default="470e6:670e6")
    sp.add_argument("--fb-range", default="470e6:670e6")
    _protocol_args(sp)
    _common_args(sp)
    sp.set_defaults(func=cmd_map)

    sp = sub.add_parser("count-patterns", help="filter a map CSV and count patterns")
    sp.add_argument("map_csv")
    sp.add_argument("--radius", type=parse_freq, default=DEFAULT_FILTER_RADIUS)
    sp.add_argument("-m", "--manifest", default=None)
    sp.add_argument("-o", "--output", default=None, help="write the filtered map CSV")
    sp.set_defaults(func=cmd_count_patterns)

    def sweep_parser(name, help_text):
        q = sub.add_parser(name, help=help_text)
        _topology_args(q)
        q.add_argument("--grid", default=None)
        q.add_argument("--fa-range", default="470e6:670e6")
        q.add_argument("--fb-range", default="470e6:670e6")
        q.add_argument("--radius", type=parse_freq, default=DEFAULT_FILTER_RADIUS)
        _protocol_args(q)
        _common_args(q)
        return q

    sp = sweep_parser("sweep-coupling", "pattern counts vs coupling strength")
    sp.add_argument("--vary", choices=["k_ic", "k_cc"], required=True)
    sp.add_argument("--values", type=parse_freq_list, required=True)
    sp.set_defaults(func=lambda a: _run_sweep(a, "coupling"))

    sp = sweep_parser("sweep-noise", "pattern counts vs oscillator FWHM")
    sp.add_argument("--values", type=parse_freq_list, required=True)
    sp.set_defaults(func=lambda a: _run_sweep(a, "noise"))

    sp = sweep_parser("sweep-threshold", "pattern counts vs detector threshold")
    sp.add_argument("--variance-thresholds",
                    type=lambda t: parse_range(t, float), default=parse_range("0.02:0.5:0.02", float))
    sp.add_argument("--counter-thresholds",
                    type=lambda t: parse_range(t, float), default=parse_range("1:24:1", float))
    sp.set_defaults(func=lambda a: _run_sweep(a, "threshold"))

    sp = sweep_parser("sweep-tau", "map matching and counts vs evaluation time")
    sp.add_argument("--values", type=lambda t: [parse_time(x) for x in t.split(",")],
                    required=True)
    sp.add_argument("--ref-tau", type=parse_time, default=100e-6)
    sp.set_defaults(func=lambda a: _run_sweep(a, "tau"))

    sp = sub.add_parser("linewidth", help="estimate an isolated oscillator's FWHM")
    sp.add_argument("--fwhm", type=parse_freq, required=True)
    sp.add_argument("--observation", type=parse_time, default=100e-6)
    sp.add_argument("--dt", type=parse_time, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_linewidth)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"kurasync: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
