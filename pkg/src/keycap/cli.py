"""Command-line entry point.

Every output carries the full configuration that produced it (worker count
excluded, since it never changes results); feeding an output JSON back via
``--config`` reruns the same computation.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import allocation, asymptotics, capacity
from .channel import ChannelConfig, db_to_linear
from .errors import ConfigError, KeycapError
from .protocol import (
    ProtocolSetup,
    build_rates,
    bundled_instance,
    estimate_error_and_leakage,
    generate_codebook,
    load_instance,
    parse_instance,
)
from .rng import SeedSpec

COMMANDS = ("capacity", "sweep-snr", "sweep-alpha", "allocation-check", "asymptotics", "protocol")
SEED_ENV = "KEYCAP_DEFAULT_SEED"
DEFAULT_SAMPLES = capacity.DEFAULT_SWEEP_SAMPLES
SNR_RANGE = (-5.0, 25.0, 2.5)
ALPHA2_RANGE = (0.0, 30.0, 2.5)
CONVERGENCE_GRID_DB = (10.0, 20.0, 30.0, 40.0)


def parse_range(text: str) -> list[float]:
    """``start:stop:step`` (inclusive stop) or a comma list."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [start + k * step for k in range(count)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad range {text!r}; use start:stop:step or a,b,c") from None


def _dims(text: str) -> tuple[int, int, int]:
    try:
        dims = tuple(int(v) for v in text.split(","))
    except ValueError:
        dims = ()
    if len(dims) != 3:
        raise ConfigError(f"--dims expects m_S,m_D,m_W, got {text!r}")
    return dims


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="keycap", description=__doc__.splitlines()[0])
    p.add_argument("command", nargs="?", choices=COMMANDS)
    p.add_argument("--config", type=Path, help="JSON config (or a previous output)")
    p.add_argument("--seed", type=int, help=f"64-bit master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--samples", type=int, help="Monte Carlo sample count")
    p.add_argument("--workers", type=int, default=1, help="threads; never changes results")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--out", type=Path, help="output file (default stdout)")
    p.add_argument("--dims", help="m_S,m_D,m_W")
    p.add_argument("--snr-db", type=float, help="P/sigma2_D in dB")
    p.add_argument("--alpha2-db", type=float, help="eavesdropper gain in dB")
    p.add_argument("--snr-db-range", help="start:stop:step for sweep-snr")
    p.add_argument("--alpha2-db-range", help="start:stop:step for sweep-alpha")
    p.add_argument("--trials", type=int, help="random allocations for allocation-check")
    p.add_argument("--beta", type=float, help="antenna ratio m_W/m_D for the large-array limit")
    p.add_argument("--instance", type=Path, help="protocol instance JSON (default: bundled)")
    p.add_argument("--epsilon", type=float, help="typicality tolerance")
    p.add_argument("--rate-epsilon", type=float, help="rate slack for the codebook")
    p.add_argument("--blocklength", type=int, help="protocol blocklength n")
    p.add_argument("--mode", choices=("exact", "mc"), help="protocol evaluation mode")
    p.add_argument("--replicates", type=int, help="protocol sessions in mc mode")
    p.add_argument("--cap", type=int, help="exact-mode joint state cap")
    return p


def _read_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        d = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    return d.get("config", d)


def _default_channel() -> dict:
    # 10 dB SNR, 0 dB eavesdropper gain, single antennas
    return ChannelConfig(1, 1, 1, P=db_to_linear(10.0), alpha2=1.0).to_dict()


def resolve(args: argparse.Namespace, env=os.environ) -> dict:
    """Merge defaults, config file and flags into one echoable run config."""
    cfg = _read_config(args.config)
    command = args.command or cfg.get("command")
    if command not in COMMANDS:
        raise ConfigError(f"command must be one of {COMMANDS}")
    run = {"command": command}

    seed = args.seed
    if seed is None:
        seed = cfg.get("mc", {}).get("seed")
    if seed is None:
        raw = env.get(SEED_ENV)
        try:
            seed = int(raw) if raw not in (None, "") else 0
        except ValueError:
            raise ConfigError(f"{SEED_ENV} must be an integer") from None
    samples = args.samples or cfg.get("mc", {}).get("n_samples", DEFAULT_SAMPLES)
    run["mc"] = {"seed": int(seed), "n_samples": int(samples)}
    SeedSpec(int(seed))  # range check
    fmt = args.format or cfg.get("output", {}).get("format")
    # the output path is deliberately not echoed: it never affects results
    run["output"] = {"format": fmt or ("csv" if command.startswith("sweep") else "json")}

    if command == "protocol":
        run["protocol"] = _resolve_protocol(args, cfg.get("protocol", {}))
        return run

    ch = dict(_default_channel())
    ch.update(cfg.get("channel", {}))
    if args.dims:
        ch["m_S"], ch["m_D"], ch["m_W"] = _dims(args.dims)
    channel = ChannelConfig.from_dict(ch)
    if args.snr_db is not None:
        channel = channel.with_snr_db(args.snr_db)
    if args.alpha2_db is not None:
        channel = channel.with_alpha2_db(args.alpha2_db)
    run["channel"] = channel.to_dict()

    if command == "sweep-snr":
        values = cfg.get("sweep", {}).get("values")
        if args.snr_db_range:
            values = parse_range(args.snr_db_range)
        if values is None:
            values = parse_range("{}:{}:{}".format(*SNR_RANGE))
        run["sweep"] = {"axis": "snr_db", "values": values}
    elif command == "sweep-alpha":
        values = cfg.get("sweep", {}).get("values")
        if args.alpha2_db_range:
            values = parse_range(args.alpha2_db_range)
        if values is None:
            values = parse_range("{}:{}:{}".format(*ALPHA2_RANGE))
        run["sweep"] = {"axis": "alpha2_db", "values": values}
    elif command == "allocation-check":
        run["trials"] = int(args.trials or cfg.get("trials", 100))
    elif command == "asymptotics":
        beta = args.beta if args.beta is not None else cfg.get("beta")
        run["beta"] = None if beta is None else float(beta)
        run["grid_db"] = list(cfg.get("grid_db", CONVERGENCE_GRID_DB))
    if run["output"]["format"] == "csv" and not command.startswith("sweep"):
        raise ConfigError(f"{command} writes json only")
    return run


def _resolve_protocol(args, prev: dict) -> dict:
    if args.instance is not None:
        inst = load_instance(args.instance).raw
    elif "instance" in prev:
        inst = dict(prev["instance"])
    else:
        inst = bundled_instance().raw
    inst = dict(inst)
    for flag, key in (("epsilon", "epsilon"), ("rate_epsilon", "rate_epsilon"),
                      ("blocklength", "blocklength")):
        v = getattr(args, flag)
        if v is not None:
            inst[key] = v
    parse_instance(inst)  # validate
    return {
        "instance": inst,
        "mode": args.mode or prev.get("mode", "exact"),
        "replicates": int(args.replicates or prev.get("replicates", 10_000)),
        "cap": int(args.cap or prev.get("cap", 2 ** 26)),
    }


def execute(run: dict, workers: int = 1):
    """Run a resolved config; returns the result payload."""
    command = run["command"]
    seed = SeedSpec(run["mc"]["seed"])
    n = run["mc"]["n_samples"]
    if command == "protocol":
        return _run_protocol(run["protocol"], seed, workers)
    cfg = ChannelConfig.from_dict(run["channel"])
    if command == "capacity":
        return capacity.estimate_capacity(cfg, n, seed, workers)
    if command in ("sweep-snr", "sweep-alpha"):
        sw = run["sweep"]
        return capacity.sweep(cfg, sw["axis"], sw["values"], n, seed, workers)
    if command == "allocation-check":
        return allocation.check_uniform_optimal(cfg, run["trials"], n, seed, workers)
    if command == "asymptotics":
        return _run_asymptotics(cfg, run, n, seed, workers)
    raise ConfigError(f"unknown command {command!r}")


def _run_asymptotics(cfg: ChannelConfig, run: dict, n: int, seed: SeedSpec, workers: int) -> dict:
    out = {"regime": asymptotics.regime(cfg)}
    out["capacity"] = capacity.estimate_capacity(cfg, n, seed, workers).to_dict()
    grid = [float(v) for v in run["grid_db"]]
    series = capacity.sweep(cfg, "snr_db", grid, n, seed, workers)
    points = []
    for db, est in zip(grid, series.estimates):
        c = cfg.with_snr_db(db)
        if cfg.m_W >= cfg.m_S:
            lim = asymptotics.high_power_limit(c, n, seed, workers) if c.alpha2 > 0 else None
        else:
            lim = asymptotics.c_infinity(c, n, seed, workers)
        point = {"snr_db": db, "capacity": est.to_dict()}
        if lim is not None:
            point["limit"] = lim.to_dict()
            if lim.mean_bits > 0:
                point["ratio"] = est.mean_bits / lim.mean_bits
        points.append(point)
    out["high_power_grid"] = points
    if cfg.alpha2 > 0:
        out["alpha_limit"] = asymptotics.alpha_limit(cfg, n, seed, workers).to_dict()
    if run.get("beta") is not None:
        q = asymptotics.AsymptoticsQuery(cfg, run["beta"])
        out["large_antenna_limit_bits"] = asymptotics.large_antenna_limit(q)
    return out


def _run_protocol(params: dict, seed: SeedSpec, workers: int) -> dict:
    inst = parse_instance(params["instance"])
    setup = ProtocolSetup(inst.dmc, inst.quantizer, inst.epsilon)
    rates = build_rates(inst.dmc, inst.quantizer, inst.rate_slack)
    cb = generate_codebook(rates, setup.p_yhat, inst.blocklength, SeedSpec(inst.codebook_seed))
    report = estimate_error_and_leakage(cb, setup, inst.blocklength, params["mode"],
                                        params["replicates"], seed, params["cap"], workers)
    return {"rates": rates.to_dict(), "codebook": cb.to_dict(), "report": report.to_dict()}


def _payload(result):
    if hasattr(result, "to_dict"):
        return result.to_dict()
    return result


def _clean(obj):
    """Replace non-finite floats so the JSON stays standard."""
    if isinstance(obj, float):
        if math.isnan(obj):
            return None
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def render(run: dict, result) -> str:
    if run["output"]["format"] == "csv":
        header = "# config: " + json.dumps(_clean(run), sort_keys=True) + "\n"
        return header + result.to_csv()
    doc = {"config": run, "result": _payload(result)}
    return json.dumps(_clean(doc), indent=2, sort_keys=True) + "\n"


def _decode_inf(values):
    # "-inf" survives the JSON round trip as a string
    return [float(v) for v in values]


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    command = args.command
    try:
        if args.workers < 1:
            raise ConfigError("--workers must be at least 1")
        run = resolve(args)
        command = run["command"]
        if "sweep" in run:
            run["sweep"]["values"] = _decode_inf(run["sweep"]["values"])
        text = render(run, execute(run, args.workers))
        if args.out is None:
            sys.stdout.write(text)
        else:
            args.out.write_text(text)
    except KeycapError as exc:
        record = {"error": exc.code, "type": type(exc).__name__, "message": str(exc), "command": command}
        sys.stderr.write(json.dumps(record) + "\n")
        return 2 if isinstance(exc, ConfigError) else 1
    except ValueError as exc:
        record = {"error": "invalid_argument", "type": type(exc).__name__, "message": str(exc),
                  "command": command}
        sys.stderr.write(json.dumps(record) + "\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
