"""``spinrouter`` command line.

Every command reads a JSON spec (see :mod:`spinrouter.config`), optionally
converts it to other energy units, runs one computation and writes CSV
and/or JSON files to the output directory.  Command options can also be
given in the spec file's ``run`` section; flags override file keys, and
``--set key=value`` overrides spec keys (dotted paths like
``sender_block.barrier_field`` or ``receivers.0.field`` are accepted).

Times, ``t_max``, ``nu`` and ``delta_r`` are in the units of the spec as
simulated, i.e. after any ``--units`` conversion.

On failure a single JSON line ``{"error": ..., "message": ...}`` goes to
stderr and the exit status is 1 (bad input or physics) or 2 (bad usage).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .analytics import compare_exact
from .config import ConfigError, spec_from_dict, spec_to_dict
from .dynamics import DEFAULT_COARSE_STEPS, evolve_amplitude, find_peak
from .errors import SpinRouterError
from .model import (BarrierRouterSpec, build_hamiltonian, convert_units, sender_and_targets,
                    validate_parity)
from .output import metadata, write_csv, write_json
from .routing import RoutingScheme, Scheme, route_target, routing_table
from .spectral import diagonalize

ENV_OUTPUT_DIR = "SPINROUTER_OUTPUT_DIR"
RUN_KEYS = {"t_max", "samples", "source", "target", "scheme", "nu", "delta_r", "side",
            "coarse_steps", "workers", "formula", "threshold", "param", "values", "name"}
DEFAULT_SAMPLES = 2001


class UsageError(SpinRouterError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--spec", required=True, help="JSON spec file")
    common.add_argument("--units", choices=("J", "4J"), help="convert the spec to these units first")
    common.add_argument("--out", help=f"output directory (default ${ENV_OUTPUT_DIR} or .)")
    common.add_argument("--name", help="file name stem (default: the command)")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a spec key; VALUE is parsed as JSON")
    common.add_argument("--workers", type=int, help="parallel tasks (default 1)")

    window = _Parser(add_help=False)
    window.add_argument("--t-max", type=float, dest="t_max")
    window.add_argument("--samples", type=int)

    scheme = _Parser(add_help=False)
    scheme.add_argument("--scheme", choices=[s.value for s in Scheme])
    scheme.add_argument("--nu", type=float, help="band detuning for off-resonance routing")
    scheme.add_argument("--delta-r", type=float, dest="delta_r", help="declared receiver spacing")
    scheme.add_argument("--side", type=int, choices=(1, -1))
    scheme.add_argument("--t-max", type=float, dest="t_max")
    scheme.add_argument("--coarse-steps", type=int, dest="coarse_steps")

    parser = _Parser(prog="spinrouter", description="Quantum state routing on XX spin networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("spectrum", parents=[common], help="eigenvalues of the Hamiltonian")
    p = sub.add_parser("evolve", parents=[common, window], help="amplitude time series")
    p.add_argument("--source", help="source site label (default: the sender)")
    p.add_argument("--target", help="receiver index or any site label (default 1)")
    p = sub.add_parser("compare-analytic", parents=[common, window],
                       help="exact dynamics against the closed-form prediction")
    p.add_argument("--target", help="receiver index (default 1)")
    p.add_argument("--formula", choices=("auto", "weak", "linear", "quadratic", "barrier"))
    p.add_argument("--threshold", type=float, help="pass if max deviation is below this")
    p = sub.add_parser("route", parents=[common, scheme], help="tune for one receiver and simulate")
    p.add_argument("--target", help="receiver index (default 1)")
    sub.add_parser("table", parents=[common, scheme], help="routing table over all receivers")
    p = sub.add_parser("sweep", parents=[common], help="peak transfer over a parameter grid")
    p.add_argument("--param", help="spec key to vary, e.g. sender_field")
    p.add_argument("--values", help="comma list 'a,b,c' or range 'start:stop:num'")
    p.add_argument("--target", help="receiver index (default 1)")
    p.add_argument("--t-max", type=float, dest="t_max")
    p.add_argument("--coarse-steps", type=int, dest="coarse_steps")
    return parser


def _set_path(d: dict, path: str, value) -> None:
    keys = path.split(".")
    node = d
    for k in keys[:-1]:
        node = node[int(k)] if isinstance(node, list) else node.setdefault(k, {})
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


class Context:
    """Parsed spec, run options and output location for one invocation."""

    def __init__(self, args: argparse.Namespace):
        self.args = args
        path = Path(args.spec)
        self.text = path.read_text(encoding="utf-8")
        try:
            raw = json.loads(self.text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} at column {exc.colno}", None, exc.lineno) from None
        if not isinstance(raw, dict):
            raise ConfigError("spec file must hold a JSON object")
        self.run = raw.pop("run", {}) or {}
        if not isinstance(self.run, dict):
            raise ConfigError("run must be an object", "run")
        unknown = set(self.run) - RUN_KEYS
        if unknown:
            raise ConfigError(f"unknown run key(s) {sorted(unknown)}", "run")
        for item in args.set:
            key, sep, value = item.partition("=")
            if not sep:
                raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
            try:
                _set_path(raw, key, _parse_value(value))
            except (KeyError, IndexError, ValueError, TypeError):
                raise UsageError(f"--set cannot address {key!r}") from None
        self.raw = raw
        spec = spec_from_dict(raw, self.text)
        if args.units:
            spec = convert_units(spec, args.units)
        self.spec = spec
        out = args.out or os.environ.get(ENV_OUTPUT_DIR) or "."
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.stem = self.opt("name", args.command)
        self.files: list[str] = []

    def opt(self, key: str, default=None):
        value = getattr(self.args, key, None)
        if value is not None:
            return value
        return self.run.get(key, default)

    def path(self, suffix: str) -> Path:
        p = self.out / f"{self.stem}{suffix}"
        self.files.append(str(p))
        return p

    def meta(self, **extra) -> dict:
        return metadata(self.spec, self.args.command, **extra)

    def warnings(self) -> list[str]:
        return [w.message for w in validate_parity(self.spec)]


def _receiver_index(ctx: Context, value) -> int:
    if value is None:
        return 1
    text = str(value)
    if text.startswith("R"):
        text = text[1:].split("_")[0]
    try:
        k = int(text)
    except ValueError:
        raise UsageError(f"target must be a receiver index, got {value!r}") from None
    if not 1 <= k <= ctx.spec.n_receivers:
        raise UsageError(f"target {k} outside 1..{ctx.spec.n_receivers}")
    return k


def _default_t_max(spec) -> float:
    if isinstance(spec, BarrierRouterSpec):
        return 5.0e4 / spec.hopping_j
    if spec.coupling_g == 0.0:
        raise UsageError("g = 0: no natural time window, give --t-max")
    return math.pi * math.sqrt(2.0 * spec.n_chain) / spec.coupling_g


def _times(ctx: Context, t_max: float) -> np.ndarray:
    samples = int(ctx.opt("samples", DEFAULT_SAMPLES))
    if samples < 2:
        raise UsageError("samples must be at least 2")
    if not t_max > 0:
        raise UsageError("t_max must be positive")
    return np.linspace(0.0, t_max, samples)


def cmd_spectrum(ctx: Context) -> None:
    decomp = diagonalize(build_hamiltonian(ctx.spec))
    write_csv(ctx.path(".csv"), ["index", "eigenvalue"],
              enumerate(decomp.eigenvalues), ctx.meta(dim=decomp.source_dim))


def cmd_evolve(ctx: Context) -> None:
    spec = ctx.spec
    decomp = diagonalize(build_hamiltonian(spec))
    sender, labels = sender_and_targets(spec)
    source = ctx.opt("source", sender)
    target = ctx.opt("target", 1)
    target = str(target) if str(target) in decomp.basis else labels[_receiver_index(ctx, target) - 1]
    t_max = float(ctx.opt("t_max", _default_t_max(spec)))
    series = evolve_amplitude(decomp, source, target, _times(ctx, t_max))
    f = series.amplitudes
    prob = series.probability
    meta = ctx.meta(source=source, target=target)
    write_csv(ctx.path(".csv"), ["t", "re_f", "im_f", "F", "F_bar"],
              zip(series.times, f.real, f.imag, prob, series.average_fidelity), meta)
    peak = find_peak(decomp, source, target, t_max,
                     max(int(ctx.opt("coarse_steps", DEFAULT_COARSE_STEPS)), 100))
    write_json(ctx.path(".json"), {
        "metadata": meta, "spec": spec_to_dict(spec), "t_max": t_max,
        "peak_probability": peak.peak_probability, "peak_avg_fidelity": peak.peak_avg_fidelity,
        "optimal_time": peak.optimal_time, "warnings": ctx.warnings()})


def cmd_compare(ctx: Context) -> None:
    target = _receiver_index(ctx, ctx.opt("target"))
    t_max = ctx.opt("t_max")
    samples = int(ctx.opt("samples", DEFAULT_SAMPLES))
    if samples < 2:
        raise UsageError("samples must be at least 2")
    res = compare_exact(ctx.spec, target, ctx.opt("formula", "auto"), t_max, samples)
    meta = ctx.meta(formula=res["formula"], quantity=res["quantity"], target=res["target"])
    q = res["quantity"]
    write_csv(ctx.path(".csv"), ["t", f"{q}_exact", f"{q}_analytic", "abs_diff"],
              zip(res["times"], res["exact"], res["analytic"],
                  np.abs(res["exact"] - res["analytic"])), meta)
    threshold = ctx.opt("threshold")
    summary = {k: v for k, v in res.items() if k not in ("times", "exact", "analytic")}
    summary.update(metadata=meta, spec=spec_to_dict(ctx.spec), threshold=threshold,
                   passed=None if threshold is None else res["max_deviation"] < threshold)
    summary["warnings"] = summary["warnings"] + ctx.warnings()
    write_json(ctx.path(".json"), summary)


def _scheme(ctx: Context) -> RoutingScheme:
    default = "barrier" if isinstance(ctx.spec, BarrierRouterSpec) else "chain-resonance"
    return RoutingScheme(
        variant=ctx.opt("scheme", default), t_max=ctx.opt("t_max"), delta_r=ctx.opt("delta_r"),
        nu=ctx.opt("nu"), side=ctx.opt("side"),
        coarse_steps=int(ctx.opt("coarse_steps", DEFAULT_COARSE_STEPS)))


def _table_rows(rows, labels):
    fields = sorted({k for r in rows for k in r.tuned_fields})
    header = (["target", "target_label", "t_max", "peak_probability", "peak_avg_fidelity",
               "optimal_time", "margin"] + fields + [f"F_bar_{lab}" for lab in labels])
    body = []
    for r in rows:
        peaks = dict(r.off_target)
        peaks[r.target_label] = r.peak_avg_fidelity
        body.append([r.target, r.target_label, r.t_max, r.peak_probability, r.peak_avg_fidelity,
                     r.optimal_time, r.margin if math.isfinite(r.margin) else "inf"]
                    + [r.tuned_fields.get(k, "") for k in fields] + [peaks[lab] for lab in labels])
    return header, body


def _row_json(r) -> dict:
    return {"target": r.target, "target_label": r.target_label, "tuned_fields": r.tuned_fields,
            "t_max": r.t_max, "peak_probability": r.peak_probability,
            "peak_avg_fidelity": r.peak_avg_fidelity, "optimal_time": r.optimal_time,
            "off_target_peak_avg_fidelity": r.off_target, "margin": r.margin}


def cmd_route(ctx: Context) -> None:
    scheme = _scheme(ctx)
    target = _receiver_index(ctx, ctx.opt("target"))
    row = route_target(ctx.spec, scheme, target)
    _, labels = sender_and_targets(ctx.spec)
    meta = ctx.meta(scheme=scheme.variant.value, target=row.target_label)
    header, body = _table_rows([row], labels)
    write_csv(ctx.path(".csv"), header, body, meta)
    write_json(ctx.path(".json"), {"metadata": meta, "spec": spec_to_dict(ctx.spec),
                                   "scheme": scheme.variant.value, "row": _row_json(row),
                                   "warnings": ctx.warnings()})


def cmd_table(ctx: Context) -> None:
    scheme = _scheme(ctx)
    table = routing_table(ctx.spec, scheme, int(ctx.opt("workers", 1)))
    _, labels = sender_and_targets(ctx.spec)
    meta = ctx.meta(scheme=scheme.variant.value)
    header, body = _table_rows(table.rows, labels)
    write_csv(ctx.path(".csv"), header, body, meta)
    write_json(ctx.path(".json"), {"metadata": meta, "spec": spec_to_dict(ctx.spec),
                                   "scheme": scheme.variant.value, "selective": table.selective,
                                   "rows": [_row_json(r) for r in table.rows],
                                   "warnings": ctx.warnings()})


def parse_values(text) -> list[float]:
    if isinstance(text, list):
        return [float(v) for v in text]
    text = str(text)
    if text.count(":") == 2:
        start, stop, num = text.split(":")
        return np.linspace(float(start), float(stop), int(num)).tolist()
    return [float(v) for v in text.split(",") if v.strip()]


def cmd_sweep(ctx: Context) -> None:
    param = ctx.opt("param")
    values = ctx.opt("values")
    if param is None or values is None:
        raise UsageError("sweep needs --param and --values")
    try:
        grid = parse_values(values)
    except ValueError:
        raise UsageError(f"cannot parse values {values!r}") from None
    if not grid:
        raise UsageError("empty value grid")
    target = _receiver_index(ctx, ctx.opt("target"))
    coarse = int(ctx.opt("coarse_steps", DEFAULT_COARSE_STEPS))
    base = spec_to_dict(ctx.spec)

    def point(value):
        d = json.loads(json.dumps(base))
        try:
            _set_path(d, param, value)
        except (KeyError, IndexError, ValueError, TypeError):
            raise UsageError(f"cannot sweep {param!r}") from None
        spec = spec_from_dict(d)
        source, labels = sender_and_targets(spec)
        t_max = float(ctx.opt("t_max", _default_t_max(spec)))
        decomp = diagonalize(build_hamiltonian(spec))
        peak = find_peak(decomp, source, labels[target - 1], t_max, coarse)
        return [value, peak.peak_probability, peak.peak_avg_fidelity, peak.optimal_time, t_max]

    workers = int(ctx.opt("workers", 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, grid))
    else:
        rows = [point(v) for v in grid]
    meta = ctx.meta(param=param, target=f"R{target}")
    write_csv(ctx.path(".csv"),
              [param, "peak_probability", "peak_avg_fidelity", "optimal_time", "t_max"], rows, meta)


HANDLERS = {"spectrum": cmd_spectrum, "evolve": cmd_evolve, "compare-analytic": cmd_compare,
            "route": cmd_route, "table": cmd_table, "sweep": cmd_sweep}


def _fail(kind: str, message: str, key=None, code: int = 1) -> int:
    err = {"error": kind, "message": message}
    if key is not None:
        err["key"] = key
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        ctx = Context(args)
        if ctx.opt("workers", 1) < 1:
            raise UsageError("workers must be >= 1")
        HANDLERS[args.command](ctx)
    except UsageError as exc:
        return _fail("UsageError", str(exc), code=2)
    except SpinRouterError as exc:
        return _fail(type(exc).__name__, str(exc), getattr(exc, "key", None))
    except OSError as exc:
        return _fail("OSError", f"{exc.strerror or exc}: {exc.filename}" if exc.filename else str(exc))
    print(json.dumps({"status": "ok", "files": ctx.files}))
    return 0


if __name__ == "__main__":
    sys.exit(main())
