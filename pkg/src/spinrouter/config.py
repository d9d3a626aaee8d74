"""JSON specification files.

A file holds one router and an optional ``run`` section with command
defaults.  Every energy is read in the units named by the mandatory
``"units"`` key (``"J"`` or ``"4J"``); there is no implicit default.

Ring router::

    {"format_version": 1, "model": "ring", "units": "4J",
     "n_chain": 16, "hopping_j": 0.25, "field_h": 0.0, "coupling_g": 0.01,
     "sender_site": 16, "sender_field": 0.0,
     "receivers": [{"site": 4, "field": 0.0}],
     "run": {"t_max": 1300.0}}

Barrier router::

    {"format_version": 1, "model": "barrier", "units": "J",
     "n_chain": 30, "hopping_j": 1.0, "field_h": 0.0,
     "sender_block": {"attach_site": 1, "barrier_field": 20.0},
     "receiver_blocks": [{"attach_site": 6, "barrier_field": 20.0}]}
"""

from __future__ import annotations

import json
import math
import re
from pathlib import Path

from .errors import SpecificationError
from .model import BarrierRouterSpec, Block, RingRouterSpec, Receiver, RouterSpec

FORMAT_VERSION = 1

_RING_KEYS = {"format_version", "model", "units", "n_chain", "hopping_j", "field_h",
              "coupling_g", "sender_site", "sender_field", "receivers", "run"}
_BARRIER_KEYS = {"format_version", "model", "units", "n_chain", "hopping_j", "field_h",
                 "sender_block", "receiver_blocks", "run"}


class ConfigError(SpecificationError):
    """A spec file is malformed; carries the offending key and line when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = f" (line {line})" if line is not None else ""
        super().__init__(f"{message}{where}", key=key)
        self.line = line


def _line_of(text: str | None, key: str | None) -> int | None:
    """Line of the ``n``-th occurrence of the key's last name, ``n`` from a list index."""
    if not text or not key:
        return None
    names = re.findall(r"[A-Za-z_]+", key)
    if not names:
        return None
    index = re.findall(r"\[(\d+)\]", key)
    nth = int(index[-1]) if index and "." in key else 0
    hits = list(re.finditer(r'"' + re.escape(names[-1]) + r'"\s*:', text))
    if not hits:
        return None
    return text.count("\n", 0, hits[min(nth, len(hits) - 1)].start()) + 1


def _number(value, key: str, text: str | None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigError(f"{key} must be a finite number, got {value!r}", key, _line_of(text, key))
    return float(value)


def _integer(value, key: str, text: str | None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key} must be an integer, got {value!r}", key, _line_of(text, key))
    return value


def _require(d: dict, key: str, text: str | None, prefix: str = ""):
    if key not in d:
        raise ConfigError(f"missing required key {prefix + key!r}", prefix + key,
                          _line_of(text, prefix.rstrip(".").split("[")[0]) if prefix else None)
    return d[key]


def _object(value, key: str, text: str | None) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{key} must be an object", key, _line_of(text, key))
    return value


def spec_from_dict(d: dict, text: str | None = None) -> RouterSpec:
    """Build a spec from parsed JSON; ``text`` is the raw file for line lookups."""
    d = _object(d, "<root>", text)
    version = d.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported format_version {version!r}", "format_version",
                          _line_of(text, "format_version"))
    model = d.get("model", "ring")
    units = _require(d, "units", text)
    if units not in ("J", "4J"):
        raise ConfigError(f"units must be 'J' or '4J', got {units!r}", "units", _line_of(text, "units"))
    allowed = {"ring": _RING_KEYS, "barrier": _BARRIER_KEYS}.get(model)
    if allowed is None:
        raise ConfigError(f"model must be 'ring' or 'barrier', got {model!r}", "model",
                          _line_of(text, "model"))
    for key in d:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} for model {model!r}", key, _line_of(text, key))

    n_chain = _integer(_require(d, "n_chain", text), "n_chain", text)
    # J sets the energy scale, so unlike the other energies it has no file default
    hop = _number(_require(d, "hopping_j", text), "hopping_j", text)
    common = {"n_chain": n_chain, "units": units, "hopping_j": hop}
    for key in ("field_h",):
        if key in d:
            common[key] = _number(d[key], key, text)
    try:
        if model == "ring":
            return _ring_from_dict(d, common, text)
        return _barrier_from_dict(d, common, text)
    except ConfigError:
        raise
    except SpecificationError as exc:
        raise ConfigError(str(exc), exc.key, _line_of(text, exc.key)) from None


def _ring_from_dict(d: dict, kw: dict, text: str | None) -> RingRouterSpec:
    for key in ("coupling_g", "sender_field"):
        if key in d:
            kw[key] = _number(d[key], key, text)
    if "sender_site" in d:
        kw["sender_site"] = _integer(d["sender_site"], "sender_site", text)
    raw = _require(d, "receivers", text)
    if not isinstance(raw, list):
        raise ConfigError("receivers must be a list", "receivers", _line_of(text, "receivers"))
    recs = []
    for i, r in enumerate(raw):
        p = f"receivers[{i}]"
        r = _object(r, p, text)
        extra = set(r) - {"site", "field"}
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)} in {p}", p, _line_of(text, "receivers"))
        recs.append(Receiver(_integer(_require(r, "site", text, p + "."), p + ".site", text),
                             _number(_require(r, "field", text, p + "."), p + ".field", text)))
    return RingRouterSpec(receivers=tuple(recs), **kw)


def _block_from_dict(b, p: str, text: str | None) -> Block:
    b = _object(b, p, text)
    extra = set(b) - {"attach_site", "barrier_field"}
    if extra:
        raise ConfigError(f"unknown key(s) {sorted(extra)} in {p}", p, _line_of(text, p))
    return Block(_integer(_require(b, "attach_site", text, p + "."), p + ".attach_site", text),
                 _number(_require(b, "barrier_field", text, p + "."), p + ".barrier_field", text))


def _barrier_from_dict(d: dict, kw: dict, text: str | None) -> BarrierRouterSpec:
    sender = _block_from_dict(_require(d, "sender_block", text), "sender_block", text)
    raw = _require(d, "receiver_blocks", text)
    if not isinstance(raw, list):
        raise ConfigError("receiver_blocks must be a list", "receiver_blocks",
                          _line_of(text, "receiver_blocks"))
    blocks = tuple(_block_from_dict(b, f"receiver_blocks[{i}]", text) for i, b in enumerate(raw))
    return BarrierRouterSpec(sender_block=sender, receiver_blocks=blocks, **kw)


def spec_to_dict(spec: RouterSpec) -> dict:
    """Inverse of :func:`spec_from_dict` (without a ``run`` section)."""
    out = {"format_version": FORMAT_VERSION}
    if isinstance(spec, RingRouterSpec):
        out.update(model="ring", units=spec.units, n_chain=int(spec.n_chain),
                   hopping_j=spec.hopping_j, field_h=spec.field_h, coupling_g=spec.coupling_g,
                   sender_site=int(spec.sender_site), sender_field=spec.sender_field,
                   receivers=[{"site": int(r.site), "field": r.field} for r in spec.receivers])
    else:
        out.update(model="barrier", units=spec.units, n_chain=int(spec.n_chain),
                   hopping_j=spec.hopping_j, field_h=spec.field_h,
                   sender_block=_block_dict(spec.sender_block),
                   receiver_blocks=[_block_dict(b) for b in spec.receiver_blocks])
    return out


def _block_dict(b: Block) -> dict:
    return {"attach_site": int(b.attach_site), "barrier_field": b.barrier_field}


def parse_spec_text(text: str) -> tuple[RouterSpec, dict]:
    """Parse JSON text into ``(spec, run_section)``."""
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} at column {exc.colno}", None, exc.lineno) from None
    spec = spec_from_dict(d, text)
    run = d.get("run", {})
    return spec, dict(_object(run, "run", text))


def load_spec(path) -> tuple[RouterSpec, dict]:
    return parse_spec_text(Path(path).read_text(encoding="utf-8"))


def dump_spec(spec: RouterSpec, path=None, run: dict | None = None) -> str:
    d = spec_to_dict(spec)
    if run:
        d["run"] = run
    text = json.dumps(d, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
