"""Scenario files: JSON documents describing a dynamics, observers, preparations and measurements.

Complex matrices are written row-major as lists of ``[re, im]`` pairs. Named
families (``broadcast``, ``finite_env``) are accepted as shorthand for the
channel; ``explicit`` gives the pointer effects and prepared states directly.
Every validation error names the JSON path and the line it starts on.

Example::

    {
      "name": "noisy_qubit",
      "seed": 0,
      "dynamics": {"kind": "broadcast", "d_A": 2, "t": 1, "noise": 0.2},
      "preparations": ["pointer_basis", "random:10"],
      "measurements": ["computational", "sic", "optimal"]
    }
"""
from __future__ import annotations

import copy
import json
import re
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .channels import (BroadcastSpec, FiniteEnvSpec, MeasureAndPrepareChannel, finite_env_channel,
                       make_broadcast)
from .qmath import (Povm, PovmError, ValidationError, basis_povm, density_matrix, ket_to_dm,
                    matrix_from_pairs, matrix_to_pairs, qubit_sic_povm, random_density, random_povm)

DEFAULT_TOLERANCES = {"solver": 1e-9, "certificate": 5e-7, "rank": 1e-8, "bph_delta": 0.1}
SWEEPABLE = {"noise": "broadcast", "coupling_angle": "finite_env", "N": "finite_env"}


class ScenarioError(ValidationError):
    """Validation error located in a scenario file."""

    def __init__(self, path: str, message: str, line: int | None = None, source: str | None = None):
        where = f"{source or '<scenario>'}"
        if line is not None:
            where += f":{line}"
        super().__init__(f"{where}: {path}: {message}")
        self.path = path
        self.line = line


# ---------------------------------------------------------------------------
# JSON path -> line numbers
# ---------------------------------------------------------------------------

_WS = " \t\r\n"


def _line_map(text: str) -> dict[str, int]:
    """Line (1-based) at which each JSON value starts, keyed by path like ``$.a[0].b``."""
    lines: dict[str, int] = {}
    dec = json.JSONDecoder()

    def skip(i):
        while i < len(text) and text[i] in _WS:
            i += 1
        return i

    def value(i, path):
        i = skip(i)
        lines[path] = text.count("\n", 0, i) + 1
        ch = text[i]
        if ch == "{":
            i = skip(i + 1)
            if text[i] == "}":
                return i + 1
            while True:
                key, i = dec.raw_decode(text, skip(i))
                i = skip(i) + 1           # ':'
                i = skip(value(i, f"{path}.{key}"))
                if text[i] == "}":
                    return i + 1
                i += 1                    # ','
        if ch == "[":
            i = skip(i + 1)
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = skip(value(i, f"{path}[{n}]"))
                n += 1
                if text[i] == "]":
                    return i + 1
                i += 1
        _, end = dec.raw_decode(text, i)
        return end

    value(0, "$")
    return lines


# ---------------------------------------------------------------------------
# scenario
# ---------------------------------------------------------------------------

@dataclass
class Scenario:
    name: str
    seed: int
    dynamics: Any                       # BroadcastSpec | FiniteEnvSpec | MeasureAndPrepareChannel
    channel: MeasureAndPrepareChannel
    bob_dims: list
    preparations: list
    measurements: list                  # per observer: list of Povm or the token "optimal"
    tolerances: dict
    pointer_basis: np.ndarray
    ssb: bool = False
    raw: dict = field(default_factory=dict)
    source: str | None = None

    @property
    def t(self) -> int:
        return len(self.bob_dims)

    @property
    def d_A(self) -> int:
        return self.channel.d_in


class _Ctx:
    def __init__(self, lines, source):
        self.lines = lines
        self.source = source

    def error(self, path, message):
        # report the line of the deepest enclosing value present in the file
        p = path
        while p not in self.lines and p != "$":
            p = re.sub(r"(\.[^.\[\]]+|\[\d+\])$", "", p) or "$"
        return ScenarioError(path, message, self.lines.get(p), self.source)


def _get(ctx, obj, key, path, kind=None, default=...):
    if key not in obj:
        if default is ...:
            raise ctx.error(path, f"missing required field '{key}'")
        return default
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise ctx.error(f"{path}.{key}", f"expected an integer, got {val!r}")
    if kind is float and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise ctx.error(f"{path}.{key}", f"expected a number, got {val!r}")
    if kind is list and not isinstance(val, list):
        raise ctx.error(f"{path}.{key}", f"expected a list, got {type(val).__name__}")
    if kind is dict and not isinstance(val, dict):
        raise ctx.error(f"{path}.{key}", f"expected an object, got {type(val).__name__}")
    return val


def _matrix(ctx, rows, path):
    try:
        return matrix_from_pairs(rows, path)
    except ValidationError as exc:
        raise ctx.error(path, str(exc).split(": ", 1)[-1]) from None


def _dynamics(ctx, dyn):
    p = "$.dynamics"
    kind = _get(ctx, dyn, "kind", p)
    try:
        if kind == "broadcast":
            basis = dyn.get("pointer_basis")
            spec = BroadcastSpec(d_A=_get(ctx, dyn, "d_A", p, int), t=_get(ctx, dyn, "t", p, int),
                                 bob_dims=tuple(_get(ctx, dyn, "bob_dims", p, list, [])),
                                 noise=float(_get(ctx, dyn, "noise", p, float, 0.0)),
                                 pointer_basis=None if basis is None else _matrix(ctx, basis, f"{p}.pointer_basis"),
                                 system_copy=bool(dyn.get("system_copy", False)))
            return spec, make_broadcast(spec), spec.output_dims, spec.pointer_basis
        if kind == "finite_env":
            n = _get(ctx, dyn, "N", p, int)
            if "S_t" in dyn:
                s_t = tuple(_get(ctx, dyn, "S_t", p, list))
            else:
                s_t = tuple(range(_get(ctx, dyn, "t", p, int)))
            angle = dyn.get("coupling_angle", np.pi / 2)
            spec = FiniteEnvSpec(N=n, S_t=s_t, coupling_angle=angle)
            return spec, finite_env_channel(spec), [2] * spec.t, np.eye(2, dtype=complex)
        if kind == "explicit":
            effects = [_matrix(ctx, e, f"{p}.pointer[{i}]") for i, e in enumerate(_get(ctx, dyn, "pointer", p, list))]
            try:
                pointer = Povm(effects)
            except PovmError as exc:
                idx = exc.effect_index if exc.effect_index is not None else 0
                raise ctx.error(f"{p}.pointer[{idx}]", str(exc)) from None
            prepared = []
            for i, s in enumerate(_get(ctx, dyn, "prepared", p, list)):
                try:
                    prepared.append(density_matrix(_matrix(ctx, s, f"{p}.prepared[{i}]")))
                except ScenarioError:
                    raise
                except ValidationError as exc:
                    raise ctx.error(f"{p}.prepared[{i}]", str(exc)) from None
            ch = MeasureAndPrepareChannel(pointer, tuple(prepared))
            dims = list(_get(ctx, dyn, "output_dims", p, list, [ch.d_out]))
            if int(np.prod(dims)) != ch.d_out:
                raise ctx.error(f"{p}.output_dims", f"{dims} does not multiply to the output dimension {ch.d_out}")
            basis = dyn.get("pointer_basis")
            basis = np.eye(ch.d_in, dtype=complex) if basis is None else _matrix(ctx, basis, f"{p}.pointer_basis")
            return ch, ch, dims, basis
    except ScenarioError:
        raise
    except ValidationError as exc:
        raise ctx.error(p, str(exc)) from None
    raise ctx.error(f"{p}.kind", f"unknown dynamics kind {kind!r} (expected broadcast, finite_env or explicit)")


def _preparations(ctx, items, d, rng, basis):
    out = []
    for i, item in enumerate(items):
        path = f"$.preparations[{i}]"
        if isinstance(item, str):
            if item == "pointer_basis":
                out.extend(np.outer(basis[:, k], basis[:, k].conj()) for k in range(d))
            elif item == "maximally_mixed":
                out.append(np.eye(d, dtype=complex) / d)
            elif item.startswith("random:") and item[7:].isdigit():
                out.extend(random_density(d, rng) for _ in range(int(item[7:])))
            else:
                raise ctx.error(path, f"unknown preparation shorthand {item!r}")
        elif isinstance(item, dict) and "ket" in item:
            ket = item["ket"]
            if not isinstance(ket, list) or len(ket) != d or not all(isinstance(z, list) and len(z) == 2 for z in ket):
                raise ctx.error(path, f"ket must be {d} [re, im] pairs")
            out.append(ket_to_dm([complex(*z) for z in ket]))
        else:
            rho = _matrix(ctx, item, path)
            if rho.shape != (d, d):
                raise ctx.error(path, f"preparation has dimension {rho.shape[0]}, system has {d}")
            try:
                out.append(density_matrix(rho))
            except ValidationError as exc:
                raise ctx.error(path, str(exc)) from None
    return out


def _povm(ctx, item, d, rng, path):
    if isinstance(item, str):
        if item == "optimal":
            return "optimal"
        if item == "computational":
            return basis_povm(d)
        if item == "sic":
            if d != 2:
                raise ctx.error(path, "the 'sic' shorthand is only defined for qubits")
            return qubit_sic_povm()
        if item.startswith("random:") and item[7:].isdigit() and int(item[7:]) >= 1:
            return random_povm(d, int(item[7:]), rng)
        raise ctx.error(path, f"unknown measurement shorthand {item!r}")
    if not isinstance(item, dict) or "effects" not in item:
        raise ctx.error(path, "a measurement is a shorthand string or an object with 'effects'")
    effects = [_matrix(ctx, e, f"{path}.effects[{i}]") for i, e in enumerate(item["effects"])]
    for i, e in enumerate(effects):
        if e.shape != (d, d):
            raise ctx.error(f"{path}.effects[{i}]", f"effect has dimension {e.shape[0]}, observer has {d}")
    try:
        return Povm(effects)
    except PovmError as exc:
        idx = exc.effect_index if exc.effect_index is not None else 0
        raise ctx.error(f"{path}.effects[{idx}]", str(exc)) from None


def _measurements(ctx, items, dims, rng):
    per_bob = bool(items) and all(isinstance(x, list) for x in items)
    if per_bob and len(items) != len(dims):
        raise ctx.error("$.measurements", f"{len(items)} per-observer lists for {len(dims)} observers")
    out = []
    for j, d in enumerate(dims):
        lst = items[j] if per_bob else items
        base = f"$.measurements[{j}]" if per_bob else "$.measurements"
        out.append([_povm(ctx, it, d, rng, f"{base}[{i}]") for i, it in enumerate(lst)])
    return out


def parse_scenario(data: dict, lines: dict | None = None, source: str | None = None) -> Scenario:
    ctx = _Ctx(lines or {}, source)
    if not isinstance(data, dict):
        raise ctx.error("$", "scenario must be a JSON object")
    name = _get(ctx, data, "name", "$")
    seed = _get(ctx, data, "seed", "$", int, 0)
    if seed < 0 or seed >= 2 ** 64:
        raise ctx.error("$.seed", "seed must be an unsigned 64-bit integer")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in _get(ctx, data, "tolerances", "$", dict, {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ctx.error(f"$.tolerances.{k}", f"unknown tolerance (known: {', '.join(DEFAULT_TOLERANCES)})")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or v <= 0:
            raise ctx.error(f"$.tolerances.{k}", "tolerance must be a positive number")
        tol[k] = float(v)
    dyn, channel, dims, basis = _dynamics(ctx, _get(ctx, data, "dynamics", "$", dict))
    ssb = bool(data.get("ssb", False))
    if "bob_dims" in data:
        given = _get(ctx, data, "bob_dims", "$", list)
        if list(given) != list(dims):
            raise ctx.error("$.bob_dims", f"declared {given} but the dynamics produces factors {dims}")
    rng = np.random.default_rng(seed)
    preps = _preparations(ctx, _get(ctx, data, "preparations", "$", list, ["pointer_basis"]), channel.d_in, rng, basis)
    meas = _measurements(ctx, _get(ctx, data, "measurements", "$", list, ["optimal"]), dims, rng)
    return Scenario(name=str(name), seed=seed, dynamics=dyn, channel=channel, bob_dims=list(dims),
                    preparations=preps, measurements=meas, tolerances=tol, pointer_basis=basis,
                    ssb=ssb, raw=data, source=source)


def load_scenario(path, seed: int | None = None) -> Scenario:
    path = str(path)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError("$", f"cannot read file: {exc.strerror}", None, path) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("$", f"invalid JSON: {exc.msg} (column {exc.colno})", exc.lineno, path) from None
    if seed is not None:
        data = copy.deepcopy(data)
        data["seed"] = seed
    return parse_scenario(data, _line_map(text), path)


def with_parameter(scn: Scenario, name: str, value) -> Scenario:
    """Copy of the scenario with one dynamics parameter replaced (used by sweeps)."""
    if name not in SWEEPABLE:
        raise ValidationError(f"parameter {name!r} is not sweepable (choose from {', '.join(SWEEPABLE)})")
    kind = scn.raw.get("dynamics", {}).get("kind")
    if kind != SWEEPABLE[name]:
        raise ValidationError(f"parameter {name!r} needs {SWEEPABLE[name]} dynamics, scenario has {kind}")
    data = copy.deepcopy(scn.raw)
    data["dynamics"][name] = int(round(value)) if name == "N" else float(value)
    return parse_scenario(data, None, scn.source)


# ---------------------------------------------------------------------------
# channel import / export
# ---------------------------------------------------------------------------

def channel_to_dict(channel: MeasureAndPrepareChannel, output_dims=None) -> dict:
    return {
        "kind": "explicit",
        "d_A": channel.d_in,
        "output_dims": list(output_dims) if output_dims else [channel.d_out],
        "pointer": [matrix_to_pairs(e) for e in channel.pointer],
        "prepared": [matrix_to_pairs(s) for s in channel.prepared],
    }


def channel_from_dict(data: dict) -> MeasureAndPrepareChannel:
    ctx = _Ctx({}, None)
    ch, _, _, _ = _dynamics(ctx, data)
    return ch


def export_channel(channel: MeasureAndPrepareChannel, path, output_dims=None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(channel_to_dict(channel, output_dims), fh, indent=1, sort_keys=True)
        fh.write("\n")


def import_channel(path) -> MeasureAndPrepareChannel:
    with open(path, encoding="utf-8") as fh:
        return channel_from_dict(json.load(fh))
