"""Command-line front end.

Every ``build`` writes a directory::

    OUT/index.json      manifest (circuit, TFI layout, groups, entries)
    OUT/circuit.txt     the compiled circuit
    OUT/obs_000.psur    one surrogate per observable term

The observable is a sparse Pauli string (``"X13 Y9 Z8"``), several of them
joined by ``;`` (a sum), or ``magnetization`` (mean of ``Z_i`` over all sites,
one surrogate per site). Evaluation commands read the manifest and combine the
entries with their weights, loading one surrogate at a time.

CSV schemas:
    sweep     ``angle,value``
    surface   header ``grid1\\grid2,<grid2 values>``; then ``<grid1 value>,<row>``
    snapshot  ``site,value``

Stats JSON (``build --stats-json``): ``{"entries": [{"observable", "terms",
"stats": {paths_explored, paths_contributing, truncated_freq, truncated_prob,
truncated_weight, annihilated, max_frontier, wall_time}}], "wall_time"}``.

Exit codes: 0 success, 2 usage error, 3 capacity error, 4 memory-cap abort.
"""

from __future__ import annotations

import argparse
import json
import logging
import re
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import surrogate as sm
from .circuit import (COUPLING_MODES, FIELD_MODES, ParamCircuit, TfiSpec, Topology,
                      build_tfi_circuit, coupling_ramp, heavy_hex_127, load_circuit,
                      load_topology, save_circuit, snapshot_parameters, tfi_param_groups)
from .oracle import CapacityError, MAX_STATEVECTOR_QUBITS, expectations
from .pauli import PauliString
from .propagate import (BackwardProgram, SearchAborted, TruncationConfig, clifford_endpoint,
                        enumerate_paths, find_trivial_paths, trivial_surrogate)

log = logging.getLogger("paulisurrogate")

EXIT_OK, EXIT_USAGE, EXIT_CAPACITY, EXIT_ABORT = 0, 2, 3, 4
INDEX_NAME = "index.json"


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

_ANGLE_RE = re.compile(r"^(?:(\d+\.?\d*(?:e[+-]?\d+)?|\.\d+)\*?)?(pi)?(?:/(\d+\.?\d*))?$")


def parse_angle(text) -> float:
    """Float or a multiple of pi: ``0.3``, ``pi``, ``-pi/2``, ``3*pi/4``, ``0.5pi``."""
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower().replace(" ", "")
    sign = -1.0 if s.startswith("-") else 1.0
    s = s.lstrip("+-")
    m = _ANGLE_RE.match(s)
    if m is None or (m.group(1) is None and m.group(2) is None):
        raise UsageError(f"cannot parse angle {text!r}")
    num, pi, den = m.groups()
    val = sign * (float(num) if num is not None else 1.0)
    if pi:
        val *= np.pi
    if den:
        val /= float(den)
    return val


def parse_grid(text) -> np.ndarray:
    """``start:stop:count`` (inclusive linspace) or a comma list of angles."""
    if isinstance(text, (list, tuple)):
        return np.array([parse_angle(t) for t in text])
    s = str(text)
    if ":" in s:
        parts = s.split(":")
        if len(parts) != 3:
            raise UsageError(f"grid must be start:stop:count, got {text!r}")
        count = int(parts[2])
        if count < 1:
            raise UsageError("grid count must be positive")
        return np.linspace(parse_angle(parts[0]), parse_angle(parts[1]), count)
    return np.array([parse_angle(t) for t in s.split(",") if t.strip()])


def parse_sites(text) -> List[int]:
    if text is None or text == "":
        return []
    if isinstance(text, (list, tuple)):
        return [int(t) for t in text]
    return [int(t) for t in str(text).split(",") if t.strip()]


def parse_assignments(items: Sequence[str]) -> List[Tuple[str, str]]:
    out = []
    for item in items or ():
        if "=" not in item:
            raise UsageError(f"expected NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out.append((k.strip(), v.strip()))
    return out


def resolve_topology(text: str) -> Topology:
    if text == "heavy_hex_127":
        return heavy_hex_127()
    m = re.fullmatch(r"(chain|ring):(\d+)", text)
    if m:
        n = int(m.group(2))
        return Topology.chain(n) if m.group(1) == "chain" else Topology.ring(n)
    path = Path(text)
    if not path.exists():
        raise UsageError(f"unknown topology {text!r} (use heavy_hex_127, chain:N, ring:N or a file)")
    return load_topology(path)


def expand_observable(text: str, n: int) -> List[Tuple[Fraction, PauliString]]:
    """Weighted list of Pauli strings for an observable argument."""
    if text.strip() == "magnetization":
        return [(Fraction(1, n), PauliString.single(n, q, "Z")) for q in range(n)]
    out = []
    for part in text.split(";"):
        if part.strip():
            p = PauliString.from_sparse(part, n)
            if p.xmask == 0 and p.zmask == 0:
                raise UsageError(f"observable term {part!r} is the identity")
            out.append((Fraction(1), p))
    if not out:
        raise UsageError("empty observable")
    return out


# ---------------------------------------------------------------------------
# run configuration
# ---------------------------------------------------------------------------

@dataclass
class RunConfig:
    command: str
    circuit: Optional[str] = None
    topology: str = "heavy_hex_127"
    layers: int = 5
    coupling_mode: str = "clifford_fixed"
    field_mode: str = "shared"
    extra_x_layer: bool = False
    observable: str = "magnetization"
    max_freq: Optional[int] = None
    trunc_prob: float = 0.0
    max_weight: Optional[int] = None
    bias: str = "none"
    workers: int = 1
    max_frontier: Optional[int] = None
    extra: dict = field(default_factory=dict)

    def truncation(self) -> TruncationConfig:
        return TruncationConfig(self.max_freq, self.trunc_prob, self.max_weight, self.bias)

    def tfi_spec(self) -> Optional[TfiSpec]:
        if self.circuit:
            return None
        return TfiSpec(resolve_topology(self.topology), self.layers, self.coupling_mode,
                       self.field_mode, self.extra_x_layer)

    def validate(self) -> None:
        try:
            self.truncation()
            if self.workers < 1:
                raise ValueError("workers must be positive")
            if self.max_frontier is not None and self.max_frontier < 1:
                raise ValueError("max_frontier must be positive")
            spec = self.tfi_spec()
        except (ValueError, OSError) as exc:
            raise UsageError(str(exc)) from exc
        n = spec.topology.n if spec else load_circuit(self.circuit).n
        try:
            expand_observable(self.observable, n)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc


_RUN_FIELDS = ("circuit", "topology", "layers", "coupling_mode", "field_mode", "extra_x_layer",
               "observable", "max_freq", "trunc_prob", "max_weight", "bias", "workers",
               "max_frontier")


def run_config(args: argparse.Namespace) -> RunConfig:
    ns = vars(args)
    cfg = RunConfig(args.command, **{k: ns[k] for k in _RUN_FIELDS if k in ns})
    cfg.extra = {k: v for k, v in ns.items() if k not in _RUN_FIELDS and k not in ("func", "config")}
    return cfg


def _circuit_for(cfg: RunConfig) -> Tuple[ParamCircuit, Optional[TfiSpec]]:
    spec = cfg.tfi_spec()
    if spec is None:
        return load_circuit(cfg.circuit), None
    return build_tfi_circuit(spec), spec


# ---------------------------------------------------------------------------
# surrogate bundles
# ---------------------------------------------------------------------------

class Bundle:
    """A built surrogate directory."""

    def __init__(self, root):
        self.root = Path(root)
        if self.root.is_file():
            self.root = self.root.parent
        index = self.root / INDEX_NAME
        if not index.exists():
            raise FileNotFoundError(f"no {INDEX_NAME} in {self.root}")
        self.index = json.loads(index.read_text())
        self.spec = TfiSpec.from_dict(self.index["tfi"]) if self.index.get("tfi") else None
        self.num_params = self.index["num_params"]
        self.groups = self.index["groups"]

    def circuit(self) -> ParamCircuit:
        return load_circuit(self.root / self.index["circuit"])

    @property
    def entries(self) -> List[dict]:
        return self.index["entries"]

    def load_entry(self, entry: dict) -> sm.Surrogate:
        path = self.root / entry["file"]
        if not path.exists():
            raise FileNotFoundError(f"missing surrogate file {path}")
        return sm.load(path)

    def evaluate_rows(self, rows: np.ndarray) -> np.ndarray:
        """Weighted sum over entries, streaming one surrogate at a time."""
        total = np.zeros(len(rows))
        for e in self.entries:
            total += e["weight"] * self.load_entry(e).evaluate_many(rows)
        return total

    def group(self, name: str) -> List[int]:
        if name in self.groups:
            return self.groups[name]
        m = re.fullmatch(r"p(\d+)", name)
        if m and int(m.group(1)) < self.num_params:
            return [int(m.group(1))]
        raise UsageError(f"unknown parameter group {name!r}; known: {sorted(self.groups)}")

    def sweep_groups(self, names: Optional[Sequence[str]]) -> List[List[int]]:
        if not names:
            names = ["field"] if "field" in self.groups else ["all"]
        return [self.group(g) for g in names]

    def base_vector(self, fixes: Sequence[Tuple[str, str]]) -> np.ndarray:
        base = np.zeros(self.num_params)
        for name, value in fixes:
            base[self.group(name)] = parse_angle(value)
        return base


def _groups_for(circuit: ParamCircuit, spec: Optional[TfiSpec]) -> dict:
    if spec is not None:
        return tfi_param_groups(spec)
    return {"all": list(range(circuit.num_params))}


def _write_bundle(out: Path, circuit: ParamCircuit, spec: Optional[TfiSpec], cfg: RunConfig,
                  entries: List[dict], trivial_only: bool) -> None:
    index = {
        "format": "paulisurrogate-index",
        "version": 1,
        "circuit": "circuit.txt",
        "circuit_digest": circuit.digest(),
        "tfi": spec.to_dict() if spec else None,
        "num_params": circuit.num_params,
        "param_labels": list(circuit.param_labels) if circuit.param_labels else None,
        "groups": _groups_for(circuit, spec),
        "observable": cfg.observable,
        "truncation": cfg.truncation().to_dict(),
        "trivial_only": trivial_only,
        "entries": entries,
    }
    (out / INDEX_NAME).write_text(json.dumps(index, indent=1))


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_build(cfg: RunConfig) -> int:
    circuit, spec = _circuit_for(cfg)
    terms = expand_observable(cfg.observable, circuit.n)
    out = Path(cfg.extra["out"])
    out.mkdir(parents=True, exist_ok=True)
    save_circuit(circuit, out / "circuit.txt")
    program = BackwardProgram(circuit)
    trivial_only = cfg.extra.get("trivial_only", False)
    entries, report = [], []
    t0 = time.perf_counter()
    for i, (w, obs) in enumerate(terms):
        name = f"obs_{i:03d}.psur"
        if trivial_only:
            s = trivial_surrogate(program, obs)
        else:
            try:
                s = enumerate_paths(program, obs, cfg.truncation(), workers=cfg.workers,
                                    max_frontier=cfg.max_frontier).surrogate
            except SearchAborted as exc:
                report.append({"observable": obs.sparse_label(), "aborted": True,
                               "stats": exc.stats.to_dict()})
                _emit_stats(cfg, report, time.perf_counter() - t0)
                print(f"aborted on {obs.sparse_label()}: {exc}", file=sys.stderr)
                print(json.dumps(exc.stats.to_dict()), file=sys.stderr)
                raise
        sm.save(s, out / name)
        entries.append({"observable": obs.sparse_label(), "weight": float(w), "file": name,
                        "terms": len(s)})
        report.append({"observable": obs.sparse_label(), "terms": len(s), "stats": s.stats})
        log.info("built %s: %d monomials", obs.sparse_label(), len(s))
        del s
    _write_bundle(out, circuit, spec, cfg, entries, trivial_only)
    _emit_stats(cfg, report, time.perf_counter() - t0)
    print(f"wrote {len(entries)} surrogate(s) to {out}")
    return EXIT_OK


def _emit_stats(cfg: RunConfig, report: list, wall: float) -> None:
    path = cfg.extra.get("stats_json")
    if path:
        Path(path).write_text(json.dumps({"entries": report, "wall_time": wall}, indent=1))


def _out_or_stdout(path):
    return path if path else sys.stdout


def cmd_sweep(cfg: RunConfig) -> int:
    b = Bundle(cfg.extra["surrogate"])
    grid = parse_grid(cfg.extra["grid"])
    binding = sm.SharedBinding(b.num_params, b.sweep_groups(cfg.extra["group"]),
                               b.base_vector(parse_assignments(cfg.extra.get("fix"))))
    rows = np.array([binding(*([t] * len(binding.groups))) for t in grid])
    vals = b.evaluate_rows(rows)
    sm.write_sweep_csv(zip(grid, vals), _out_or_stdout(cfg.extra.get("out")))
    return EXIT_OK


def cmd_surface(cfg: RunConfig) -> int:
    b = Bundle(cfg.extra["surrogate"])
    grid1, grid2 = parse_grid(cfg.extra["grid1"]), parse_grid(cfg.extra["grid2"])
    base = b.base_vector(parse_assignments(cfg.extra.get("fix")))
    if cfg.extra.get("noise_seed") is not None:
        # axis 1: mean angle, axis 2: noise strength
        binding = sm.NoisyBinding(b.num_params, b.group(cfg.extra["group1"]),
                                  cfg.extra["noise_seed"], base)
    else:
        if not cfg.extra.get("group2"):
            raise UsageError("surface needs --group2 or --noise-seed")
        binding = sm.SharedBinding(b.num_params, [b.group(cfg.extra["group1"]),
                                                  b.group(cfg.extra["group2"])], base)
    rows = np.array([binding(a, c) for a in grid1 for c in grid2])
    vals = b.evaluate_rows(rows).reshape(len(grid1), len(grid2))
    sm.write_surface_csv(vals, grid1, grid2, _out_or_stdout(cfg.extra.get("out")))
    return EXIT_OK


def snapshot_vector(spec: TfiSpec, h: float, j, dt: float, ramp: Optional[str],
                    flipped: Sequence[int]) -> np.ndarray:
    if ramp:
        start, stop = (parse_angle(t) for t in ramp.split(":"))
        if spec.coupling_mode != "per_edge":
            raise UsageError("a coupling ramp needs coupling_mode per_edge")
        j = coupling_ramp(spec.topology, start, stop)
    return snapshot_parameters(spec, h, j, dt, flipped)


def cmd_snapshot(cfg: RunConfig) -> int:
    b = Bundle(cfg.extra["surrogate"])
    if b.spec is None:
        raise UsageError("snapshot needs a surrogate built from a TFI circuit")
    params = snapshot_vector(b.spec, cfg.extra["h"], cfg.extra["J"], cfg.extra["dt"],
                             cfg.extra.get("ramp"), parse_sites(cfg.extra.get("flipped")))
    rows = []
    for e in b.entries:
        obs = PauliString.from_sparse(e["observable"], b.spec.topology.n)
        sites = obs.support()
        label = str(sites[0]) if len(sites) == 1 else e["observable"]
        rows.append((label, b.load_entry(e).evaluate(params)))
    lines = ["site,value"] + [f"{label},{float(v)!r}" for label, v in rows]
    text = "\n".join(lines) + "\n"
    if cfg.extra.get("out"):
        Path(cfg.extra["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_trivial(cfg: RunConfig) -> int:
    circuit, _ = _circuit_for(cfg)
    program = BackwardProgram(circuit)
    labels = circuit.param_labels
    for _, obs in expand_observable(cfg.observable, circuit.n):
        t0 = time.perf_counter()
        found = find_trivial_paths(program, obs)
        dt = time.perf_counter() - t0
        body = " + ".join(f"({c:+d}) {sm.format_monomial(m, labels)}" for m, c in found) or "0"
        print(f"{obs.sparse_label()}: {body}   [{dt * 1e3:.2f} ms]")
    return EXIT_OK


def _endpoint_channels(num_params: int, groups: dict, assignments) -> List[int]:
    channels = [0] * num_params
    for name, value in assignments:
        if name not in groups:
            raise UsageError(f"unknown parameter group {name!r}")
        angle = parse_angle(value)
        if np.isclose(angle, 0.0):
            ch = 0
        elif np.isclose(angle, np.pi / 2):
            ch = 1
        else:
            raise UsageError(f"endpoint angles must be 0 or pi/2, got {value!r}")
        for pid in groups[name]:
            channels[pid] = ch
    return channels


def cmd_endpoints(cfg: RunConfig) -> int:
    circuit, spec = _circuit_for(cfg)
    program = BackwardProgram(circuit)
    channels = _endpoint_channels(circuit.num_params, _groups_for(circuit, spec),
                                  parse_assignments(cfg.extra.get("set")))
    total = Fraction(0)
    worst = 0.0
    for w, obs in expand_observable(cfg.observable, circuit.n):
        t0 = time.perf_counter()
        v = clifford_endpoint(program, obs, channels)
        worst = max(worst, time.perf_counter() - t0)
        total += w * v
        if cfg.extra.get("verbose"):
            print(f"{obs.sparse_label()}: {v:+d}")
    print(json.dumps({"observable": cfg.observable, "value": float(total),
                      "max_pass_ms": worst * 1e3}))
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    b = Bundle(cfg.extra["surrogate"])
    circuit = b.circuit()
    report = {"circuit_digest": circuit.digest()}
    mode = cfg.extra.get("mode", "auto")
    if mode == "exact" and circuit.n > MAX_STATEVECTOR_QUBITS:
        raise CapacityError(f"{circuit.n} qubits exceeds the statevector limit of "
                            f"{MAX_STATEVECTOR_QUBITS}; use --mode endpoints")
    if mode != "endpoints" and circuit.n <= MAX_STATEVECTOR_QUBITS:
        grid = parse_grid(cfg.extra["grid"])
        binding = sm.SharedBinding(b.num_params, b.sweep_groups(cfg.extra["group"]),
                                   b.base_vector(parse_assignments(cfg.extra.get("fix"))))
        rows = np.array([binding(*([t] * len(binding.groups))) for t in grid])
        approx = b.evaluate_rows(rows)
        exact = np.zeros(len(rows))
        for e in b.entries:
            exact += e["weight"] * expectations(circuit, rows,
                                                PauliString.from_sparse(e["observable"], circuit.n))
        report["grid_points"] = len(rows)
        report["max_abs_error"] = float(np.max(np.abs(approx - exact)))
    elif mode == "auto":
        log.info("%d qubits exceeds the statevector limit; checking endpoints only", circuit.n)
    # Clifford corners of the chosen groups
    program = BackwardProgram(circuit)
    max_err = 0.0
    corners = 0
    names = cfg.extra["group"] or (["field"] if "field" in b.groups else ["all"])
    for bits in range(2 ** len(names)):
        channels = [0] * b.num_params
        for i, name in enumerate(names):
            for pid in b.group(name):
                channels[pid] = bits >> i & 1
        params = np.where(np.array(channels) == 1, np.pi / 2, 0.0)
        exact = approx = 0.0
        for e in b.entries:
            obs = PauliString.from_sparse(e["observable"], circuit.n)
            exact += e["weight"] * clifford_endpoint(program, obs, channels)
            approx += e["weight"] * b.load_entry(e).evaluate(params)
        max_err = max(max_err, abs(exact - approx))
        corners += 1
        report.setdefault("endpoints", []).append(
            {"angles": [float(np.pi / 2 * (bits >> i & 1)) for i in range(len(names))],
             "exact": exact, "surrogate": approx})
    report["endpoint_corners"] = corners
    report["endpoint_max_abs_error"] = max_err
    print(json.dumps(report, indent=1))
    return EXIT_OK


def cmd_stats(cfg: RunConfig) -> int:
    b = Bundle(cfg.extra["surrogate"])
    rows = []
    for e in b.entries:
        s = b.load_entry(e)
        rows.append({"observable": e["observable"], "weight": e["weight"], "terms": len(s),
                     "l1_norm": s.l1_norm(), "max_degree": s.max_degree(),
                     "circuit_digest": s.circuit_digest, "config": s.config, "stats": s.stats})
    print(json.dumps({"index": {k: v for k, v in b.index.items() if k not in ("entries", "groups")},
                      "entries": rows}, indent=1))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _optional_int(text):
    return None if text in (None, "", "none") else int(text)


def _add_circuit_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("circuit")
    g.add_argument("--circuit", help="circuit text file (overrides the TFI options)")
    g.add_argument("--topology", default="heavy_hex_127",
                   help="heavy_hex_127, chain:N, ring:N or an edge-list file")
    g.add_argument("--layers", type=int, default=5)
    g.add_argument("--coupling-mode", choices=COUPLING_MODES, default="clifford_fixed")
    g.add_argument("--field-mode", choices=FIELD_MODES, default="shared")
    g.add_argument("--extra-x-layer", action="store_true")
    g.add_argument("--observable", default="magnetization",
                   help='sparse Pauli string such as "X13 Y9 Z8", terms joined by ";", '
                        'or "magnetization"')


def _add_search_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("truncation")
    g.add_argument("--max-freq", type=_optional_int, default=None)
    g.add_argument("--trunc-prob", type=float, default=0.0)
    g.add_argument("--max-weight", type=_optional_int, default=None)
    g.add_argument("--bias", choices=("none", "prefer_sin", "prefer_cos"), default="none")
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--max-frontier", type=_optional_int, default=None,
                   help="DFS stack budget per worker; exceeding it aborts with exit code 4")


def _add_binding_args(p: argparse.ArgumentParser, grid_default="0:pi/2:50") -> None:
    p.add_argument("--surrogate", required=True, help="directory written by build")
    p.add_argument("--group", action="append", default=None,
                   help="parameter group set to the sweep angle (repeatable; default field)")
    p.add_argument("--fix", action="append", default=[], metavar="GROUP=ANGLE",
                   help="hold a group at a fixed angle (repeatable)")
    p.add_argument("--grid", default=grid_default, help="start:stop:count or comma list")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paulisurrogate", description=__doc__.split("\n")[0])
    ap.add_argument("--config", help="JSON file with option defaults; flags take precedence")
    ap.add_argument("--log-level", default="WARNING")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build surrogate(s) and write a bundle directory")
    _add_circuit_args(p)
    _add_search_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--trivial-only", action="store_true", help="keep only the trivial paths")
    p.add_argument("--stats-json")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("sweep", help="evaluate along one shared angle, write CSV")
    _add_binding_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("surface", help="evaluate on a 2D grid, write CSV")
    p.add_argument("--surrogate", required=True)
    p.add_argument("--group1", default="field")
    p.add_argument("--group2")
    p.add_argument("--noise-seed", type=int,
                   help="second axis is the strength of a seeded Gaussian angle field on group1")
    p.add_argument("--fix", action="append", default=[], metavar="GROUP=ANGLE")
    p.add_argument("--grid1", default="0:pi/2:50")
    p.add_argument("--grid2", default="0:pi/2:50")
    p.add_argument("--out")
    p.set_defaults(func=cmd_surface)

    p = sub.add_parser("snapshot", help="per-site values for one time step of TFI evolution")
    p.add_argument("--surrogate", required=True)
    p.add_argument("--h", type=float, default=1.0)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--dt", type=float, required=True)
    p.add_argument("--ramp", metavar="START:STOP", help="linear per-edge coupling ramp")
    p.add_argument("--flipped", default="", help="comma list of sites starting in |1>")
    p.add_argument("--out")
    p.set_defaults(func=cmd_snapshot)

    p = sub.add_parser("trivial", help="print the trivial paths of each observable term")
    _add_circuit_args(p)
    p.set_defaults(func=cmd_trivial)

    p = sub.add_parser("endpoints", help="exact value at a Clifford corner")
    _add_circuit_args(p)
    p.add_argument("--set", action="append", default=[], metavar="GROUP=0|pi/2",
                   help="corner of a parameter group (others at 0)")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=cmd_endpoints)

    p = sub.add_parser("verify", help="compare a bundle with the exact oracles")
    _add_binding_args(p, grid_default="0:pi:25")
    p.add_argument("--mode", choices=("auto", "exact", "endpoints"), default="auto",
                   help="auto uses the statevector when the register is small enough")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("stats", help="summarize a bundle")
    p.add_argument("--surrogate", required=True)
    p.set_defaults(func=cmd_stats)
    return ap


def _apply_config_file(ap: argparse.ArgumentParser, argv: Sequence[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        data = json.loads(Path(known.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    data = {k.replace("-", "_"): v for k, v in data.items()}
    subparsers = next(a for a in ap._actions if isinstance(a, argparse._SubParsersAction))
    allowed = set()
    for sp in subparsers.choices.values():
        dests = {a.dest for a in sp._actions}
        sp.set_defaults(**{k: v for k, v in data.items() if k in dests})
        allowed |= dests
    unknown = set(data) - allowed
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        _apply_config_file(ap, argv)
        args = ap.parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return int(exc.code or 0) and EXIT_USAGE
    logging.basicConfig(level=args.log_level.upper(), stream=sys.stderr,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    cfg = run_config(args)
    try:
        if args.command in ("build", "trivial", "endpoints"):
            cfg.validate()
        return args.func(cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except SearchAborted:
        return EXIT_ABORT
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
