"""Clifford + Z-rotation circuit IR and the Trotterized transverse-field Ising builder.

Circuits are an ordered list of Clifford gates and ``Rz`` rotations. Each
rotation reads one entry of a parameter vector, and any number of rotations
may share a parameter.

Text format (one op per line, ``#`` starts a comment)::

    {"n": 3, "num_params": 2}
    H 0
    RZ 0 p1
    CX 0 1

The first non-comment line is a JSON header. Clifford lines are
``KIND q [q2]`` and rotation lines are ``RZ q p<param_id>``.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .pauli import GATE_ARITY, CliffordGate, PauliString


@dataclass(frozen=True)
class Rz:
    qubit: int
    param_id: int


Op = Union[CliffordGate, Rz]


@dataclass(frozen=True)
class ParamCircuit:
    n: int
    ops: Tuple[Op, ...]
    num_params: int
    param_labels: Optional[Tuple[str, ...]] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "ops", tuple(self.ops))
        used = set()
        for op in self.ops:
            if isinstance(op, Rz):
                if not 0 <= op.qubit < self.n:
                    raise ValueError(f"Rz on qubit {op.qubit} outside {self.n}-qubit register")
                if not 0 <= op.param_id < self.num_params:
                    raise ValueError(f"param id {op.param_id} >= num_params={self.num_params}")
                used.add(op.param_id)
            elif isinstance(op, CliffordGate):
                if any(q >= self.n for q in op.qubits):
                    raise ValueError(f"{op.kind}{op.qubits} outside {self.n}-qubit register")
            else:
                raise TypeError(f"unsupported op {op!r}")
        if len(used) != self.num_params:
            missing = sorted(set(range(self.num_params)) - used)
            raise ValueError(f"parameters never referenced: {missing[:10]}")
        if self.param_labels is not None and len(self.param_labels) != self.num_params:
            raise ValueError("param_labels length must equal num_params")

    @property
    def m(self) -> int:
        return sum(1 for op in self.ops if isinstance(op, Rz))

    def rz_ops(self) -> List[Rz]:
        return [op for op in self.ops if isinstance(op, Rz)]

    def rz_param_ids(self) -> np.ndarray:
        return np.array([op.param_id for op in self.ops if isinstance(op, Rz)], dtype=np.int64)

    def count(self, kind: str) -> int:
        return sum(1 for op in self.ops if isinstance(op, CliffordGate) and op.kind == kind)

    def to_text(self, labels: bool = True) -> str:
        header = {"n": self.n, "num_params": self.num_params}
        if labels and self.param_labels:
            header["param_labels"] = list(self.param_labels)
        lines = [json.dumps(header)]
        for op in self.ops:
            if isinstance(op, Rz):
                lines.append(f"RZ {op.qubit} p{op.param_id}")
            else:
                lines.append(" ".join([op.kind, *map(str, op.qubits)]))
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        """Short hash of the ops; labels do not take part."""
        return hashlib.sha256(self.to_text(labels=False).encode()).hexdigest()[:16]


def parse_circuit(text: str) -> ParamCircuit:
    header = None
    ops: List[Op] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = json.loads(line)
            continue
        tok = line.split()
        try:
            if tok[0].upper() == "RZ":
                if len(tok) != 3 or not tok[2].startswith("p"):
                    raise ValueError("expected 'RZ <qubit> p<id>'")
                ops.append(Rz(int(tok[1]), int(tok[2][1:])))
            else:
                kind = {k.upper(): k for k in GATE_ARITY}.get(tok[0].upper())
                if kind is None:
                    raise ValueError(f"unknown gate {tok[0]!r}")
                ops.append(CliffordGate(kind, tuple(int(t) for t in tok[1:])))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    if header is None:
        raise ValueError("empty circuit file")
    labels = header.get("param_labels")
    return ParamCircuit(int(header["n"]), tuple(ops), int(header["num_params"]),
                        tuple(labels) if labels else None)


def load_circuit(path) -> ParamCircuit:
    return parse_circuit(Path(path).read_text())


def save_circuit(circuit: ParamCircuit, path) -> None:
    Path(path).write_text(circuit.to_text())


def bind(params: Sequence[float], circuit: ParamCircuit) -> np.ndarray:
    """Angle of every Rz in circuit order."""
    params = np.asarray(params, dtype=float)
    if params.shape != (circuit.num_params,):
        raise ValueError(f"expected {circuit.num_params} parameters, got shape {params.shape}")
    return params[circuit.rz_param_ids()]


def lightcone_params(circuit: ParamCircuit, observable: PauliString) -> Set[int]:
    """Indices (into the Rz list) of rotations inside the backward lightcone of ``observable``.

    Support grows whenever a two-qubit gate touches it. Rotations outside the
    returned set see only I or Z on every path and therefore never split.
    """
    if observable.n != circuit.n:
        raise ValueError("observable and circuit sizes differ")
    support = observable.xmask | observable.zmask
    rz_index = circuit.m
    inside = set()
    for op in reversed(circuit.ops):
        if isinstance(op, Rz):
            rz_index -= 1
            if support >> op.qubit & 1:
                inside.add(rz_index)
        elif len(op.qubits) == 2:
            a, b = op.qubits
            if (support >> a | support >> b) & 1:
                support |= (1 << a) | (1 << b)
    return inside


# ---------------------------------------------------------------------------
# Topologies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Topology:
    n: int
    edges: Tuple[Tuple[int, int], ...]

    def __post_init__(self):
        norm = []
        seen = set()
        for e in self.edges:
            i, j = (int(v) for v in e)
            if i == j:
                raise ValueError(f"self-loop on node {i}")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.n} nodes")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValueError(f"duplicate edge {key}")
            seen.add(key)
            norm.append(key)
        object.__setattr__(self, "edges", tuple(sorted(norm)))

    @classmethod
    def chain(cls, n: int) -> "Topology":
        return cls(n, tuple((i, i + 1) for i in range(n - 1)))

    @classmethod
    def ring(cls, n: int) -> "Topology":
        return cls(n, tuple((i, (i + 1) % n) for i in range(n)))


def parse_topology(text: str) -> Topology:
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise ValueError("empty topology file")
    try:
        n = int(lines[0])
        edges = []
        for ln in lines[1:]:
            a, b = ln.split()
            edges.append((int(a), int(b)))
    except ValueError as exc:
        raise ValueError(f"cannot parse topology: {exc}") from None
    return Topology(n, tuple(edges))


def load_topology(path) -> Topology:
    return parse_topology(Path(path).read_text())


def heavy_hex_127() -> Topology:
    """The bundled 127-node heavy-hex coupling graph (144 edges)."""
    text = resources.files("paulisurrogate").joinpath("data/heavy_hex_127.txt").read_text()
    return parse_topology(text)


# ---------------------------------------------------------------------------
# Transverse-field Ising Trotter circuits
# ---------------------------------------------------------------------------

COUPLING_MODES = ("clifford_fixed", "shared", "per_edge")
FIELD_MODES = ("shared", "per_site")


@dataclass(frozen=True)
class TfiSpec:
    topology: Topology
    layers: int
    coupling_mode: str = "clifford_fixed"
    field_mode: str = "shared"
    extra_x_layer: bool = False

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("need at least one Trotter layer")
        if self.coupling_mode not in COUPLING_MODES:
            raise ValueError(f"coupling_mode must be one of {COUPLING_MODES}")
        if self.field_mode not in FIELD_MODES:
            raise ValueError(f"field_mode must be one of {FIELD_MODES}")

    @property
    def field_layers(self) -> int:
        return self.layers + int(self.extra_x_layer)

    def to_dict(self) -> dict:
        return {
            "n": self.topology.n,
            "edges": [list(e) for e in self.topology.edges],
            "layers": self.layers,
            "coupling_mode": self.coupling_mode,
            "field_mode": self.field_mode,
            "extra_x_layer": self.extra_x_layer,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TfiSpec":
        topo = Topology(int(d["n"]), tuple(tuple(e) for e in d["edges"]))
        return cls(topo, int(d["layers"]), d["coupling_mode"], d["field_mode"],
                   bool(d["extra_x_layer"]))


@dataclass(frozen=True)
class TfiLayout:
    """Parameter ids of a TFI circuit.

    ``field[l, i]`` is the id driving the X rotation of site ``i`` in field
    layer ``l``; ``coupling[l, e]`` the id of edge ``e`` in Trotter step ``l``
    (``None`` when couplings are fixed Cliffords).
    """

    field: np.ndarray
    coupling: Optional[np.ndarray]
    labels: Tuple[str, ...]

    @property
    def num_params(self) -> int:
        return len(self.labels)


def tfi_layout(spec: TfiSpec) -> TfiLayout:
    n, edges = spec.topology.n, spec.topology.edges
    labels: List[str] = []

    def new(label):
        labels.append(label)
        return len(labels) - 1

    field_ids = np.empty((spec.field_layers, n), dtype=np.int64)
    coupling_ids = None if spec.coupling_mode == "clifford_fixed" else np.empty(
        (spec.layers, len(edges)), dtype=np.int64)
    shared_h = new("h") if spec.field_mode == "shared" and n else None
    shared_j = new("J") if spec.coupling_mode == "shared" and edges else None
    # ids are allocated in circuit order
    for layer in range(spec.field_layers):
        for i in range(n):
            field_ids[layer, i] = shared_h if shared_h is not None else new(f"h[{layer},{i}]")
        if layer < spec.layers and coupling_ids is not None:
            for e, (i, j) in enumerate(edges):
                coupling_ids[layer, e] = (shared_j if shared_j is not None
                                          else new(f"J[{layer},{i}-{j}]"))
    return TfiLayout(field_ids, coupling_ids, tuple(labels))


def build_tfi_circuit(spec: TfiSpec) -> ParamCircuit:
    """Compile ``L`` Trotter steps of the TFI model into Clifford + Rz form.

    Each step applies ``RX(theta_h)`` on every site followed by ``RZZ(theta_J)``
    on every edge (ascending edge order). ``RX(t) = H Rz(t) H`` and
    ``RZZ(t) = CX Rz_target(t) CX``; with fixed couplings the rotation is
    ``Rz(-pi/2) = Sdg`` up to global phase, so the block is pure Clifford.
    """
    layout = tfi_layout(spec)
    ops: List[Op] = []
    edges = spec.topology.edges
    for layer in range(spec.field_layers):
        for i in range(spec.topology.n):
            ops += [CliffordGate("H", (i,)), Rz(i, int(layout.field[layer, i])), CliffordGate("H", (i,))]
        if layer >= spec.layers:
            continue
        for e, (i, j) in enumerate(edges):
            ops.append(CliffordGate("CX", (i, j)))
            if layout.coupling is None:
                ops.append(CliffordGate("Sdg", (j,)))
            else:
                ops.append(Rz(j, int(layout.coupling[layer, e])))
            ops.append(CliffordGate("CX", (i, j)))
    return ParamCircuit(spec.topology.n, tuple(ops), layout.num_params, layout.labels)


def _per_layer(values, layers: int, width: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 0:
        return np.full((layers, width), float(arr))
    if arr.shape == (width,):
        return np.tile(arr, (layers, 1))
    if arr.shape == (layers, width):
        return arr
    raise ValueError(f"{what} must be scalar, ({width},) or ({layers}, {width}); got {arr.shape}")


def tfi_parameters(spec: TfiSpec, theta_h, theta_j=-np.pi / 2) -> np.ndarray:
    """Parameter vector for given field and coupling angles.

    ``theta_h`` may be a scalar, one value per site, or one value per
    (field layer, site); ``theta_j`` likewise per edge. When a mode shares a
    parameter the corresponding angles must agree.
    """
    layout = tfi_layout(spec)
    params = np.full(layout.num_params, np.nan)
    h = _per_layer(theta_h, spec.field_layers, spec.topology.n, "theta_h")
    _scatter(params, layout.field, h)
    if layout.coupling is not None:
        j = _per_layer(theta_j, spec.layers, len(spec.topology.edges), "theta_j")
        _scatter(params, layout.coupling, j)
    return params


def _scatter(params: np.ndarray, ids: np.ndarray, values: np.ndarray) -> None:
    flat_ids, flat_vals = ids.ravel(), values.ravel()
    params[flat_ids] = flat_vals
    if not np.array_equal(params[flat_ids], flat_vals):
        raise ValueError("conflicting angles for a shared parameter")


def tfi_param_groups(spec: TfiSpec) -> dict:
    """Named parameter subsets used by sweeps, surfaces and bindings."""
    layout = tfi_layout(spec)
    sites = np.arange(spec.topology.n)
    groups = {
        "all": list(range(layout.num_params)),
        "field": sorted(set(layout.field.ravel().tolist())),
        "field_even": sorted(set(layout.field[:, sites % 2 == 0].ravel().tolist())),
        "field_odd": sorted(set(layout.field[:, sites % 2 == 1].ravel().tolist())),
    }
    if layout.coupling is not None:
        groups["coupling"] = sorted(set(layout.coupling.ravel().tolist()))
    return groups


def snapshot_parameters(spec: TfiSpec, h, J, dt: float,
                        flipped: Iterable[int] = ()) -> np.ndarray:
    """Angles for evolving under field ``h`` and couplings ``J`` with step ``dt``.

    ``theta_h = h * dt`` and ``theta_J = -J * dt``. Sites in ``flipped`` start
    in ``|1>``: their first X rotation gets an extra ``pi``.
    """
    n = spec.topology.n
    h_site = np.broadcast_to(np.asarray(h, dtype=float), (n,))
    theta_h = np.tile(h_site * dt, (spec.field_layers, 1))
    for q in flipped:
        theta_h[0, q] += np.pi
    if spec.coupling_mode == "clifford_fixed":
        return tfi_parameters(spec, theta_h)
    j_edge = np.broadcast_to(np.asarray(J, dtype=float), (len(spec.topology.edges),))
    return tfi_parameters(spec, theta_h, -j_edge * dt)


def coupling_ramp(topology: Topology, start: float, stop: float) -> np.ndarray:
    """Per-edge couplings varying linearly from ``start`` (first edge) to ``stop`` (last edge)."""
    count = len(topology.edges)
    if count == 1:
        return np.array([start], dtype=float)
    return np.linspace(start, stop, count)
