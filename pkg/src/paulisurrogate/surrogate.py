"""Trigonometric surrogate landscapes.

A surrogate is a finite sum ``sum_k c_k prod_j sin(t_j)^a_kj cos(t_j)^b_kj``
with integer coefficients. Monomials are tuples of ``(param_id, sin_exp,
cos_exp)`` triples sorted by parameter id, with all-zero pairs omitted; the
empty tuple is the constant monomial.

Binary layout (all integers little endian)::

    magic   b"PSUR"
    version u8 (= 1)
    hlen    u32, followed by ``hlen`` bytes of UTF-8 JSON header
    5 sections, each ``u64 byte_length`` + LEB128 varints:
        entries per monomial, zigzag coefficients, param ids, sin exps, cos exps

The header holds ``num_params``, counts, and provenance (config, digests,
search stats).
"""

from __future__ import annotations

import csv
import json
import struct
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

Monomial = Tuple[Tuple[int, int, int], ...]

MAGIC = b"PSUR"
VERSION = 1


def format_monomial(mono: Monomial, labels: Optional[Sequence[str]] = None) -> str:
    if not mono:
        return "1"
    parts = []
    for pid, s, c in mono:
        name = labels[pid] if labels else f"t{pid}"
        if s:
            parts.append(f"sin({name})" + (f"^{s}" if s > 1 else ""))
        if c:
            parts.append(f"cos({name})" + (f"^{c}" if c > 1 else ""))
    return " ".join(parts)


@dataclass(frozen=True)
class Surrogate:
    num_params: int
    terms: Mapping[Monomial, int]
    circuit_digest: Optional[str] = None
    observable: Optional[str] = field(default=None, compare=False)
    config: Optional[dict] = field(default=None, compare=False)
    stats: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        for mono, c in self.terms.items():
            if c == 0:
                raise ValueError("zero coefficients are not stored")
            for pid, s, co in mono:
                if not 0 <= pid < self.num_params:
                    raise ValueError(f"monomial references parameter {pid}")
        # canonical order for serialization and deterministic iteration
        object.__setattr__(self, "terms", dict(sorted(self.terms.items())))

    @classmethod
    def _trusted(cls, num_params, terms, circuit_digest=None, observable=None, config=None,
                 stats=None) -> "Surrogate":
        """Skip validation and sorting for terms already known to be canonical."""
        obj = cls.__new__(cls)
        for name, value in (("num_params", num_params), ("terms", terms),
                            ("circuit_digest", circuit_digest), ("observable", observable),
                            ("config", config), ("stats", stats)):
            object.__setattr__(obj, name, value)
        return obj

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def provenance(self) -> dict:
        return {"circuit_digest": self.circuit_digest, "observable": self.observable,
                "config": self.config, "stats": self.stats}

    def l1_norm(self) -> int:
        return sum(abs(c) for c in self.terms.values())

    def max_degree(self) -> int:
        return max((sum(s + c for _, s, c in m) for m in self.terms), default=0)

    @cached_property
    def _compiled(self):
        return _CompiledSurrogate.from_terms(self.num_params, self.terms)

    def evaluate(self, params: Sequence[float]) -> float:
        """Value at one parameter vector."""
        return self._compiled.evaluate(params)

    def evaluate_many(self, param_rows: np.ndarray) -> np.ndarray:
        rows = np.atleast_2d(np.asarray(param_rows, dtype=float))
        return np.array([self._compiled.evaluate(r) for r in rows])

    def __neg__(self) -> "Surrogate":
        return Surrogate(self.num_params, {k: -c for k, c in self.terms.items()},
                         self.circuit_digest, self.observable, self.config, self.stats)


class _CompiledSurrogate:
    """Flat arrays for vectorized evaluation."""

    def __init__(self, num_params, counts, coeffs, pids, sin_e, cos_e):
        self.num_params = num_params
        self.coeffs = coeffs.astype(float)
        self.pids = pids
        self.sin_e = sin_e
        self.cos_e = cos_e
        starts = np.zeros(len(counts), dtype=np.int64)
        np.cumsum(counts[:-1], out=starts[1:])
        self.nonempty = counts > 0
        self.starts = starts[self.nonempty]
        self.max_s = int(sin_e.max(initial=0))
        self.max_c = int(cos_e.max(initial=0))

    @classmethod
    def from_terms(cls, num_params, terms):
        counts = np.fromiter((len(m) for m in terms), dtype=np.int64, count=len(terms))
        coeffs = np.fromiter(terms.values(), dtype=np.int64, count=len(terms))
        flat = np.array([e for m in terms for e in m], dtype=np.int64).reshape(-1, 3)
        return cls(num_params, counts, coeffs, flat[:, 0], flat[:, 1], flat[:, 2])

    @staticmethod
    def _powers(base: np.ndarray, max_exp: int) -> np.ndarray:
        out = np.empty((base.size, max_exp + 1))
        out[:, 0] = 1.0
        for e in range(1, max_exp + 1):
            out[:, e] = out[:, e - 1] * base
        return out

    def evaluate(self, params) -> float:
        params = np.asarray(params, dtype=float)
        if params.shape != (self.num_params,):
            raise ValueError(f"expected {self.num_params} parameters, got shape {params.shape}")
        if self.coeffs.size == 0:
            return 0.0
        sp = self._powers(np.sin(params), self.max_s)
        cp = self._powers(np.cos(params), self.max_c)
        factors = sp[self.pids, self.sin_e] * cp[self.pids, self.cos_e]
        values = np.ones(self.coeffs.size)
        if factors.size:
            values[self.nonempty] = np.multiply.reduceat(factors, self.starts)
        return float(np.dot(self.coeffs, values))


def merge(a: Surrogate, b: Surrogate) -> Surrogate:
    """Coefficient-wise sum of two surrogates over the same circuit."""
    if a.num_params != b.num_params:
        raise ValueError("surrogates have different parameter counts")
    if a.circuit_digest != b.circuit_digest:
        raise ValueError("surrogates were built from different circuits")
    terms = dict(a.terms)
    for k, c in b.terms.items():
        terms[k] = terms.get(k, 0) + c
    terms = {k: c for k, c in terms.items() if c}
    obs = a.observable if a.observable == b.observable else None
    cfg = a.config if a.config == b.config else None
    return Surrogate(a.num_params, terms, a.circuit_digest, obs, cfg)


# ---------------------------------------------------------------------------
# bindings, sweeps and surfaces
# ---------------------------------------------------------------------------

class SharedBinding:
    """Sets every parameter of group ``g`` to ``values[g]``; others keep ``base``."""

    def __init__(self, num_params: int, groups: Sequence[Sequence[int]], base=None):
        self.num_params = num_params
        self.groups = [np.asarray(g, dtype=np.int64) for g in groups]
        self.base = np.zeros(num_params) if base is None else np.array(base, dtype=float)
        if self.base.shape != (num_params,):
            raise ValueError("base vector has the wrong length")

    def __call__(self, *values: float) -> np.ndarray:
        if len(values) != len(self.groups):
            raise ValueError(f"binding takes {len(self.groups)} value(s)")
        params = self.base.copy()
        for g, v in zip(self.groups, values):
            params[g] = v
        return params


class NoisyBinding:
    """``theta_i = theta + sigma * xi_i`` on a group, with ``xi`` drawn once from a seeded normal."""

    def __init__(self, num_params: int, group: Sequence[int], seed: int, base=None):
        self.num_params = num_params
        self.group = np.asarray(group, dtype=np.int64)
        self.xi = np.random.default_rng(seed).standard_normal(self.group.size)
        self.base = np.zeros(num_params) if base is None else np.array(base, dtype=float)

    def __call__(self, theta: float, sigma: float) -> np.ndarray:
        params = self.base.copy()
        params[self.group] = theta + sigma * self.xi
        return params


Evaluator = Callable[[np.ndarray], float]


def _evaluator(s) -> Evaluator:
    return s.evaluate if isinstance(s, Surrogate) else s


def sweep(s, binding: Callable[[float], np.ndarray], grid: Sequence[float]) -> List[Tuple[float, float]]:
    """Values along a one-dimensional slice, in grid order."""
    if len(grid) == 0:
        raise ValueError("empty grid")
    f = _evaluator(s)
    return [(float(t), f(binding(t))) for t in grid]


def surface(s, binding2: Callable[[float, float], np.ndarray],
            grid1: Sequence[float], grid2: Sequence[float]) -> np.ndarray:
    """Matrix ``out[i, j] = f(binding2(grid1[i], grid2[j]))``."""
    if len(grid1) == 0 or len(grid2) == 0:
        raise ValueError("empty grid")
    f = _evaluator(s)
    out = np.empty((len(grid1), len(grid2)))
    for i, a in enumerate(grid1):
        for j, b in enumerate(grid2):
            out[i, j] = f(binding2(a, b))
    return out


class AveragedSurrogate:
    """Mean of several surrogates, e.g. per-site ``<Z_i>`` for the magnetization."""

    def __init__(self, parts: Sequence[Surrogate]):
        if not parts:
            raise ValueError("need at least one surrogate")
        self.parts = list(parts)
        self.num_params = parts[0].num_params

    def evaluate(self, params) -> float:
        return float(np.mean([p.evaluate(params) for p in self.parts]))

    __call__ = evaluate


@contextmanager
def _text_out(target):
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="") as fh:
            yield fh


def write_sweep_csv(rows: Iterable[Tuple[float, float]], path) -> None:
    """``path`` may also be an open text stream."""
    with _text_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["angle", "value"])
        for a, v in rows:
            w.writerow([repr(float(a)), repr(float(v))])


def write_surface_csv(values: np.ndarray, grid1, grid2, path) -> None:
    """Row-major matrix; header row holds ``grid2``, first column holds ``grid1``."""
    with _text_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["grid1\\grid2", *(repr(float(b)) for b in grid2)])
        for a, row in zip(grid1, values):
            w.writerow([repr(float(a)), *(repr(float(v)) for v in row)])


def read_sweep_csv(path) -> List[Tuple[float, float]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        next(r)
        return [(float(a), float(v)) for a, v in r]


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def encode_varints(values: np.ndarray) -> bytes:
    """LEB128 encoding of nonnegative integers below 2**64."""
    v = np.asarray(values, dtype=np.uint64)
    if v.size == 0:
        return b""
    nbytes = np.ones(v.size, dtype=np.int64)
    rest = v >> np.uint64(7)
    while rest.any():
        nbytes += rest > 0
        rest >>= np.uint64(7)
    offsets = np.zeros(v.size, dtype=np.int64)
    np.cumsum(nbytes[:-1], out=offsets[1:])
    out = np.zeros(int(nbytes.sum()), dtype=np.uint8)
    for j in range(int(nbytes.max())):
        sel = nbytes > j
        chunk = (v[sel] >> np.uint64(7 * j)) & np.uint64(0x7F)
        more = (nbytes[sel] > j + 1).astype(np.uint64) << np.uint64(7)
        out[offsets[sel] + j] = (chunk | more).astype(np.uint8)
    return out.tobytes()


def decode_varints(buf: bytes) -> np.ndarray:
    arr = np.frombuffer(buf, dtype=np.uint8)
    if arr.size == 0:
        return np.zeros(0, dtype=np.uint64)
    term = arr < 0x80
    if not term[-1]:
        raise ValueError("truncated varint stream")
    ends = np.flatnonzero(term)
    starts = np.concatenate([[0], ends[:-1] + 1])
    group = np.concatenate([[0], np.cumsum(term)[:-1]])
    j = np.arange(arr.size) - starts[group]
    if j.max() > 9:
        raise ValueError("varint longer than 64 bits")
    out = np.zeros(ends.size, dtype=np.uint64)
    payload = (arr & 0x7F).astype(np.uint64)
    for shift in range(int(j.max()) + 1):
        sel = j == shift
        out[group[sel]] |= payload[sel] << np.uint64(7 * shift)
    return out


def _zigzag(c: np.ndarray) -> np.ndarray:
    c = c.astype(np.int64)
    return ((c << 1) ^ (c >> 63)).astype(np.uint64)


def _unzigzag(u: np.ndarray) -> np.ndarray:
    return ((u >> np.uint64(1)).astype(np.int64) ^ -(u & np.uint64(1)).astype(np.int64))


def to_bytes(s: Surrogate) -> bytes:
    comp = s._compiled
    counts = np.fromiter((len(m) for m in s.terms), dtype=np.int64, count=len(s))
    coeffs = np.fromiter(s.terms.values(), dtype=np.int64, count=len(s))
    header = {"num_params": s.num_params, "n_terms": len(s), "n_entries": int(counts.sum()),
              **s.provenance}
    hbytes = json.dumps(header, sort_keys=True).encode()
    parts = [MAGIC, struct.pack("<BI", VERSION, len(hbytes)), hbytes]
    for arr in (counts, _zigzag(coeffs), comp.pids, comp.sin_e, comp.cos_e):
        body = encode_varints(arr)
        parts += [struct.pack("<Q", len(body)), body]
    return b"".join(parts)


def from_bytes(data: bytes) -> Surrogate:
    if data[:4] != MAGIC:
        raise ValueError("not a surrogate file (bad magic)")
    version, hlen = struct.unpack_from("<BI", data, 4)
    if version != VERSION:
        raise ValueError(f"unsupported surrogate format version {version}")
    off = 9
    header = json.loads(data[off:off + hlen])
    off += hlen
    sections = []
    for _ in range(5):
        (length,) = struct.unpack_from("<Q", data, off)
        off += 8
        sections.append(decode_varints(data[off:off + length]))
        off += length
    counts, zz, pids, sin_e, cos_e = sections
    coeffs = _unzigzag(zz)
    num_params = header["num_params"]
    if counts.size != header["n_terms"] or pids.size != header["n_entries"]:
        raise ValueError("corrupt surrogate file (section sizes)")
    if counts.size != coeffs.size or not sin_e.size == cos_e.size == pids.size:
        raise ValueError("corrupt surrogate file (section sizes)")
    if np.any(coeffs == 0) or np.any(pids >= num_params):
        raise ValueError("corrupt surrogate file (terms)")
    triples = list(zip(pids.tolist(), sin_e.tolist(), cos_e.tolist()))
    ends = np.cumsum(counts).tolist()
    starts = [0] + ends[:-1]
    # written in canonical order, so no re-sorting or per-term checks are needed
    terms = dict(zip([tuple(triples[a:b]) for a, b in zip(starts, ends)], coeffs.tolist()))
    if len(terms) != counts.size:
        raise ValueError("corrupt surrogate file (duplicate monomials)")
    out = Surrogate._trusted(num_params, terms, header.get("circuit_digest"),
                             header.get("observable"), header.get("config"), header.get("stats"))
    out.__dict__["_compiled"] = _CompiledSurrogate(num_params, counts.astype(np.int64), coeffs,
                                                   pids.astype(np.int64), sin_e.astype(np.int64),
                                                   cos_e.astype(np.int64))
    return out


def save(s: Surrogate, path) -> None:
    Path(path).write_bytes(to_bytes(s))


def load(path) -> Surrogate:
    return from_bytes(Path(path).read_bytes())


def to_json(s: Surrogate) -> str:
    doc = {
        "format": "paulisurrogate-json",
        "version": VERSION,
        "num_params": s.num_params,
        **s.provenance,
        "terms": [{"coeff": c, "factors": [list(e) for e in m]} for m, c in s.terms.items()],
    }
    return json.dumps(doc, indent=1)


def from_json(text: str) -> Surrogate:
    doc = json.loads(text)
    terms = {tuple(tuple(e) for e in t["factors"]): t["coeff"] for t in doc["terms"]}
    return Surrogate(doc["num_params"], terms, doc.get("circuit_digest"), doc.get("observable"),
                     doc.get("config"), doc.get("stats"))
