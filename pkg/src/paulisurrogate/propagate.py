"""Truncated depth-first search over Pauli paths.

The observable is walked from the last op to the first. Clifford gates permute
it through the lookup tables; a rotation whose qubit carries X or Y splits the
path into a cosine branch (operator unchanged) and a sine branch (operator
from :func:`paulisurrogate.pauli.rz_split`). A finished path contributes its
sign to the trigonometric monomial collected along the way, provided the final
operator lies in {I, Z}^n.

Paths are additionally dropped without changing the result when an X or Y
sits on a qubit that no remaining gate can clear ("annihilated"), and dropped
heuristically by the three truncation rules of :class:`TruncationConfig`.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binom

from .circuit import ParamCircuit, Rz
from .pauli import CLIFFORD_TABLES, GATE_ARITY, PauliString
from .surrogate import Monomial, Surrogate

log = logging.getLogger(__name__)

BIASES = ("none", "prefer_sin", "prefer_cos")
INT64_MAX = 2 ** 63 - 1

_C1, _C2, _RZ = 0, 1, 2


@dataclass(frozen=True)
class TruncationConfig:
    """Path truncation settings. ``None`` means unbounded."""

    max_freq: Optional[int] = None
    trunc_prob: float = 0.0
    max_weight: Optional[int] = None
    bias: str = "none"

    def __post_init__(self):
        if self.max_freq is not None and self.max_freq < 0:
            raise ValueError("max_freq must be nonnegative")
        if not 0.0 <= self.trunc_prob < 1.0:
            raise ValueError("trunc_prob must lie in [0, 1)")
        if self.trunc_prob > 0 and self.max_freq is None:
            raise ValueError("trunc_prob needs a finite max_freq")
        if self.max_weight is not None and self.max_weight < 1:
            raise ValueError("max_weight must be positive")
        if self.bias not in BIASES:
            raise ValueError(f"bias must be one of {BIASES}")

    def to_dict(self) -> dict:
        return asdict(self)


UNBOUNDED = TruncationConfig()


@dataclass
class SearchStats:
    paths_explored: int = 0
    paths_contributing: int = 0
    truncated_freq: int = 0
    truncated_prob: int = 0
    truncated_weight: int = 0
    annihilated: int = 0
    max_frontier: int = 0
    wall_time: float = 0.0

    def merge(self, other: "SearchStats") -> None:
        for name in ("paths_explored", "paths_contributing", "truncated_freq",
                     "truncated_prob", "truncated_weight", "annihilated"):
            setattr(self, name, getattr(self, name) + getattr(other, name))
        self.max_frontier = max(self.max_frontier, other.max_frontier)

    def to_dict(self) -> dict:
        return asdict(self)


class SearchAborted(RuntimeError):
    """The frontier outgrew its budget. Carries the partial result and stats."""

    def __init__(self, message: str, stats: SearchStats, partial: Surrogate):
        super().__init__(message)
        self.stats = stats
        self.partial = partial


def estimate_survival_prob(l: int, k: int, m: int, max_freq: int) -> float:
    """Chance that a path with ``l`` splits after ``k`` of ``m`` rotations ends with at most ``max_freq``.

    Assumes each of the ``m - k`` remaining rotations splits independently
    with the observed rate ``l / k``; the result is the binomial CDF at the
    remaining budget ``max_freq - l``.
    """
    if l > max_freq:
        return 0.0
    if l == 0 or m <= k:
        return 1.0
    return float(binom.cdf(max_freq - l, m - k, l / k))


def _survival_table(m: int, max_freq: int) -> List[List[float]]:
    # rows: splits so far l; columns: rotations seen k
    table = [[1.0] * (m + 1)]
    k = np.arange(1, m + 1)
    for l in range(1, max_freq + 1):
        row = np.zeros(m + 1)
        ok = k >= l
        kk = k[ok]
        row[1:][ok] = binom.cdf(max_freq - l, m - kk, l / kk)
        row[1:][ok & (k == m)] = 1.0
        table.append(row.tolist())
    return table


# ---------------------------------------------------------------------------
# compiled backward program
# ---------------------------------------------------------------------------

def _x_changers(kind: str) -> Tuple[bool, ...]:
    """Per gate position, whether the gate can toggle that qubit's X bit."""
    k = GATE_ARITY[kind]
    table = CLIFFORD_TABLES[kind]
    out = []
    for j in range(k):
        out.append(any(((i >> (2 * j)) & 1) != ((o >> (2 * j)) & 1) for i, (o, _) in enumerate(table)))
    return tuple(out)


class BackwardProgram:
    """A circuit compiled for repeated backward passes."""

    def __init__(self, circuit: ParamCircuit):
        self.circuit = circuit
        self.n = circuit.n
        self.m = circuit.m
        prog = []
        cache: Dict[tuple, tuple] = {}
        changers = {kind: _x_changers(kind) for kind in GATE_ARITY}
        dead = [0] * (len(circuit.ops) + 1)
        alive = 0
        full = (1 << circuit.n) - 1
        dead[0] = full
        seen_rz = 0
        rz_positions = []
        for pos, op in enumerate(circuit.ops):
            if isinstance(op, Rz):
                prog.append(None)
                rz_positions.append(pos)
                seen_rz += 1
            else:
                key = (op.kind, op.qubits)
                entry = cache.get(key)
                if entry is None:
                    entry = self._compile_gate(op.kind, op.qubits)
                    cache[key] = entry
                prog.append(entry)
                for q, flag in zip(op.qubits, changers[op.kind]):
                    if flag:
                        alive |= 1 << q
            dead[pos + 1] = full & ~alive
        # rotations: (code, qubit, bit, param_id, rz_index, seen-so-far when walking backward)
        m = len(rz_positions)
        for r, pos in enumerate(rz_positions):
            op = circuit.ops[pos]
            prog[pos] = (_RZ, op.qubit, 1 << op.qubit, op.param_id, r, m - r)
        self.prog = prog
        self.dead = dead

    @staticmethod
    def _compile_gate(kind: str, qubits: Tuple[int, ...]) -> tuple:
        table = CLIFFORD_TABLES[kind]
        if len(qubits) == 1:
            (q,) = qubits
            entries = tuple(((o & 1) << q, (o >> 1) << q, f) for o, f in table)
            return (_C1, q, entries, ~(1 << q))
        a, b = qubits
        entries = tuple(
            (((o & 1) << a) | (((o >> 2) & 1) << b), (((o >> 1) & 1) << a) | ((o >> 3) << b), f)
            for o, f in table
        )
        touch = (1 << a) | (1 << b)
        return (_C2, a, b, entries, ~touch, touch)

    def root(self, observable: PauliString) -> tuple:
        if observable.n != self.n:
            raise ValueError(f"observable on {observable.n} qubits, circuit has {self.n}")
        return (len(self.prog) - 1, observable.xmask, observable.zmask,
                1 if observable.sign < 0 else 0, 0, None)

    def forced_pass(self, observable: PauliString, channel_of_param) -> Tuple[int, int, int, list]:
        """Single backward pass taking a fixed branch at every split.

        ``channel_of_param(pid)`` returns +1 (cosine) or -1 (sine). Returns the
        final masks, the sign bit and the list of ``(param_id, channel)`` splits.
        """
        pos, x, z, neg, _, _ = self.root(observable)
        prog = self.prog
        splits = []
        while pos >= 0:
            op = prog[pos]
            code = op[0]
            if code == _C1:
                q = op[1]
                loc = (x >> q & 1) | (z >> q & 1) << 1
                if loc:
                    ox, oz, fl = op[2][loc]
                    x = x & op[3] | ox
                    z = z & op[3] | oz
                    neg ^= fl
            elif code == _C2:
                if (x | z) & op[5]:
                    a, b = op[1], op[2]
                    ex, ez, fl = op[3][(x >> a & 1) | (z >> a & 1) << 1 | (x >> b & 1) << 2 | (z >> b & 1) << 3]
                    x = x & op[4] | ex
                    z = z & op[4] | ez
                    neg ^= fl
            elif x & op[2]:
                ch = channel_of_param(op[3])
                splits.append((op[3], ch))
                if ch < 0:
                    if not z & op[2]:
                        neg ^= 1
                    z ^= op[2]
            pos -= 1
        return x, z, neg, splits


def compile_program(circuit: Union[ParamCircuit, BackwardProgram]) -> BackwardProgram:
    return circuit if isinstance(circuit, BackwardProgram) else BackwardProgram(circuit)


def _monomial(splits) -> Monomial:
    acc: Dict[int, List[int]] = {}
    while splits is not None:
        pid, ch, _, splits = splits
        e = acc.get(pid)
        if e is None:
            e = acc[pid] = [0, 0]
        e[0 if ch < 0 else 1] += 1
    return tuple(sorted((pid, s, c) for pid, (s, c) in acc.items()))


def _frequency_vector(splits) -> Tuple[Tuple[int, int], ...]:
    out = []
    while splits is not None:
        _, ch, r, splits = splits
        out.append((r, ch))
    return tuple(reversed(out))


class _Search:
    def __init__(self, program: BackwardProgram, cfg: TruncationConfig,
                 max_frontier: Optional[int] = None, record_paths: bool = False,
                 log_every: Optional[int] = None):
        self.program = program
        self.cfg = cfg
        self.ell = cfg.max_freq if cfg.max_freq is not None else program.m + 1
        self.W = cfg.max_weight if cfg.max_weight is not None else program.n + 1
        self.p = cfg.trunc_prob
        self.surv = _survival_table(program.m, self.ell) if self.p > 0 else None
        self.max_frontier = max_frontier
        self.record_paths = record_paths
        self.log_every = log_every

    def run(self, nodes: Sequence[tuple], stop_depth: Optional[int] = None):
        """DFS from ``nodes``. Returns ``(terms, stats, paths, frontier)``.

        With ``stop_depth`` set, children created by the split that brings a
        path to ``stop_depth`` splits are returned in ``frontier`` instead of
        being explored.
        """
        prog, dead = self.program.prog, self.program.dead
        ell, W, p, surv = self.ell, self.W, self.p, self.surv
        check_w = W <= self.program.n
        sin_first = self.cfg.bias == "prefer_sin"
        cap = self.max_frontier
        record = self.record_paths
        log_every = self.log_every
        terms: Dict[Monomial, int] = {}
        paths: Dict[tuple, int] = {}
        frontier: List[tuple] = []
        st = SearchStats()
        n_leaf = n_contrib = n_freq = n_prob = n_weight = n_dead = 0
        max_stack = 0
        stack = list(nodes)
        while stack:
            pos, x, z, neg, l, splits = stack.pop()
            if check_w and (x | z).bit_count() > W:
                n_weight += 1
                continue
            while True:
                if pos < 0:
                    if x:
                        n_dead += 1
                    else:
                        n_contrib += 1
                        key = _monomial(splits)
                        terms[key] = terms.get(key, 0) + (-1 if neg else 1)
                        if record:
                            paths[_frequency_vector(splits)] = -1 if neg else 1
                    n_leaf += 1
                    if log_every and n_leaf % log_every == 0:
                        log.info("progress explored=%d contributing=%d frontier=%d",
                                 n_leaf + n_freq + n_prob + n_weight + n_dead, n_contrib, len(stack))
                    break
                op = prog[pos]
                code = op[0]
                if code == _C1:
                    q = op[1]
                    loc = (x >> q & 1) | (z >> q & 1) << 1
                    if loc:
                        ox, oz, fl = op[2][loc]
                        x = x & op[3] | ox
                        z = z & op[3] | oz
                        neg ^= fl
                    pos -= 1
                    continue
                if code == _C2:
                    if (x | z) & op[5]:
                        a, b = op[1], op[2]
                        ex, ez, fl = op[3][(x >> a & 1) | (z >> a & 1) << 1
                                           | (x >> b & 1) << 2 | (z >> b & 1) << 3]
                        x = x & op[4] | ex
                        z = z & op[4] | ez
                        neg ^= fl
                        if check_w and (x | z).bit_count() > W:
                            n_weight += 1
                            break
                    pos -= 1
                    continue
                # rotation
                _, q, bit, pid, r, k = op
                if x & dead[pos]:
                    n_dead += 1
                    break
                if not x & bit:
                    if l and surv is not None and surv[l][k] < p:
                        n_prob += 1
                        break
                    pos -= 1
                    continue
                l += 1
                if l > ell:
                    n_freq += 2
                    break
                if surv is not None and surv[l][k] < p:
                    n_prob += 2
                    break
                pos -= 1
                sin_z = z ^ bit
                sin_neg = neg if z & bit else neg ^ 1
                cos_splits = (pid, 1, r, splits)
                sin_splits = (pid, -1, r, splits)
                if stop_depth is not None and l >= stop_depth:
                    frontier.append((pos, x, z, neg, l, cos_splits))
                    frontier.append((pos, x, sin_z, sin_neg, l, sin_splits))
                    break
                if sin_first:
                    stack.append((pos, x, z, neg, l, cos_splits))
                    z, neg, splits = sin_z, sin_neg, sin_splits
                else:
                    stack.append((pos, x, sin_z, sin_neg, l, sin_splits))
                    splits = cos_splits
                if len(stack) > max_stack:
                    max_stack = len(stack)
                    if cap is not None and max_stack > cap:
                        st = self._stats(n_leaf, n_contrib, n_freq, n_prob, n_weight, n_dead, max_stack)
                        raise _Abort(terms, st)
        st = self._stats(n_leaf, n_contrib, n_freq, n_prob, n_weight, n_dead, max_stack)
        return terms, st, paths, frontier

    @staticmethod
    def _stats(n_leaf, n_contrib, n_freq, n_prob, n_weight, n_dead, max_stack) -> SearchStats:
        # n_leaf also counts paths that ended on X/Y; those are already in n_dead
        return SearchStats(
            paths_explored=n_contrib + n_freq + n_prob + n_weight + n_dead,
            paths_contributing=n_contrib,
            truncated_freq=n_freq,
            truncated_prob=n_prob,
            truncated_weight=n_weight,
            annihilated=n_dead,
            max_frontier=max_stack,
        )


class _Abort(Exception):
    def __init__(self, terms, stats):
        self.terms = terms
        self.stats = stats


@dataclass
class SearchResult:
    surrogate: Surrogate
    stats: SearchStats
    paths: Dict[tuple, int] = field(default_factory=dict)
    partials: List[Surrogate] = field(default_factory=list)


_WORKER: Optional[_Search] = None


def _init_worker(circuit, cfg, max_frontier, record_paths):
    global _WORKER
    _WORKER = _Search(BackwardProgram(circuit), cfg, max_frontier, record_paths)


def _run_chunk(nodes):
    try:
        terms, st, paths, _ = _WORKER.run(nodes)
    except _Abort as exc:
        return exc.terms, exc.stats, {}, True
    return terms, st, paths, False


def _accumulate(into: Dict[Monomial, int], terms: Dict[Monomial, int]) -> None:
    for key, c in terms.items():
        into[key] = into.get(key, 0) + c


def enumerate_paths(circuit: Union[ParamCircuit, BackwardProgram], observable: PauliString,
                    cfg: TruncationConfig = UNBOUNDED, *, workers: int = 1,
                    max_frontier: Optional[int] = None, record_paths: bool = False,
                    log_every: Optional[int] = None, keep_partials: bool = False) -> SearchResult:
    """Build the surrogate of ``<0| U^dagger O U |0>`` by truncated path search.

    ``workers > 1`` expands the tree to a shallow frontier and hands the
    subtrees to a process pool; partial coefficient maps are summed, so the
    result does not depend on scheduling. ``max_frontier`` bounds the DFS stack
    (per worker); exceeding it raises :class:`SearchAborted`. With
    ``keep_partials`` the per-chunk maps (plus the part found while building
    the frontier) are returned as separate surrogates.
    """
    program = compile_program(circuit)
    circuit = program.circuit
    if observable.xmask == 0 and observable.zmask == 0:
        raise ValueError("observable must have weight >= 1")
    search = _Search(program, cfg, max_frontier, record_paths, log_every)
    t0 = time.perf_counter()
    root = program.root(observable)
    aborted = False
    partial_maps: List[Dict[Monomial, int]] = []
    if workers <= 1:
        try:
            total, stats, paths, _ = search.run([root])
        except _Abort as exc:
            total, stats, paths, aborted = exc.terms, exc.stats, {}, True
    else:
        depth = max(1, math.ceil(math.log2(workers)) + 4)
        try:
            total, stats, paths, tasks = search.run([root], stop_depth=depth)
        except _Abort as exc:
            total, stats, paths, tasks, aborted = exc.terms, exc.stats, {}, [], True
        if keep_partials:
            partial_maps.append(dict(total))
        if tasks:
            n_chunks = min(len(tasks), 4 * workers)
            chunks = [tasks[i::n_chunks] for i in range(n_chunks)]
            with ProcessPoolExecutor(workers, initializer=_init_worker,
                                     initargs=(circuit, cfg, max_frontier, record_paths)) as ex:
                for t, s, pth, ab in ex.map(_run_chunk, chunks):
                    if keep_partials:
                        partial_maps.append(t)
                    _accumulate(total, t)
                    stats.merge(s)
                    paths.update(pth)
                    aborted |= ab
    stats.wall_time = time.perf_counter() - t0
    surrogate = _to_surrogate(total, circuit, observable, cfg, stats)
    if aborted:
        raise SearchAborted(f"frontier exceeded {max_frontier} nodes", stats, surrogate)
    log.info("done explored=%d contributing=%d truncated_freq=%d truncated_prob=%d "
             "truncated_weight=%d annihilated=%d monomials=%d wall=%.3fs",
             stats.paths_explored, stats.paths_contributing, stats.truncated_freq,
             stats.truncated_prob, stats.truncated_weight, stats.annihilated,
             len(surrogate), stats.wall_time)
    partials = [_to_surrogate(t, circuit, observable, cfg, SearchStats()) for t in partial_maps]
    return SearchResult(surrogate, stats, paths, partials)


def _to_surrogate(terms, circuit, observable, cfg, stats) -> Surrogate:
    for c in terms.values():
        if abs(c) > INT64_MAX:
            raise OverflowError("coefficient exceeds 64-bit range")
    return Surrogate(
        circuit.num_params,
        {k: c for k, c in terms.items() if c},
        circuit_digest=circuit.digest(),
        observable=observable.sparse_label(),
        config=cfg.to_dict(),
        stats=stats.to_dict(),
    )


def saturation_weight(circuit: Union[ParamCircuit, BackwardProgram], observable: PauliString,
                      cfg: TruncationConfig = UNBOUNDED) -> int:
    """Largest operator weight reached along any contributing path.

    Found as the smallest ``W`` whose contributing path set equals the one
    without a weight cap (other truncations as in ``cfg``). Any ``W`` at or
    above this value leaves the surrogate unchanged.
    """
    program = compile_program(circuit)
    full = enumerate_paths(program, observable, replace(cfg, max_weight=None), record_paths=True)
    for w in range(1, program.n + 1):
        res = enumerate_paths(program, observable, replace(cfg, max_weight=w), record_paths=True)
        if res.paths == full.paths:
            return w
    return program.n


# ---------------------------------------------------------------------------
# trivial paths and Clifford endpoints
# ---------------------------------------------------------------------------

def find_trivial_paths(circuit: Union[ParamCircuit, BackwardProgram],
                       observable: PauliString) -> List[Tuple[Monomial, int]]:
    """The all-cosine and all-sine paths that survive to a nonzero overlap."""
    program = compile_program(circuit)
    found = []
    for ch in (1, -1):
        x, _, neg, splits = program.forced_pass(observable, lambda pid, ch=ch: ch)
        if x:
            continue
        acc: Dict[int, int] = {}
        for pid, _ in splits:
            acc[pid] = acc.get(pid, 0) + 1
        mono = tuple(sorted((pid, e, 0) if ch < 0 else (pid, 0, e) for pid, e in acc.items()))
        found.append((mono, -1 if neg else 1))
    if len(found) == 2 and found[0][0] == found[1][0]:
        # no split at all: both passes are the same path
        found = found[:1]
    return found


def trivial_surrogate(circuit: Union[ParamCircuit, BackwardProgram],
                      observable: PauliString) -> Surrogate:
    program = compile_program(circuit)
    terms = dict(find_trivial_paths(program, observable))
    return Surrogate(program.circuit.num_params, terms, circuit_digest=program.circuit.digest(),
                     observable=observable.sparse_label(), config={"trivial_only": True})


def clifford_endpoint(circuit: Union[ParamCircuit, BackwardProgram], observable: PauliString,
                      endpoint_channels: Sequence[int]) -> int:
    """Exact expectation with every parameter at 0 (channel 0) or pi/2 (channel 1).

    ``Rz(0)`` is the identity and ``Rz(pi/2)`` equals ``S`` up to phase, which
    on X/Y acts exactly like the cosine and sine branch respectively.
    """
    program = compile_program(circuit)
    choice = [1 if c == 0 else -1 for c in endpoint_channels]
    if len(choice) != program.circuit.num_params:
        raise ValueError("need one endpoint choice per parameter")
    x, _, neg, _ = program.forced_pass(observable, choice.__getitem__)
    if x:
        return 0
    return -1 if neg else 1
