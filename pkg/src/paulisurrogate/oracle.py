"""Ground-truth engines for small instances.

``exact_expectation`` runs a dense statevector forward from ``|0...0>``.
``exact_path_sum`` enumerates every Pauli path with a plain recursion over
:class:`~paulisurrogate.pauli.PauliString` objects; it shares only the Pauli
primitives with the optimized search, not its traversal code.
"""

from __future__ import annotations

from typing import Dict, Optional, Sequence

import numpy as np

from .circuit import ParamCircuit, Rz
from .pauli import CliffordGate, NoSplit, PauliString, conjugate_adjoint, overlap_with_zero, rz_split
from .surrogate import Monomial, Surrogate

MAX_STATEVECTOR_QUBITS = 22
MAX_PATH_SUM_ROTATIONS = 20

_SQ2 = 1 / np.sqrt(2)
_MATS = {
    "H": np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]]),
    "Sdg": np.array([[1, 0], [0, -1j]]),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class CapacityError(ValueError):
    """Instance too large for an exact oracle."""


def _apply_1q(psi: np.ndarray, mat: np.ndarray, q: int) -> np.ndarray:
    # psi has shape (batch, 2, 2, ..., 2) with qubit q on axis q + 1
    psi = np.moveaxis(psi, q + 1, -1)
    if mat.ndim == 3:  # per-batch matrices
        psi = np.einsum("b...j,bij->b...i", psi, mat)
    else:
        psi = psi @ mat.T
    return np.moveaxis(psi, -1, q + 1)


def _apply_2q(psi: np.ndarray, kind: str, a: int, b: int) -> np.ndarray:
    psi = psi.copy()
    idx = [slice(None)] * psi.ndim
    idx[a + 1] = 1
    if kind == "CX":
        sub = psi[tuple(idx)]
        # axis b+1 shifts down by one when a < b after fixing axis a
        axis = b if a < b else b + 1
        psi[tuple(idx)] = np.flip(sub, axis=axis)
    else:  # CZ
        idx[b + 1] = 1
        psi[tuple(idx)] *= -1
    return psi


def _rz_mats(angles: np.ndarray) -> np.ndarray:
    out = np.zeros((angles.size, 2, 2), dtype=complex)
    out[:, 0, 0] = np.exp(-0.5j * angles)
    out[:, 1, 1] = np.exp(0.5j * angles)
    return out


def _apply_pauli(psi: np.ndarray, p: PauliString) -> np.ndarray:
    for q in range(p.n):
        ch = p.local(q)
        if ch != "I":
            psi = _apply_1q(psi, _MATS[ch], q)
    return p.sign * psi


def statevectors(circuit: ParamCircuit, param_rows: np.ndarray) -> np.ndarray:
    """Final states for a batch of parameter vectors, shape ``(batch,) + (2,)*n``."""
    n = circuit.n
    if n > MAX_STATEVECTOR_QUBITS:
        raise CapacityError(f"{n} qubits exceeds the statevector limit of {MAX_STATEVECTOR_QUBITS}")
    rows = np.atleast_2d(np.asarray(param_rows, dtype=float))
    if rows.shape[1] != circuit.num_params:
        raise ValueError(f"expected {circuit.num_params} parameters per row")
    psi = np.zeros((rows.shape[0],) + (2,) * n, dtype=complex)
    psi[(slice(None),) + (0,) * n] = 1.0
    for op in circuit.ops:
        if isinstance(op, Rz):
            psi = _apply_1q(psi, _rz_mats(rows[:, op.param_id]), op.qubit)
        elif len(op.qubits) == 1:
            psi = _apply_1q(psi, _MATS[op.kind], op.qubits[0])
        else:
            psi = _apply_2q(psi, op.kind, *op.qubits)
    return psi


def expectations(circuit: ParamCircuit, param_rows: np.ndarray, observable: PauliString) -> np.ndarray:
    """``<psi(theta)| O |psi(theta)>`` for every row of ``param_rows``."""
    if observable.n != circuit.n:
        raise ValueError("observable and circuit sizes differ")
    psi = statevectors(circuit, param_rows)
    opsi = _apply_pauli(psi, observable)
    b = psi.shape[0]
    vals = np.einsum("bi,bi->b", psi.reshape(b, -1).conj(), opsi.reshape(b, -1))
    return vals.real


def exact_expectation(circuit: ParamCircuit, params: Sequence[float], observable: PauliString) -> float:
    return float(expectations(circuit, np.asarray(params, dtype=float)[None, :], observable)[0])


def exact_path_sum(circuit: ParamCircuit, observable: PauliString) -> Surrogate:
    """Every path, no truncation: cost ``2**m`` in the worst case."""
    if circuit.m > MAX_PATH_SUM_ROTATIONS:
        raise CapacityError(f"{circuit.m} rotations exceeds the path-sum limit of {MAX_PATH_SUM_ROTATIONS}")
    if observable.n != circuit.n:
        raise ValueError("observable and circuit sizes differ")
    terms: Dict[Monomial, int] = {}

    def visit(i: int, p: PauliString, exps: Dict[int, tuple]):
        if i < 0:
            c = overlap_with_zero(p)
            if c:
                mono = tuple(sorted((pid, s, co) for pid, (s, co) in exps.items()))
                terms[mono] = terms.get(mono, 0) + c
            return
        op = circuit.ops[i]
        if isinstance(op, CliffordGate):
            visit(i - 1, conjugate_adjoint(p, op), exps)
            return
        out = rz_split(p, op.qubit)
        if isinstance(out, NoSplit):
            visit(i - 1, out.operator, exps)
            return
        s, co = exps.get(op.param_id, (0, 0))
        visit(i - 1, out.cos_operator, {**exps, op.param_id: (s, co + 1)})
        visit(i - 1, out.sin_operator, {**exps, op.param_id: (s + 1, co)})

    visit(len(circuit.ops) - 1, observable, {})
    return Surrogate(circuit.num_params, {k: v for k, v in terms.items() if v},
                     circuit_digest=circuit.digest(), observable=observable.sparse_label())


CLIFFORD_KINDS = ("H", "S", "Sdg", "X", "Y", "Z", "CX", "CZ")


def random_circuit(rng: np.random.Generator, n: int, m: int, num_clifford: int,
                   num_params: Optional[int] = None) -> ParamCircuit:
    """Seeded random Clifford + Rz circuit.

    ``m`` rotations and ``num_clifford`` Clifford gates are placed in a random
    order; kinds and qubits are uniform. Rotation ``i`` uses parameter
    ``i`` for ``i < num_params`` and a uniformly drawn earlier parameter
    otherwise, so every parameter is referenced.
    """
    num_params = m if num_params is None else num_params
    if not 1 <= num_params <= max(m, 1) or m < 1:
        raise ValueError("need 1 <= num_params <= m")
    kinds = [k for k in CLIFFORD_KINDS if n >= 2 or k not in ("CX", "CZ")]
    slots = np.array([1] * m + [0] * num_clifford)
    rng.shuffle(slots)
    ops = []
    r = 0
    for is_rz in slots:
        if is_rz:
            pid = r if r < num_params else int(rng.integers(num_params))
            ops.append(Rz(int(rng.integers(n)), pid))
            r += 1
        else:
            kind = kinds[int(rng.integers(len(kinds)))]
            if kind in ("CX", "CZ"):
                a, b = rng.choice(n, size=2, replace=False)
                ops.append(CliffordGate(kind, (int(a), int(b))))
            else:
                ops.append(CliffordGate(kind, (int(rng.integers(n)),)))
    return ParamCircuit(n, tuple(ops), num_params)


def random_pauli(rng: np.random.Generator, n: int) -> PauliString:
    """Uniform random non-identity signed Pauli string."""
    while True:
        x = int(rng.integers(1 << n))
        z = int(rng.integers(1 << n))
        if x | z:
            return PauliString(n, x, z, int(rng.choice([1, -1])))
