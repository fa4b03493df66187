"""Signed Pauli strings in the symplectic (x, z) bitmask form.

A local Pauli on qubit ``q`` is read from bit ``q`` of the two masks::

    (x, z) = (0, 0) -> I,  (1, 0) -> X,  (1, 1) -> Y,  (0, 1) -> Z

``Y`` is the Hermitian Pauli-Y (not ``XZ``), so every string carries a real
sign in {+1, -1}. Masks are arbitrary-precision Python ints, so the register
width is not limited to a machine word.

Clifford gates act through precomputed tables of size ``4**k``. Every table
stores the Heisenberg-picture map ``P -> G^dagger P G`` for the gate ``G`` as
it appears in the circuit, which is the direction needed when an observable is
walked from the last gate back to the first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import reduce
from typing import Dict, List, Tuple, Union

import numpy as np

# local index = x | z << 1
_LOCAL_CHARS = "IXZY"
_CHAR_TO_XZ = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}

GATE_ARITY: Dict[str, int] = {
    "H": 1, "S": 1, "Sdg": 1, "X": 1, "Y": 1, "Z": 1, "CX": 2, "CZ": 2,
}


@dataclass(frozen=True)
class PauliString:
    """Signed n-qubit Pauli operator ``sign * P_0 (x) P_1 (x) ... (x) P_{n-1}``."""

    n: int
    xmask: int = 0
    zmask: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.n < 0:
            raise ValueError("qubit count must be nonnegative")
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign!r}")
        limit = 1 << self.n
        if not (0 <= self.xmask < limit and 0 <= self.zmask < limit):
            raise ValueError("mask has bits outside the register")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        """Parse a dense label such as ``"-XIZY"`` (leftmost character is qubit 0)."""
        label = label.strip()
        sign = 1
        if label[:1] in "+-" and label:
            sign = -1 if label[0] == "-" else 1
            label = label[1:]
        x = z = 0
        for q, ch in enumerate(label):
            try:
                bx, bz = _CHAR_TO_XZ[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli character {ch!r} in {label!r}") from None
            x |= bx << q
            z |= bz << q
        return cls(len(label), x, z, sign)

    @classmethod
    def from_sparse(cls, text: str, n: int) -> "PauliString":
        """Parse sparse notation ``"X13 Y9 Z8"`` (0-based sites) on ``n`` qubits.

        An optional leading ``-`` or ``+`` token (or prefix on the first token)
        sets the sign. Repeated sites are rejected.
        """
        tokens = text.replace(",", " ").split()
        sign = 1
        if tokens and tokens[0] in ("+", "-"):
            sign = -1 if tokens.pop(0) == "-" else 1
        elif tokens and tokens[0][:1] in "+-":
            sign = -1 if tokens[0][0] == "-" else 1
            tokens[0] = tokens[0][1:]
        x = z = 0
        seen = set()
        for tok in tokens:
            m = re.fullmatch(r"([IXYZ])(\d+)", tok)
            if m is None:
                raise ValueError(f"invalid sparse Pauli token {tok!r}")
            ch, q = m.group(1), int(m.group(2))
            if q >= n:
                raise ValueError(f"site {q} out of range for {n} qubits")
            if q in seen:
                raise ValueError(f"site {q} appears twice in {text!r}")
            seen.add(q)
            bx, bz = _CHAR_TO_XZ[ch]
            x |= bx << q
            z |= bz << q
        return cls(n, x, z, sign)

    @classmethod
    def single(cls, n: int, qubit: int, kind: str = "Z") -> "PauliString":
        return cls.from_sparse(f"{kind}{qubit}", n)

    def local(self, q: int) -> str:
        return _LOCAL_CHARS[(self.xmask >> q & 1) | ((self.zmask >> q & 1) << 1)]

    def label(self, show_sign: bool = False) -> str:
        body = "".join(self.local(q) for q in range(self.n))
        if self.sign < 0:
            return "-" + body
        return ("+" + body) if show_sign else body

    def sparse_label(self) -> str:
        parts = [f"{self.local(q)}{q}" for q in range(self.n) if self.local(q) != "I"]
        text = " ".join(parts) if parts else "I"
        return ("-" + text) if self.sign < 0 else text

    def support(self) -> List[int]:
        mask = self.xmask | self.zmask
        return [q for q in range(self.n) if mask >> q & 1]

    def __neg__(self) -> "PauliString":
        return PauliString(self.n, self.xmask, self.zmask, -self.sign)

    def __str__(self) -> str:
        return self.label()

    def to_matrix(self) -> np.ndarray:
        """Dense ``2**n x 2**n`` matrix; qubit 0 is the most significant tensor factor."""
        mats = [PAULI_MATRICES[self.local(q)] for q in range(self.n)]
        if not mats:
            return np.array([[complex(self.sign)]])
        return self.sign * reduce(np.kron, mats)


def weight(p: PauliString) -> int:
    """Number of sites on which ``p`` acts non-trivially."""
    return bin(p.xmask | p.zmask).count("1")


def overlap_with_zero(p: PauliString) -> int:
    """``Tr[|0><0| p]``: the sign for strings in {I, Z}^n, else 0."""
    return p.sign if p.xmask == 0 else 0


# ---------------------------------------------------------------------------
# Clifford gates and lookup tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CliffordGate:
    kind: str
    qubits: Tuple[int, ...]

    def __post_init__(self):
        if self.kind not in GATE_ARITY:
            raise ValueError(f"unknown Clifford gate {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        if len(qubits) != GATE_ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {GATE_ARITY[self.kind]} qubit(s), got {qubits}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"repeated qubit in {self.kind}{qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"negative qubit index in {self.kind}{qubits}")


_I2 = np.eye(2, dtype=complex)
PAULI_MATRICES = {
    "I": _I2,
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# first listed qubit is the most significant factor (the CX control)
GATE_MATRICES = {
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "S": np.diag([1, 1j]),
    "Sdg": np.diag([1, -1j]),
    "X": PAULI_MATRICES["X"],
    "Y": PAULI_MATRICES["Y"],
    "Z": PAULI_MATRICES["Z"],
    "CX": np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex),
    "CZ": np.diag([1, 1, 1, -1]).astype(complex),
}

# (output local index, sign flip bit) per input local index
CliffordTable = Dict[str, Tuple[Tuple[int, int], ...]]


def local_pauli_matrix(index: int, k: int) -> np.ndarray:
    """Matrix of the k-qubit local Pauli with packed index ``sum(loc_j << 2j)``."""
    mats = [PAULI_MATRICES[_LOCAL_CHARS[(index >> (2 * j)) & 3]] for j in range(k)]
    return reduce(np.kron, mats)


def _table_for(u: np.ndarray, k: int) -> Tuple[Tuple[int, int], ...]:
    dim = 2 ** k
    basis = [local_pauli_matrix(i, k) for i in range(4 ** k)]
    entries = []
    for i in range(4 ** k):
        m = u.conj().T @ basis[i] @ u
        for j, q in enumerate(basis):
            c = np.trace(q @ m) / dim
            if abs(c) > 0.5:
                if abs(c.imag) > 1e-9 or abs(abs(c.real) - 1) > 1e-9:
                    raise ArithmeticError(f"conjugate of Pauli {i} is not a signed Pauli")
                entries.append((j, 0 if c.real > 0 else 1))
                break
        else:
            raise ArithmeticError("gate is not Clifford")
    return tuple(entries)


def build_clifford_tables() -> CliffordTable:
    return {kind: _table_for(GATE_MATRICES[kind], GATE_ARITY[kind]) for kind in GATE_ARITY}


CLIFFORD_TABLES: CliffordTable = build_clifford_tables()


def conjugate_adjoint(p: PauliString, g: CliffordGate, table: CliffordTable = None) -> PauliString:
    """Walk ``p`` backward through gate ``g``: returns ``g^dagger p g``."""
    table = CLIFFORD_TABLES if table is None else table
    if any(q >= p.n for q in g.qubits):
        raise IndexError(f"gate {g.kind}{g.qubits} outside {p.n}-qubit register")
    loc = 0
    for j, q in enumerate(g.qubits):
        loc |= ((p.xmask >> q & 1) | ((p.zmask >> q & 1) << 1)) << (2 * j)
    out, flip = table[g.kind][loc]
    x, z = p.xmask, p.zmask
    for j, q in enumerate(g.qubits):
        bits = (out >> (2 * j)) & 3
        x = (x & ~(1 << q)) | ((bits & 1) << q)
        z = (z & ~(1 << q)) | ((bits >> 1) << q)
    return PauliString(p.n, x, z, -p.sign if flip else p.sign)


# ---------------------------------------------------------------------------
# Z-rotation split
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NoSplit:
    operator: PauliString


@dataclass(frozen=True)
class Split:
    cos_operator: PauliString
    sin_operator: PauliString


SplitOutcome = Union[NoSplit, Split]


def rz_split(p: PauliString, qubit: int) -> SplitOutcome:
    """Decompose the Heisenberg action of ``Rz(theta) = exp(-i theta Z / 2)``.

    ``Rz^dagger X Rz = cos X - sin Y`` and ``Rz^dagger Y Rz = cos Y + sin X``,
    so the sine branch maps ``X -> -Y`` and ``Y -> +X``. Sites holding I or Z
    commute with the rotation and do not split.
    """
    if not 0 <= qubit < p.n:
        raise IndexError(f"qubit {qubit} outside {p.n}-qubit register")
    bit = 1 << qubit
    if not p.xmask & bit:
        return NoSplit(p)
    was_x = not p.zmask & bit
    sin_op = PauliString(p.n, p.xmask, p.zmask ^ bit, -p.sign if was_x else p.sign)
    return Split(p, sin_op)

