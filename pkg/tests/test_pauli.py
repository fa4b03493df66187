import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paulisurrogate.pauli import (CLIFFORD_TABLES, GATE_ARITY, GATE_MATRICES, CliffordGate,
                                  NoSplit, PauliString, Split, conjugate_adjoint,
                                  overlap_with_zero, rz_split, weight)


def paulis(max_n=6):
    return st.integers(1, max_n).flatmap(lambda n: st.builds(
        PauliString, st.just(n), st.integers(0, 2 ** n - 1), st.integers(0, 2 ** n - 1),
        st.sampled_from([1, -1])))


def rz_matrix(theta):
    return np.diag([np.exp(-0.5j * theta), np.exp(0.5j * theta)])


def embed(u, qubits, n):
    """Dense operator of ``u`` on ``qubits`` (first listed = most significant)."""
    k = len(qubits)
    dim = 2 ** n
    rest = [q for q in range(n) if q not in qubits]
    order = list(qubits) + rest
    full = np.kron(u, np.eye(2 ** (n - k)))
    perm = np.argsort(order)
    t = full.reshape([2] * (2 * n))
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(dim, dim)


def test_labels_roundtrip():
    p = PauliString.from_label("-XIZY")
    assert (p.n, p.sign) == (4, -1)
    assert p.label() == "-XIZY"
    assert p.sparse_label() == "-X0 Z2 Y3"
    assert PauliString.from_sparse("X13 Y9 Z8", 14).sparse_label() == "Z8 Y9 X13"
    assert PauliString.identity(3).sparse_label() == "I"


def test_sparse_parser_rejects_bad_input():
    with pytest.raises(ValueError, match="twice"):
        PauliString.from_sparse("Z1 X1", 3)
    with pytest.raises(ValueError):
        PauliString.from_sparse("Q1", 3)
    with pytest.raises(ValueError):
        PauliString.from_sparse("Z5", 3)


def test_weight_and_overlap():
    assert weight(PauliString.from_label("XIZY")) == 3
    assert overlap_with_zero(PauliString.from_label("ZIZ")) == 1
    assert overlap_with_zero(PauliString.from_label("-ZII")) == -1
    assert overlap_with_zero(PauliString.from_label("ZXI")) == 0


@pytest.mark.parametrize("kind", sorted(GATE_ARITY))
def test_tables_are_signed_permutations(kind):
    table = CLIFFORD_TABLES[kind]
    assert len(table) == 4 ** GATE_ARITY[kind]
    assert sorted(o for o, _ in table) == list(range(len(table)))
    assert table[0] == (0, 0)


def test_known_conjugations():
    # H swaps X and Z; S^dagger X S = -Y; CX spreads X from control and Z from target
    cases = [
        ("H", (0,), "XI", "ZI"), ("H", (0,), "YI", "-YI"),
        ("S", (0,), "XI", "-YI"), ("S", (0,), "YI", "XI"),
        ("Sdg", (0,), "XI", "YI"),
        ("CX", (0, 1), "XI", "XX"), ("CX", (0, 1), "IZ", "ZZ"),
        ("CX", (0, 1), "ZI", "ZI"), ("CX", (0, 1), "YI", "YX"),
        ("CZ", (0, 1), "XI", "XZ"),
    ]
    for kind, qs, src, dst in cases:
        got = conjugate_adjoint(PauliString.from_label(src), CliffordGate(kind, qs))
        assert got == PauliString.from_label(dst), (kind, src)


@settings(max_examples=150, deadline=None)
@given(paulis(4), st.sampled_from(sorted(GATE_ARITY)), st.data())
def test_conjugation_matches_matrices(p, kind, data):
    k = GATE_ARITY[kind]
    if p.n < k:
        return
    qs = tuple(data.draw(st.permutations(range(p.n)))[:k])
    g = CliffordGate(kind, qs)
    u = embed(GATE_MATRICES[kind], qs, p.n)
    want = u.conj().T @ p.to_matrix() @ u
    assert np.allclose(conjugate_adjoint(p, g).to_matrix(), want)


@given(paulis(5), st.data())
def test_involutions_and_inverse_pairs(p, data):
    q = data.draw(st.integers(0, p.n - 1))
    for kind in ("H", "X", "Y", "Z"):
        g = CliffordGate(kind, (q,))
        assert conjugate_adjoint(conjugate_adjoint(p, g), g) == p
    s, sdg = CliffordGate("S", (q,)), CliffordGate("Sdg", (q,))
    assert conjugate_adjoint(conjugate_adjoint(p, s), sdg) == p
    if p.n >= 2:
        a, b = data.draw(st.permutations(range(p.n)))[:2]
        for kind in ("CX", "CZ"):
            g = CliffordGate(kind, (a, b))
            assert conjugate_adjoint(conjugate_adjoint(p, g), g) == p


@given(paulis(5), st.data(), st.floats(-4, 4))
def test_rz_split_matches_heisenberg_action(p, data, theta):
    q = data.draw(st.integers(0, p.n - 1))
    u = embed(rz_matrix(theta), (q,), p.n)
    want = u.conj().T @ p.to_matrix() @ u
    out = rz_split(p, q)
    if isinstance(out, NoSplit):
        assert p.local(q) in "IZ"
        assert np.allclose(out.operator.to_matrix(), want)
    else:
        assert isinstance(out, Split)
        got = np.cos(theta) * out.cos_operator.to_matrix() + np.sin(theta) * out.sin_operator.to_matrix()
        assert np.allclose(got, want)


def test_rz_split_examples():
    out = rz_split(PauliString.from_label("X"), 0)
    assert out.cos_operator == PauliString.from_label("X")
    assert out.sin_operator == PauliString.from_label("-Y")
    out = rz_split(PauliString.from_label("Y"), 0)
    assert out.sin_operator == PauliString.from_label("X")
    assert isinstance(rz_split(PauliString.from_label("Z"), 0), NoSplit)


def test_gate_validation():
    with pytest.raises(ValueError):
        CliffordGate("T", (0,))
    with pytest.raises(ValueError):
        CliffordGate("CX", (1, 1))
    with pytest.raises(IndexError):
        conjugate_adjoint(PauliString.from_label("XX"), CliffordGate("CX", (0, 2)))
