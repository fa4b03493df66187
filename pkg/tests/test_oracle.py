import numpy as np
import pytest

from paulisurrogate.circuit import ParamCircuit, Rz
from paulisurrogate.oracle import (CapacityError, exact_expectation, exact_path_sum, expectations,
                                   random_circuit, statevectors)
from paulisurrogate.pauli import CliffordGate, PauliString

H = CliffordGate


def rx_circuit():
    return ParamCircuit(1, (H("H", (0,)), Rz(0, 0), H("H", (0,))), 1)


def test_empty_circuit():
    c = ParamCircuit(1, (), 0)
    assert exact_expectation(c, [], PauliString.single(1, 0)) == 1.0


def test_rx_gives_cosine():
    rng = np.random.default_rng(0)
    theta = rng.uniform(-np.pi, np.pi, 10)
    got = expectations(rx_circuit(), theta[:, None], PauliString.single(1, 0))
    assert np.allclose(got, np.cos(theta), atol=1e-14)


def test_rzz_layer_on_plus_states():
    # |++> then exp(+i pi/4 ZZ): the X1 expectation vanishes and Y0 Z1 becomes 1
    c = ParamCircuit(2, (H("H", (0,)), H("H", (1,)), H("CX", (0, 1)), Rz(1, 0), H("CX", (0, 1))), 1)
    psi = statevectors(c, [[-np.pi / 2]])[0].reshape(4)
    plus = np.ones(4) / 2
    zz = np.diag([1, -1, -1, 1])
    want = np.diag(np.exp(0.25j * np.pi * np.diag(zz))) @ plus
    assert np.allclose(psi, want)
    assert exact_expectation(c, [-np.pi / 2], PauliString.from_label("XI")) == pytest.approx(0, abs=1e-12)
    assert abs(exact_expectation(c, [-np.pi / 2], PauliString.from_label("YZ"))) == pytest.approx(1)


def test_norm_preserved():
    rng = np.random.default_rng(1)
    for _ in range(20):
        c = random_circuit(rng, 5, 8, 12)
        psi = statevectors(c, rng.uniform(-np.pi, np.pi, (3, c.num_params)))
        norms = np.sum(np.abs(psi.reshape(3, -1)) ** 2, axis=1)
        assert np.allclose(norms, 1, atol=1e-12)


def test_norm_after_every_gate():
    rng = np.random.default_rng(2)
    c = random_circuit(rng, 4, 10, 20, num_params=1)
    first = next(i for i, op in enumerate(c.ops) if isinstance(op, Rz))
    for i in range(first + 1, len(c.ops) + 1):
        psi = statevectors(ParamCircuit(c.n, c.ops[:i], 1), [[0.83]])
        assert abs(np.sum(np.abs(psi) ** 2) - 1) < 1e-12


def test_single_rz_path_sum():
    s = exact_path_sum(ParamCircuit(1, (Rz(0, 0),), 1), PauliString.single(1, 0))
    assert dict(s.terms) == {(): 1}


def test_two_oracles_agree():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 7))
        m = int(rng.integers(1, 13))
        c = random_circuit(rng, n, m, int(rng.integers(0, 15)), num_params=int(rng.integers(1, m + 1)))
        obs = PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n)) | 1)
        s = exact_path_sum(c, obs)
        rows = rng.uniform(-np.pi, np.pi, (5, c.num_params))
        worst = max(worst, np.max(np.abs(s.evaluate_many(rows) - expectations(c, rows, obs))))
    assert worst < 1e-10


def test_capacity_limits():
    with pytest.raises(CapacityError):
        statevectors(ParamCircuit(23, (Rz(0, 0),), 1), [[0.0]])
    c = ParamCircuit(1, tuple(Rz(0, 0) for _ in range(21)), 1)
    with pytest.raises(CapacityError):
        exact_path_sum(c, PauliString.single(1, 0))


def test_random_circuit_is_seeded():
    a = random_circuit(np.random.default_rng(7), 5, 10, 10)
    b = random_circuit(np.random.default_rng(7), 5, 10, 10)
    assert a == b and a.m == 10
