from functools import reduce

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from paulisurrogate.circuit import (ParamCircuit, Rz, TfiSpec, Topology, bind, build_tfi_circuit,
                                    coupling_ramp, heavy_hex_127, lightcone_params, load_circuit,
                                    parse_circuit, parse_topology, save_circuit,
                                    snapshot_parameters, tfi_layout, tfi_param_groups,
                                    tfi_parameters)
from paulisurrogate.oracle import exact_expectation, random_circuit
from paulisurrogate.pauli import CliffordGate, PauliString

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def site_op(op, sites, n):
    mats = [op if q in sites else np.eye(2) for q in range(n)]
    return reduce(np.kron, mats)


def trotter_expectation(spec: TfiSpec, theta_h: np.ndarray, theta_j: np.ndarray, obs: PauliString):
    """Dense product of exp(-i theta X/2) and exp(-i theta ZZ/2) layers, independent of the compiler."""
    n = spec.topology.n
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = 1
    for layer in range(spec.field_layers):
        for i in range(n):
            psi = expm(-0.5j * theta_h[layer, i] * site_op(X, {i}, n)) @ psi
        if layer < spec.layers:
            for e, (i, j) in enumerate(spec.topology.edges):
                zz = site_op(Z, {i}, n) @ site_op(Z, {j}, n)
                psi = expm(-0.5j * theta_j[layer, e] * zz) @ psi
    return float(np.real(psi.conj() @ obs.to_matrix() @ psi))


def test_heavy_hex_asset():
    topo = heavy_hex_127()
    assert topo.n == 127
    assert len(topo.edges) == 144
    degrees = np.bincount(np.array(topo.edges).ravel(), minlength=127)
    assert degrees.max() == 3 and degrees.min() >= 1


@pytest.mark.parametrize("layers,coupling,field,extra,m,cx", [
    (5, "clifford_fixed", "shared", False, 635, 1440),
    (5, "clifford_fixed", "shared", True, 762, 1440),
    (20, "per_edge", "per_site", False, 5420, 5760),
])
def test_gate_counts(layers, coupling, field, extra, m, cx):
    spec = TfiSpec(heavy_hex_127(), layers, coupling, field, extra)
    c = build_tfi_circuit(spec)
    assert c.m == m
    assert c.count("CX") == cx


def test_parameter_counts():
    topo = Topology.chain(4)
    assert build_tfi_circuit(TfiSpec(topo, 3)).num_params == 1
    assert build_tfi_circuit(TfiSpec(topo, 3, "shared", "shared")).num_params == 2
    free = build_tfi_circuit(TfiSpec(topo, 3, "per_edge", "per_site"))
    assert free.num_params == free.m == 3 * (4 + 3)
    assert build_tfi_circuit(TfiSpec(topo, 3, "per_edge", "per_site", True)).m == 3 * 7 + 4


def test_topology_parsing():
    t = parse_topology("3\n0 1\n1 2\n")
    assert t == Topology(3, ((0, 1), (1, 2)))
    assert parse_topology("# comment\n3\n2 1\n0 1\n").edges == ((0, 1), (1, 2))
    for bad in ("3\n0 0\n", "3\n0 3\n", "3\n0 1\n1 0\n"):
        with pytest.raises(ValueError):
            parse_topology(bad)


def test_circuit_validation():
    with pytest.raises(ValueError):
        ParamCircuit(2, (Rz(0, 1),), 2)  # parameter 0 unused
    with pytest.raises(ValueError):
        ParamCircuit(2, (Rz(2, 0),), 1)
    with pytest.raises(ValueError):
        ParamCircuit(2, (CliffordGate("CX", (0, 2)), Rz(0, 0)), 1)


def test_bind_broadcasts_shared_field():
    spec = TfiSpec(heavy_hex_127(), 5)
    c = build_tfi_circuit(spec)
    angles = bind(tfi_parameters(spec, 0.3), c)
    assert angles.shape == (635,) and np.all(angles == 0.3)
    one = ParamCircuit(1, (Rz(0, 0),), 1)
    assert bind([0.7], one).tolist() == [0.7]


def test_tfi_parameters_reject_conflicts():
    spec = TfiSpec(Topology.chain(3), 2)
    with pytest.raises(ValueError, match="conflicting"):
        tfi_parameters(spec, [0.1, 0.2, 0.3])
    free = TfiSpec(Topology.chain(3), 2, "per_edge", "per_site")
    p = tfi_parameters(free, [0.1, 0.2, 0.3], [0.4, 0.5])
    lay = tfi_layout(free)
    assert p[lay.field[1, 2]] == 0.3 and p[lay.coupling[0, 1]] == 0.5


def test_lightcone_hand_trace():
    # Z0 on a 3-site chain: rotations after the ZZ layer touch {0}; before it {0, 1}
    spec = TfiSpec(Topology.chain(3), 1, extra_x_layer=True)
    c = build_tfi_circuit(spec)
    rz = c.rz_ops()
    inside = sorted(lightcone_params(c, PauliString.single(3, 0)))
    assert [rz[i].qubit for i in inside] == [0, 1, 0]
    assert inside == [0, 1, 3]


def test_lightcone_depth_one_single_site():
    c = ParamCircuit(3, (Rz(0, 0), Rz(1, 1), Rz(2, 2)), 3)
    assert lightcone_params(c, PauliString.single(3, 1)) == {1}


def test_lightcone_z62_covers_lattice():
    spec = TfiSpec(heavy_hex_127(), 20, "per_edge", "per_site")
    c = build_tfi_circuit(spec)
    inside = lightcone_params(c, PauliString.single(127, 62))
    assert {c.rz_ops()[i].qubit for i in inside} == set(range(127))


@settings(max_examples=12, deadline=None)
@given(st.integers(2, 4), st.integers(1, 2), st.booleans(), st.booleans(), st.integers(0, 2 ** 31))
def test_compilation_matches_trotter_product(n, layers, ring, extra, seed):
    rng = np.random.default_rng(seed)
    topo = Topology.ring(n) if ring and n > 2 else Topology.chain(n)
    spec = TfiSpec(topo, layers, "per_edge", "per_site", extra)
    th = rng.uniform(-np.pi, np.pi, (spec.field_layers, n))
    tj = rng.uniform(-np.pi, np.pi, (layers, len(topo.edges)))
    c = build_tfi_circuit(spec)
    obs = PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1, 1 << n)))
    got = exact_expectation(c, tfi_parameters(spec, th, tj), obs)
    assert abs(got - trotter_expectation(spec, th, tj, obs)) < 1e-10


@settings(max_examples=12, deadline=None)
@given(st.integers(2, 4), st.integers(1, 3), st.booleans(), st.integers(0, 2 ** 31))
def test_fixed_coupling_equals_free_coupling_at_minus_half_pi(n, layers, extra, seed):
    rng = np.random.default_rng(seed)
    topo = Topology.chain(n)
    fixed = TfiSpec(topo, layers, "clifford_fixed", "per_site", extra)
    free = TfiSpec(topo, layers, "per_edge", "per_site", extra)
    th = rng.uniform(-np.pi, np.pi, (fixed.field_layers, n))
    obs = PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1, 1 << n)))
    a = exact_expectation(build_tfi_circuit(fixed), tfi_parameters(fixed, th), obs)
    b = exact_expectation(build_tfi_circuit(free), tfi_parameters(free, th, -np.pi / 2), obs)
    assert abs(a - b) < 1e-10


def test_circuit_text_roundtrip(tmp_path):
    rng = np.random.default_rng(4)
    for _ in range(20):
        c = random_circuit(rng, 4, 6, 10, num_params=3)
        assert parse_circuit(c.to_text()) == c
    c = build_tfi_circuit(TfiSpec(Topology.chain(3), 2, "shared", "shared"))
    save_circuit(c, tmp_path / "c.txt")
    back = load_circuit(tmp_path / "c.txt")
    assert back == c and back.digest() == c.digest()
    assert back.param_labels == c.param_labels


def test_param_groups():
    spec = TfiSpec(Topology.chain(4), 2, "per_edge", "per_site")
    g = tfi_param_groups(spec)
    assert sorted(g["field"] + g["coupling"]) == g["all"]
    assert set(g["field_even"]) | set(g["field_odd"]) == set(g["field"])


def test_coupling_ramp_endpoints():
    topo = heavy_hex_127()
    ramp = coupling_ramp(topo, 0.0, -3.0)
    assert ramp[0] == 0.0 and ramp[-1] == -3.0
    assert np.allclose(np.diff(ramp), -3.0 / 143)


def test_snapshot_zero_time_is_initial_pattern():
    spec = TfiSpec(Topology.chain(5), 2, "per_edge", "per_site")
    c = build_tfi_circuit(spec)
    params = snapshot_parameters(spec, 1.0, 1.0, 0.0, flipped=[1, 3])
    for q in range(5):
        want = -1.0 if q in (1, 3) else 1.0
        assert exact_expectation(c, params, PauliString.single(5, q)) == pytest.approx(want, abs=1e-12)
