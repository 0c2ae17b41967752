import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qwork import qop_core as qc

rng = np.random.default_rng(7)


def random_density(dim, rho_rng=rng):
    z = rho_rng.normal(size=(dim, dim)) + 1j * rho_rng.normal(size=(dim, dim))
    m = z @ qc.dagger(z)
    return m / np.trace(m)


def test_apply_no_renormalization():
    # a lone non-unitary Kraus operator shrinks the trace and stays shrunk
    half = qc.QuantumChannel([0.5 * np.eye(2)])
    out = qc.apply(half, np.eye(2, dtype=complex) / 2)
    assert abs(np.trace(out) - 0.25) < 1e-12


def test_phase_damping_action():
    p = 0.3
    ch = qc.standard_channel("phase_damping", p=p)
    rho = random_density(2)
    out = qc.apply(ch, rho)
    # off-diagonals scale by 1-2p, diagonals untouched
    assert abs(out[0, 0] - rho[0, 0]) < 1e-12
    assert abs(out[0, 1] - (1 - 2 * p) * rho[0, 1]) < 1e-12


def test_bit_flip_z_contraction():
    p = 0.2
    ch = qc.standard_channel("bit_flip", p=p)
    out = qc.apply(ch, qc.SZ)
    assert np.abs(out - (2 * p - 1) * qc.SZ).max() < 1e-12


def test_amplitude_damping_fixed_point():
    ch = qc.standard_channel("amplitude_damping", gamma=0.37)
    ground = np.diag([1.0, 0.0]).astype(complex)
    assert np.abs(qc.apply(ch, ground) - ground).max() < 1e-12
    excited = np.diag([0.0, 1.0]).astype(complex)
    out = qc.apply(ch, excited)
    assert abs(out[0, 0] - 0.37) < 1e-12


def test_generalized_amplitude_damping_steady_state():
    g, p = 0.6, 0.25
    ch = qc.standard_channel("generalized_amplitude_damping", gamma=g, p=p)
    assert ch.trace_preserving
    # repeated application drives any state to diag(p, 1-p) as gamma -> 1
    full = qc.standard_channel("generalized_amplitude_damping", gamma=1.0, p=p)
    out = qc.apply(full, random_density(2))
    assert np.abs(out - np.diag([p, 1 - p])).max() < 1e-12


def test_bosonic_ad_completeness_and_truncation():
    for cutoff in (0, 1, 5, 20):
        ch = qc.standard_channel("bosonic_ad", cutoff=cutoff, gamma=0.15)
        assert len(ch.kraus) == cutoff + 1
        s = sum(qc.dagger(a) @ a for a in ch.kraus)
        assert np.abs(s - np.eye(cutoff + 1)).max() < 1e-10


def test_bosonic_ad_single_photon_matches_qubit_ad():
    g = 0.22
    bos = qc.standard_channel("bosonic_ad", cutoff=1, gamma=g)
    qub = qc.standard_channel("amplitude_damping", gamma=g)
    assert qc.channels_equal(bos, qub, tol=1e-12)


def test_choi_round_trip_small():
    ch = qc.standard_channel("depolarizing", p=0.4)
    back = qc.kraus_from_choi(qc.choi_of(ch))
    assert qc.channels_equal(ch, back, tol=1e-12)
    # canonical set is minimal: depolarizing has Choi rank 4
    assert len(back.kraus) == 4


def test_kraus_from_choi_rejects_negative():
    ch = qc.standard_channel("amplitude_damping", gamma=0.5)
    c = qc.choi_of(ch)
    bad = c.mat - 1e-3 * np.eye(4)
    with pytest.raises(qc.NotCompletelyPositiveError):
        qc.kraus_from_choi(qc.ChoiMatrix(bad, 2, 2))


def test_kraus_from_choi_clamps_tiny_negative():
    ch = qc.standard_channel("phase_damping", p=0.1)
    c = qc.choi_of(ch)
    wiggle = c.mat - 5e-10 * np.eye(4)
    back = qc.kraus_from_choi(qc.ChoiMatrix(wiggle, 2, 2))
    assert qc.channels_equal(ch, back, tol=1e-8)


def test_choi_state_normalization_views():
    ch = qc.standard_channel("amplitude_damping", gamma=0.3)
    c = qc.choi_of(ch)
    st_form = c.as_state()
    assert abs(np.trace(st_form.mat) - 1.0) < 1e-12
    assert np.abs(st_form.as_unnormalized().mat - c.mat).max() < 1e-12


def test_compose_and_tensor():
    pd = qc.standard_channel("phase_damping", p=0.2)
    ad = qc.standard_channel("amplitude_damping", gamma=0.3)
    rho = random_density(2)
    both = qc.compose(pd, ad)
    assert np.abs(qc.apply(both, rho) - qc.apply(pd, qc.apply(ad, rho))).max() < 1e-12
    pair = qc.tensor(pd, ad)
    r2 = random_density(4)
    direct = sum(np.kron(a, b) @ r2 @ qc.dagger(np.kron(a, b))
                 for a in pd.kraus for b in ad.kraus)
    assert np.abs(qc.apply(pair, r2) - direct).max() < 1e-12


def test_partial_trace():
    a = random_density(2)
    b = random_density(3)
    joint = np.kron(a, b)
    assert np.abs(qc.partial_trace(joint, [2, 3], 1) - a).max() < 1e-12
    assert np.abs(qc.partial_trace(joint, [2, 3], 0) - b).max() < 1e-12


def test_json_round_trip():
    ch = qc.standard_channel("generalized_amplitude_damping", gamma=0.3, p=0.7)
    text = ch.to_json()
    back = qc.QuantumChannel.from_json(text)
    assert qc.channels_equal(ch, back, tol=0)
    d = json.loads(text)
    assert d["dim_in"] == 2 and d["trace_preserving"] is True


@settings(deadline=None, max_examples=25)
@given(st.integers(min_value=0, max_value=10_000))
def test_round_trip_random_channels(seed):
    r = np.random.default_rng(seed)
    dim = int(r.integers(2, 5))
    ch = qc.random_channel(dim, rng=r)
    back = qc.kraus_from_choi(qc.choi_of(ch))
    assert qc.channels_equal(ch, back, tol=1e-9)
    assert len(back.kraus) <= dim * dim


def test_canonical_kraus_orthogonality():
    # canonical Kraus operators are mutually orthogonal under tr(A†B)
    ch = qc.random_channel(3, rng=np.random.default_rng(5))
    back = qc.kraus_from_choi(qc.choi_of(ch))
    for i, a in enumerate(back.kraus):
        for j, b in enumerate(back.kraus):
            ip = np.trace(qc.dagger(a) @ b)
            if i != j:
                assert abs(ip) < 1e-9


def test_tomography_method1_phase_damping():
    ch = qc.standard_channel("phase_damping", p=0.25)
    got = qc.tomography_method1(lambda rho: qc.apply(ch, rho), 2)
    assert qc.channels_equal(got, ch, tol=1e-8)


def test_tomography_method2_phase_damping():
    ch = qc.standard_channel("phase_damping", p=0.25)
    got = qc.tomography_method2(lambda rho: qc.apply(ch, rho), 2)
    assert qc.channels_equal(got, ch, tol=1e-8)


def test_tomography_methods_agree_dim4():
    r = np.random.default_rng(11)
    ch = qc.random_channel(4, n_kraus=3, rng=r)
    oracle = lambda rho: qc.apply(ch, rho)
    got1 = qc.tomography_method1(oracle, 4)
    got2 = qc.tomography_method2(oracle, 4)
    assert qc.channels_equal(got1, ch, tol=1e-8)
    assert qc.channels_equal(got2, ch, tol=1e-8)
    assert qc.channels_equal(got1, got2, tol=1e-8)


def test_tomography_method2_joint_state_input():
    ch = qc.standard_channel("amplitude_damping", gamma=0.4)
    phi = np.zeros(4, dtype=complex)
    phi[0] = phi[3] = 1 / math.sqrt(2)
    pp = np.outer(phi, phi.conj())
    joint = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            joint[i * 2:(i + 1) * 2, j * 2:(j + 1) * 2] = qc.apply(
                ch, pp[i * 2:(i + 1) * 2, j * 2:(j + 1) * 2])
    got = qc.tomography_method2(joint_state=joint)
    assert qc.channels_equal(got, ch, tol=1e-9)


def test_deviation_map_unital_offset_zero():
    ch = qc.standard_channel("depolarizing", p=0.3)
    offset, lin = qc.deviation_map(ch)
    assert np.abs(offset).max() < 1e-12
    dev = qc.SZ * 0.2
    assert np.abs(lin(dev) - qc.apply(ch, dev)).max() < 1e-12


def test_deviation_map_tracks_normalized_evolution():
    ch = qc.standard_channel("amplitude_damping", gamma=0.35)
    offset, lin = qc.deviation_map(ch)
    rho = random_density(2)
    dev = rho - np.eye(2) / 2
    evolved_dev = offset + lin(dev)
    assert np.abs((np.eye(2) / 2 + evolved_dev) - qc.apply(ch, rho)).max() < 1e-12


def test_linear_rep_phase_damping():
    p = 0.3
    rep = qc.linear_rep(qc.standard_channel("phase_damping", p=p))
    assert rep.trace_preserving and rep.unital
    expect = np.diag([1 - 2 * p, 1 - 2 * p, 1.0])
    assert np.abs(rep.m - expect).max() < 1e-12


def test_linear_rep_amplitude_damping_affine():
    g = 0.4
    rep = qc.linear_rep(qc.standard_channel("amplitude_damping", gamma=g))
    assert rep.trace_preserving and not rep.unital
    assert np.abs(rep.v2 - np.array([0, 0, g])).max() < 1e-12
    expect = np.diag([math.sqrt(1 - g), math.sqrt(1 - g), 1 - g])
    assert np.abs(rep.m - expect).max() < 1e-12


def test_is_cp_detects_transpose():
    # the transpose map is positive but not completely positive
    rep = qc.LinearRep(1.0, np.zeros(3), np.zeros(3), np.diag([1.0, -1.0, 1.0]))
    ok, wmin = qc.is_cp(rep)
    assert not ok and wmin < -0.4
    good = qc.linear_rep(qc.standard_channel("depolarizing", p=0.2))
    ok, _ = qc.is_cp(good)
    assert ok


def test_su2_from_so3_round_trip():
    r = np.random.default_rng(3)
    for _ in range(50):
        u = qc.random_unitary(2, r)
        u = u / np.sqrt(np.linalg.det(u))  # special unitary
        rot = np.empty((3, 3))
        for j, sj in enumerate((qc.SX, qc.SY, qc.SZ)):
            out = u @ sj @ qc.dagger(u)
            for i, si in enumerate((qc.SX, qc.SY, qc.SZ)):
                rot[i, j] = np.real(np.trace(si @ out)) / 2
        lifted = qc.su2_from_so3(rot)
        assert qc.unitaries_equal_up_to_phase(lifted, u, tol=1e-9)


def test_unital_decompose_pauli_mixture():
    terms_in = [(0.5, qc.I2), (0.3, qc.SX), (0.2, qc.SZ)]
    ch = qc.QuantumChannel([math.sqrt(p) * u for p, u in terms_in])
    terms = qc.unital_qubit_decompose(ch)
    probs = sorted(p for p, _ in terms)
    assert abs(sum(probs) - 1.0) < 1e-10
    assert np.abs(np.array(probs) - np.array([0.2, 0.3, 0.5])).max() < 1e-10
    rebuilt = qc.QuantumChannel([math.sqrt(p) * u for p, u in terms])
    assert qc.channels_equal(rebuilt, ch, tol=1e-9)


def test_unital_decompose_random_mixtures():
    r = np.random.default_rng(17)
    for _ in range(20):
        k = int(r.integers(2, 5))
        w = r.dirichlet(np.ones(k))
        us = [qc.random_unitary(2, r) for _ in range(k)]
        ch = qc.QuantumChannel([math.sqrt(p) * u for p, u in zip(w, us)])
        terms = qc.unital_qubit_decompose(ch)
        assert abs(sum(p for p, _ in terms) - 1.0) < 1e-9
        assert min(p for p, _ in terms) > -1e-10
        rebuilt = qc.QuantumChannel([math.sqrt(p) * u for p, u in terms])
        assert qc.channels_equal(rebuilt, ch, tol=1e-8)


def test_unital_decompose_rejects_reflection():
    # Bloch reflection: positive, trace preserving, unital, but not CP
    rep = qc.LinearRep(1.0, np.zeros(3), np.zeros(3), np.diag([1.0, -1.0, 1.0]))
    with pytest.raises(qc.NotCompletelyPositiveError):
        qc.unital_qubit_decompose(rep)


def test_inversion_needs_half_depolarizing():
    # flipping the whole Bloch ball is only CP after mixing in at least
    # half depolarization; the worst weight at parameter p is exactly p - 1/2
    def composed(p):
        dep = qc.linear_rep(qc.standard_channel("depolarizing", p=p))
        return qc.bloch_inversion().compose(dep)

    for p in (0.5, 0.5 + 1e-6, 0.75, 1.0):
        terms = qc.unital_qubit_decompose(composed(p))
        assert min(q for q, _ in terms) > -1e-10
    for p in (0.0, 0.3, 0.5 - 1e-6):
        with pytest.raises(qc.NotCompletelyPositiveError):
            qc.unital_qubit_decompose(composed(p))
    ok, wmin = qc.is_cp(composed(0.3))
    assert not ok and wmin < -0.01


def test_qutrit_extreme_channel():
    ch, rank = qc.qutrit_extreme_channel()
    assert ch.trace_preserving
    assert rank == 9
    # unital: maximally mixed state is fixed
    eye3 = np.eye(3, dtype=complex) / 3
    assert np.abs(qc.apply(ch, eye3) - eye3).max() < 1e-12


def test_density_matrix_validation():
    qc.DensityMatrix(np.eye(2) / 2).validate()
    qc.DensityMatrix(qc.SZ * 0.3, kind="deviation").validate()
    with pytest.raises(ValueError):
        qc.DensityMatrix(np.eye(2)).validate()
    with pytest.raises(ValueError):
        qc.DensityMatrix(np.diag([1.5, -0.5]).astype(complex)).validate()


def test_channel_rejects_overcomplete_kraus():
    with pytest.raises(ValueError):
        qc.QuantumChannel([np.eye(2), 0.5 * qc.SX])
