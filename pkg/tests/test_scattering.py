import numpy as np
import pytest

from cfris.beamformer import compute_auxiliaries, compute_A_B, surrogate_value
from cfris.channel import LinkKind, LinkSpec, draw_channel_set
from cfris.errors import ConfigError
from cfris.linalg import real_inner
from cfris.scattering import (
    Architecture,
    Connectivity,
    assemble_theta,
    coupling_diagnostic,
    decompose_B,
    grad_theta_group,
    init_scattering,
    local_grad_theta_b,
    riemannian_ascent,
    theta_gradient,
    validate,
)

from conftest import crandn

_LN2 = np.log(2.0)


def test_architecture_labels():
    assert Architecture.from_label("sc", 8) == Architecture(Connectivity.SINGLE, 1)
    assert Architecture.from_label("fc", 8) == Architecture(Connectivity.FULL, 8)
    assert Architecture.from_label("gc4", 8) == Architecture(Connectivity.GROUP, 4)
    assert Architecture.from_label("gc4", 8).label == "gc4"
    assert Architecture.from_label("sc", 8).num_groups(8) == 8
    assert Architecture.from_label("gc2", 8).num_groups(8) == 4
    with pytest.raises(ConfigError):
        Architecture.from_label("gc3", 8)  # 8 not divisible by 3
    with pytest.raises(ConfigError):
        Architecture.from_label("bogus", 8)
    with pytest.raises(ConfigError):
        Architecture(Connectivity.SINGLE, 2)


def test_assemble_theta_block_structure():
    rng = np.random.default_rng(0)
    arch = Architecture.from_label("gc2", 6)
    state = init_scattering(arch, 6, rng)
    theta = state.theta
    # symmetric, unitary, block-diagonal by construction
    rep = validate(theta, arch)
    assert rep.passed
    assert np.allclose(theta, assemble_theta(state.factors))
    # off-block entries are exactly zero
    assert np.all(theta[0:2, 2:6] == 0)
    # each diagonal block is the Takagi image of its factor
    assert np.allclose(theta[2:4, 2:4], state.factors[1] @ state.factors[1].T)


def test_init_scattering_deterministic():
    arch = Architecture.from_label("fc", 5)
    s1 = init_scattering(arch, 5, np.random.default_rng(3))
    s2 = init_scattering(arch, 5, np.random.default_rng(3))
    assert np.array_equal(s1.theta, s2.theta)


def test_validate_detects_violations():
    arch = Architecture.from_label("sc", 3)
    bad = np.eye(3, dtype=complex)
    bad[0, 1] = 0.1  # breaks symmetry, unitarity, and the diagonal pattern
    rep = validate(bad, arch)
    assert rep.symmetry > 1e-3 and rep.unitarity > 1e-3 and rep.structure > 1e-3
    assert not rep.passed
    assert validate(np.diag(np.exp(1j * np.array([0.1, 0.2, 0.3]))), arch).passed


def _gradient_setup(seed, m=2, r=4, num_aps=2, na=2, num_users=2, n0=0.1):
    rng = np.random.default_rng(seed)
    nt = num_aps * na
    hbar = [crandn(rng, m, nt) for _ in range(num_users)]
    hr = [crandn(rng, m, r) for _ in range(num_users)]
    htx = crandn(rng, r, nt)
    v = [0.5 * crandn(rng, nt, m) for _ in range(num_users)]
    q, _ = np.linalg.qr(crandn(rng, r, r))
    theta = q @ q.T

    def e_of(t):
        return [hbar[k] + hr[k] @ t @ htx for k in range(num_users)]

    aux = compute_auxiliaries(e_of(theta), v, n0)

    def surrogate_nats(t):
        return surrogate_value(e_of(t), v, aux.z, aux.y, n0) * _LN2

    return hbar, hr, htx, v, theta, aux, e_of, surrogate_nats


@pytest.mark.parametrize("seed", range(6))
def test_theta_gradient_matches_finite_differences(seed):
    _, hr, htx, v, theta, aux, e_of, s = _gradient_setup(seed)
    g = theta_gradient(hr, htx, e_of(theta), v, aux.y, aux.z)
    rng = np.random.default_rng(100 + seed)
    for _ in range(5):
        d = crandn(rng, *theta.shape)
        h = 1e-6
        fd = (s(theta + h * d) - s(theta - h * d)) / (2 * h)
        an = 2.0 * real_inner(g, d)
        assert fd == pytest.approx(an, rel=1e-5, abs=1e-9)


def test_grad_theta_group_equals_block_of_full_gradient():
    _, hr, htx, v, theta, aux, e_of, _ = _gradient_setup(7)
    g = theta_gradient(hr, htx, e_of(theta), v, aux.y, aux.z)
    gsize = 2
    for gi in (1, 2):
        lo, hi = (gi - 1) * gsize, gi * gsize
        block = grad_theta_group(hr, htx, e_of(theta), v, aux.y, aux.z, gi, gsize)
        assert np.allclose(block, g[lo:hi, lo:hi], atol=1e-12)


def test_local_gradient_equals_full_for_single_surface():
    hbar, hr, htx, v, theta, aux, e_of, _ = _gradient_setup(8)
    g = theta_gradient(hr, htx, e_of(theta), v, aux.y, aux.z)
    gl = local_grad_theta_b(hr, htx, hbar, theta, v, aux.y, aux.z)
    assert np.allclose(gl, g, atol=1e-12)


def _two_surface_setup(seed=0):
    links = {
        LinkKind.AP_TO_SURFACE: LinkSpec(LinkKind.AP_TO_SURFACE, 50.0, 9.0, 2.4),
        LinkKind.SURFACE_TO_USER: LinkSpec(LinkKind.SURFACE_TO_USER, 12.0, 9.0, 2.4),
        LinkKind.AP_TO_USER: LinkSpec(LinkKind.AP_TO_USER, 51.0, None, 2.4),
    }
    cs = draw_channel_set(2, 2, 2, 2, [4, 4], links, master_seed=seed, trial=0)
    rng = np.random.default_rng(200 + seed)
    thetas = []
    for _ in range(2):
        q, _ = np.linalg.qr(crandn(rng, 4, 4))
        thetas.append(q @ q.T)
    return cs, thetas


@pytest.mark.parametrize("seed", range(4))
def test_decompose_B_reconstructs_exactly(seed):
    from cfris.channel import assemble_equivalent

    cs, thetas = _two_surface_setup(seed)
    rng = np.random.default_rng(300 + seed)
    n0 = 1e-9
    e_list = [assemble_equivalent(cs, thetas, k) for k in range(2)]
    scale = 1.0 / np.linalg.norm(e_list[0])
    v = [scale * crandn(rng, 4, 2) for _ in range(2)]
    aux = compute_auxiliaries(e_list, v, n0)
    for k in range(2):
        parts = decompose_B(cs, thetas, aux.y[k], aux.z[k], k)
        # per-surface channels sum to the equivalent channel
        e_sum = cs.h_bar_direct(k) + sum(
            cs.h_rx[b][k] @ thetas[b] @ cs.h_tx_bar(b) for b in range(2)
        )
        assert np.linalg.norm(e_sum - e_list[k]) <= 1e-12 * np.linalg.norm(e_list[k])
        # pairwise terms sum to the full trace matrix B_k
        _, b_full = compute_A_B(e_list[k], aux.y[k], aux.z[k])
        b_sum = sum(parts.values())
        assert np.linalg.norm(b_sum - b_full) <= 1e-12 * np.linalg.norm(b_full)


def test_coupling_diagnostic_ratios():
    cs, thetas = _two_surface_setup(1)
    from cfris.channel import assemble_equivalent

    rng = np.random.default_rng(42)
    e_list = [assemble_equivalent(cs, thetas, k) for k in range(2)]
    v = [1e3 * crandn(rng, 4, 2) for _ in range(2)]
    aux = compute_auxiliaries(e_list, v, 1e-9)
    parts = decompose_B(cs, thetas, aux.y[0], aux.z[0], 0)
    ratios = coupling_diagnostic(parts)
    assert set(ratios) == {(1, 2), (2, 1)}
    for (b, c), val in ratios.items():
        expected = np.linalg.norm(parts[(b, c)]) / np.linalg.norm(parts[(b, b)])
        assert val == pytest.approx(expected, rel=1e-12)


def test_riemannian_ascent_improves_and_preserves_constraints():
    hbar, hr, htx, v, _, _, e_of, _ = _gradient_setup(11, r=6)
    n0 = 0.1
    arch = Architecture.from_label("gc3", 6)
    state = init_scattering(arch, 6, np.random.default_rng(5))

    from cfris.metrics import sum_rate

    def objective(t):
        return sum_rate(e_of(t), v, n0)

    def grad_fn(t):
        aux = compute_auxiliaries(e_of(t), v, n0)
        return theta_gradient(hr, htx, e_of(t), v, aux.y, aux.z)

    f0 = objective(state.theta)
    result = riemannian_ascent(state, grad_fn, objective, max_iters=25)
    assert result.objective >= f0 - 1e-12
    assert result.accepted_steps >= 1
    rep = validate(result.state.theta, arch)
    assert rep.passed
