import numpy as np
import pytest

from cfris.channel import (
    ChannelSet,
    LinkKind,
    LinkSpec,
    assemble_equivalent,
    draw_channel,
    draw_channel_set,
    path_gain,
    path_loss_db,
    slice_group,
    steering_vector,
    stream_rng,
)
from cfris.errors import ValidationError


def los_link(d=50.0, kf=9.0, f=2.4):
    return LinkSpec(LinkKind.AP_TO_SURFACE, d, kf, f)


def direct_link(d=51.0, f=2.4):
    return LinkSpec(LinkKind.AP_TO_USER, d, None, f)


def test_path_loss_frozen_values():
    # hand-evaluated from the two-slope formulas at f = 2.4 GHz
    assert path_loss_db(los_link(d=50.0)) == pytest.approx(72.98156492962454, abs=1e-9)
    assert path_loss_db(direct_link(d=51.0)) == pytest.approx(95.25331774729602, abs=1e-9)
    with pytest.warns(UserWarning):
        short = LinkSpec(LinkKind.SURFACE_TO_USER, 2.5, 9.0, 2.4)
        assert path_loss_db(short) == pytest.approx(44.358905025016945, abs=1e-9)


def test_path_gain_inverts_loss():
    link = los_link()
    assert path_gain(link) == pytest.approx(10 ** (-path_loss_db(link) / 10.0), rel=1e-14)


def test_link_spec_validation():
    with pytest.raises(ValidationError):
        LinkSpec(LinkKind.AP_TO_SURFACE, -1.0, 9.0, 2.4)
    with pytest.raises(ValidationError):
        LinkSpec(LinkKind.AP_TO_USER, 51.0, 9.0, 2.4)  # direct links are Rayleigh
    assert direct_link().rician_linear == 0.0
    assert los_link(kf=9.0).rician_linear == pytest.approx(10 ** 0.9)


def test_steering_vector_definition():
    n, ang = 4, 0.3
    v = steering_vector(n, ang)
    expected = np.exp(-1j * np.pi * np.arange(n) * np.sin(ang))
    assert np.allclose(v, expected)
    assert np.allclose(steering_vector(3, 0.0), np.ones(3))
    with pytest.raises(ValidationError):
        steering_vector(3, 2.0)


def test_stream_rng_independent_and_reproducible():
    a = stream_rng(1, 0, 0).standard_normal(4)
    b = stream_rng(1, 0, 0).standard_normal(4)
    c = stream_rng(1, 0, 1).standard_normal(4)
    d = stream_rng(1, 1, 0).standard_normal(4)
    e = stream_rng(2, 0, 0).standard_normal(4)
    assert np.array_equal(a, b)
    for other in (c, d, e):
        assert not np.array_equal(a, other)


def test_draw_channel_scaling_and_rician_limits():
    link = los_link(kf=9.0)
    rows, cols, trials = 3, 2, 4000
    acc = 0.0
    for t in range(trials):
        h = draw_channel(rows, cols, link, stream_rng(0, t, 0))
        acc += np.linalg.norm(h) ** 2
    # E||H||_F^2 = gain * rows * cols for both LoS and NLoS parts
    expected = path_gain(link) * rows * cols
    assert acc / trials == pytest.approx(expected, rel=0.05)

    # infinite K-factor limit: deterministic rank-one LoS component
    hard = LinkSpec(LinkKind.AP_TO_SURFACE, 50.0, 300.0, 2.4)
    h = draw_channel(rows, cols, hard, stream_rng(0, 0, 0))
    assert np.linalg.matrix_rank(h, tol=1e-8 * np.linalg.norm(h)) == 1


def test_draw_channel_set_shapes_and_determinism():
    links = {
        LinkKind.AP_TO_SURFACE: los_link(),
        LinkKind.SURFACE_TO_USER: LinkSpec(LinkKind.SURFACE_TO_USER, 12.0, 9.0, 2.4),
        LinkKind.AP_TO_USER: direct_link(),
    }
    kwargs = dict(
        num_aps=2, num_users=3, user_antennas=2, ap_antennas=4,
        surface_sizes=[8, 6], links=links, master_seed=5, trial=2,
    )
    cs = draw_channel_set(**kwargs)
    assert cs.num_surfaces == 2 and cs.num_aps == 2 and cs.num_users == 3
    assert cs.h_tx[0][0].shape == (8, 4)
    assert cs.h_tx[1][1].shape == (6, 4)
    assert cs.h_rx[0][2].shape == (2, 8)
    assert cs.h_direct[1][2].shape == (2, 4)
    assert cs.h_tx_bar(0).shape == (8, 8)
    assert cs.h_bar_direct(0).shape == (2, 8)
    cs2 = draw_channel_set(**kwargs)
    assert np.array_equal(cs.h_tx[0][0], cs2.h_tx[0][0])
    assert np.array_equal(cs.h_direct[1][2], cs2.h_direct[1][2])
    # a different trial redraws everything, including the angles
    cs3 = draw_channel_set(**{**kwargs, "trial": 3})
    assert not np.array_equal(cs.h_tx[0][0], cs3.h_tx[0][0])


def test_assemble_equivalent_matches_naive_sum():
    links = {
        LinkKind.AP_TO_SURFACE: los_link(),
        LinkKind.SURFACE_TO_USER: LinkSpec(LinkKind.SURFACE_TO_USER, 12.0, 9.0, 2.4),
        LinkKind.AP_TO_USER: direct_link(),
    }
    cs = draw_channel_set(2, 2, 2, 3, [4, 4], links, master_seed=0, trial=0)
    rng = np.random.default_rng(11)
    thetas = []
    for _ in range(2):
        q, _ = np.linalg.qr(rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4)))
        thetas.append(q @ q.T)
    k = 1
    e = assemble_equivalent(cs, thetas, k)
    blocks = []
    for l in range(2):
        blk = cs.h_direct[l][k].copy()
        for b in range(2):
            blk = blk + cs.h_rx[b][k] @ thetas[b] @ cs.h_tx[b][l]
        blocks.append(blk)
    assert np.allclose(e, np.hstack(blocks), atol=1e-13)

    # with the direct path disabled the direct term drops out exactly
    cs_nd = ChannelSet(cs.h_tx, cs.h_rx, cs.h_direct, include_direct=False)
    e_nd = assemble_equivalent(cs_nd, thetas, k)
    assert np.allclose(
        e_nd, e - np.hstack([cs.h_direct[l][k] for l in range(2)]), atol=1e-13
    )
    assert np.all(cs_nd.h_bar_direct(k) == 0)


def test_slice_group_one_based():
    rng = np.random.default_rng(12)
    h_rx = rng.standard_normal((2, 6)) + 0j
    h_tx = rng.standard_normal((6, 4)) + 0j
    theta = np.diag(np.exp(1j * rng.uniform(0, 2 * np.pi, 6)))
    hr, th, ht = slice_group(h_rx, theta, h_tx, g=2, group_size=2)
    assert np.array_equal(hr, h_rx[:, 2:4])
    assert np.array_equal(th, theta[2:4, 2:4])
    assert np.array_equal(ht, h_tx[2:4, :])
    with pytest.raises(ValidationError):
        slice_group(h_rx, theta, h_tx, g=0, group_size=2)
    with pytest.raises(ValidationError):
        slice_group(h_rx, theta, h_tx, g=4, group_size=2)
