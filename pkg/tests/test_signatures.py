import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import iterated_integrals, word_exp
from roughswitch.calibration import EngineParams
from roughswitch.engines import simulate_heston
from roughswitch.errors import IndexOutOfRange, InvalidParams, NotGroupLike, UnknownChannel
from roughswitch.signatures import (AugmentedPath, chen_step, levels, log_signature, sig_dim,
                                    signature, signature_stream, tensor_exp, tensor_log,
                                    tensor_product, time_augment, unit)


def random_points(rng, d, n_seg):
    return np.cumsum(np.vstack([np.zeros(d), rng.normal(0, 0.6, (n_seg, d))]), axis=0)


def sig_of(points):
    return signature_stream(points)[-1]


def test_dimensions():
    assert sig_dim(3) == 40
    assert sig_dim(2) == 15
    ens = simulate_heston(EngineParams(rho=0, eta=0.3, xi0=0.04), 100, 0.1, 4, 5, 0)
    assert time_augment(ens).d == 3
    assert time_augment(ens, "time,vol").d == 2
    with pytest.raises(UnknownChannel):
        time_augment(ens, "time,skew")


def test_flat_channels_for_constant_inputs():
    ens = simulate_heston(EngineParams(rho=0, eta=0.0, xi0=0.04, kappa=0.0), 100, 0.1, 3, 4, 0)
    flat = ens.__class__(np.full_like(ens.asset, 100.0), ens.variance, ens.dW, ens.grid,
                         ens.engine_tag, ens.seed)
    pts = time_augment(flat).points
    assert np.all(pts[..., 1] == pts[..., 1][..., :1])
    assert np.all(pts[..., 2] == 0.0)


def test_constant_path_is_identity():
    s = sig_of(np.zeros((5, 3)))
    assert s[0] == 1.0 and np.all(s[1:] == 0.0)


def test_single_segment_is_tensor_exponential():
    delta = np.array([0.3, -1.2, 0.5])
    s = sig_of(np.vstack([np.zeros(3), delta]))
    l0, l1, l2, l3 = levels(s, 3)
    assert np.allclose(l1, delta, atol=1e-15)
    assert np.allclose(l2, np.outer(delta, delta).ravel() / 2, atol=1e-15)
    assert np.allclose(l3, np.einsum("i,j,k->ijk", delta, delta, delta).ravel() / 6, atol=1e-15)


def test_five_segment_fixture_matches_quadrature():
    pts = random_points(np.random.default_rng(42), 2, 5)
    assert np.max(np.abs(sig_of(pts) - iterated_integrals(pts))) <= 1e-6


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4), st.integers(2, 8))
def test_chen_identity(seed, d, n_seg):
    pts = random_points(np.random.default_rng(seed), d, n_seg)
    whole = sig_of(pts)
    for b in range(1, n_seg):
        joined = tensor_product(sig_of(pts[:b + 1]), sig_of(pts[b:]), d)
        assert np.max(np.abs(joined - whole)) <= 1e-12 * max(1.0, np.max(np.abs(whole)))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_shuffle_identity(seed, d):
    s = sig_of(random_points(np.random.default_rng(seed), d, 5))
    _, l1, l2, _ = levels(s, d)
    l2 = l2.reshape(d, d)
    assert np.allclose(np.outer(l1, l1), l2 + l2.T, atol=1e-12, rtol=0)


def test_zero_segment_prefix_is_invisible():
    pts = random_points(np.random.default_rng(1), 3, 4)
    padded = np.vstack([pts[:1], pts])
    assert np.array_equal(sig_of(padded), sig_of(pts))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 4))
def test_exp_log_round_trips(seed, d):
    rng = np.random.default_rng(seed)
    s = sig_of(random_points(rng, d, 4))
    assert np.allclose(tensor_exp(tensor_log(s, d), d), s, atol=1e-10, rtol=0)
    x = rng.normal(0, 0.5, sig_dim(d))
    x[0] = 0.0
    assert np.allclose(tensor_log(tensor_exp(x, d), d), x, atol=1e-10, rtol=0)
    # independently coded series on word dictionaries
    assert np.allclose(tensor_exp(x, d), word_exp(x, d), atol=1e-12, rtol=0)


def test_log_signature_examples():
    ident = unit(3)
    assert np.all(log_signature(ident, 3).coords == 0)
    delta = np.array([0.4, -0.1, 0.7])
    ls = log_signature(chen_step(unit(3), delta), 3).coords
    _, l1, l2, l3 = levels(ls, 3)
    assert np.allclose(l1, delta) and np.allclose(l2, 0, atol=1e-15) and np.allclose(l3, 0, atol=1e-15)
    bad = ident.copy()
    bad[0] = 2.0
    with pytest.raises(NotGroupLike):
        log_signature(bad, 3)


def test_signature_on_augmented_path():
    t = np.linspace(0, 1, 6)
    pts = np.column_stack([t, np.sin(3 * t)])
    path = AugmentedPath(pts, ("time", "vol"))
    full = signature(path)
    assert full.coords[0] == 1 and full.coords.size == 15
    assert np.allclose(full.level(1), pts[-1] - pts[0])
    assert np.array_equal(signature(path, 3).coords, sig_of(pts[:4]))
    with pytest.raises(IndexOutOfRange):
        signature(path, 0)
    with pytest.raises(IndexOutOfRange):
        signature(path, 6)
    with pytest.raises(InvalidParams):
        signature(path, depth=4)
    with pytest.raises(InvalidParams):
        AugmentedPath(pts[::-1], ("time", "vol"))


def test_batch_stream_matches_single():
    rng = np.random.default_rng(8)
    batch = np.stack([random_points(rng, 3, 6) for _ in range(4)])
    stream = signature_stream(batch)
    for i in range(4):
        for k in range(1, 7):
            assert np.allclose(stream[i, k], sig_of(batch[i, :k + 1]), atol=1e-14)
