"""Tests for the learned competition network."""

import numpy as np
import pytest

from qdlearn import lqdnet


CFG = lqdnet.NetConfig()


def test_param_count_in_budget():
    assert 3000 <= lqdnet.param_count(CFG) <= 8000


def test_param_count_exact():
    # embed (3*16+16) + 4 layers * (2*(16+16) + 4*16*16 + 16*16+16 + 16*16+16)
    # + head (16+1), frozen so layout drift is caught
    assert lqdnet.param_count(CFG) == 6609


def test_config_validation():
    with pytest.raises(ValueError):
        lqdnet.NetConfig(features=16, heads=3)
    with pytest.raises(ValueError):
        lqdnet.NetConfig(layers=0)
    assert lqdnet.NetConfig(descriptor_dim=3).input_dim == 4
    assert CFG.head_dim == 4


def test_flatten_unflatten_roundtrip():
    params = lqdnet.init_params(CFG, seed=0)
    tensors = lqdnet.unflatten(params.theta, CFG)
    back = lqdnet.flatten(tensors, CFG)
    assert np.array_equal(back, params.theta)


def test_unflatten_rejects_wrong_length():
    with pytest.raises(ValueError):
        lqdnet.unflatten(np.zeros(100), CFG)


def test_init_seed_sensitivity():
    a = lqdnet.init_params(CFG, seed=1)
    b = lqdnet.init_params(CFG, seed=2)
    assert not np.array_equal(a.theta, b.theta)
    c = lqdnet.init_params(CFG, seed=1)
    assert np.array_equal(a.theta, c.theta)


def test_init_structure():
    params = lqdnet.init_params(CFG, seed=3)
    t = params.tensors
    assert np.all(t["layers.0.norm1.gain"] == 1.0)
    assert np.all(t["layers.0.norm1.bias"] == 0.0)
    assert np.all(t["embed.b"] == 0.0)
    # scaled-normal weights: std near 1/sqrt(fan_in)
    w = t["layers.0.attn.wq"]
    assert abs(w.std() - 1.0 / 4.0) < 0.05


# ---------------------------------------------------------------------------
# featurize
# ---------------------------------------------------------------------------


def test_featurize_hand_example():
    z = lqdnet.featurize(np.array([1.0, 2.0, 3.0]), np.zeros((3, 0)))
    expected = np.array([[-1.0 / np.sqrt(2.0 / 3.0)], [0.0], [1.0 / np.sqrt(2.0 / 3.0)]])
    np.testing.assert_allclose(z, expected, rtol=1e-12)
    np.testing.assert_allclose(z[:, 0], [-1.2247, 0.0, 1.2247], atol=1e-4)


def test_featurize_constant_column():
    z = lqdnet.featurize(np.full(4, 2.0), np.ones((4, 2)))
    assert np.array_equal(z, np.zeros((4, 3)))


def test_featurize_standardization_postcondition():
    rng = np.random.default_rng(0)
    z = lqdnet.featurize(rng.normal(size=50), rng.normal(size=(50, 2)))
    np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-6)
    np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-6)


def test_featurize_imputes_neginf():
    f = np.array([-np.inf, 1.0, 2.0, 3.0])
    d = np.zeros((4, 1))
    z = lqdnet.featurize(f, d)
    assert np.all(np.isfinite(z))
    # the imputed row is standardized from min(finite) - 3*std(finite)
    std = np.std([1.0, 2.0, 3.0])
    imputed = 1.0 - 3.0 * std
    col = np.array([imputed, 1.0, 2.0, 3.0])
    expected = (col - col.mean()) / col.std()
    np.testing.assert_allclose(z[:, 0], expected, rtol=1e-12)


def test_featurize_all_neginf():
    z = lqdnet.featurize(np.full(3, -np.inf), np.zeros((3, 2)))
    assert np.all(np.isfinite(z))


def test_featurize_shape_mismatch():
    with pytest.raises(ValueError):
        lqdnet.featurize(np.zeros(3), np.zeros((4, 2)))


# ---------------------------------------------------------------------------
# attention block
# ---------------------------------------------------------------------------


def _zero_qk_params():
    params = lqdnet.init_params(CFG, seed=5)
    tensors = {k: v.copy() for k, v in params.tensors.items()}
    tensors["layers.0.attn.wq"][:] = 0.0
    tensors["layers.0.attn.wk"][:] = 0.0
    return tensors


def test_attention_uniform_when_qk_zero():
    tensors = _zero_qk_params()
    rng = np.random.default_rng(6)
    y = rng.normal(size=(5, CFG.features))
    out = lqdnet._self_attention(y, tensors, "layers.0.", CFG)
    # zero Q/K makes every attention row the mean of the value rows
    v = y @ tensors["layers.0.attn.wv"]
    expected = np.tile(v.mean(axis=0), (5, 1)) @ tensors["layers.0.attn.wo"]
    np.testing.assert_allclose(out, expected, rtol=1e-10, atol=1e-10)


def test_attention_single_row():
    params = lqdnet.init_params(CFG, seed=7)
    rng = np.random.default_rng(8)
    y = rng.normal(size=(1, CFG.features))
    out = lqdnet._self_attention(y, params.tensors, "layers.0.", CFG)
    v = y @ params.tensors["layers.0.attn.wv"]
    expected = v @ params.tensors["layers.0.attn.wo"]
    np.testing.assert_allclose(out, expected, rtol=1e-10, atol=1e-10)


def test_attention_block_permutation_equivariance():
    params = lqdnet.init_params(CFG, seed=9)
    rng = np.random.default_rng(10)
    y = rng.normal(size=(12, CFG.features))
    out = lqdnet.attention_block(y, params.tensors, "layers.2.", CFG)
    perm = rng.permutation(12)
    out_p = lqdnet.attention_block(y[perm], params.tensors, "layers.2.", CFG)
    np.testing.assert_allclose(out_p, out[perm], atol=1e-5)


# ---------------------------------------------------------------------------
# forward_competition
# ---------------------------------------------------------------------------


def test_zero_theta_constant_output():
    params = lqdnet.LqdParams(config=CFG, theta=np.zeros(lqdnet.param_count(CFG)))
    rng = np.random.default_rng(11)
    out = lqdnet.forward_competition(params, rng.normal(size=7), rng.normal(size=(7, 2)))
    np.testing.assert_allclose(out, out[0])


def test_zero_theta_forward_trace_n2():
    # With all-zero weights every intermediate is zero: embed -> 0, each block
    # adds 0 (attention of zeros through zero W_O, MLP of tanh(0) through zero
    # W2), head reads 0. Handwritten trace for N=2.
    params = lqdnet.LqdParams(config=CFG, theta=np.zeros(lqdnet.param_count(CFG)))
    out = lqdnet.forward_competition(
        params, np.array([0.0, 1.0]), np.array([[0.0, 0.0], [1.0, 1.0]])
    )
    np.testing.assert_allclose(out, [0.0, 0.0])


@pytest.mark.parametrize("n", [2, 8, 32, 128])
def test_permutation_equivariance(n):
    params = lqdnet.init_params(CFG, seed=12)
    rng = np.random.default_rng(13)
    f = rng.normal(size=n)
    d = rng.normal(size=(n, 2))
    out = lqdnet.forward_competition(params, f, d)
    perm = rng.permutation(n)
    out_p = lqdnet.forward_competition(params, f[perm], d[perm])
    np.testing.assert_allclose(out_p, out[perm], atol=1e-5)


def test_affine_fitness_invariance():
    params = lqdnet.init_params(CFG, seed=14)
    rng = np.random.default_rng(15)
    f = rng.normal(size=10)
    d = rng.normal(size=(10, 2))
    base = lqdnet.forward_competition(params, f, d)
    scaled = lqdnet.forward_competition(params, 4.2 * f + 17.0, d)
    np.testing.assert_allclose(scaled, base, atol=1e-5)
    # survivor ordering is therefore unchanged
    assert np.array_equal(np.argsort(-scaled), np.argsort(-base))


def test_population_size_generality():
    params = lqdnet.init_params(CFG, seed=16)
    rng = np.random.default_rng(17)
    for n in (1, 2, 5, 64, 200):
        out = lqdnet.forward_competition(params, rng.normal(size=n), rng.normal(size=(n, 2)))
        assert out.shape == (n,)
        assert np.all(np.isfinite(out))


def test_descriptor_dim_mismatch_rejected():
    params = lqdnet.init_params(CFG, seed=18)
    with pytest.raises(ValueError):
        lqdnet.forward_competition(params, np.zeros(3), np.zeros((3, 4)))


def test_params_validation():
    with pytest.raises(ValueError):
        lqdnet.LqdParams(config=CFG, theta=np.zeros(10))
    with pytest.raises(ValueError):
        lqdnet.LqdParams(
            config=CFG,
            theta=np.zeros(lqdnet.param_count(CFG)),
            layout_version="something-else",
        )


def test_stacked_forward_matches_per_candidate():
    # A leading batch axis on theta evaluates every candidate in one pass.
    thetas = np.stack([lqdnet.init_params(CFG, seed=s).theta for s in range(4)])
    tensors = lqdnet.unflatten(thetas, CFG)
    rng = np.random.default_rng(19)
    f = rng.normal(size=9)
    d = rng.normal(size=(9, 2))
    z = lqdnet.featurize(np.broadcast_to(f, (4, 9)), np.broadcast_to(d, (4, 9, 2)))
    batch = lqdnet.forward_features(tensors, CFG, z)
    assert batch.shape == (4, 9)
    for m in range(4):
        single = lqdnet.forward_competition(
            lqdnet.LqdParams(config=CFG, theta=thetas[m]), f, d
        )
        np.testing.assert_allclose(batch[m], single, atol=1e-12)
