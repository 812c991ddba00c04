import math
from dataclasses import replace

import numpy as np
import pytest

from hiercpi.encoder import (
    DistanceHead, EncoderLayer, GraphEncoder, SpeParams, attention, edge_type_table, gaussian_spe,
    pairwise_distances, predict_distance,
)
from hiercpi.model import HierarchicalModel, featurize, predict_cross
from hiercpi.numerics import Adam, Tensor, backward, square, sub, sum_
from hiercpi.training import random_transform
from conftest import TINY


def spe_loop(d, alpha, beta, mu, sigma):
    out = []
    for k in range(len(mu)):
        x = alpha * d + beta
        out.append(math.exp(-((x - mu[k]) ** 2) / (2 * sigma[k] ** 2)) / (sigma[k] * math.sqrt(2 * math.pi)))
    return np.array(out)


def test_spe_matches_scalar_loop():
    params = SpeParams(n_kernels=6, n_classes=4, mu_max=10.0)
    rng = np.random.default_rng(1)
    params.alpha.data[:] = rng.uniform(0.5, 1.5, params.alpha.shape)
    params.beta.data[:] = rng.uniform(-0.5, 0.5, params.beta.shape)
    for _ in range(25):
        d, t = rng.uniform(0, 15), int(rng.integers(params.alpha.shape[0]))
        ref = spe_loop(d, params.alpha.data[t], params.beta.data[t], params.mu.data, params.sigma.data)
        np.testing.assert_allclose(gaussian_spe(d, t, params), ref, rtol=1e-13, atol=1e-300)
    # block evaluation agrees with the scalar API entry by entry
    dist = rng.uniform(0, 12, (3, 4))
    types = rng.integers(0, params.alpha.shape[0], (3, 4))
    block = params(dist, types).data
    for i in range(3):
        for j in range(4):
            np.testing.assert_allclose(block[i, j], gaussian_spe(dist[i, j], types[i, j], params), rtol=1e-14)


def test_spe_known_value_and_errors():
    params = SpeParams(n_kernels=3, n_classes=1, mu_max=2.0)
    # mu = (0, 1, 2), sigma = 1: at d = 1 the middle kernel is the standard normal peak
    np.testing.assert_allclose(gaussian_spe(1.0, 0, params)[1], 1 / math.sqrt(2 * math.pi), rtol=1e-15)
    with pytest.raises(ValueError):
        gaussian_spe(-0.1, 0, params)
    with pytest.raises(ValueError):
        gaussian_spe(1.0, 5, params)


def test_edge_type_table_symmetric_and_dense():
    t = edge_type_table(4)
    assert np.array_equal(t, t.T)
    assert sorted(np.unique(t).tolist()) == list(range(10))


def test_pairwise_distances_snapped():
    a = np.array([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
    d = pairwise_distances(a)
    assert d[0, 1] == round(math.sqrt(3), 6) and d[0, 0] == 0.0


def test_standalone_attention_rows_sum_to_one():
    rng = np.random.default_rng(0)
    X = Tensor(rng.normal(size=(5, 4)))
    Wq, Wk = Tensor(rng.normal(size=(2, 4, 3))), Tensor(rng.normal(size=(2, 4, 3)))
    S = Tensor(rng.normal(size=(2, 5, 5)))
    A = attention(X, S, Wq, Wk).data
    np.testing.assert_allclose(A.sum(-1), 1.0, rtol=1e-14)
    # reference with explicit loops
    x = X.data
    for h in range(2):
        q, k = x @ Wq.data[h], x @ Wk.data[h]
        s = q @ k.T / math.sqrt(3) + S.data[h]
        e = np.exp(s - s.max(1, keepdims=True))
        np.testing.assert_allclose(A[h], e / e.sum(1, keepdims=True), rtol=1e-12)
    with pytest.raises(ValueError):
        attention(X, Tensor(np.zeros((3, 5, 5))), Wq, Wk)


def test_layer_bias_changes_attention():
    rng = np.random.default_rng(2)
    layer = EncoderLayer(rng, 8, 2, 4)
    x = Tensor(rng.normal(size=(3, 8)))
    S = Tensor(rng.normal(size=(3, 3, 4)))
    a0 = layer.attention(x, layer.head_bias(Tensor(np.zeros((3, 3, 4))))).data
    a1 = layer.attention(x, layer.head_bias(S)).data
    assert not np.allclose(a0, a1)


def test_zero_layers_return_embeddings(small_complexes):
    f = featurize(small_complexes[0])
    enc = GraphEncoder(np.random.default_rng(0), "atom", d_model=8, n_layers=0, n_heads=2, n_kernels=4)
    H = enc(f.atom, "masked").data
    np.testing.assert_array_equal(H, enc.embedding.table.data[f.atom.token_idx])


def test_rigid_motion_invariance(small_complexes, tiny_model):
    # one proper rigid motion applied to the whole complex
    rng = np.random.default_rng(4)
    for c in small_complexes:
        T = random_transform(rng)
        moved = replace(c, compound=c.compound.with_coords(T.apply(c.compound.coords)),
                        protein=c.protein.with_coords(T.apply(c.protein.coords)))
        f0, f1 = featurize(c), featurize(moved)
        for which, policy in (("atom", "full"), ("motif", "full"), ("cond", "prior")):
            a = predict_cross(tiny_model, f0, which, policy).data
            b = predict_cross(tiny_model, f1, which, policy).data
            np.testing.assert_allclose(a, b, rtol=1e-6, atol=0)


def test_permutation_equivariance(small_complexes):
    # relabelling compound atoms permutes compound rows of the encoder output
    model = HierarchicalModel(TINY, seed=1)
    c = small_complexes[1]
    f = featurize(c)
    m = f.m_atoms
    perm = np.r_[np.random.default_rng(0).permutation(m), np.arange(m, f.atom.n_nodes)]
    inp = f.atom
    permuted = type(inp)(inp.token_idx[perm], None, inp.node_class[perm], inp.dist[np.ix_(perm, perm)],
                         m, inp.prior_dist[perm[:m]], inp.unknown_tokens)
    for enc, policy in ((model.atom_encoder, "full"), (model.cond_encoder, "prior")):
        H = enc(inp, policy).data
        Hp = enc(permuted, policy).data
        np.testing.assert_allclose(Hp, H[perm], rtol=1e-10, atol=1e-12)


def test_masked_policy_ignores_cross_distances(small_complexes, tiny_model):
    f = featurize(small_complexes[2])
    m = f.m_atoms
    inp = f.atom
    scrambled = inp.dist.copy()
    scrambled[:m, m:] += 7.0
    scrambled[m:, :m] = scrambled[:m, m:].T
    other = type(inp)(inp.token_idx, None, inp.node_class, scrambled, m, inp.prior_dist, 0)
    enc = tiny_model.atom_encoder
    assert np.array_equal(enc(inp, "masked").data, enc(other, "masked").data)
    assert not np.array_equal(enc(inp, "full").data, enc(other, "full").data)


def test_mask_policy_validation(small_complexes, tiny_model):
    f = featurize(small_complexes[0])
    with pytest.raises(ValueError):
        tiny_model.atom_encoder(f.atom, "prior")
    with pytest.raises(ValueError):
        tiny_model.atom_encoder(f.atom, "peek")


def test_distance_head_symmetric_nonnegative_and_initial_value():
    rng = np.random.default_rng(0)
    head = DistanceHead(rng, 6, init_distance=10.0)
    h = rng.normal(size=(4, 6))
    out = head(Tensor(h[:2]), Tensor(h[2:])).data
    np.testing.assert_allclose(out, 10.0, rtol=1e-12)
    head.out.weight.data[:] = rng.normal(size=head.out.weight.shape)
    fwd = head(Tensor(h[:2]), Tensor(h[2:])).data
    rev = head(Tensor(h[2:]), Tensor(h[:2])).data
    np.testing.assert_allclose(fwd, rev.T, rtol=1e-14)
    assert np.all(fwd >= 0)
    assert predict_distance(head, h[0], h[2]) == pytest.approx(fwd[0, 0], rel=1e-14)


def test_distance_head_fits_target():
    rng = np.random.default_rng(0)
    head = DistanceHead(rng, 8)
    hi, hj = Tensor(rng.normal(size=(1, 8))), Tensor(rng.normal(size=(1, 8)))
    opt = Adam(head.parameters(), lr=0.05)
    for _ in range(300):
        opt.zero_grad()
        backward(sum_(square(sub(head(hi, hj), Tensor(np.array([[4.2]]))))))
        opt.step()
    assert abs(predict_distance(head, hi, hj) - 4.2) < 0.05


def test_sigma_projection_keeps_kernels_valid(tiny_model):
    tiny_model.atom_encoder.spe.sigma.data[:] = -1.0
    tiny_model.project()
    assert np.all(tiny_model.atom_encoder.spe.sigma.data >= 1e-2)
