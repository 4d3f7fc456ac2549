"""Model-side contracts: encoding, responsibilities, ELBO oracle, EM, sampling."""

import math

import numpy as np
import pytest

from gmvlab.errors import ContractError, InputError
from gmvlab.gmvae import (
    GmmParams,
    GmVae,
    cluster_assign,
    decode,
    elbo,
    em_step,
    encode,
    gmm_log_likelihood,
    permutation_accuracy,
    responsibilities,
    sample,
)
from gmvlab.gmvae.model import LatentEmbedding


def make_model(seed=0, data_dim=6, latent_dim=2, k=2, hidden=(5, 4),
               decoder_var=1e-5, beta=0.1):
    rng = np.random.default_rng(seed)
    return GmVae.init(data_dim, latent_dim, k, hidden, decoder_var, beta, rng)


# ---------------------------------------------------------------- encode

def test_encode_with_zero_eps_returns_posterior_mean():
    model = make_model()
    x = np.random.default_rng(1).standard_normal((4, 6))
    emb = encode(model, x, eps=np.zeros(1))
    assert np.array_equal(emb.z, emb.mu)


def test_zero_weight_encoder_gives_standard_posterior():
    model = make_model()
    model.encoder.weights = [np.zeros_like(w) for w in model.encoder.weights]
    model.encoder.biases = [np.zeros_like(b) for b in model.encoder.biases]
    emb = encode(model, np.ones((3, 6)), eps=np.zeros(1))
    assert np.array_equal(emb.mu, np.zeros((3, 2)))
    assert np.array_equal(emb.var, np.ones((3, 2)))


def test_encode_deterministic_for_fixed_seed():
    model = make_model()
    x = np.random.default_rng(2).standard_normal((5, 6))
    a = encode(model, x, rng=np.random.Generator(np.random.PCG64(42)))
    b = encode(model, x, rng=np.random.Generator(np.random.PCG64(42)))
    assert np.array_equal(a.z, b.z)
    assert np.array_equal(a.eps, b.eps)


# ---------------------------------------------------- responsibilities

def test_symmetric_clusters_split_even():
    gmm = GmmParams(pi=np.array([0.5, 0.5]), means=np.array([[-3.0], [3.0]]),
                    variances=np.ones((2, 1)))
    gamma = responsibilities(gmm, np.zeros((1, 1))).gamma
    assert np.allclose(gamma, [[0.5, 0.5]], atol=1e-15)


def test_responsibility_ratio_matches_gaussian_ratio():
    gmm = GmmParams(pi=np.array([0.5, 0.5]), means=np.array([[0.0], [10.0]]),
                    variances=np.ones((2, 1)))
    gamma = responsibilities(gmm, np.zeros((1, 1))).gamma
    assert gamma[0, 0] == pytest.approx(1.0 / (1.0 + math.exp(-50.0)), rel=1e-12)


def test_single_cluster_gets_everything():
    gmm = GmmParams(pi=np.array([1.0]), means=np.zeros((1, 3)), variances=np.ones((1, 3)))
    gamma = responsibilities(gmm, np.random.default_rng(0).standard_normal((7, 3))).gamma
    assert np.array_equal(gamma, np.ones((7, 1)))


def test_rows_sum_to_one_under_extreme_underflow():
    # densities span far below 1e-30; log-space normalization must hold anyway
    gmm = GmmParams(pi=np.array([0.25, 0.25, 0.5]),
                    means=np.array([[0.0, 0.0], [300.0, 0.0], [0.0, 500.0]]),
                    variances=np.full((3, 2), 0.5))
    z = np.random.default_rng(3).standard_normal((50, 2)) * 5
    gamma = responsibilities(gmm, z).gamma
    assert np.max(np.abs(gamma.sum(axis=1) - 1.0)) < 1e-12
    assert gamma.min() >= 0.0 and gamma.max() <= 1.0


def test_zero_pi_cluster_gets_zero_responsibility():
    gmm = GmmParams(pi=np.array([1.0, 0.0]), means=np.zeros((2, 1)), variances=np.ones((2, 1)))
    gamma = responsibilities(gmm, np.zeros((3, 1))).gamma
    assert np.array_equal(gamma[:, 1], np.zeros(3))


# ------------------------------------------------------------------ elbo

def scalar_elbo_reference(model, x, emb, gamma):
    """Independent transcription of the closed-form objective, all scalar loops."""
    n, data_dim = x.shape
    k = model.gmm.n_clusters
    d = model.latent_dim
    recon = clus = ent = cat = reg = 0.0
    x_hat = decode(model, emb.z)
    for i in range(n):
        for j in range(data_dim):
            recon += -0.5 * (math.log(2 * math.pi * model.decoder_var)
                             + (x[i, j] - x_hat[i, j]) ** 2 / model.decoder_var)
        for c in range(k):
            inner = 0.0
            for j in range(d):
                sc = model.gmm.variances[c, j]
                inner += (math.log(2 * math.pi * sc) + emb.var[i, j] / sc
                          + (emb.mu[i, j] - model.gmm.means[c, j]) ** 2 / sc)
            clus += -0.5 * gamma[i, c] * inner
        for j in range(d):
            ent += 0.5 * (math.log(2 * math.pi * emb.var[i, j]) + 1.0)
        for c in range(k):
            if gamma[i, c] > 0.0:
                cat += gamma[i, c] * (math.log(model.gmm.pi[c]) - math.log(gamma[i, c]))
        for j in range(d):
            reg += 0.5 * model.beta * (emb.mu[i, j] ** 2 + emb.var[i, j] - 1.0
                                       - math.log(emb.var[i, j]))
    return recon, clus, ent, cat, reg


@pytest.mark.parametrize("seed", range(6))
@pytest.mark.parametrize("k", [1, 2, 3])
def test_elbo_matches_scalar_reference(seed, k):
    rng = np.random.default_rng(seed * 10 + k)
    model = make_model(seed=seed, k=k)
    x = rng.standard_normal((3, 6))
    emb = encode(model, x, rng=rng)
    gamma = responsibilities(model.gmm, emb.z).gamma
    terms = elbo(model, x, emb, gamma)
    recon, clus, ent, cat, reg = scalar_elbo_reference(model, x, emb, gamma)
    scale = max(1.0, abs(terms.total_loss))
    assert abs(terms.recon - recon) / scale < 1e-10
    assert abs(terms.cluster_kl - clus) / scale < 1e-10
    assert abs(terms.posterior_entropy - ent) / scale < 1e-10
    assert abs(terms.categorical_term - cat) / scale < 1e-10
    assert abs(terms.reg - reg) / scale < 1e-10


def test_unit_posterior_has_zero_regularizer():
    model = make_model()
    n, d = 3, 2
    emb = LatentEmbedding(mu=np.zeros((n, d)), var=np.ones((n, d)),
                          z=np.zeros((n, d)), eps=np.zeros((n, d)))
    gamma = responsibilities(model.gmm, emb.z).gamma
    terms = elbo(model, np.zeros((n, 6)), emb, gamma)
    assert terms.reg == 0.0


def test_k1_unit_prior_reduces_to_standard_vae_kl():
    # with pi=1, mean 0, variance 1 the cluster + entropy terms collapse to
    # minus the standard normal KL of the posterior
    model = make_model(k=1)
    model.gmm = GmmParams(pi=np.array([1.0]), means=np.zeros((1, 2)),
                          variances=np.ones((1, 2)))
    rng = np.random.default_rng(5)
    x = rng.standard_normal((4, 6))
    emb = encode(model, x, rng=rng)
    gamma = np.ones((4, 1))
    terms = elbo(model, x, emb, gamma)
    kl = 0.5 * np.sum(emb.mu**2 + emb.var - 1.0 - np.log(emb.var))
    assert abs((terms.cluster_kl + terms.posterior_entropy) - (-kl)) < 1e-10
    assert terms.categorical_term == 0.0


def test_elbo_rejects_bad_gamma():
    model = make_model()
    x = np.zeros((2, 6))
    emb = encode(model, x, eps=np.zeros(1))
    with pytest.raises(ContractError):
        elbo(model, x, emb, np.full((2, 2), 0.9))


# --------------------------------------------------------------- em_step

def embedding_of(mu, var=None, z=None):
    mu = np.atleast_2d(mu)
    var = np.full_like(mu, 1e-10) if var is None else np.broadcast_to(var, mu.shape).copy()
    z = mu.copy() if z is None else z
    return LatentEmbedding(mu=mu, var=var, z=z, eps=np.zeros_like(mu))


def test_hard_responsibilities_average_assigned_means():
    mu = np.array([[0.0, 0.0], [0.2, 0.0], [5.0, 5.0], [5.2, 5.0]])
    gmm = GmmParams(pi=np.array([0.5, 0.5]), means=np.array([[0.0, 0.0], [5.0, 5.0]]),
                    variances=np.full((2, 2), 0.01))
    new = em_step(gmm, embedding_of(mu))
    assert np.allclose(new.means[0], [0.1, 0.0], atol=1e-6)
    assert np.allclose(new.means[1], [5.1, 5.0], atol=1e-6)
    assert np.allclose(new.pi, [0.5, 0.5], atol=1e-9)


def test_collapsed_cluster_hits_variance_floor():
    mu = np.tile([[1.0, -1.0]], (6, 1))
    gmm = GmmParams(pi=np.array([1.0]), means=np.array([[1.0, -1.0]]),
                    variances=np.ones((1, 2)))
    new = em_step(gmm, embedding_of(mu, var=0.0 + 1e-300), variance_floor=1e-6)
    assert np.array_equal(new.variances, np.full((1, 2), 1e-6))


def test_em_log_likelihood_nondecreasing_on_z():
    # the expectation step scores sampled z while the maximization step
    # averages posterior means, so exact monotonicity needs z ~ mu; tight
    # posterior variances put the instance in that regime
    rng = np.random.default_rng(8)
    mu = np.vstack([rng.normal(-2, 0.3, size=(25, 2)), rng.normal(2, 0.3, size=(25, 2))])
    var = np.full_like(mu, 1e-12)
    z = mu + np.sqrt(var) * rng.standard_normal(mu.shape)
    emb = LatentEmbedding(mu=mu, var=var, z=z, eps=np.zeros_like(mu))
    gmm = GmmParams(pi=np.array([0.5, 0.5]),
                    means=rng.uniform(-1, 1, size=(2, 2)), variances=np.ones((2, 2)))
    ll = gmm_log_likelihood(gmm, z)
    for _ in range(5):
        gmm = em_step(gmm, emb)
        nxt = gmm_log_likelihood(gmm, z)
        assert nxt >= ll - 1e-9
        ll = nxt


def test_em_preserves_simplex():
    rng = np.random.default_rng(9)
    emb = embedding_of(rng.standard_normal((40, 2)), var=0.05)
    gmm = GmmParams(pi=np.array([0.2, 0.3, 0.5]),
                    means=rng.uniform(-1, 1, size=(3, 2)), variances=np.ones((3, 2)))
    for _ in range(10):
        gmm = em_step(gmm, emb)
        assert abs(gmm.pi.sum() - 1.0) < 1e-12
        assert np.all(gmm.pi >= 0)


def test_empty_cluster_keeps_parameters_and_warns():
    mu = np.zeros((5, 1))
    gmm = GmmParams(pi=np.array([1.0 - 1e-16, 1e-16]),
                    means=np.array([[0.0], [1000.0]]), variances=np.ones((2, 1)))
    with pytest.warns(UserWarning, match="responsibility mass"):
        new = em_step(gmm, embedding_of(mu))
    assert np.array_equal(new.means[1], [1000.0])
    assert np.array_equal(new.variances[1], [1.0])
    assert not np.any(np.isnan(new.pi))


# ---------------------------------------------------------------- sample

def test_sample_with_zero_cluster_variance_decodes_cluster_mean():
    model = make_model()
    model.gmm = GmmParams(pi=np.array([0.5, 0.5]),
                          means=np.array([[1.0, 2.0], [-1.0, 0.5]]),
                          variances=np.zeros((2, 2)))
    rng = np.random.default_rng(0)
    curves, ids = sample(model, 5, rng, cluster=1)
    expected = decode(model, model.gmm.means[1][None, :])
    assert np.allclose(curves, np.tile(expected, (5, 1)), atol=0)
    assert np.array_equal(ids, np.ones(5, dtype=int))


def test_unconditional_with_degenerate_pi_matches_conditional():
    model = make_model()
    model.gmm.pi = np.array([1.0, 0.0])
    rng = np.random.default_rng(1)
    _, ids = sample(model, 20, rng)
    assert np.array_equal(ids, np.zeros(20, dtype=int))


def test_sample_rejects_bad_cluster():
    model = make_model()
    with pytest.raises(InputError):
        sample(model, 3, np.random.default_rng(0), cluster=2)


# -------------------------------------------------------- cluster_assign

def test_permutation_accuracy_one_hot_match():
    pred = np.array([0, 0, 1, 1])
    true = ["stable", "stable", "reactive", "reactive"]
    acc, mapping = permutation_accuracy(pred, true)
    assert acc == 1.0
    assert mapping == {0: "stable", 1: "reactive"}


def test_permutation_accuracy_swapped_labels_still_perfect():
    pred = np.array([1, 1, 0, 0])
    true = ["stable", "stable", "reactive", "reactive"]
    acc, _ = permutation_accuracy(pred, true)
    assert acc == 1.0


def test_single_cluster_accuracy_is_majority_fraction():
    pred = np.zeros(10, dtype=int)
    true = ["a"] * 7 + ["b"] * 3
    acc, _ = permutation_accuracy(pred, true)
    assert acc == pytest.approx(0.7)


def test_cluster_assign_uses_posterior_mean():
    model = make_model()
    model.gmm = GmmParams(pi=np.array([0.5, 0.5]),
                          means=np.array([[-5.0, 0.0], [5.0, 0.0]]),
                          variances=np.ones((2, 2)))
    x = np.random.default_rng(4).standard_normal((6, 6))
    emb = encode(model, x, eps=np.zeros(1))
    got = cluster_assign(model, x)
    expected = np.argmax(responsibilities(model.gmm, emb.mu).gamma, axis=1)
    assert np.array_equal(got, expected)
