"""Mixture-prior VAE: model types, ELBO terms, responsibilities, EM update.

The generative model is c ~ Cat(pi), z | c ~ N(mean_c, diag var_c),
x | z ~ N(decoder(z), decoder_var * I). The encoder emits [mu, log var]
and sampling uses the reparameterization z = mu + sqrt(var) * eps.

The per-sample objective has four ELBO terms (reconstruction log-density,
responsibility-weighted cluster term, posterior entropy, categorical term)
plus a beta-weighted KL pull toward the standard normal; training minimizes
-(ELBO) + regularizer summed over the batch.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ContractError, InputError, NumericalError
from ..ndmath import Mlp

LOG_2PI = float(np.log(2.0 * np.pi))
DEFAULT_VARIANCE_FLOOR = 1e-6


@dataclass
class GmmParams:
    """Mixture weights plus per-cluster diagonal Gaussians."""

    pi: np.ndarray        # (K,)
    means: np.ndarray     # (K, d)
    variances: np.ndarray  # (K, d)

    @property
    def n_clusters(self) -> int:
        return self.pi.shape[0]

    def validate(self, floor: float = 0.0) -> None:
        if abs(self.pi.sum() - 1.0) > 1e-12 or np.any(self.pi < 0):
            raise ContractError(f"mixture weights must form a simplex, got {self.pi}")
        if np.any(self.variances < floor) or np.any(self.variances <= 0):
            raise ContractError("cluster variances below the variance floor")

    def copy(self) -> "GmmParams":
        return GmmParams(self.pi.copy(), self.means.copy(), self.variances.copy())


@dataclass
class LatentEmbedding:
    """Batch of posterior Gaussians and their recorded samples (all (n, d))."""

    mu: np.ndarray
    var: np.ndarray
    z: np.ndarray
    eps: np.ndarray


@dataclass
class Responsibilities:
    gamma: np.ndarray  # (n, K), rows on the simplex


@dataclass
class ElboTerms:
    """Batch-summed objective pieces.

    total_loss = -(recon + cluster_kl + posterior_entropy + categorical_term) + reg
    """

    recon: float
    cluster_kl: float
    posterior_entropy: float
    categorical_term: float
    reg: float

    @property
    def elbo(self) -> float:
        return self.recon + self.cluster_kl + self.posterior_entropy + self.categorical_term

    @property
    def total_loss(self) -> float:
        return -self.elbo + self.reg

    def as_dict(self) -> dict:
        return {
            "recon": self.recon,
            "cluster_kl": self.cluster_kl,
            "posterior_entropy": self.posterior_entropy,
            "categorical_term": self.categorical_term,
            "reg": self.reg,
            "total_loss": self.total_loss,
        }


@dataclass
class GmVae:
    encoder: Mlp
    decoder: Mlp
    latent_dim: int
    decoder_var: float
    beta: float
    gmm: GmmParams

    @classmethod
    def init(cls, data_dim: int, latent_dim: int, n_clusters: int, hidden_dims,
             decoder_var: float, beta: float, rng: np.random.Generator) -> "GmVae":
        """Fresh model: Glorot nets, cluster means uniform in [-1, 1], unit variances."""
        if decoder_var <= 0:
            raise InputError(f"decoder_var must be > 0, got {decoder_var}")
        if beta < 0:
            raise InputError(f"beta must be >= 0, got {beta}")
        hidden = list(hidden_dims)
        encoder = Mlp.init([data_dim] + hidden + [2 * latent_dim], rng)
        decoder = Mlp.init([latent_dim] + hidden[::-1] + [data_dim], rng)
        gmm = GmmParams(
            pi=np.full(n_clusters, 1.0 / n_clusters),
            means=rng.uniform(-1.0, 1.0, size=(n_clusters, latent_dim)),
            variances=np.ones((n_clusters, latent_dim)),
        )
        return cls(encoder=encoder, decoder=decoder, latent_dim=latent_dim,
                   decoder_var=float(decoder_var), beta=float(beta), gmm=gmm)

    @property
    def data_dim(self) -> int:
        return self.encoder.layer_dims[0]


def encode(model: GmVae, x: np.ndarray, rng: np.random.Generator | None = None,
           eps: np.ndarray | None = None) -> LatentEmbedding:
    """Posterior parameters and a reparameterized sample for a batch.

    Exactly one of `rng` (fresh standard-normal noise) or `eps` (caller-fixed
    noise, e.g. zeros) must be given.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    out = model.encoder.infer(x)
    if not np.all(np.isfinite(out)):
        raise NumericalError("encoder produced non-finite output")
    d = model.latent_dim
    mu = out[:, :d]
    logvar = out[:, d:]
    var = np.exp(logvar)
    if eps is None:
        if rng is None:
            raise ContractError("encode needs either rng or eps")
        eps = rng.standard_normal(mu.shape)
    else:
        eps = np.broadcast_to(np.asarray(eps, dtype=np.float64), mu.shape).copy()
    z = mu + np.sqrt(var) * eps
    return LatentEmbedding(mu=mu, var=var, z=z, eps=eps)


def decode(model: GmVae, z: np.ndarray) -> np.ndarray:
    """Decoded reconstruction means for a batch of latent points."""
    out = model.decoder.infer(np.atleast_2d(np.asarray(z, dtype=np.float64)))
    if not np.all(np.isfinite(out)):
        raise NumericalError("decoder produced non-finite output")
    return out


def _log_gauss_diag(z: np.ndarray, means: np.ndarray, variances: np.ndarray) -> np.ndarray:
    """log N(z_n | mean_c, diag var_c) for all n, c -> (n, K)."""
    diff = z[:, None, :] - means[None, :, :]  # (n, K, d)
    quad = np.sum(diff * diff / variances[None, :, :], axis=2)
    logdet = np.sum(np.log(variances) + LOG_2PI, axis=1)  # (K,)
    return -0.5 * (logdet[None, :] + quad)


def responsibilities(gmm: GmmParams, z: np.ndarray) -> Responsibilities:
    """Posterior cluster probabilities of latent points, computed in log space."""
    gmm.validate()
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    with np.errstate(divide="ignore"):  # pi entries may be exactly 0
        log_unnorm = np.log(gmm.pi)[None, :] + _log_gauss_diag(z, gmm.means, gmm.variances)
    top = log_unnorm.max(axis=1, keepdims=True)
    log_norm = top + np.log(np.sum(np.exp(log_unnorm - top), axis=1, keepdims=True))
    gamma = np.exp(log_unnorm - log_norm)
    return Responsibilities(gamma=gamma)


def gmm_log_likelihood(gmm: GmmParams, z: np.ndarray) -> float:
    """Total marginal log-likelihood sum_n log sum_c pi_c N(z_n | c)."""
    z = np.atleast_2d(np.asarray(z, dtype=np.float64))
    with np.errstate(divide="ignore"):
        log_unnorm = np.log(gmm.pi)[None, :] + _log_gauss_diag(z, gmm.means, gmm.variances)
    top = log_unnorm.max(axis=1)
    return float(np.sum(top + np.log(np.sum(np.exp(log_unnorm - top[:, None]), axis=1))))


def _check_gamma(gamma: np.ndarray, n: int, k: int) -> None:
    if gamma.shape != (n, k):
        raise ContractError(f"gamma shape {gamma.shape}, expected {(n, k)}")
    if np.max(np.abs(gamma.sum(axis=1) - 1.0)) > 1e-9:
        raise ContractError("gamma rows must sum to 1")


def elbo(model: GmVae, x: np.ndarray, emb: LatentEmbedding, gamma: np.ndarray) -> ElboTerms:
    """Batch-summed ELBO terms for given embeddings and fixed responsibilities."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n, data_dim = x.shape
    k = model.gmm.n_clusters
    _check_gamma(gamma, n, k)

    x_hat = decode(model, emb.z)
    sq_err = np.sum((x - x_hat) ** 2)
    recon = -0.5 * (n * data_dim * (LOG_2PI + np.log(model.decoder_var)) + sq_err / model.decoder_var)

    # responsibility-weighted expected log-density under each cluster
    mu_diff = emb.mu[:, None, :] - model.gmm.means[None, :, :]
    inner = (np.log(model.gmm.variances)[None, :, :] + LOG_2PI
             + (emb.var[:, None, :] + mu_diff**2) / model.gmm.variances[None, :, :])
    cluster_kl = -0.5 * float(np.sum(gamma * inner.sum(axis=2)))

    logvar = np.log(emb.var)
    posterior_entropy = 0.5 * float(np.sum(logvar + LOG_2PI + 1.0))

    with np.errstate(divide="ignore", invalid="ignore"):
        cat = gamma * (np.log(model.gmm.pi)[None, :] - np.log(gamma))
    categorical_term = float(np.sum(np.where(gamma > 0.0, cat, 0.0)))

    reg = 0.5 * model.beta * float(np.sum(emb.mu**2 + emb.var - 1.0 - logvar))
    return ElboTerms(recon=float(recon), cluster_kl=cluster_kl,
                     posterior_entropy=posterior_entropy,
                     categorical_term=categorical_term, reg=reg)


def em_step(gmm: GmmParams, emb: LatentEmbedding,
            variance_floor: float = DEFAULT_VARIANCE_FLOOR) -> GmmParams:
    """One EM pass: responsibilities at the sampled z, then moment updates.

    Cluster means average the posterior means; variances add the posterior
    variances to the spread around the new mean, clamped at the floor.
    A cluster whose responsibility mass underflows keeps its parameters.
    """
    n = emb.mu.shape[0]
    if n < 1:
        raise ContractError("em_step needs at least one sample")
    gmm.validate()
    gamma = responsibilities(gmm, emb.z).gamma  # (n, K)
    mass = gamma.sum(axis=0)  # (K,)
    new = gmm.copy()
    for c in range(gmm.n_clusters):
        if mass[c] < 1e-12:
            warnings.warn(f"cluster {c} received ~zero responsibility mass; keeping its parameters")
            continue
        w = gamma[:, c : c + 1]
        mean_c = (w * emb.mu).sum(axis=0) / mass[c]
        var_c = (w * ((emb.mu - mean_c) ** 2 + emb.var)).sum(axis=0) / mass[c]
        new.means[c] = mean_c
        new.variances[c] = np.maximum(var_c, variance_floor)
    new.pi = mass / n
    new.pi = new.pi / new.pi.sum()  # guard the simplex against roundoff
    return new


def sample(model: GmVae, count: int, rng: np.random.Generator,
           cluster: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Draw latent points from the mixture and decode them.

    Conditional when `cluster` is given, otherwise the cluster is drawn from
    pi per sample. Returns (decoded curves (count, data_dim), cluster ids).
    """
    k = model.gmm.n_clusters
    if cluster is not None and not (0 <= cluster < k):
        raise InputError(f"cluster index {cluster} out of range for K={k}")
    if count < 0:
        raise InputError(f"count must be >= 0, got {count}")
    if cluster is None:
        ids = rng.choice(k, size=count, p=model.gmm.pi)
    else:
        ids = np.full(count, cluster, dtype=int)
    if count == 0:
        return np.zeros((0, model.data_dim)), ids
    eps = rng.standard_normal((count, model.latent_dim))
    z = model.gmm.means[ids] + np.sqrt(model.gmm.variances[ids]) * eps
    return decode(model, z), ids


def cluster_assign(model: GmVae, x: np.ndarray) -> np.ndarray:
    """Hard cluster labels: argmax responsibility of the posterior-mean embedding."""
    emb = encode(model, x, eps=np.zeros(1))
    return np.argmax(responsibilities(model.gmm, emb.mu).gamma, axis=1)


def permutation_accuracy(pred_clusters: np.ndarray, true_labels) -> tuple[float, dict]:
    """Best accuracy over injective cluster -> label assignments.

    Mixture components carry no intrinsic label order, so agreement is scored
    after choosing the best mapping; returns (accuracy, mapping).
    """
    from itertools import permutations

    pred_clusters = np.asarray(pred_clusters)
    true_labels = np.asarray(true_labels)
    clusters = sorted(set(int(c) for c in pred_clusters))
    labels = sorted(set(true_labels.tolist()))
    n = len(true_labels)
    best_acc, best_map = -1.0, {}
    for perm in permutations(labels, min(len(clusters), len(labels))):
        mapping = dict(zip(clusters, perm))
        acc = sum(1 for c, t in zip(pred_clusters, true_labels) if mapping.get(int(c)) == t) / n
        if acc > best_acc:
            best_acc, best_map = acc, mapping
    return best_acc, best_map
