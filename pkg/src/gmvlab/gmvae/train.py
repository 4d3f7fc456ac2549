"""EM-alternating training loop.

Each epoch runs Adam minibatch descent on the negative ELBO plus the
beta-KL regularizer (responsibilities held fixed within a batch), then
re-embeds the full training set and applies the scheduled number of EM
updates to the mixture parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, NumericalError
from ..ndmath import AdamState, Tape, adam_step, backward, forward_mlp
from ..ndmath import exp as texp
from ..ndmath import slice_cols, square, vsum
from .model import (
    LOG_2PI,
    ElboTerms,
    GmVae,
    LatentEmbedding,
    encode,
    em_step,
    responsibilities,
)

ENC_PREFIX = "enc."
DEC_PREFIX = "dec."


@dataclass
class TrainConfig:
    epochs: int = 20000
    batch_size: int = 64
    lr: float = 1e-3
    weight_decay: float = 0.0
    n_em: int = 1
    variance_floor: float = 1e-6
    seed: int = 1


@dataclass
class TrainHistory:
    """Per-epoch objective terms (per-sample means) and mixture snapshots."""

    terms: list = field(default_factory=list)      # list of ElboTerms
    pi: list = field(default_factory=list)         # list of (K,) arrays
    means: list = field(default_factory=list)      # list of (K, d) arrays
    variances: list = field(default_factory=list)  # list of (K, d) arrays

    def __len__(self):
        return len(self.terms)

    def append(self, terms: ElboTerms, gmm) -> None:
        self.terms.append(terms)
        self.pi.append(gmm.pi.copy())
        self.means.append(gmm.means.copy())
        self.variances.append(gmm.variances.copy())


def batch_loss(model: GmVae, x: np.ndarray, eps: np.ndarray, tape: Tape,
               gamma: np.ndarray | None = None):
    """Record the training objective for one batch on `tape`.

    Builds encoder -> reparameterized z -> decoder and the ELBO terms as tape
    nodes. Responsibilities are evaluated at the sampled z from the current
    mixture and enter the loss as constants (no gradient flows through them)
    unless a fixed `gamma` is supplied. Returns (loss Var, ElboTerms, z value).
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    n, data_dim = x.shape
    d = model.latent_dim
    gmm = model.gmm

    enc_out = forward_mlp(model.encoder, x, tape, ENC_PREFIX)
    mu = slice_cols(enc_out, 0, d)
    logvar = slice_cols(enc_out, d, 2 * d)
    var = texp(logvar)
    z = mu + texp(logvar * 0.5) * tape.constant(eps)
    if not np.all(np.isfinite(z.value)):
        raise NumericalError("encoder produced non-finite latent state")
    if gamma is None:
        gamma = responsibilities(gmm, z.value).gamma

    x_hat = forward_mlp(model.decoder, z, tape, DEC_PREFIX)
    sq_err = vsum(square(x_hat - x))
    recon = sq_err * (-0.5 / model.decoder_var) + (
        -0.5 * n * data_dim * (LOG_2PI + np.log(model.decoder_var)))

    # sum_c gamma_c * sum_j(log 2 pi s_c + (var + (mu - m_c)^2) / s_c), gamma fixed
    cluster = None
    logdet = np.sum(np.log(gmm.variances) + LOG_2PI, axis=1)  # (K,)
    for c in range(gmm.n_clusters):
        w = gamma[:, c : c + 1]  # (n, 1) constant weight column
        quad = vsum((square(mu + (-gmm.means[c])) + var) * (w / gmm.variances[c]))
        piece = quad + float(gamma[:, c].sum() * logdet[c])
        cluster = piece if cluster is None else cluster + piece
    cluster = cluster * (-0.5)

    entropy = vsum(logvar) * 0.5 + 0.5 * n * d * (LOG_2PI + 1.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        cat = gamma * (np.log(gmm.pi)[None, :] - np.log(gamma))
    categorical = float(np.sum(np.where(gamma > 0.0, cat, 0.0)))

    reg = (vsum(square(mu)) + vsum(var) + vsum(logvar) * (-1.0) + (-n * d)) * (0.5 * model.beta)

    loss = -(recon + cluster + entropy + categorical) + reg
    terms = ElboTerms(recon=float(recon.value), cluster_kl=float(cluster.value),
                      posterior_entropy=float(entropy.value), categorical_term=categorical,
                      reg=float(reg.value))
    return loss, terms, z.value


def _model_params(model: GmVae) -> dict:
    params = model.encoder.param_dict(ENC_PREFIX)
    params.update(model.decoder.param_dict(DEC_PREFIX))
    return params


def _load_params(model: GmVae, params: dict) -> None:
    model.encoder.load_param_dict(params, ENC_PREFIX)
    model.decoder.load_param_dict(params, DEC_PREFIX)


def train(model: GmVae, x_train: np.ndarray, cfg: TrainConfig,
          progress=None) -> TrainHistory:
    """Train `model` in place on the (n, data_dim) matrix; returns the history.

    Deterministic for a fixed seed: the same permutations, noise draws and
    update order replay exactly. `progress`, if given, is called as
    progress(epoch, terms) after each epoch.
    """
    x_train = np.atleast_2d(np.asarray(x_train, dtype=np.float64))
    n = x_train.shape[0]
    if n == 0:
        raise InputError("train needs a non-empty training set")
    if cfg.batch_size < 1:
        raise InputError(f"batch_size must be >= 1, got {cfg.batch_size}")
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    adam = AdamState(lr=cfg.lr, weight_decay=cfg.weight_decay)
    history = TrainHistory()

    for epoch in range(cfg.epochs):
        perm = rng.permutation(n)
        sums = np.zeros(5)
        for start in range(0, n, cfg.batch_size):
            rows = perm[start:start + cfg.batch_size]
            xb = x_train[rows]
            eps = rng.standard_normal((len(rows), model.latent_dim))
            tape = Tape()
            last_good = f"last good epoch {epoch - 1}" if epoch else "no completed epoch"
            try:
                loss, terms, _ = batch_loss(model, xb, eps, tape)
            except NumericalError as e:
                raise NumericalError(
                    f"epoch {epoch}, batch {start // cfg.batch_size}: {e} ({last_good})")
            if not np.isfinite(loss.value):
                raise NumericalError(
                    f"non-finite loss at epoch {epoch}, batch {start // cfg.batch_size} "
                    f"({last_good})")
            grads = backward(tape, loss)
            params = _model_params(model)
            new_params, adam = adam_step(params, grads, adam)
            _load_params(model, new_params)
            sums += np.array([terms.recon, terms.cluster_kl, terms.posterior_entropy,
                              terms.categorical_term, terms.reg])

        emb = encode(model, x_train, rng=rng)
        for _ in range(cfg.n_em):
            model.gmm = em_step(model.gmm, emb, variance_floor=cfg.variance_floor)

        epoch_terms = ElboTerms(*(sums / n))
        history.append(epoch_terms, model.gmm)
        if progress is not None:
            progress(epoch, epoch_terms)
    return history


def embed_dataset(model: GmVae, x: np.ndarray) -> tuple[LatentEmbedding, np.ndarray]:
    """Deterministic posterior-mean embeddings plus their responsibilities."""
    emb = encode(model, x, eps=np.zeros(1))
    gamma = responsibilities(model.gmm, emb.mu).gamma
    return emb, gamma
