"""Model checkpoints: one self-describing JSON file with a format tag."""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import InputError
from ..ndmath import Mlp
from .model import GmmParams, GmVae

FORMAT_TAG = "gmvlab-checkpoint-v1"


def _mlp_to_dict(net: Mlp) -> dict:
    return {
        "layer_dims": net.layer_dims,
        "weights": [w.tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def _mlp_from_dict(d: dict) -> Mlp:
    return Mlp(d["layer_dims"],
               [np.array(w, dtype=np.float64) for w in d["weights"]],
               [np.array(b, dtype=np.float64) for b in d["biases"]])


def save_checkpoint(model: GmVae, path, config: dict | None = None) -> str:
    """Write the checkpoint and return its content digest (sha256 hex)."""
    payload = {
        "format": FORMAT_TAG,
        "latent_dim": model.latent_dim,
        "decoder_var": model.decoder_var,
        "beta": model.beta,
        "encoder": _mlp_to_dict(model.encoder),
        "decoder": _mlp_to_dict(model.decoder),
        "gmm": {
            "pi": model.gmm.pi.tolist(),
            "means": model.gmm.means.tolist(),
            "variances": model.gmm.variances.tolist(),
        },
        "config": config or {},
    }
    blob = json.dumps(payload, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(blob)
    return hashlib.sha256(blob).hexdigest()


def load_checkpoint(path) -> tuple[GmVae, dict, str]:
    """Read a checkpoint; returns (model, stored config, content digest)."""
    with open(path, "rb") as fh:
        blob = fh.read()
    try:
        payload = json.loads(blob)
    except json.JSONDecodeError as e:
        raise InputError(f"checkpoint {path}: not valid JSON ({e})")
    if payload.get("format") != FORMAT_TAG:
        raise InputError(f"checkpoint {path}: unknown format tag {payload.get('format')!r}")
    gmm = GmmParams(
        pi=np.array(payload["gmm"]["pi"], dtype=np.float64),
        means=np.array(payload["gmm"]["means"], dtype=np.float64),
        variances=np.array(payload["gmm"]["variances"], dtype=np.float64),
    )
    model = GmVae(
        encoder=_mlp_from_dict(payload["encoder"]),
        decoder=_mlp_from_dict(payload["decoder"]),
        latent_dim=int(payload["latent_dim"]),
        decoder_var=float(payload["decoder_var"]),
        beta=float(payload["beta"]),
        gmm=gmm,
    )
    if model.encoder.layer_dims[-1] != 2 * model.latent_dim:
        raise InputError(f"checkpoint {path}: encoder output width "
                         f"{model.encoder.layer_dims[-1]} != 2 * latent_dim")
    if model.decoder_var <= 0 or model.beta < 0:
        raise InputError(f"checkpoint {path}: invalid decoder_var/beta")
    return model, payload.get("config", {}), hashlib.sha256(blob).hexdigest()
