"""Command-line front end for the whole pipeline.

Subcommands: generate, train, embed, sample, metric, baseline, align.
Exit codes: 0 success, 1 validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import align as align_mod
from . import baselines, datagen, spectral, tables
from .config import load_config
from .errors import ContractError, InputError, NumericalError
from .gmvae import (
    GmVae,
    TrainConfig,
    cluster_assign,
    embed_dataset,
    load_checkpoint,
    permutation_accuracy,
    sample,
    save_checkpoint,
    train,
)


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"{what} not found: {p}")
    return p


def cmd_generate(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.dataset.seed = args.seed
    d = cfg.dataset
    dataset = datagen.generate(seed=d.seed, n=d.n_samples, steps=d.steps, horizon=d.horizon,
                               label_threshold=d.label_threshold, kappa=d.kappa,
                               substeps=d.substeps)
    datagen.save_csv(dataset, args.out)
    labels = dataset.labels()
    n_reactive = sum(1 for v in labels if v == datagen.LABEL_REACTIVE)
    n = len(labels)
    print(f"wrote {n} trajectories to {args.out}")
    print(f"class balance: reactive {n_reactive}/{n} ({n_reactive / n:.3f}), "
          f"stable {n - n_reactive}/{n} ({(n - n_reactive) / n:.3f})")
    for name in datagen.SPLIT_NAMES:
        print(f"split {name}: {len(dataset.split[name])}")
    return 0


def _dataset_split_arrays(dataset):
    ids = np.arange(len(dataset))
    split_of = np.empty(len(dataset), dtype=object)
    for name, idx in dataset.split.items():
        split_of[idx] = name
    return ids, split_of


def _write_embeddings(model, dataset, out_path) -> None:
    x = dataset.matrix()
    emb, gamma = embed_dataset(model, x)
    hard = np.argmax(gamma, axis=1)
    ids, split_of = _dataset_split_arrays(dataset)
    tables.write_embeddings_csv(out_path, ids, split_of, emb.mu, var=emb.var, gamma=gamma,
                                hard_labels=hard, true_labels=dataset.labels())


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.training.seed = args.seed
    dataset_path = _require_file(args.dataset, "dataset CSV")
    dataset = datagen.load_csv(dataset_path, kappa=cfg.dataset.kappa)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    x_train = dataset.matrix("train")
    m = cfg.model
    rng = np.random.Generator(np.random.PCG64(cfg.training.seed))
    model = GmVae.init(data_dim=x_train.shape[1], latent_dim=m.latent_dim,
                       n_clusters=m.n_clusters, hidden_dims=m.hidden_dims,
                       decoder_var=m.decoder_var, beta=m.beta, rng=rng)
    tc = cfg.training
    train_cfg = TrainConfig(epochs=tc.epochs, batch_size=tc.batch_size, lr=tc.lr,
                            weight_decay=tc.weight_decay, n_em=tc.n_em,
                            variance_floor=tc.variance_floor, seed=tc.seed)
    say_every = max(1, tc.epochs // 20)

    def progress(epoch, terms):
        if (epoch + 1) % say_every == 0 or epoch == 0:
            print(f"epoch {epoch + 1}/{tc.epochs}: loss {terms.total_loss:.4f} "
                  f"recon {terms.recon:.4f} pi {np.round(model.gmm.pi, 4)}")

    history = train(model, x_train, train_cfg, progress=progress if not args.quiet else None)

    digest = save_checkpoint(model, out_dir / "checkpoint.json", config=cfg.as_dict())
    tables.write_history_csv(out_dir / "history.csv", history)
    _write_embeddings(model, dataset, out_dir / "embeddings.csv")

    x_test = dataset.matrix("test")
    acc, mapping = permutation_accuracy(cluster_assign(model, x_test), dataset.labels("test"))
    print(f"checkpoint digest: {digest}")
    print(f"test clustering accuracy (best permutation): {acc:.4f} via {mapping}")
    print(f"final pi: {np.array2string(model.gmm.pi, precision=4)}")
    return 0


def cmd_embed(args) -> int:
    model, _, digest = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    dataset = datagen.load_csv(_require_file(args.dataset, "dataset CSV"))
    print(f"checkpoint digest: {digest}")
    _write_embeddings(model, dataset, args.out)
    print(f"wrote embeddings to {args.out}")
    return 0


def cmd_sample(args) -> int:
    model, _, digest = load_checkpoint(_require_file(args.checkpoint, "checkpoint"))
    print(f"checkpoint digest: {digest}")
    rng = np.random.Generator(np.random.PCG64(args.seed if args.seed is not None else 1))
    curves, clusters = sample(model, args.count, rng, cluster=args.cluster)
    tables.write_samples_csv(args.out, curves, clusters)
    print(f"wrote {args.count} samples to {args.out}")
    if args.count:
        usage = np.bincount(clusters, minlength=model.gmm.n_clusters) / args.count
        print(f"cluster usage: {np.array2string(usage, precision=3)}")
    return 0


def cmd_metric(args) -> int:
    cfg = load_config(args.config)
    k = cfg.metric.k if args.k is None else args.k
    r = cfg.metric.r_percent if args.r is None else args.r
    emb = tables.read_embeddings_csv(_require_file(args.embeddings, "embeddings CSV"))
    q_ids, quantities = tables.read_quantities_csv(
        _require_file(args.quantities, "quantities CSV"), columns=args.columns)
    pos = {sid: i for i, sid in enumerate(q_ids)}
    missing = [sid for sid in emb["sample_ids"] if sid not in pos]
    if missing:
        raise InputError(f"sample_id {missing[0]} from {args.embeddings} "
                         f"has no row in {args.quantities}")
    rows = [pos[sid] for sid in emb["sample_ids"]]
    aligned = {name: q[rows] for name, q in quantities.items()}
    reports = spectral.interpretability_report(emb["mu"], aligned, k=k, r_percent=r)
    tables.write_report_csv(args.out, reports)
    if args.spectrum_out:
        graph = spectral.build_knn(emb["mu"], k)
        spec = spectral.spectrum(spectral.laplacian(graph))
        tables.write_spectrum_csv(args.spectrum_out, reports, spec.eigenvalues)
    for rep in reports:
        print(f"eta[{rep.quantity_name}] = {rep.eta:.6f} "
              f"(k={rep.k}, r={rep.r_percent:g}%, components={rep.n_components})")
    print(f"wrote report to {args.out}")
    return 0


def cmd_baseline(args) -> int:
    dataset = datagen.load_csv(_require_file(args.dataset, "dataset CSV"))
    x = dataset.matrix()
    if args.method == "mds":
        emb = baselines.classical_mds(baselines.euclidean_distances(x), args.dim)
    else:
        emb = baselines.isomap(x, k=args.k, dim=args.dim)
    final_stress = baselines.stress(baselines.euclidean_distances(x), emb.points)
    ids, split_of = _dataset_split_arrays(dataset)
    tables.write_embeddings_csv(args.out, ids, split_of, emb.points,
                                true_labels=dataset.labels())
    print(f"wrote {emb.method} embedding to {args.out} "
          f"(stress vs. Euclidean distances: {final_stress:.6g})")
    return 0


def cmd_align(args) -> int:
    emb = tables.read_embeddings_csv(_require_file(args.embeddings, "embeddings CSV"))
    p_ids, params = tables.read_quantities_csv(_require_file(args.params, "parameters CSV"),
                                               columns=args.columns)
    pos = {sid: i for i, sid in enumerate(p_ids)}
    missing = [sid for sid in emb["sample_ids"] if sid not in pos]
    if missing:
        raise InputError(f"sample_id {missing[0]} from {args.embeddings} "
                         f"has no row in {args.params}")
    rows = [pos[sid] for sid in emb["sample_ids"]]
    names = list(params)
    b = np.column_stack([params[name][rows] for name in names])
    report = align_mod.fit_affine(emb["mu"], b)
    transformed = align_mod.apply_map(report.map, emb["mu"])

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = {
        "a": report.map.a.tolist(),
        "c": report.map.c.tolist(),
        "z0": None if report.map.z0 is None else report.map.z0.tolist(),
        "residual_rms": report.residual_rms,
        "r_squared": {name: float(v) for name, v in zip(names, report.r_squared)},
        "n_samples": report.n_samples,
        "target_columns": names,
    }
    with open(out_dir / "align_report.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
    with open(out_dir / "transformed.csv", "w", newline="") as fh:
        import csv as _csv

        writer = _csv.writer(fh)
        writer.writerow(["sample_id"] + [f"pred_{name}" for name in names])
        for sid, row in zip(emb["sample_ids"], transformed):
            writer.writerow([str(sid)] + [tables.fmt(v) for v in row])
    print(f"residual_rms = {report.residual_rms:.6g}")
    for name, v in zip(names, report.r_squared):
        print(f"r_squared[{name}] = {v:.6f}")
    print(f"wrote report and transformed coordinates under {out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gmvlab",
                                     description="Mixture-prior VAE laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="INI config file")
        p.add_argument("--seed", type=int, default=None, help="override the relevant seed")

    p = sub.add_parser("generate", help="simulate the reaction dataset")
    common(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train the mixture-prior VAE")
    common(p)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("embed", help="export embeddings for a dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("sample", help="decode draws from the latent mixture")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--cluster", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("metric", help="spectral smoothness report")
    p.add_argument("--config", default=None, help="INI config file (metric section)")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--quantities", required=True)
    p.add_argument("--columns", nargs="+", default=None)
    p.add_argument("--k", type=int, default=None, help="neighbor count (default: config, 10)")
    p.add_argument("--r", type=float, default=None, help="low-mode percentage (default: config, 20)")
    p.add_argument("--out", required=True)
    p.add_argument("--spectrum-out", default=None)
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("baseline", help="classical MDS / Isomap embedding")
    p.add_argument("--method", choices=["mds", "isomap"], required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("align", help="affine map from embeddings to parameters")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--params", required=True)
    p.add_argument("--columns", nargs="+", default=None)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_align)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ContractError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except NumericalError as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
