"""Command-line entry point: decompose, pretrain, finetune, evaluate, predict, synth.

Exit codes: 0 success, 1 runtime or numeric failure, 2 input or validation
failure. Logs go to stderr; results go to stdout and files.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys

import numpy as np

from . import plotting
from .config import ConfigError, RunConfig, load_config
from .model import HierarchicalModel, ModelConfig, decompose, featurize, predict_cross
from .molio import ComplexRejected, ParseError, load_complexes, load_manifest, read_molecule, validate_complex
from .motifgen import decompose_compound, decompose_protein, summarize
from .numerics import (
    Adam, CheckpointError, NumericError, assign_parameters, cosine_lr, load_checkpoint,
    save_checkpoint, set_default_dtype,
)
from .training import (
    PretrainOptions, StepAborted, finetune_step, metric_pearson, metric_rmse, predict_affinity,
    pretrain_step,
)

log = logging.getLogger("hiercpi")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2

PRETRAIN_COLUMNS = ("step", "l_atom", "l_motif", "l_cond", "total")
FINETUNE_COLUMNS = ("epoch", "train_mse", "val_rmse", "val_pearson")


class InputError(Exception):
    """Bad user input that is not a parse/config/checkpoint error."""


def _plural(n: int, word: str) -> str:
    return f"{n} {word}" if n == 1 else f"{n} {word}s"


def _fmt(x) -> str:
    # repr round-trips float64 exactly, which keeps reruns byte-identical
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def _write_csv(path: str, columns, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


def _write_json(path: str, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _prepare_run(cfg: RunConfig) -> tuple[str, str]:
    set_default_dtype(np.float32 if cfg["run"]["dtype"] == "float32" else np.float64)
    report = cfg["paths"]["report_dir"]
    ckpt = cfg["paths"]["checkpoint_dir"]
    os.makedirs(report, exist_ok=True)
    os.makedirs(ckpt, exist_ok=True)
    with open(os.path.join(report, "effective_config.json"), "w") as fh:
        fh.write(cfg.to_json())
    return report, ckpt


def _load_set(path: str, what: str):
    if not path:
        raise InputError(f"no {what} manifest configured ([paths] {what}manifest)")
    rows = load_manifest(path)
    complexes, skipped = load_complexes(rows, log)
    if not complexes:
        raise InputError(f"{path}: no usable complexes ({len(skipped)} skipped)")
    return complexes, skipped


def _optimizer(model: HierarchicalModel, cfg: RunConfig) -> Adam:
    o = cfg["optim"]
    return Adam(model.parameters(), lr=o["lr"], betas=(o["beta1"], o["beta2"]), eps=o["eps"],
                max_grad_norm=o["max_grad_norm"] or None)


def _set_lr(opt: Adam, cfg: RunConfig, step: int, total: int) -> None:
    o = cfg["optim"]
    if o["schedule"] == "cosine":
        opt.lr = cosine_lr(o["lr"], step, total, o["min_lr_ratio"])


def _save(model: HierarchicalModel, path: str, meta: dict) -> None:
    arrays = {k: p.data for k, p in model.parameters().items()}
    save_checkpoint(path, arrays, {"model": model.config.to_dict(), **meta})


def _model_from_checkpoint(path: str, cfg: RunConfig | None = None) -> HierarchicalModel:
    arrays, meta = load_checkpoint(path)
    if cfg is not None:
        config = cfg.model
    elif "model" in meta:
        config = ModelConfig(**meta["model"])
    else:
        raise CheckpointError(f"{path}: no model configuration stored; pass --config")
    model = HierarchicalModel(config, seed=0)
    try:
        assign_parameters(model.parameters(), arrays, strict=True)
    except CheckpointError as exc:
        raise CheckpointError(f"{path}: {exc}") from None
    return model


# ------------------------------------------------------------------ commands

def cmd_decompose(args) -> int:
    if not args.compound and not args.protein:
        raise InputError("give --compound and/or --protein")
    out = {}
    for label, path, fn in (("compound", args.compound, decompose_compound),
                            ("protein", args.protein, decompose_protein)):
        if not path:
            continue
        mg = fn(read_molecule(path))
        for w in mg.warnings:
            log.warning("%s: %s", path, w)
        s = summarize(mg)
        hist = " ".join(f"{size}:{count}" for size, count in s["size_histogram"].items())
        print(f"{label}\t{_plural(s['motifs'], 'motif')}, {_plural(s['cut_bonds'], 'cut bond')}"
              f"\tsizes {hist}")
        out[label] = mg.to_dict()
    if args.out:
        _write_json(args.out, out)
    return EXIT_OK


def cmd_pretrain(args) -> int:
    cfg = load_config(args.config)
    report, ckpt_dir = _prepare_run(cfg)
    complexes, skipped = _load_set(cfg["paths"]["manifest"], "")
    decomps = [decompose(c) for c in complexes]

    seed = cfg.seed
    model = HierarchicalModel(cfg.model, seed=seed)
    opt = _optimizer(model, cfg)
    data_rng, pose_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    loss_cfg = cfg["loss"]
    options = PretrainOptions(d_max=cfg.d_max, w_atom=loss_cfg["w_atom"], w_motif=loss_cfg["w_motif"],
                              w_cond=loss_cfg["w_cond"], max_translation=loss_cfg["max_translation"])
    steps, bs, every = cfg["optim"]["steps"], cfg["optim"]["batch_size"], cfg["optim"]["checkpoint_every"]

    rows: list[dict] = []
    order: list[int] = []
    csv_path = os.path.join(report, "pretrain_losses.csv")
    for step in range(1, steps + 1):
        if len(order) < bs:
            order.extend(data_rng.permutation(len(complexes)).tolist())
        idx, order = order[:bs], order[bs:]
        _set_lr(opt, cfg, step - 1, steps)
        b = pretrain_step([complexes[i] for i in idx], model, opt, pose_rng, options,
                          [decomps[i] for i in idx])
        rows.append({"step": step, "l_atom": b.l_atom, "l_motif": b.l_motif, "l_cond": b.l_cond,
                     "total": b.total})
        log.info("step %d total %.5g", step, b.total)
        if step % every == 0:
            _save(model, os.path.join(ckpt_dir, f"pretrain_step{step:06d}.ckpt"), {"step": step})
    _save(model, os.path.join(ckpt_dir, "pretrain_final.ckpt"), {"step": steps})
    _write_csv(csv_path, PRETRAIN_COLUMNS, rows)
    plotting.plot_pretrain_losses(rows, os.path.join(report, "pretrain_losses.png"))
    summary = {"complexes": len(complexes), "skipped": len(skipped), "steps": steps,
               "initial_total": rows[0]["total"] if rows else None,
               "final_total": rows[-1]["total"] if rows else None}
    _write_json(os.path.join(report, "pretrain_summary.json"), summary)
    final = "n/a" if not rows else f"{rows[-1]['total']:.6g}"
    print(f"pretrained {steps} steps on {len(complexes)} complexes ({len(skipped)} skipped); "
          f"final total {final}")
    return EXIT_OK


def _evaluate(model: HierarchicalModel, feats) -> tuple[list[float], list[float]]:
    preds = [predict_affinity(f, model).value for f in feats]
    return preds, [f.affinity for f in feats]


def cmd_finetune(args) -> int:
    cfg = load_config(args.config)
    report, ckpt_dir = _prepare_run(cfg)
    train, skipped = _load_set(cfg["paths"]["manifest"], "")
    unlabeled = [c.id for c in train if c.affinity is None]
    if unlabeled:
        raise InputError(f"missing affinity labels for {len(unlabeled)} complexes, e.g. {unlabeled[:3]}")
    if cfg["paths"]["val_manifest"]:
        val, vskipped = _load_set(cfg["paths"]["val_manifest"], "val_")
        skipped += vskipped
        if any(c.affinity is None for c in val):
            raise InputError("validation manifest has unlabeled complexes")
    else:
        log.info("no val_manifest configured; validation metrics use the training set")
        val = train

    model = HierarchicalModel(cfg.model, seed=cfg.seed)
    if args.init != "scratch":
        arrays, _ = load_checkpoint(args.init)
        arrays = {k: v for k, v in arrays.items() if not k.startswith("affinity_head.")}
        params = {k: p for k, p in model.parameters().items() if not k.startswith("affinity_head.")}
        try:
            assign_parameters(params, arrays, strict=True)
        except CheckpointError as exc:
            raise CheckpointError(f"{args.init}: {exc}") from None
    labels = np.array([c.affinity for c in train])
    # start from the label mean so the encoders are not pushed around by an offset
    model.affinity_head.bias.data[:] = labels.mean()

    train_f = [featurize(c, d_max=cfg.d_max) for c in train]
    val_f = train_f if val is train else [featurize(c, d_max=cfg.d_max) for c in val]
    opt = _optimizer(model, cfg)
    data_rng = np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(3)[2])
    bs, epochs = cfg["optim"]["batch_size"], cfg["optim"]["epochs"]

    per_epoch = -(-len(train_f) // bs)
    rows = []
    for epoch in range(1, epochs + 1):
        perm = data_rng.permutation(len(train_f))
        losses, sizes = [], []
        for k, start in enumerate(range(0, len(perm), bs)):
            batch = [train_f[i] for i in perm[start:start + bs]]
            _set_lr(opt, cfg, (epoch - 1) * per_epoch + k, epochs * per_epoch)
            losses.append(finetune_step(batch, model, opt))
            sizes.append(len(batch))
        train_mse = float(np.dot(losses, sizes) / sum(sizes))
        preds, ys = _evaluate(model, val_f)
        rows.append({"epoch": epoch, "train_mse": train_mse, "val_rmse": metric_rmse(preds, ys),
                     "val_pearson": metric_pearson(preds, ys)})
        log.info("epoch %d train_mse %.5g val_rmse %.5g", epoch, train_mse, rows[-1]["val_rmse"])
    tag = "scratch" if args.init == "scratch" else "pretrained"
    _save(model, os.path.join(ckpt_dir, "finetune_final.ckpt"), {"epochs": epochs, "init": tag})
    _write_csv(os.path.join(report, "finetune_metrics.csv"), FINETUNE_COLUMNS, rows)
    plotting.plot_finetune_curves(rows, os.path.join(report, "finetune_curves.png"))
    last = rows[-1] if rows else None
    print(f"finetuned {epochs} epochs on {len(train)} complexes ({len(skipped)} skipped, init {tag})"
          + ("" if last is None else f"; val rmse {last['val_rmse']:.6g}, pearson {last['val_pearson']}"))
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config) if args.config else None
    model = _model_from_checkpoint(args.checkpoint, cfg)
    rows = load_manifest(args.manifest)
    complexes, skipped = load_complexes(rows, log)
    if not complexes:
        raise InputError(f"{args.manifest}: no usable complexes")
    if any(c.affinity is None for c in complexes):
        raise InputError(f"{args.manifest}: evaluation needs affinity labels on every row")
    preds, ys = _evaluate(model, [featurize(c) for c in complexes])
    metrics = {"rmse": metric_rmse(preds, ys), "pearson": metric_pearson(preds, ys), "n": len(ys)}
    out = args.out
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    _write_json(out, metrics)
    stem = os.path.splitext(out)[0]
    _write_csv(stem + "_predictions.csv", ("id", "label", "prediction"),
               [{"id": c.id, "label": y, "prediction": p} for c, y, p in zip(complexes, ys, preds)])
    plotting.plot_parity(preds, ys, stem + "_parity.png", title=f"n = {len(ys)}")
    print(json.dumps(metrics, sort_keys=True))
    if skipped:
        log.warning("%d manifest rows skipped", len(skipped))
    return EXIT_OK


def cmd_predict(args) -> int:
    model = _model_from_checkpoint(args.checkpoint)
    c = validate_complex(read_molecule(args.compound), read_molecule(args.protein),
                         id=os.path.basename(args.compound))
    feats = featurize(c)
    print(repr(predict_affinity(feats, model).value))
    if args.dump_distances:
        out = args.dump_distances
        os.makedirs(out, exist_ok=True)
        for which in ("atom", "motif"):
            mat = predict_cross(model, feats, which, mask_policy="masked").data
            path = os.path.join(out, f"{which}_distances.csv")
            with open(path, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                for row in mat:
                    w.writerow([repr(float(v)) for v in row])
            plotting.plot_distance_matrix(mat, os.path.join(out, f"{which}_distances.png"),
                                          title=f"{which}-level predicted distances")
    return EXIT_OK


def cmd_synth(args) -> int:
    from .synth import synth_dataset, write_dataset

    data = synth_dataset(args.n, args.seed)
    print(write_dataset(data, args.out, labeled=not args.unlabeled))
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hiercpi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")

    d = sub.add_parser("decompose", help="split molecules into motifs and print a summary")
    d.add_argument("--compound", help="compound SDF/MOL/JSON")
    d.add_argument("--protein", help="protein PDB/JSON")
    d.add_argument("--out", help="write motif graphs as JSON here")
    d.set_defaults(func=cmd_decompose)

    pt = sub.add_parser("pretrain", help="masked-distance pre-training")
    pt.add_argument("--config", required=True, help="INI config or an echoed effective_config.json")
    pt.set_defaults(func=cmd_pretrain)

    ft = sub.add_parser("finetune", help="affinity regression on a labeled manifest")
    ft.add_argument("--config", required=True, help="INI config or an echoed effective_config.json")
    ft.add_argument("--init", default="scratch", help="'scratch' or a pre-training checkpoint")
    ft.set_defaults(func=cmd_finetune)

    ev = sub.add_parser("evaluate", help="RMSE and Pearson on a labeled manifest")
    ev.add_argument("--checkpoint", required=True)
    ev.add_argument("--manifest", required=True)
    ev.add_argument("--config", help="build the model from this config instead of checkpoint metadata")
    ev.add_argument("--out", default="metrics.json")
    ev.set_defaults(func=cmd_evaluate)

    pr = sub.add_parser("predict", help="predict pKa for one compound/protein pair")
    pr.add_argument("--checkpoint", required=True)
    pr.add_argument("--compound", required=True)
    pr.add_argument("--protein", required=True)
    pr.add_argument("--dump-distances", metavar="DIR",
                    help="write atom- and motif-level predicted cross-distance CSVs")
    pr.set_defaults(func=cmd_predict)

    sy = sub.add_parser("synth", help="write a synthetic docked dataset and manifest")
    sy.add_argument("--n", type=int, default=8)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--out", required=True)
    sy.add_argument("--unlabeled", action="store_true")
    sy.set_defaults(func=cmd_synth)
    return p


def _configure_logging(verbose: bool) -> None:
    # one handler bound to the current stderr, replaced on every invocation
    for h in list(log.handlers):
        if getattr(h, "_hiercpi", False):
            log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    handler._hiercpi = True
    log.addHandler(handler)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    _configure_logging(args.verbose)
    try:
        return args.func(args)
    except (ParseError, ConfigError, CheckpointError, ComplexRejected, InputError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except OSError as exc:
        where = f"{exc.filename}: " if exc.filename else ""
        log.error("%s%s", where, exc.strerror or exc)
        return EXIT_INPUT
    except (NumericError, StepAborted, FloatingPointError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
