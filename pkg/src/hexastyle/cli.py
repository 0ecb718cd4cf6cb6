"""Command-line entry point: the full pipeline as subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, attention, encoding, phonology, pipeline, scansion
from .config import ConfigError, RunConfig, load_config
from .corpus import CorpusError, ingest, read_manifest, split_and_window
from .models import TrainConfig, build_cnn, build_lstm, evaluate, load_checkpoint, train

log = logging.getLogger("hexastyle")

try:
    from importlib.metadata import version as _pkg_version

    VERSION = _pkg_version("hexastyle")
except Exception:  # pragma: no cover - not installed
    VERSION = "0.1.0+local"


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="run configuration file")
    p.add_argument("--output", help="output directory (overrides config)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")
    p.add_argument("--threads", type=int, help="worker thread cap (overrides config)")


def _resolve(args: argparse.Namespace) -> RunConfig:
    cfg = load_config(getattr(args, "config", None))
    for key in ("output", "seed", "threads", "manifest", "model", "ablation",
                "pooling", "epochs", "batch_size", "learning_rate"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    cfg.validate()
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hexastyle",
        description="Latin hexameter encoding, authorship models, attention maps",
    )
    parser.add_argument("--version", action="version", version="hexastyle " + VERSION)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("transcribe", help="raw verse on stdin -> phonetic lines on stdout")
    _add_common(p)

    p = sub.add_parser("scan", help="raw verse on stdin -> annotated token lines on stdout")
    p.add_argument("--spondaic-fifth", action="store_true")
    _add_common(p)

    p = sub.add_parser("tokenize", help="tokenize a corpus manifest into .tokens files")
    p.add_argument("--manifest", required=True)
    _add_common(p)

    p = sub.add_parser("build-lexicon", help="build the token lexicon from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ablation", choices=["full", "metre_only", "sound_only"])
    _add_common(p)

    p = sub.add_parser("encode", help="split a corpus and encode windows to binary containers")
    p.add_argument("--manifest", required=True)
    p.add_argument("--ablation", choices=["full", "metre_only", "sound_only"])
    _add_common(p)

    p = sub.add_parser("train", help="train a classifier on encoded splits")
    p.add_argument("--model", choices=["cnn", "lstm"])
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--learning-rate", dest="learning_rate", type=float)
    p.add_argument("--pooling", choices=["avg", "max"])
    p.add_argument("--embeddings-from", help="checkpoint to transplant embeddings from")
    p.add_argument("--freeze-embeddings", action="store_true")
    _add_common(p)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on the test split")
    p.add_argument("--checkpoint", required=True)
    _add_common(p)

    p = sub.add_parser("attend", help="render an attention heatmap for one sample")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--work", required=True, help="work label of the sample")
    p.add_argument("--start", type=int, default=1, help="1-based start line")
    p.add_argument("--visualizer", choices=["vanilla", "gradcam", "scorecam"],
                   default="vanilla")
    p.add_argument("--layer", default="conv2")
    p.add_argument("--target-class", type=int, default=-1,
                   help="class index; -1 = predicted class")
    p.add_argument("--out", required=True, help="output SVG path")
    _add_common(p)

    p = sub.add_parser("embed-analyze", help="project embeddings and test flag-class clustering")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--lexicon", required=True)
    _add_common(p)

    return parser


# ---------------------------------------------------------------------------


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(manifest: str):
    return ingest(read_manifest(manifest))


def _prepare(cfg: RunConfig, manifest: str):
    corpus = _load_corpus(manifest)
    token_map, stats = pipeline.tokenize_corpus(corpus, cfg)
    log.info("tokenized %d lines (%d unscannable)", stats["lines"], stats["unscannable"])
    return corpus, token_map, stats


def cmd_transcribe(args, cfg) -> int:
    sys.stdout.write(phonology.transcribe_text(sys.stdin.read()) + "\n")
    return 0


def cmd_scan(args, cfg) -> int:
    for line in sys.stdin.read().splitlines():
        if not line.strip():
            continue
        tokens = encoding.tokenize_line(
            line, allow_spondaic_fifth=bool(getattr(args, "spondaic_fifth", False))
        )
        sys.stdout.write(" ".join(tokens + [encoding.EOL]) + "\n")
    return 0


def cmd_tokenize(args, cfg) -> int:
    out = _outdir(cfg)
    corpus, token_map, stats = _prepare(cfg, args.manifest)
    for label, per_line in token_map.items():
        path = out / (label + ".tokens")
        with open(path, "w", encoding="utf-8") as fh:
            for tokens in per_line:
                fh.write(" ".join(tokens + [encoding.EOL]) + "\n")
        log.info("wrote %s", path)
    (out / "tokenize_stats.json").write_text(json.dumps(stats, indent=2))
    return 0


def _build_lexicon(cfg, token_map):
    return encoding.build_lexicon(pipeline.corpus_token_stream(token_map, cfg.ablation))


def cmd_build_lexicon(args, cfg) -> int:
    out = _outdir(cfg)
    _, token_map, _ = _prepare(cfg, args.manifest)
    lexicon = _build_lexicon(cfg, token_map)
    (out / "lexicon.tsv").write_text(lexicon.to_tsv(), encoding="utf-8")
    log.info("lexicon of %d tokens -> %s", lexicon.size, out / "lexicon.tsv")
    return 0


def cmd_encode(args, cfg) -> int:
    out = _outdir(cfg)
    corpus, token_map, _ = _prepare(cfg, args.manifest)
    lexicon = _build_lexicon(cfg, token_map)
    (out / "lexicon.tsv").write_text(lexicon.to_tsv(), encoding="utf-8")
    splits = split_and_window(
        corpus, cfg.window, cfg.train_stride, cfg.eval_stride, cfg.ratios
    )
    (out / "splits.tsv").write_text(splits.manifest_tsv(), encoding="utf-8")
    labels = corpus.labels
    for name, windows in (("train", splits.train), ("val", splits.val),
                          ("test", splits.test)):
        grids, y, _ = pipeline.encode_split(windows, token_map, lexicon,
                                            cfg.ablation, labels)
        samples = [
            encoding.EncodedSample(grid, np.empty(0, dtype=np.int32), labels[int(yi)])
            for grid, yi in zip(grids, y)
        ]
        encoding.write_encoded(out / (name + ".bin"), samples, labels)
        log.info("%s: %d windows", name, len(windows))
    return 0


def _load_split(out: Path, name: str):
    return encoding.read_encoded(out / (name + ".bin"))


def cmd_train(args, cfg) -> int:
    out = _outdir(cfg)
    lexicon = encoding.Lexicon.from_tsv((out / "lexicon.tsv").read_text(encoding="utf-8"))
    train_grids, train_y, labels = _load_split(out, "train")
    val_grids, val_y, _ = _load_split(out, "val")
    eol = lexicon.id_of(encoding.EOL)
    rng = np.random.default_rng(cfg.seed)
    if cfg.model == "cnn":
        model = build_cnn(lexicon.size, len(labels), pooling=cfg.pooling, rng=rng)
    else:
        model = build_lstm(lexicon.size, len(labels), rng=rng)
    model.lexicon_fingerprint = lexicon.fingerprint()
    if getattr(args, "embeddings_from", None):
        from .models import transplant_embeddings

        source, _ = load_checkpoint(args.embeddings_from)
        transplant_embeddings(model, source, freeze=bool(args.freeze_embeddings))
        log.info("transplanted embeddings from %s", args.embeddings_from)
    tc = TrainConfig(
        epochs=cfg.epochs,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate or None,
        seed=cfg.seed,
        ablation=cfg.ablation,
        pooling=cfg.pooling,
        patience=cfg.patience,
    )
    history = train(
        model,
        pipeline.model_inputs(cfg.model, train_grids, eol),
        train_y,
        pipeline.model_inputs(cfg.model, val_grids, eol),
        val_y,
        tc,
    )
    ckpt = out / (cfg.model + ".ckpt")
    model.save(ckpt, rng=rng)
    metrics = {"history": history, "labels": labels, "config": vars(cfg)}
    (out / (cfg.model + "_train_metrics.json")).write_text(json.dumps(metrics, indent=2))
    log.info("checkpoint -> %s", ckpt)
    return 0


def cmd_evaluate(args, cfg) -> int:
    out = _outdir(cfg)
    lexicon = encoding.Lexicon.from_tsv((out / "lexicon.tsv").read_text(encoding="utf-8"))
    model, header = load_checkpoint(args.checkpoint)
    if model.lexicon_fingerprint != lexicon.fingerprint():
        raise ConfigError("checkpoint lexicon fingerprint does not match lexicon.tsv")
    grids, y, labels = _load_split(out, "test")
    eol = lexicon.id_of(encoding.EOL)
    result = evaluate(model, pipeline.model_inputs(model.kind, grids, eol), y)
    payload = {
        "accuracy": result["accuracy"],
        "loss": result["loss"],
        "confusion": result["confusion"].tolist(),
        "logits": result["logits"].tolist(),
        "labels": labels,
        "model": model.kind,
    }
    path = out / (model.kind + "_eval_metrics.json")
    path.write_text(json.dumps(payload, indent=2))
    log.info("test accuracy %.4f -> %s", result["accuracy"], path)
    return 0


def cmd_attend(args, cfg) -> int:
    model, header = load_checkpoint(args.checkpoint)
    lexfile = Path(cfg.output) / "lexicon.tsv"
    lexicon = encoding.Lexicon.from_tsv(lexfile.read_text(encoding="utf-8"))
    corpus = _load_corpus(args.manifest)
    work = next((w for w in corpus.works if w.label == args.work), None)
    if work is None:
        raise CorpusError("no work labelled %r in manifest" % args.work)
    start = args.start
    lines = work.lines[start - 1 : start - 1 + 64]
    if len(lines) < 64:
        raise CorpusError("sample would run past the end of %r" % args.work)
    token_rows = []
    for line in lines:
        try:
            token_rows.append(encoding.tokenize_line(line.text))
        except ValueError:
            token_rows.append([pipeline.UNSCANNED])
    grid = np.zeros((64, encoding.GRID_COLS), dtype=np.int64)
    for r, tokens in enumerate(token_rows):
        ids = [lexicon.id_of(t) for t in encoding.ablate(tokens, cfg.ablation)]
        grid[r, : len(ids)] = ids
    target = args.target_class
    if target < 0:
        target = int(model.probs(grid[None] if model.kind == "cnn" else
                                 pipeline.sequences_from_grids(grid[None], lexicon.id_of(encoding.EOL))[0][None]).argmax())
    if args.visualizer == "vanilla":
        if model.kind == "cnn":
            values = attention.vanilla_saliency(model, grid, target)
        else:
            seq = pipeline.sequences_from_grids(grid[None], lexicon.id_of(encoding.EOL))[0]
            tokens = [lexicon.token_of(int(t)) for t in seq]
            values = attention.vanilla_saliency(model, seq, target, tokens=tokens)
    elif args.visualizer == "gradcam":
        values = attention.grad_cam(model, grid, target, layer=args.layer)
    else:
        values = attention.score_cam(model, grid, target, layer=args.layer)
    svg = attention.render_heatmap(
        values,
        token_rows,
        title="%s %s+%d" % (args.work, "line", start),
        subtitle="%s/%s class %d" % (model.kind, args.visualizer, target),
    )
    Path(args.out).write_text(svg, encoding="utf-8")
    sidecar = Path(args.out).with_suffix(".json")
    sidecar.write_text(json.dumps({"map": values.tolist(), "target_class": target,
                                   "visualizer": args.visualizer}))
    log.info("heatmap -> %s (sidecar %s)", args.out, sidecar)
    return 0


def cmd_embed_analyze(args, cfg) -> int:
    out = _outdir(cfg)
    model, _ = load_checkpoint(args.checkpoint)
    lexicon = encoding.Lexicon.from_tsv(Path(args.lexicon).read_text(encoding="utf-8"))
    matrix, tokens = analysis.export_embeddings(model, lexicon)
    (out / "embeddings.tsv").write_text(analysis.embeddings_tsv(matrix, tokens),
                                        encoding="utf-8")
    coords, components, evr = analysis.project_2d(matrix)
    coord_rows = [
        "%s\t%.17g\t%.17g" % (tok, xy[0], xy[1]) for tok, xy in zip(tokens, coords)
    ]
    (out / "embedding_coords.tsv").write_text("\n".join(coord_rows) + "\n",
                                              encoding="utf-8")
    classes = analysis.flag_classes(lexicon)
    report = analysis.class_density_report(coords, classes, seed=cfg.seed)
    stats = {"explained_variance_ratio": evr.tolist(), "projection": "pca",
             "classes": {}}
    for name, entry in report["classes"].items():
        stats["classes"][name] = {
            k: v for k, v in entry.items() if k != "density"
        }
        if "density" in entry:
            svg = _density_svg(entry["density"], name)
            (out / ("density_%s.svg" % name)).write_text(svg, encoding="utf-8")
    (out / "embedding_stats.json").write_text(json.dumps(stats, indent=2))
    log.info("embedding analysis -> %s", out)
    return 0


def _density_svg(density: np.ndarray, name: str, cells: int = 100) -> str:
    from .attention import _heat_color

    step = max(density.shape[0] // cells, 1)
    ds = density[::step, ::step]
    vmax = ds.max() or 1.0
    size = 4
    rows = ['<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d">'
            % (ds.shape[1] * size, ds.shape[0] * size + 16)]
    rows.append('<text x="2" y="12" font-family="monospace" font-size="10">%s</text>' % name)
    for i in range(ds.shape[0]):
        for j in range(ds.shape[1]):
            rows.append('<rect x="%d" y="%d" width="%d" height="%d" fill="%s"/>'
                        % (j * size, 16 + i * size, size, size,
                           _heat_color(float(ds[i, j] / vmax))))
    rows.append("</svg>")
    return "\n".join(rows) + "\n"


_COMMANDS = {
    "transcribe": cmd_transcribe,
    "scan": cmd_scan,
    "tokenize": cmd_tokenize,
    "build-lexicon": cmd_build_lexicon,
    "encode": cmd_encode,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "attend": cmd_attend,
    "embed-analyze": cmd_embed_analyze,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = _resolve(args)
        if cfg.threads:
            os.environ.setdefault("OMP_NUM_THREADS", str(cfg.threads))
        return _COMMANDS[args.command](args, cfg)
    except (ConfigError, CorpusError, ValueError, OSError) as exc:
        sys.stderr.write("hexastyle: error: %s\n" % exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
