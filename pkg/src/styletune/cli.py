"""Command-line entry point.

Subcommands: train, stylize, sweep, eval, gradcheck, serve.  Every run
prints its resolved configuration before acting.  stylize and the service
share one code path, so their outputs are byte-identical for the same
model, input, strength, and size.

Exit codes: 0 success, 1 gradcheck over tolerance, 2 bad flags or config,
3 training abort.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .checkpoint import CheckpointError
from .encoder import generate_encoder
from .evaluation import loss_ratio
from .gradcheck import grad_check
from .imageio import ImageFormatError, load_image
from .infer import load_transformer, model_metadata, stylize_png_bytes
from .losses import LossWeights, make_style_target, total_loss
from .network import ArchitectureConfig, forward, init_weights, norm_absorbed_param_names
from .service import DEFAULT_MAX_BODY, ServiceState, serve
from .tensor import Tensor
from .training import ConfigError, TrainConfig, TrainingError, list_content_images, train

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_TRAINING = 3


def _print_config(name: str, cfg: dict) -> None:
    print(f"[{name}] resolved config: {json.dumps(cfg, sort_keys=True)}", flush=True)


def _alpha_list(raw: str) -> list[float]:
    try:
        values = [float(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"cannot parse alpha list {raw!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"alpha list {raw!r} is empty")
    for v in values:
        if not np.isfinite(v):
            raise ConfigError(f"alpha values must be finite, got {v!r}")
    return values


def cmd_train(args) -> int:
    cfg = TrainConfig.from_json(args.config)
    _print_config("train", cfg.resolved())
    enc = generate_encoder(args.encoder_seed, dtype=cfg.dtype)
    log_path = args.log or (cfg.checkpoint_out + ".log.jsonl" if cfg.checkpoint_out else None)
    try:
        train(cfg, enc, log_path=log_path)
    except TrainingError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    if cfg.checkpoint_out:
        print(f"checkpoint written to {cfg.checkpoint_out}")
    if log_path:
        print(f"log written to {log_path}")
    return EXIT_OK


def cmd_stylize(args) -> int:
    _print_config("stylize", {
        "model": args.model, "input": args.input, "alpha": args.alpha,
        "output": args.output, "size": args.size,
    })
    weights = load_transformer(args.model)
    with open(args.input, "rb") as fh:
        data = fh.read()
    png = stylize_png_bytes(weights, data, args.alpha, args.size)
    with open(args.output, "wb") as fh:
        fh.write(png)
    print(f"wrote {args.output}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    alphas = _alpha_list(args.alphas)
    _print_config("sweep", {
        "model": args.model, "input": args.input, "alphas": alphas,
        "outdir": args.outdir, "size": args.size,
    })
    unique: list[float] = []
    for a in alphas:
        if a in unique:
            print(f"warning: duplicate alpha {a!r} ignored", file=sys.stderr)
        else:
            unique.append(a)
    names = {a: f"out_{a:.1f}.png" for a in unique}
    if len(set(names.values())) != len(unique):
        raise ConfigError("alpha values collide at one-decimal filenames; use distinct tenths")

    weights = load_transformer(args.model)
    with open(args.input, "rb") as fh:
        data = fh.read()
    os.makedirs(args.outdir, exist_ok=True)
    index = []
    for a in unique:
        png = stylize_png_bytes(weights, data, a, args.size)
        path = os.path.join(args.outdir, names[a])
        with open(path, "wb") as fh:
            fh.write(png)
        index.append({"alpha": a, "file": names[a]})
    with open(os.path.join(args.outdir, "index.json"), "w") as fh:
        json.dump({"input": args.input, "entries": index}, fh, indent=2)
    print(f"wrote {len(unique)} images + index.json to {args.outdir}")
    return EXIT_OK


def cmd_eval(args) -> int:
    alphas = _alpha_list(args.alphas)
    styles = [tok for tok in args.styles.split(",") if tok]
    _print_config("eval", {
        "model": args.model, "contents": args.contents, "styles": styles,
        "alphas": alphas, "self_baseline": args.self_baseline,
        "baselines": args.baseline, "size": args.size, "encoder_seed": args.encoder_seed,
    })
    weights = load_transformer(args.model, dtype=np.float64)
    enc = generate_encoder(args.encoder_seed, dtype=np.float64)
    contents = [
        load_image(p, size=args.size, dtype=np.float64)
        for p in list_content_images(args.contents)
    ]
    targets = {
        os.path.basename(p): make_style_target(load_image(p, size=args.size, dtype=np.float64), enc)
        for p in styles
    }
    if args.self_baseline:
        baselines = {a: weights for a in alphas}
    else:
        parsed: dict[float, str] = {}
        for spec in args.baseline or []:
            if "=" not in spec:
                raise ConfigError(f"--baseline expects ALPHA=CHECKPOINT, got {spec!r}")
            a_str, path = spec.split("=", 1)
            parsed[float(a_str)] = path
        missing = [a for a in alphas if a not in parsed]
        if missing:
            raise ConfigError(f"no baseline model for strength {missing[0]!r}")
        baselines = {a: load_transformer(p, dtype=np.float64) for a, p in parsed.items()}
    report = loss_ratio(weights, baselines, contents, targets, alphas, LossWeights(), enc)
    if args.out_json:
        report.write_json(args.out_json)
        print(f"wrote {args.out_json}")
    if args.out_csv:
        report.write_csv(args.out_csv)
        print(f"wrote {args.out_csv}")
    for alpha in alphas:
        means = {m: report.mean(alpha, m) for m in ("total", "content", "style")}
        stds = {m: report.std(alpha, m) for m in ("total", "content", "style")}
        print(
            f"alpha={alpha}: total={means['total']:.4f}±{stds['total']:.4f} "
            f"content={means['content']:.4f}±{stds['content']:.4f} "
            f"style={means['style']:.4f}±{stds['style']:.4f}"
        )
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    _print_config("gradcheck", {
        "seed": args.seed, "tolerance": args.tolerance, "samples": args.samples,
    })
    rng = np.random.default_rng(args.seed)
    arch = ArchitectureConfig.test_scale()
    weights = init_weights(arch, args.seed, dtype=np.float64)
    enc = generate_encoder(args.seed, dtype=np.float64)
    x = Tensor(rng.uniform(0.05, 0.95, size=(1, 3, 16, 16)))
    style = Tensor(rng.uniform(0.05, 0.95, size=(1, 3, 16, 16)))
    target = make_style_target(style, enc)

    def f():
        y = forward(x, weights, 1.5)
        loss, _ = total_loss(x, y, target, 1.5, LossWeights(), enc)
        return loss

    pool = sorted(set(weights.params) - norm_absorbed_param_names(arch))
    picks = rng.choice(pool, size=min(args.samples, len(pool)), replace=False)
    params = {name: weights.params[name] for name in picks}
    report = grad_check(f, params, epsilon=1e-5, tolerance=args.tolerance, samples_per_param=2,
                        rng=np.random.default_rng(args.seed + 1))
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


def cmd_serve(args) -> int:
    _print_config("serve", {
        "model": args.model, "host": args.host, "port": args.port,
        "size": args.size, "max_body_bytes": args.max_body_bytes, "ui": args.ui,
    })
    weights = load_transformer(args.model)
    meta = model_metadata(weights, args.model, args.size)
    state = ServiceState(
        weights=weights,
        image_size=args.size,
        metadata=meta,
        max_body_bytes=args.max_body_bytes,
        ui_dir=args.ui,
    )
    serve(state, host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="styletune", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a strength-conditioned model from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--log", default=None, help="JSONL step log path")
    p.add_argument("--encoder-seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("stylize", help="stylize one image at one strength")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--size", type=int, default=64)
    p.set_defaults(func=cmd_stylize)

    p = sub.add_parser("sweep", help="render one image at several strengths")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--alphas", required=True, help="comma-separated strengths")
    p.add_argument("--outdir", required=True)
    p.add_argument("--size", type=int, default=64)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("eval", help="loss-ratio evaluation against baselines")
    p.add_argument("--model", required=True)
    p.add_argument("--contents", required=True, help="directory of content images")
    p.add_argument("--styles", required=True, help="comma-separated style image paths")
    p.add_argument("--alphas", required=True)
    p.add_argument("--self-baseline", action="store_true")
    p.add_argument("--baseline", action="append", metavar="ALPHA=CKPT")
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-csv", default=None)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--encoder-seed", type=int, default=0)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the full loss gradient")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--samples", type=int, default=10, help="parameters to sample")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("serve", help="run the stylization HTTP service")
    p.add_argument("--model", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=0)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--max-body-bytes", type=int, default=DEFAULT_MAX_BODY)
    p.add_argument("--ui", default=None, help="serve a static UI directory at /ui")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CheckpointError, ImageFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingError as exc:
        print(f"training aborted: {exc}", file=sys.stderr)
        return EXIT_TRAINING


if __name__ == "__main__":
    sys.exit(main())
