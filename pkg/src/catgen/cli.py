"""Single entry point: prepare / train / generate / eval / parser-prep.

Every file-producing run also writes a key=value manifest next to its
outputs with the resolved configuration, seeds and artifact checksums, so a
run can be reproduced exactly from the manifest alone.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import sys
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_io
from . import corpus as corpus_mod
from . import evaluate as eval_mod
from . import report as report_mod
from .generator import GenerationConfig, detokenize, generate
from .model import ModelConfig
from .trainer import TrainingConfig, run_experiment, train


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_run_manifest(
    path: Path, subcommand: str, settings: dict, inputs: list[Path], outputs: list[Path]
) -> None:
    lines = [f"subcommand={subcommand}"]
    lines += [f"{k}={v}" for k, v in sorted(settings.items())]
    for p in inputs:
        lines.append(f"input.{p.name}={p}")
        lines.append(f"input.{p.name}.sha256={_sha256(p)}")
    for p in outputs:
        lines.append(f"output.{p.name}={p}")
        lines.append(f"output.{p.name}.sha256={_sha256(p)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _parse_input_spec(spec: str) -> tuple[str, int]:
    path, sep, cat = spec.rpartition(":")
    if not sep or not cat.isdigit():
        raise argparse.ArgumentTypeError(f"expected <file>:<category>, got {spec!r}")
    return path, int(cat)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="catgen",
        description="Category-conditioned LSTM text generation: corpus prep, "
        "training, controlled decoding and novelty evaluation.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("prepare", help="build a dataset directory from raw text files")
    p.add_argument(
        "--input",
        action="append",
        required=True,
        type=_parse_input_spec,
        metavar="FILE:CATEGORY",
        help="raw text file (one sentence per line) and its category id; repeatable",
    )
    p.add_argument("--max-vocab", type=int, default=10000, help="vocabulary cap incl. specials")
    p.add_argument("--out", required=True, help="output directory for the dataset")
    p.add_argument(
        "--reverse-augment",
        action="store_true",
        help="add a word-reversed copy of every sentence under category 1",
    )

    p = sub.add_parser("train", help="train a model on a prepared dataset")
    p.add_argument("--data", required=True, help="prepared dataset directory")
    p.add_argument("--config", help="key=value file for model/training settings")
    p.add_argument("--out", required=True, help="checkpoint output path")
    p.add_argument("--epochs", type=int, help="training epochs")
    p.add_argument("--batch", type=int, help="batch size")
    p.add_argument("--lr", type=float, help="learning rate")
    p.add_argument("--seed", type=int, help="rng seed")
    p.add_argument(
        "--experiment",
        choices=sorted(trainer_experiments()),
        help="canned recipe; checks the dataset has the matching category count",
    )
    p.add_argument("--glove", help="pretrained embedding text file (word v1..vE per line)")
    p.add_argument("--resume", help="checkpoint to initialize parameters from")

    p = sub.add_parser("generate", help="generate text from a checkpoint")
    p.add_argument("--ckpt", required=True, help="checkpoint file")
    p.add_argument("--category", type=int, required=True, help="category tag to condition on")
    p.add_argument("--seed", default="", help="seed text (cleaned and tokenized)")
    p.add_argument("--exploration", type=float, default=0.0, help="softmax-sampling probability")
    p.add_argument("--max-tokens", type=int, default=30, help="generation budget per text")
    p.add_argument("--rng-seed", type=int, default=0, help="sampling rng seed")
    p.add_argument("--count", type=int, default=1, help="number of texts to generate")
    p.add_argument(
        "--glue-punctuation",
        action="store_true",
        help="cosmetic output mode attaching punctuation to the preceding word",
    )

    p = sub.add_parser("eval", help="score generated-text novelty against the corpus")
    p.add_argument("--ckpt", required=True, help="checkpoint file")
    p.add_argument("--data", required=True, help="prepared dataset directory")
    p.add_argument("--exploration", type=float, default=0.1, help="softmax-sampling probability")
    p.add_argument("--samples", type=int, default=100, help="corpus instances to sample")
    p.add_argument("--rng-seed", type=int, default=0, help="protocol rng seed")
    p.add_argument("--out", required=True, help="report TSV path (figure lands beside it)")
    p.add_argument("--max-tokens", type=int, default=30, help="generation budget per text")

    p = sub.add_parser("parser-prep", help="split and capitalize text for an external parser")
    p.add_argument("--in", dest="infile", required=True, help="input file, one text per line")
    p.add_argument("--out", required=True, help="output file, one sentence per line")
    return parser


def trainer_experiments() -> dict[str, int]:
    from .trainer import EXPERIMENT_CATEGORIES

    return EXPERIMENT_CATEGORIES


def _cmd_prepare(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    corpus, vocab = corpus_mod.build_corpus(
        args.input, args.max_vocab, reverse_augment=args.reverse_augment
    )
    written = corpus_mod.save_dataset(out_dir, corpus, vocab)
    settings = {
        "max_vocab": args.max_vocab,
        "reverse_augment": args.reverse_augment,
        "num_categories": corpus.num_categories,
    }
    write_run_manifest(
        out_dir / "run.manifest",
        "prepare",
        settings,
        [Path(path) for path, _ in args.input],
        list(written.values()),
    )
    print(
        f"prepared {len(corpus.records)} sentences over {corpus.num_categories} "
        f"categories, vocabulary {len(vocab)}, into {out_dir}"
    )
    return 0


def _merge_training_config(args: argparse.Namespace, file_kv: dict[str, str]) -> TrainingConfig:
    kwargs: dict = {}
    field_names = {f.name for f in dataclasses.fields(TrainingConfig)}
    for name in field_names & set(file_kv):
        if name == "category_weights":
            kwargs[name] = [float(x) for x in file_kv[name].split(",")]
        elif name in ("lr", "clip_norm"):
            kwargs[name] = float(file_kv[name])
        else:
            kwargs[name] = int(file_kv[name])
    for flag, name in (("epochs", "epochs"), ("batch", "batch_size"), ("lr", "lr"), ("seed", "rng_seed")):
        value = getattr(args, flag)
        if value is not None:
            kwargs[name] = value
    return TrainingConfig(**kwargs)


def _cmd_train(args: argparse.Namespace) -> int:
    file_kv = corpus_mod.parse_kv_file(args.config) if args.config else {}
    tcfg = _merge_training_config(args, file_kv)
    model_fields = {f.name for f in dataclasses.fields(ModelConfig)}
    model_overrides = {k: v for k, v in file_kv.items() if k in model_fields}

    ckpt_path = Path(args.out)
    ckpt_path.parent.mkdir(parents=True, exist_ok=True)
    log_path = ckpt_path.with_suffix(ckpt_path.suffix + ".log")
    log_path.unlink(missing_ok=True)

    if args.resume:
        mcfg, vocab, params = ckpt_io.load_checkpoint(args.resume)
        corpus, data_vocab = corpus_mod.load_dataset(args.data)
        if data_vocab.id_to_token != vocab.id_to_token:
            raise ValueError("dataset vocabulary does not match the resume checkpoint")
        params, reports = train(
            corpus,
            tcfg,
            mcfg,
            initial_params=params,
            vocab=vocab,
            checkpoint_path=ckpt_path,
            log_path=log_path,
        )
    elif args.experiment:
        params, reports, mcfg, vocab = run_experiment(
            args.experiment,
            args.data,
            tcfg,
            model_overrides=model_overrides,
            glove_path=args.glove,
            checkpoint_path=ckpt_path,
            log_path=log_path,
        )
    else:
        from .model import load_glove_table
        from .trainer import build_model_config

        corpus, vocab = corpus_mod.load_dataset(args.data)
        mcfg = build_model_config(len(vocab), corpus.num_categories, model_overrides)
        glove_table = None
        if args.glove:
            glove_table = load_glove_table(
                args.glove, vocab, mcfg.glove_dim, np.random.default_rng(tcfg.rng_seed)
            )
        params, reports = train(
            corpus,
            tcfg,
            mcfg,
            glove_table=glove_table,
            vocab=vocab,
            checkpoint_path=ckpt_path,
            log_path=log_path,
        )

    curves_path = ckpt_path.with_suffix(ckpt_path.suffix + ".curves.png")
    outputs = [ckpt_path]
    if reports:
        report_mod.plot_training_curves(reports, curves_path)
        outputs.append(curves_path)
    settings = dict(mcfg.to_kv())
    settings.update({f"train.{k}": v for k, v in dataclasses.asdict(tcfg).items()})
    settings["experiment"] = args.experiment or ""
    write_run_manifest(
        ckpt_path.with_suffix(ckpt_path.suffix + ".manifest"),
        "train",
        settings,
        [Path(args.data) / "dataset.tsv"],
        outputs,
    )
    if reports:
        last = reports[-1]
        print(
            f"trained {len(reports)} epochs; final loss {last.mean_loss:.4f}, "
            f"accuracy {last.next_token_accuracy:.4f}; checkpoint {ckpt_path}"
        )
    else:
        print(f"no epochs requested; checkpoint {ckpt_path}")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    mcfg, vocab, params = ckpt_io.load_checkpoint(args.ckpt)
    seed_tokens = corpus_mod.tokenize(corpus_mod.clean_text(args.seed))
    rng = np.random.default_rng(args.rng_seed)
    for _ in range(args.count):
        gen = GenerationConfig(
            category=args.category,
            exploration=args.exploration,
            seed_text=seed_tokens,
            max_tokens=args.max_tokens,
            rng_seed=args.rng_seed,
        )
        continuation = generate(params, mcfg, vocab, gen, rng=rng)
        print(detokenize(seed_tokens + continuation, glue_punctuation=args.glue_punctuation))
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    mcfg, vocab, params = ckpt_io.load_checkpoint(args.ckpt)
    corpus, data_vocab = corpus_mod.load_dataset(args.data)
    if data_vocab.id_to_token != vocab.id_to_token:
        raise ValueError("dataset vocabulary does not match the checkpoint")
    rng = np.random.default_rng(args.rng_seed)
    reports = eval_mod.novelty_protocol(
        corpus,
        vocab,
        params,
        mcfg,
        exploration=args.exploration,
        sample_count=args.samples,
        rng=rng,
        max_tokens=args.max_tokens,
    )
    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    eval_mod.write_report_tsv(out_path, reports)
    figure_path = out_path.with_suffix(".png")
    report_mod.plot_similarity(reports, figure_path)
    settings = {
        "exploration": args.exploration,
        "samples": args.samples,
        "rng_seed": args.rng_seed,
        "max_tokens": args.max_tokens,
    }
    write_run_manifest(
        out_path.with_suffix(out_path.suffix + ".manifest"),
        "eval",
        settings,
        [Path(args.ckpt), Path(args.data) / "dataset.tsv"],
        [out_path, figure_path],
    )
    for report in reports:
        print(
            f"category {report.category}: k-jaccard {report.k_jaccard_mean:.4f}, "
            f"phrase overlap {report.phrase_overlap_mean:.4f}"
        )
    return 0


def _cmd_parser_prep(args: argparse.Namespace) -> int:
    texts = Path(args.infile).read_text(encoding="utf-8").splitlines()
    sentences = eval_mod.parser_prep(texts)
    out_path = Path(args.out)
    out_path.write_text("\n".join(sentences) + ("\n" if sentences else ""), encoding="utf-8")
    write_run_manifest(
        out_path.with_suffix(out_path.suffix + ".manifest"),
        "parser-prep",
        {"sentences": len(sentences)},
        [Path(args.infile)],
        [out_path],
    )
    print(f"wrote {len(sentences)} sentences to {out_path}")
    return 0


_COMMANDS = {
    "prepare": _cmd_prepare,
    "train": _cmd_train,
    "generate": _cmd_generate,
    "eval": _cmd_eval,
    "parser-prep": _cmd_parser_prep,
}


def dispatch(argv: list[str]) -> int:
    """Route argv to a subcommand; one-line diagnostic and exit 1 on failure."""
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"catgen {args.subcommand}: error: {exc}", file=sys.stderr)
        return 1


def main(argv: list[str] | None = None) -> int:
    return dispatch(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
