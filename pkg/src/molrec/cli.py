"""Command-line interface.

Subcommands: generate, canonicalize, augment, render, predict, evaluate,
overlay, vocab. All randomness flows from --seed; generate/predict accept
--jobs for parallelism without changing outputs. The substitution rule table
defaults to the bundled file, overridable with --rules or MOLREC_RULES.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .augment import RuleTable, add_rgroup, default_rule_table, substitute
from .canon import canonicalize
from .codec import DEFAULT_BINS, Vocabulary
from .dataset import (
    GenerateConfig,
    generate_dataset,
    load_molecule_list,
    read_jsonl,
    verify_dataset,
    write_jsonl,
)
from .evaluation import evaluate_files
from .layout import layout
from .pipeline import MockPredictor, SubprocessPredictor, predict_file
from .render import assign_wedges, draw, sample_style
from . import smiles as _smiles

RULES_ENV = "MOLREC_RULES"


def _rules(args) -> RuleTable:
    path = getattr(args, "rules", None) or os.environ.get(RULES_ENV)
    return RuleTable.load(path) if path else default_rule_table()


def _default_molecules() -> str:
    from importlib import resources

    return str(resources.files("molrec.data") / "molecules.smi")


def _cmd_canonicalize(args) -> int:
    texts = args.smiles
    if args.input:
        texts = load_molecule_list(args.input)
    for text in texts:
        print(canonicalize(text, strict=args.strict))
    return 0


def _cmd_augment(args) -> int:
    rules = _rules(args)
    rng = np.random.default_rng(args.seed)
    texts = args.smiles
    if args.input:
        texts = load_molecule_list(args.input)
    for text in texts:
        g = _smiles.parse(text)
        g = substitute(g, rules, args.abbrev_prob, rng)
        g = add_rgroup(g, args.rgroup_prob, rng)
        print(_smiles.write(g))
    return 0


def _cmd_generate(args) -> int:
    cfg = GenerateConfig(
        molecules_path=args.molecules or _default_molecules(),
        out_dir=args.out,
        count=args.count,
        seed=args.seed,
        bins=args.bins,
        image_size=args.image_size,
        abbrev_prob=args.abbrev_prob,
        rgroup_prob=args.rgroup_prob,
        image_aug_prob=args.image_aug_prob,
        rule_table_path=args.rules or os.environ.get(RULES_ENV),
        upsample_large=args.upsample_large,
        jobs=args.jobs,
    )
    path = generate_dataset(cfg)
    print(f"wrote {path}")
    if args.verify:
        problems = verify_dataset(args.out, _rules(args), args.bins)
        if problems:
            for p in problems:
                print(f"verify: {p}", file=sys.stderr)
            return 1
        print("verify: ok")
    return 0


def _cmd_render(args) -> int:
    rng = np.random.default_rng(args.seed)
    g = _smiles.parse(args.smiles)
    g = layout(g)
    g = assign_wedges(g)
    style = sample_style(rng, args.image_size)
    sample = draw(g, style)
    sample.image.save(args.out)
    print(f"wrote {args.out}")
    if args.coords_out:
        payload = [
            {"label": _smiles.atom_token_text(sample.graph, i),
             "x": sample.graph.atoms[i].x, "y": sample.graph.atoms[i].y}
            for i in range(len(sample.graph))
        ]
        with open(args.coords_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
        print(f"wrote {args.coords_out}")
    return 0


def _resolve_images(args) -> list[str]:
    if args.images:
        return load_molecule_list(args.images)  # same one-per-line format
    records = read_jsonl(args.gold)
    base = os.path.dirname(os.path.abspath(args.gold))
    return [os.path.join(base, r["image"]) for r in records]


def _cmd_predict(args) -> int:
    rules = _rules(args)
    images = _resolve_images(args)
    if args.predictor == "mock":
        if not args.gold:
            print("mock predictor needs --gold", file=sys.stderr)
            return 2
        records = read_jsonl(args.gold)
        predictor = MockPredictor(records, args.corruption, args.seed, args.bins)
        results = predict_file(images, predictor, rules)
    else:
        with SubprocessPredictor(args.predictor, args.bins) as predictor:
            results = predict_file(images, predictor, rules)
    for rec in results:
        rec["image"] = os.path.basename(rec["image"])
    write_jsonl(results, args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_evaluate(args) -> int:
    report = evaluate_files(args.pred, args.gold)
    print(report.to_table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report.to_json() + "\n")
        print(f"wrote {args.out}")
    return 0


def _cmd_overlay(args) -> int:
    from PIL import Image, ImageDraw

    img = Image.open(args.image).convert("RGB")
    w, h = img.size
    rec = None
    for candidate in read_jsonl(args.pred):
        if os.path.basename(candidate.get("image", "")) == os.path.basename(args.image):
            rec = candidate
            break
    if rec is None:
        print(f"no record for {args.image} in {args.pred}", file=sys.stderr)
        return 1
    if "error" in rec:
        print(f"prediction failed for this image: {rec['error']}", file=sys.stderr)
        return 1
    canvas = ImageDraw.Draw(img)
    pts = [(a["x"] * w, a["y"] * h) for a in rec["atoms"]]
    for i, j, _type in rec["bonds"]:
        canvas.line([pts[i], pts[j]], fill=(60, 140, 255), width=2)
    r = max(3, w // 120)
    for (x, y), a in zip(pts, rec["atoms"]):
        canvas.ellipse([x - r, y - r, x + r, y + r], outline=(230, 60, 60), width=2)
        canvas.text((x + r + 1, y - r - 1), a["label"], fill=(230, 60, 60))
    img.save(args.out)
    print(f"wrote {args.out}")
    return 0


def _cmd_vocab(args) -> int:
    rules = _rules(args)
    abbreviations = [r.abbreviation for r in rules]
    if args.dataset:
        records = read_jsonl(args.dataset)
        extra = set()
        for rec in records:
            source = rec.get("pseudo_smiles") or rec["smiles"]
            for tok in _smiles.tokenize(source):
                extra.add(tok.text)
        vocab = Vocabulary.build(args.bins, abbreviations, extra)
    else:
        vocab = Vocabulary.build(args.bins, abbreviations)
    vocab.save(args.out)
    print(f"wrote {args.out} ({len(vocab)} tokens)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="molrec",
        description="Molecular image recognition toolkit",
    )
    parser.add_argument("--version", action="version", version=f"molrec {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("canonicalize", help="print canonical SMILES")
    p.add_argument("smiles", nargs="*", help="SMILES strings")
    p.add_argument("--input", help="file with one SMILES per line")
    p.add_argument("--strict", action="store_true", help="reject pseudo-atoms")
    p.set_defaults(func=_cmd_canonicalize)

    p = sub.add_parser("augment", help="molecule augmentation to pseudo-SMILES")
    p.add_argument("smiles", nargs="*")
    p.add_argument("--input")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--abbrev-prob", type=float, default=0.5)
    p.add_argument("--rgroup-prob", type=float, default=0.5)
    p.add_argument("--rules")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser("generate", help="render a synthetic dataset")
    p.add_argument("--molecules", help="SMILES list file (default: bundled)")
    p.add_argument("--out", required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--image-size", type=int, default=384)
    p.add_argument("--abbrev-prob", type=float, default=0.5)
    p.add_argument("--rgroup-prob", type=float, default=0.5)
    p.add_argument("--image-aug-prob", type=float, default=0.5)
    p.add_argument("--rules")
    p.add_argument("--upsample-large", type=int, default=0,
                   help="extra samples drawn from molecules with >50 atoms")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--verify", action="store_true",
                   help="run the ground-truth closure check after writing")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("render", help="render one molecule to PNG")
    p.add_argument("smiles")
    p.add_argument("--out", required=True)
    p.add_argument("--coords-out", help="also dump atom coordinates as JSON")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--image-size", type=int, default=384)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("predict", help="run a predictor over images")
    p.add_argument("--images", help="file listing image paths (one per line)")
    p.add_argument("--gold", help="dataset JSONL (image source and mock ground truth)")
    p.add_argument("--predictor", default="mock",
                   help="'mock' or a shell command speaking the line protocol")
    p.add_argument("--corruption", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--rules")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", help="write the JSON report here")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("overlay", help="draw a prediction atop its image")
    p.add_argument("--image", required=True)
    p.add_argument("--pred", required=True, help="prediction JSONL from 'predict'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("vocab", help="emit the codec vocabulary file")
    p.add_argument("--out", required=True)
    p.add_argument("--bins", type=int, default=DEFAULT_BINS)
    p.add_argument("--dataset", help="dataset JSONL whose lexemes extend the core")
    p.add_argument("--rules")
    p.set_defaults(func=_cmd_vocab)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0
    except Exception as exc:  # surface usage/data errors without a traceback
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
