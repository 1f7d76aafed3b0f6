"""Command-line entry point.

Exit codes: 0 ok, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .adversary import AttackConfig, AttackKind, Combined, attack_corpus, write_audit
from .corpus import (ColumnSchema, SplitSpec, class_distribution, load_corpus,
                     split_corpus, write_corpus, write_rejects)
from .corrector import (CorrectionConfig, build_frequency_dictionary, correct_text,
                        load_frequency_list)
from .errors import (AdvHateError, AttackError, ConfigError, CorrectionError, DataError,
                     IncompatibleConfigs, MetricError, MissingCurve, NumericError)
from .harness.config import ExperimentConfig
from .harness.pipeline import (build_report, compare_models, evaluate_model, fit_model,
                               prepare_data, run_experiment, write_outputs)
from .neural import load_checkpoint
from .synthetic import make_corpus

log = logging.getLogger("advhate")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def exit_code_for(exc):
    if isinstance(exc, (ConfigError, AttackError)):
        return EXIT_CONFIG
    if isinstance(exc, (NumericError, MetricError)):
        return EXIT_NUMERIC
    if isinstance(exc, (DataError, CorrectionError, MissingCurve, FileNotFoundError)):
        return EXIT_DATA
    return 1


def _load_config(args, required=True):
    if args.config is None:
        if required:
            raise ConfigError("--config is required for this command")
        return None
    cfg = ExperimentConfig.load(args.config)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if args.out is not None:
        over["output_dir"] = str(Path(args.out).resolve())
    return cfg.with_overrides(**over) if over else cfg


def _out_dir(args, default="."):
    p = Path(args.out or default)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _dump(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
    log.info("wrote %s", path)


def _load_rows(path):
    res = load_corpus(path, ColumnSchema())
    return res.tweets, res.rejects


# verbs ----------------------------------------------------------------------

def cmd_ingest(args):
    tweets, rejects = _load_rows(args.input)
    out = _out_dir(args)
    seed = 0 if args.seed is None else args.seed
    split = split_corpus(tweets, SplitSpec(seed=seed))
    for name, part in split.parts().items():
        write_corpus(part, out / f"{name}.csv")
    write_rejects(rejects, out / "rejects.jsonl")
    summary = {
        "rows": len(tweets), "rejects": len(rejects),
        "class_distribution": class_distribution(tweets).to_dict(),
        "splits": {k: len(v) for k, v in split.parts().items()},
    }
    _dump(summary, out / "ingest.json")
    print(json.dumps(summary, sort_keys=True))


def _parse_kinds(specs):
    kinds = []
    for s in specs:
        parts = s.split("+")
        ks = tuple(AttackKind(p) for p in parts)
        kinds.append(ks[0] if len(ks) == 1 else Combined(ks))
    return tuple(kinds)


def cmd_attack(args):
    tweets, _ = _load_rows(args.input)
    try:
        kinds = _parse_kinds(args.kinds)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    from .adversary import load_benign_words, load_synonym_lexicon

    flat = {k for x in kinds for k in (x.kinds if isinstance(x, Combined) else (x,))}
    cfg = AttackConfig(
        kinds=kinds, per_token_prob=args.prob, seed=0 if args.seed is None else args.seed,
        synonym_lexicon=load_synonym_lexicon(args.lexicon) if AttackKind.SYNONYM_SWAP in flat else {},
        benign_words=load_benign_words(args.benign) if AttackKind.BENIGN_APPEND in flat else (),
    )
    rows = attack_corpus(tweets, cfg)
    out = _out_dir(args)
    write_corpus([replace(r.tweet, text=r.text) for r in rows], out / "attacked.csv")
    write_audit(rows, out / "attack_audit.jsonl")
    print(f"attacked {sum(1 for r in rows if r.records)}/{len(rows)} rows")


def cmd_correct(args):
    freq = load_frequency_list(args.frequency_list)
    sources = [freq]
    if args.input and str(args.input).endswith(".csv"):
        tweets, _ = _load_rows(args.input)
        texts = [t.text for t in tweets]
    elif args.input:
        texts = Path(args.input).read_text(encoding="utf-8").splitlines()
    else:
        texts = [line.rstrip("\n") for line in sys.stdin]
    d = build_frequency_dictionary(sources)
    ccfg = CorrectionConfig(max_edit_distance=args.max_edit_distance)
    results = [correct_text(t, d, ccfg) for t in texts]
    if args.out:
        out = _out_dir(args)
        from .corrector import write_steps

        (out / "corrected.txt").write_text("".join(r.corrected_text + "\n" for r in results),
                                           encoding="utf-8")
        write_steps(results, out / "correction_steps.jsonl")
    else:
        for r in results:
            print(r.corrected_text)


def cmd_train(args):
    cfg = _load_config(args)
    data = prepare_data(cfg)
    model, result = fit_model(cfg, data)
    report = build_report(cfg, data, model, result, {}, 0.0)
    write_outputs(cfg, data, model, report, cfg.output_dir)
    print(f"best epoch {result.best_epoch} val acc {result.best_val_acc:.4f}")


def cmd_eval(args):
    cfg = _load_config(args)
    data = prepare_data(cfg)
    ckpt = Path(args.checkpoint) if args.checkpoint else (
        cfg.output_dir / f"model_{cfg.raw['model']['arch']}.npz")
    if not ckpt.is_file():
        raise FileNotFoundError(f"checkpoint not found: {ckpt}")
    model, meta = load_checkpoint(ckpt)
    if meta.get("vocab_hash") != data.vocab.digest():
        raise IncompatibleConfigs("checkpoint vocabulary does not match the config's data")
    evaluations = evaluate_model(model, data)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump({"config_digest": cfg.digest(), "checkpoint": str(ckpt), "evaluations": evaluations},
          out / "eval.json")
    _print_summary(evaluations)


def _print_summary(evaluations):
    for split, conds in evaluations.items():
        for cond, m in conds.items():
            print(f"{split:5s} {cond:20s} acc {m['accuracy']:.4f} f1w {m['f1_weighted']:.4f}")


def cmd_run(args):
    cfg = _load_config(args)
    report = run_experiment(cfg)
    _print_summary(report["evaluations"])
    print(f"report: {cfg.output_dir / 'report.json'}")


def cmd_compare(args):
    base = _load_config(args, required=not args.configs)
    if args.configs:
        cfgs = [ExperimentConfig.load(p) for p in args.configs]
        if args.seed is not None:
            cfgs = [c.with_overrides(seed=args.seed) for c in cfgs]
    else:
        cfgs = [base.with_overrides(model={"arch": a}) for a in args.archs]
    out = Path(args.out) if args.out else cfgs[0].output_dir
    table = compare_models(cfgs, out_dir=out)
    for r in table["rows"]:
        print(f"{r['model']:16s} acc {r['accuracy']:.4f}")


def cmd_synth(args):
    rows = make_corpus(args.rows, seed=0 if args.seed is None else args.seed)
    out = Path(args.out or "synthetic.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_corpus(rows, out)
    print(f"wrote {len(rows)} rows to {out}")


def _global_flags(default):
    g = argparse.ArgumentParser(add_help=False, argument_default=default)
    g.add_argument("--config", help="experiment YAML/JSON file")
    g.add_argument("--seed", type=int, help="override the root seed")
    g.add_argument("--out", help="output directory (or file for synth)")
    g.add_argument("-v", "--verbose", action="store_true")
    return g


def build_parser():
    # flags are accepted before or after the verb; the verb-level copy must
    # not clobber a value given before it
    p = argparse.ArgumentParser(prog="advhate", parents=[_global_flags(None)],
                                description="Adversarial hate-speech robustness toolkit")
    p.add_argument("--version", action="version", version=f"advhate {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    common = _global_flags(argparse.SUPPRESS)

    s = sub.add_parser("ingest", parents=[common], help="validate a CSV and write 60/20/20 splits")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("attack", parents=[common], help="perturb a labeled CSV")
    s.add_argument("--input", required=True)
    s.add_argument("--kinds", nargs="+", default=["CharSub"],
                   help="attack kinds; join with + for a combined recipe")
    s.add_argument("--prob", type=float, default=0.3, help="per-token probability")
    s.add_argument("--lexicon", help="synonym lexicon (JSONL)")
    s.add_argument("--benign", help="benign word list")
    s.set_defaults(func=cmd_attack)

    s = sub.add_parser("correct", parents=[common], help="spell-correct text lines or a CSV")
    s.add_argument("--input", help="text file (one per line) or CSV; stdin if omitted")
    s.add_argument("--frequency-list")
    s.add_argument("--max-edit-distance", type=int, default=2)
    s.set_defaults(func=cmd_correct)

    for name, fn, text in (("train", cmd_train, "train a model from a config"),
                           ("run", cmd_run, "full pipeline: train and evaluate")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.set_defaults(func=fn)

    s = sub.add_parser("eval", parents=[common], help="evaluate a saved checkpoint")
    s.add_argument("--checkpoint")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("compare", parents=[common], help="train several models on the same data")
    s.add_argument("--archs", nargs="+", default=["LSTM", "GRU", "CNN1D"])
    s.add_argument("--configs", nargs="+", help="explicit configs differing only in model")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("synth", parents=[common], help="write a synthetic Davidson-schema CSV")
    s.add_argument("--rows", type=int, default=3000)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (AdvHateError, FileNotFoundError) as exc:
        code = exit_code_for(exc)
        print(f"error [{getattr(exc, 'stage', 'io')}]: {exc}", file=sys.stderr)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
