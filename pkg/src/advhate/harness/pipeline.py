"""End-to-end experiment: load -> split -> preprocess -> attack -> correct ->
encode -> train -> evaluate, with a reproducible JSON report."""

from __future__ import annotations

import json
import logging
import time
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..adversary import attack_corpus, write_audit
from ..corpus import (class_distribution, load_corpus, split_corpus, stratified_subsample,
                      write_rejects)
from ..corrector import build_frequency_dictionary, correct_text, load_frequency_list, write_steps
from ..errors import AdvHateError, IncompatibleConfigs, MissingCurve
from ..metrics import evaluation_report
from ..neural import (Classifier, EncodedSplit, count_parameters, save_checkpoint, train,
                      write_curve)
from ..synthetic import make_corpus
from ..textprep import build_vocabulary, encode_batch, preprocess, remove_noise, tokenize
from .config import SPLITS

log = logging.getLogger(__name__)

CLEAN, ATTACKED, CORRECTED = "clean", "attacked", "attacked+corrected"
CONDITIONS = (CLEAN, ATTACKED, CORRECTED)


class LeakageError(AdvHateError):
    stage = "prepare"


@dataclass
class PreparedData:
    split: object
    rejects: list
    n_loaded: int
    vocab: object
    dictionary: object
    docs: dict            # (split, condition) -> list of token lists
    encoded: dict         # (split, condition) -> EncodedSplit
    attacked: dict = field(default_factory=dict)      # split -> list[AttackedRow]
    corrections: dict = field(default_factory=dict)   # (split, condition) -> list[CorrectionResult]
    source: str = ""

    def conditions(self, split):
        return [c for c in CONDITIONS if (split, c) in self.encoded]


def load_data(cfg):
    """Tweets plus rejects, honouring the synthetic and subsample options."""
    c = cfg.raw["corpus"]
    if c["path"] is not None:
        res = load_corpus(cfg.resolve(c["path"]), cfg.schema())
        tweets, rejects, source = res.tweets, res.rejects, str(c["path"])
    else:
        seed = c.get("synthetic_seed")
        seed = cfg.seed_for("synthetic") if seed is None else seed
        tweets, rejects = make_corpus(int(c["synthetic_rows"]), seed=seed), []
        source = f"synthetic:{c['synthetic_rows']}"
    n_loaded = len(tweets)
    if c["subsample"]:
        tweets = stratified_subsample(tweets, int(c["subsample"]), cfg.seed_for("subsample"))
    return tweets, rejects, n_loaded, source


def _base_text(text, pre):
    """Noise removed but punctuation kept, case-folded: what attacks and
    the corrector operate on."""
    out = remove_noise(text, pre.keep_punct())
    return out.lower() if pre.lowercase else out


def prepare_data(cfg):
    pre = cfg.preprocess_config()
    tweets, rejects, n_loaded, source = load_data(cfg)
    split = split_corpus(tweets, cfg.split_spec())
    parts = split.parts()
    base = {s: [_base_text(t.text, pre) for t in parts[s]] for s in SPLITS}

    # correction lexicon: bundled list (+ training split only)
    cc = cfg.raw["correction"]
    freq = load_frequency_list(cfg.resolve(cc["frequency_list_path"]))
    sources = [freq]
    train_raw_tokens = [tokenize(remove_noise(b, pre).lower()) for b in base["train"]]
    if cc["augment_with_train"]:
        sources.append(train_raw_tokens)
    dictionary = build_frequency_dictionary(sources)
    ccfg = cfg.correction_config()

    attacked, corrections = {}, {}
    texts = {}
    acfg = cfg.attack_config() if cfg.raw["attack"] else None
    for s in SPLITS:
        if acfg is not None and cfg.attack_enabled(s):
            rows = attack_corpus(parts[s], acfg, texts=base[s])
            attacked[s] = rows
            att = [r.text for r in rows]
            res = [correct_text(t, dictionary, ccfg) for t in att]
            corrections[(s, CORRECTED)] = res
            texts[(s, ATTACKED)] = att
            texts[(s, CORRECTED)] = [r.corrected_text for r in res]
        if cfg.correction_enabled(s):
            res = [correct_text(t, dictionary, ccfg) for t in base[s]]
            corrections[(s, CLEAN)] = res
            texts[(s, CLEAN)] = [r.corrected_text for r in res]
        else:
            texts[(s, CLEAN)] = base[s]

    docs = {key: [preprocess(t, pre) for t in tx] for key, tx in texts.items()}
    # adversarial training: the model sees the perturbed (and repaired) text
    train_key = ("train", CLEAN)
    if ("train", ATTACKED) in docs:
        train_key = ("train", CORRECTED if cfg.correction_enabled("train") else ATTACKED)
    vocab = build_vocabulary(docs[train_key], cfg.raw["vocab"]["min_freq"])
    _check_no_leakage(vocab, docs[train_key], dictionary, freq, train_raw_tokens,
                      cc["augment_with_train"])

    seq_len = cfg.raw["model"]["seq_len"]
    encoded = {}
    for (s, cond), d in docs.items():
        ids, lengths = encode_batch(d, vocab, seq_len)
        labels = np.array([int(t.label) for t in parts[s]], dtype=np.int64)
        encoded[(s, cond)] = EncodedSplit(ids, lengths, labels)
    encoded["train", "fit"] = encoded[train_key]
    return PreparedData(split, rejects, n_loaded, vocab, dictionary, docs, encoded,
                        attacked, corrections, source)


def _check_no_leakage(vocab, train_docs, dictionary, freq, train_raw_tokens, augmented):
    seen = {t for d in train_docs for t in d}
    extra = [t for t in vocab.token_to_id if t not in seen and t not in ("<pad>", "<unk>")]
    if extra:
        raise LeakageError(f"vocabulary holds tokens absent from the training split: {extra[:5]}")
    allowed = set(freq)
    if augmented:
        allowed |= {t for d in train_raw_tokens for t in d}
    stray = [w for w in dictionary.counts if w not in allowed]
    if stray:
        raise LeakageError(f"correction dictionary holds non-training words: {stray[:5]}")


def _rule_counts(results):
    c = Counter(s.rule.value for r in results for s in r.steps)
    return dict(sorted(c.items()))


def fit_model(cfg, data, log_epochs=True):
    mcfg = cfg.model_config(len(data.vocab))
    model = Classifier(mcfg, seed=cfg.seed_for("init"))
    tcfg = cfg.train_config()

    def _log(st):
        if log_epochs:
            log.info("%s epoch %d: loss %.4f acc %.4f | val loss %.4f acc %.4f",
                     mcfg.arch.value, st.epoch, st.train_loss, st.train_acc, st.val_loss, st.val_acc)

    result = train(model, data.encoded["train", "fit"], data.encoded["val", CLEAN], tcfg, _log)
    model.params = result.best_params
    return model, result


def evaluate_model(model, data):
    out = {}
    for s in ("val", "test"):
        out[s] = {}
        for cond in data.conditions(s):
            enc = data.encoded[s, cond]
            probs = model.predict_proba(enc.ids, enc.lengths)
            out[s][cond] = evaluation_report(enc.labels, probs).to_dict()
    return out


def _data_section(data):
    parts = data.split.parts()
    return {
        "source": data.source,
        "n_loaded": data.n_loaded,
        "n_rejects": len(data.rejects),
        "sizes": {s: len(p) for s, p in parts.items()},
        "class_distribution": {s: class_distribution(p).to_dict() for s, p in parts.items()},
    }


def _attack_section(data):
    out = {}
    for s, rows in data.attacked.items():
        out[s] = {
            "rows": len(rows),
            "rows_perturbed": sum(1 for r in rows if r.records),
            "records": sum(len(r.records) for r in rows),
            "by_kind": dict(sorted(Counter(rec.kind.value for r in rows for rec in r.records).items())),
        }
    return out


def build_report(cfg, data, model, result, evaluations, elapsed):
    trainable, total = count_parameters(model)
    arch = model.config.arch.value
    return {
        "tool_version": __version__,
        "config_digest": cfg.digest(),
        "config": cfg.canonical(),
        "seeds": {k: cfg.seed_for(k) for k in ("split", "attack", "init", "shuffle")},
        "data": _data_section(data),
        "vocab": {"size": len(data.vocab), "hash": data.vocab.digest(),
                  "min_freq": data.vocab.min_freq},
        "dictionary": {"size": len(data.dictionary), "total": data.dictionary.total},
        "model": {"config": model.config.to_dict(),
                  "parameters": {"trainable": trainable, "total": total}},
        "training": {
            "epochs": len(result.curve),
            "best_epoch": result.best_epoch,
            "best_val_acc": result.best_val_acc,
            "curve_file": f"curve_{arch}.csv",
            "curve": [vars(r) for r in result.curve],
        },
        "attack": _attack_section(data),
        "correction": {f"{s}/{c}": _rule_counts(r) for (s, c), r in sorted(data.corrections.items())},
        "evaluations": evaluations,
        "wall_clock_seconds": elapsed,
    }


def deterministic_view(report):
    """The report minus fields allowed to differ between identical runs."""
    return {k: v for k, v in report.items() if k != "wall_clock_seconds"}


def emit_curves(report, out_dir):
    """Write ``curve_<ARCH>.csv`` from the report's training section."""
    training = report.get("training") or {}
    curve = training.get("curve")
    if not curve:
        raise MissingCurve("report has no training curve")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / training.get("curve_file", "curve.csv")
    from ..neural.train import EpochStats

    write_curve([EpochStats(**row) for row in curve], path)
    return path


def write_outputs(cfg, data, model, report, out_dir):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    emit_curves(report, out_dir)
    save_checkpoint(out_dir / f"model_{model.config.arch.value}.npz", model,
                    vocab_hash=data.vocab.digest(), extra={"config_digest": cfg.digest()})
    data.vocab.save(out_dir / "vocab.jsonl")
    write_rejects(data.rejects, out_dir / "rejects.jsonl")
    parts = data.split.parts()
    for s, rows in data.attacked.items():
        write_audit(rows, out_dir / f"attack_audit_{s}.jsonl")
    for (s, c), res in data.corrections.items():
        name = c.replace("+", "_")
        write_steps(res, out_dir / f"correction_{s}_{name}.jsonl", ids=[t.id for t in parts[s]])


def run_experiment(cfg, data=None, write=True, out_dir=None):
    """Run the whole pipeline; returns the report dict."""
    t0 = time.perf_counter()
    if data is None:
        data = prepare_data(cfg)
    model, result = fit_model(cfg, data)
    evaluations = evaluate_model(model, data)
    report = build_report(cfg, data, model, result, evaluations, time.perf_counter() - t0)
    if write:
        write_outputs(cfg, data, model, report, out_dir or cfg.output_dir)
    return report


def _without(d, *keys):
    return {k: v for k, v in d.items() if k not in keys}


def compare_models(cfgs, write=True, out_dir=None):
    """Train each config on identical prepared data; rows sorted by test
    accuracy (descending), ties by model name."""
    if not cfgs:
        raise IncompatibleConfigs("no configurations to compare")
    ref = _without(cfgs[0].canonical(), "model")
    for c in cfgs[1:]:
        if _without(c.canonical(), "model") != ref:
            raise IncompatibleConfigs("configs must differ only in the model section")
    data = prepare_data(cfgs[0])
    rows, reports = [], []
    for c in cfgs:
        rep = run_experiment(c, data=data, write=write,
                             out_dir=(Path(out_dir) / c.raw["model"]["arch"]) if out_dir else None)
        reports.append(rep)
        ev = rep["evaluations"]["test"]
        arch = rep["model"]["config"]["arch"]
        name = arch + ("-paper-cell" if rep["model"]["config"]["paper_exact_cell"] else "")
        rows.append({"model": name, "method": arch, "accuracy": ev[CLEAN]["accuracy"],
                     "metrics": ev})
    rows.sort(key=lambda r: (-r["accuracy"], r["model"]))
    table = {"rows": rows, "config_digests": [r["config_digest"] for r in reports]}
    if write and out_dir:
        Path(out_dir).mkdir(parents=True, exist_ok=True)
        with open(Path(out_dir) / "comparison.json", "w") as fh:
            json.dump(table, fh, indent=2, sort_keys=True)
    return table
