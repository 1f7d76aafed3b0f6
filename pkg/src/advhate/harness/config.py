"""Experiment configuration: one YAML/JSON file, identified by a content hash."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from ..adversary import AttackConfig, AttackKind, Combined, load_benign_words, load_synonym_lexicon
from ..corpus import ColumnSchema, SplitSpec
from ..corrector import CorrectionConfig
from ..errors import AttackError, ConfigInvalid
from ..neural import ModelConfig, TrainConfig
from ..textprep import PreprocessConfig, load_stopwords

SPLITS = ("train", "val", "test")


def derive_seed(root, label):
    """Labeled 63-bit child seed, so each stage can be replayed alone."""
    digest = hashlib.sha256(f"{int(root)}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "little") >> 1


DEFAULTS = {
    "seed": 0,
    "corpus": {
        "path": None,
        "schema": {},
        "synthetic_rows": None,
        "synthetic_seed": None,
        "subsample": None,
    },
    "split": {"train_frac": 0.6, "val_frac": 0.2, "test_frac": 0.2, "stratified": True},
    "preprocess": {
        "remove_urls": True, "remove_mentions": True, "remove_hashtags": True,
        "remove_emoji": True, "remove_punct": True, "collapse_spaces": True,
        "remove_stopwords": True, "lowercase": True, "stem": False,
        "stopwords_path": None,
    },
    "vocab": {"min_freq": 2},
    "attack": {
        "splits": ["test"],
        "kinds": ["CharSub", "CharInsert", "CharDelete", "LeetSub",
                  ["PunctInject", "WhitespaceInject"]],
        "per_token_prob": 0.3,
        "max_edits_per_token": 2,
        "append_count": 2,
        "synonym_lexicon_path": None,
        "benign_words_path": None,
    },
    "correction": {
        "enabled": {"train": True, "val": True, "test": True},
        "max_edit_distance": 2,
        "merge_enabled": True,
        "max_merge_window": 5,
        "min_candidate_freq": 1,
        "frequency_list_path": None,
        "augment_with_train": True,
    },
    "model": {
        "arch": "LSTM", "embed_dim": 50, "hidden": 64, "filters": 64, "kernel": 3,
        "seq_len": 64, "embedding_trainable": False, "paper_exact_cell": False,
    },
    "train": {
        "epochs": 100, "batch_size": 32, "learning_rate": 1e-3, "beta1": 0.9,
        "beta2": 0.999, "eps": 1e-8, "clip_norm": 5.0, "shuffle": True,
    },
    "output_dir": "runs/default",
}


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for k, v in (override or {}).items():
        where = f"{path}{k}"
        if k not in base:
            raise ConfigInvalid(where, "unknown key")
        if isinstance(base[k], dict) and k not in ("schema",):
            if v is None:
                # "attack: null" switches attacks off; other sections keep defaults
                if k == "attack":
                    out[k] = None
                continue
            if not isinstance(v, dict):
                raise ConfigInvalid(where, "expected a mapping")
            out[k] = _merge(base[k], v, where + ".")
        else:
            out[k] = v
    return out


@dataclass
class ExperimentConfig:
    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @classmethod
    def from_dict(cls, d=None, base_dir=None):
        cfg = cls(_merge(DEFAULTS, d or {}), Path(base_dir) if base_dir else Path.cwd())
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            with path.open(encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except FileNotFoundError:
            raise ConfigInvalid("config", f"file not found: {path}") from None
        except yaml.YAMLError as exc:
            raise ConfigInvalid("config", f"unparseable: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigInvalid("config", "top level must be a mapping")
        return cls.from_dict(data, base_dir=path.parent)

    def with_overrides(self, **sections):
        """Copy with whole keys replaced, e.g. ``model={...}`` merged in."""
        d = copy.deepcopy(self.raw)
        for k, v in sections.items():
            if isinstance(v, dict) and isinstance(d.get(k), dict):
                d[k] = _merge(d[k], v, k + ".")
            else:
                d[k] = v
        out = ExperimentConfig(d, self.base_dir)
        out.validate()
        return out

    # identity -------------------------------------------------------------

    def canonical(self):
        """Everything that can change a result; the output location cannot."""
        d = copy.deepcopy(self.raw)
        d.pop("output_dir", None)
        return d

    def digest(self):
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def seed_for(self, label):
        return derive_seed(self.raw["seed"], label)

    # typed views ------------------------------------------------------------

    def resolve(self, p):
        if p is None:
            return None
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    @property
    def output_dir(self):
        return self.resolve(self.raw["output_dir"])

    def schema(self):
        s = self.raw["corpus"]["schema"] or {}
        valid = {f.name for f in fields(ColumnSchema)}
        for k in s:
            if k not in valid:
                raise ConfigInvalid(f"corpus.schema.{k}", "unknown column role")
        return ColumnSchema(**s)

    def split_spec(self):
        s = self.raw["split"]
        return SplitSpec(s["train_frac"], s["val_frac"], s["test_frac"],
                         self.seed_for("split"), bool(s["stratified"]))

    def preprocess_config(self):
        p = dict(self.raw["preprocess"])
        sw_path = p.pop("stopwords_path")
        sw = load_stopwords(self.resolve(sw_path)) if sw_path else load_stopwords()
        return PreprocessConfig(**p, stopword_list=sw)

    def attack_enabled(self, split):
        a = self.raw["attack"]
        return bool(a) and split in (a.get("splits") or [])

    def attack_config(self):
        a = self.raw["attack"]
        kinds = []
        for k in a["kinds"]:
            if isinstance(k, (list, tuple)):
                kinds.append(Combined(tuple(AttackKind(x) for x in k)))
            else:
                kinds.append(AttackKind(k))
        flat = [x for k in kinds for x in (k.kinds if isinstance(k, Combined) else (k,))]
        lex = {}
        if AttackKind.SYNONYM_SWAP in flat:
            lex = load_synonym_lexicon(self.resolve(a["synonym_lexicon_path"]))
        benign = ()
        if AttackKind.BENIGN_APPEND in flat:
            benign = load_benign_words(self.resolve(a["benign_words_path"]))
        return AttackConfig(
            kinds=tuple(kinds), per_token_prob=float(a["per_token_prob"]),
            seed=self.seed_for("attack"), synonym_lexicon=lex, benign_words=benign,
            max_edits_per_token=int(a["max_edits_per_token"]),
            append_count=int(a["append_count"]),
        )

    def correction_config(self):
        c = self.raw["correction"]
        return CorrectionConfig(
            max_edit_distance=int(c["max_edit_distance"]), merge_enabled=bool(c["merge_enabled"]),
            max_merge_window=int(c["max_merge_window"]),
            min_candidate_freq=int(c["min_candidate_freq"]),
        )

    def correction_enabled(self, split):
        return bool(self.raw["correction"]["enabled"].get(split, False))

    def model_config(self, vocab_size):
        return ModelConfig(vocab_size=vocab_size, **self.raw["model"])

    def train_config(self):
        return TrainConfig(seed=self.seed_for("shuffle"), **self.raw["train"])

    def validate(self):
        r = self.raw
        if not isinstance(r["seed"], int):
            raise ConfigInvalid("seed", "must be an integer")
        corpus = r["corpus"]
        if corpus["path"] is None and not corpus["synthetic_rows"]:
            raise ConfigInvalid("corpus.path", "give a CSV path or corpus.synthetic_rows")
        if corpus["path"] is not None and not self.resolve(corpus["path"]).is_file():
            raise ConfigInvalid("corpus.path", f"file not found: {self.resolve(corpus['path'])}")
        for key in ("stopwords_path",):
            p = r["preprocess"][key]
            if p is not None and not self.resolve(p).is_file():
                raise ConfigInvalid(f"preprocess.{key}", f"file not found: {p}")
        for key in ("synonym_lexicon_path", "benign_words_path"):
            p = (r["attack"] or {}).get(key)
            if p is not None and not self.resolve(p).is_file():
                raise ConfigInvalid(f"attack.{key}", f"file not found: {p}")
        p = r["correction"]["frequency_list_path"]
        if p is not None and not self.resolve(p).is_file():
            raise ConfigInvalid("correction.frequency_list_path", f"file not found: {p}")
        for s in (r["attack"] or {}).get("splits") or []:
            if s not in SPLITS:
                raise ConfigInvalid("attack.splits", f"unknown split {s!r}")
        for s in r["correction"]["enabled"]:
            if s not in SPLITS:
                raise ConfigInvalid("correction.enabled", f"unknown split {s!r}")
        if r["vocab"]["min_freq"] < 1:
            raise ConfigInvalid("vocab.min_freq", "must be >= 1")
        # build every typed view once so bad values surface as ConfigInvalid
        try:
            self.split_spec().validate()
            self.schema()
            self.preprocess_config()
            self.correction_config()
            self.model_config(vocab_size=2)
            self.train_config()
            if r["attack"]:
                self.attack_config()
        except ConfigInvalid:
            raise
        except (TypeError, ValueError, AttackError) as exc:
            raise ConfigInvalid("config", str(exc)) from None
        return self
