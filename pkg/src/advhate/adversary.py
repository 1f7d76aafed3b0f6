"""Seeded, auditable adversarial perturbations of tweet text.

Every applied edit is logged as a :class:`PerturbationRecord`; replaying the
records on the original text reproduces the attacked text exactly.
"""

from __future__ import annotations

import hashlib
import json
import string
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources

import numpy as np

from .errors import BenignListRequired, ConfigInvalid, LexiconRequired, TooShort


class AttackKind(str, Enum):
    CHAR_SUB = "CharSub"
    CHAR_INSERT = "CharInsert"
    CHAR_DELETE = "CharDelete"
    WHITESPACE_INJECT = "WhitespaceInject"
    PUNCT_INJECT = "PunctInject"
    LEET_SUB = "LeetSub"
    SYNONYM_SWAP = "SynonymSwap"
    BENIGN_APPEND = "BenignAppend"
    COMBINED = "Combined"


CHAR_KINDS = frozenset({
    AttackKind.CHAR_SUB, AttackKind.CHAR_INSERT, AttackKind.CHAR_DELETE, AttackKind.LEET_SUB,
})

LEET_TABLE = {"a": "@", "i": "!", "e": "3", "o": "0", "s": "$", "l": "1"}
INVERSE_LEET = {v: k for k, v in LEET_TABLE.items()}
# leet pairs whose glyph is punctuation rather than a digit
PUNCT_GLYPHS = {k: v for k, v in LEET_TABLE.items() if not v.isalnum()}
FILLER_PUNCT = "!.*-_"

ALPHABET = string.ascii_lowercase


@dataclass(frozen=True)
class Combined:
    """Inter-level recipe: every selected token gets all ``kinds`` in order."""

    kinds: tuple

    def __post_init__(self):
        kinds = tuple(AttackKind(k) for k in self.kinds)
        if not kinds:
            raise ConfigInvalid("kinds", "Combined needs at least one kind")
        if AttackKind.COMBINED in kinds:
            raise ConfigInvalid("kinds", "Combined cannot nest")
        object.__setattr__(self, "kinds", kinds)

    kind = AttackKind.COMBINED


def load_synonym_lexicon(path=None):
    """Line-delimited JSON ``{word, synonyms: [...]}``; ``None`` is the demo lexicon."""
    if path is None:
        text = resources.files("advhate.data").joinpath("synonyms_demo.jsonl").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    lex = {}
    for line in text.splitlines():
        if line.strip():
            rec = json.loads(line)
            lex[rec["word"].lower()] = tuple(rec["synonyms"])
    return lex


def load_benign_words(path=None):
    if path is None:
        text = resources.files("advhate.data").joinpath("benign_words.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return tuple(w.strip() for w in text.splitlines() if w.strip())


@dataclass(frozen=True)
class AttackConfig:
    kinds: tuple = (AttackKind.CHAR_SUB,)
    per_token_prob: float = 0.3
    seed: int = 0
    synonym_lexicon: dict = field(default_factory=dict, repr=False)
    benign_words: tuple = ()
    max_edits_per_token: int = 2
    append_count: int = 2
    # restrict attacks to these (lowercased) words; None means any eligible token
    targets: frozenset | None = None

    def __post_init__(self):
        kinds = tuple(k if isinstance(k, Combined) else AttackKind(k) for k in self.kinds)
        object.__setattr__(self, "kinds", kinds)
        if not kinds:
            raise ConfigInvalid("kinds", "at least one attack kind is required")
        if AttackKind.COMBINED in kinds:
            raise ConfigInvalid("kinds", "use a Combined(...) recipe instead of the bare kind")
        if not 0.0 <= self.per_token_prob <= 1.0:
            raise ConfigInvalid("per_token_prob", "must lie in [0, 1]")
        if self.max_edits_per_token < 1:
            raise ConfigInvalid("max_edits_per_token", "must be >= 1")
        flat = self.flat_kinds()
        if AttackKind.SYNONYM_SWAP in flat and not self.synonym_lexicon:
            raise LexiconRequired("SynonymSwap requires a non-empty synonym lexicon")
        if AttackKind.BENIGN_APPEND in flat and not self.benign_words:
            raise BenignListRequired("BenignAppend requires a non-empty benign word list")

    def flat_kinds(self):
        out = []
        for k in self.kinds:
            out.extend(k.kinds if isinstance(k, Combined) else (k,))
        return out


@dataclass(frozen=True)
class PerturbationRecord:
    token_index: int
    original: str
    perturbed: str
    kind: AttackKind

    def __post_init__(self):
        if self.original == self.perturbed:
            raise ValueError("a perturbation record must change its token")

    def to_dict(self):
        return {"token_index": self.token_index, "original": self.original,
                "perturbed": self.perturbed, "kind": self.kind.value}

    @classmethod
    def from_dict(cls, d):
        return cls(d["token_index"], d["original"], d["perturbed"], AttackKind(d["kind"]))


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def char_perturb(word, kind, rng, position=None):
    """One character-level edit of ``word``.

    Sub/Insert/Delete are exactly one Levenshtein edit. LeetSub swaps one
    letter for its table glyph and PunctInject swaps one letter for a
    punctuation look-alike (falling back to inserting a filler mark when the
    word has none). Returns ``word`` unchanged only when LeetSub finds no
    mappable letter.
    """
    kind = AttackKind(kind)
    n = len(word)
    if n < 1 or (kind is AttackKind.CHAR_DELETE and n < 2):
        raise TooShort(f"{word!r} is too short for {kind.value}")

    if kind is AttackKind.CHAR_SUB:
        pos = int(rng.integers(n)) if position is None else position
        choices = [c for c in ALPHABET if c != word[pos].lower()]
        return word[:pos] + _pick(rng, choices) + word[pos + 1:]
    if kind is AttackKind.CHAR_INSERT:
        pos = int(rng.integers(n + 1)) if position is None else position
        return word[:pos] + _pick(rng, ALPHABET) + word[pos:]
    if kind is AttackKind.CHAR_DELETE:
        pos = int(rng.integers(n)) if position is None else position
        return word[:pos] + word[pos + 1:]
    if kind in (AttackKind.LEET_SUB, AttackKind.PUNCT_INJECT):
        table = LEET_TABLE if kind is AttackKind.LEET_SUB else PUNCT_GLYPHS
        spots = [i for i, c in enumerate(word) if c.lower() in table]
        if position is not None:
            spots = [position] if position in spots else []
        if spots:
            pos = _pick(rng, spots)
            return word[:pos] + table[word[pos].lower()] + word[pos + 1:]
        if kind is AttackKind.LEET_SUB:
            return word
        pos = int(rng.integers(1, n)) if n > 1 else 1
        return word[:pos] + _pick(rng, FILLER_PUNCT) + word[pos:]
    if kind is AttackKind.WHITESPACE_INJECT:
        return " ".join(word)
    raise ValueError(f"{kind.value} is not a character-level kind")


def sentence_append(text, benign_words, count, rng):
    if not benign_words:
        raise BenignListRequired("benign word list is empty")
    if count < 1:
        raise ValueError("count must be >= 1")
    words = [_pick(rng, list(benign_words)) for _ in range(count)]
    return " ".join([text, *words]) if text else " ".join(words)


def _eligible(token, cfg):
    if len(token) < 2 or not token.isalpha():
        return False
    return cfg.targets is None or token.lower() in cfg.targets


def _apply_kind(token, kind, cfg, rng, budget):
    """Apply one kind to ``token``; returns the list of (before, after) edits."""
    edits = []
    if kind in CHAR_KINDS:
        n = int(rng.integers(1, budget + 1))
        for _ in range(n):
            if kind is AttackKind.CHAR_DELETE and len(token) < 2:
                break
            new = char_perturb(token, kind, rng)
            if new == token:
                break
            edits.append((token, new))
            token = new
    elif kind is AttackKind.SYNONYM_SWAP:
        syns = [s for s in cfg.synonym_lexicon.get(token.lower(), ()) if s != token]
        if syns:
            edits.append((token, _pick(rng, syns)))
    elif kind in (AttackKind.PUNCT_INJECT, AttackKind.WHITESPACE_INJECT):
        new = char_perturb(token, kind, rng)
        if new != token:
            edits.append((token, new))
    return edits


def attack_text(text, cfg):
    """Perturb ``text`` and return ``(attacked_text, records)``.

    Tokens are whitespace-delimited. Each eligible token (alphabetic,
    length >= 2) is selected with ``per_token_prob``; a plain kind list
    draws one kind per selected token while a :class:`Combined` recipe
    applies its kinds in order. Character kinds apply between 1 and
    ``max_edits_per_token`` single-character edits. ``BenignAppend`` acts
    once per text and appends ``append_count`` words.
    """
    if not text or not text.strip():
        raise ValueError("text must be non-empty")
    rng = np.random.default_rng(cfg.seed)
    tokens = text.split()
    records = []
    token_kinds = [k for k in cfg.kinds if k is not AttackKind.BENIGN_APPEND]
    if token_kinds and cfg.per_token_prob > 0:
        for idx, tok in enumerate(list(tokens)):
            if not _eligible(tok, cfg) or rng.random() >= cfg.per_token_prob:
                continue
            choice = _pick(rng, token_kinds)
            recipe = choice.kinds if isinstance(choice, Combined) else (choice,)
            budget = cfg.max_edits_per_token
            cur = tok
            for kind in recipe:
                if kind is AttackKind.BENIGN_APPEND:
                    continue
                if kind in CHAR_KINDS and budget < 1:
                    continue
                edits = _apply_kind(cur, kind, cfg, rng, budget if kind in CHAR_KINDS else 1)
                if kind in CHAR_KINDS:
                    budget -= len(edits)
                for before, after in edits:
                    records.append(PerturbationRecord(idx, before, after, kind))
                    cur = after
            tokens[idx] = cur
    if AttackKind.BENIGN_APPEND in cfg.flat_kinds():
        appended = sentence_append("", cfg.benign_words, cfg.append_count, rng).split()
        for w in appended:
            records.append(PerturbationRecord(len(tokens), "", w, AttackKind.BENIGN_APPEND))
            tokens.append(w)
    if not records:
        return text, []
    return " ".join(tokens), records


def replay_records(text, records):
    """Re-apply ``records`` to ``text``; the audit-trail inverse of attack_text."""
    if not records:
        return text
    tokens = text.split()
    for r in records:
        if r.token_index == len(tokens) and r.original == "":
            tokens.append(r.perturbed)
            continue
        if tokens[r.token_index] != r.original:
            raise ValueError(f"record mismatch at token {r.token_index}: "
                             f"{tokens[r.token_index]!r} != {r.original!r}")
        tokens[r.token_index] = r.perturbed
    return " ".join(tokens)


def derive_row_seed(seed, row_id):
    """``seed XOR h(row_id)`` with a process-independent 64-bit hash."""
    h = int.from_bytes(hashlib.blake2b(str(row_id).encode(), digest_size=8).digest(), "little")
    return (seed ^ h) & 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class AttackedRow:
    tweet: object
    text: str
    records: tuple


def attack_row(tweet, cfg, text=None):
    text = tweet.text if text is None else text
    row_cfg = replace(cfg, seed=derive_row_seed(cfg.seed, tweet.id))
    if not text.strip():
        return AttackedRow(tweet, text, ())
    out, recs = attack_text(text, row_cfg)
    return AttackedRow(tweet, out, tuple(recs))


def attack_corpus(data, cfg, texts=None):
    """Attack every row independently; labels and order are untouched.

    ``texts`` optionally overrides the text attacked for each row (e.g. the
    noise-removed form) while keeping the per-row seed derivation.
    """
    texts = [t.text for t in data] if texts is None else texts
    return [attack_row(t, cfg, txt) for t, txt in zip(data, texts)]


def write_audit(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps({"id": row.tweet.id,
                                 "records": [r.to_dict() for r in row.records]}) + "\n")
