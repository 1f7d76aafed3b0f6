"""Tweet preprocessing: noise removal, tokenization, stop words, normalization,
and the model vocabulary."""

from __future__ import annotations

import html
import json
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np


def load_stopwords(path=None):
    """One word per line; ``None`` loads the bundled list."""
    if path is None:
        text = resources.files("advhate.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


DEFAULT_STOPWORDS = load_stopwords()


@dataclass(frozen=True)
class PreprocessConfig:
    remove_urls: bool = True
    remove_mentions: bool = True
    remove_hashtags: bool = True
    remove_emoji: bool = True
    remove_punct: bool = True
    collapse_spaces: bool = True
    remove_stopwords: bool = True
    lowercase: bool = True
    stem: bool = False
    stopword_list: frozenset = field(default=DEFAULT_STOPWORDS, repr=False)

    def keep_punct(self):
        """Variant used on the adversarial path, ahead of correction."""
        return replace(self, remove_punct=False)


_URL_RE = re.compile(r"(?:\b[a-zA-Z][a-zA-Z0-9+.\-]*://|\bwww\.)\S*")
_MENTION_RE = re.compile(r"@\w+")
_HASHTAG_RE = re.compile(r"#\w+")
_SPACE_RE = re.compile(r"\s+")

_EMOJI_RANGES = (
    (0x2190, 0x21FF),  # arrows
    (0x2300, 0x23FF),  # misc technical
    (0x2460, 0x24FF),  # enclosed alphanumerics
    (0x25A0, 0x27BF),  # shapes, misc symbols, dingbats
    (0x2900, 0x297F),
    (0x2B00, 0x2BFF),
    (0x3030, 0x3030),
    (0x303D, 0x303D),
    (0x3297, 0x3299),
    (0xFE00, 0xFE0F),  # variation selectors
    (0x200D, 0x200D),  # zero-width joiner
    (0x20E3, 0x20E3),  # combining keycap
)


def is_emoji(ch):
    cp = ord(ch)
    if cp > 0xFFFF:
        return True
    return any(lo <= cp <= hi for lo, hi in _EMOJI_RANGES)


def _is_punct(ch):
    return unicodedata.category(ch)[0] in "PS"


def _unescape(text):
    # tweets carry stacked entities such as "&amp;#128514;"
    while True:
        out = html.unescape(text)
        if out == text:
            return out
        text = out


def remove_noise(text, cfg=None):
    """Strip URLs, mentions, hashtags, emoji and punctuation per ``cfg``.

    Punctuation becomes a space, except apostrophes which are dropped so
    contractions stay one word. Whitespace runs collapse to one space and
    the result is trimmed.
    """
    cfg = cfg or PreprocessConfig()
    text = _unescape(text)
    if cfg.remove_urls:
        text = _URL_RE.sub(" ", text)
    if cfg.remove_mentions:
        text = _MENTION_RE.sub(" ", text)
    if cfg.remove_hashtags:
        text = _HASHTAG_RE.sub(" ", text)
    if cfg.remove_emoji:
        text = "".join(" " if is_emoji(c) else c for c in text)
    if cfg.remove_punct:
        text = text.replace("'", "").replace("’", "")
        text = "".join(" " if _is_punct(c) else c for c in text)
    if cfg.collapse_spaces:
        text = _SPACE_RE.sub(" ", text)
    return text.strip()


def tokenize(text):
    return text.split()


def remove_stopwords(tokens, stopwords=None):
    stopwords = DEFAULT_STOPWORDS if stopwords is None else stopwords
    return [t for t in tokens if t.lower() not in stopwords]


_SUFFIXES = ("ing", "ed", "s")


def stem(word):
    """Suffix stripper applied to a fixed point, keeping at least 3 letters."""
    while True:
        for suf in _SUFFIXES:
            if suf == "s" and word.endswith("ss"):
                continue
            if word.endswith(suf) and len(word) - len(suf) >= 3:
                word = word[: -len(suf)]
                break
        else:
            return word


def normalize(tokens, cfg=None):
    cfg = cfg or PreprocessConfig()
    out = [t.lower() if cfg.lowercase else t for t in tokens]
    if cfg.stem:
        out = [stem(t) for t in out]
    return out


def preprocess(text, cfg=None):
    """Clean path: noise -> tokens -> stop words -> normalized tokens."""
    cfg = cfg or PreprocessConfig()
    tokens = tokenize(remove_noise(text, cfg))
    if cfg.remove_stopwords:
        tokens = remove_stopwords(tokens, cfg.stopword_list)
    return normalize(tokens, cfg)


PAD, UNK = "<pad>", "<unk>"
PAD_ID, UNK_ID = 0, 1


@dataclass
class Vocabulary:
    token_to_id: dict
    freq: dict
    min_freq: int = 2

    def __post_init__(self):
        self.id_to_token = [None] * len(self.token_to_id)
        for tok, i in self.token_to_id.items():
            self.id_to_token[i] = tok

    def __len__(self):
        return len(self.token_to_id)

    def __contains__(self, token):
        return token in self.token_to_id

    def id_of(self, token):
        return self.token_to_id.get(token, UNK_ID)

    def decode(self, ids):
        return [self.id_to_token[i] for i in ids if i != PAD_ID]

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for tok, i in sorted(self.token_to_id.items(), key=lambda kv: kv[1]):
                fh.write(json.dumps({"token": tok, "id": i, "freq": self.freq.get(tok, 0)}) + "\n")

    @classmethod
    def load(cls, path, min_freq=1):
        token_to_id, freq = {}, {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    rec = json.loads(line)
                    token_to_id[rec["token"]] = rec["id"]
                    if rec["token"] not in (PAD, UNK):
                        freq[rec["token"]] = rec["freq"]
        return cls(token_to_id, freq, min_freq)

    def digest(self):
        import hashlib

        blob = json.dumps(sorted(self.token_to_id.items(), key=lambda kv: kv[1]))
        return hashlib.sha256(blob.encode()).hexdigest()


def build_vocabulary(corpus_tokens, min_freq=2):
    if min_freq < 1:
        raise ValueError("min_freq must be >= 1")
    counts = Counter(t for doc in corpus_tokens for t in doc)
    kept = sorted(
        ((t, c) for t, c in counts.items() if c >= min_freq and t not in (PAD, UNK)),
        key=lambda tc: (-tc[1], tc[0]),
    )
    token_to_id = {PAD: PAD_ID, UNK: UNK_ID}
    for tok, _ in kept:
        token_to_id[tok] = len(token_to_id)
    return Vocabulary(token_to_id, dict(kept), min_freq)


def encode(tokens, vocab, seq_len):
    """Right-padded, tail-truncated id array plus the true (clipped) length."""
    if seq_len < 1:
        raise ValueError("seq_len must be >= 1")
    ids = np.full(seq_len, PAD_ID, dtype=np.int64)
    n = min(len(tokens), seq_len)
    for i in range(n):
        ids[i] = vocab.id_of(tokens[i])
    return ids, n


def encode_batch(docs, vocab, seq_len):
    ids = np.zeros((len(docs), seq_len), dtype=np.int64)
    lengths = np.zeros(len(docs), dtype=np.int64)
    for r, doc in enumerate(docs):
        ids[r], lengths[r] = encode(doc, vocab, seq_len)
    return ids, lengths
