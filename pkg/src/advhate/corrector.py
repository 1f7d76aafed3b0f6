"""Dictionary-based repair of obfuscated tweet text.

Two stages: de-obfuscation (inverse leetspeak, re-joining words that were
spelled out as separate characters) followed by a frequency-ranked
edit-distance spell checker.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from importlib import resources

from .adversary import ALPHABET, INVERSE_LEET
from .errors import ConfigInvalid, EmptyDictionary


class Rule(str, Enum):
    MERGE = "Merge"
    LEET = "Leet"
    EDIT1 = "Edit1"
    EDIT2 = "Edit2"
    UNCHANGED = "Unchanged"


class FrequencyDictionary:
    """Immutable word -> count lexicon with lazily built candidate indexes."""

    def __init__(self, counts):
        clean = {}
        for w, c in counts.items():
            if not w or w != w.lower() or any(ch.isspace() for ch in w):
                raise ValueError(f"invalid dictionary key {w!r}")
            if c <= 0:
                raise ValueError(f"non-positive count for {w!r}")
            clean[w] = int(c)
        self.counts = clean
        self.total = sum(clean.values())
        self._memo = {}

    def __contains__(self, word):
        return word in self.counts

    def __len__(self):
        return len(self.counts)

    def __getitem__(self, word):
        return self.counts[word]

    def get(self, word, default=0):
        return self.counts.get(word, default)

    def __eq__(self, other):
        return isinstance(other, FrequencyDictionary) and self.counts == other.counts

    @cached_property
    def _deletion_index(self):
        # key: word with one alphabet char removed -> words
        idx = defaultdict(list)
        for w in self.counts:
            for i, ch in enumerate(w):
                if ch in ALPHABET:
                    idx[w[:i] + w[i + 1:]].append(w)
        return idx

    @cached_property
    def _wildcard_index(self):
        # key: word with position i blanked -> words whose char at i is in the alphabet
        idx = defaultdict(list)
        for w in self.counts:
            for i, ch in enumerate(w):
                if ch in ALPHABET:
                    idx[(w[:i] + "\0" + w[i + 1:])].append(w)
        return idx

    def one_edit_neighbours(self, word):
        """Dictionary words in ``edits1(word)`` other than ``word``, from the indexes."""
        found = set()
        n = len(word)
        for i in range(n):
            d = word[:i] + word[i + 1:]
            if d in self.counts:
                found.add(d)
        for i in range(n - 1):
            t = word[:i] + word[i + 1] + word[i] + word[i + 2:]
            if t in self.counts:
                found.add(t)
        for i in range(n):
            for w in self._wildcard_index.get(word[:i] + "\0" + word[i + 1:], ()):
                if w != word:
                    found.add(w)
        found.update(self._deletion_index.get(word, ()))
        # swapping a doubled letter reproduces the word itself
        found.discard(word)
        return found

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for w, c in sorted(self.counts.items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{w} {c}\n")


def load_frequency_list(path=None):
    """``word count`` per line; ``None`` loads the bundled English list."""
    if path is None:
        text = resources.files("advhate.data").joinpath("english_freq.txt").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    counts = Counter()
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 2:
            counts[parts[0].lower()] += int(parts[1])
    return counts


def build_frequency_dictionary(sources):
    """Sum counts over ``sources``.

    Each source is either a mapping ``word -> count`` (e.g. a loaded
    frequency list) or an iterable of token sequences. Feed it the
    training split only.
    """
    if not sources:
        raise ValueError("at least one source is required")
    counts = Counter()
    for src in sources:
        if hasattr(src, "items"):
            for w, c in src.items():
                counts[w] += c
        else:
            for doc in src:
                for tok in doc:
                    tok = tok.lower()
                    if tok and not any(ch.isspace() for ch in tok):
                        counts[tok] += 1
    return FrequencyDictionary(counts)


def edits1(word, alphabet=ALPHABET):
    """Every string one deletion, adjacent transposition, substitution or
    insertion away from ``word``."""
    splits = [(word[:i], word[i:]) for i in range(len(word) + 1)]
    deletes = [a + b[1:] for a, b in splits if b]
    transposes = [a + b[1] + b[0] + b[2:] for a, b in splits if len(b) > 1]
    replaces = [a + c + b[1:] for a, b in splits if b for c in alphabet]
    inserts = [a + c + b for a, b in splits for c in alphabet]
    return set(deletes + transposes + replaces + inserts)


@dataclass(frozen=True)
class CorrectionConfig:
    max_edit_distance: int = 2
    leet_map: dict = field(default_factory=lambda: dict(INVERSE_LEET))
    merge_enabled: bool = True
    max_merge_window: int = 5
    min_candidate_freq: int = 1
    # longest alphabetic content a token may have and still count as a fragment
    max_fragment_len: int = 2

    def __post_init__(self):
        if self.max_edit_distance not in (1, 2):
            raise ConfigInvalid("max_edit_distance", "must be 1 or 2")
        if self.max_merge_window < 2:
            raise ConfigInvalid("max_merge_window", "must be >= 2")


def _best(cands, dictionary, cfg):
    cands = [w for w in cands if dictionary.get(w) >= cfg.min_candidate_freq]
    if not cands:
        return None
    return min(cands, key=lambda w: (-dictionary[w], w))


def correct_word(word, dictionary, cfg=None):
    """Return ``(replacement, rule)``.

    Known words are kept. Otherwise the most frequent dictionary word at
    distance 1 wins, then distance 2; equal counts fall back to
    lexicographic order. Distance-1 candidates always beat distance-2 ones.
    """
    cfg = cfg or CorrectionConfig()
    if not len(dictionary):
        raise EmptyDictionary("frequency dictionary is empty")
    if word in dictionary:
        return word, Rule.UNCHANGED
    key = (word, cfg.max_edit_distance, cfg.min_candidate_freq)
    if key not in dictionary._memo:
        dictionary._memo[key] = _search(word, dictionary, cfg)
    return dictionary._memo[key]


def _search(word, dictionary, cfg):
    e1 = edits1(word)
    best = _best([w for w in e1 if w in dictionary], dictionary, cfg)
    if best is not None:
        return best, Rule.EDIT1
    if cfg.max_edit_distance >= 2:
        cands = set()
        for e in e1:
            cands |= dictionary.one_edit_neighbours(e)
        cands.discard(word)
        best = _best(cands, dictionary, cfg)
        if best is not None:
            return best, Rule.EDIT2
    return word, Rule.UNCHANGED


@dataclass(frozen=True)
class Step:
    """Tokens ``start:end`` of the input were replaced by ``replacement``."""

    start: int
    end: int
    original: str
    replacement: str
    rule: Rule

    def to_dict(self):
        return {"start": self.start, "end": self.end, "original": self.original,
                "replacement": self.replacement, "rule": self.rule.value}


@dataclass
class CorrectionResult:
    corrected_text: str
    steps: list

    @property
    def tokens(self):
        return self.corrected_text.split()


def unleet(token, leet_map):
    return "".join(leet_map.get(c, c) for c in token)


def _fragment(token, cfg):
    """Alphabetic content of ``token`` after inverse leet, or None when the
    token is too long to be part of a spelled-out word."""
    mapped = "".join(c for c in unleet(token, cfg.leet_map) if c.isalpha())
    if len(mapped) > cfg.max_fragment_len:
        return None
    return mapped


def _leet_candidate(token, dictionary, cfg):
    if token in dictionary:
        return None
    if not any(c.isalpha() for c in token) or not any(c in cfg.leet_map for c in token):
        return None
    mapped = unleet(token, cfg.leet_map)
    if mapped in dictionary:
        return mapped
    fixed, rule = correct_word(mapped, dictionary, CorrectionConfig(
        max_edit_distance=1, leet_map=cfg.leet_map, min_candidate_freq=cfg.min_candidate_freq))
    return fixed if rule is Rule.EDIT1 else None


def deobfuscate(tokens, dictionary, cfg=None):
    """Undo leetspeak and spelled-out words.

    Returns ``(tokens, steps)`` where each step covers a span of the input
    and the steps tile the input in order. Tokens that were left alone get
    an ``Unchanged`` step.
    """
    cfg = cfg or CorrectionConfig()
    steps = []
    i, n = 0, len(tokens)
    while i < n:
        if cfg.merge_enabled:
            merged = None
            for end in range(min(n, i + cfg.max_merge_window), i + 1, -1):
                window = tokens[i:end]
                frags = [_fragment(t, cfg) for t in window]
                if any(f is None for f in frags):
                    continue
                # a spelled-out word has a lone character in it and at least
                # one piece the dictionary does not know
                if not any(len(t) == 1 for t in window):
                    continue
                if all(t in dictionary for t in window):
                    continue
                word = "".join(frags)
                if len(word) >= 3 and word in dictionary:
                    merged = (end, word)
                    break
            if merged:
                end, word = merged
                steps.append(Step(i, end, " ".join(tokens[i:end]), word, Rule.MERGE))
                i = end
                continue
        tok = tokens[i]
        fixed = _leet_candidate(tok, dictionary, cfg)
        if fixed is not None and fixed != tok:
            steps.append(Step(i, i + 1, tok, fixed, Rule.LEET))
        else:
            steps.append(Step(i, i + 1, tok, tok, Rule.UNCHANGED))
        i += 1
    return [s.replacement for s in steps], steps


def _correct_round(tokens, dictionary, cfg):
    _, steps = deobfuscate(tokens, dictionary, cfg)
    out = []
    for s in steps:
        if s.rule is Rule.UNCHANGED and any(c.isalpha() for c in s.original):
            word, rule = correct_word(s.original, dictionary, cfg)
            s = Step(s.start, s.end, s.original, word, rule)
        out.append(s)
    return out


def correct_text(text, dictionary, cfg=None):
    """Tokenize, de-obfuscate, spell-correct each remaining token, re-join.

    Text is case-folded first; the dictionary holds lowercase words. The
    round is repeated until the output stops changing, so the result is a
    fixed point. Steps refer to spans of the original tokens.
    """
    cfg = cfg or CorrectionConfig()
    if not len(dictionary):
        raise EmptyDictionary("frequency dictionary is empty")
    original = text.lower().split()
    tokens = list(original)
    spans = [(i, i + 1, Rule.UNCHANGED) for i in range(len(tokens))]
    for _ in range(len(original) + 2):
        steps = _correct_round(tokens, dictionary, cfg)
        new_tokens = [s.replacement for s in steps]
        new_spans = []
        for s in steps:
            first, last = spans[s.start], spans[s.end - 1]
            rule = first[2] if s.rule is Rule.UNCHANGED else s.rule
            new_spans.append((first[0], last[1], rule))
        tokens, spans = new_tokens, new_spans
        if all(s.rule is Rule.UNCHANGED for s in steps):
            break
    final = [Step(a, b, " ".join(original[a:b]), tok, rule)
             for (a, b, rule), tok in zip(spans, tokens)]
    return CorrectionResult(" ".join(tokens), final)


def replay_steps(text, steps):
    """Rebuild the corrected text from ``steps`` applied to ``text``."""
    tokens = text.lower().split()
    pos, out = 0, []
    for s in steps:
        if s.start != pos or " ".join(tokens[s.start:s.end]) != s.original:
            raise ValueError(f"step does not match input at token {s.start}")
        out.append(s.replacement)
        pos = s.end
    if pos != len(tokens):
        raise ValueError("steps do not cover the whole input")
    return " ".join(out)


def write_steps(results, path, ids=None):
    with open(path, "w", encoding="utf-8") as fh:
        for k, res in enumerate(results):
            rec = {"steps": [s.to_dict() for s in res.steps]}
            if ids is not None:
                rec = {"id": ids[k], **rec}
            fh.write(json.dumps(rec) + "\n")
