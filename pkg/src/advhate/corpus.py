"""Loading, validating and splitting Davidson-style hate-speech CSV files."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np

from .errors import ClassAbsent, ConfigInvalid, EmptyFile, MalformedRow, MissingColumn


class Label(IntEnum):
    HATE = 0
    OFFENSIVE = 1
    NEITHER = 2


N_CLASSES = len(Label)


@dataclass(frozen=True)
class LabeledTweet:
    id: int
    text: str
    annot_total: int
    hate_count: int
    offensive_count: int
    neither_count: int
    label: Label

    @property
    def counts(self):
        return (self.hate_count, self.offensive_count, self.neither_count)


@dataclass(frozen=True)
class ColumnSchema:
    """Header names of the CSV columns. ``id``/``label`` may be ``None``."""

    id: str | None = ""
    count: str = "count"
    hate: str = "hate_speech"
    offensive: str = "offensive_language"
    neither: str = "neither"
    label: str | None = "class"
    text: str = "tweet"


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str

    def to_dict(self):
        return {"line": self.line, "reason": self.reason}


@dataclass
class LoadResult:
    tweets: list[LabeledTweet]
    rejects: list[Reject] = field(default_factory=list)


def resolve_label(counts, class_hint=None):
    """Argmax of the annotation counts; ties go to ``class_hint`` if it is
    one of the tied classes, otherwise to the lowest tied index."""
    top = max(counts)
    tied = [c for c, n in enumerate(counts) if n == top]
    if len(tied) > 1 and class_hint in tied:
        return Label(class_hint)
    return Label(tied[0])


def _parse_int(value, name):
    try:
        v = int(str(value).strip())
    except ValueError:
        raise ValueError(f"{name} is not an integer: {value!r}") from None
    if v < 0:
        raise ValueError(f"{name} is negative: {v}")
    return v


def _row_to_tweet(row, schema, fallback_id):
    total = _parse_int(row[schema.count], "count")
    counts = tuple(
        _parse_int(row[col], col) for col in (schema.hate, schema.offensive, schema.neither)
    )
    if sum(counts) > total:
        raise ValueError(f"counts exceed total ({sum(counts)} > {total})")
    if sum(counts) != total:
        raise ValueError(f"counts do not sum to total ({sum(counts)} != {total})")
    text = row[schema.text]
    if not text or not text.strip():
        raise ValueError("empty text")
    hint = None
    if schema.label is not None and str(row.get(schema.label, "")).strip() != "":
        hint = _parse_int(row[schema.label], "class")
        if hint >= N_CLASSES:
            raise ValueError(f"class out of range: {hint}")
    if schema.id is not None and str(row.get(schema.id, "")).strip() != "":
        tid = _parse_int(row[schema.id], "id")
    else:
        tid = fallback_id
    return LabeledTweet(tid, text, total, *counts, label=resolve_label(counts, hint))


def load_corpus(path, schema=None, strict=False):
    """Parse a UTF-8 CSV into :class:`LabeledTweet` rows.

    Rows that violate the tweet invariants are collected in
    ``LoadResult.rejects`` (line numbers are 1-based physical lines of the
    row start, the header being line 1). With ``strict=True`` the first bad
    row raises :class:`MalformedRow` instead.
    """
    schema = schema or ColumnSchema()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise EmptyFile(str(path))
        header = set(reader.fieldnames)
        required = [schema.count, schema.hate, schema.offensive, schema.neither, schema.text]
        if schema.label is not None:
            required.append(schema.label)
        for name in required:
            if name not in header:
                raise MissingColumn(name)
        if schema.id is not None and schema.id not in header:
            schema = ColumnSchema(**{**schema.__dict__, "id": None})

        tweets, rejects = [], []
        line = reader.line_num + 1
        for i, row in enumerate(reader):
            try:
                if None in row or any(v is None for v in row.values()):
                    raise ValueError("wrong number of fields")
                tweets.append(_row_to_tweet(row, schema, i))
            except ValueError as exc:
                if strict:
                    raise MalformedRow(line, str(exc)) from None
                rejects.append(Reject(line, str(exc)))
            line = reader.line_num + 1
    if not tweets and not rejects:
        raise EmptyFile(str(path))
    return LoadResult(tweets, rejects)


def write_rejects(rejects, path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in rejects:
            fh.write(json.dumps(r.to_dict()) + "\n")


def write_corpus(tweets, path):
    """Write tweets back out in the Davidson column layout."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["", "count", "hate_speech", "offensive_language", "neither", "class", "tweet"])
        for t in tweets:
            w.writerow([t.id, t.annot_total, t.hate_count, t.offensive_count,
                        t.neither_count, int(t.label), t.text])


@dataclass(frozen=True)
class SplitSpec:
    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0
    stratified: bool = True

    def validate(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        for name, f in zip(("train_frac", "val_frac", "test_frac"), fracs):
            if not f > 0:
                raise ConfigInvalid(name, "fractions must be > 0")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ConfigInvalid("split", f"fractions sum to {sum(fracs)}, expected 1.0")
        return self


@dataclass
class CorpusSplit:
    train: list[LabeledTweet]
    val: list[LabeledTweet]
    test: list[LabeledTweet]

    def parts(self):
        return {"train": self.train, "val": self.val, "test": self.test}


def _part_sizes(n, spec):
    # the epsilon keeps e.g. 100 * 0.29 = 28.999... from flooring to 28
    sizes = [int(np.floor(n * f + 1e-9)) for f in (spec.train_frac, spec.val_frac, spec.test_frac)]
    # remainder handed out one item at a time, train first
    k = 0
    while sum(sizes) < n:
        sizes[k % 3] += 1
        k += 1
    return sizes


def _cut(items, sizes):
    a, b = sizes[0], sizes[0] + sizes[1]
    return items[:a], items[a:b], items[b:]


def split_corpus(data, spec=None):
    """Deterministic train/val/test partition; each part is sorted by id."""
    spec = (spec or SplitSpec()).validate()
    if not data:
        raise ConfigInvalid("data", "cannot split an empty corpus")
    rng = np.random.default_rng(spec.seed)
    parts = ([], [], [])
    if spec.stratified:
        for label in Label:
            members = [t for t in data if t.label == label]
            if not members:
                raise ClassAbsent(label.name)
            order = rng.permutation(len(members))
            for dst, chunk in zip(parts, _cut([members[i] for i in order], _part_sizes(len(members), spec))):
                dst.extend(chunk)
    else:
        order = rng.permutation(len(data))
        for dst, chunk in zip(parts, _cut([data[i] for i in order], _part_sizes(len(data), spec))):
            dst.extend(chunk)
    train, val, test = (sorted(p, key=lambda t: t.id) for p in parts)
    return CorpusSplit(train, val, test)


def stratified_subsample(data, n, seed):
    """Draw ``n`` items keeping class proportions (largest-remainder rounding)."""
    if n >= len(data):
        return list(data)
    rng = np.random.default_rng(seed)
    by_class = {lab: [t for t in data if t.label == lab] for lab in Label}
    quotas = {lab: len(m) * n / len(data) for lab, m in by_class.items()}
    take = {lab: int(np.floor(q)) for lab, q in quotas.items()}
    leftover = n - sum(take.values())
    for lab in sorted(Label, key=lambda l: (-(quotas[l] - take[l]), l))[:leftover]:
        take[lab] += 1
    out = []
    for lab, members in by_class.items():
        idx = rng.choice(len(members), size=take[lab], replace=False)
        out.extend(members[i] for i in sorted(idx))
    return sorted(out, key=lambda t: t.id)


@dataclass
class ClassDistribution:
    counts: dict
    fractions: dict

    def majority(self):
        return max(Label, key=lambda l: (self.counts[l], -l))

    def to_dict(self):
        return {
            "counts": {l.name: self.counts[l] for l in Label},
            "fractions": {l.name: self.fractions[l] for l in Label},
        }


def class_distribution(data):
    counts = {lab: 0 for lab in Label}
    for t in data:
        counts[t.label] += 1
    n = sum(counts.values())
    fractions = {lab: (c / n if n else 0.0) for lab, c in counts.items()}
    return ClassDistribution(counts, fractions)
