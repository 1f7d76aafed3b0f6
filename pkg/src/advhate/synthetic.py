"""Seeded generator of Davidson-schema tweet corpora.

Used for fixtures and as a stand-in when the real labeled CSV is not
available. Rows carry the same columns and annotation-count semantics as
the public file: several crowd annotators vote, the label is the majority.
"""

from __future__ import annotations

import numpy as np

from .corpus import Label, LabeledTweet, resolve_label

# class shares of the public 24,783-row release (1,430 / 19,190 / 4,163)
DAVIDSON_PRIORS = (1430 / 24783, 19190 / 24783, 4163 / 24783)

FILLER = """just really so like when got get still know think today now people time
going back never always some every night day life cant dont gonna wanna why what
this that all one more man girl boy guys say said tell look see come make want need
feel lol yeah well even ever much good bad new old last first again right little big""".split()

GROUPS = "immigrants foreigners refugees outsiders migrants invaders newcomers".split()
HATE_WORDS = """exterminate vermin subhuman deport inferior filth parasites purge
eradicate savages disease infest breed cockroaches scum kill die burn destroy""".split()
HATE_TEMPLATES = (
    "all those {g} are {h}",
    "we should {h} every one of those {g}",
    "{g} are nothing but {h}",
    "send the {g} back they are {h}",
    "i hate {g} they {h} everything",
    "the {g} need to {h}",
)
OFFENSIVE_WORDS = """damn crap stupid idiot dumb ugly loser jerk pathetic trash freak clown
lame moron sucks annoying liar weirdo creep shut fake brat""".split()
OFFENSIVE_TEMPLATES = (
    "you are such a {o}",
    "shut up you {o}",
    "this {o} thinks he is cool",
    "what a {o} lol",
    "my ex is a {o} {o}",
    "stop being a {o}",
)
NEITHER_WORDS = """game weather music coffee birds season movie team weekend friends
love happy beautiful sunshine dinner school beach pizza concert garden""".split()
NEITHER_TEMPLATES = (
    "cant wait for the {n} this {n}",
    "such a {n} day with my {n}",
    "that {n} was amazing",
    "listening to {n} with {n}",
    "the {n} is so good today",
    "happy {n} everyone",
)

EMOJI = ("\U0001F602", "\U0001F62D", "\U0001F525", "\U0001F44C", "❤️")


def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _fill(template, rng):
    out = []
    for part in template.split():
        if part == "{g}":
            out.append(_pick(rng, GROUPS))
        elif part == "{h}":
            out.append(_pick(rng, HATE_WORDS))
        elif part == "{o}":
            out.append(_pick(rng, OFFENSIVE_WORDS))
        elif part == "{n}":
            out.append(_pick(rng, NEITHER_WORDS))
        else:
            out.append(part)
    return out


def _typo(word, rng):
    i = int(rng.integers(len(word)))
    return word[:i] + word[i + 1:] if len(word) > 3 else word


def _tweet_words(label, rng, overlap):
    templates = {Label.HATE: HATE_TEMPLATES, Label.OFFENSIVE: OFFENSIVE_TEMPLATES,
                 Label.NEITHER: NEITHER_TEMPLATES}
    words = _fill(_pick(rng, templates[label]), rng)
    # cross-class vocabulary keeps the task from being pure keyword lookup
    for other in Label:
        if other != label and rng.random() < overlap[label][other]:
            words += _fill(_pick(rng, templates[other]), rng)[-2:]
    n_fill = int(rng.integers(1, 7))
    for _ in range(n_fill):
        words.insert(int(rng.integers(len(words) + 1)), _pick(rng, FILLER))
    return [(_typo(w, rng) if rng.random() < 0.03 else w) for w in words]


def _decorate(words, rng):
    text = " ".join(words)
    if rng.random() < 0.35:
        text = f"RT @user{int(rng.integers(1000))}: " + text
    if rng.random() < 0.2:
        text = f"@friend{int(rng.integers(100))} " + text
    if rng.random() < 0.15:
        text += f" http://t.co/{int(rng.integers(10**6)):06d}"
    if rng.random() < 0.15:
        text += " #" + _pick(rng, ("mood", "truth", "facts", "smh", "lol"))
    if rng.random() < 0.2:
        text += " " + _pick(rng, EMOJI)
    if rng.random() < 0.1:
        text += " &amp; " + _pick(rng, FILLER)
    if rng.random() < 0.2:
        text += _pick(rng, ("!", "!!!", "?", "..."))
    if rng.random() < 0.1:
        text = text.upper()
    return text


DEFAULT_OVERLAP = {
    Label.HATE: {Label.OFFENSIVE: 0.5, Label.NEITHER: 0.1},
    Label.OFFENSIVE: {Label.HATE: 0.1, Label.NEITHER: 0.15},
    Label.NEITHER: {Label.HATE: 0.02, Label.OFFENSIVE: 0.1},
}


def make_corpus(n_rows, seed=0, priors=DAVIDSON_PRIORS, annotator_accuracy=0.85,
                overlap=None):
    """``n_rows`` synthetic :class:`LabeledTweet` rows with ids ``0..n-1``."""
    rng = np.random.default_rng(seed)
    overlap = overlap or DEFAULT_OVERLAP
    priors = np.asarray(priors, dtype=np.float64) / np.sum(priors)
    rows = []
    for i in range(n_rows):
        true = Label(int(rng.choice(3, p=priors)))
        n_annot = int(rng.choice([3, 3, 3, 3, 4, 6]))
        counts = [0, 0, 0]
        for _ in range(n_annot):
            if rng.random() < annotator_accuracy:
                counts[true] += 1
            else:
                counts[_pick(rng, [c for c in range(3) if c != true])] += 1
        label = resolve_label(counts, int(true))
        text = _decorate(_tweet_words(true, rng, overlap), rng)
        rows.append(LabeledTweet(i, text, n_annot, *counts, label=label))
    return rows
