"""Regenerate ``src/issuesuccess/data/lexicon.tsv``.

The word list is the N most frequent English words (pattern3's
``en-frequency.txt``) tagged with the first (most frequent) Penn tag from the
Brill lexicon bundled with pattern3 (``en-lexicon.txt``, BSD licensed), collapsed
onto the coarse 12-tag set used by :mod:`issuesuccess.textprep`.

Usage::

    pip download --no-deps pattern3==3.0.0 && tar xzf pattern3-3.0.0.tar.gz
    python tools/build_lexicon.py pattern3-3.0.0/pattern3/text/en > lexicon.tsv
"""
import re
import sys
from pathlib import Path

PENN_TO_COARSE = {
    "NN": "Noun", "NNS": "Noun", "NNP": "Noun", "NNPS": "Noun",
    "VB": "Verb", "VBD": "Verb", "VBG": "Verb", "VBN": "Verb", "VBP": "Verb", "VBZ": "Verb", "MD": "Verb",
    "JJ": "Adjective", "JJR": "Adjective", "JJS": "Adjective",
    "RB": "Adverb", "RBR": "Adverb", "RBS": "Adverb", "WRB": "Adverb",
    "DT": "Determiner", "PDT": "Determiner", "WDT": "Determiner",
    "IN": "Preposition", "TO": "Preposition", "RP": "Preposition",
    "PRP": "Pronoun", "PRP$": "Pronoun", "WP": "Pronoun", "WP$": "Pronoun", "EX": "Pronoun",
    "CC": "Conjunction",
    "CD": "Number",
    "SYM": "Symbol", "$": "Symbol", "#": "Symbol",
}

SIZE = 5000
VERSION = "1"


def main(src):
    src = Path(src)
    lexicon = {}
    for line in (src / "en-lexicon.txt").read_text(encoding="utf-8").splitlines():
        if line.startswith(";;;") or not line.strip():
            continue
        word, tag = line.split()[:2]
        lexicon.setdefault(word, tag.split("|")[0])
    out = {}
    for line in (src / "en-frequency.txt").read_text(encoding="utf-8").splitlines():
        if line.startswith(";;;") or not line.strip():
            continue
        word = line.split()[0].lower()
        if word in out or not re.fullmatch(r"[a-z]+", word):
            continue
        tag = lexicon.get(word) or lexicon.get(word.capitalize()) or lexicon.get(word.upper())
        if tag is None:
            continue
        out[word] = PENN_TO_COARSE.get(tag, "Other")
        if len(out) == SIZE:
            break
    sys.stdout.write(f"# lexicon version {VERSION}; derived from the Brill lexicon (pattern3, BSD)\n")
    for word in sorted(out):
        sys.stdout.write(f"{word}\t{out[word]}\n")


if __name__ == "__main__":
    main(sys.argv[1])
