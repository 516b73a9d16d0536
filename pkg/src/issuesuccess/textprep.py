"""Placeholder substitution, tokenisation and coarse part-of-speech tagging."""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources


class PosTag(str, enum.Enum):
    NOUN = "Noun"
    VERB = "Verb"
    ADJECTIVE = "Adjective"
    ADVERB = "Adverb"
    DETERMINER = "Determiner"
    PREPOSITION = "Preposition"
    PRONOUN = "Pronoun"
    CONJUNCTION = "Conjunction"
    NUMBER = "Number"
    PUNCT = "Punct"
    SYMBOL = "Symbol"
    OTHER = "Other"


@dataclass(frozen=True)
class Token:
    surface: str
    position: int


@dataclass(frozen=True)
class ReplacementRule:
    name: str
    pattern: re.Pattern
    placeholder: str

    def apply(self, text: str) -> str:
        return self.pattern.sub(self.placeholder, text)


PLACEHOLDERS = frozenset({
    "url_specification", "user_specification", "vote_specification", "number_specification",
    "version_specification", "email_specification", "code_specification", "path_specification",
})

# --- code ----------------------------------------------------------------

_FENCED = re.compile(
    r"```.*?(?:```|\Z)"
    r"|\{code(?::[^}]*)?\}.*?(?:\{code\}|\Z)"
    r"|\{noformat\}.*?(?:\{noformat\}|\Z)"
    r"|<pre>.*?(?:</pre>|\Z)"
    r"|<code>.*?(?:</code>|\Z)",
    re.DOTALL | re.IGNORECASE,
)
CODE = "code_specification"


def _looks_like_code(line: str) -> bool:
    stripped = line.strip()
    if not stripped:
        return False
    signals = 0
    signals += bool(re.search(r"[{}]", stripped))
    signals += ";" in stripped
    signals += "=" in stripped
    signals += bool(re.match(r"(?: {4,}|\t)", line))
    return signals >= 2


def _replace_code(text: str) -> str:
    text = _FENCED.sub(CODE, text)
    out: list[str] = []
    in_block = False
    for line in text.split("\n"):
        if _looks_like_code(line):
            if not in_block:
                out.append(CODE)
            in_block = True
        else:
            out.append(line)
            in_block = False
    return "\n".join(out)


# --- everything else, in application order ----------------------------------

_URL = re.compile(
    r"\b(?:https?|ftp|file)://[^\s<>\"'\]\[|]*[^\s<>\"'\]\[|.,;:!?)]"
    r"|\bwww\.[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)+(?:/[^\s<>\"'\]\[|]*[^\s<>\"'\]\[|.,;:!?)])?",
    re.IGNORECASE,
)
_EMAIL = re.compile(r"\b[A-Za-z0-9._%+-]+@[A-Za-z0-9-]+(?:\.[A-Za-z0-9-]+)*\.[A-Za-z]{2,}\b")
# @handle mentions and Jira's [~handle] markup
_USER = re.compile(r"\[~[^\]\s]+\]|(?<![\w@.])@[A-Za-z][\w.-]*[A-Za-z0-9]|(?<![\w@.])@[A-Za-z]")
_PATH = re.compile(
    r"(?<![\w/\\.:~-])"
    r"(?:"
    r"[A-Za-z]:\\(?:[\w.$-]+\\)*[\w.$-]*"                   # C:\dir\file
    r"|\\\\[\w.$-]+(?:\\[\w.$-]+)+"                        # \\server\share
    r"|(?:~|\.{1,2})?/(?:[\w.$-]+/)*[\w.$-]*[\w$]"          # /abs, ~/x, ./rel
    r"|[\w.$-]+/[\w.$-]+(?:/[\w.$-]+)+"                     # a/b/c
    r"|[\w.$-]+/[\w$-]+\.[A-Za-z][\w]{0,4}"                 # dir/file.ext
    r")"
    r"(?![\w/\\])"
)
_VERSION = re.compile(
    r"(?<![\w.])"
    r"(?:"
    r"[vV]?\d+(?:\.\d+){2,}(?:[-.](?:[A-Za-z]+\d*|\d+))*"
    r"|[vV]\d+(?:\.\d+)+(?:[-.](?:[A-Za-z]+\d*|\d+))*"
    r"|\d+\.\d+(?:\.[xX]|-(?:SNAPSHOT|alpha\d*|beta\d*|rc\d*|M\d+|GA|Final|RELEASE))"
    r"|(?<=[Vv]ersion )\d+\.\d+"                             # "version 3.1"
    r")"
    r"(?![\w])"
)
_VOTE = re.compile(r"(?<![\w+])\+1(?!\w|\.\d)")
_NUMBER = re.compile(r"(?<!\w)\d+(?:[.,]\d+)*(?!\w)")

RULES: tuple[ReplacementRule, ...] = (
    ReplacementRule("url", _URL, "url_specification"),
    ReplacementRule("email", _EMAIL, "email_specification"),
    ReplacementRule("user", _USER, "user_specification"),
    ReplacementRule("path", _PATH, "path_specification"),
    ReplacementRule("version", _VERSION, "version_specification"),
    ReplacementRule("vote", _VOTE, "vote_specification"),
    ReplacementRule("number", _NUMBER, "number_specification"),
)


_MAX_PASSES = 32


def apply_replacements(text: str) -> str:
    """Replace technical fragments by ``*_specification`` placeholders.

    Order is fixed: code, url, email, user, path, version, vote, number.  Code
    runs first so that a URL inside a fenced block disappears with the block.
    A placeholder can complete a pattern for an earlier rule (``@0.5`` becomes
    ``@number_specification``, a mention), so the chain is repeated until the
    text stops changing; this makes the function idempotent.
    """
    if not text:
        return text
    # every effective replacement removes a digit or punctuation trigger, so this terminates
    for _ in range(_MAX_PASSES):
        before = text
        text = _replace_code(text)
        for rule in RULES:
            text = rule.apply(text)
        if text == before:
            break
    return text


# --- tokenisation ---------------------------------------------------------

_WORD = re.compile(r"[^\W_]+(?:_[^\W_]+)*")


def tokenize(text: str) -> list[Token]:
    """Lowercased alphanumeric runs; placeholders survive as single tokens."""
    tokens: list[Token] = []
    for m in _WORD.finditer(text.lower()):
        word = m.group()
        if "_" in word and word not in PLACEHOLDERS:
            parts = word.split("_")
        else:
            parts = [word]
        for part in parts:
            tokens.append(Token(part, len(tokens)))
    return tokens


# --- tagging ----------------------------------------------------------------

_SUFFIX_RULES = (
    ("ly", PosTag.ADVERB),
    ("ing", PosTag.VERB),
    ("ed", PosTag.VERB),
    ("tion", PosTag.NOUN),
    ("ment", PosTag.NOUN),
    ("ness", PosTag.NOUN),
    ("ous", PosTag.ADJECTIVE),
    ("ful", PosTag.ADJECTIVE),
    ("able", PosTag.ADJECTIVE),
)


@lru_cache(maxsize=1)
def load_lexicon() -> dict[str, PosTag]:
    """The bundled ``word<TAB>tag`` lexicon (read once, never mutated)."""
    lexicon = {}
    data = resources.files("issuesuccess").joinpath("data/lexicon.tsv").read_text(encoding="utf-8")
    for line in data.splitlines():
        if not line or line.startswith("#"):
            continue
        word, tag = line.split("\t")
        lexicon[word] = PosTag(tag)
    return lexicon


def tag_word(word: str, lexicon: dict[str, PosTag] | None = None) -> PosTag:
    lexicon = load_lexicon() if lexicon is None else lexicon
    if word in PLACEHOLDERS:
        return PosTag.NOUN
    tag = lexicon.get(word)
    if tag is not None:
        return tag
    for suffix, stag in _SUFFIX_RULES:
        if word.endswith(suffix) and len(word) > len(suffix) + 1:
            return stag
    if re.fullmatch(r"\d+(?:[.,]\d+)*", word):
        return PosTag.NUMBER
    if re.fullmatch(r"[^\w\s]+", word):
        return PosTag.PUNCT
    return PosTag.OTHER


def pos_tag(tokens: list[Token]) -> list[PosTag]:
    lexicon = load_lexicon()
    return [tag_word(t.surface, lexicon) for t in tokens]


def preprocess(text: str) -> list[str]:
    """Replacement rules followed by tokenisation; returns token surfaces."""
    return [t.surface for t in tokenize(apply_replacements(text))]
