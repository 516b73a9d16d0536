import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES
from textgen import FRAGMENTS, random_text
from issuesuccess.textprep import (PLACEHOLDERS, RULES, PosTag, apply_replacements, load_lexicon, pos_tag,
                                   preprocess, tag_word, tokenize)

GOLDEN = json.loads((FIXTURES / "preprocessing_golden.json").read_text(encoding="utf-8"))


@pytest.mark.parametrize("case", GOLDEN, ids=[f"g{i:02d}" for i in range(len(GOLDEN))])
def test_golden(case):
    assert apply_replacements(case["text"]) == case["replaced"]
    assert preprocess(case["text"]) == case["tokens"]


def test_golden_covers_every_placeholder():
    seen = {t for case in GOLDEN for t in case["tokens"] if t in PLACEHOLDERS}
    assert seen == PLACEHOLDERS
    assert len(GOLDEN) == 30


class TestReplacements:
    @pytest.mark.parametrize("text,expected", [
        ("see https://a.b/c for details", "see url_specification for details"),
        ("+1", "vote_specification"),
        ("fails on 1.2.3 with error 404", "fails on version_specification with error number_specification"),
        ("", ""),
        ("go to http://x.org/a.", "go to url_specification."),
        ("(see http://x.org/a)", "(see url_specification)"),
        ("id a12 and b_3 remain", "id a12 and b_3 remain"),
    ])
    def test_examples(self, text, expected):
        assert apply_replacements(text) == expected

    def test_code_wins_over_url(self):
        out = apply_replacements("{code}curl http://in.side/x{code}")
        assert out == "code_specification"

    def test_rule_order(self):
        assert [r.name for r in RULES] == ["url", "email", "user", "path", "version", "vote", "number"]
        assert all(r.placeholder in PLACEHOLDERS for r in RULES)

    def test_heuristic_needs_two_signals(self):
        assert apply_replacements("a = b") == "a = b"
        assert apply_replacements("x = f(y);") == "code_specification"

    def test_email_not_user(self):
        assert apply_replacements("write to dev@lists.apache.org") == "write to email_specification"

    @settings(max_examples=300, deadline=None)
    @given(st.text(alphabet=st.sampled_from(list("ab1.+@/:{}; =\n~[]_-x")), max_size=40))
    def test_idempotent_on_symbol_soup(self, text):
        once = apply_replacements(text)
        assert apply_replacements(once) == once

    def test_idempotent_on_generated_texts(self):
        rng = random.Random(1234)
        for _ in range(2000):
            once = apply_replacements(random_text(rng))
            assert apply_replacements(once) == once


class TestTokenize:
    def test_example(self):
        assert [t.surface for t in tokenize("Fixed in trunk, thanks!")] == ["fixed", "in", "trunk", "thanks"]

    def test_placeholder_kept(self):
        assert [t.surface for t in tokenize("url_specification works")] == ["url_specification", "works"]

    def test_empty(self):
        assert tokenize("") == []

    def test_unicode(self):
        assert [t.surface for t in tokenize("Über naïve 日本 ok")] == ["über", "naïve", "日本", "ok"]

    def test_plain_underscores_split(self):
        assert [t.surface for t in tokenize("foo_bar url_specification")] == ["foo", "bar", "url_specification"]

    def test_positions(self):
        toks = tokenize("a b, c")
        assert [t.position for t in toks] == [0, 1, 2]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.one_of(st.sampled_from(sorted(PLACEHOLDERS)), st.sampled_from(FRAGMENTS),
                              st.text(max_size=6)), max_size=15))
    def test_placeholders_never_split(self, parts):
        text = " ".join(parts)
        surfaces = [t.surface for t in tokenize(text)]
        assert all(s for s in surfaces)
        expected = sum(1 for p in parts if p in PLACEHOLDERS)
        assert sum(1 for s in surfaces if s in PLACEHOLDERS) >= expected
        positions = [t.position for t in tokenize(text)]
        assert positions == sorted(set(positions))


class TestTagging:
    def test_example(self):
        tags = pos_tag(tokenize("the patch fixed it"))
        assert tags == [PosTag.DETERMINER, PosTag.NOUN, PosTag.VERB, PosTag.PRONOUN]

    def test_empty(self):
        assert pos_tag([]) == []

    def test_placeholder_is_noun(self):
        assert pos_tag(tokenize("url_specification")) == [PosTag.NOUN]

    @pytest.mark.parametrize("word,tag", [("quickishly", PosTag.ADVERB), ("refactoring", PosTag.VERB),
                                          ("zorbed", PosTag.VERB), ("serialization", PosTag.NOUN),
                                          ("glorpment", PosTag.NOUN), ("flakiness", PosTag.NOUN),
                                          ("zebulous", PosTag.ADJECTIVE), ("frobful", PosTag.ADJECTIVE),
                                          ("grokable", PosTag.ADJECTIVE), ("1234", PosTag.NUMBER),
                                          ("qwzx", PosTag.OTHER)])
    def test_fallback_rules(self, word, tag):
        assert word not in load_lexicon()
        assert tag_word(word) is tag

    def test_lexicon_size_and_tags(self):
        lex = load_lexicon()
        assert 4000 <= len(lex) <= 6000
        assert set(lex.values()) <= set(PosTag)

    @given(st.text(max_size=60))
    def test_one_tag_per_token(self, text):
        toks = tokenize(apply_replacements(text))
        assert len(pos_tag(toks)) == len(toks)
