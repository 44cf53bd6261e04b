import re

import pytest
from hypothesis import given, settings, strategies as st

from q2o.errors import EmptySql, MalformedHint, TooFewRelations
from q2o.hints import (
    Join,
    emit_leading_hint,
    leaves,
    order_to_tree,
    parse_leading_hint,
    prepend_hint,
)

HINT_RE = re.compile(r"/\*\+ Leading\((.*)\) \*/")
NODE_TOKENS = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*|\(|\)| ")


def matches_grammar(text):
    """Recognizer for the hint grammar, independent of the parser under test."""
    m = HINT_RE.fullmatch(text)
    if not m:
        return False
    body = m.group(1)
    # Reduce innermost "(x y)" groups until a single alias remains.
    alias = r"[a-zA-Z_][a-zA-Z0-9_]*"
    prev = None
    while prev != body:
        prev = body
        body = re.sub(rf"\(({alias}) ({alias})\)", "X", body)
    return re.fullmatch(alias, body) is not None


def test_order_to_tree():
    assert order_to_tree(["a", "b"]) == Join("a", "b")
    assert order_to_tree(["ci", "t", "mc"]) == Join(Join("ci", "t"), "mc")
    with pytest.raises(TooFewRelations):
        order_to_tree(["a"])


@pytest.mark.parametrize("tree,text", [
    (Join("a", "b"), "/*+ Leading((a b)) */"),
    (Join(Join("ci", "t"), "mc"), "/*+ Leading(((ci t) mc)) */"),
    (Join(Join("a", "b"), Join("c", "d")), "/*+ Leading(((a b) (c d))) */"),
])
def test_emit(tree, text):
    hint = emit_leading_hint(tree)
    assert hint.text == text
    assert hint.tree == tree
    assert parse_leading_hint(text) == tree


def test_emit_errors():
    with pytest.raises(TooFewRelations):
        emit_leading_hint("a")
    with pytest.raises(MalformedHint):
        emit_leading_hint(Join("a", "a"))


@pytest.mark.parametrize("text", [
    "/*+ Leading((a b) */",
    "/*+ Leading((a b)))) */",
    "Leading((a b))",
    "/*+ Leading((a  b)) */",
    "/*+ Leading((a 1b)) */",
    "/*+ Leading((a b c)) */",
    "/*+ Leading(a) */",
    "/*+ Leading((a a)) */",
    "/*+ Leading(()) */",
    "",
])
def test_parse_malformed(text):
    with pytest.raises(MalformedHint):
        parse_leading_hint(text)


def test_prepend_hint():
    hint = emit_leading_hint(Join("a", "b"))
    assert prepend_hint("SELECT 1;", hint) == "/*+ Leading((a b)) */\nSELECT 1;"
    assert prepend_hint("  \n SELECT 1;", hint) == "/*+ Leading((a b)) */\nSELECT 1;"
    for bad in ("", "   \n"):
        with pytest.raises(EmptySql):
            prepend_hint(bad, hint)


aliases = st.from_regex(r"[a-zA-Z_][a-zA-Z0-9_]{0,5}", fullmatch=True)


@st.composite
def trees(draw, max_leaves=12):
    names = draw(st.lists(aliases, min_size=2, max_size=max_leaves, unique=True))

    def build(items):
        if len(items) == 1:
            return items[0]
        cut = draw(st.integers(1, len(items) - 1))
        return Join(build(items[:cut]), build(items[cut:]))

    return build(names)


@settings(max_examples=300, deadline=None)
@given(tree=trees())
def test_round_trip(tree):
    hint = emit_leading_hint(tree)
    assert matches_grammar(hint.text)
    assert parse_leading_hint(hint.text) == tree
    assert emit_leading_hint(parse_leading_hint(hint.text)).text == hint.text
    assert not hint.text.endswith(" ")


@settings(max_examples=100, deadline=None)
@given(order=st.lists(aliases, min_size=2, max_size=12, unique=True))
def test_leaf_order_preserved(order):
    assert leaves(order_to_tree(order)) == order
