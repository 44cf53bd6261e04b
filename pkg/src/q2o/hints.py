"""pg_hint_plan ``Leading`` hints: emission, parsing and attachment to SQL.

Grammar::

    hint  := "/*+ Leading(" node ") */"
    node  := alias | "(" node " " node ")"
    alias := [a-zA-Z_][a-zA-Z0-9_]*
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence, Union

from q2o.errors import EmptySql, MalformedHint, TooFewRelations
from q2o.joingraph import ALIAS_RE

PREFIX = "/*+ Leading("
SUFFIX = ") */"


@dataclass(frozen=True)
class Join:
    left: "JoinTree"
    right: "JoinTree"

    def __str__(self):
        return f"({self.left} {self.right})"


JoinTree = Union[str, Join]


def leaves(tree: JoinTree) -> list[str]:
    out: list[str] = []
    stack = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Join):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


@dataclass(frozen=True)
class PlanHint:
    text: str
    tree: JoinTree

    def __str__(self):
        return self.text


def order_to_tree(order: Sequence[str]) -> JoinTree:
    if len(order) < 2:
        raise TooFewRelations("a join tree needs at least two relations")
    tree: JoinTree = order[0]
    for alias in order[1:]:
        tree = Join(tree, alias)
    return tree


def _render(tree: JoinTree) -> str:
    if isinstance(tree, Join):
        return f"({_render(tree.left)} {_render(tree.right)})"
    if not ALIAS_RE.fullmatch(tree):
        raise MalformedHint(f"alias {tree!r} cannot appear unquoted in a hint")
    return tree


def emit_leading_hint(tree: JoinTree) -> PlanHint:
    names = leaves(tree)
    if len(names) < 2:
        raise TooFewRelations("a Leading hint needs at least two relations")
    if len(set(names)) != len(names):
        raise MalformedHint(f"repeated alias in join tree: {names}")
    return PlanHint(PREFIX + _render(tree) + SUFFIX, tree)


def hint_for_order(order: Sequence[str]) -> PlanHint:
    return emit_leading_hint(order_to_tree(order))


_TOKEN = re.compile(r"\(|\)| |" + ALIAS_RE.pattern)


def parse_leading_hint(text: str) -> JoinTree:
    if not (text.startswith(PREFIX) and text.endswith(SUFFIX)) or len(text) < len(PREFIX) + len(SUFFIX):
        raise MalformedHint(f"not wrapped as {PREFIX}...{SUFFIX}: {text!r}")
    body = text[len(PREFIX):-len(SUFFIX)]

    tokens = []
    pos = 0
    while pos < len(body):
        m = _TOKEN.match(body, pos)
        if not m:
            raise MalformedHint(f"unexpected character {body[pos]!r} at offset {pos}")
        tokens.append(m.group())
        pos = m.end()

    i = 0

    def node() -> JoinTree:
        nonlocal i
        if i >= len(tokens):
            raise MalformedHint("unexpected end of hint")
        tok = tokens[i]
        if tok == "(":
            i += 1
            left = node()
            if i >= len(tokens) or tokens[i] != " ":
                raise MalformedHint("expected a single space between join inputs")
            i += 1
            right = node()
            if i >= len(tokens) or tokens[i] != ")":
                raise MalformedHint("unbalanced parentheses")
            i += 1
            return Join(left, right)
        if tok in (")", " "):
            raise MalformedHint(f"unexpected {tok!r}")
        i += 1
        return tok

    tree = node()
    if i != len(tokens):
        raise MalformedHint("trailing text after join tree")
    names = leaves(tree)
    if len(names) < 2:
        raise MalformedHint("hint must name at least two relations")
    if len(set(names)) != len(names):
        raise MalformedHint(f"repeated alias in hint: {names}")
    return tree


def prepend_hint(sql: str, hint: Union[PlanHint, str]) -> str:
    body = sql.lstrip() if sql else ""
    if not body.strip():
        raise EmptySql("cannot attach a hint to empty SQL")
    return f"{hint}\n{body}"
