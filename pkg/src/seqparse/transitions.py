"""Top-down and in-order shift-reduce transition systems.

Configurations are immutable; ``apply`` returns a new one. Stack items are
either ``OpenNT`` markers or finished nodes (a ``Tree`` or a shifted ``Leaf``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .treebank import Leaf, Tree, Node


class System(str, enum.Enum):
    TOP_DOWN = "top-down"
    IN_ORDER = "in-order"


class TransitionError(ValueError):
    """An action that cannot be applied to a configuration."""


class Action(NamedTuple):
    """A transition. ``arg`` is the label for NT/RE, the word for lexicalised SH."""

    kind: str
    arg: str | None = None

    def __str__(self):
        if self.kind == "SH":
            return "SH" + (self.arg or "")
        if self.kind == "NT":
            return f"NT({self.arg})"
        if self.kind == "RE" and self.arg is not None:
            return f"RE({self.arg})"
        return self.kind

    @property
    def plain(self) -> Action:
        """The action with label/lexical decoration removed (NT keeps its label)."""
        return self if self.kind == "NT" else Action(self.kind)

    @classmethod
    def parse(cls, text: str) -> Action:
        if text in ("SH", "RE", "FI"):
            return cls(text)
        if text in ("SH.", "SH,"):
            return cls("SH", text[2:])
        if len(text) > 4 and text[2] == "(" and text[-1] == ")" and text[:2] in ("NT", "RE"):
            return cls(text[:2], text[3:-1])
        raise ValueError(f"not an action: {text!r}")


SHIFT = Action("SH")
REDUCE = Action("RE")
FINISH = Action("FI")
NT_ANY = Action("NT")  # template standing for NT(X) with any label


class OpenNT(NamedTuple):
    label: str


@dataclass(frozen=True)
class Limits:
    """Guards that keep free decoding finite.

    ``max_open_nts`` caps simultaneously open constituents (top-down);
    ``max_unary`` caps unary chains built by in-order Reduce.
    """

    max_open_nts: int = 100
    max_unary: int = 8


DEFAULT_LIMITS = Limits()


@dataclass(frozen=True)
class Configuration:
    stack: tuple = ()
    buffer_pos: int = 0
    finished: bool = False
    opens: tuple[int, ...] = ()  # stack indices of OpenNT items, bottom to top

    @property
    def top_is_open(self) -> bool:
        return bool(self.opens) and self.opens[-1] == len(self.stack) - 1

    @property
    def open_label(self) -> str | None:
        return self.stack[self.opens[-1]].label if self.opens else None


INITIAL = Configuration()


def initial() -> Configuration:
    return INITIAL


def unary_chain(item) -> int:
    """Number of stacked single-child constituents at the root of ``item``."""
    n = 0
    while isinstance(item, Tree) and len(item.children) == 1:
        n += 1
        item = item.children[0]
    return n


def legal_kinds(config: Configuration, system: System, n: int,
                limits: Limits = DEFAULT_LIMITS) -> tuple[bool, bool, bool, bool]:
    """Return (shift, nt, reduce, finish) legality flags for ``config``."""
    stack, opens = config.stack, config.opens
    more = config.buffer_pos < n
    if system is System.TOP_DOWN:
        sh = more and bool(opens)
        nt = more and (not stack or bool(opens)) and len(opens) < limits.max_open_nts
        re = bool(opens) and not config.top_is_open and not (len(opens) == 1 and more)
        return sh, nt, re, False
    if config.finished:
        return False, False, False, False
    sh = more and (not stack or bool(opens))
    nt = (bool(stack) and not config.top_is_open and len(opens) < limits.max_open_nts
          and (more or unary_chain(stack[-1]) < limits.max_unary))
    re = bool(opens) and not (config.top_is_open
                              and unary_chain(stack[-2]) >= limits.max_unary)
    fi = not more and len(stack) == 1 and isinstance(stack[0], Tree)
    return sh, nt, re, fi


def legal_actions(config: Configuration, system: System, sentence: Sequence[Leaf],
                  limits: Limits = DEFAULT_LIMITS) -> frozenset[Action]:
    """Action templates applicable in ``config``; NT is reported as ``NT_ANY``."""
    sh, nt, re, fi = legal_kinds(config, system, len(sentence), limits)
    return frozenset(a for a, ok in ((SHIFT, sh), (NT_ANY, nt), (REDUCE, re), (FINISH, fi)) if ok)


def check(config: Configuration, action: Action, sentence: Sequence[Leaf], system: System,
          limits: Limits = DEFAULT_LIMITS) -> str | None:
    """Reason why ``action`` is illegal in ``config``, or None if it is legal."""
    n = len(sentence)
    sh, nt, re, fi = legal_kinds(config, system, n, limits)
    kind = action.kind
    if kind == "SH":
        if config.finished:
            return "parse already finished"
        if config.buffer_pos >= n:
            return "shift with empty buffer"
        if not sh:
            return "shift would leave a word outside any constituent"
        if action.arg is not None and sentence[config.buffer_pos].word != action.arg:
            return (f"lexicalised shift {action} but next word is "
                    f"{sentence[config.buffer_pos].word!r}")
        return None
    if kind == "NT":
        if action.arg is None:
            return "non-terminal without label"
        if nt:
            return None
        if config.finished:
            return "parse already finished"
        if system is System.IN_ORDER and (not config.stack or config.top_is_open):
            return "in-order NT needs a completed first child on top of the stack"
        if len(config.opens) >= limits.max_open_nts:
            return "too many open constituents"
        if config.buffer_pos >= n:
            return ("non-terminal with empty buffer" if system is System.TOP_DOWN
                    else "unary chain too long")
        return "non-terminal after the root was closed"
    if kind == "RE":
        if config.finished:
            return "parse already finished"
        if not config.opens:
            return "reduce with no open non-terminal"
        if not re:
            if system is System.TOP_DOWN and config.top_is_open:
                return "reduce of an empty constituent"
            if system is System.TOP_DOWN:
                return "reduce would close the root with words left in the buffer"
            return "unary chain too long"
        if action.arg is not None and action.arg != config.open_label:
            return f"reduce label {action.arg!r} does not match open {config.open_label!r}"
        return None
    if kind == "FI":
        if system is System.TOP_DOWN:
            return "finish is not a top-down transition"
        if fi:
            return None
        if config.finished:
            return "parse already finished"
        if config.buffer_pos < n:
            return "finish with words left in the buffer"
        return "finish needs exactly one completed constituent on the stack"
    return f"unknown action {action!r}"


def apply(config: Configuration, action: Action, sentence: Sequence[Leaf], system: System,
          limits: Limits = DEFAULT_LIMITS) -> Configuration:
    """Apply ``action``; raise TransitionError if it is not legal."""
    reason = check(config, action, sentence, system, limits)
    if reason is not None:
        raise TransitionError(reason)
    return _apply(config, action, sentence, system)


def _apply(config: Configuration, action: Action, sentence: Sequence[Leaf],
           system: System) -> Configuration:
    stack, opens = config.stack, config.opens
    kind = action.kind
    if kind == "SH":
        return Configuration(stack + (sentence[config.buffer_pos],), config.buffer_pos + 1,
                             False, opens)
    if kind == "NT":
        return Configuration(stack + (OpenNT(action.arg),), config.buffer_pos, False,
                             opens + (len(stack),))
    if kind == "RE":
        k = opens[-1]
        label = stack[k].label
        if system is System.TOP_DOWN:
            node = Tree(label, stack[k + 1:])
            rest = stack[:k]
        else:
            node = Tree(label, (stack[k - 1],) + stack[k + 1:])
            rest = stack[:k - 1]
        return Configuration(rest + (node,), config.buffer_pos, False, opens[:-1])
    return Configuration(stack, config.buffer_pos, True, opens)


def is_terminal(config: Configuration, system: System, sentence: Sequence[Leaf]) -> bool:
    if system is System.IN_ORDER:
        return config.finished
    return (config.buffer_pos == len(sentence) and len(config.stack) == 1
            and isinstance(config.stack[0], Tree))


def result(config: Configuration) -> Tree:
    """The tree held by a terminal configuration."""
    if len(config.stack) != 1 or not isinstance(config.stack[0], Tree):
        raise TransitionError("configuration does not hold a single tree")
    return config.stack[0]


def oracle(tree: Tree, system: System) -> list[Action]:
    """Gold action sequence that rebuilds ``tree``."""
    out: list[Action] = []

    def top_down(node: Node):
        if isinstance(node, Leaf):
            out.append(SHIFT)
            return
        out.append(Action("NT", node.label))
        for c in node.children:
            top_down(c)
        out.append(REDUCE)

    def in_order(node: Node):
        if isinstance(node, Leaf):
            out.append(SHIFT)
            return
        in_order(node.children[0])
        out.append(Action("NT", node.label))
        for c in node.children[1:]:
            in_order(c)
        out.append(REDUCE)

    if system is System.TOP_DOWN:
        top_down(tree)
    else:
        in_order(tree)
        out.append(FINISH)
    return out


def replay(actions: Iterable[Action], sentence: Sequence[Leaf], system: System,
           limits: Limits = DEFAULT_LIMITS) -> Configuration:
    config = INITIAL
    for a in actions:
        config = apply(config, a, sentence, system, limits)
    return config
