"""Bracketed constituent trees with their file formats and a random generator."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

PUNCT_WORDS = (".", ",")

_ESCAPES = {"(": "-LRB-", ")": "-RRB-"}


class TreebankError(ValueError):
    """Raised on malformed bracketed input."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class Leaf:
    word: str
    pos: str

    def __post_init__(self):
        if not self.word or not self.pos:
            raise TreebankError(f"leaf needs a word and a POS tag, got {self.word!r}/{self.pos!r}")


@dataclass(frozen=True)
class Tree:
    label: str
    children: tuple[Node, ...]

    def __post_init__(self):
        if not self.label:
            raise TreebankError("non-terminal without a label")
        if not self.children:
            raise TreebankError(f"empty non-terminal {self.label!r}")

    def __str__(self):
        return serialize(self)

    def leaves(self) -> list[Leaf]:
        return yield_of(self)

    def n_constituents(self) -> int:
        return sum(1 for _ in self.subtrees())

    def subtrees(self) -> Iterator[Tree]:
        """Pre-order traversal over non-terminal nodes."""
        stack: list[Tree] = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(c for c in reversed(node.children) if isinstance(c, Tree))

    def depth(self) -> int:
        return 1 + max((c.depth() for c in self.children if isinstance(c, Tree)), default=0)


Node = Union[Tree, Leaf]


def _escape(s: str) -> str:
    return _ESCAPES.get(s, s)


def serialize(tree: Node) -> str:
    """Single-line bracketed form of ``tree``."""
    if isinstance(tree, Leaf):
        return f"({_escape(tree.pos)} {_escape(tree.word)})"
    return f"({tree.label} {' '.join(serialize(c) for c in tree.children)})"


def pretty(tree: Node, indent: int = 0) -> str:
    if isinstance(tree, Leaf) or all(isinstance(c, Leaf) for c in tree.children):
        return " " * indent + serialize(tree)
    inner = "\n".join(pretty(c, indent + 2) for c in tree.children)
    return f"{' ' * indent}({tree.label}\n{inner})"


def yield_of(tree: Node) -> list[Leaf]:
    """Left-to-right leaves of ``tree``."""
    out: list[Leaf] = []
    stack: list[Node] = [tree]
    while stack:
        node = stack.pop()
        if isinstance(node, Leaf):
            out.append(node)
        else:
            stack.extend(reversed(node.children))
    return out


def strip_label(label: str) -> str:
    """Drop PTB function tags and coindexation (``NP-SBJ-1`` -> ``NP``)."""
    if label.startswith("-"):
        return label
    for sep in "-=":
        head = label.split(sep, 1)[0]
        if head:
            label = head
    return label


# -- reading ----------------------------------------------------------------

def _tokenize(text: str) -> Iterator[tuple[str, int]]:
    """Yield (token, char index) for parens and atoms."""
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch in "()":
            yield ch, i
            i += 1
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j], i
            i = j


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _read_sexprs(text: str) -> list:
    """Parse ``text`` into nested lists ``[label, child, ...]`` with atoms as str."""
    result: list = []
    stack: list[tuple[list, int]] = []
    for tok, pos in _tokenize(text):
        if tok == "(":
            stack.append(([], pos))
        elif tok == ")":
            if not stack:
                raise TreebankError("unbalanced ')'", _byte_offset(text, pos))
            node, _ = stack.pop()
            (stack[-1][0] if stack else result).append(node)
        else:
            if not stack:
                raise TreebankError(f"atom {tok!r} outside brackets", _byte_offset(text, pos))
            stack[-1][0].append(tok)
    if stack:
        raise TreebankError("unbalanced '(': missing ')'", _byte_offset(text, stack[-1][1]))
    return result


def _build(sexpr: list, strip_functions: bool, drop_traces: bool) -> Node | None:
    if not sexpr:
        raise TreebankError("empty bracket pair")
    head, *rest = sexpr
    if isinstance(head, list):
        # unlabeled wrapper, e.g. "( (S ...) )"
        label, rest = "", sexpr
    else:
        label = head
    if len(rest) == 1 and isinstance(rest[0], str):
        if drop_traces and label == "-NONE-":
            return None
        return Leaf(rest[0], label)
    if any(isinstance(c, str) for c in rest):
        raise TreebankError(f"bare word mixed with constituents under {label!r}")
    children = []
    for c in rest:
        node = _build(c, strip_functions, drop_traces)
        if node is not None:
            children.append(node)
    if not children:
        if rest and drop_traces:
            return None  # every child was a trace
        raise TreebankError(f"empty non-terminal {label!r}")
    if not label:
        if len(children) == 1:
            return children[0]
        label = "TOP"
    if strip_functions:
        label = strip_label(label)
    return Tree(label, tuple(children))


def parse_ptb(text: str, strip_functions: bool = True, drop_traces: bool = True) -> list[Tree]:
    """Read every bracketed tree in ``text``.

    Trees may be one per line or pretty-printed over several lines. Function
    tags are stripped and ``-NONE-`` subtrees removed unless disabled.
    """
    trees = []
    for sexpr in _read_sexprs(text):
        node = _build(sexpr, strip_functions, drop_traces)
        if node is None:
            continue
        if isinstance(node, Leaf):
            raise TreebankError(f"tree root must be a constituent, got leaf {serialize(node)}")
        trees.append(node)
    return trees


def read_trees(path) -> list[Tree]:
    with open(path, encoding="utf-8") as f:
        return parse_ptb(f.read())


def write_trees(trees: Iterable[Tree], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for t in trees:
            f.write(serialize(t) + "\n")


# -- sentences ----------------------------------------------------------------

def format_sentence(sentence: Iterable[Leaf]) -> str:
    return " ".join(f"{leaf.word}_{leaf.pos}" for leaf in sentence)


def parse_sentence(line: str) -> list[Leaf]:
    """Parse a ``word_POS word_POS ...`` line; the POS follows the last underscore."""
    out = []
    for item in line.split():
        word, sep, pos = item.rpartition("_")
        if not sep or not word:
            raise TreebankError(f"token {item!r} is not of the form word_POS")
        out.append(Leaf(word, pos))
    if not out:
        raise TreebankError("empty sentence")
    return out


def read_sentences(path) -> list[list[Leaf]]:
    with open(path, encoding="utf-8") as f:
        return [parse_sentence(line) for line in f if line.strip()]


def write_sentences(sentences: Iterable[Iterable[Leaf]], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in sentences:
            f.write(format_sentence(s) + "\n")


# -- synthetic treebanks ----------------------------------------------------

LABELS = ("S", "NP", "VP", "PP", "ADJP", "ADVP", "SBAR", "QP")
POS_TAGS = ("DT", "NN", "NNS", "VBZ", "VBD", "IN", "JJ", "RB", "PRP", "CC")


def random_tree(
    rng: random.Random,
    max_depth: int = 6,
    max_fanout: int = 4,
    vocab_size: int = 50,
    max_words: int | None = None,
    leaf_prob: float = 0.45,
    punct_prob: float = 0.05,
) -> Tree:
    """Random tree with at most ``max_depth`` constituent levels.

    Words are drawn from ``vocab_size`` symbols, two of which are "." and ","
    (tagged as such) so lexicalised shifts get exercised.
    """
    n_plain = max(1, vocab_size - len(PUNCT_WORDS))
    budget = [max_words if max_words is not None else 1 << 30]

    def leaf() -> Leaf:
        budget[0] -= 1
        if rng.random() < punct_prob:
            p = rng.choice(PUNCT_WORDS)
            return Leaf(p, p)
        return Leaf(f"w{rng.randrange(n_plain)}", rng.choice(POS_TAGS))

    def grow(depth: int) -> Tree:
        fanout = rng.randint(1, max_fanout)
        children: list[Node] = []
        for k in range(fanout):
            if k > 0 and budget[0] <= 0:
                break
            if depth >= max_depth or budget[0] <= 1 or rng.random() < leaf_prob:
                children.append(leaf())
            else:
                children.append(grow(depth + 1))
        return Tree(rng.choice(LABELS), tuple(children))

    return grow(1)


def random_treebank(n: int, seed: int = 0, **kwargs) -> list[Tree]:
    rng = random.Random(seed)
    return [random_tree(rng, **kwargs) for _ in range(n)]


def random_sentence(rng: random.Random, length: int, vocab_size: int = 50) -> list[Leaf]:
    n_plain = max(1, vocab_size - len(PUNCT_WORDS))
    return [Leaf(f"w{rng.randrange(n_plain)}", rng.choice(POS_TAGS)) for _ in range(length)]
