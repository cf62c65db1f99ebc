"""Tree linearizations and output vocabularies."""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence, Union

from .transitions import SHIFT, Action, System, oracle
from .treebank import PUNCT_WORDS, Leaf, Tree, Node, yield_of


class Scheme(str, enum.Enum):
    TD_BRACKET = "td-bracket"
    TD_SR = "td-sr"
    TD_SR_ENRICHED = "td-sr-enriched"
    IN_ORDER_SR = "inorder-sr"
    IN_ORDER_SR_ENRICHED = "inorder-sr-enriched"

    @property
    def system(self) -> System:
        return System.IN_ORDER if self.name.startswith("IN_ORDER") else System.TOP_DOWN

    @property
    def bracketed(self) -> bool:
        return self is Scheme.TD_BRACKET

    @property
    def labeled_reduce(self) -> bool:
        return self in (Scheme.TD_BRACKET, Scheme.TD_SR_ENRICHED, Scheme.IN_ORDER_SR_ENRICHED)

    @property
    def lexical_shift(self) -> bool:
        return self is Scheme.IN_ORDER_SR_ENRICHED

    @property
    def plain(self) -> Scheme:
        """The scheme with enrichment erased."""
        if self is Scheme.IN_ORDER_SR_ENRICHED:
            return Scheme.IN_ORDER_SR
        if self in (Scheme.TD_SR_ENRICHED, Scheme.TD_BRACKET):
            return Scheme.TD_SR
        return self


class Bracket(NamedTuple):
    """Token of the bracketed scheme: ``(L``, ``)L`` or ``XX``."""

    kind: str  # "(", ")" or "XX"
    label: str | None = None

    def __str__(self):
        return "XX" if self.kind == "XX" else self.kind + self.label


XX = Bracket("XX")

Token = Union[Action, Bracket]


def parse_token(text: str, scheme: Scheme) -> Token:
    if scheme.bracketed:
        if text == "XX":
            return XX
        if len(text) > 1 and text[0] in "()":
            return Bracket(text[0], text[1:])
        raise ValueError(f"not a bracket token: {text!r}")
    return Action.parse(text)


def format_tokens(tokens: Iterable[Token]) -> str:
    return " ".join(str(t) for t in tokens)


def parse_tokens(line: str, scheme: Scheme) -> list[Token]:
    return [parse_token(t, scheme) for t in line.split()]


def token_to_action(token: Token) -> Action:
    """Map bracket tokens onto top-down actions; actions pass through."""
    if isinstance(token, Action):
        return token
    if token.kind == "XX":
        return SHIFT
    return Action("NT" if token.kind == "(" else "RE", token.label)


def _brackets(tree: Tree) -> list[Bracket]:
    out: list[Bracket] = []

    def walk(node: Node):
        if isinstance(node, Leaf):
            out.append(XX)
            return
        out.append(Bracket("(", node.label))
        for c in node.children:
            walk(c)
        out.append(Bracket(")", node.label))

    walk(tree)
    return out


def _label_reduces(actions: list[Action]) -> list[Action]:
    """Rewrite RE into RE(label) by tracking the open labels."""
    opened: list[str] = []
    out = []
    for a in actions:
        if a.kind == "NT":
            opened.append(a.arg)
        elif a.kind == "RE":
            a = Action("RE", opened.pop())
        out.append(a)
    return out


def linearize(tree: Tree, scheme: Scheme | str) -> list[Token]:
    """Token sequence encoding ``tree`` under ``scheme``."""
    scheme = Scheme(scheme)
    if scheme.bracketed:
        return _brackets(tree)
    actions = oracle(tree, scheme.system)
    if scheme.labeled_reduce:
        actions = _label_reduces(actions)
    if scheme.lexical_shift:
        words = iter(leaf.word for leaf in yield_of(tree))
        lexed = []
        for a in actions:
            if a.kind == "SH":
                w = next(words)
                if w in PUNCT_WORDS:
                    a = Action("SH", w)
            lexed.append(a)
        actions = lexed
    return actions


def erase(tokens: Sequence[Token]) -> list[Action]:
    """Drop reduce labels and shift lexicalisation (brackets become top-down actions)."""
    return [token_to_action(t).plain for t in tokens]


def token_bijection_check(tree: Tree) -> bool:
    """Whether mapping brackets to NT/RE(L)/SH turns the bracketed linearization
    into the enriched top-down one, symbol for symbol."""
    mapped = [token_to_action(t) for t in linearize(tree, Scheme.TD_BRACKET)]
    return mapped == linearize(tree, Scheme.TD_SR_ENRICHED)


# -- vocabularies ---------------------------------------------------------------

UNK = "<unk>"


@dataclass
class Vocabulary:
    """Id maps for output tokens and input features. Words and POS reserve id 0 for UNK."""

    tokens: list[str]
    words: list[str] = field(default_factory=lambda: [UNK])
    pos: list[str] = field(default_factory=lambda: [UNK])
    word_counts: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.token_index = {t: i for i, t in enumerate(self.tokens)}
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.pos_index = {p: i for i, p in enumerate(self.pos)}
        if len(self.token_index) != len(self.tokens) or self.words[0] != UNK or self.pos[0] != UNK:
            raise ValueError("malformed vocabulary")

    def __len__(self):
        return len(self.tokens)

    def token_id(self, token) -> int:
        try:
            return self.token_index[str(token)]
        except KeyError:
            raise KeyError(f"token {str(token)!r} not in vocabulary") from None

    def word_id(self, word: str) -> int:
        return self.word_index.get(word, 0)

    def pos_id(self, pos: str) -> int:
        return self.pos_index.get(pos, 0)

    def to_dict(self) -> dict:
        return {"tokens": self.tokens, "words": self.words, "pos": self.pos,
                "word_counts": self.word_counts}

    @classmethod
    def from_dict(cls, d: dict) -> Vocabulary:
        return cls(list(d["tokens"]), list(d["words"]), list(d["pos"]), dict(d["word_counts"]))


def build_vocab(trees: Sequence[Tree], scheme: Scheme | str, word_cutoff: int = 1,
                sentences: Iterable[Sequence[Leaf]] = ()) -> Vocabulary:
    """Collect the tokens of ``scheme`` over ``trees``; words seen fewer than
    ``word_cutoff`` times map to UNK. Extra ``sentences`` only add words/POS."""
    if not trees:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    scheme = Scheme(scheme)
    tokens: set[str] = set()
    words: Counter[str] = Counter()
    tags: set[str] = set()
    for t in trees:
        tokens.update(str(tok) for tok in linearize(t, scheme))
        for leaf in yield_of(t):
            words[leaf.word] += 1
            tags.add(leaf.pos)
    for s in sentences:
        for leaf in s:
            words[leaf.word] += 1
            tags.add(leaf.pos)
    kept = sorted(w for w, c in words.items() if c >= word_cutoff and w != UNK)
    return Vocabulary(sorted(tokens), [UNK] + kept, [UNK] + sorted(tags - {UNK}),
                      dict(words))

