"""Rebuild trees from token sequences, strictly or with repair of bad output."""

from __future__ import annotations

from typing import Iterable, Sequence

from . import transitions as tr
from .linearize import Bracket, Scheme, Token, parse_token, token_to_action
from .transitions import DEFAULT_LIMITS, Action, Configuration, Limits
from .treebank import PUNCT_WORDS, Leaf, Tree

DEFAULT_ROOT = "S"


class DelinearizeError(ValueError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"token {position}: {reason}")
        self.position = position
        self.reason = reason


def scheme_check(scheme: Scheme, config: Configuration, token: Token,
                 sentence: Sequence[Leaf], limits: Limits = DEFAULT_LIMITS) -> str | None:
    """Reason why ``token`` cannot be consumed in ``config`` under ``scheme``.

    On top of transition legality this enforces the scheme's alphabet:
    labelled reduces exactly in the enriched schemes, and in the enriched
    in-order scheme "." / "," must be shifted with the lexicalised token.
    """
    if scheme.bracketed != isinstance(token, Bracket):
        return f"{token} is not a {scheme.value} token"
    action = token_to_action(token)
    if action.kind == "RE":
        if scheme.labeled_reduce and action.arg is None:
            return "unlabelled reduce in an enriched scheme"
        if not scheme.labeled_reduce and action.arg is not None:
            return f"{token} is not a {scheme.value} token"
    elif action.kind == "SH":
        if action.arg is not None and not scheme.lexical_shift:
            return f"{token} is not a {scheme.value} token"
        if (scheme.lexical_shift and action.arg is None and config.buffer_pos < len(sentence)
                and sentence[config.buffer_pos].word in PUNCT_WORDS):
            return f"{sentence[config.buffer_pos].word!r} must be shifted as SH{sentence[config.buffer_pos].word}"
    elif action.kind == "FI" and scheme.system is tr.System.TOP_DOWN:
        return f"{token} is not a {scheme.value} token"
    return tr.check(config, action, sentence, scheme.system, limits)


def _coerce(tokens: Iterable, scheme: Scheme) -> list:
    out = []
    for t in tokens:
        if isinstance(t, str):
            try:
                t = parse_token(t, scheme)
            except ValueError:
                t = None
        out.append(t)
    return out


def delinearize(tokens: Iterable, sentence: Sequence[Leaf], scheme: Scheme | str,
                mode: str = "strict", limits: Limits = DEFAULT_LIMITS) -> Tree:
    """Tree encoded by ``tokens`` over ``sentence``.

    ``tokens`` may be token objects or their spellings. In ``strict`` mode the
    first bad token raises DelinearizeError; ``repair`` always returns a tree
    whose yield is ``sentence``.
    """
    if not sentence:
        raise ValueError("empty sentence")
    if mode not in ("strict", "repair"):
        raise ValueError(f"unknown mode {mode!r}")
    scheme = Scheme(scheme)
    tokens = _coerce(tokens, scheme)
    system = scheme.system
    if mode == "strict":
        config = tr.INITIAL
        for i, tok in enumerate(tokens):
            if tok is None:
                raise DelinearizeError(i, "unreadable token")
            reason = scheme_check(scheme, config, tok, sentence, limits)
            if reason is not None:
                raise DelinearizeError(i, reason)
            config = tr._apply(config, token_to_action(tok), sentence, system)
        if not tr.is_terminal(config, system, sentence):
            raise DelinearizeError(len(tokens), "sequence ends before the tree is complete")
        return tr.result(config)

    config = tr.INITIAL
    root = DEFAULT_ROOT
    for tok in tokens:
        if tok is None or isinstance(tok, Bracket) != scheme.bracketed:
            continue
        if tr.is_terminal(config, system, sentence):
            break
        action = repair_policy(config, token_to_action(tok), sentence, system, root, limits)
        if action is None:
            continue
        if action.kind == "NT" and not config.opens:
            root = action.arg
        config = tr.apply(config, action, sentence, system, limits)
    return tr.result(complete(config, sentence, system, root, limits))


def repair_policy(config: Configuration, action: Action, sentence: Sequence[Leaf],
                  system: tr.System, root: str = DEFAULT_ROOT,
                  limits: Limits = DEFAULT_LIMITS) -> Action | None:
    """Legal substitute for ``action`` in ``config``, or None to skip it.

    Lexical and label decorations are dropped (the stack's label wins). An
    illegal Reduce becomes a Shift when one is possible; an illegal Shift
    with words left opens a ``root`` constituent first.
    """
    action = action.plain
    if tr.check(config, action, sentence, system, limits) is None:
        return action
    sh, nt, re, fi = tr.legal_kinds(config, system, len(sentence), limits)
    more = config.buffer_pos < len(sentence)
    if action.kind == "SH":
        if more and nt and not config.opens:
            return Action("NT", root)
        return None
    if action.kind == "RE":
        return tr.SHIFT if sh else None
    return None


def complete(config: Configuration, sentence: Sequence[Leaf], system: tr.System,
             root: str = DEFAULT_ROOT, limits: Limits = DEFAULT_LIMITS) -> Configuration:
    """Drive ``config`` to a terminal configuration without undoing structure.

    Remaining words are shifted (opening ``root`` if nothing can hold them),
    then open constituents are reduced; an open constituent that cannot be
    reduced is discarded.
    """
    n = len(sentence)
    while not tr.is_terminal(config, system, sentence):
        sh, nt, re, fi = tr.legal_kinds(config, system, n, limits)
        if config.buffer_pos < n:
            action = tr.SHIFT if sh else Action("NT", root)
        elif fi:
            action = tr.FINISH
        elif re:
            action = tr.REDUCE
        elif config.top_is_open:
            config = Configuration(config.stack[:-1], config.buffer_pos, False, config.opens[:-1])
            continue
        else:
            action = Action("NT", root)
        config = tr.apply(config, action, sentence, system, limits)
    return config
