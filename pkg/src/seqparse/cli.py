"""Command-line interface: ``seqparse <command> ...``.

Trees are read in bracketed form and written one per line. Sentence files hold
``word_POS`` tokens, and token sequence files hold one sequence per line.
Exit status is 2 for usage errors and 1 for bad input data.
"""

from __future__ import annotations

import argparse
import logging
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from . import treebank as tb
from .delinearize import delinearize
from .linearize import Scheme, format_tokens, linearize
from .seq2seq.train import DivergenceError
from .transitions import System, oracle

log = logging.getLogger("seqparse")

SCHEMES = [s.value for s in Scheme]
# short spellings accepted for the enriched schemes
SCHEME_ALIASES = {"inorder-enriched": "inorder-sr-enriched", "td-enriched": "td-sr-enriched"}


def _scheme(text: str) -> str:
    text = SCHEME_ALIASES.get(text, text)
    if text not in SCHEMES:
        raise argparse.ArgumentTypeError(f"invalid scheme {text!r} (choose from {', '.join(SCHEMES)})")
    return text


class DataError(Exception):
    """Bad input files or contents; reported with exit status 1."""


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    with open(path, encoding="utf-8") as f:
        return f.read()


def _lines(path: str) -> list[str]:
    return [line for line in _read_text(path).splitlines() if line.strip()]


def _trees(path: str) -> list[tb.Tree]:
    return tb.parse_ptb(_read_text(path))


def _sentences(path: str) -> list[list[tb.Leaf]]:
    return [tb.parse_sentence(line) for line in _lines(path)]


def _pmap(fn, items, jobs: int) -> list:
    """Order-preserving map, over worker processes when ``jobs`` > 1."""
    if jobs <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


def _seed(args) -> int:
    return 1 if args.seed is None else args.seed


def _emit(lines) -> None:
    out = sys.stdout
    for line in lines:
        out.write(line + "\n")


# -- workers (module level so they pickle) ---------------------------------------

def _linearize_one(tree, scheme):
    return format_tokens(linearize(tree, scheme))


def _delinearize_one(pair, scheme, mode):
    line, sentence = pair
    return tb.serialize(delinearize(line.split(), sentence, scheme, mode))


def _parse_one(sentence, model_path, beam, attention):
    dec = _decoder_cache(model_path, attention)
    tokens = dec.greedy(sentence) if beam == 1 else dec.beam(sentence, beam)
    return tb.serialize(delinearize(tokens, sentence, dec.params.scheme, "repair"))


_DECODERS: dict = {}


def _decoder_cache(model_path, attention):
    from .seq2seq.decode import Decoder
    from .seq2seq.params import ModelParams

    key = (model_path, attention)
    if key not in _DECODERS:
        _DECODERS[key] = Decoder(ModelParams.load(model_path), attention)
    return _DECODERS[key]


# -- commands -------------------------------------------------------------------

def cmd_linearize(args) -> int:
    _emit(_pmap(partial(_linearize_one, scheme=Scheme(args.scheme)), _trees(args.input), args.jobs))
    return 0


def cmd_delinearize(args) -> int:
    lines = _lines(args.input)
    sentences = _sentences(args.sentences)
    if len(lines) != len(sentences):
        raise DataError(f"{len(lines)} token lines but {len(sentences)} sentences")
    fn = partial(_delinearize_one, scheme=Scheme(args.scheme), mode=args.mode)
    _emit(_pmap(fn, list(zip(lines, sentences)), args.jobs))
    return 0


def cmd_oracle(args) -> int:
    system = System(args.system)
    _emit(" ".join(str(a) for a in oracle(t, system)) for t in _trees(args.input))
    return 0


def cmd_train(args) -> int:
    from .seq2seq.config import Config
    from .seq2seq.train import train

    overrides = {} if args.seed is None else {"seed": args.seed}
    for key in ("scheme", "epochs"):
        if getattr(args, key) is not None:
            overrides[key] = getattr(args, key)
    if args.attention is not None:
        overrides["attention_mode"] = args.attention
    config = Config.load(args.config, **overrides) if args.config else Config(**overrides)
    trees = _trees(args.trees)
    dev = _trees(args.dev) if args.dev else None
    result = train(trees, config.scheme, config, dev=dev,
                   callback=lambda r: print(f"epoch {r.epoch} loss {r.loss:.4f}"
                                            + (f" train-acc {r.train_accuracy:.4f}"
                                               if r.train_accuracy is not None else "")
                                            + (f" dev-acc {r.dev_accuracy:.4f}"
                                               if r.dev_accuracy is not None else ""),
                                            file=sys.stderr))
    result.params.save(args.out)
    print(f"saved {args.out} (epoch {result.best_epoch})", file=sys.stderr)
    return 0


def cmd_parse(args) -> int:
    if args.beam < 1:
        raise DataError("--beam must be at least 1")
    _decoder_cache(args.model, args.attention)  # fail early on a bad checkpoint
    fn = partial(_parse_one, model_path=args.model, beam=args.beam, attention=args.attention)
    _emit(_pmap(fn, _sentences(args.input), args.jobs))
    return 0


def cmd_eval(args) -> int:
    from .eval import bracket_f1

    print(bracket_f1(_trees(args.gold), _trees(args.pred), args.exclude_punct).report())
    return 0


def cmd_bench(args) -> int:
    from .eval import speed_bench
    from .seq2seq.params import ModelParams

    params = ModelParams.load(args.model)
    if args.input:
        sentences = _sentences(args.input)
    else:
        rng = random.Random(_seed(args))
        sentences = [tb.random_sentence(rng, args.length) for _ in range(args.count)]
    forced = None
    if args.gold:
        gold = _trees(args.gold)
        sentences = [tb.yield_of(t) for t in gold]
        forced = [linearize(t, params.scheme) for t in gold]
    res = speed_bench(sentences, params, args.attention, runs=args.runs, beam=args.beam,
                      forced=forced)
    runs = " ".join(f"{r:.2f}" for r in res.runs)
    print(f"attention {args.attention or params.config.attention_mode} "
          f"sentences {len(sentences)} runs {runs}")
    print(f"sentences_per_second={res.mean:.2f}")
    return 0


def cmd_stats(args) -> int:
    from .eval import attention_stats
    from .seq2seq.params import ModelParams

    st = attention_stats(_sentences(args.input), ModelParams.load(args.model))
    print(f"steps {st['steps']} boundary {st['boundary_steps']}")
    print(f"frequency_argmax_at_p_or_p1={st['frequency_argmax_at_p_or_p1']:.4f}")
    return 0


def cmd_gen_synthetic(args) -> int:
    trees = tb.random_treebank(args.trees, seed=_seed(args), max_depth=args.max_depth,
                               max_fanout=args.max_fanout, vocab_size=args.vocab,
                               max_words=args.max_words)
    _emit(tb.serialize(t) for t in trees)
    if args.sentences:
        tb.write_sentences((tb.yield_of(t) for t in trees), args.sentences)
    return 0


# -- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed")
    common.add_argument("--jobs", type=int, default=argparse.SUPPRESS,
                        help="worker processes for per-sentence commands")
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)

    p = argparse.ArgumentParser(prog="seqparse", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=None, help="random seed (default 1)")
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, metavar="command")

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn)
        return sp

    sp = add("linearize", cmd_linearize, "trees to token sequences")
    sp.add_argument("--scheme", required=True, type=_scheme, metavar="{" + ",".join(SCHEMES) + "}")
    sp.add_argument("input", nargs="?", default="-")

    sp = add("delinearize", cmd_delinearize, "token sequences back to trees")
    sp.add_argument("--scheme", required=True, type=_scheme, metavar="{" + ",".join(SCHEMES) + "}")
    sp.add_argument("--mode", choices=("strict", "repair"), default="strict")
    sp.add_argument("--sentences", required=True, help="word_POS sentence file")
    sp.add_argument("input", nargs="?", default="-")

    sp = add("oracle", cmd_oracle, "gold transition sequences")
    sp.add_argument("--system", choices=[s.value for s in System], default="top-down")
    sp.add_argument("input", nargs="?", default="-")

    sp = add("train", cmd_train, "train a model")
    sp.add_argument("--config", help="key = value configuration file")
    sp.add_argument("--scheme", type=_scheme, metavar="{" + ",".join(SCHEMES) + "}")
    sp.add_argument("--attention", choices=("prob", "det"))
    sp.add_argument("--epochs", type=int)
    sp.add_argument("--dev", help="dev trees for model selection")
    sp.add_argument("--out", required=True, help="checkpoint to write")
    sp.add_argument("trees")

    sp = add("parse", cmd_parse, "parse sentences with a trained model")
    sp.add_argument("--model", required=True)
    sp.add_argument("--beam", type=int, default=1)
    sp.add_argument("--attention", choices=("prob", "det"))
    sp.add_argument("input", nargs="?", default="-")

    sp = add("eval", cmd_eval, "labeled bracket F1")
    sp.add_argument("--gold", required=True)
    sp.add_argument("--pred", required=True)
    sp.add_argument("--exclude-punct", action="store_true")

    sp = add("bench", cmd_bench, "decoding throughput")
    sp.add_argument("--model", required=True)
    sp.add_argument("--attention", choices=("prob", "det"))
    sp.add_argument("--beam", type=int, default=1)
    sp.add_argument("--runs", type=int, default=3)
    sp.add_argument("--length", type=int, default=40, help="synthetic sentence length")
    sp.add_argument("--count", type=int, default=20, help="synthetic sentence count")
    sp.add_argument("--gold", help="trees whose gold sequences are decoded in forced mode")
    sp.add_argument("input", nargs="?", help="sentence file (default: synthetic)")

    sp = add("stats", cmd_stats, "attention boundary statistics")
    sp.add_argument("--model", required=True)
    sp.add_argument("input")

    sp = add("gen-synthetic", cmd_gen_synthetic, "random treebank")
    sp.add_argument("--trees", type=int, required=True)
    sp.add_argument("--max-depth", type=int, default=6)
    sp.add_argument("--max-fanout", type=int, default=4)
    sp.add_argument("--vocab", type=int, default=50)
    sp.add_argument("--max-words", type=int)
    sp.add_argument("--sentences", help="also write the yields here")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be at least 1")
    try:
        return args.func(args)
    except (DataError, DivergenceError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"seqparse {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
