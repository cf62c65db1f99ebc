"""Per-sentence Adam training with singleton UNK replacement and early stopping."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from ..linearize import Scheme, build_vocab, linearize
from ..treebank import Tree, yield_of
from . import kernels, model
from .config import Config
from .params import ModelParams, random_embeddings, read_embeddings

log = logging.getLogger(__name__)


class DivergenceError(RuntimeError):
    """Raised when the training loss stops being finite."""


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    train_accuracy: float | None = None
    dev_accuracy: float | None = None
    seconds: float = 0.0


@dataclass
class TrainResult:
    params: ModelParams
    history: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.history]


class Adam:
    """Adam over the trainable tensors of a ModelParams, updated in place.

    The l2 penalty enters through the gradient inside the update kernel, so
    callers pass the bare cross-entropy gradient.
    """

    def __init__(self, params: ModelParams, lr: float, beta1: float, beta2: float,
                 eps: float, lam: float = 0.0):
        self.lr, self.beta1, self.beta2, self.eps, self.lam = lr, beta1, beta2, eps, lam
        self.m = {k: np.zeros_like(params[k]) for k in params.trainable}
        self.v = {k: np.zeros_like(params[k]) for k in params.trainable}
        self.t = 0

    def update(self, params: ModelParams, grads: dict[str, np.ndarray]) -> float:
        """Apply one step; returns the regularizer value before the step."""
        self.t += 1
        c1 = 1.0 - self.beta1 ** self.t
        c2 = 1.0 - self.beta2 ** self.t
        sq = 0.0
        for k in self.m:
            sq += kernels.adam_step(params[k].reshape(-1), grads[k].reshape(-1),
                                    self.m[k].reshape(-1), self.v[k].reshape(-1), self.lam,
                                    self.lr, self.beta1, self.beta2, c1, c2, self.eps)
        return 0.5 * self.lam * sq


def pretrained_vectors(config: Config, words) -> dict[str, np.ndarray]:
    """Vectors from ``config.embeddings``, or a seeded random stand-in when unset."""
    if config.embeddings:
        return read_embeddings(config.embeddings)
    return random_embeddings(words, config.pretrained_dim, seed=config.seed)


def prepare(trees: list[Tree], scheme: Scheme, config: Config) -> tuple[ModelParams, list[model.Example]]:
    """Freshly initialised parameters for a treebank along with its gold examples."""
    vocab = build_vocab(trees, scheme, word_cutoff=config.word_cutoff)
    params = ModelParams.initialize(config, vocab, pretrained_vectors(config, vocab.words[1:]))
    examples = [model.make_example(params, yield_of(t), linearize(t, scheme)) for t in trees]
    return params, examples


def singleton_ids(params: ModelParams) -> np.ndarray:
    v = params.vocab
    return np.array([v.word_id(w) for w, c in v.word_counts.items() if c == 1], dtype=np.intp)


def unk_replace(example: model.Example, singletons: np.ndarray, rate: float,
                rng: np.random.Generator) -> model.Example:
    """Copy of ``example`` with each singleton word swapped for UNK with probability ``rate``.

    Only the learned word embedding sees the swap; the pretrained lookup keeps
    the real word.
    """
    if rate <= 0.0 or len(singletons) == 0:
        return example
    hit = np.isin(example.word_ids, singletons) & (rng.random(len(example.word_ids)) < rate)
    if not hit.any():
        return example
    word_ids = np.where(hit, 0, example.word_ids)
    return model.Example(example.pre_ids, word_ids, example.pos_ids,
                         example.token_ids, example.shifts)


def train(trees: list[Tree], scheme: Scheme | str, config: Config | None = None,
          dev: list[Tree] | None = None, params: ModelParams | None = None,
          callback=None) -> TrainResult:
    """Fit a model to ``trees`` linearized under ``scheme``.

    Sentences are visited in a seeded random order each epoch, one Adam step
    per sentence. Training stops early once training-set token accuracy
    reaches ``config.target_accuracy`` (if positive). With a dev set the
    returned parameters are those from the epoch with the best dev accuracy.
    """
    scheme = Scheme(scheme)
    config = (config or Config()).replace(scheme=scheme.value)
    if not trees:
        raise ValueError("empty training corpus")
    if params is None:
        params, examples = prepare(trees, scheme, config)
    else:
        examples = [model.make_example(params, yield_of(t), linearize(t, scheme)) for t in trees]
    dev_examples = [model.make_example(params, yield_of(t), linearize(t, scheme))
                    for t in (dev or [])]
    rng = np.random.default_rng(config.seed)
    opt = Adam(params, config.learning_rate, config.beta1, config.beta2, config.adam_eps,
               config.l2)
    singletons = singleton_ids(params)
    result = TrainResult(params)
    best_dev, best = -1.0, None

    for epoch in range(1, config.epochs + 1):
        start = time.perf_counter()
        total = 0.0
        for i in rng.permutation(len(examples)):
            ex = unk_replace(examples[i], singletons, config.unk_replace, rng)
            nll, grads = model.nll_and_grad([ex], params)
            if not np.isfinite(nll):
                raise DivergenceError(
                    f"loss became {nll} at epoch {epoch} on sentence {int(i)}; "
                    f"try a smaller learning rate (currently {config.learning_rate})")
            total += nll + opt.update(params, grads)
        rec = EpochRecord(epoch, total)
        if epoch % config.eval_every == 0 or epoch == config.epochs:
            rec.train_accuracy = model.token_accuracy(examples, params)
            if dev_examples:
                rec.dev_accuracy = model.token_accuracy(dev_examples, params)
                if rec.dev_accuracy > best_dev:
                    best_dev, best, result.best_epoch = rec.dev_accuracy, params.copy(), epoch
        rec.seconds = time.perf_counter() - start
        result.history.append(rec)
        log.info("epoch %d loss %.4f train-acc %s dev-acc %s (%.1fs)", epoch, rec.loss,
                 rec.train_accuracy, rec.dev_accuracy, rec.seconds)
        if callback is not None:
            callback(rec)
        if (config.target_accuracy > 0 and rec.train_accuracy is not None
                and rec.train_accuracy >= config.target_accuracy):
            break

    if best is not None:
        result.params = best
    else:
        result.best_epoch = len(result.history)
    return result
