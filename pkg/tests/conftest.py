import numpy as np
import pytest

from seqparse.linearize import build_vocab
from seqparse.seq2seq.config import Config
from seqparse.seq2seq.params import ModelParams
from seqparse.treebank import parse_ptb, random_treebank

SAMPLE_TREE = "(S (NP (DT The) (NN public)) (VP (VBZ is) (ADVP (RB still)) (ADJP (JJ cautious))) (. .))"


@pytest.fixture(scope="session")
def sample_tree():
    return parse_ptb(SAMPLE_TREE)[0]


@pytest.fixture(scope="session")
def random_trees():
    """The 1000-tree property corpus: depth <= 6, fanout <= 4, 50 word types."""
    return random_treebank(1000, seed=12345, max_depth=6, max_fanout=4, vocab_size=50)


@pytest.fixture(scope="session")
def small_trees():
    return random_treebank(40, seed=7, max_depth=4, max_fanout=3, max_words=8)


def tiny_config(**kw) -> Config:
    base = dict(pretrained_dim=3, word_dim=2, pos_dim=2, enc_input_dim=3, enc_layers=2,
                enc_hidden=2, dec_hidden=3, att_hidden=2, label_dim=2, action_dim=2)
    base.update(kw)
    return Config(**base)


def tiny_params(trees, scheme="inorder-sr-enriched", seed=0, scale=1.0, **kw) -> ModelParams:
    """Small random model; weights redrawn from N(0, scale) so nothing is trivially zero."""
    cfg = tiny_config(scheme=scheme, seed=seed, **kw)
    params = ModelParams.initialize(cfg, build_vocab(trees, scheme))
    rng = np.random.default_rng(seed + 100)
    for k in params.tensors:
        params[k] = rng.normal(0.0, scale, params[k].shape)
    return params


@pytest.fixture(scope="session")
def overfit():
    """The overfit run: 50 short synthetic trees, enriched in-order, default optimizer.

    Shared by the acceptance suite and the trained-model decoding tests since
    it takes a few minutes on one core.
    """
    import time

    from seqparse.seq2seq.train import train

    trees = random_treebank(50, seed=7, max_depth=4, max_fanout=3, max_words=10)
    config = Config(epochs=200, target_accuracy=1.0, eval_every=5, seed=1)
    start = time.perf_counter()
    result = train(trees, "inorder-sr-enriched", config)
    return trees, result, time.perf_counter() - start
