"""Parameter tensors with their checkpoint and embedding file formats."""

from __future__ import annotations

import json

import numpy as np

from ..linearize import Scheme, Vocabulary, parse_token, token_to_action
from .config import Config

CHECKPOINT_VERSION = 1
FROZEN = frozenset({"E_pre"})

# previous-token kinds used when the decoder is fed its last output
TOKEN_KINDS = ("<s>", "SH", "SH.", "SH,", "NT", "RE", "FI")


def lstm_names(layer: int, direction: str) -> tuple[str, str, str]:
    prefix = f"lstm{layer}{direction}_"
    return prefix + "Wx", prefix + "Wh", prefix + "b"


class ModelParams:
    """Named float64 tensors plus the config and vocabulary they belong to."""

    def __init__(self, config: Config, vocab: Vocabulary, tensors: dict[str, np.ndarray]):
        self.config = config
        self.vocab = vocab
        self.tensors = tensors
        self.scheme = Scheme(config.scheme)
        self._token_tables()
        self.check()

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]

    def __setitem__(self, name: str, value: np.ndarray):
        self.tensors[name] = value

    def __contains__(self, name: str) -> bool:
        return name in self.tensors

    @property
    def trainable(self) -> list[str]:
        return [k for k in self.tensors if k not in FROZEN]

    def n_parameters(self, trainable_only: bool = True) -> int:
        names = self.trainable if trainable_only else list(self.tensors)
        return sum(self.tensors[k].size for k in names)

    def copy(self) -> ModelParams:
        return ModelParams(self.config, self.vocab, {k: v.copy() for k, v in self.tensors.items()})

    def _token_tables(self):
        """Per-token ids of the kind/label used for previous-token feedback."""
        actions = [token_to_action(parse_token(t, self.scheme)) for t in self.vocab.tokens]
        self.labels = ["<none>"] + sorted({a.arg for a in actions if a.kind in ("NT", "RE") and a.arg})
        label_index = {l: i for i, l in enumerate(self.labels)}
        kinds, labs = [], []
        for a in actions:
            kind = "SH" + (a.arg or "") if a.kind == "SH" else a.kind
            kinds.append(TOKEN_KINDS.index(kind))
            labs.append(label_index[a.arg] if a.kind in ("NT", "RE") and a.arg else 0)
        self.token_kind = np.array(kinds, dtype=np.intp)
        self.token_label = np.array(labs, dtype=np.intp)

    def expected_shapes(self) -> dict[str, tuple[int, ...]]:
        c, v = self.config, self.vocab
        shapes = {
            "E_pre": (len(v.words), c.pretrained_dim),
            "E_word": (len(v.words), c.word_dim),
            "E_pos": (len(v.pos), c.pos_dim),
            "W_enc": (c.enc_input_dim, c.pretrained_dim + c.word_dim + c.pos_dim),
            "b_enc": (c.enc_input_dim,),
        }
        inp = c.enc_input_dim
        for layer in range(c.enc_layers):
            for d in "fb":
                wx, wh, b = lstm_names(layer, d)
                shapes[wx] = (4 * c.enc_hidden, inp)
                shapes[wh] = (4 * c.enc_hidden, c.enc_hidden)
                shapes[b] = (4 * c.enc_hidden,)
            inp = 2 * c.enc_hidden
        h2 = 2 * c.enc_hidden
        shapes["W_att"] = (c.att_hidden, h2 + c.dec_hidden)
        shapes["b_att"] = (c.att_hidden,)
        shapes["U"] = (c.att_hidden,)
        dec_in = c.dec_hidden + 2 * h2
        if c.feed_prev_token:
            shapes["E_act"] = (len(TOKEN_KINDS), c.action_dim)
            shapes["E_label"] = (len(self.labels), c.label_dim)
            dec_in += c.action_dim + c.label_dim
        shapes["W_dec"] = (c.dec_hidden, dec_in)
        shapes["b_dec"] = (c.dec_hidden,)
        shapes["W_pred"] = (len(v), c.dec_hidden)
        shapes["b_pred"] = (len(v),)
        return shapes

    def check(self):
        shapes = self.expected_shapes()
        if set(shapes) != set(self.tensors):
            raise ValueError(f"tensor names differ: missing {sorted(set(shapes) - set(self.tensors))}, "
                             f"unexpected {sorted(set(self.tensors) - set(shapes))}")
        for name, shape in shapes.items():
            t = self.tensors[name]
            if t.shape != shape:
                raise ValueError(f"{name} has shape {t.shape}, expected {shape}")
            if not np.all(np.isfinite(t)):
                raise ValueError(f"{name} has non-finite entries")

    @classmethod
    def initialize(cls, config: Config, vocab: Vocabulary,
                   pretrained: dict[str, np.ndarray] | None = None) -> ModelParams:
        """Glorot-uniform weights, zero biases, seeded by ``config.seed``."""
        rng = np.random.default_rng(config.seed)
        shell = cls.__new__(cls)
        shell.config, shell.vocab, shell.scheme = config, vocab, Scheme(config.scheme)
        shell._token_tables()
        tensors = {}
        for name, shape in shell.expected_shapes().items():
            if len(shape) == 1:
                tensors[name] = np.zeros(shape)
            else:
                limit = np.sqrt(6.0 / (shape[0] + shape[1]))
                tensors[name] = rng.uniform(-limit, limit, size=shape)
        tensors["E_pre"] = pretrained_table(vocab, config.pretrained_dim, pretrained)
        return cls(config, vocab, tensors)

    def save(self, path) -> None:
        meta = {
            "format": "seqparse-checkpoint",
            "version": CHECKPOINT_VERSION,
            "config": self.config.to_dict(),
            "vocab": self.vocab.to_dict(),
            "shapes": {k: list(v.shape) for k, v in self.tensors.items()},
        }
        with open(path, "wb") as f:
            np.savez(f, __meta__=np.array(json.dumps(meta)), **self.tensors)

    @classmethod
    def load(cls, path) -> ModelParams:
        with np.load(path, allow_pickle=False) as data:
            meta = json.loads(str(data["__meta__"]))
            if meta.get("format") != "seqparse-checkpoint":
                raise ValueError(f"{path}: not a checkpoint")
            if meta["version"] != CHECKPOINT_VERSION:
                raise ValueError(f"{path}: unsupported checkpoint version {meta['version']}")
            tensors = {k: data[k].astype(np.float64) for k in data.files if k != "__meta__"}
        for k, shape in meta["shapes"].items():
            if list(tensors[k].shape) != shape:
                raise ValueError(f"{path}: tensor {k} does not match its header")
        return cls(Config.from_dict(meta["config"]), Vocabulary.from_dict(meta["vocab"]), tensors)


def pretrained_table(vocab: Vocabulary, dim: int,
                     vectors: dict[str, np.ndarray] | None) -> np.ndarray:
    """Rows aligned with ``vocab.words``; words without a vector get zeros."""
    table = np.zeros((len(vocab.words), dim))
    if vectors:
        for i, w in enumerate(vocab.words):
            v = vectors.get(w)
            if v is not None:
                if v.shape != (dim,):
                    raise ValueError(f"embedding for {w!r} has dimension {v.shape[0]}, expected {dim}")
                table[i] = v
    return table


def read_embeddings(path) -> dict[str, np.ndarray]:
    """Read ``word v1 ... vd`` lines."""
    vectors = {}
    dim = None
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            parts = line.split()
            if not parts:
                continue
            vec = np.array([float(x) for x in parts[1:]])
            if dim is None:
                dim = len(vec)
            elif len(vec) != dim:
                raise ValueError(f"{path}:{lineno}: expected {dim} values, found {len(vec)}")
            vectors[parts[0]] = vec
    return vectors


def write_embeddings(vectors: dict[str, np.ndarray], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for w, v in vectors.items():
            f.write(w + " " + " ".join(f"{x:.6f}" for x in v) + "\n")


def random_embeddings(words, dim: int = 100, seed: int = 0) -> dict[str, np.ndarray]:
    """Stand-in for a pretrained embedding file at desk scale."""
    rng = np.random.default_rng(seed)
    return {w: rng.normal(0.0, 1.0 / np.sqrt(dim), size=dim) for w in sorted(words)}
