"""Model and training configuration, read from ``key = value`` files."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, fields


class ConfigError(ValueError):
    pass


@dataclass
class Config:
    # network sizes (defaults reproduce the reference hyper-parameters)
    pretrained_dim: int = 100
    word_dim: int = 64
    pos_dim: int = 6
    label_dim: int = 20
    action_dim: int = 40
    enc_input_dim: int = 100
    enc_layers: int = 2
    enc_hidden: int = 200
    dec_layers: int = 1
    dec_hidden: int = 400
    att_hidden: int = 50
    # optimisation
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.9
    adam_eps: float = 1e-8
    l2: float = 1e-6
    epochs: int = 30
    seed: int = 1
    # model variants
    scheme: str = "inorder-sr-enriched"
    attention_mode: str = "prob"  # prob | det
    attention_norm: str = "segment"  # segment | global
    feed_prev_token: bool = False
    # data handling
    word_cutoff: int = 1
    unk_replace: float = 0.5
    embeddings: str = ""
    # decoding guards
    max_open_nts: int = 100
    max_unary: int = 8
    # early stopping on training-set token accuracy (0 disables)
    target_accuracy: float = 0.0
    eval_every: int = 1

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.attention_mode not in ("prob", "det"):
            raise ConfigError(f"attention_mode must be prob or det, got {self.attention_mode!r}")
        if self.attention_norm not in ("segment", "global"):
            raise ConfigError(f"attention_norm must be segment or global, got {self.attention_norm!r}")
        if self.dec_layers != 1:
            raise ConfigError("only a single decoder layer is supported")
        if self.enc_layers < 1:
            raise ConfigError("enc_layers must be >= 1")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type == "int" and f.name.endswith(("_dim", "_hidden")) and v < 1:
                raise ConfigError(f"{f.name} must be positive")

    def replace(self, **changes) -> Config:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> Config:
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})

    def dumps(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.to_dict().items())

    @classmethod
    def loads(cls, text: str, **overrides) -> Config:
        types = {f.name: f.type for f in fields(cls)}
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            key, value = key.strip(), value.strip()
            if not sep or key not in types:
                raise ConfigError(f"line {lineno}: unknown or malformed entry {line!r}")
            values[key] = _convert(value, types[key], key)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    @classmethod
    def load(cls, path, **overrides) -> Config:
        with open(path, encoding="utf-8") as f:
            return cls.loads(f.read(), **overrides)


def _convert(value: str, typ: str, key: str):
    try:
        if typ == "bool":
            if value.lower() in ("1", "true", "yes", "on"):
                return True
            if value.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(value)
        if typ == "int":
            return int(value)
        if typ == "float":
            return float(value)
    except ValueError:
        raise ConfigError(f"{key}: cannot read {value!r} as {typ}") from None
    return value
