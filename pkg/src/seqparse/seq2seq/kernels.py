"""Decoder kernel backend, chosen at import.

The compiled extension is used when it was built; setting
``SEQPARSE_PURE_PYTHON=1`` forces the numpy fallback.
"""

import os

from . import _kernels_py

if os.environ.get("SEQPARSE_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = "python" if _impl is _kernels_py else "compiled"

scores = _impl.scores
score_at = _impl.score_at
weights = _impl.weights
attend_prob = _impl.attend_prob
attend_det = _impl.attend_det
decoder_out = _impl.decoder_out
adam_step = _impl.adam_step
lstm_recur = _impl.lstm_recur


def backends():
    """Available kernel modules by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels
        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
