"""Hot inner loops, compiled when possible.

``BACKEND`` is ``"cython"`` when the extension imported, else ``"python"``.
Set ``NEWSGATE_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

from . import _fallback

if os.environ.get("NEWSGATE_PURE_PYTHON", "") not in ("", "0"):
    _core = None
else:
    try:
        from . import _core
    except ImportError:
        _core = None

if _core is not None:
    BACKEND = "cython"
    smo_one_class = _core.smo_one_class
    pegasos_epoch = _core.pegasos_epoch
else:
    BACKEND = "python"
    smo_one_class = _fallback.smo_one_class
    pegasos_epoch = _fallback.pegasos_epoch

__all__ = ["BACKEND", "smo_one_class", "pegasos_epoch", "_fallback", "_core"]
