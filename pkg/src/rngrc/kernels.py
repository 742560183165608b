"""Backend selection for the hot loops.

The compiled extension is used when it imports; otherwise the numpy twin in
``_pykernels`` takes over. Set ``RNGRC_BACKEND=python`` to force the fallback.
"""

import logging
import os

from rngrc import _pykernels

logger = logging.getLogger(__name__)

_FUNCS = ("ng_train", "rng_run", "rng_pretrain", "mackey_glass", "lorenz")


def _load():
    if os.environ.get("RNGRC_BACKEND", "").lower() == "python":
        return _pykernels, "python"
    try:
        from rngrc import _ckernels
    except ImportError:  # extension not built
        logger.info("compiled kernels unavailable, using numpy fallback")
        return _pykernels, "python"
    return _ckernels, "cython"


_impl, BACKEND = _load()

ng_train = _impl.ng_train
rng_run = _impl.rng_run
rng_pretrain = _impl.rng_pretrain
mackey_glass = _impl.mackey_glass
lorenz = _impl.lorenz


def get_backend(name):
    """Return the kernel module for ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from rngrc import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
