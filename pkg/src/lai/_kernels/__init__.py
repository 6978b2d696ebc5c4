"""Numerical kernels: compiled Cython core with a pure NumPy fallback.

The backend is chosen once at import time.  ``LAI_BACKEND`` overrides the
default:

* ``auto`` (default): use the compiled core when built, else NumPy;
* ``compiled``: require the compiled core, raise if missing;
* ``python``: force the NumPy reference backend.
"""

import os

from . import _ref

_CHOICES = ("auto", "compiled", "python")


def get_backend(name):
    """Return the kernel module for ``name`` ('compiled' or 'python')."""
    if name == "python":
        return _ref
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        get_backend("compiled")
        names.insert(0, "compiled")
    except ImportError:
        pass
    return tuple(names)


def _select():
    requested = os.environ.get("LAI_BACKEND", "auto").strip().lower()
    if requested not in _CHOICES:
        raise ValueError(f"LAI_BACKEND must be one of {_CHOICES}, got {requested!r}")
    if requested == "python":
        return _ref, "python"
    try:
        return get_backend("compiled"), "compiled"
    except ImportError:
        if requested == "compiled":
            raise ImportError(
                "LAI_BACKEND=compiled but the lai._kernels._core extension is not built"
            ) from None
        return _ref, "python"


_impl, BACKEND = _select()

hmm_posterior = _impl.hmm_posterior
hmm_sample_paths = _impl.hmm_sample_paths
mlp_forward = _impl.mlp_forward
mlp_loss_grad = _impl.mlp_loss_grad
online_detect = _impl.online_detect
