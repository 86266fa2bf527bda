"""Kernel backend selection.

At import time the compiled extension (`strokehmm._kernels`) is preferred;
if it was not built, the pure-NumPy module is used instead. Both expose
the same four functions. `use()` switches backends explicitly, which the
benchmark and the cross-backend tests rely on.
"""

from . import _kernels_py

_BACKENDS = {"python": _kernels_py}

try:
    from . import _kernels as _compiled

    _BACKENDS["cython"] = _compiled
    _DEFAULT = "cython"
except ImportError:
    _DEFAULT = "python"

_active_name = _DEFAULT
_active = _BACKENDS[_active_name]


def available_backends():
    return sorted(_BACKENDS)


def active_backend():
    """Name of the backend currently answering kernel calls."""
    return _active_name


def use(name):
    """Select a backend by name ('cython' or 'python')."""
    global _active, _active_name
    if name not in _BACKENDS:
        raise ValueError(
            f"unknown backend {name!r}; available: {available_backends()}"
        )
    _active_name = name
    _active = _BACKENDS[name]


def mixture_log_pdf(obs, means, variances, log_weights):
    return _active.mixture_log_pdf(obs, means, variances, log_weights)


def forward(log_prior, log_trans, log_b):
    return _active.forward(log_prior, log_trans, log_b)


def backward(log_trans, log_b):
    return _active.backward(log_trans, log_b)


def viterbi(log_prior, log_trans, log_b):
    return _active.viterbi(log_prior, log_trans, log_b)
