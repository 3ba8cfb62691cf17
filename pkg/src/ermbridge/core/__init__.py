"""Hot pairwise kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; set ``ERMBRIDGE_PURE_PYTHON=1``
to force the numpy implementation. ``BACKEND`` names the active one. Above
``GEMM_MIN_DIM`` coordinates the numpy path is taken regardless, because its
distance expansion runs through BLAS and beats the compiled pairwise loops.
"""

import os

import numpy as np

from . import _numpy

_compiled = None
if os.environ.get("ERMBRIDGE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ext as _compiled
    except ImportError:  # extension not built
        _compiled = None

_impl = _compiled if _compiled is not None else _numpy
BACKEND = "cython" if _compiled is not None else "numpy"
GEMM_MIN_DIM = 16


def available_backends():
    """Mapping of backend name to implementation module."""
    out = {"numpy": _numpy}
    if _compiled is not None:
        out["cython"] = _compiled
    return out


def _pts(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def _pick(P):
    return _numpy if np.shape(P)[-1] > GEMM_MIN_DIM else _impl


def lse_rows(P, Q, offset, inv2var):
    """Row-wise ``log sum_j exp(-|P_i - Q_j|^2 * inv2var + offset_j)``."""
    return _pick(P).lse_rows(_pts(P), _pts(Q), _pts(offset), float(inv2var))


def softmax_apply_t(P, Q, offset, lse, coef, inv2var):
    """Transpose of the row softmax (normalised by ``lse``) applied to ``coef``."""
    return _pick(P).softmax_apply_t(_pts(P), _pts(Q), _pts(offset), _pts(lse),
                                 _pts(coef), float(inv2var))


def softmax_mean(P, Q, offset, inv2var):
    """``(lse, mean)``: row log-sum-exp and softmax-weighted mean of ``Q``."""
    return _pick(P).softmax_mean(_pts(P), _pts(Q), _pts(offset), float(inv2var))
