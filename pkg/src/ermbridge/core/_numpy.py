"""Pure numpy implementation of the pairwise log-sum-exp kernels.

Signatures and semantics match the compiled module. Work is blocked over rows
so that no more than ``_BLOCK_ENTRIES`` logits are held at once.
"""

import numpy as np

_BLOCK_ENTRIES = 1 << 22


def _block_rows(m):
    return max(1, _BLOCK_ENTRIES // max(m, 1))


def _logits(Pb, Q, offset, inv2var):
    if Pb.shape[1] <= 4:
        sq = np.zeros((Pb.shape[0], Q.shape[0]))
        for k in range(Pb.shape[1]):
            sq += (Pb[:, k, None] - Q[None, :, k]) ** 2
        return offset[None, :] - sq * inv2var
    # expanded form; exact enough in high dimension where distances are large
    sq = (
        np.sum(Pb * Pb, axis=1)[:, None]
        + np.sum(Q * Q, axis=1)[None, :]
        - 2.0 * (Pb @ Q.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return offset[None, :] - sq * inv2var


def _lse(z):
    mx = np.max(z, axis=1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(divide="ignore"):
        out = safe + np.log(np.sum(np.exp(z - safe[:, None]), axis=1))
    return out, safe


def lse_rows(P, Q, offset, inv2var):
    """out[i] = log sum_j exp(-|P_i - Q_j|^2 * inv2var + offset[j])."""
    n, m = P.shape[0], Q.shape[0]
    out = np.empty(n)
    step = _block_rows(m)
    for s in range(0, n, step):
        out[s:s + step], _ = _lse(_logits(P[s:s + step], Q, offset, inv2var))
    return out


def softmax_apply_t(P, Q, offset, lse, coef, inv2var):
    """out[j] = sum_i coef[i] * exp(-|P_i - Q_j|^2 * inv2var + offset[j] - lse[i])."""
    n, m = P.shape[0], Q.shape[0]
    out = np.zeros(m)
    step = _block_rows(m)
    for s in range(0, n, step):
        z = _logits(P[s:s + step], Q, offset, inv2var) - lse[s:s + step, None]
        out += coef[s:s + step] @ np.exp(z)
    return out


def softmax_mean(P, Q, offset, inv2var):
    """Row log-sum-exp and softmax-weighted mean of ``Q`` for every row of ``P``."""
    n, m = P.shape[0], Q.shape[0]
    lse = np.empty(n)
    mean = np.empty((n, P.shape[1]))
    step = _block_rows(m)
    for s in range(0, n, step):
        z = _logits(P[s:s + step], Q, offset, inv2var)
        block_lse, _ = _lse(z)
        w = np.exp(z - block_lse[:, None])
        lse[s:s + step] = block_lse
        mean[s:s + step] = w @ Q
    return lse, mean
