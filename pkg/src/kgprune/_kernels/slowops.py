"""Numpy implementations of the hot kernels.

Semantics are the contract for the compiled backend: the Cython module in
`_fastops.pyx` mirrors every function here operation for operation.  All
arrays are float64, C-contiguous; index arrays are int64.  Gradients are
accumulated against pre-update parameters, so a batch step is a plain
minibatch SGD step regardless of duplicate indices inside the batch.
"""

from __future__ import annotations

import numpy as np

NAME = "slow"


def _pair_distances(ent, rel, h, r, t, nh, nt, l1):
    dpos = ent[h] + rel[r] - ent[t]
    dneg = ent[nh] + rel[r] - ent[nt]
    if l1:
        spos = np.abs(dpos).sum(axis=1)
        sneg = np.abs(dneg).sum(axis=1)
    else:
        spos = np.sqrt((dpos * dpos).sum(axis=1))
        sneg = np.sqrt((dneg * dneg).sum(axis=1))
    return dpos, dneg, spos, sneg


def _distance_grads(dpos, dneg, spos, sneg, viol, l1):
    # Unit gradients of the distance terms, zeroed where the hinge is inactive
    # or the distance is exactly 0 (subgradient choice).
    if l1:
        gpos = np.sign(dpos)
        gneg = np.sign(dneg)
    else:
        with np.errstate(divide="ignore", invalid="ignore"):
            gpos = np.where(spos[:, None] > 0.0, dpos / np.where(spos == 0.0, 1.0, spos)[:, None], 0.0)
            gneg = np.where(sneg[:, None] > 0.0, dneg / np.where(sneg == 0.0, 1.0, sneg)[:, None], 0.0)
    gpos = gpos * viol[:, None]
    gneg = gneg * viol[:, None]
    return gpos, gneg


def transe_batch_step(ent, rel, h, r, t, nh, nt, margin, lr, l1):
    """One SGD step on margin ranking loss; updates ent/rel in place.

    Returns the summed hinge loss of the batch evaluated at the pre-update
    parameters.
    """
    dpos, dneg, spos, sneg = _pair_distances(ent, rel, h, r, t, nh, nt, l1)
    hinge = margin + spos - sneg
    viol = (hinge > 0.0).astype(np.float64)
    loss = float(np.where(hinge > 0.0, hinge, 0.0).sum())
    if loss == 0.0:
        return loss
    gpos, gneg = _distance_grads(dpos, dneg, spos, sneg, viol, l1)
    np.add.at(ent, h, -lr * gpos)
    np.add.at(ent, t, lr * gpos)
    np.add.at(ent, nh, lr * gneg)
    np.add.at(ent, nt, -lr * gneg)
    np.add.at(rel, r, -lr * (gpos - gneg))
    return loss


def transe_loss_grads(ent, rel, h, r, t, nh, nt, margin, l1):
    """Margin ranking loss and full analytic gradients (no update).

    Returns (loss, grad_ent, grad_rel) with gradient buffers shaped like
    ent/rel.  Used by the finite-difference checks.
    """
    dpos, dneg, spos, sneg = _pair_distances(ent, rel, h, r, t, nh, nt, l1)
    hinge = margin + spos - sneg
    viol = (hinge > 0.0).astype(np.float64)
    loss = float(np.where(hinge > 0.0, hinge, 0.0).sum())
    gpos, gneg = _distance_grads(dpos, dneg, spos, sneg, viol, l1)
    grad_ent = np.zeros_like(ent)
    grad_rel = np.zeros_like(rel)
    np.add.at(grad_ent, h, gpos)
    np.add.at(grad_ent, t, -gpos)
    np.add.at(grad_ent, nh, -gneg)
    np.add.at(grad_ent, nt, gneg)
    np.add.at(grad_rel, r, gpos - gneg)
    return loss, grad_ent, grad_rel


def conv1_forward(x, w1, b1):
    """First conv layer, pre-activation.

    x: (B, 4, d); w1: (n1, 2) kernels sliding along the embedding axis
    within each row; b1: (n1,).  Output: (B, n1, 4, d-1).
    """
    x0 = x[:, :, :-1]
    x1 = x[:, :, 1:]
    out = (
        x0[:, None, :, :] * w1[None, :, 0, None, None]
        + x1[:, None, :, :] * w1[None, :, 1, None, None]
        + b1[None, :, None, None]
    )
    return np.ascontiguousarray(out)


def conv1_backward(x, dout):
    """Gradients of conv1 parameters given dL/d(pre-activation)."""
    x0 = x[:, :, :-1]
    x1 = x[:, :, 1:]
    dw1 = np.stack(
        [np.einsum("bfij,bij->f", dout, x0), np.einsum("bfij,bij->f", dout, x1)],
        axis=1,
    )
    db1 = dout.sum(axis=(0, 2, 3))
    return dw1, db1


def conv2_forward(a1, w2, b2):
    """Second conv layer, pre-activation.

    a1: (B, n1, H, W); w2: (n2, n1, 2, 2) kernels mixing adjacent rows and
    columns across all input channels; b2: (n2,).
    Output: (B, n2, H-1, W-1).
    """
    out = (
        np.einsum("bcij,gc->bgij", a1[:, :, :-1, :-1], w2[:, :, 0, 0])
        + np.einsum("bcij,gc->bgij", a1[:, :, :-1, 1:], w2[:, :, 0, 1])
        + np.einsum("bcij,gc->bgij", a1[:, :, 1:, :-1], w2[:, :, 1, 0])
        + np.einsum("bcij,gc->bgij", a1[:, :, 1:, 1:], w2[:, :, 1, 1])
        + b2[None, :, None, None]
    )
    return np.ascontiguousarray(out)


def conv2_backward(a1, w2, dout):
    """Gradients of conv2 parameters and of its input."""
    dw2 = np.empty_like(w2)
    dw2[:, :, 0, 0] = np.einsum("bgij,bcij->gc", dout, a1[:, :, :-1, :-1])
    dw2[:, :, 0, 1] = np.einsum("bgij,bcij->gc", dout, a1[:, :, :-1, 1:])
    dw2[:, :, 1, 0] = np.einsum("bgij,bcij->gc", dout, a1[:, :, 1:, :-1])
    dw2[:, :, 1, 1] = np.einsum("bgij,bcij->gc", dout, a1[:, :, 1:, 1:])
    db2 = dout.sum(axis=(0, 2, 3))
    da1 = np.zeros_like(a1)
    da1[:, :, :-1, :-1] += np.einsum("bgij,gc->bcij", dout, w2[:, :, 0, 0])
    da1[:, :, :-1, 1:] += np.einsum("bgij,gc->bcij", dout, w2[:, :, 0, 1])
    da1[:, :, 1:, :-1] += np.einsum("bgij,gc->bcij", dout, w2[:, :, 1, 0])
    da1[:, :, 1:, 1:] += np.einsum("bgij,gc->bcij", dout, w2[:, :, 1, 1])
    return dw2, db2, da1
