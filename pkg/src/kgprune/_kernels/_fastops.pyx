# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; semantics mirror slowops.py operation for operation.

Gradients are computed against pre-update parameters in a first pass and
applied in a second, so duplicate indices inside a batch behave exactly
like the numpy accumulate-then-apply path.
"""

from libc.math cimport fabs, sqrt

import numpy as np

NAME = "fast"


def transe_batch_step(double[:, ::1] ent, double[:, ::1] rel,
                      long long[::1] h, long long[::1] r, long long[::1] t,
                      long long[::1] nh, long long[::1] nt,
                      double margin, double lr, bint l1):
    cdef Py_ssize_t B = h.shape[0]
    cdef Py_ssize_t d = ent.shape[1]
    cdef Py_ssize_t i, j
    gpos_arr = np.empty((B, d), dtype=np.float64)
    gneg_arr = np.empty((B, d), dtype=np.float64)
    viol_arr = np.zeros(B, dtype=np.float64)
    cdef double[:, ::1] gpos = gpos_arr
    cdef double[:, ::1] gneg = gneg_arr
    cdef double[::1] viol = viol_arr
    cdef double spos, sneg, diff, hinge, loss = 0.0

    for i in range(B):
        spos = 0.0
        sneg = 0.0
        for j in range(d):
            diff = ent[h[i], j] + rel[r[i], j] - ent[t[i], j]
            gpos[i, j] = diff
            spos += fabs(diff) if l1 else diff * diff
            diff = ent[nh[i], j] + rel[r[i], j] - ent[nt[i], j]
            gneg[i, j] = diff
            sneg += fabs(diff) if l1 else diff * diff
        if not l1:
            spos = sqrt(spos)
            sneg = sqrt(sneg)
        hinge = margin + spos - sneg
        if hinge > 0.0:
            loss += hinge
            viol[i] = 1.0
            for j in range(d):
                if l1:
                    gpos[i, j] = (0.0 if gpos[i, j] == 0.0
                                  else (1.0 if gpos[i, j] > 0.0 else -1.0))
                    gneg[i, j] = (0.0 if gneg[i, j] == 0.0
                                  else (1.0 if gneg[i, j] > 0.0 else -1.0))
                else:
                    gpos[i, j] = gpos[i, j] / spos if spos > 0.0 else 0.0
                    gneg[i, j] = gneg[i, j] / sneg if sneg > 0.0 else 0.0

    if loss == 0.0:
        return 0.0
    for i in range(B):
        if viol[i] == 0.0:
            continue
        for j in range(d):
            ent[h[i], j] -= lr * gpos[i, j]
            ent[t[i], j] += lr * gpos[i, j]
            ent[nh[i], j] += lr * gneg[i, j]
            ent[nt[i], j] -= lr * gneg[i, j]
            rel[r[i], j] -= lr * (gpos[i, j] - gneg[i, j])
    return loss


def transe_loss_grads(double[:, ::1] ent, double[:, ::1] rel,
                      long long[::1] h, long long[::1] r, long long[::1] t,
                      long long[::1] nh, long long[::1] nt,
                      double margin, bint l1):
    cdef Py_ssize_t B = h.shape[0]
    cdef Py_ssize_t d = ent.shape[1]
    cdef Py_ssize_t i, j
    grad_ent_arr = np.zeros((ent.shape[0], d), dtype=np.float64)
    grad_rel_arr = np.zeros((rel.shape[0], d), dtype=np.float64)
    cdef double[:, ::1] grad_ent = grad_ent_arr
    cdef double[:, ::1] grad_rel = grad_rel_arr
    dpos_arr = np.empty(d, dtype=np.float64)
    dneg_arr = np.empty(d, dtype=np.float64)
    cdef double[::1] dpos = dpos_arr
    cdef double[::1] dneg = dneg_arr
    cdef double spos, sneg, gp, gn, loss = 0.0

    for i in range(B):
        spos = 0.0
        sneg = 0.0
        for j in range(d):
            dpos[j] = ent[h[i], j] + rel[r[i], j] - ent[t[i], j]
            dneg[j] = ent[nh[i], j] + rel[r[i], j] - ent[nt[i], j]
            spos += fabs(dpos[j]) if l1 else dpos[j] * dpos[j]
            sneg += fabs(dneg[j]) if l1 else dneg[j] * dneg[j]
        if not l1:
            spos = sqrt(spos)
            sneg = sqrt(sneg)
        if margin + spos - sneg <= 0.0:
            continue
        loss += margin + spos - sneg
        for j in range(d):
            if l1:
                gp = 0.0 if dpos[j] == 0.0 else (1.0 if dpos[j] > 0.0 else -1.0)
                gn = 0.0 if dneg[j] == 0.0 else (1.0 if dneg[j] > 0.0 else -1.0)
            else:
                gp = dpos[j] / spos if spos > 0.0 else 0.0
                gn = dneg[j] / sneg if sneg > 0.0 else 0.0
            grad_ent[h[i], j] += gp
            grad_ent[t[i], j] -= gp
            grad_ent[nh[i], j] -= gn
            grad_ent[nt[i], j] += gn
            grad_rel[r[i], j] += gp - gn
    return loss, grad_ent_arr, grad_rel_arr


def conv1_forward(double[:, :, ::1] x, double[:, ::1] w1, double[::1] b1):
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t H = x.shape[1]
    cdef Py_ssize_t d = x.shape[2]
    cdef Py_ssize_t n1 = w1.shape[0]
    cdef Py_ssize_t b, f, i, j
    out_arr = np.empty((B, n1, H, d - 1), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef double k0, k1, bias
    for f in range(n1):
        k0 = w1[f, 0]
        k1 = w1[f, 1]
        bias = b1[f]
        for b in range(B):
            for i in range(H):
                for j in range(d - 1):
                    out[b, f, i, j] = k0 * x[b, i, j] + k1 * x[b, i, j + 1] + bias
    return out_arr


def conv1_backward(double[:, :, ::1] x, double[:, :, :, ::1] dout):
    cdef Py_ssize_t B = x.shape[0]
    cdef Py_ssize_t H = x.shape[1]
    cdef Py_ssize_t d = x.shape[2]
    cdef Py_ssize_t n1 = dout.shape[1]
    cdef Py_ssize_t b, f, i, j
    dw1_arr = np.zeros((n1, 2), dtype=np.float64)
    db1_arr = np.zeros(n1, dtype=np.float64)
    cdef double[:, ::1] dw1 = dw1_arr
    cdef double[::1] db1 = db1_arr
    cdef double g
    for f in range(n1):
        for b in range(B):
            for i in range(H):
                for j in range(d - 1):
                    g = dout[b, f, i, j]
                    dw1[f, 0] += g * x[b, i, j]
                    dw1[f, 1] += g * x[b, i, j + 1]
                    db1[f] += g
    return dw1_arr, db1_arr


def conv2_forward(double[:, :, :, ::1] a1, double[:, :, :, ::1] w2, double[::1] b2):
    cdef Py_ssize_t B = a1.shape[0]
    cdef Py_ssize_t C = a1.shape[1]
    cdef Py_ssize_t H = a1.shape[2]
    cdef Py_ssize_t W = a1.shape[3]
    cdef Py_ssize_t n2 = w2.shape[0]
    cdef Py_ssize_t b, g, c, i, j
    out_arr = np.empty((B, n2, H - 1, W - 1), dtype=np.float64)
    cdef double[:, :, :, ::1] out = out_arr
    cdef double acc
    for b in range(B):
        for g in range(n2):
            for i in range(H - 1):
                for j in range(W - 1):
                    acc = b2[g]
                    for c in range(C):
                        acc += (w2[g, c, 0, 0] * a1[b, c, i, j]
                                + w2[g, c, 0, 1] * a1[b, c, i, j + 1]
                                + w2[g, c, 1, 0] * a1[b, c, i + 1, j]
                                + w2[g, c, 1, 1] * a1[b, c, i + 1, j + 1])
                    out[b, g, i, j] = acc
    return out_arr


def conv2_backward(double[:, :, :, ::1] a1, double[:, :, :, ::1] w2,
                   double[:, :, :, ::1] dout):
    cdef Py_ssize_t B = a1.shape[0]
    cdef Py_ssize_t C = a1.shape[1]
    cdef Py_ssize_t H = a1.shape[2]
    cdef Py_ssize_t W = a1.shape[3]
    cdef Py_ssize_t n2 = w2.shape[0]
    cdef Py_ssize_t b, g, c, i, j
    dw2_arr = np.zeros((n2, C, 2, 2), dtype=np.float64)
    db2_arr = np.zeros(n2, dtype=np.float64)
    da1_arr = np.zeros((B, C, H, W), dtype=np.float64)
    cdef double[:, :, :, ::1] dw2 = dw2_arr
    cdef double[::1] db2 = db2_arr
    cdef double[:, :, :, ::1] da1 = da1_arr
    cdef double gval
    for b in range(B):
        for g in range(n2):
            for i in range(H - 1):
                for j in range(W - 1):
                    gval = dout[b, g, i, j]
                    db2[g] += gval
                    for c in range(C):
                        dw2[g, c, 0, 0] += gval * a1[b, c, i, j]
                        dw2[g, c, 0, 1] += gval * a1[b, c, i, j + 1]
                        dw2[g, c, 1, 0] += gval * a1[b, c, i + 1, j]
                        dw2[g, c, 1, 1] += gval * a1[b, c, i + 1, j + 1]
                        da1[b, c, i, j] += gval * w2[g, c, 0, 0]
                        da1[b, c, i, j + 1] += gval * w2[g, c, 0, 1]
                        da1[b, c, i + 1, j] += gval * w2[g, c, 1, 0]
                        da1[b, c, i + 1, j + 1] += gval * w2[g, c, 1, 1]
    return dw2_arr, db2_arr, da1_arr
