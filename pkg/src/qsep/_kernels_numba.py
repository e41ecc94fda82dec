"""Numba-jitted implementations of the batched determinant kernels.

Same contracts as ``_kernels_numpy``; the loop form fuses the perturbed-loop
construction, the determinant, and the Hadamard scale per sample, avoiding
the stacked temporaries of the vectorized path.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def _ratio_one(mat):
    # Hadamard denominator floored at 1; see the numpy backend
    scale = 1.0
    for i in range(mat.shape[0]):
        row = 0.0
        for j in range(mat.shape[1]):
            v = mat[i, j]
            row += v.real * v.real + v.imag * v.imag
        scale *= np.sqrt(row)
    if scale < 1.0:
        scale = 1.0
    return abs(np.linalg.det(mat)) / scale


@njit(cache=True)
def ratio_stack(mats):
    k = mats.shape[0]
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        out[i] = _ratio_one(mats[i])
    return out


@njit(cache=True)
def scaling_ratios(ab, taus):
    k = taus.shape[0]
    m = ab.shape[0]
    out = np.empty(k, dtype=np.float64)
    mat = np.empty((m, m), dtype=np.complex128)
    for i in range(k):
        for r in range(m):
            for c in range(m):
                mat[r, c] = taus[i] * ab[r, c]
            mat[r, r] += 1.0
        out[i] = _ratio_one(mat)
    return out


@njit(cache=True)
def rotation_ratios(ab, zs):
    k = zs.shape[0]
    m = ab.shape[0]
    out = np.empty(k, dtype=np.float64)
    mat = np.empty((m, m), dtype=np.complex128)
    for i in range(k):
        for r in range(m):
            for c in range(m):
                mat[r, c] = zs[i] * ab[r, c]
            mat[r, r] += 1.0
        out[i] = _ratio_one(mat)
    return out


@njit(cache=True)
def congruence_ratios(a, b, ts, ss):
    k = ts.shape[0]
    n = a.shape[0]
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        t = ts[i]
        s = ss[i]
        tat = np.conj(t.T) @ (a @ t)
        sbs = np.conj(s.T) @ (b @ s)
        mat = tat @ sbs
        for r in range(n):
            mat[r, r] += 1.0
        out[i] = _ratio_one(mat)
    return out


@njit(cache=True)
def unitary_ratios(a, b, us, vs):
    k = us.shape[0]
    m = a.shape[0]
    out = np.empty(k, dtype=np.float64)
    for i in range(k):
        mat = us[i] @ (a @ (vs[i] @ b))
        for r in range(m):
            mat[r, r] += 1.0
        out[i] = _ratio_one(mat)
    return out
