"""Pure-numpy implementations of the batched closed-loop determinant kernels.

Each kernel evaluates, for a batch of perturbations, the determinant of the
perturbed loop matrix relative to its Hadamard bound (product of row norms).
Values near zero flag a singular loop, i.e. a destabilizing perturbation.
"""

import numpy as np


def ratio_stack(mats):
    """Relative determinant |det(M)| / max(hadamard(M), 1) for a stack of square M.

    The Hadamard denominator is floored at 1 so loops with a near-zero
    row still register as singular."""
    mats = np.asarray(mats, dtype=np.complex128)
    dets = np.abs(np.linalg.det(mats))
    scales = np.maximum(np.prod(np.linalg.norm(mats, axis=2), axis=1), 1.0)
    return dets / scales


def scaling_ratios(ab, taus):
    """Relative determinants of I + tau * AB over a batch of scalings tau."""
    ab = np.asarray(ab, dtype=np.complex128)
    taus = np.asarray(taus, dtype=np.float64)
    eye = np.eye(ab.shape[0], dtype=np.complex128)
    mats = eye[None, :, :] + taus[:, None, None] * ab[None, :, :]
    return ratio_stack(mats)


def rotation_ratios(ab, zs):
    """Relative determinants of I + z * AB over a batch of unit-modulus z."""
    ab = np.asarray(ab, dtype=np.complex128)
    zs = np.asarray(zs, dtype=np.complex128)
    eye = np.eye(ab.shape[0], dtype=np.complex128)
    mats = eye[None, :, :] + zs[:, None, None] * ab[None, :, :]
    return ratio_stack(mats)


def congruence_ratios(a, b, ts, ss):
    """Relative determinants of I + (T*AT)(S*BS) over batches of T, S."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    ts = np.asarray(ts, dtype=np.complex128)
    ss = np.asarray(ss, dtype=np.complex128)
    tat = np.conj(np.transpose(ts, (0, 2, 1))) @ a @ ts
    sbs = np.conj(np.transpose(ss, (0, 2, 1))) @ b @ ss
    eye = np.eye(a.shape[0], dtype=np.complex128)
    return ratio_stack(eye[None, :, :] + tat @ sbs)


def unitary_ratios(a, b, us, vs):
    """Relative determinants of I + U A V B over batches of unitary U, V."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    us = np.asarray(us, dtype=np.complex128)
    vs = np.asarray(vs, dtype=np.complex128)
    eye = np.eye(a.shape[0], dtype=np.complex128)
    return ratio_stack(eye[None, :, :] + us @ a @ vs @ b)
