"""Destabilizing perturbation construction and randomized falsification.

``destabilize`` builds an explicit admissible perturbation that makes the
closed loop singular whenever the matching robustness condition fails;
``falsify_random`` is the seeded sampling oracle used to cross-check both
outcomes. Perturbation classes: nonnegative scaling, unit rotation,
congruence pairs, unitary pairs.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla

from . import _kernels
from .errors import (
    ConditionHolds,
    ConstructionFallbackFailed,
    DimensionMismatch,
    TargetOutsideRange,
)
from .matcore import (
    DEFAULT_TOL,
    as_matrix,
    numerical_range_boundary,
    nr_witness,
    spectral_norm,
)
from .phase import classify_and_phases, phase_sum_condition

__all__ = [
    "Witness",
    "CLASSES",
    "destabilize",
    "falsify_random",
    "haar_unitary",
]

CLASSES = ("scaling", "rotation", "congruence", "unitary")


@dataclass
class Witness:
    """An admissible perturbation with its closed-loop determinant data."""

    kind: str
    relative_det: float
    closed_loop_det: float
    valid: bool
    method: str
    tau: Optional[float] = None
    theta: Optional[float] = None
    T: Optional[np.ndarray] = None
    S: Optional[np.ndarray] = None
    U: Optional[np.ndarray] = None
    V: Optional[np.ndarray] = None


def _loop_metrics(mat):
    # Hadamard denominator floored at 1 (the unperturbed identity loop):
    # a singular loop with a near-zero row would otherwise collapse the
    # bound to 0/0 and mask a perfect witness
    det = abs(np.linalg.det(mat))
    scale = max(float(np.prod(np.linalg.norm(mat, axis=1))), 1.0)
    return det / scale, det


def _closed_loop(a, b, kind, tau=None, theta=None, t=None, s=None, u=None, v=None):
    m = a.shape[0]
    eye = np.eye(m, dtype=np.complex128)
    if kind == "scaling":
        return eye + tau * (a @ b)
    if kind == "rotation":
        return eye + np.exp(1j * theta) * (a @ b)
    if kind == "congruence":
        return eye + (t.conj().T @ a @ t) @ (s.conj().T @ b @ s)
    if kind == "unitary":
        return eye + u @ a @ v @ b
    raise ValueError(f"unknown perturbation class {kind!r}")


def _finish(a, b, kind, tol, method, **params):
    mat = _closed_loop(a, b, kind, **{k.lower(): v for k, v in params.items()})
    rel, det = _loop_metrics(mat)
    return Witness(
        kind=kind,
        relative_det=rel,
        closed_loop_det=det,
        valid=bool(rel < tol.det_zero_rel),
        method=method,
        tau=params.get("tau"),
        theta=params.get("theta"),
        T=params.get("t"),
        S=params.get("s"),
        U=params.get("u"),
        V=params.get("v"),
    )


# ---------------------------------------------------------------------------
# scaling and rotation witnesses
# ---------------------------------------------------------------------------

def _destabilize_scaling(a, b, tol):
    ab = a @ b
    norm_ab = spectral_norm(ab)
    w = np.linalg.eigvals(ab)
    mask = (np.abs(w.imag) <= tol.psd_margin * norm_ab) & (w.real < -tol.psd_margin * norm_ab)
    if not np.any(mask):
        raise ConditionHolds("product spectrum avoids the negative real axis; scaling synthesis applies")
    lam = w[mask][np.argmin(w[mask].real)]
    tau = -1.0 / lam.real
    return _finish(a, b, "scaling", tol, "negative-real-eigenvalue", tau=tau)


def _destabilize_rotation(a, b, tol):
    ab = a @ b
    w = np.linalg.eigvals(ab)
    mask = np.abs(np.abs(w) - 1) <= max(tol.psd_margin, 1e-12)
    if not np.any(mask):
        raise ConditionHolds("product spectrum avoids the unit circle; gain synthesis applies")
    thetas = np.mod(np.pi - np.angle(w[mask]), 2 * np.pi)
    theta = float(np.min(thetas))
    return _finish(a, b, "rotation", tol, "unit-circle-eigenvalue", theta=theta)


# ---------------------------------------------------------------------------
# congruence witness
# ---------------------------------------------------------------------------

def _is_rotation_hermitian(a, tol):
    """True when some unit rotation of A is Hermitian."""
    scale = spectral_norm(a)
    best = np.inf
    for psi in np.linspace(0, np.pi, 181):
        m = np.exp(-1j * psi) * a
        best = min(best, np.linalg.norm(m - m.conj().T, "fro"))
    return best <= 1e-8 * scale


def _basis_extension(mat, x):
    """Invertible T with first column x and the rest orthogonal to mat @ x.

    Makes x*(mat)x an exposed eigenvalue of T* mat T (zero first column
    below the diagonal)."""
    w = mat @ x
    comp = sla.null_space(w.conj().reshape(1, -1))
    return np.hstack([x.reshape(-1, 1), comp])


def _ray_radii(nrb, ang, scale):
    """Radii where the ray at angle ang crosses the sampled boundary polygon.

    The polygon hull sits inside the numerical range, so any radius
    between two crossings (or below one, when the origin lies inside) is
    a certified target."""
    direction = np.exp(1j * ang)
    pts = nrb.points
    npts = len(pts)
    radii = []
    for i in range(npts):
        p = pts[i]
        q = pts[(i + 1) % npts]
        e = q - p
        det = direction.real * (-e.imag) - (-e.real) * direction.imag
        if abs(det) < 1e-14 * (abs(e) + 1):
            continue
        rhs_r = p.real
        rhs_i = p.imag
        r = (rhs_r * (-e.imag) - (-e.real) * rhs_i) / det
        w = (direction.real * rhs_i - rhs_r * direction.imag) / det
        if r >= -1e-12 * scale and -1e-9 <= w <= 1 + 1e-9:
            radii.append(max(r, 0.0))
    # vertices lying on the ray (degenerate hulls: segments, single points)
    vr = np.abs(pts)
    on_ray = np.abs(pts - vr * direction) <= 1e-9 * scale
    radii.extend(float(v) for v in vr[on_ray])
    return sorted(radii)


def _ray_targets(nrb, ang, scale, origin_inside):
    """Candidate target radii along a ray, interior of the certified span first."""
    radii = _ray_radii(nrb, ang, scale)
    if not radii:
        return []
    r_lo = 0.0 if origin_inside else radii[0]
    r_hi = radii[-1]
    if r_hi <= 1e-14 * scale:
        return []
    if r_hi - r_lo <= 1e-9 * scale:
        return [r_hi]
    pad = max(1e-6 * scale, 0.02 * (r_hi - r_lo))
    lo, hi = r_lo + pad, r_hi - pad
    if lo >= hi:
        return [(r_lo + r_hi) / 2, r_hi]
    out = [0.5 * (lo + hi), 0.25 * lo + 0.75 * hi, 0.75 * lo + 0.25 * hi, r_hi]
    return [r for r in out if r > 1e-14 * scale]


def _angle_interval(profile):
    if profile.sectorial.tag == "none":
        return -np.pi, np.pi
    return profile.phi_min, profile.phi_max


def _schur_align_congruence(a, b, pa, pb, tol):
    """General congruence witness: expose values on opposing rays and align Schur forms.

    Realizes x*Ax on a ray at angle alpha and y*By at pi - alpha (mod
    2*pi) as exposed eigenvalues of congruences, rescales the second so
    the product of the exposed eigenvalues is exactly -1, and aligns the
    triangular forms so the product matrix inherits that eigenvalue.
    """
    n = a.shape[0]
    scale_a = spectral_norm(a)
    scale_b = spectral_norm(b)
    lo_a, hi_a = _angle_interval(pa)
    lo_b, hi_b = _angle_interval(pb)
    nrb_a = numerical_range_boundary(a, tol=tol)
    nrb_b = numerical_range_boundary(b, tol=tol)

    k_lo = int(np.floor(((lo_a + lo_b) - np.pi) / (2 * np.pi))) - 1
    k_hi = int(np.ceil(((hi_a + hi_b) - np.pi) / (2 * np.pi))) + 1
    candidates = []
    for k in range(k_lo, k_hi + 1):
        lo = max(lo_a, np.pi + 2 * np.pi * k - hi_b)
        hi = min(hi_a, np.pi + 2 * np.pi * k - lo_b)
        if hi < lo - 1e-9:
            continue
        mid = (lo + hi) / 2
        for alpha in (mid, 0.25 * lo + 0.75 * hi, 0.75 * lo + 0.25 * hi, lo, hi):
            candidates.append((alpha, np.pi + 2 * np.pi * k - alpha))

    inside_a = nrb_a.origin == "interior"
    inside_b = nrb_b.origin == "interior"
    for alpha, beta in candidates:
        for ra in _ray_targets(nrb_a, alpha, scale_a, inside_a):
            for rb in _ray_targets(nrb_b, beta, scale_b, inside_b):
                try:
                    xa = nr_witness(a, ra * np.exp(1j * alpha), tol=tol)
                    xb = nr_witness(b, rb * np.exp(1j * beta), tol=tol)
                except TargetOutsideRange:
                    continue
                va = complex(xa.conj() @ a @ xa)
                vb = complex(xb.conj() @ b @ xb)
                if abs(va) < 1e-14 * scale_a or abs(vb) < 1e-14 * scale_b:
                    continue
                t0 = _basis_extension(a, xa)
                s0 = _basis_extension(b, xb) / np.sqrt(abs(va) * abs(vb))
                c = t0.conj().T @ a @ t0
                d = s0.conj().T @ b @ s0
                zc = np.eye(n, dtype=np.complex128)
                zd = np.eye(n, dtype=np.complex128)
                if n > 1:
                    _, z22c = sla.schur(c[1:, 1:], output="complex")
                    _, z22d = sla.schur(d[1:, 1:], output="complex")
                    zc[1:, 1:] = z22c
                    zd[1:, 1:] = z22d
                s_full = s0 @ (zd @ zc.conj().T)
                wit = _finish(a, b, "congruence", tol, "schur-alignment", t=t0, s=s_full)
                if wit.valid:
                    return wit
    return None


def _rotation_2x2(angle):
    return np.array(
        [[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]],
        dtype=np.complex128,
    )


def _complex_mixer_2x2(angle):
    return np.array(
        [[np.cos(angle), 1j * np.sin(angle)], [1j * np.sin(angle), np.cos(angle)]],
        dtype=np.complex128,
    )


def _congruence_templates(a, b, pa, pb, tol):
    """Closed-form 2x2 witnesses for half-plane pairs in normal form."""
    if a.shape[0] != 2:
        return None
    # arc-based spreads are only sqrt(psd_margin)-accurate at tangencies
    spread_a = None if pa.sectorial.tag == "none" else pa.phi_max - pa.phi_min
    spread_b = None if pb.sectorial.tag == "none" else pb.phi_max - pb.phi_min
    semi_a = pa.sectorial.tag == "semi_sectorial" and spread_a is not None and abs(spread_a - np.pi) < 5e-4
    semi_b = pb.sectorial.tag == "semi_sectorial" and spread_b is not None and abs(spread_b - np.pi) < 5e-4
    if not (semi_a and semi_b):
        return None
    rh_a = _is_rotation_hermitian(a, tol)
    rh_b = _is_rotation_hermitian(b, tol)
    eye = np.eye(2, dtype=np.complex128)
    if not rh_a and not rh_b:
        w = np.pi / 2 + (pa.center + pb.center) / 2
        wit = _finish(a, b, "congruence", tol, "paired-blocks", t=_rotation_2x2(w), s=eye)
        if wit.valid:
            return wit
    elif rh_a and rh_b:
        w = np.pi / 2 - (pa.phi_max + pb.phi_max) / 2
        wit = _finish(a, b, "congruence", tol, "rotation-hermitian-pair", t=_rotation_2x2(w), s=eye)
        if wit.valid:
            return wit
    else:
        if rh_b:
            w = (pa.center + pb.phi_max) / 2
            wit = _finish(a, b, "congruence", tol, "block-vs-rotation-hermitian", t=_complex_mixer_2x2(w), s=eye)
        else:
            w = (pb.center + pa.phi_max) / 2
            wit = _finish(a, b, "congruence", tol, "block-vs-rotation-hermitian", t=eye, s=_complex_mixer_2x2(w))
        if wit.valid:
            return wit
    return None


def _destabilize_congruence(a, b, tol, fallback_budget, seed):
    psr = phase_sum_condition(a, b, tol=tol)
    if psr.class_ok and psr.feasible:
        raise ConditionHolds("phase-sum condition holds; congruence synthesis applies")
    pa, pb = psr.profile_a, psr.profile_b
    wit = _congruence_templates(a, b, pa, pb, tol)
    if wit is not None:
        return wit
    wit = _schur_align_congruence(a, b, pa, pb, tol)
    if wit is not None:
        return wit
    best = falsify_random(a, b, "congruence", budget=fallback_budget, seed=seed, tol=tol,
                          early_exit=True)
    best.method = "random-fallback"
    if not best.valid:
        raise ConstructionFallbackFailed(best)
    return best


# ---------------------------------------------------------------------------
# unitary witness
# ---------------------------------------------------------------------------

def _destabilize_unitary(a, b, tol):
    m, n = a.shape
    wa, sa_raw, vah = np.linalg.svd(a)
    wb, sb_raw, vbh = np.linalg.svd(b)
    sa = np.concatenate([sa_raw, np.zeros(max(0, n - sa_raw.size))])
    sb = np.concatenate([sb_raw, np.zeros(max(0, m - sb_raw.size))])
    top = sa[0] * sb[0]
    bottom = sa[n - 1] * sb[m - 1] if n == m else 0.0
    if top < 1 or (n == m and bottom > 1):
        raise ConditionHolds("singular-value products avoid one; scaled-gain synthesis applies")

    # pairing: identity products; when A has more columns than rows, route its
    # zero singular value into the last slot
    perm = np.eye(n, dtype=np.complex128)
    if n > m:
        perm[:, [m - 1, n - 1]] = perm[:, [n - 1, m - 1]]
    sigma_a = np.zeros((m, n))
    sigma_a[: sa_raw.size, : sa_raw.size][np.diag_indices(min(m, n))] = sa_raw[: min(m, n)]
    sigma_b = np.zeros((n, m))
    sigma_b[: min(n, m), : min(n, m)][np.diag_indices(min(n, m))] = sb_raw[: min(n, m)]
    m0 = sigma_a @ perm @ sigma_b
    p = np.real(np.diag(m0)).copy()

    pairs = []
    for l in range(m - 1):
        if p[l] >= 1 >= p[l + 1]:
            pairs.append((l, l + 1, min(p[l] - 1, 1 - p[l + 1])))
    if p[0] >= 1 >= p[m - 1]:
        pairs.append((0, m - 1, min(p[0] - 1, 1 - p[m - 1])))
    if not pairs:
        raise ConstructionFallbackFailed(None, "no straddling singular-value pair found")
    i, j, _ = max(pairs, key=lambda t: t[2])
    s_a, s_b = p[i], p[j]
    t_val = np.sqrt(max(s_a**2 + s_b**2 - 1 - s_a**2 * s_b**2, 0.0))
    core = np.array([[-1.0, t_val], [0.0, -s_a * s_b]], dtype=np.complex128)
    u2, s2, v2h = np.linalg.svd(core)

    wt = np.eye(m, dtype=np.complex128)
    vt = np.eye(m, dtype=np.complex128)
    idx = np.ix_([i, j], [i, j])
    wt[idx] = u2
    vt[idx] = v2h.conj().T

    u = vbh.conj().T @ vt.conj().T @ wt @ wa.conj().T
    v = vah.conj().T @ perm @ wb.conj().T
    wit = _finish(a, b, "unitary", tol, "svd-core-alignment", u=u, v=v)
    wit.method = "svd-core-alignment"
    return wit


# ---------------------------------------------------------------------------
# public entry points
# ---------------------------------------------------------------------------

def destabilize(a, b, kind, tol=DEFAULT_TOL, fallback_budget=20000, seed=0):
    """Explicit destabilizing perturbation of the requested class.

    Raises ConditionHolds when the corresponding robustness condition is
    satisfied (the matching synthesis succeeds instead), and
    ConstructionFallbackFailed when even the randomized fallback cannot
    locate a singular loop.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    m, n = a.shape
    if b.shape != (n, m):
        raise DimensionMismatch(f"B must have shape {(n, m)}, got {b.shape}")
    if kind not in CLASSES:
        raise ValueError(f"unknown perturbation class {kind!r}")
    if kind == "scaling":
        return _destabilize_scaling(a, b, tol)
    if kind == "rotation":
        return _destabilize_rotation(a, b, tol)
    if kind == "congruence":
        if m != n:
            raise DimensionMismatch("congruence perturbations require square matrices")
        return _destabilize_congruence(a, b, tol, fallback_budget, seed)
    return _destabilize_unitary(a, b, tol)


def haar_unitary(n, rng, size=None):
    """Haar-distributed unitaries via QR with phase-normalized R diagonal."""
    shape = (n, n) if size is None else (size, n, n)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    phases = d / np.abs(d)
    return q * phases[..., None, :]


def _clip_condition(mats, cond_cap=1e4):
    u, s, vh = np.linalg.svd(mats)
    s = np.maximum(s, s[..., :1] / cond_cap)
    return (u * s[..., None, :]) @ vh


def _conditioned_invertible(rng, n, size, cond_cap=1e4):
    z = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / np.sqrt(2)
    return _clip_condition(z, cond_cap)


def _sample_batch(kind, a, b, ab, rng, size, m, n, include_identity):
    if kind == "scaling":
        taus = np.exp(rng.uniform(np.log(1e-4), np.log(1e4), size))
        if include_identity:
            taus[0] = 1.0
        return _kernels.scaling_ratios(ab, taus), [{"tau": float(t)} for t in taus]
    if kind == "rotation":
        thetas = rng.uniform(0, 2 * np.pi, size)
        if include_identity:
            thetas[0] = np.pi
        return _kernels.rotation_ratios(ab, np.exp(1j * thetas)), [{"theta": float(t)} for t in thetas]
    if kind == "congruence":
        ts = _conditioned_invertible(rng, n, size)
        ss = _conditioned_invertible(rng, n, size)
        if include_identity:
            ts[0] = np.eye(n)
            ss[0] = np.eye(n)
        return _kernels.congruence_ratios(a, b, ts, ss), [
            {"t": ts[i], "s": ss[i]} for i in range(size)
        ]
    us = haar_unitary(m, rng, size)
    vs = haar_unitary(n, rng, size)
    if include_identity:
        us[0] = np.eye(m)
        vs[0] = np.eye(n)
    return _kernels.unitary_ratios(a, b, us, vs), [{"u": us[i], "v": vs[i]} for i in range(size)]


def _unitary_step(base, step, rng):
    n = base.shape[0]
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    skew = (z - z.conj().T) / 2
    return base @ sla.expm(step * skew)


def _refine_batch(kind, incumbent, step, rng, size, a, b, ab, m, n):
    if kind == "scaling":
        taus = np.clip(incumbent["tau"] * np.exp(step * rng.standard_normal(size)), 1e-4, 1e4)
        return _kernels.scaling_ratios(ab, taus), [{"tau": float(t)} for t in taus]
    if kind == "rotation":
        thetas = np.mod(incumbent["theta"] + step * rng.standard_normal(size), 2 * np.pi)
        return _kernels.rotation_ratios(ab, np.exp(1j * thetas)), [{"theta": float(t)} for t in thetas]
    if kind == "congruence":
        t0, s0 = incumbent["t"], incumbent["s"]
        zt = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / np.sqrt(2)
        zs = (rng.standard_normal((size, n, n)) + 1j * rng.standard_normal((size, n, n))) / np.sqrt(2)
        ts = _clip_condition(t0[None] + step * np.linalg.norm(t0, "fro") / n * zt)
        ss = _clip_condition(s0[None] + step * np.linalg.norm(s0, "fro") / n * zs)
        return _kernels.congruence_ratios(a, b, ts, ss), [
            {"t": ts[i], "s": ss[i]} for i in range(size)
        ]
    us = np.stack([_unitary_step(incumbent["u"], step, rng) for _ in range(size)])
    vs = np.stack([_unitary_step(incumbent["v"], step, rng) for _ in range(size)])
    return _kernels.unitary_ratios(a, b, us, vs), [{"u": us[i], "v": vs[i]} for i in range(size)]


def falsify_random(a, b, kind, budget=20000, seed=0, tol=DEFAULT_TOL, early_exit=False):
    """Best destabilization candidate over seeded admissible perturbations.

    Half the budget goes to broad sampling (the identity perturbation is
    always the first candidate), half to local refinement around the
    incumbent. Deterministic given the seed; returns the candidate
    minimizing the relative closed-loop determinant (possibly invalid).
    With early_exit the search stops once a valid witness appears.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    m, n = a.shape
    if b.shape != (n, m):
        raise DimensionMismatch(f"B must have shape {(n, m)}, got {b.shape}")
    if kind == "congruence" and m != n:
        raise DimensionMismatch("congruence perturbations require square matrices")
    if kind not in CLASSES:
        raise ValueError(f"unknown perturbation class {kind!r}")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    rng = np.random.default_rng(seed)
    ab = a @ b
    best_val = np.inf
    best = None
    threshold = tol.det_zero_rel

    explore = max(budget // 2, 1)
    done = 0
    first = True
    while done < explore:
        size = min(2048, explore - done)
        ratios, params = _sample_batch(kind, a, b, ab, rng, size, m, n, first)
        first = False
        i = int(np.argmin(ratios))
        if ratios[i] < best_val:
            best_val = float(ratios[i])
            best = params[i]
        done += size
        if early_exit and best_val < threshold:
            break

    step = 0.3
    if not (early_exit and best_val < threshold):
        remaining = budget - done
        batch = 16
        while remaining > 0 and step > 1e-14:
            size = min(batch, remaining)
            ratios, params = _refine_batch(kind, best, step, rng, size, a, b, ab, m, n)
            i = int(np.argmin(ratios))
            if ratios[i] < best_val:
                best_val = float(ratios[i])
                best = params[i]
                step *= 0.9
            else:
                step *= 0.5
            remaining -= size
            if early_exit and best_val < threshold:
                break
    return _finish(a, b, kind, tol, "random", **best)
