"""Sectorial classification, sectorial factorization, and matrix phases.

A matrix with the origin outside its numerical range factors as
A = T* D T with T invertible and D diagonal unitary; the angles of D are
the phases of A. The rank-deficient sharp-origin case reduces to a
sectorial core on the range, and matrices whose range sits in a closed
half-plane get extreme phases from the admissible rotation arc.
"""

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import NotSectorial, QsepError, ZeroMatrix
from .matcore import (
    DEFAULT_TOL,
    Tolerances,
    as_matrix,
    hermitian_part,
    numerical_range_boundary,
    numerical_rank,
    skew_part,
    spectral_norm,
)

__all__ = [
    "SectorialClass",
    "PhaseProfile",
    "SectorialFactorization",
    "PhaseSumResult",
    "classify_and_phases",
    "sectorial_factorize",
    "phase_sum_condition",
    "is_strictly_accretive",
    "is_accretive",
    "is_quasi_strictly_accretive",
]

_ANGLE_TOL = 1e-7  # classification boundary tolerance in radians
_PHASE_TOL = 1e-9  # strictness margin for phase-sum inequalities


@dataclass(frozen=True)
class SectorialClass:
    """Sectorial class tag plus the opening angle of the angular range."""

    tag: str  # 'sectorial' | 'quasi_sectorial' | 'semi_sectorial' | 'none'
    opening_angle: float


@dataclass(frozen=True)
class PhaseProfile:
    """Phases of a matrix together with its sectorial classification.

    phases are sorted nonincreasingly; phi_max/phi_min are the extreme
    phases; center is the rotation angle used during extraction. quality
    records whether interior phases are exact or best-effort.
    """

    sectorial: SectorialClass
    phases: Optional[np.ndarray]
    phi_max: Optional[float]
    phi_min: Optional[float]
    center: Optional[float]
    quality: str


@dataclass(frozen=True)
class SectorialFactorization:
    """A = T* D T with T invertible and D diagonal unitary."""

    T: np.ndarray
    D: np.ndarray
    residual: float


# ---------------------------------------------------------------------------
# rotation-arc machinery
# ---------------------------------------------------------------------------

def _min_eig_rot(a, theta):
    return float(np.linalg.eigvalsh(hermitian_part(np.exp(-1j * theta) * a))[0])


def _golden_max(f, lo, hi, iters=80):
    """Maximize f on [lo, hi] by golden-section (robust to kinks)."""
    invphi = (np.sqrt(5) - 1) / 2
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    for _ in range(iters):
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
    xm = (lo + hi) / 2
    return xm, f(xm)


def _bisect_edge(f, t_ok, t_bad, level, iters=60):
    """Boundary of {f >= level} between an admissible and an inadmissible angle."""
    for _ in range(iters):
        mid = (t_ok + t_bad) / 2
        if f(mid) >= level:
            t_ok = mid
        else:
            t_bad = mid
    return t_ok


def _find_arcs(a, nrb, tol):
    """Refined admissible rotation arcs {theta : min eig of Herm(e^{-j theta}A) >= -tol}.

    Returns a list of (lo, hi) with hi >= lo (hi - lo <= pi up to
    tolerance); empty when no rotation makes the matrix accretive.
    """
    scale = spectral_norm(a)
    level = -tol.psd_margin * scale
    angles = nrb.angles
    vals = nrb.min_eigs
    num = len(angles)
    step = 2 * np.pi / num
    mask = vals >= level

    def f(theta):
        return _min_eig_rot(a, theta)

    arcs = []
    if not mask.any():
        # the true arc may be narrower than the grid; refine near the best sample
        k = int(np.argmax(vals))
        th, fv = _golden_max(f, angles[k] - step, angles[k] + step)
        if fv >= level:
            arcs.append((th, th))
        return arcs
    if mask.all():
        # degenerate: numerically accretive in all directions (near-zero matrix)
        return [(0.0, np.pi)]

    # contiguous circular runs of admissible samples
    idx = np.flatnonzero(mask)
    breaks = np.flatnonzero(np.diff(idx) > 1)
    groups = np.split(idx, breaks + 1)
    if len(groups) > 1 and idx[0] == 0 and idx[-1] == num - 1:
        groups[0] = np.concatenate([groups[-1] - num, groups[0]])
        groups = groups[:-1]
    for g in groups:
        lo_idx, hi_idx = g[0], g[-1]
        lo_ok = lo_idx * step
        hi_ok = hi_idx * step
        lo = _bisect_edge(f, lo_ok, lo_ok - step, level)
        hi = _bisect_edge(f, hi_ok, hi_ok + step, level)
        arcs.append((lo, hi))
    return arcs


def _canonical_offset(s):
    """Joint 2*pi*k translate: phase-pair sum s + 4*pi*k placed in (-pi, pi] if possible.

    Falls back to the translate minimizing |s + 4*pi*k|, ties broken
    toward the positive representative.
    """
    k = int(np.floor((np.pi - s) / (4 * np.pi)))
    if s + 4 * np.pi * k > -np.pi + 1e-15:
        return k, True
    cands = [int(np.round(-s / (4 * np.pi))) + d for d in (-1, 0, 1)]
    best = min(cands, key=lambda kk: (abs(s + 4 * np.pi * kk), -(s + 4 * np.pi * kk)))
    return best, False


def _wrap_to(x, center):
    """Representative of x modulo 2*pi inside (center - pi, center + pi]."""
    return center + np.angle(np.exp(1j * (x - center)))


# ---------------------------------------------------------------------------
# sectorial factorization
# ---------------------------------------------------------------------------

def sectorial_factorize(a, tol=DEFAULT_TOL, rotation=None, num_angles=256):
    """Factor a sectorial A as T* D T with D diagonal unitary.

    Rotates A to strictly accretive form, congruences by the inverse
    square root of the Hermitian part (leaving a normal core I + skew),
    diagonalizes the core unitarily, and rotates back.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotSectorial("sectorial factorization requires a square matrix")
    scale = spectral_norm(a)
    if scale == 0:
        raise NotSectorial("zero matrix is not sectorial")
    if rotation is None:
        nrb = numerical_range_boundary(a, num_angles=num_angles, tol=tol)
        if nrb.origin != "outside":
            raise NotSectorial("origin is not outside the numerical range")
        arcs = _find_arcs(a, nrb, tol)
        if not arcs:
            raise NotSectorial("no rotation makes the matrix accretive")
        lo, hi = max(arcs, key=lambda ar: ar[1] - ar[0])
        rotation = (lo + hi) / 2
    b = np.exp(-1j * rotation) * a
    hvals, hvecs = np.linalg.eigh(hermitian_part(b))
    if hvals[0] <= tol.psd_margin * scale:
        raise NotSectorial("rotated matrix is not strictly accretive")
    hs = (hvecs * np.sqrt(hvals)) @ hvecs.conj().T
    hsi = (hvecs / np.sqrt(hvals)) @ hvecs.conj().T
    core = hsi @ skew_part(b) @ hsi
    mh = hermitian_part(core / 1j)
    mu, q = np.linalg.eigh(mh)
    lam = 1 + 1j * mu
    phases = rotation + np.arctan(mu)
    t0 = (np.sqrt(np.abs(lam))[:, None] * q.conj().T) @ hs
    d0 = np.exp(1j * phases)
    order = np.argsort(-phases, kind="stable")
    t = t0[order, :]
    d = np.diag(d0[order])
    residual = float(np.linalg.norm(t.conj().T @ d @ t - a, "fro") / np.linalg.norm(a, "fro"))
    if residual >= 1e-9:
        raise QsepError(f"sectorial factorization residual {residual:.3e} exceeds 1e-9")
    return SectorialFactorization(T=t, D=d, residual=residual)


def _factorization_phases(fact, rotation):
    """Unwrapped phases of the factorization's diagonal, centered at the rotation angle."""
    raw = np.angle(np.diag(fact.D))
    return np.sort(_wrap_to(raw, rotation))[::-1]


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

def classify_and_phases(a, tol=DEFAULT_TOL, num_angles=256):
    """Sectorial class, phases, and extreme phases of a nonzero square matrix.

    Sectorial matrices get exact phases from the factorization; the
    rank-deficient sharp-origin case reduces to the sectorial core on the
    range; half-plane cases take extremes from the admissible rotation
    arc with a best-effort interior list from the polar factor of the
    compression onto the range. Output is canonicalized so that
    phi_max + phi_min lies in (-pi, pi] whenever a joint 2*pi translate
    allows it.
    """
    a = as_matrix(a)
    if a.shape[0] != a.shape[1]:
        raise NotSectorial("classification requires a square matrix")
    n = a.shape[0]
    scale = spectral_norm(a)
    if scale == 0:
        raise ZeroMatrix("phases are undefined for the zero matrix")

    nrb = numerical_range_boundary(a, num_angles=num_angles, tol=tol)
    arcs = []
    if nrb.origin != "interior" or np.max(nrb.min_eigs) > -0.05 * scale:
        arcs = _find_arcs(a, nrb, tol)
    if not arcs:
        return PhaseProfile(
            sectorial=SectorialClass("none", 2 * np.pi),
            phases=None,
            phi_max=None,
            phi_min=None,
            center=None,
            quality="exact",
        )

    candidates = []
    for lo, hi in arcs:
        arc_len = min(max(hi - lo, 0.0), np.pi)
        center = (lo + hi) / 2
        opening = np.pi - arc_len
        s = 2 * center  # phi_max + phi_min for arc-based extremes
        k, in_band = _canonical_offset(s)
        candidates.append((in_band, -abs(center + 2 * np.pi * k), lo, hi, center, opening, k))
    candidates.sort(key=lambda c: (not c[0], -c[1]))
    _, _, lo, hi, center, opening, k_shift = candidates[0]

    rank = numerical_rank(a, tol)
    if nrb.origin == "outside":
        tag = "sectorial"
    elif opening < np.pi - _ANGLE_TOL and rank < n:
        tag = "quasi_sectorial"
    else:
        tag = "semi_sectorial"
        opening = min(opening, np.pi)

    quality = "exact"
    phases = None
    if tag == "sectorial":
        fact = sectorial_factorize(a, tol=tol, rotation=center, num_angles=num_angles)
        phases = _factorization_phases(fact, center)
    elif tag == "quasi_sectorial":
        u, sv, vh = np.linalg.svd(a)
        r = rank
        null_basis = vh[r:].conj().T
        range_basis = vh[:r].conj().T
        left_resid = np.linalg.norm(null_basis.conj().T @ a) if r < n else 0.0
        if left_resid > 10 * tol.rank_rel * sv[0] * n:
            warnings.warn("zero eigenvalue is not numerically normal; phases are best-effort")
            quality = "best_effort"
        atil = range_basis.conj().T @ a @ range_basis
        try:
            fact = sectorial_factorize(atil, tol=tol, num_angles=num_angles)
            rot = np.angle(np.diag(fact.D))
            ctr = _wrap_to(center, 0.0)
            phases = np.sort(_wrap_to(rot, ctr))[::-1]
        except (NotSectorial, QsepError):
            # the compressed core is not sectorial after all: the opening is
            # within arc tolerance of a half-plane, so classify weaker
            tag = "semi_sectorial"
            opening = min(opening, np.pi)
            quality = "arc_extremes_interior_best_effort"
            phases = _semi_interior_phases(a, center, rank, tol)
    else:
        quality = "arc_extremes_interior_best_effort"
        phases = _semi_interior_phases(a, center, rank, tol)

    if phases is not None and len(phases) >= 1:
        if tag in ("sectorial", "quasi_sectorial"):
            phi_max = float(phases[0])
            phi_min = float(phases[-1])
            opening = phi_max - phi_min
        else:
            phi_max = center + opening / 2
            phi_min = center - opening / 2
            phases = np.clip(phases, phi_min, phi_max)
            if len(phases) >= 2:
                phases = np.sort(phases)[::-1]
                phases[0] = phi_max
                phases[-1] = phi_min
            else:
                quality = "degenerate_interior"
    else:
        phi_max = phi_min = center

    s = phi_max + phi_min
    k_shift, _ = _canonical_offset(s)
    shift = 2 * np.pi * k_shift
    phases = phases + shift if phases is not None else None
    return PhaseProfile(
        sectorial=SectorialClass(tag, float(opening)),
        phases=phases,
        phi_max=float(phi_max + shift),
        phi_min=float(phi_min + shift),
        center=float(center + shift),
        quality=quality,
    )


def _semi_interior_phases(a, center, rank, tol):
    """Best-effort interior phase list from the polar factor of the rotated compression."""
    b = np.exp(-1j * center) * a
    n = b.shape[0]
    if rank < n:
        u, sv, vh = np.linalg.svd(b)
        w = u[:, :rank]
        c = w.conj().T @ b @ w
    else:
        c = b
    wc, sc, vch = np.linalg.svd(c)
    unitary = wc @ vch
    ang = np.angle(np.linalg.eigvals(unitary))
    return np.sort(center + ang)[::-1]


# ---------------------------------------------------------------------------
# phase-sum condition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PhaseSumResult:
    """Feasibility of the paired phase-sum condition with its 2*pi offset."""

    feasible: bool
    class_ok: bool
    quasi_side: Optional[str]  # 'a' or 'b'
    offset: int
    sum_hi: float
    sum_lo: float
    profile_a: PhaseProfile
    profile_b: PhaseProfile


def _is_quasi_inclusive(profile):
    return profile.sectorial.tag in ("sectorial", "quasi_sectorial")


def _is_semi_inclusive(profile):
    return profile.sectorial.tag != "none"


def phase_sum_condition(a, b, tol=DEFAULT_TOL, num_angles=256):
    """Check that one matrix is (quasi-)sectorial, the other at most half-plane,
    and that the extreme phase sums fit strictly inside (-pi, pi) for some
    integer 2*pi offset.

    With both spreads at most pi, at most one offset can work; it is
    computed from the center of the admissible interval.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise NotSectorial("phase sums require square matrices of equal size")
    pa = classify_and_phases(a, tol=tol, num_angles=num_angles)
    pb = classify_and_phases(b, tol=tol, num_angles=num_angles)

    if _is_quasi_inclusive(pa) and _is_semi_inclusive(pb):
        quasi_side = "a"
        class_ok = True
    elif _is_quasi_inclusive(pb) and _is_semi_inclusive(pa):
        quasi_side = "b"
        class_ok = True
    else:
        quasi_side = None
        class_ok = False

    if not class_ok:
        return PhaseSumResult(False, False, None, 0, np.nan, np.nan, pa, pb)

    sum_hi = pa.phi_max + pb.phi_max
    sum_lo = pa.phi_min + pb.phi_min
    m = int(np.round(-(sum_hi + sum_lo) / (4 * np.pi)))
    feasible = (sum_hi + 2 * np.pi * m < np.pi - _PHASE_TOL) and (
        sum_lo + 2 * np.pi * m > -np.pi + _PHASE_TOL
    )
    return PhaseSumResult(bool(feasible), True, quasi_side, m, sum_hi, sum_lo, pa, pb)


# ---------------------------------------------------------------------------
# accretivity predicates (class-inclusive)
# ---------------------------------------------------------------------------

def is_strictly_accretive(a, tol=DEFAULT_TOL):
    a = as_matrix(a)
    return float(np.linalg.eigvalsh(hermitian_part(a))[0]) > tol.psd_margin * spectral_norm(a)


def is_accretive(a, tol=DEFAULT_TOL):
    a = as_matrix(a)
    return float(np.linalg.eigvalsh(hermitian_part(a))[0]) >= -tol.psd_margin * spectral_norm(a)


def is_quasi_strictly_accretive(a, tol=DEFAULT_TOL):
    """Accretive with angular-range opening below pi (sectorial matrices included)."""
    if not is_accretive(a, tol):
        return False
    prof = classify_and_phases(a, tol=tol)
    return prof.sectorial.tag in ("sectorial", "quasi_sectorial")
