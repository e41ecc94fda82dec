"""Dense complex linear-algebra substrate.

Decompositions, numerical-range machinery, accretivity tests, the
split-spectrum Stein solver, and numerical-range witness search used by
every other module. All operations are pure functions of their inputs.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DefectiveZeroEigenvalue,
    IllConditionedEigenvectors,
    NegativeRealEigenvalue,
    NonSquare,
    QsepError,
    TargetOutsideRange,
    UnitCircleEigenvalue,
)

__all__ = [
    "Tolerances",
    "DEFAULT_TOL",
    "AccretivityClass",
    "NumericalRange",
    "SteinSolution",
    "as_matrix",
    "spectral_norm",
    "hermitian_part",
    "skew_part",
    "numerical_rank",
    "accretivity_classify",
    "numerical_range_boundary",
    "principal_sqrt",
    "stein_split",
    "nr_witness",
]


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared across the package.

    psd_margin : relative eigenvalue threshold for definiteness decisions
    rank_rel : relative singular-value cutoff for numerical rank
    det_zero_rel : relative determinant-zero threshold
    eig_cond_max : cap on the eigenvector-matrix condition number
    """

    psd_margin: float = 1e-9
    rank_rel: float = 1e-8
    det_zero_rel: float = 1e-8
    eig_cond_max: float = 1e6

    def __post_init__(self):
        for name in ("psd_margin", "rank_rel", "det_zero_rel", "eig_cond_max"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.rank_rel >= 1:
            raise ValueError("rank_rel must be < 1")


DEFAULT_TOL = Tolerances()


def as_matrix(a, name="matrix"):
    """Validate and convert input to a 2-D complex128 array with finite entries."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must be a 2-D matrix with positive dimensions")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _square(a, name="matrix"):
    arr = as_matrix(a, name)
    if arr.shape[0] != arr.shape[1]:
        raise NonSquare(f"{name} must be square, got shape {arr.shape}")
    return arr


def spectral_norm(a):
    """Matrix 2-norm."""
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


def hermitian_part(a):
    return (a + a.conj().T) / 2


def skew_part(a):
    return (a - a.conj().T) / 2


def numerical_rank(a, tol=DEFAULT_TOL):
    """Rank by singular values above rank_rel times the largest one."""
    s = np.linalg.svd(np.asarray(a, dtype=np.complex128), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol.rank_rel * s[0]))


# ---------------------------------------------------------------------------
# accretivity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AccretivityClass:
    """Classification of A + A* definiteness.

    tag is one of 'strictly_accretive', 'quasi_strictly_accretive',
    'accretive', 'none'; margin is the smallest eigenvalue of the
    Hermitian part.
    """

    tag: str
    margin: float


def accretivity_classify(a, tol=DEFAULT_TOL):
    """Classify A by the eigenvalues of its Hermitian part.

    The quasi-strict tag is reported for accretive matrices whose
    numerical range has opening angle below pi with the origin a sharp
    boundary point (rank-deficient reduction applies).
    """
    a = _square(a)
    margin = float(np.linalg.eigvalsh(hermitian_part(a))[0])
    scale = spectral_norm(a)
    thr = tol.psd_margin * scale
    if margin > thr:
        return AccretivityClass("strictly_accretive", margin)
    if margin >= -thr:
        if scale > 0:
            from .phase import classify_and_phases

            prof = classify_and_phases(a, tol=tol)
            if prof.sectorial.tag == "quasi_sectorial":
                return AccretivityClass("quasi_strictly_accretive", margin)
        return AccretivityClass("accretive", margin)
    return AccretivityClass("none", margin)


# ---------------------------------------------------------------------------
# numerical range
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NumericalRange:
    """Sampled boundary of the numerical range W(A).

    For each angle theta the support value is the largest eigenvalue of
    the Hermitian part of exp(-j theta) A, the boundary point is the
    value x*Ax at a corresponding top eigenvector x, and min_eigs holds
    the smallest eigenvalue (support of -W in the opposite direction).
    """

    angles: np.ndarray
    points: np.ndarray
    supports: np.ndarray
    min_eigs: np.ndarray
    witnesses: np.ndarray  # shape (num_angles, n), row k witnesses points[k]
    origin: str  # 'outside' | 'boundary' | 'interior'
    support_tol: float


def numerical_range_boundary(a, num_angles=256, tol=DEFAULT_TOL):
    """Sample boundary points of W(A) and locate the origin.

    The origin tag is decided by support-function signs: 'outside' if
    some support value is below -tol, 'interior' if all are above +tol,
    'boundary' otherwise. Refining the grid can only move the tag toward
    'outside', never the reverse.
    """
    a = _square(a)
    if num_angles < 8:
        raise ValueError("num_angles must be at least 8")
    n = a.shape[0]
    scale = spectral_norm(a)
    support_tol = tol.psd_margin * scale
    angles = 2 * np.pi * np.arange(num_angles) / num_angles
    points = np.empty(num_angles, dtype=np.complex128)
    supports = np.empty(num_angles)
    min_eigs = np.empty(num_angles)
    witnesses = np.empty((num_angles, n), dtype=np.complex128)
    for k, th in enumerate(angles):
        hm = hermitian_part(np.exp(-1j * th) * a)
        vals, vecs = np.linalg.eigh(hm)
        supports[k] = vals[-1]
        min_eigs[k] = vals[0]
        x = vecs[:, -1]
        witnesses[k] = x
        points[k] = x.conj() @ a @ x
    if np.any(supports < -support_tol):
        origin = "outside"
    elif np.all(supports > support_tol):
        origin = "interior"
    else:
        origin = "boundary"
    return NumericalRange(angles, points, supports, min_eigs, witnesses, origin, support_tol)


# ---------------------------------------------------------------------------
# principal square root
# ---------------------------------------------------------------------------

def _eig_zero_cluster_size(moduli, target_rank):
    """Modulus cutoff separating the zero cluster of size n - target_rank."""
    srt = np.sort(moduli)[::-1]
    n = srt.size
    if target_rank >= n:
        return 0.0
    hi = srt[target_rank - 1] if target_rank > 0 else np.inf
    lo = srt[target_rank]
    if lo <= 0:
        return hi / 2 if np.isfinite(hi) else 1.0
    return float(np.sqrt(lo * hi)) if np.isfinite(hi) else 2 * lo


def principal_sqrt(m, tol=DEFAULT_TOL):
    """Principal matrix square root, allowing semi-simple zero eigenvalues.

    Requires the spectrum to avoid the strictly negative real axis and any
    zero eigenvalue to be semi-simple (rank(M) equals rank(M^2) at the
    rank_rel cutoff). The result has spectrum in the closed right
    half-plane, preserves zero eigenvalues with multiplicity, and
    satisfies ||S S - M||_F <= 1e-10 ||M||_F.
    """
    m = _square(m)
    n = m.shape[0]
    norm_m = spectral_norm(m)
    if norm_m == 0:
        return np.zeros_like(m)

    w = np.linalg.eigvals(m)
    neg_mask = (np.abs(w.imag) <= tol.psd_margin * norm_m) & (w.real < -tol.psd_margin * norm_m)
    if np.any(neg_mask):
        raise NegativeRealEigenvalue(w[neg_mask][0])

    s1 = np.linalg.svd(m, compute_uv=False)
    rank = int(np.sum(s1 > tol.rank_rel * s1[0]))
    real_input = np.allclose(m.imag, 0)
    work = m.real.copy() if real_input else m

    if rank == n:
        s = sla.sqrtm(work)
    else:
        m2 = m @ m
        s2 = np.linalg.svd(m2, compute_uv=False)
        rank2 = 0 if s2[0] == 0 else int(np.sum(s2 > tol.rank_rel * s2[0]))
        if rank2 < rank:
            raise DefectiveZeroEigenvalue(
                f"rank(M^2) = {rank2} < rank(M) = {rank}: zero eigenvalue has a Jordan block"
            )
        zcut = _eig_zero_cluster_size(np.abs(w), rank)
        if real_input:
            t, z, sdim = sla.schur(work, output="real",
                                   sort=lambda re, im: abs(complex(re, im)) > zcut)
        else:
            t, z, sdim = sla.schur(work, output="complex", sort=lambda lam: abs(lam) > zcut)
        if sdim != rank:
            # fall back to complex Schur with the same predicate
            t, z, sdim = sla.schur(m, output="complex", sort=lambda lam: abs(lam) > zcut)
            if sdim != rank:
                raise QsepError("could not isolate the zero eigenvalue cluster")
        r = sdim
        t11 = t[:r, :r]
        t12 = t[:r, r:]
        s11 = sla.sqrtm(t11) if r > 0 else t11
        inner = np.zeros(t.shape, dtype=np.result_type(t, s11))
        if r > 0:
            y = -np.linalg.solve(t11, t12)
            inner[:r, :r] = s11
            inner[:r, r:] = -s11 @ y
        s = z @ inner @ z.conj().T

    s = np.asarray(s, dtype=np.complex128)
    if real_input and np.allclose(s.imag, 0, atol=1e-12 * max(norm_m, 1)):
        s = s.real.astype(np.complex128)
    resid = np.linalg.norm(s @ s - m, "fro") / np.linalg.norm(m, "fro")
    if resid > 1e-10:
        raise QsepError(f"square-root residual {resid:.3e} exceeds 1e-10")
    return s


# ---------------------------------------------------------------------------
# Stein split solver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SteinSolution:
    """Hermitian M and positive-definite Q with M - F*MF = Q."""

    M: np.ndarray
    Q: np.ndarray
    residual: float


def stein_split(f, tol=DEFAULT_TOL):
    """Solve M - F*MF = Q > 0 by splitting the spectrum at the unit circle.

    The stable and antistable invariant subspaces get independent
    discrete-Lyapunov solves with identity seed weights; assembling them
    through the eigenvector matrix yields M with sign structure matching
    the split and Q = X^-* X^-1.
    """
    f = _square(f)
    n = f.shape[0]
    w, x = np.linalg.eig(f)
    on_circle = np.abs(np.abs(w) - 1) <= tol.psd_margin
    if np.any(on_circle):
        raise UnitCircleEigenvalue(w[on_circle][0])
    cond_x = np.linalg.cond(x)
    if cond_x > tol.eig_cond_max:
        raise IllConditionedEigenvectors(
            f"eigenvector condition number {cond_x:.3e} exceeds {tol.eig_cond_max:.3e}"
        )
    stable = np.abs(w) < 1
    perm = np.concatenate([np.flatnonzero(stable), np.flatnonzero(~stable)])
    k = int(np.sum(stable))
    xp = x[:, perm]
    wp = w[perm]
    hd = np.zeros((n, n), dtype=np.complex128)
    if k > 0:
        j1 = np.diag(wp[:k])
        hd[:k, :k] = sla.solve_discrete_lyapunov(j1.conj().T, np.eye(k))
    if k < n:
        g = np.diag(1 / wp[k:])
        ht = sla.solve_discrete_lyapunov(g.conj().T, np.eye(n - k))
        hd[k:, k:] = -g.conj().T @ ht @ g
    xinv = np.linalg.inv(xp)
    mm = xinv.conj().T @ hd @ xinv
    mm = hermitian_part(mm)
    q = xinv.conj().T @ xinv
    q = hermitian_part(q)
    residual = float(np.linalg.norm(mm - f.conj().T @ mm @ f - q, "fro") / np.linalg.norm(q, "fro"))
    if residual >= 1e-9:
        raise QsepError(f"Stein residual {residual:.3e} exceeds 1e-9")
    qmin = float(np.linalg.eigvalsh(q)[0])
    if qmin <= tol.psd_margin * spectral_norm(q):
        raise QsepError("Stein seed matrix Q lost positive definiteness")
    return SteinSolution(M=mm, Q=q, residual=residual)


# ---------------------------------------------------------------------------
# numerical-range witness
# ---------------------------------------------------------------------------

def _quad(a, x):
    return complex(x.conj() @ a @ x)


def _chord_witness(a, x1, x2, target, rtol):
    """Unit x with x*Ax near target, for target on the chord between the values at x1, x2.

    The second endpoint is re-phased so the transverse Hermitian form
    vanishes identically along the normalized interpolation path; the
    remaining longitudinal coordinate is then driven to zero by sign
    bisection.
    """
    v1 = _quad(a, x1)
    v2 = _quad(a, x2)
    d = v2 - v1
    scale = 1 + abs(target)
    if abs(d) <= rtol * scale:
        return x1 if abs(v1 - target) <= abs(v2 - target) else x2
    theta = np.angle(d)
    n = a.shape[0]
    b = np.exp(-1j * theta) * (a - target * np.eye(n))
    kk = (b - b.conj().T) / 2j  # Hermitian transverse form
    hh = (b + b.conj().T) / 2  # Hermitian longitudinal form
    c = complex(x1.conj() @ kk @ x2)
    if abs(c) > 1e-14 * max(1.0, spectral_norm(kk)):
        psi = np.pi / 2 - np.angle(c)
    else:
        psi = 0.0
    x2p = x2 * np.exp(1j * psi)
    # psi + pi keeps the transverse form zero too; use it to avoid an
    # antiparallel interpolation path
    if (x1.conj() @ x2p).real < 0:
        x2p = -x2p

    def path(t):
        y = (1 - t) * x1 + t * x2p
        return y / np.linalg.norm(y)

    def lon(t):
        y = path(t)
        return float((y.conj() @ hh @ y).real)

    t_lo, t_hi = 0.0, 1.0
    f_lo = lon(t_lo)
    f_hi = lon(t_hi)
    if f_lo > 0 and f_hi > 0:
        return x1 if abs(v1 - target) <= abs(v2 - target) else x2
    if f_lo > f_hi:
        t_lo, t_hi, f_lo, f_hi = t_hi, t_lo, f_hi, f_lo
    for _ in range(200):
        t_mid = (t_lo + t_hi) / 2
        f_mid = lon(t_mid)
        if abs(f_mid) <= rtol * scale:
            return path(t_mid)
        if f_mid < 0:
            t_lo = t_mid
        else:
            t_hi = t_mid
    return path((t_lo + t_hi) / 2)


def _ray_exit(points, target, direction):
    """Farthest crossing of the ray target + s*direction with the sampled polygon."""
    best = None
    npts = len(points)
    for i in range(npts):
        p = points[i]
        q = points[(i + 1) % npts]
        e = q - p
        # solve target + s*dir = p + w*e for real (s, w)
        mat = np.array([[direction.real, -e.real], [direction.imag, -e.imag]])
        rhs = np.array([(p - target).real, (p - target).imag])
        det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
        if abs(det) < 1e-14 * (abs(e) + 1) * (abs(direction) + 1):
            continue
        s, w = np.linalg.solve(mat, rhs)
        if s >= -1e-12 and -1e-9 <= w <= 1 + 1e-9:
            if best is None or s > best[0]:
                best = (s, i, min(max(w, 0.0), 1.0))
    return best


def nr_witness(a, target, tol=DEFAULT_TOL, num_angles=256):
    """Unit vector x with |x*Ax - target| < 1e-8 (1 + |target|).

    Locates boundary witnesses bracketing the target, reduces to chords
    through the target, and bisects on each chord. Raises
    TargetOutsideRange when the support functions exclude the target.
    """
    a = _square(a)
    target = complex(target)
    nrb = numerical_range_boundary(a, num_angles=num_angles, tol=tol)
    scale = 1 + abs(target)
    out_tol = max(nrb.support_tol, 1e-12 * scale)
    proj = np.cos(nrb.angles) * target.real + np.sin(nrb.angles) * target.imag
    if np.any(proj > nrb.supports + out_tol + 1e-8 * scale):
        raise TargetOutsideRange(f"target {target} lies outside the sampled numerical range")

    rtol = 1e-10
    # direct hit
    dists = np.abs(nrb.points - target)
    hit = int(np.argmin(dists))
    if dists[hit] <= 1e-9 * scale:
        return nrb.witnesses[hit]

    # chord through two sampled boundary points
    pts = nrb.points
    npts = len(pts)
    seg_best = None
    for i in range(npts):
        d = pts - pts[i]
        tproj = np.zeros(npts)
        denom = np.abs(d) ** 2
        ok = denom > 0
        tproj[ok] = ((target - pts[i]).real * d[ok].real + (target - pts[i]).imag * d[ok].imag) / denom[ok]
        tproj = np.clip(tproj, 0, 1)
        foot = pts[i] + tproj * d
        dist = np.abs(foot - target)
        dist[~ok] = np.inf
        j = int(np.argmin(dist))
        if dist[j] <= 1e-9 * scale:
            seg_best = (i, j)
            break
    if seg_best is not None:
        i, j = seg_best
        return _chord_witness(a, nrb.witnesses[i], nrb.witnesses[j], target, rtol)

    # general position: far vertex, exit edge on the opposite side
    order = np.argsort(-np.abs(pts - target))
    for i0 in order[:8]:
        p0 = pts[i0]
        if abs(p0 - target) <= 1e-12 * scale:
            continue
        direction = (target - p0) / abs(target - p0)
        crossing = _ray_exit(pts, target, direction)
        if crossing is None:
            continue
        s, edge, wfrac = crossing
        mpt = pts[edge] * (1 - wfrac) + pts[(edge + 1) % npts] * wfrac
        ym = _chord_witness(a, nrb.witnesses[edge], nrb.witnesses[(edge + 1) % npts], mpt, rtol)
        x = _chord_witness(a, nrb.witnesses[i0], ym, target, rtol)
        if abs(_quad(a, x) - target) < 1e-8 * scale:
            return x / np.linalg.norm(x)
    raise TargetOutsideRange(
        f"no witness found for target {target}; it may lie outside or on a degenerate part of W(A)"
    )
