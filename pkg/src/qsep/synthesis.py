"""Constructive synthesis of structured separation multipliers.

One constructor per uncertainty class: phasal multipliers for scaling and
congruence robustness, gain multipliers for rotation robustness, and
sign-scaled gain multipliers for unitary robustness. Every result carries
a verified report; synthesis never returns an unverified certificate.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ClassViolated,
    DefectiveNonzeroEigenvalue,
    DefectiveZeroEigenvalue,
    DimensionMismatch,
    NoGainCertificate,
    PhaseSumViolated,
    QsepError,
    SpectrumOnNegativeRealAxis,
)
from .matcore import (
    DEFAULT_TOL,
    as_matrix,
    numerical_rank,
    principal_sqrt,
    spectral_norm,
    stein_split,
)
from .phase import (
    classify_and_phases,
    is_quasi_strictly_accretive,
    is_strictly_accretive,
    phase_sum_condition,
)
from .separation import Form, Multiplier, verify_multiplier

__all__ = [
    "SynthesisResult",
    "synth_phasal_scaling",
    "synth_phasal_congruence",
    "synth_gain_rotation",
    "synth_gain_unitary",
]


@dataclass
class SynthesisResult:
    """A structured multiplier plus its verified separation report."""

    multiplier: Multiplier
    form: Form
    epsilon: Optional[float]
    report: object
    construction_log: dict = field(default_factory=dict)
    extra_reports: dict = field(default_factory=dict)


def _assert_sound(report, what):
    if not report.passed:
        raise QsepError(
            f"{what} produced an unverified certificate "
            f"(margins {report.margin_a:.3e}, {report.margin_b:.3e})"
        )


def _square_pair(a, b):
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    if a.shape[0] != a.shape[1] or a.shape != b.shape:
        raise DimensionMismatch(f"expected equal square shapes, got {a.shape} and {b.shape}")
    return a, b


def _require_real(x, name):
    if np.max(np.abs(x.imag)) > 1e-12 * max(1.0, np.max(np.abs(x.real))):
        raise ValueError(f"real mode requires real {name}")


# ---------------------------------------------------------------------------
# phasal multiplier for scaling robustness
# ---------------------------------------------------------------------------

def synth_phasal_scaling(a, b, real_mode=False, tol=DEFAULT_TOL):
    """Zero-diagonal multiplier certifying the loop against all positive scalings.

    Builds H from the principal square root of AB: with the root
    diagonalized as X J X^-1 and D carrying the nonzero eigenvalues
    (ones elsewhere), H = A* X^-* D^-* X^-1. Fails exactly when AB has a
    strictly negative real eigenvalue or a defective zero eigenvalue.
    """
    a, b = _square_pair(a, b)
    n = a.shape[0]
    if real_mode:
        _require_real(a, "A")
        _require_real(b, "B")
    ab = a @ b
    norm_ab = spectral_norm(ab)
    w = np.linalg.eigvals(ab)
    neg = (np.abs(w.imag) <= tol.psd_margin * norm_ab) & (w.real < -tol.psd_margin * norm_ab)
    if np.any(neg):
        raise SpectrumOnNegativeRealAxis(w[neg][0])

    rank_ab = numerical_rank(ab, tol)
    if rank_ab < n:
        ab2 = ab @ ab
        s2 = np.linalg.svd(ab2, compute_uv=False)
        rank2 = 0 if s2[0] == 0 else int(np.sum(s2 > tol.rank_rel * s2[0]))
        if rank2 < rank_ab:
            raise DefectiveZeroEigenvalue(
                "zero eigenvalue of AB has a Jordan block; no phasal multiplier exists"
                if n != 2
                else "zero eigenvalue of AB has a Jordan block; existence is undecided for 2x2",
                decidable=(n != 2),
            )

    if norm_ab == 0:
        # AB = 0: any accretive H works; use the identity
        h = np.eye(n, dtype=np.complex128)
        root = np.zeros_like(ab)
        x = np.eye(n, dtype=np.complex128)
        d_vec = np.ones(n, dtype=np.complex128)
        cond_x = 1.0
    else:
        root = principal_sqrt(ab, tol)
        w_r, x = np.linalg.eig(root)
        cond_x = float(np.linalg.cond(x))
        if cond_x > tol.eig_cond_max:
            raise DefectiveNonzeroEigenvalue(
                f"eigenvector condition {cond_x:.3e} exceeds {tol.eig_cond_max:.3e}; "
                "a defective nonzero eigenvalue blocks the construction"
            )
        d_vec = w_r.copy()
        order = np.argsort(np.abs(w_r))
        d_vec[order[: n - rank_ab]] = 1.0
        xinv = np.linalg.inv(x)
        mid = xinv.conj().T @ np.diag(1 / d_vec.conj()) @ xinv
        h = a.conj().T @ mid

    if real_mode:
        imag_norm = np.linalg.norm(h.imag, "fro")
        if imag_norm > 1e-8 * max(np.linalg.norm(h, "fro"), 1.0):
            raise QsepError("real-mode construction produced a non-real H")
        h = h.real.astype(np.complex128)

    mult = Multiplier.phasal(h)
    probe = verify_multiplier(a, b, mult, Form.EPS_A, epsilon=None, tol=tol)
    eps = (probe.epsilon or 0.0) / 2
    report = verify_multiplier(a, b, mult, Form.EPS_A, epsilon=eps, tol=tol)
    _assert_sound(report, "phasal-scaling synthesis")

    log = {
        "sqrt": root,
        "X": x,
        "cond_X": cond_x,
        "D": d_vec,
        "H": h,
        "eps_max": probe.epsilon,
        "eps": eps,
        "rank_AB": rank_ab,
    }
    extra = {}
    if numerical_rank(a, tol) == n:
        strict = verify_multiplier(a, b, mult, Form.STRICT_A, tol=tol)
        _assert_sound(strict, "phasal-scaling strict certificate")
        extra[Form.STRICT_A] = strict
        ha = h @ a
        hb = h.conj().T @ b
        if not is_strictly_accretive(ha, tol):
            raise QsepError("HA lost strict accretivity despite invertible A")
        if not is_quasi_strictly_accretive(hb, tol):
            raise QsepError("H*B is not quasi-strictly accretive")
        log["HA_strictly_accretive"] = True
        log["HstarB_quasi_strictly_accretive"] = True

    return SynthesisResult(mult, Form.EPS_A, eps, report, log, extra)


# ---------------------------------------------------------------------------
# rotation multiplier for congruence robustness
# ---------------------------------------------------------------------------

def _wrap_gap(value, lo, hi, slack=1e-9):
    """Integer 2*pi shift placing value inside [lo - slack, hi + slack], or None."""
    for k in range(int(np.floor((lo - value) / (2 * np.pi))) - 1,
                   int(np.ceil((hi - value) / (2 * np.pi))) + 2):
        v = value + 2 * np.pi * k
        if lo - slack <= v <= hi + slack:
            return v
    return None


def synth_phasal_congruence(a, b, real_mode=False, tol=DEFAULT_TOL):
    """Scalar-rotation phasal multiplier certifying congruence robustness.

    Requires one matrix at most sharply singular with opening below pi
    and the other within a closed half-plane, with extreme phase sums
    strictly inside (-pi, pi) for the admissible integer offset. The
    rotation angle is the midpoint of the arc on which the rotated
    quasi-sectorial factor stays strictly inside the accretive cone and
    the other factor stays accretive.
    """
    a, b = _square_pair(a, b)
    n = a.shape[0]
    if real_mode:
        _require_real(a, "A")
        _require_real(b, "B")
    psr = phase_sum_condition(a, b, tol=tol)
    if not psr.class_ok:
        raise ClassViolated(
            f"classes ({psr.profile_a.sectorial.tag}, {psr.profile_b.sectorial.tag}) do not fit "
            "the quasi/semi pattern"
        )
    if not psr.feasible:
        raise PhaseSumViolated(
            psr.sum_hi,
            psr.sum_lo,
            psr.offset,
            hint="a destabilizing congruence pair exists; see adversary.destabilize",
        )
    pa, pb = psr.profile_a, psr.profile_b
    m_off = psr.offset
    two_pi_m = 2 * np.pi * m_off
    if psr.quasi_side == "a":
        lo = max(-np.pi / 2 - pa.phi_min, pb.phi_max - np.pi / 2 + two_pi_m)
        hi = min(np.pi / 2 - pa.phi_max, pb.phi_min + np.pi / 2 + two_pi_m)
        form = Form.EPS_A
        strict_form = Form.STRICT_A
        quasi_rank_full = numerical_rank(a, tol) == n
    else:
        lo = max(-np.pi / 2 - pa.phi_min, pb.phi_max - np.pi / 2 + two_pi_m)
        hi = min(np.pi / 2 - pa.phi_max, pb.phi_min + np.pi / 2 + two_pi_m)
        form = Form.EPS_B
        strict_form = Form.STRICT_B
        quasi_rank_full = numerical_rank(b, tol) == n

    alpha = (lo + hi) / 2
    if real_mode:
        choice = None
        for cand in (0.0, np.pi):
            v = _wrap_gap(cand, lo, hi)
            if v is not None:
                choice = v
                break
        alpha = choice if choice is not None else (0.0 if abs(np.angle(np.exp(1j * alpha))) < np.pi / 2 else np.pi)
        z = 1.0 if np.cos(alpha) > 0 else -1.0
    else:
        z = np.exp(1j * alpha)

    mult = Multiplier.rotation(z, n)
    probe = verify_multiplier(a, b, mult, form, epsilon=None, tol=tol)
    eps = (probe.epsilon or 0.0) / 2
    report = verify_multiplier(a, b, mult, form, epsilon=eps, tol=tol)
    _assert_sound(report, "phasal-congruence synthesis")

    log = {
        "z": complex(z),
        "alpha": float(alpha),
        "arc": (float(lo), float(hi)),
        "offset": m_off,
        "quasi_side": psr.quasi_side,
        "sum_hi": psr.sum_hi,
        "sum_lo": psr.sum_lo,
        "eps_max": probe.epsilon,
        "eps": eps,
    }
    extra = {}
    if quasi_rank_full:
        strict = verify_multiplier(a, b, mult, strict_form, tol=tol)
        _assert_sound(strict, "phasal-congruence strict certificate")
        extra[strict_form] = strict
    return SynthesisResult(mult, form, eps, report, log, extra)


# ---------------------------------------------------------------------------
# gain multiplier for rotation robustness
# ---------------------------------------------------------------------------

def synth_gain_rotation(a, b, tol=DEFAULT_TOL):
    """Diagonal-block multiplier certifying the loop against all rotations.

    The split-spectrum Stein solve on AB yields Hermitian M with
    M - (AB)* M (AB) positive definite; N = A*MA + eps I with eps sized
    from the Stein seed keeps both chained inequalities strict. Exists
    exactly when AB has no unit-modulus eigenvalue.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    m, n = a.shape
    if b.shape != (n, m):
        raise DimensionMismatch(f"B must have shape {(n, m)}, got {b.shape}")
    f = a @ b
    ss = stein_split(f, tol)
    ntil = a.conj().T @ ss.M @ a
    bnorm = spectral_norm(b)
    lam_q = float(np.linalg.eigvalsh(ss.Q)[0])
    eps = 0.5 * lam_q / bnorm**2 if bnorm > 0 else 0.5 * lam_q
    n_mat = ntil + eps * np.eye(n)
    mult = Multiplier.gain(n_mat, ss.M)
    report = verify_multiplier(a, b, mult, Form.STRICT_A, tol=tol)
    _assert_sound(report, "gain-rotation synthesis")
    log = {
        "M": ss.M,
        "N": n_mat,
        "Q": ss.Q,
        "stein_residual": ss.residual,
        "eps": eps,
        "lambda_min_Q": lam_q,
    }
    return SynthesisResult(mult, Form.STRICT_A, None, report, log)


# ---------------------------------------------------------------------------
# scaled-gain multiplier for unitary robustness
# ---------------------------------------------------------------------------

def _padded_singular_values(x, count):
    s = np.linalg.svd(x, compute_uv=False)
    if s.size < count:
        s = np.concatenate([s, np.zeros(count - s.size)])
    return s


def synth_gain_unitary(a, b, tol=DEFAULT_TOL):
    """Sign-scaled identity multiplier certifying unitary robustness.

    Small-gain branch: top singular products below one give xi = +1 with
    gamma placed at the interval midpoint; large-gain branch: bottom
    products above one give xi = -1. Outside both branches no such
    multiplier exists and a destabilizing unitary pair can be built.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    m, n = a.shape
    if b.shape != (n, m):
        raise DimensionMismatch(f"B must have shape {(n, m)}, got {b.shape}")
    sa = _padded_singular_values(a, n)
    sb = _padded_singular_values(b, m)
    log = {"sigma_A": sa, "sigma_B": sb}

    if sa[0] * sb[0] < 1:
        xi = 1
        upper = (1 / sa[0] ** 2 - sb[0] ** 2) if sa[0] > 0 else np.inf
        eps = min(upper / 2, sb[0] ** 2 + 1.0)
        gamma_sq = 1 / (sb[0] ** 2 + eps)
        log.update({"branch": "small_gain", "eps": eps})
    elif n == m and sa[-1] * sb[-1] > 1:
        xi = -1
        eps = (sb[-1] ** 2 - 1 / sa[-1] ** 2) / 2
        gamma_sq = 1 / (sb[-1] ** 2 - eps)
        log.update({"branch": "large_gain", "eps": eps})
    else:
        raise NoGainCertificate(
            f"singular-value products straddle one "
            f"(top {sa[0] * sb[0]:.6g}, bottom {sa[-1] * sb[-1] if n == m else 0:.6g}); "
            "a destabilizing unitary pair exists, see adversary.destabilize"
        )

    mult = Multiplier.scaled_gain(gamma_sq, xi, n, m)
    report = verify_multiplier(a, b, mult, Form.STRICT_A, tol=tol)
    _assert_sound(report, "scaled-gain synthesis")
    log.update({"gamma_sq": gamma_sq, "xi": xi})
    return SynthesisResult(mult, Form.STRICT_A, None, report, log)
