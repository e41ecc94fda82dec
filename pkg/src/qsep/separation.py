"""Multiplier data model and quadratic graph-separation checks.

A Hermitian multiplier P of size (n+m) separates the graph of -A from the
inverse graph of B when the two quadratic forms

    L_A = (I, -A*) P (I; -A)   and   L_B = (B*, I) P (B; I)

carry opposite signs. Four sign patterns are supported; they form a cycle
of implications realized by ``convert_form``.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from .errors import (
    ConversionFailsVerification,
    DimensionMismatch,
    NotVerifiedForSource,
    UnknownForm,
)
from .matcore import DEFAULT_TOL, as_matrix, hermitian_part, spectral_norm

__all__ = [
    "Form",
    "Multiplier",
    "SeparationReport",
    "GraphSepResult",
    "graph_sep_check",
    "verify_multiplier",
    "convert_form",
    "max_feasible_eps",
]


class Form(str, Enum):
    """Sign patterns of the two separation inequalities.

    STRICT_A : L_A < 0 (strict), L_B >= 0
    EPS_A    : L_A <= -eps A*A,  L_B >= 0
    STRICT_B : L_A <= 0,         L_B > 0 (strict)
    EPS_B    : L_A <= 0,         L_B >= eps B*B
    """

    STRICT_A = "strict_a"
    EPS_A = "eps_a"
    STRICT_B = "strict_b"
    EPS_B = "eps_b"


_EPS_FORMS = {Form.EPS_A, Form.EPS_B}


@dataclass(frozen=True)
class Multiplier:
    """Hermitian block multiplier with a structure tag.

    block_dims = (n, m) with the leading block of size n. Structured
    constructors enforce their block patterns exactly.
    """

    P: np.ndarray
    block_dims: tuple
    structure: str = "general"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = as_matrix(self.P, "P")
        n, m = self.block_dims
        if p.shape != (n + m, n + m):
            raise DimensionMismatch(f"P has shape {p.shape}, expected {(n + m, n + m)}")
        nrm = np.linalg.norm(p, "fro")
        if nrm > 0 and np.linalg.norm(p - p.conj().T, "fro") >= 1e-12 * nrm:
            raise ValueError("multiplier must be Hermitian")
        object.__setattr__(self, "P", hermitian_part(p))

    @staticmethod
    def general(p, n, m):
        return Multiplier(np.asarray(p, dtype=np.complex128), (n, m), "general")

    @staticmethod
    def phasal(h):
        h = as_matrix(h, "H")
        n, m = h.shape
        p = np.zeros((n + m, n + m), dtype=np.complex128)
        p[:n, n:] = h
        p[n:, :n] = h.conj().T
        return Multiplier(p, (n, m), "phasal", {"H": h})

    @staticmethod
    def rotation(z, n, m=None):
        z = complex(z)
        if abs(abs(z) - 1) > 1e-12:
            raise ValueError("rotation parameter must have unit modulus")
        m = n if m is None else m
        h = z * np.eye(n, m, dtype=np.complex128)
        mult = Multiplier.phasal(h)
        return Multiplier(mult.P, (n, m), "rotation", {"z": z})

    @staticmethod
    def gain(n_mat, m_mat):
        n_mat = as_matrix(n_mat, "N")
        m_mat = as_matrix(m_mat, "M")
        n = n_mat.shape[0]
        m = m_mat.shape[0]
        if n_mat.shape != (n, n) or m_mat.shape != (m, m):
            raise DimensionMismatch("gain blocks must be square")
        p = np.zeros((n + m, n + m), dtype=np.complex128)
        p[:n, :n] = -hermitian_part(n_mat)
        p[n:, n:] = hermitian_part(m_mat)
        return Multiplier(p, (n, m), "gain", {"N": hermitian_part(n_mat), "M": hermitian_part(m_mat)})

    @staticmethod
    def scaled_gain(gamma_sq, xi, n, m):
        if xi not in (-1, 1):
            raise ValueError("xi must be -1 or +1")
        if gamma_sq <= 0:
            raise ValueError("gamma_sq must be positive")
        p = np.zeros((n + m, n + m), dtype=np.complex128)
        p[:n, :n] = -xi * gamma_sq * np.eye(n)
        p[n:, n:] = xi * np.eye(m)
        return Multiplier(p, (n, m), "scaled_gain", {"gamma_sq": float(gamma_sq), "xi": int(xi)})

    @property
    def p11(self):
        n = self.block_dims[0]
        return self.P[:n, :n]

    @property
    def p22(self):
        n = self.block_dims[0]
        return self.P[n:, n:]


@dataclass(frozen=True)
class SeparationReport:
    """Verification outcome of one separation form.

    margin_a/margin_b are the smallest eigenvalues of the two slack
    matrices (the quantities required nonnegative or strictly positive);
    eigs_a/eigs_b list all slack eigenvalues.
    """

    form: Form
    margin_a: float
    margin_b: float
    eigs_a: np.ndarray
    eigs_b: np.ndarray
    scale_a: float
    scale_b: float
    epsilon: Optional[float]
    passed_a: bool
    passed_b: bool

    @property
    def passed(self):
        return self.passed_a and self.passed_b


# ---------------------------------------------------------------------------
# graph separation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GraphSepResult:
    separated: bool
    det: complex
    relative_det: float
    hadamard_scale: float
    block_rank_full: bool


def _hadamard_scale(m):
    # floored at 1, the Hadamard scale of the unperturbed identity loop
    return max(float(np.prod(np.linalg.norm(m, axis=1))), 1.0)


def graph_sep_check(a, b, tol=DEFAULT_TOL):
    """Decide whether the graph of -A and the inverse graph of B only meet at 0.

    Separation holds iff det(I + AB) is nonzero relative to its Hadamard
    bound; the stacked block-matrix rank gives an independent restatement
    and is reported alongside.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    m, n = a.shape
    if b.shape != (n, m):
        raise DimensionMismatch(f"B must have shape {(n, m)}, got {b.shape}")
    loop = np.eye(m, dtype=np.complex128) + a @ b
    det = complex(np.linalg.det(loop))
    scale = _hadamard_scale(loop)
    rel = abs(det) / scale
    separated = rel > tol.det_zero_rel
    block = np.block([
        [np.eye(n, dtype=np.complex128), -b],
        [a, np.eye(m, dtype=np.complex128)],
    ])
    sv = np.linalg.svd(block, compute_uv=False)
    block_full = bool(sv[-1] > tol.rank_rel * sv[0])
    return GraphSepResult(separated, det, rel, scale, block_full)


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

def _forms(a, b, mult):
    n, m = mult.block_dims
    if a.shape != (m, n):
        raise DimensionMismatch(f"A must have shape {(m, n)} for these block dims, got {a.shape}")
    if b.shape != (n, m):
        raise DimensionMismatch(f"B must have shape {(n, m)}, got {b.shape}")
    x = np.vstack([np.eye(n, dtype=np.complex128), -a])
    y = np.vstack([b, np.eye(m, dtype=np.complex128)])
    la = hermitian_part(x.conj().T @ mult.P @ x)
    lb = hermitian_part(y.conj().T @ mult.P @ y)
    return la, lb


def max_feasible_eps(s0, w, tol=DEFAULT_TOL):
    """Largest eps with S0 - eps*W >= 0 for Hermitian S0 >= 0 and W >= 0.

    Returns 0 when the range of W escapes the range of S0, and a large
    cap when W vanishes.
    """
    s0 = hermitian_part(as_matrix(s0))
    w = hermitian_part(as_matrix(w))
    wnorm = spectral_norm(w)
    cap = 1.0 / tol.psd_margin
    if wnorm <= tol.psd_margin * max(spectral_norm(s0), 1.0):
        return cap
    vals, vecs = np.linalg.eigh(s0)
    cut = tol.psd_margin * max(vals[-1], 0) if vals[-1] > 0 else 0.0
    keep = vals > cut
    if not np.any(keep):
        return 0.0
    vr = vecs[:, keep]
    proj = vr @ vr.conj().T
    if np.linalg.norm(w - proj @ w @ proj, "fro") > np.sqrt(tol.psd_margin) * wnorm:
        return 0.0
    pinv_half = vr / np.sqrt(vals[keep])
    wt = pinv_half.conj().T @ w @ pinv_half
    lam = float(np.linalg.eigvalsh(hermitian_part(wt))[-1])
    if lam <= 0:
        return cap
    return min(1.0 / lam, cap)


def verify_multiplier(a, b, mult, form, epsilon=None, tol=DEFAULT_TOL):
    """Evaluate both separation inequalities for the requested form.

    Strict passes need a margin above psd_margin times the slack norm;
    weak passes tolerate -psd_margin times the slack norm. For the
    eps-forms with no epsilon supplied, the largest feasible value is
    computed as a generalized-eigenvalue ratio and reported.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    form = Form(form)
    la, lb = _forms(a, b, mult)

    # tolerance scales come from the constituent quadratic forms, not the
    # slack difference, which can be exactly tight (near-zero norm)
    eps = epsilon
    if form is Form.EPS_A:
        ata = a.conj().T @ a
        if eps is None:
            eps = max_feasible_eps(-la, ata, tol)
        slack_a = -la - eps * ata
        slack_b = lb
        scale_a = max(spectral_norm(la), eps * spectral_norm(ata))
        scale_b = spectral_norm(lb)
        strict_a = strict_b = False
    elif form is Form.EPS_B:
        btb = b.conj().T @ b
        if eps is None:
            eps = max_feasible_eps(lb, btb, tol)
        slack_a = -la
        slack_b = lb - eps * btb
        scale_a = spectral_norm(la)
        scale_b = max(spectral_norm(lb), eps * spectral_norm(btb))
        strict_a = strict_b = False
    elif form is Form.STRICT_A:
        slack_a = -la
        slack_b = lb
        scale_a = spectral_norm(la)
        scale_b = spectral_norm(lb)
        strict_a, strict_b = True, False
    elif form is Form.STRICT_B:
        slack_a = -la
        slack_b = lb
        scale_a = spectral_norm(la)
        scale_b = spectral_norm(lb)
        strict_a, strict_b = False, True
    else:  # pragma: no cover - Form() already validates
        raise UnknownForm(str(form))

    eigs_a = np.linalg.eigvalsh(hermitian_part(slack_a))
    eigs_b = np.linalg.eigvalsh(hermitian_part(slack_b))
    margin_a = float(eigs_a[0])
    margin_b = float(eigs_b[0])
    passed_a = margin_a > tol.psd_margin * scale_a if strict_a else margin_a >= -tol.psd_margin * scale_a
    passed_b = margin_b > tol.psd_margin * scale_b if strict_b else margin_b >= -tol.psd_margin * scale_b
    if form in _EPS_FORMS and epsilon is None and eps <= tol.psd_margin:
        # the certificate requires a strictly positive epsilon
        if form is Form.EPS_A:
            passed_a = False
        else:
            passed_b = False
    return SeparationReport(
        form=form,
        margin_a=margin_a,
        margin_b=margin_b,
        eigs_a=eigs_a,
        eigs_b=eigs_b,
        scale_a=scale_a,
        scale_b=scale_b,
        epsilon=None if form not in _EPS_FORMS else float(eps),
        passed_a=bool(passed_a),
        passed_b=bool(passed_b),
    )


# ---------------------------------------------------------------------------
# form conversions
# ---------------------------------------------------------------------------

_CYCLE = {
    (Form.STRICT_A, Form.EPS_A),
    (Form.EPS_A, Form.STRICT_B),
    (Form.STRICT_B, Form.EPS_B),
    (Form.EPS_B, Form.STRICT_A),
}


def _shifted(mult, block, eps):
    """Add eps*I to one diagonal block, updating the structure tag."""
    if eps == 0:
        return mult
    n, m = mult.block_dims
    p = mult.P.copy()
    if block == "22":
        p[n:, n:] += eps * np.eye(m)
    else:
        p[:n, :n] -= eps * np.eye(n)
    if mult.structure == "gain":
        nn = mult.params["N"].copy()
        mm = mult.params["M"].copy()
        if block == "22":
            mm = mm + eps * np.eye(m)
        else:
            nn = nn + eps * np.eye(n)
        return Multiplier.gain(nn, mm)
    if mult.structure == "scaled_gain":
        xi = mult.params["xi"]
        nn = xi * mult.params["gamma_sq"] * np.eye(n)
        mm = xi * np.eye(m)
        if block == "22":
            mm = mm + eps * np.eye(m)
        else:
            nn = nn + eps * np.eye(n)
        return Multiplier.gain(nn, mm)
    return Multiplier(p, (n, m), "general")


def convert_form(mult, from_form, to_form, a, b, epsilon=None, tol=DEFAULT_TOL):
    """Move a verified multiplier one step along the form cycle.

    strict-A -> eps-A and strict-B -> eps-B keep P and report the largest
    feasible epsilon; the block-shift steps add half of it (or the
    supplied source epsilon) to a diagonal block, degrading structured
    tags that the shift breaks. The output is re-verified before return.
    """
    from_form = Form(from_form)
    to_form = Form(to_form)
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    src = verify_multiplier(a, b, mult, from_form, epsilon=epsilon, tol=tol)
    if not src.passed:
        raise NotVerifiedForSource(f"multiplier fails {from_form.value} on this pair")
    if from_form == to_form:
        return mult, src
    if (from_form, to_form) not in _CYCLE:
        raise UnknownForm(f"no direct conversion {from_form.value} -> {to_form.value}")

    la, lb = _forms(a, b, mult)
    if from_form is Form.STRICT_A:
        eps = max_feasible_eps(-la, a.conj().T @ a, tol)
        out = mult
    elif from_form is Form.EPS_A:
        eps = src.epsilon if src.epsilon is not None else 0.0
        if epsilon is None:
            eps = eps / 2
        out = _shifted(mult, "22", eps)
    elif from_form is Form.STRICT_B:
        eps = max_feasible_eps(lb, b.conj().T @ b, tol)
        out = mult
    else:  # EPS_B -> STRICT_A
        eps = src.epsilon if src.epsilon is not None else 0.0
        if epsilon is None:
            eps = eps / 2
        out = _shifted(mult, "11", eps)

    report = verify_multiplier(a, b, out, to_form, epsilon=eps if to_form in _EPS_FORMS else None, tol=tol)
    if not report.passed:
        raise ConversionFailsVerification(
            f"converted multiplier fails {to_form.value} (margins {report.margin_a:.3e}, {report.margin_b:.3e})"
        )
    return out, report
