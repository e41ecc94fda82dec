"""State-space LTI layer.

Frequency responses, feedback stability, frequency-wise certificate
sweeps built on the matrix-level synthesis routines, passivity and
small-gain checks, and a first-order all-pass factory for robustness
sweeps. Frequencies are nonnegative reals plus infinity.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    DefectiveNonzeroEigenvalue,
    DefectiveZeroEigenvalue,
    DimensionMismatch,
    EndpointInfeasible,
    EpsilonUnderflow,
    FeedbackUnstable,
    IllPosed,
    InverseNotInRHinf,
    NoGainCertificate,
    NonPositiveParameter,
    OpenLoopUnstable,
    PerFrequencyFailure,
    PhaseSumViolated,
    ClassViolated,
    PreconditionViolatedAtOmega,
    QsepError,
    ResolventSingular,
    SignConditionViolated,
    SpectrumOnNegativeRealAxis,
    UnitCircleEigenvalue,
    XiInconsistent,
)
from .matcore import DEFAULT_TOL, hermitian_part, spectral_norm
from .separation import Form, Multiplier, max_feasible_eps, verify_multiplier
from .synthesis import (
    synth_gain_rotation,
    synth_gain_unitary,
    synth_phasal_congruence,
    synth_phasal_scaling,
)

__all__ = [
    "StateSpace",
    "FrequencyGrid",
    "FrequencyCertificate",
    "freq_response",
    "feedback_stable",
    "check_iqc_sufficient",
    "necessity_multiplier",
    "sweep_certificate",
    "endpoint_congruence_check",
    "allpass_first_order",
    "FAMILIES",
]

log = logging.getLogger(__name__)

FAMILIES = (
    "phasal-scaling",
    "rotation-congruence-endpoints",
    "gain-rotation",
    "scaled-gain-unitary",
    "passivity",
    "small-gain",
    "necessity",
)


def _real2d(x, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a 2-D real array")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class StateSpace:
    """Real LTI realization (A, B, C, D) of C (sI - A)^-1 B + D."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        a = _real2d(self.A, "A")
        b = _real2d(self.B, "B")
        c = _real2d(self.C, "C")
        d = _real2d(self.D, "D")
        k = a.shape[0]
        if a.shape != (k, k):
            raise DimensionMismatch("state matrix must be square")
        if b.shape[0] != k or c.shape[1] != k:
            raise DimensionMismatch("B/C state dimensions must match A")
        if d.shape != (c.shape[0], b.shape[1]):
            raise DimensionMismatch("D must be (outputs x inputs)")
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "C", c)
        object.__setattr__(self, "D", d)
        if k > 0:
            ctrb = np.hstack([np.linalg.matrix_power(a, i) @ b for i in range(k)])
            obsv = np.vstack([c @ np.linalg.matrix_power(a, i) for i in range(k)])
            if np.linalg.matrix_rank(ctrb) < k or np.linalg.matrix_rank(obsv) < k:
                log.warning("realization may contain hidden modes (rank-deficient ctrb/obsv)")

    @staticmethod
    def static(d):
        d = np.atleast_2d(np.asarray(d, dtype=float))
        p, q = d.shape
        z = np.zeros((0, 0))
        return StateSpace(z, np.zeros((0, q)), np.zeros((p, 0)), d)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def n_in(self):
        return self.B.shape[1]

    @property
    def n_out(self):
        return self.C.shape[0]

    def spectral_abscissa(self):
        if self.n_states == 0:
            return -np.inf
        return float(np.max(np.linalg.eigvals(self.A).real))

    def is_stable(self, tol=DEFAULT_TOL):
        if self.n_states == 0:
            return True
        return self.spectral_abscissa() < -tol.psd_margin * max(1.0, spectral_norm(self.A))

    def scale(self, alpha):
        """Scalar multiple alpha * G."""
        return StateSpace(self.A, self.B, alpha * self.C, alpha * self.D)

    def product(self, right):
        """Series transfer self(s) @ right(s) (right acts on the input first)."""
        if self.n_in != right.n_out:
            raise DimensionMismatch("series dimensions do not match")
        kl, kr = self.n_states, right.n_states
        a = np.zeros((kl + kr, kl + kr))
        a[:kl, :kl] = self.A
        a[:kl, kl:] = self.B @ right.C
        a[kl:, kl:] = right.A
        b = np.vstack([self.B @ right.D, right.B])
        c = np.hstack([self.C, self.D @ right.C])
        d = self.D @ right.D
        return StateSpace(a, b, c, d)

    def replicate(self, m):
        """Diagonal replication of a SISO system to m channels."""
        if self.n_in != 1 or self.n_out != 1:
            raise DimensionMismatch("replicate requires a SISO system")
        eye = np.eye(m)
        return StateSpace(
            np.kron(eye, self.A),
            np.kron(eye, self.B),
            np.kron(eye, self.C),
            np.kron(eye, self.D),
        )

    def inverse(self):
        """Realization of the transfer inverse; requires square invertible D."""
        if self.n_in != self.n_out:
            raise DimensionMismatch("inverse requires a square system")
        dinv = np.linalg.inv(self.D)
        return StateSpace(
            self.A - self.B @ dinv @ self.C,
            self.B @ dinv,
            -dinv @ self.C,
            dinv,
        )


@dataclass(frozen=True)
class FrequencyGrid:
    """Sorted nonnegative frequencies including 0 and infinity."""

    omegas: tuple

    def __post_init__(self):
        om = tuple(float(w) for w in self.omegas)
        if len(om) < 2 or om[0] != 0.0 or not np.isinf(om[-1]):
            raise ValueError("grid must start at 0 and end at infinity")
        if any(om[i] >= om[i + 1] for i in range(len(om) - 1)):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "omegas", om)

    @staticmethod
    def default(n_points=200, lo=1e-3, hi=1e3):
        mids = np.logspace(np.log10(lo), np.log10(hi), n_points)
        return FrequencyGrid((0.0, *mids, np.inf))

    def __len__(self):
        return len(self.omegas)


@dataclass
class FrequencyCertificate:
    """Per-frequency multipliers and reports for one certificate family."""

    family: str
    omegas: tuple
    multipliers: list
    reports: list
    passed: bool
    continuity_max_jump: float
    continuity_median_jump: float
    continuity_suspect: bool
    data: dict = field(default_factory=dict)


def _continuity(multipliers):
    if len(multipliers) < 2:
        return 0.0, 0.0, False
    jumps = [
        float(np.linalg.norm(multipliers[i + 1].P - multipliers[i].P, "fro"))
        for i in range(len(multipliers) - 1)
    ]
    mx = max(jumps)
    med = float(np.median(jumps))
    return mx, med, bool(mx > 10 * med and mx > 0)


# ---------------------------------------------------------------------------
# frequency response and feedback stability
# ---------------------------------------------------------------------------

def freq_response(sys, omega):
    """Transfer value C (j omega I - A)^-1 B + D; D alone at infinity."""
    d = sys.D.astype(np.complex128)
    if np.isinf(omega):
        return d
    if sys.n_states == 0:
        return d
    m = 1j * omega * np.eye(sys.n_states) - sys.A
    try:
        sol = np.linalg.solve(m, sys.B.astype(np.complex128))
    except np.linalg.LinAlgError as exc:
        raise ResolventSingular(f"j*{omega} is an eigenvalue of the state matrix") from exc
    return sys.C @ sol + d


@dataclass(frozen=True)
class FeedbackReport:
    stable: bool
    spectral_abscissa: float


def _closed_loop_sensitivity(g, k):
    series = g.product(k)
    w = np.eye(series.n_out) + series.D
    return series, w


def feedback_stable(g, k, tol=DEFAULT_TOL):
    """Stability of (I + GK)^-1 via the closed-loop state matrix.

    Both open-loop systems must be stable and the loop well-posed.
    """
    if not g.is_stable(tol) or not k.is_stable(tol):
        raise OpenLoopUnstable("feedback test requires stable open-loop systems")
    series, w = _closed_loop_sensitivity(g, k)
    scale = float(np.prod(np.linalg.norm(w, axis=1))) if w.size else 1.0
    if scale == 0 or abs(np.linalg.det(w)) <= tol.det_zero_rel * scale:
        raise IllPosed("det(I + D_G D_K) vanishes")
    if series.n_states == 0:
        return FeedbackReport(True, -np.inf)
    a_cl = series.A - series.B @ np.linalg.solve(w, series.C)
    absc = float(np.max(np.linalg.eigvals(a_cl).real))
    stable = absc < -tol.psd_margin * max(1.0, spectral_norm(a_cl))
    return FeedbackReport(bool(stable), absc)


# ---------------------------------------------------------------------------
# sufficiency check
# ---------------------------------------------------------------------------

def _pi_at(pi_provider, omega):
    if callable(pi_provider):
        return pi_provider(omega)
    return pi_provider


def check_iqc_sufficient(g, k, pi_provider, sign_mode="standard", grid=None,
                         tol=DEFAULT_TOL, family="iqc-sufficient"):
    """Frequency-wise sufficiency check for a given multiplier.

    At every grid point, verifies the strict separation pattern or its
    equivalent weak pattern with a strict epsilon-padded second
    inequality, plus the diagonal-block sign conditions (standard:
    leading block negative semidefinite, trailing positive; flipped mode
    reverses both and requires stable transfer inverses).
    """
    if grid is None:
        grid = FrequencyGrid.default()
    if sign_mode not in ("standard", "flipped"):
        raise ValueError("sign_mode must be 'standard' or 'flipped'")
    if sign_mode == "flipped":
        if g.n_in != g.n_out or k.n_in != k.n_out:
            raise InverseNotInRHinf("flipped mode requires square systems")
        for sys, name in ((g, "G"), (k, "K")):
            try:
                inv = sys.inverse()
            except (np.linalg.LinAlgError, DimensionMismatch) as exc:
                raise InverseNotInRHinf(f"{name} has no proper inverse") from exc
            if not inv.is_stable(tol):
                raise InverseNotInRHinf(f"{name}^-1 is not stable")

    multipliers = []
    reports = []
    variants = []
    eps_used = []
    passed = True
    for omega in grid.omegas:
        mult = _pi_at(pi_provider, omega)
        gw = freq_response(g, omega)
        kw = freq_response(k, omega)
        n, m = mult.block_dims
        p = mult.P if sign_mode == "standard" else -mult.P
        pnorm = spectral_norm(p)
        p11_max = float(np.linalg.eigvalsh(hermitian_part(p[:n, :n]))[-1])
        p22_min = float(np.linalg.eigvalsh(hermitian_part(p[n:, n:]))[0])
        if p11_max > tol.psd_margin * pnorm:
            raise SignConditionViolated(omega, "11")
        if p22_min < -tol.psd_margin * pnorm:
            raise SignConditionViolated(omega, "22")
        work = mult if sign_mode == "standard" else Multiplier(-mult.P, mult.block_dims, "general")
        rep = verify_multiplier(gw, kw, work, Form.STRICT_A, tol=tol)
        variant = "strict"
        if not rep.passed:
            rep = verify_multiplier(gw, kw, work, Form.EPS_B, epsilon=None, tol=tol)
            variant = "eps_b"
            if rep.epsilon is not None:
                eps_used.append(rep.epsilon)
        multipliers.append(mult)
        reports.append(rep)
        variants.append(variant)
        if not rep.passed:
            passed = False
        if variant == "eps_b" and rep.passed and rep.epsilon is not None and rep.epsilon <= 1e-12:
            passed = False
    mx, med, suspect = _continuity(multipliers)
    return FrequencyCertificate(
        family=family,
        omegas=grid.omegas,
        multipliers=multipliers,
        reports=reports,
        passed=passed,
        continuity_max_jump=mx,
        continuity_median_jump=med,
        continuity_suspect=suspect,
        data={"variants": variants, "sign_mode": sign_mode,
              "min_eps": min(eps_used) if eps_used else None},
    )


# ---------------------------------------------------------------------------
# necessity construction
# ---------------------------------------------------------------------------

def necessity_multiplier(g, k, grid=None, tol=DEFAULT_TOL, eps_floor=1e-14):
    """Multiplier family witnessing a stable closed loop, frequency-wise.

    Uses Pi = [G*; I][G, I] - eps I with eps halved from 1 until both
    separation inequalities hold at every grid point.
    """
    if grid is None:
        grid = FrequencyGrid.default()
    fb = feedback_stable(g, k, tol)
    if not fb.stable:
        raise FeedbackUnstable(f"closed loop has spectral abscissa {fb.spectral_abscissa:.3e}")
    responses = [(freq_response(g, w), freq_response(k, w)) for w in grid.omegas]
    m_out, n_in = responses[0][0].shape

    def build(gw, eps):
        stack = np.vstack([gw.conj().T, np.eye(m_out, dtype=np.complex128)])
        p = stack @ stack.conj().T - eps * np.eye(n_in + m_out)
        return Multiplier(p, (n_in, m_out), "general")

    eps = 1.0
    while eps >= eps_floor:
        reports = []
        ok = True
        for (gw, kw) in responses:
            rep = verify_multiplier(gw, kw, build(gw, eps), Form.STRICT_A, tol=tol)
            reports.append(rep)
            if not rep.passed:
                ok = False
                break
        if ok:
            multipliers = [build(gw, eps) for gw, _ in responses]
            mx, med, suspect = _continuity(multipliers)
            return FrequencyCertificate(
                family="necessity",
                omegas=grid.omegas,
                multipliers=multipliers,
                reports=reports,
                passed=True,
                continuity_max_jump=mx,
                continuity_median_jump=med,
                continuity_suspect=suspect,
                data={"eps": eps},
            )
        eps /= 2
    raise EpsilonUnderflow(
        "no epsilon above the floor passes at every grid point; grid too coarse or loop degenerate"
    )


# ---------------------------------------------------------------------------
# certificate sweeps
# ---------------------------------------------------------------------------

def _sweep_synth(g, k, grid, tol, synth, family):
    multipliers, reports = [], []
    data = {"eps": [], "log": []}
    for omega in grid.omegas:
        gw = freq_response(g, omega)
        kw = freq_response(k, omega)
        try:
            res = synth(gw, kw)
        except (DefectiveZeroEigenvalue, DefectiveNonzeroEigenvalue) as exc:
            raise PreconditionViolatedAtOmega(omega, str(exc)) from exc
        except (SpectrumOnNegativeRealAxis, UnitCircleEigenvalue, NoGainCertificate,
                PhaseSumViolated, ClassViolated) as exc:
            raise PerFrequencyFailure(omega, str(exc)) from exc
        multipliers.append(res.multiplier)
        reports.append(res.report)
        data["eps"].append(res.epsilon)
        data["log"].append(res.construction_log)
    mx, med, suspect = _continuity(multipliers)
    return FrequencyCertificate(family, grid.omegas, multipliers, reports, True,
                                mx, med, suspect, data)


def _sweep_scaled_gain(g, k, grid, tol):
    cert = _sweep_synth(g, k, grid, tol, lambda a, b: synth_gain_unitary(a, b, tol),
                        "scaled-gain-unitary")
    xis = [m.params["xi"] for m in cert.multipliers]
    if len(set(xis)) > 1:
        flip = next(i for i in range(1, len(xis)) if xis[i] != xis[i - 1])
        raise XiInconsistent(
            f"sign parameter flips between omega={cert.omegas[flip - 1]} and omega={cert.omegas[flip]}"
        )
    cert.data["xi"] = xis[0]
    cert.data["gamma_sq"] = [m.params["gamma_sq"] for m in cert.multipliers]
    return cert


def _sweep_small_gain(g, k, grid, tol):
    gains_g = [spectral_norm(freq_response(g, w)) for w in grid.omegas]
    gains_k = [spectral_norm(freq_response(k, w)) for w in grid.omegas]
    g_inf, k_inf = max(gains_g), max(gains_k)
    if g_inf * k_inf >= 1:
        omega_bad = grid.omegas[int(np.argmax(np.asarray(gains_g) * np.asarray(gains_k)))]
        raise PerFrequencyFailure(omega_bad, f"gain product {g_inf * k_inf:.6g} is not below one")
    upper = (1 / g_inf**2 - k_inf**2) if g_inf > 0 else np.inf
    eps = min(upper / 2, k_inf**2 + 1.0)
    gamma_sq = 1 / (k_inf**2 + eps)
    n = g.n_in
    m = g.n_out
    mult = Multiplier.scaled_gain(gamma_sq, 1, n, m)
    reports = []
    for omega in grid.omegas:
        rep = verify_multiplier(freq_response(g, omega), freq_response(k, omega), mult,
                                Form.STRICT_A, tol=tol)
        if not rep.passed:
            raise PerFrequencyFailure(omega, "small-gain certificate failed verification")
        reports.append(rep)
    return FrequencyCertificate(
        "small-gain", grid.omegas, [mult] * len(grid.omegas), reports, True, 0.0, 0.0, False,
        {"gamma_sq": gamma_sq, "g_inf": g_inf, "k_inf": k_inf},
    )


def _sweep_passivity(g, k, grid, tol):
    if g.n_in != g.n_out or k.n_in != k.n_out:
        raise DimensionMismatch("passivity sweep requires square systems")
    n = g.n_in
    mult = Multiplier.rotation(1.0, n)
    reports = []
    eps_per = []
    for omega in grid.omegas:
        gw = freq_response(g, omega)
        kw = freq_response(k, omega)
        herm_k = float(np.linalg.eigvalsh(hermitian_part(kw))[0])
        if herm_k < -tol.psd_margin * max(spectral_norm(kw), 1.0):
            raise PerFrequencyFailure(omega, "second system is not passive")
        rep = verify_multiplier(gw, kw, mult, Form.EPS_A, epsilon=None, tol=tol)
        if not rep.passed:
            raise PerFrequencyFailure(omega, "first system is not output strictly passive")
        eps_per.append(rep.epsilon)
        reports.append(rep)
    eps_pos = [e for e in eps_per if e is not None]
    return FrequencyCertificate(
        "passivity", grid.omegas, [mult] * len(grid.omegas), reports, True, 0.0, 0.0, False,
        {"eps": eps_per, "eps_min": min(eps_pos) if eps_pos else None},
    )


def sweep_certificate(g, k, family, grid=None, tol=DEFAULT_TOL, real_mode=False):
    """Per-frequency certificate sweep for one structured family."""
    if grid is None:
        grid = FrequencyGrid.default()
    if family not in FAMILIES:
        raise ValueError(f"unknown certificate family {family!r}; choose from {FAMILIES}")
    if not g.is_stable(tol) or not k.is_stable(tol):
        raise OpenLoopUnstable("certificate sweeps require stable open-loop systems")
    if family == "phasal-scaling":
        return _sweep_synth(g, k, grid, tol,
                            lambda a, b: synth_phasal_scaling(a, b, tol=tol), family)
    if family == "gain-rotation":
        return _sweep_synth(g, k, grid, tol,
                            lambda a, b: synth_gain_rotation(a, b, tol=tol), family)
    if family == "scaled-gain-unitary":
        return _sweep_scaled_gain(g, k, grid, tol)
    if family == "small-gain":
        return _sweep_small_gain(g, k, grid, tol)
    if family == "passivity":
        return _sweep_passivity(g, k, grid, tol)
    if family == "rotation-congruence-endpoints":
        res = endpoint_congruence_check(g, k, tol)
        return res
    if family == "necessity":
        return necessity_multiplier(g, k, grid, tol)
    raise ValueError(family)  # pragma: no cover


# ---------------------------------------------------------------------------
# endpoint congruence check
# ---------------------------------------------------------------------------

def endpoint_congruence_check(g, k, tol=DEFAULT_TOL):
    """Real rotation-sign multipliers at the frequency endpoints 0 and infinity.

    Returns a two-point certificate whose data records the chosen sign
    per endpoint; a zero endpoint response makes the loop trivially
    robust there and defaults the sign to +1.
    """
    omegas = (0.0, np.inf)
    multipliers, reports, signs, trivial = [], [], {}, {}
    for omega in omegas:
        gw = freq_response(g, omega)
        kw = freq_response(k, omega)
        if np.max(np.abs(gw.imag)) > 1e-9 or np.max(np.abs(kw.imag)) > 1e-9:
            raise QsepError("endpoint responses of real systems must be real")
        n = gw.shape[0]
        if spectral_norm(gw) == 0 or spectral_norm(kw) == 0:
            mult = Multiplier.rotation(1.0, n)
            signs[omega] = 1
            trivial[omega] = True
            multipliers.append(mult)
            reports.append(None)
            continue
        try:
            res = synth_phasal_congruence(gw.real, kw.real, real_mode=True, tol=tol)
        except (PhaseSumViolated, ClassViolated) as exc:
            raise EndpointInfeasible(omega, detail=str(exc)) from exc
        z = res.construction_log["z"]
        signs[omega] = 1 if z.real > 0 else -1
        trivial[omega] = False
        multipliers.append(res.multiplier)
        reports.append(res.report)
    return FrequencyCertificate(
        "rotation-congruence-endpoints", omegas, multipliers, reports, True,
        0.0, 0.0, False, {"signs": signs, "trivial": trivial},
    )


# ---------------------------------------------------------------------------
# all-pass factory
# ---------------------------------------------------------------------------

def allpass_first_order(a):
    """First-order all-pass (a - s)/(a + s); unit modulus on the axis, stable pole at -a."""
    if not np.isscalar(a) or not np.isreal(a) or a <= 0:
        raise NonPositiveParameter("all-pass parameter must be a positive real scalar")
    a = float(a)
    return StateSpace(
        np.array([[-a]]),
        np.array([[1.0]]),
        np.array([[2 * a]]),
        np.array([[-1.0]]),
    )
