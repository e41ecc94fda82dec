"""Batch front door: JSON problem files in, certificate reports out.

One subcommand per analysis family; exit code 0 means certified, 1 means
a destabilizing witness was found, 2 means undecided or error. Complex
numbers travel as [re, im] pairs and the infinite frequency as the
string "inf"; all numeric output is serialized with 17 significant
digits so reports round-trip exactly.
"""

import argparse
import datetime
import json
import sys

import jsonschema
import numpy as np

from . import __version__
from . import adversary, lti, phase, separation, synthesis
from .errors import (
    ClassViolated,
    ConditionHolds,
    ConstructionFallbackFailed,
    DefectiveZeroEigenvalue,
    DimensionError,
    EndpointInfeasible,
    EpsilonUnderflow,
    FeedbackUnstable,
    IoError,
    NoGainCertificate,
    ParseError,
    PerFrequencyFailure,
    PhaseSumViolated,
    PreconditionViolatedAtOmega,
    QsepError,
    SchemaError,
    SpectrumOnNegativeRealAxis,
    UnitCircleEigenvalue,
    XiInconsistent,
)
from .matcore import Tolerances
from .separation import Form, Multiplier

EXIT_CERTIFIED = 0
EXIT_WITNESS = 1
EXIT_UNDECIDED = 2

# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

_COMPLEX_ENTRY = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}
_COMPLEX_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": _COMPLEX_ENTRY},
}
_REAL_MATRIX = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}},
}
_STATE_SPACE = {
    "type": "object",
    "required": ["A", "B", "C", "D"],
    "properties": {"A": _REAL_MATRIX, "B": _REAL_MATRIX, "C": _REAL_MATRIX, "D": _REAL_MATRIX},
}
PROBLEM_SCHEMA = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["matrix-pair", "lti-pair"]},
        "A": _COMPLEX_MATRIX,
        "B": _COMPLEX_MATRIX,
        "G": _STATE_SPACE,
        "K": _STATE_SPACE,
        "options": {"type": "object"},
    },
    "allOf": [
        {
            "if": {"properties": {"kind": {"const": "matrix-pair"}}},
            "then": {"required": ["A", "B"]},
        },
        {
            "if": {"properties": {"kind": {"const": "lti-pair"}}},
            "then": {"required": ["G", "K"]},
        },
    ],
}


def _to_complex(mat):
    return np.array([[complex(e[0], e[1]) for e in row] for row in mat], dtype=np.complex128)


def cmat(m):
    """Complex matrix to nested [re, im] lists."""
    m = np.atleast_2d(np.asarray(m))
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def rmat(m):
    return [[float(v) for v in row] for row in np.atleast_2d(np.asarray(m))]


def _omega_token(w):
    return "inf" if np.isinf(w) else float(w)


class ProblemFile:
    """Parsed problem description with merged options."""

    def __init__(self, kind, payload, options):
        self.kind = kind
        self.payload = payload
        self.options = options

    @property
    def tolerances(self):
        t = self.options.get("tolerances", {})
        return Tolerances(
            psd_margin=t.get("psd_margin", 1e-9),
            rank_rel=t.get("rank_rel", 1e-8),
            det_zero_rel=t.get("det_zero_rel", 1e-8),
            eig_cond_max=t.get("eig_cond_max", 1e6),
        )

    @property
    def grid(self):
        g = self.options.get("grid")
        if g is None:
            return lti.FrequencyGrid.default()
        return lti.FrequencyGrid.default(
            n_points=int(g.get("points", 200)),
            lo=float(g.get("lo", 1e-3)),
            hi=float(g.get("hi", 1e3)),
        )


def load_problem(path, overrides=None):
    """Load and schema-validate a problem file, merging CLI overrides on top."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}", exc.lineno, exc.colno) from exc
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        path_str = "/".join(str(p) for p in exc.absolute_path)
        raise SchemaError(f"{exc.message} (at /{path_str})", path=path_str) from exc

    options = dict(doc.get("options", {}))
    options.update(overrides or {})
    kind = doc["kind"]
    if kind == "matrix-pair":
        a = _to_complex(doc["A"])
        b = _to_complex(doc["B"])
        if a.shape[::-1] != b.shape:
            raise DimensionError(
                f"B must have the transposed shape of A: A is {a.shape}, B is {b.shape}"
            )
        payload = {"A": a, "B": b}
    else:
        def to_ss(obj, name):
            d = np.atleast_2d(np.array(obj["D"], dtype=float))
            k = len(obj["A"])
            a = np.array(obj["A"], dtype=float).reshape(k, k) if k else np.zeros((0, 0))
            b = np.array(obj["B"], dtype=float).reshape(k, -1) if k else np.zeros((0, d.shape[1]))
            c = np.array(obj["C"], dtype=float).reshape(-1, k) if k else np.zeros((d.shape[0], 0))
            try:
                return lti.StateSpace(a, b, c, d)
            except (QsepError, ValueError) as exc:
                raise DimensionError(f"inconsistent state-space data in {name}: {exc}") from exc

        payload = {"G": to_ss(doc["G"], "G"), "K": to_ss(doc["K"], "K")}
    return ProblemFile(kind, payload, options)


def multiplier_from_dict(d):
    structure = d.get("structure", "general")
    if structure == "phasal":
        return Multiplier.phasal(_to_complex(d["H"]))
    if structure == "rotation":
        z = complex(d["z"][0], d["z"][1])
        return Multiplier.rotation(z, int(d["n"]), int(d.get("m", d["n"])))
    if structure == "gain":
        return Multiplier.gain(_to_complex(d["N"]), _to_complex(d["M"]))
    if structure == "scaled_gain":
        return Multiplier.scaled_gain(float(d["gamma_sq"]), int(d["xi"]), int(d["n"]), int(d["m"]))
    return Multiplier.general(_to_complex(d["P"]), int(d["n"]), int(d["m"]))


def multiplier_to_dict(mult):
    n, m = mult.block_dims
    out = {"structure": mult.structure, "n": n, "m": m, "P": cmat(mult.P)}
    if mult.structure == "phasal":
        out["H"] = cmat(mult.params["H"])
    elif mult.structure == "rotation":
        z = mult.params["z"]
        out["z"] = [float(np.real(z)), float(np.imag(z))]
    elif mult.structure == "gain":
        out["N"] = cmat(mult.params["N"])
        out["M"] = cmat(mult.params["M"])
    elif mult.structure == "scaled_gain":
        out["gamma_sq"] = float(mult.params["gamma_sq"])
        out["xi"] = int(mult.params["xi"])
    return out


def report_to_dict(rep):
    if rep is None:
        return None
    return {
        "form": rep.form.value,
        "margin_a": float(rep.margin_a),
        "margin_b": float(rep.margin_b),
        "eigs_a": [float(v) for v in rep.eigs_a],
        "eigs_b": [float(v) for v in rep.eigs_b],
        "epsilon": None if rep.epsilon is None else float(rep.epsilon),
        "passed": bool(rep.passed),
    }


def witness_to_dict(w):
    out = {
        "kind": w.kind,
        "relative_det": float(w.relative_det),
        "closed_loop_det": float(w.closed_loop_det),
        "valid": bool(w.valid),
        "method": w.method,
    }
    if w.tau is not None:
        out["tau"] = float(w.tau)
    if w.theta is not None:
        out["theta"] = float(w.theta)
    for name in ("T", "S", "U", "V"):
        val = getattr(w, name)
        if val is not None:
            out[name] = cmat(val)
    return out


def profile_to_dict(p):
    return {
        "class": p.sectorial.tag,
        "opening_angle": float(p.sectorial.opening_angle),
        "phases": None if p.phases is None else [float(v) for v in p.phases],
        "phi_max": None if p.phi_max is None else float(p.phi_max),
        "phi_min": None if p.phi_min is None else float(p.phi_min),
        "center": None if p.center is None else float(p.center),
        "quality": p.quality,
    }


# ---------------------------------------------------------------------------
# deterministic JSON emitter (17 significant digits)
# ---------------------------------------------------------------------------

def _dump_json(obj, indent=0):
    pad = " " * indent
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if np.isnan(v):
            raise IoError("cannot serialize NaN")
        if np.isinf(v):
            return json.dumps("inf" if v > 0 else "-inf")
        return format(v, ".17g")
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = ",\n".join(
            f'{pad}  {json.dumps(str(k))}: {_dump_json(obj[k], indent + 2)}'
            for k in sorted(obj, key=str)
        )
        return "{\n" + inner + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if len(obj) == 0:
            return "[]"
        inner = ",\n".join(f"{pad}  {_dump_json(v, indent + 2)}" for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    raise IoError(f"cannot serialize object of type {type(obj).__name__}")


def emit_report(result, fmt="json", path=None):
    """Write a report as deterministic JSON or as a CSV sweep table."""
    if fmt == "json":
        text = _dump_json(result) + "\n"
    elif fmt == "csv":
        text = _sweep_csv(result)
    else:
        raise IoError(f"unknown format {fmt!r}")
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc
    return text


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".17g")


def _sweep_csv(result):
    cert = result.get("result", {}).get("certificate")
    if cert is None:
        raise IoError("csv format requires a sweep certificate result")
    rows = ["omega,margin_A,margin_B,epsilon,gamma_sq,xi,continuity_jump"]
    omegas = cert["omegas"]
    reports = cert["reports"]
    mults = cert.get("multipliers") or [{}] * len(omegas)
    eps = cert.get("eps_per_omega") or [None] * len(omegas)
    jumps = cert.get("jumps") or [None] * len(omegas)
    for i, w in enumerate(omegas):
        rep = reports[i]
        mult = mults[i] or {}
        rows.append(",".join([
            _csv_cell(w if isinstance(w, str) else w),
            _csv_cell(None if rep is None else rep["margin_a"]),
            _csv_cell(None if rep is None else rep["margin_b"]),
            _csv_cell(eps[i] if eps[i] is not None else (None if rep is None else rep["epsilon"])),
            _csv_cell(mult.get("gamma_sq")),
            _csv_cell(mult.get("xi")),
            _csv_cell(jumps[i]),
        ]))
    return "\r\n".join(rows) + "\r\n"


# ---------------------------------------------------------------------------
# command handlers
# ---------------------------------------------------------------------------

def _base_report(args, problem, verdict, exit_code, result, note=None):
    rep = {
        "tool": "qsep",
        "version": __version__,
        "command": args._command_line,
        "seed": problem.options.get("seed", 0),
        "verdict": verdict,
        "exit_code": exit_code,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "result": result,
    }
    if note:
        rep["note"] = note
    if problem.kind == "matrix-pair":
        rep["problem"] = {
            "kind": "matrix-pair",
            "A": cmat(problem.payload["A"]),
            "B": cmat(problem.payload["B"]),
        }
    else:
        def ss(s):
            return {"A": rmat(s.A), "B": rmat(s.B), "C": rmat(s.C), "D": rmat(s.D)}

        rep["problem"] = {
            "kind": "lti-pair",
            "G": ss(problem.payload["G"]),
            "K": ss(problem.payload["K"]),
        }
    return rep


def _matrices(problem):
    if problem.kind != "matrix-pair":
        raise DimensionError("this command needs a matrix-pair problem")
    return problem.payload["A"], problem.payload["B"]


def _systems(problem):
    if problem.kind != "lti-pair":
        raise DimensionError("this command needs an lti-pair problem")
    return problem.payload["G"], problem.payload["K"]


def _cmd_classify(args, problem):
    a, b = _matrices(problem)
    tol = problem.tolerances
    pa = phase.classify_and_phases(a, tol=tol)
    pb = phase.classify_and_phases(b, tol=tol)
    gs = separation.graph_sep_check(a, b, tol)
    result = {
        "A": profile_to_dict(pa),
        "B": profile_to_dict(pb),
        "graph_separation": {
            "separated": gs.separated,
            "det": [float(gs.det.real), float(gs.det.imag)],
            "relative_det": float(gs.relative_det),
        },
    }
    return "classified", EXIT_CERTIFIED, result, None


_SYNTH = {
    "scaling": lambda a, b, tol, real: synthesis.synth_phasal_scaling(a, b, real_mode=real, tol=tol),
    "congruence": lambda a, b, tol, real: synthesis.synth_phasal_congruence(a, b, real_mode=real, tol=tol),
    "rotation": lambda a, b, tol, real: synthesis.synth_gain_rotation(a, b, tol=tol),
    "unitary": lambda a, b, tol, real: synthesis.synth_gain_unitary(a, b, tol=tol),
}


def _cmd_synth(args, problem):
    a, b = _matrices(problem)
    tol = problem.tolerances
    real_mode = bool(problem.options.get("real_mode", False))
    try:
        res = _SYNTH[args.family](a, b, tol, real_mode)
    except DefectiveZeroEigenvalue as exc:
        note = (
            "undecided: 2x2 defective zero eigenvalue (existence open)"
            if not exc.decidable
            else "no phasal multiplier exists for this defective zero eigenvalue"
        )
        return "undecided", EXIT_UNDECIDED, {"error": str(exc)}, note
    except (SpectrumOnNegativeRealAxis, PhaseSumViolated, NoGainCertificate,
            UnitCircleEigenvalue, ClassViolated) as exc:
        return (
            "witness-exists",
            EXIT_WITNESS,
            {"error": str(exc), "suggestion": f"run destabilize {args.family}"},
            None,
        )
    result = {
        "multiplier": multiplier_to_dict(res.multiplier),
        "form": res.form.value,
        "epsilon": None if res.epsilon is None else float(res.epsilon),
        "report": report_to_dict(res.report),
        "extra_reports": {f.value: report_to_dict(r) for f, r in res.extra_reports.items()},
    }
    return "certified", EXIT_CERTIFIED, result, None


def _cmd_verify(args, problem):
    a, b = _matrices(problem)
    tol = problem.tolerances
    opts = problem.options
    if "multiplier" not in opts or "form" not in opts:
        raise SchemaError("verify needs options.multiplier and options.form", path="options")
    mult = multiplier_from_dict(opts["multiplier"])
    rep = separation.verify_multiplier(
        a, b, mult, Form(opts["form"]), epsilon=opts.get("epsilon"), tol=tol
    )
    result = {"report": report_to_dict(rep), "multiplier": multiplier_to_dict(mult)}
    if rep.passed:
        return "certified", EXIT_CERTIFIED, result, None
    return "not-verified", EXIT_UNDECIDED, result, None


def _cmd_destabilize(args, problem):
    a, b = _matrices(problem)
    tol = problem.tolerances
    seed = int(problem.options.get("seed", 0))
    budget = int(problem.options.get("budget", 20000))
    try:
        wit = adversary.destabilize(a, b, args.family, tol=tol, fallback_budget=budget, seed=seed)
    except ConditionHolds as exc:
        return "certified", EXIT_CERTIFIED, {"condition_holds": str(exc)}, None
    except ConstructionFallbackFailed as exc:
        best = witness_to_dict(exc.best_witness) if exc.best_witness is not None else None
        return "undecided", EXIT_UNDECIDED, {"error": str(exc), "best_candidate": best}, None
    return "witness", EXIT_WITNESS, {"witness": witness_to_dict(wit)}, None


def _cmd_falsify(args, problem):
    a, b = _matrices(problem)
    tol = problem.tolerances
    seed = int(problem.options.get("seed", 0))
    budget = int(problem.options.get("budget", 20000))
    wit = adversary.falsify_random(a, b, args.family, budget=budget, seed=seed, tol=tol)
    result = {"witness": witness_to_dict(wit), "budget": budget}
    if wit.valid:
        return "witness", EXIT_WITNESS, result, None
    return "inconclusive", EXIT_UNDECIDED, result, None


def _cert_to_dict(cert):
    eps_per = None
    gsq_per = None
    if cert.data.get("eps") is not None and isinstance(cert.data.get("eps"), list):
        eps_per = [None if e is None else float(e) for e in cert.data["eps"]]
    if cert.data.get("gamma_sq") is not None and isinstance(cert.data.get("gamma_sq"), list):
        gsq_per = [float(v) for v in cert.data["gamma_sq"]]
    jumps = [0.0]
    for i in range(len(cert.multipliers) - 1):
        jumps.append(float(np.linalg.norm(cert.multipliers[i + 1].P - cert.multipliers[i].P, "fro")))
    out = {
        "family": cert.family,
        "passed": bool(cert.passed),
        "omegas": [_omega_token(w) for w in cert.omegas],
        "reports": [report_to_dict(r) for r in cert.reports],
        "multipliers": [multiplier_to_dict(m) for m in cert.multipliers],
        "continuity_max_jump": float(cert.continuity_max_jump),
        "continuity_median_jump": float(cert.continuity_median_jump),
        "continuity_suspect": bool(cert.continuity_suspect),
        "jumps": jumps,
        "eps_per_omega": eps_per,
        "gamma_sq_per_omega": gsq_per,
    }
    for key in ("xi", "gamma_sq", "g_inf", "k_inf", "eps", "eps_min", "signs", "trivial"):
        val = cert.data.get(key)
        if key in ("signs", "trivial") and val is not None:
            out[key] = {("inf" if np.isinf(w) else repr(float(w))): v for w, v in val.items()}
        elif isinstance(val, (int, float, np.floating)) or val is None:
            if val is not None:
                out[key] = float(val)
    return out


def _cmd_lti_sweep(args, problem):
    g, k = _systems(problem)
    tol = problem.tolerances
    grid = problem.grid
    try:
        cert = lti.sweep_certificate(g, k, args.family, grid=grid, tol=tol)
    except (PerFrequencyFailure, XiInconsistent, EndpointInfeasible) as exc:
        detail = {"error": str(exc)}
        if hasattr(exc, "omega"):
            detail["omega"] = _omega_token(exc.omega)
        return "not-robust", EXIT_WITNESS, detail, None
    except PreconditionViolatedAtOmega as exc:
        return "undecided", EXIT_UNDECIDED, {"error": str(exc), "omega": _omega_token(exc.omega)}, None
    result = {"certificate": _cert_to_dict(cert)}
    code = EXIT_CERTIFIED if cert.passed else EXIT_UNDECIDED
    return ("certified" if cert.passed else "undecided"), code, result, None


def _cmd_lti_necessity(args, problem):
    g, k = _systems(problem)
    tol = problem.tolerances
    grid = problem.grid
    try:
        cert = lti.necessity_multiplier(g, k, grid=grid, tol=tol)
    except FeedbackUnstable as exc:
        return "unstable", EXIT_WITNESS, {"error": str(exc)}, None
    except EpsilonUnderflow as exc:
        return "undecided", EXIT_UNDECIDED, {"error": str(exc)}, None
    out = _cert_to_dict(cert)
    out["eps"] = float(cert.data["eps"])
    return "certified", EXIT_CERTIFIED, {"certificate": out}, None


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sp):
    sp.add_argument("problem", help="path to a JSON problem file")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--out", default=None, help="output path (stdout when omitted)")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--budget", type=int, default=None)
    sp.add_argument("--real-mode", action="store_true", default=None)
    sp.add_argument("--grid", default=None, help="frequency grid as POINTS:LO:HI")
    sp.add_argument("--tol-psd", type=float, default=None)
    sp.add_argument("--tol-rank", type=float, default=None)
    sp.add_argument("--tol-det", type=float, default=None)
    sp.add_argument("--tol-cond", type=float, default=None)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="qsep",
        description="Robustness certificates via structured separation multipliers",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("classify", help="sectorial classes, phases, and graph separation")
    _add_common(sp)
    sp.set_defaults(handler=_cmd_classify)

    sp = sub.add_parser("synth", help="construct a structured multiplier certificate")
    sp.add_argument("family", choices=["scaling", "congruence", "rotation", "unitary"])
    _add_common(sp)
    sp.set_defaults(handler=_cmd_synth)

    sp = sub.add_parser("verify", help="verify a supplied multiplier")
    _add_common(sp)
    sp.set_defaults(handler=_cmd_verify)

    sp = sub.add_parser("destabilize", help="construct a destabilizing perturbation")
    sp.add_argument("family", choices=list(adversary.CLASSES))
    _add_common(sp)
    sp.set_defaults(handler=_cmd_destabilize)

    sp = sub.add_parser("falsify", help="randomized perturbation search")
    sp.add_argument("family", choices=list(adversary.CLASSES))
    _add_common(sp)
    sp.set_defaults(handler=_cmd_falsify)

    sp = sub.add_parser("lti-sweep", help="frequency-wise certificate sweep")
    sp.add_argument("family", choices=[f for f in lti.FAMILIES if f != "necessity"])
    _add_common(sp)
    sp.set_defaults(handler=_cmd_lti_sweep)

    sp = sub.add_parser("lti-necessity", help="multiplier implied by closed-loop stability")
    _add_common(sp)
    sp.set_defaults(handler=_cmd_lti_necessity)
    return parser


def _overrides_from_args(args):
    out = {}
    if args.seed is not None:
        out["seed"] = args.seed
    if args.budget is not None:
        out["budget"] = args.budget
    if args.real_mode:
        out["real_mode"] = True
    if args.grid is not None:
        try:
            pts, lo, hi = args.grid.split(":")
            out["grid"] = {"points": int(pts), "lo": float(lo), "hi": float(hi)}
        except ValueError as exc:
            raise SchemaError(f"--grid must be POINTS:LO:HI, got {args.grid!r}") from exc
    tols = {}
    for arg, key in (("tol_psd", "psd_margin"), ("tol_rank", "rank_rel"),
                     ("tol_det", "det_zero_rel"), ("tol_cond", "eig_cond_max")):
        v = getattr(args, arg)
        if v is not None:
            tols[key] = v
    if tols:
        out["tolerances"] = tols
    return out


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args._command_line = args.command + (
        f" {args.family}" if hasattr(args, "family") else ""
    )
    try:
        problem = load_problem(args.problem, _overrides_from_args(args))
        verdict, code, result, note = args.handler(args, problem)
        report = _base_report(args, problem, verdict, code, result, note)
        emit_report(report, fmt=args.format, path=args.out)
        return code
    except (ParseError, SchemaError, DimensionError, IoError, QsepError) as exc:
        err = {
            "tool": "qsep",
            "version": __version__,
            "verdict": "error",
            "exit_code": EXIT_UNDECIDED,
            "error": f"{type(exc).__name__}: {exc}",
        }
        sys.stderr.write(_dump_json(err) + "\n")
        return EXIT_UNDECIDED


if __name__ == "__main__":
    sys.exit(main())
