"""Command-line front end: dispatches problem files to the engines.

Commands
--------
validate   atlas, structure and submanifold consistency checks
tensors    structure tensors of the submanifold (restricted matrices,
           normal transitions, first-order overlap matrices)
h0         degree-zero cohomology of a controlling complex
hyper      graded (single-chart) or window-truncated (atlas) degree-one data
solve      order-by-order family construction
verify     exact re-verification of the family written in the file
match      parameter substitution matching a model family to an observed one
artin      small-extension obstruction report for the selected functor

Exit codes: 0 success, 2 verified mathematical negative (obstructed family,
non-Poisson submanifold, impossible match, failed verification), 1 usage or
parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .artin import artin_first_order, artin_obstruction
from .complexes import (affine_hyper, atlas_hyper_truncated, build_complex,
                        cochain_is_zero, h0_complex)
from .deformation import DeformationState, match_families, run_solver, verify_family
from .dsl import (format_poly, format_polyvector, format_pv_series,
                  format_series, parse)
from .errors import (MatchFailure, NotPoissonSubmanifold, ParseError,
                     ToolkitError)
from .polyvector import schouten

SCHEMA = 1


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="poissondef", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help, files=1):
        p = sub.add_parser(name, help=help)
        if files == 1:
            p.add_argument("file", help="problem file")
        else:
            p.add_argument("model", help="model problem file")
            p.add_argument("observed", help="observed family file")
        p.add_argument("--json", action="store_true", dest="as_json",
                       help="machine-readable report")
        return p

    add("validate", "check atlas, structure and submanifold consistency")
    add("tensors", "print the submanifold structure tensors")

    p = add("h0", "degree-zero cohomology of a controlling complex")
    p.add_argument("--complex", default="normal", dest="complex_kind",
                   choices=("normal", "extended", "linebundle", "bivector"))
    p.add_argument("--weights", help="weight range a..b (single-chart only)")
    p.add_argument("--bound", type=int, help="section degree bound")

    p = add("hyper", "degree-one cohomology data")
    p.add_argument("--complex", default="normal", dest="complex_kind",
                   choices=("normal", "extended", "linebundle", "bivector"))
    p.add_argument("--weights", help="weight range a..b (single-chart only)")
    p.add_argument("--bound", type=int, default=4,
                   help="Laurent window bound for the atlas estimate")

    p = add("solve", "construct a family order by order")
    p.add_argument("--order", type=int, help="target order override")
    p.add_argument("--degree", type=int, help="degree bound override")
    p.add_argument("--mode", choices=("fixed", "extended", "prescribed"),
                   help="mode override")
    p.add_argument("--seed", help="comma-separated degree-zero basis indices")
    p.add_argument("--bound", type=int, help="section degree bound override")

    p = add("verify", "re-verify the family written in the file")
    p.add_argument("--order", type=int, help="verification order override")

    p = add("match", "match a model family to an observed one", files=2)
    p.add_argument("--order", type=int, help="matching order override")
    p.add_argument("--seed", help="comma-separated degree-zero basis indices "
                                  "for the model solve")

    p = add("artin", "small-extension obstruction report")
    p.add_argument("--functor", choices=("def", "hilb", "exthilb"),
                   help="functor override (defaults to the file's artin "
                        "statement)")
    p.add_argument("--order", type=int, default=0,
                   help="extension step: class at the next order")
    p.add_argument("--bound", type=int, default=3,
                   help="degree bound for sections and lifts")
    return parser


# ----------------------------------------------------------------------
# Report plumbing
# ----------------------------------------------------------------------

def _human_lines(obj, indent=0):
    lines = []
    pad = " " * indent
    if isinstance(obj, dict):
        for k, v in obj.items():
            if isinstance(v, (dict, list)) and v:
                lines.append(f"{pad}{k}:")
                lines.extend(_human_lines(v, indent + 2))
            else:
                lines.append(f"{pad}{k}: {_scalar(v)}")
    elif isinstance(obj, list):
        for v in obj:
            if isinstance(v, (dict, list)):
                lines.append(f"{pad}-")
                lines.extend(_human_lines(v, indent + 2))
            else:
                lines.append(f"{pad}- {_scalar(v)}")
    else:
        lines.append(f"{pad}{_scalar(obj)}")
    return lines


def _scalar(v):
    if isinstance(v, bool):
        return "yes" if v else "no"
    if v is None:
        return "-"
    if isinstance(v, (list, dict)) and not v:
        return "[]" if isinstance(v, list) else "{}"
    return str(v)


def _emit(report: dict, as_json: bool) -> str:
    if as_json:
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    return "\n".join(_human_lines(report)) + "\n"


def _mono_name(params, exps) -> str:
    parts = []
    for p, e in zip(params, exps):
        if e == 1:
            parts.append(p)
        elif e:
            parts.append(f"{p}^{e}")
    return "*".join(parts) or "1"


def _render_cochain(c) -> dict:
    out = {}
    if "nor" in c:
        out["normal"] = {
            name: [format_polyvector(pv) for pv in tup]
            for name, tup in sorted(c["nor"].items())}
    if "amb" in c:
        out["ambient"] = {name: format_polyvector(pv)
                          for name, pv in sorted(c["amb"].items())}
    for key in sorted(c):
        if key not in ("nor", "amb"):
            out[key] = str(c[key])
    return out


def _render_cocycle(cocycle, params) -> dict:
    psi = {}
    for (i, k), rows in sorted(cocycle.psi.items()):
        psi[f"{i}|{k}"] = {
            _mono_name(params, texp): [format_poly(p) for p in tup]
            for texp, tup in sorted(rows.items())}
    G = {}
    for name, rows in sorted(cocycle.G.items()):
        G[name] = {_mono_name(params, texp): [format_polyvector(v)
                                              for v in tup]
                   for texp, tup in sorted(rows.items())}
    out = {"order": cocycle.order, "mode": cocycle.mode,
           "overlap_part": psi, "tangent_part": G}
    if cocycle.Pi:
        out["ambient_part"] = {
            name: {_mono_name(params, texp): format_polyvector(v)
                   for texp, v in sorted(rows.items())}
            for name, rows in sorted(cocycle.Pi.items())}
    return out


def _param_series(ser) -> str:
    """Render a series whose coefficients are plain rationals."""
    parts = []
    for pe in sorted(ser.terms):
        c = ser.terms[pe]
        if not c:
            continue
        mono = _mono_name(ser.params, pe)
        if mono == "1":
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append(f"-{mono}")
        else:
            parts.append(f"{c}*{mono}")
    out = ""
    for piece in parts:
        if not out:
            out = piece
        elif piece.startswith("-"):
            out += " - " + piece[1:]
        else:
            out += " + " + piece
    return out or "0"


def _parse_weights(text: str):
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise _UsageError(f"bad weight range {text!r}; expected a..b")
    if hi < lo:
        raise _UsageError(f"empty weight range {text!r}")
    return list(range(lo, hi + 1))


def _parse_seed(text: str):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise _UsageError(f"bad seed {text!r}; expected comma-separated "
                          "integers")


def _load(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as e:
        raise _UsageError(f"cannot read {path}: {e.strerror}")
    return parse(text)


def _descriptor(doc, kind):
    if kind in ("normal", "extended"):
        return build_complex(kind, submanifold=doc.submanifold(), probe=False)
    if kind == "bivector":
        return build_complex("bivector", manifold=doc.manifold(), probe=False)
    raise _UsageError("the problem-file format does not carry line-bundle "
                      "data; build that complex through the library")


def _report_header(command: str, doc) -> dict:
    rep = {"schema": SCHEMA, "command": command}
    if doc is not None and doc.name:
        rep["manifold"] = doc.name
    return rep


def _warn_list(doc):
    return [f"line {ln}, column {col}: {msg}" for ln, col, msg in doc.warnings]


# ----------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------

def _cmd_validate(args):
    doc = _load(args.file)
    rep = _report_header("validate", doc)
    if doc.warnings:
        rep["warnings"] = _warn_list(doc)
    ok = True
    space = doc.space
    atlas = space.validate()
    rep["atlas"] = {"inverses": atlas["inverses"], "cocycles": atlas["cocycles"]}
    ok &= atlas["pass"]
    man = doc.manifold()
    jacobi = {}
    for name in space.chart_names:
        b = man.bivector(name)
        jacobi[name] = schouten(b, b).is_zero()
        ok &= jacobi[name]
    rep["jacobi"] = jacobi
    gluing = {}
    for (i, k) in space.overlap_pairs():
        same = (space.pushforward(man.bivector(i), i, k)
                - man.bivector(k)).is_zero()
        gluing[f"{i}|{k}"] = same
        ok &= same
    rep["structure_gluing"] = gluing
    if doc.normal_spec:
        try:
            doc.submanifold()
            rep["submanifold"] = "poisson"
        except NotPoissonSubmanifold as e:
            rep["submanifold"] = "not-poisson"
            rep["submanifold_error"] = str(e)
            ok = False
    rep["pass"] = ok
    return rep, (0 if ok else 2)


def _cmd_tensors(args):
    doc = _load(args.file)
    S = doc.submanifold()
    rep = _report_header("tensors", doc)
    rep["codimension"] = S.codim
    charts = {}
    for name in S.present_charts():
        charts[name] = {
            "normal": list(S.normal[name]),
            "structure_fields": [[format_polyvector(v) for v in row]
                                 for row in S.structure_fields_restricted(name)],
        }
    rep["charts"] = charts
    overlaps = {}
    for (i, k) in S.space.overlap_pairs():
        if S.normal.get(i) is None or S.normal.get(k) is None:
            continue
        overlaps[f"{i}|{k}"] = {
            "normal_transition": [format_poly(S.normal_transition(i, k, a))
                                  for a in range(S.codim)],
            "first_order": [[format_poly(e) for e in row]
                            for row in S.first_order[(i, k)]],
        }
    rep["overlaps"] = overlaps
    return rep, 0


def _cmd_h0(args):
    doc = _load(args.file)
    desc = _descriptor(doc, args.complex_kind)
    rep = _report_header("h0", doc)
    rep["complex"] = args.complex_kind
    if args.weights is not None:
        weights = _parse_weights(args.weights)
        report = affine_hyper(desc, weights, degrees=(0,))
        rep["engine"] = report.engine
        rep["weights"] = {str(w): report.weights["H0"][w] for w in weights}
        rep["dimensions"] = [report.weights["H0"][w] for w in weights]
        rep["dimension"] = report.dimension
        rep["basis"] = {str(w): [_render_cochain(c) for c in report.basis[w]]
                        for w in weights}
        if report.notes:
            rep["notes"] = list(report.notes)
        return rep, 0
    report = h0_complex(desc, args.bound)
    rep["engine"] = report.engine
    rep["dimension"] = report.dimension
    rep["degree_bound"] = report.degree_bound
    rep["stable"] = report.stable
    rep["section_dimension"] = report.section_dimension
    rep["basis"] = [_render_cochain(c) for c in report.basis]
    return rep, 0


def _cmd_hyper(args):
    doc = _load(args.file)
    desc = _descriptor(doc, args.complex_kind)
    rep = _report_header("hyper", doc)
    rep["complex"] = args.complex_kind
    if not doc.space.transitions:
        if args.weights is None:
            raise _UsageError("single-chart spaces need --weights a..b")
        weights = _parse_weights(args.weights)
        report = affine_hyper(desc, weights, degrees=(0, 1))
        rep["engine"] = report.engine
        rep["h0"] = {str(w): report.weights["H0"][w] for w in weights}
        rep["h1"] = {str(w): report.weights["H1"][w] for w in weights}
        if report.notes:
            rep["notes"] = list(report.notes)
        return rep, 0
    report = atlas_hyper_truncated(desc, args.bound)
    rep["engine"] = report.engine
    rep["h1_estimate"] = report.dimension
    rep["window_bound"] = report.degree_bound
    rep["truncated"] = report.truncated
    rep["notes"] = list(report.notes)
    return rep, 0


def _family_report(state) -> dict:
    S = state.problem.submanifold
    fam = {}
    for name in sorted(state.phi):
        cvars = S.space.chart(name).vars
        fam[name] = {w: format_series(ser, cvars)
                     for w, ser in zip(S.normal[name], state.phi[name])}
    return fam


def _lambda_report(state) -> dict:
    space = state.problem.space
    return {name: format_pv_series(state.lam[name], space.chart(name).vars,
                                   state.params)
            for name in space.chart_names}


def _cmd_solve(args):
    doc = _load(args.file)
    seed = _parse_seed(args.seed) if args.seed else None
    prob = doc.problem(order=args.order, degree=args.degree, mode=args.mode,
                       seed=seed, bound=args.bound)
    res = run_solver(prob)
    rep = _report_header("solve", doc)
    rep["mode"] = prob.mode
    rep["order"] = prob.order
    rep["degree"] = prob.degree
    if res.h0 is not None:
        rep["first_order_dimension"] = res.h0.dimension
    rep["parameters"] = list(prob.params)
    if res.ok:
        rep["family"] = _family_report(res.state)
        if prob.mode != "fixed":
            rep["lambda"] = _lambda_report(res.state)
        rep["verify"] = res.verify
        rep["characteristic_map_identity"] = res.char_map_identity
        rep["pass"] = True
        return rep, 0
    obs = res.obstructed
    rep["pass"] = False
    rep["obstructed"] = {
        "order": obs.order,
        "witness": obs.witness,
        "tested_degree_bounds": {str(d): str(v) for d, v in
                                 sorted(obs.tested_degrees.items())},
    }
    rep["cocycle"] = _render_cocycle(obs.cocycle, prob.params)
    return rep, 2


def _cmd_verify(args):
    doc = _load(args.file)
    prob = doc.problem(order=args.order)
    fam = doc.family_state(prob)
    report = verify_family(prob, fam, args.order)
    rep = _report_header("verify", doc)
    rep["order"] = report["order"]
    for key in ("gluing", "ideal", "lambda_gluing", "jacobi"):
        if report[key]:
            rep[key] = dict(sorted(report[key].items()))
    rep["pass"] = report["pass"]
    return rep, (0 if report["pass"] else 2)


def _cmd_match(args):
    doc_model = _load(args.model)
    doc_obs = _load(args.observed)
    seed = _parse_seed(args.seed) if args.seed else None
    prob = doc_model.problem(seed=seed)
    if doc_model.family or doc_model.lam:
        model_state = doc_model.family_state(prob)
    else:
        res = run_solver(prob)
        if not res.ok:
            rep = _report_header("match", doc_model)
            rep["pass"] = False
            rep["obstructed"] = {"order": res.obstructed.order,
                                 "witness": res.obstructed.witness}
            return rep, 2
        model_state = res.state
    obs_prob = doc_obs.problem()
    observed = doc_obs.family_state(obs_prob)
    rep = _report_header("match", doc_model)
    rep["model_parameters"] = list(prob.params)
    rep["observed_parameters"] = list(obs_prob.params)
    try:
        h, mrep = match_families(prob, model_state, observed,
                                 order=args.order)
    except MatchFailure as e:
        rep["pass"] = False
        rep["reason"] = e.reason
        rep["message"] = str(e)
        if e.residual is not None:
            rep["residual_zero"] = cochain_is_zero(e.residual)
        return rep, 2
    rep["substitution"] = {prob.params[j]: _param_series(h[j])
                           for j in range(len(prob.params))}
    rep["orders"] = {str(k): str(v) for k, v in sorted(mrep["orders"].items())}
    rep["pass"] = True
    return rep, 0


def _render_class(cls) -> dict:
    out = {"order": cls.order, "zero": cls.is_zero()}
    if cls.ambient is not None:
        out["ambient"] = {name: format_polyvector(v)
                          for name, v in sorted(cls.ambient.items())}
    if cls.normal is not None:
        out["normal"] = {name: [format_polyvector(v) for v in tup]
                         for name, tup in sorted(cls.normal.items())}
    if cls.ambient_cech is not None:
        out["ambient_cech"] = {f"{i}|{k}": format_polyvector(v)
                               for (i, k), v in sorted(cls.ambient_cech.items())}
    if cls.normal_cech is not None:
        out["normal_cech"] = {f"{i}|{k}": [format_poly(p) for p in tup]
                              for (i, k), tup in sorted(cls.normal_cech.items())}
    return out


def _cmd_artin(args):
    doc = _load(args.file)
    kind = args.functor or doc.artin
    if kind is None:
        raise _UsageError("no functor: add an `artin` statement to the file "
                          "or pass --functor")
    man = doc.manifold()
    sub = doc.submanifold() if doc.normal_spec else None
    if kind in ("hilb", "exthilb") and sub is None:
        raise _UsageError(f"functor {kind!r} needs a submanifold statement")
    rep = _report_header("artin", doc)
    rep["functor"] = kind
    fo = artin_first_order(kind, manifold=man, submanifold=sub,
                           bound=args.bound)
    rep["first_order_dimension"] = fo.dimension
    if not (doc.family or doc.lam):
        rep["pass"] = True
        return rep, 0
    if kind == "def":
        report = artin_obstruction(kind, manifold=man,
                                   lam=doc.lambda_family(),
                                   order=args.order, bound=args.bound)
    else:
        prob = doc.problem()
        fam = doc.family_state(prob)
        state = DeformationState(prob, args.order, fam.phi, fam.lam)
        report = artin_obstruction(kind, state=state, bound=args.bound)
    rep["order"] = report.order
    rep["class"] = _render_class(report.cls)
    rep["certificates"] = dict(sorted(report.certificates.items()))
    rep["liftable"] = report.liftable
    if report.witness:
        rep["witness"] = report.witness
    rep["pass"] = report.liftable
    return rep, (0 if report.liftable else 2)


_COMMANDS = {
    "validate": _cmd_validate,
    "tensors": _cmd_tensors,
    "h0": _cmd_h0,
    "hyper": _cmd_hyper,
    "solve": _cmd_solve,
    "verify": _cmd_verify,
    "match": _cmd_match,
    "artin": _cmd_artin,
}


def run_command(argv) -> tuple[int, str]:
    """Run one command; returns (exit code, report text)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as e:
        return 1, f"usage error: {e}\n"
    try:
        rep, code = _COMMANDS[args.command](args)
    except _UsageError as e:
        return 1, f"usage error: {e}\n"
    except ParseError as e:
        return 1, f"parse error: {e}\n"
    except NotPoissonSubmanifold as e:
        rep = {"schema": SCHEMA, "command": args.command,
               "error": "not-poisson-submanifold", "message": str(e),
               "pass": False}
        return 2, _emit(rep, args.as_json)
    except ToolkitError as e:
        return 1, f"error: {type(e).__name__}: {e}\n"
    return code, _emit(rep, args.as_json)


def main(argv=None) -> int:
    code, text = run_command(sys.argv[1:] if argv is None else argv)
    out = sys.stdout if code == 0 else sys.stderr
    out.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
