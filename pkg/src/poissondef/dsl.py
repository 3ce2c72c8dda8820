"""Problem-file language: a small text format describing an atlas, a Poisson
structure, a submanifold, deformation parameters, and optional families.

Statements end with ``;`` and ``#`` starts a line comment:

* ``manifold <name>;`` — label for reports;
* ``builtin <Name>(args);`` — stock atlas (``P1``/``P2``/``P3``/``Pn(n)``/
  ``Fm(m)``/``Affine(n)``);
* ``chart <id> vars v1 v2 ...;`` and
  ``transition <i> -> <k>: v = <expr>, ...;`` — explicit atlases;
* ``poisson on <chart>: <bivector-expr>;`` — structure seed, propagated to
  the other charts;
* ``submanifold normal <chart>: [v, ...] | absent;``
* ``params t1 ... tl order <M> degree <D>;``
* ``mode fixed|extended|prescribed;``
* ``family <chart>: v = <series-expr>, ...;`` — normal-variable motions;
* ``lambda <chart>: <series-bivector-expr>;`` — ambient bivector family
  (charts without a statement receive the pushforward of the first one);
* ``artin def|hilb|exthilb;`` — functor selector for obstruction reports.

Scalar expressions use rationals, chart variables, parameters and
``+ - * ^`` with integer (possibly negative) exponents; bivector terms
multiply a scalar prefix into a wedge of frame atoms written ``d/v ^ d/w``.
A degenerate wedge collapses to zero with a recorded warning. Parsing is
position-annotated; a second pass rejects unknown variables and series terms
beyond the declared order. ``render`` prints the canonical form, and
parse-render round trips are the identity on it.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InconsistentData, ParseError
from .geometry import (ABSENT, Chart, ChartedSpace, PoissonManifold,
                       builtin_space, extract_submanifold)
from .polyvector import Polyvector
from .symbolic import LaurentPoly, TruncatedSeries

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<frame>d/[A-Za-z_][A-Za-z0-9_]*)
  | (?P<rational>\d+/\d+)
  | (?P<number>\d+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<arrow>->)
  | (?P<sym>[;:,=^*+\-()\[\]])
""", re.VERBOSE)


@dataclass
class _Token:
    kind: str
    value: str
    line: int
    col: int


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        value = m.group()
        if kind not in ("ws", "comment"):
            tokens.append(_Token(kind, value, line, col))
        newlines = value.count("\n")
        if newlines:
            line += newlines
            col = len(value) - value.rfind("\n")
        else:
            col += len(value)
        pos = m.end()
    tokens.append(_Token("eof", "", line, col))
    return tokens


# ----------------------------------------------------------------------
# Document object
# ----------------------------------------------------------------------

@dataclass
class ProblemFile:
    """Parsed problem description plus builders for the engine objects."""
    name: str | None = None
    builtin: tuple | None = None           # (name, args)
    charts: list = field(default_factory=list)          # Chart, declared order
    transitions: dict = field(default_factory=dict)     # (i, k) -> {v: LP}
    poisson: dict = field(default_factory=dict)         # chart -> Polyvector
    normal_spec: dict = field(default_factory=dict)     # chart -> list | ABSENT
    params: tuple = ()
    order: int | None = None
    degree: int | None = None
    mode: str = "fixed"
    family: dict = field(default_factory=dict)          # chart -> {v: TS}
    lam: dict = field(default_factory=dict)             # chart -> TS(Polyvector)
    artin: str | None = None
    warnings: list = field(default_factory=list)

    _space: ChartedSpace | None = None

    # ---- engine builders ----------------------------------------------
    @property
    def space(self) -> ChartedSpace:
        if self._space is None:
            if self.builtin is not None:
                self._space = builtin_space(*self.builtin)
            else:
                self._space = ChartedSpace(self.name or "space", self.charts,
                                           self.transitions)
        return self._space

    def manifold(self) -> PoissonManifold:
        if not self.poisson:
            return PoissonManifold(self.space, {})
        return PoissonManifold.from_chart_data(self.space, dict(self.poisson))

    def submanifold(self, verify: bool = True):
        if not self.normal_spec:
            raise InconsistentData("problem file declares no submanifold")
        spec = {}
        for name in self.space.chart_names:
            if name not in self.normal_spec:
                raise InconsistentData(
                    f"no submanifold statement for chart {name}")
            spec[name] = self.normal_spec[name]
        return extract_submanifold(self.manifold(), spec, verify=verify)

    def lambda_family(self, cutoff: int | None = None) -> dict:
        """Per-chart ambient family; charts without a statement receive the
        pushforward of the first declared one."""
        space = self.space
        if not self.lam:
            raise InconsistentData("problem file declares no ambient family")
        cutoff = self.order if cutoff is None else cutoff
        out = {}
        seed = next(iter(self.lam))
        for name in space.chart_names:
            if name in self.lam:
                out[name] = TruncatedSeries(
                    self.params, cutoff,
                    {e: c for e, c in self.lam[name].terms.items()
                     if sum(e) <= cutoff})
            else:
                out[name] = self.lam[seed].map(
                    lambda pv: space.pushforward(pv, seed, name)).truncate(
                        cutoff)
                out[name] = TruncatedSeries(self.params, cutoff,
                                            dict(out[name].terms))
        return out

    def family_state(self, problem):
        """Deformation state built from the family/lambda statements."""
        from .deformation import DeformationState
        S = problem.submanifold
        M = problem.order
        phi = {}
        for name in S.present_charts():
            rows = []
            given = self.family.get(name, {})
            for v in S.normal[name]:
                ser = given.get(v)
                if ser is None:
                    rows.append(TruncatedSeries.zero(self.params, M))
                else:
                    rows.append(TruncatedSeries(
                        self.params, M,
                        {e: c for e, c in ser.terms.items() if sum(e) <= M}))
            phi[name] = rows
        if self.lam:
            lam = self.lambda_family(M)
        else:
            man = problem.submanifold.manifold
            lam = {name: TruncatedSeries.const(self.params, M,
                                               man.bivector(name))
                   for name in self.space.chart_names}
        order = 0
        nonzero = [s.min_order() for rows in phi.values() for s in rows
                   if s.min_order() is not None]
        if nonzero or self.lam:
            order = M
        return DeformationState(problem, order, phi, lam)

    def problem(self, *, order=None, degree=None, mode=None, seed=None,
                directions=None, bound=None):
        from .deformation import DeformationProblem
        use_mode = mode or self.mode
        prescribed = None
        if use_mode == "prescribed":
            prescribed = self.lambda_family(order or self.order)
        return DeformationProblem(
            self.submanifold(), self.params,
            order if order is not None else self.order,
            degree if degree is not None else self.degree,
            mode=use_mode, prescribed=prescribed, seed=seed,
            directions=directions, bound=bound)


# ----------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0
        self.doc = ProblemFile()

    # ---- token plumbing ----------------------------------------------
    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> _Token:
        tok = self.next()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value or kind
            raise ParseError(f"expected {want!r}, found {tok.value!r}",
                             tok.line, tok.col)
        return tok

    def expect_name(self, value: str | None = None) -> _Token:
        return self.expect("name", value)

    def at_sym(self, value: str) -> bool:
        tok = self.peek()
        return tok.kind == "sym" and tok.value == value

    def eat_sym(self, value: str) -> bool:
        if self.at_sym(value):
            self.next()
            return True
        return False

    # ---- statement dispatch ------------------------------------------
    def parse_document(self) -> ProblemFile:
        while self.peek().kind != "eof":
            tok = self.expect("name")
            handler = getattr(self, f"_stmt_{tok.value}", None)
            if handler is None:
                raise ParseError(f"unknown statement {tok.value!r}",
                                 tok.line, tok.col)
            handler()
            self.expect("sym", ";")
        return self.doc

    # ---- statements ---------------------------------------------------
    def _stmt_manifold(self):
        self.doc.name = self.expect("name").value

    def _stmt_builtin(self):
        tok = self.expect("name")
        args = []
        if self.eat_sym("("):
            while not self.at_sym(")"):
                arg = self.next()
                if arg.kind == "number":
                    args.append(int(arg.value))
                elif arg.kind == "name":
                    args.append(arg.value)
                else:
                    raise ParseError("bad builtin argument",
                                     arg.line, arg.col)
                if not self.at_sym(")"):
                    self.expect("sym", ",")
            self.next()
        self.doc.builtin = (tok.value, tuple(args))

    def _stmt_chart(self):
        name = self.expect("name").value
        self.expect_name("vars")
        vars = []
        while self.peek().kind == "name":
            vars.append(self.next().value)
        if not vars:
            tok = self.peek()
            raise ParseError("chart needs at least one variable",
                             tok.line, tok.col)
        self.doc.charts.append(Chart(name, tuple(vars)))

    def _chart_vars(self, name: str, tok: _Token):
        try:
            return self.doc.space.chart(name).vars
        except Exception:
            raise ParseError(f"unknown chart {name!r}", tok.line, tok.col)

    def _stmt_transition(self):
        if self.doc.builtin is not None:
            tok = self.peek()
            raise ParseError("builtin atlases carry their own transitions",
                             tok.line, tok.col)
        i = self.expect("name").value
        self.expect("arrow")
        k = self.expect("name").value
        self.expect("sym", ":")
        by_name = {c.name: c for c in self.doc.charts}
        if i not in by_name or k not in by_name:
            tok = self.peek()
            raise ParseError(f"transition between undeclared charts "
                             f"{i!r}, {k!r}", tok.line, tok.col)
        tmap = {}
        while True:
            v = self.expect("name")
            if v.value not in by_name[i].vars:
                raise ParseError(f"{v.value!r} is not a variable of chart "
                                 f"{i!r}", v.line, v.col)
            self.expect("sym", "=")
            tmap[v.value] = self._scalar_expr(by_name[k].vars)
            if not self.eat_sym(","):
                break
        self.doc.transitions[(i, k)] = tmap

    def _stmt_poisson(self):
        self.expect_name("on")
        tok = self.expect("name")
        cvars = self._chart_vars(tok.value, tok)
        self.expect("sym", ":")
        pv = self._polyvector_expr(cvars, degree=2)
        self.doc.poisson[tok.value] = pv

    def _stmt_submanifold(self):
        self.expect_name("normal")
        tok = self.expect("name")
        cvars = self._chart_vars(tok.value, tok)
        self.expect("sym", ":")
        if self.peek().kind == "name" and self.peek().value == "absent":
            self.next()
            self.doc.normal_spec[tok.value] = ABSENT
            return
        self.expect("sym", "[")
        names = []
        while not self.at_sym("]"):
            v = self.expect("name")
            if v.value not in cvars:
                raise ParseError(f"{v.value!r} is not a variable of chart "
                                 f"{tok.value!r}", v.line, v.col)
            names.append(v.value)
            if not self.at_sym("]"):
                self.expect("sym", ",")
        self.next()
        self.doc.normal_spec[tok.value] = names

    def _stmt_params(self):
        names = []
        while self.peek().kind == "name" and self.peek().value != "order":
            names.append(self.next().value)
        if not names:
            tok = self.peek()
            raise ParseError("params needs at least one name",
                             tok.line, tok.col)
        self.expect_name("order")
        self.doc.order = int(self.expect("number").value)
        self.expect_name("degree")
        self.doc.degree = int(self.expect("number").value)
        self.doc.params = tuple(names)

    def _stmt_mode(self):
        tok = self.expect("name")
        if tok.value not in ("fixed", "extended", "prescribed"):
            raise ParseError(f"unknown mode {tok.value!r}", tok.line, tok.col)
        self.doc.mode = tok.value

    def _stmt_family(self):
        tok = self.expect("name")
        cvars = self._chart_vars(tok.value, tok)
        self.expect("sym", ":")
        block = self.doc.family.setdefault(tok.value, {})
        while True:
            v = self.expect("name")
            if v.value not in cvars:
                raise ParseError(f"{v.value!r} is not a variable of chart "
                                 f"{tok.value!r}", v.line, v.col)
            self.expect("sym", "=")
            block[v.value] = self._series_expr(cvars, v)
            if not self.eat_sym(","):
                break

    def _stmt_lambda(self):
        tok = self.expect("name")
        cvars = self._chart_vars(tok.value, tok)
        self.expect("sym", ":")
        self.doc.lam[tok.value] = self._series_polyvector(cvars, tok,
                                                          degree=2)

    def _stmt_artin(self):
        tok = self.expect("name")
        if tok.value not in ("def", "hilb", "exthilb"):
            raise ParseError(f"unknown functor {tok.value!r}",
                             tok.line, tok.col)
        self.doc.artin = tok.value

    # ---- expressions --------------------------------------------------
    def _scalar_expr(self, cvars, extra=()) -> LaurentPoly:
        allvars = tuple(cvars) + tuple(extra)
        value = self._sum(allvars)
        return value

    def _sum(self, allvars) -> LaurentPoly:
        value = self._term(allvars)
        while self.at_sym("+") or self.at_sym("-"):
            op = self.next().value
            rhs = self._term(allvars)
            value = value + rhs if op == "+" else value - rhs
        return value

    def _term(self, allvars) -> LaurentPoly:
        value = self._factor(allvars)
        while self.at_sym("*"):
            self.next()
            value = value * self._factor(allvars)
        return value

    def _factor(self, allvars) -> LaurentPoly:
        if self.eat_sym("-"):
            return -self._factor(allvars)
        base = self._primary(allvars)
        if self.at_sym("^"):
            self.next()
            neg = self.eat_sym("-")
            tok = self.expect("number")
            power = int(tok.value)
            if neg:
                power = -power
            base = self._power(base, power, tok)
        return base

    def _primary(self, allvars) -> LaurentPoly:
        tok = self.next()
        if tok.kind == "number":
            return LaurentPoly.const(allvars, Fraction(int(tok.value)))
        if tok.kind == "rational":
            num, den = tok.value.split("/")
            return LaurentPoly.const(allvars, Fraction(int(num), int(den)))
        if tok.kind == "name":
            if tok.value not in allvars:
                raise ParseError(f"unknown variable {tok.value!r}",
                                 tok.line, tok.col)
            return LaurentPoly.variable(allvars, tok.value)
        if tok.kind == "sym" and tok.value == "(":
            value = self._sum(allvars)
            self.expect("sym", ")")
            return value
        raise ParseError(f"unexpected token {tok.value!r}", tok.line, tok.col)

    @staticmethod
    def _power(base: LaurentPoly, power: int, tok: _Token) -> LaurentPoly:
        if power >= 0:
            out = LaurentPoly.const(base.vars, 1)
            for _ in range(power):
                out = out * base
            return out
        if not base.is_monomial_unit():
            raise ParseError("negative power of a non-monomial",
                             tok.line, tok.col)
        inv = base.inverse()
        out = LaurentPoly.const(base.vars, 1)
        for _ in range(-power):
            out = out * inv
        return out

    def _polyvector_expr(self, cvars, degree: int,
                         extra=()) -> "object":
        """Sum of terms `scalar-prefix * d/v ^ d/w ...`; returns a LaurentPoly
        tagged mapping frame-index tuples when extra parameters are present,
        else a Polyvector. Internally accumulates (frame -> LP over
        cvars+extra)."""
        allvars = tuple(cvars) + tuple(extra)
        acc: dict = {}
        first = True
        while True:
            sign = Fraction(1)
            if self.at_sym("-"):
                self.next()
                sign = Fraction(-1)
            elif self.at_sym("+"):
                self.next()
            elif not first:
                break
            first = False
            coeff, frame = self._pv_term(allvars, degree)
            coeff = coeff * LaurentPoly.const(allvars, sign)
            if frame is None:
                continue
            if frame in acc:
                acc[frame] = acc[frame] + coeff
            else:
                acc[frame] = coeff
            if not (self.at_sym("+") or self.at_sym("-")):
                break
        return self._assemble_pv(acc, cvars, extra, degree)

    def _pv_term(self, allvars, degree: int):
        """One bivector term: scalar factors then a frame block."""
        coeff = LaurentPoly.const(allvars, 1)
        while self.peek().kind != "frame":
            coeff = coeff * self._factor(allvars)
            if self.at_sym("*"):
                self.next()
                continue
            break
        tok = self.peek()
        if tok.kind != "frame":
            raise ParseError("bivector term needs frame factors d/<var>",
                             tok.line, tok.col)
        frames = []
        while self.peek().kind == "frame":
            ftok = self.next()
            frames.append((ftok.value[2:], ftok))
            if self.at_sym("^"):
                nxt = self.tokens[self.i + 1]
                if nxt.kind == "frame":
                    self.next()
                    continue
            break
        if len(frames) != degree:
            raise ParseError(f"expected a wedge of {degree} frames",
                             frames[-1][1].line, frames[-1][1].col)
        names = [f[0] for f in frames]
        for vname, ftok in frames:
            if vname not in allvars:
                raise ParseError(f"unknown variable {vname!r}",
                                 ftok.line, ftok.col)
        if len(set(names)) != len(names):
            ftok = frames[0][1]
            self.doc.warnings.append(
                (ftok.line, ftok.col,
                 f"degenerate wedge {' ^ '.join('d/' + n for n in names)} "
                 "collapses to zero"))
            return LaurentPoly.zero(allvars), None
        return coeff, tuple(names)

    def _assemble_pv(self, acc, cvars, extra, degree):
        cvars = tuple(cvars)
        allvars = cvars + tuple(extra)
        terms = {}
        for names, coeff in acc.items():
            idx = []
            sign = 1
            pairs = sorted(range(len(names)), key=lambda j: cvars.index(names[j]))
            # parity of the sorting permutation
            perm = list(pairs)
            visited = [False] * len(perm)
            for s in range(len(perm)):
                if visited[s]:
                    continue
                length = 0
                j = s
                while not visited[j]:
                    visited[j] = True
                    j = perm[j]
                    length += 1
                if length % 2 == 0:
                    sign = -sign
            idx = tuple(cvars.index(names[j]) for j in pairs)
            signed = coeff * LaurentPoly.const(allvars, Fraction(sign))
            if idx in terms:
                terms[idx] = terms[idx] + signed
            else:
                terms[idx] = signed
        return _PVAccum(cvars, tuple(extra), degree, terms)

    def _series_expr(self, cvars, where: _Token) -> TruncatedSeries:
        if not self.doc.params:
            raise ParseError("family statements need a params statement "
                             "first", where.line, where.col)
        lp = self._scalar_expr(cvars, extra=self.doc.params)
        return self._split_series(lp, cvars, where)

    def _split_series(self, lp: LaurentPoly, cvars, where: _Token,
                      carrier=None) -> TruncatedSeries:
        params = self.doc.params
        M = self.doc.order
        cvars = tuple(cvars)
        n = len(cvars)
        terms: dict = {}
        for e, c in lp.terms.items():
            ce, pe = e[:n], e[n:]
            if any(p < 0 for p in pe):
                raise ParseError("negative parameter exponent",
                                 where.line, where.col)
            if sum(pe) > M:
                raise ParseError(f"series term of degree {sum(pe)} exceeds "
                                 f"the declared order {M}",
                                 where.line, where.col)
            base = terms.setdefault(tuple(pe), {})
            base[ce] = base.get(ce, Fraction(0)) + c
        out = {}
        for pe, mono in terms.items():
            poly = LaurentPoly(cvars, mono)
            if not poly.is_zero():
                out[pe] = poly
        return TruncatedSeries(params, M, out)

    def _series_polyvector(self, cvars, where: _Token,
                           degree: int) -> TruncatedSeries:
        if not self.doc.params:
            raise ParseError("lambda statements need a params statement "
                             "first", where.line, where.col)
        accum = self._polyvector_expr(cvars, degree, extra=self.doc.params)
        params = self.doc.params
        M = self.doc.order
        cvars = tuple(cvars)
        series_terms: dict = {}
        for idx, lp in accum.terms.items():
            ser = self._split_series(lp, cvars, where)
            for pe, poly in ser.terms.items():
                pvterms = series_terms.setdefault(pe, {})
                pvterms[idx] = poly
        out = {}
        for pe, pvterms in series_terms.items():
            pv = Polyvector(cvars, degree, pvterms)
            if not pv.is_zero():
                out[pe] = pv
        return TruncatedSeries(params, M, out)


@dataclass
class _PVAccum:
    """Polyvector whose coefficients may still involve parameters."""
    cvars: tuple
    extra: tuple
    degree: int
    terms: dict       # index tuple -> LaurentPoly over cvars+extra

    def as_polyvector(self) -> Polyvector:
        out = {}
        n = len(self.cvars)
        for idx, lp in self.terms.items():
            mono = {}
            for e, c in lp.terms.items():
                if any(p != 0 for p in e[n:]):
                    raise InconsistentData(
                        "parameters are not allowed in this expression")
                mono[e[:n]] = c
            poly = LaurentPoly(self.cvars, mono)
            if not poly.is_zero():
                out[idx] = poly
        return Polyvector(self.cvars, self.degree, out)


def parse(text: str) -> ProblemFile:
    """Parse problem-file text; raises ParseError with position data."""
    parser = _Parser(text)
    doc = parser.parse_document()
    # poisson statements carry no parameters: collapse accumulators
    doc.poisson = {name: acc.as_polyvector() if isinstance(acc, _PVAccum)
                   else acc for name, acc in doc.poisson.items()}
    _validate_semantics(doc)
    return doc


def _validate_semantics(doc: ProblemFile):
    if doc.builtin is None and not doc.charts:
        if doc.poisson or doc.normal_spec or doc.family:
            raise ParseError("no atlas declared")
        return
    space = doc.space
    for name in doc.normal_spec:
        space.chart(name)
    for name in doc.family:
        if doc.normal_spec.get(name) in (None, ABSENT):
            raise ParseError(
                f"family statement on chart {name!r} without submanifold "
                "normals")
        for v in doc.family[name]:
            if v not in doc.normal_spec[name]:
                raise ParseError(
                    f"family assigns non-normal variable {v!r} on chart "
                    f"{name!r}")


# ----------------------------------------------------------------------
# Canonical rendering
# ----------------------------------------------------------------------

def _fmt_coeff(c: Fraction) -> str:
    return str(c)


def _fmt_monomial(vars, e, c: Fraction, frames=None) -> str:
    parts = []
    for v, p in zip(vars, e):
        if p == 0:
            continue
        parts.append(v if p == 1 else f"{v}^{p}")
    if frames:
        parts.append(" ^ ".join(f"d/{v}" for v in frames))
    if not parts:
        return _fmt_coeff(c)
    if c == 1:
        return " * ".join(parts)
    if c == -1:
        return "-" + " * ".join(parts)
    return " * ".join([_fmt_coeff(c)] + parts)


def _join_terms(rendered) -> str:
    out = ""
    for piece in rendered:
        if not out:
            out = piece
        elif piece.startswith("-"):
            out += " - " + piece[1:]
        else:
            out += " + " + piece
    return out or "0"


def _fmt_poly(lp: LaurentPoly) -> str:
    return _join_terms(_fmt_monomial(lp.vars, e, c)
                       for e, c in sorted(lp.terms.items()))


def _fmt_series(ser: TruncatedSeries, cvars) -> str:
    rendered = []
    allvars = tuple(cvars) + ser.params
    for pe in sorted(ser.terms):
        poly = ser.terms[pe]
        for ce in sorted(poly.terms):
            rendered.append(_fmt_monomial(allvars, tuple(ce) + tuple(pe),
                                          poly.terms[ce]))
    return _join_terms(rendered)


def _fmt_pv_series(ser: TruncatedSeries, cvars, params) -> str:
    rendered = []
    allvars = tuple(cvars) + tuple(params)
    entries = []
    for pe in sorted(ser.terms):
        pv = ser.terms[pe]
        for idx in sorted(pv.terms):
            poly = pv.terms[idx]
            for ce in sorted(poly.terms):
                entries.append((idx, tuple(ce), tuple(pe), poly.terms[ce]))
    entries.sort(key=lambda t: (t[0], t[2], t[1]))
    for idx, ce, pe, c in entries:
        frames = [cvars[j] for j in idx]
        rendered.append(_fmt_monomial(allvars, ce + pe, c, frames=frames))
    return _join_terms(rendered)


def _fmt_pv(pv: Polyvector, cvars) -> str:
    rendered = []
    for idx in sorted(pv.terms):
        poly = pv.terms[idx]
        frames = [cvars[j] for j in idx]
        for ce in sorted(poly.terms):
            rendered.append(_fmt_monomial(cvars, ce, poly.terms[ce],
                                          frames=frames))
    return _join_terms(rendered)


def format_poly(lp: LaurentPoly) -> str:
    """Human form of a Laurent polynomial, matching the file grammar."""
    return _fmt_poly(lp)


def format_polyvector(pv: Polyvector) -> str:
    """Human form of a polyvector (scalars fall back to plain polynomials)."""
    return _fmt_pv(pv, pv.vars)


def format_series(ser: TruncatedSeries, cvars) -> str:
    """Human form of a truncated scalar series over the given chart."""
    return _fmt_series(ser, cvars)


def format_pv_series(ser: TruncatedSeries, cvars, params) -> str:
    """Human form of a truncated polyvector series over the given chart."""
    return _fmt_pv_series(ser, cvars, params)


def render(doc: ProblemFile) -> str:
    """Canonical problem-file text; parse(render(doc)) reproduces doc."""
    lines = []
    if doc.name:
        lines.append(f"manifold {doc.name};")
    if doc.builtin is not None:
        name, args = doc.builtin
        if args:
            lines.append(f"builtin {name}({', '.join(str(a) for a in args)});")
        else:
            lines.append(f"builtin {name};")
    else:
        for chart in doc.charts:
            lines.append(f"chart {chart.name} vars {' '.join(chart.vars)};")
        for (i, k) in sorted(doc.transitions):
            tmap = doc.transitions[(i, k)]
            body = ", ".join(f"{v} = {_fmt_poly(tmap[v])}"
                             for v in doc.space.chart(i).vars if v in tmap)
            lines.append(f"transition {i} -> {k}: {body};")
    space = doc.space if (doc.builtin or doc.charts) else None
    for name in (space.chart_names if space else []):
        if name in doc.poisson:
            lines.append(f"poisson on {name}: "
                         f"{_fmt_pv(doc.poisson[name], space.chart(name).vars)};")
    for name in (space.chart_names if space else []):
        if name in doc.normal_spec:
            spec = doc.normal_spec[name]
            if spec == ABSENT:
                lines.append(f"submanifold normal {name}: absent;")
            else:
                lines.append(f"submanifold normal {name}: "
                             f"[{', '.join(spec)}];")
    if doc.params:
        lines.append(f"params {' '.join(doc.params)} order {doc.order} "
                     f"degree {doc.degree};")
    if doc.mode != "fixed":
        lines.append(f"mode {doc.mode};")
    for name in (space.chart_names if space else []):
        if name in doc.family:
            cvars = space.chart(name).vars
            block = doc.family[name]
            body = ", ".join(f"{v} = {_fmt_series(block[v], cvars)}"
                             for v in cvars if v in block)
            lines.append(f"family {name}: {body};")
    for name in (space.chart_names if space else []):
        if name in doc.lam:
            cvars = space.chart(name).vars
            lines.append(f"lambda {name}: "
                         f"{_fmt_pv_series(doc.lam[name], cvars, doc.params)};")
    if doc.artin:
        lines.append(f"artin {doc.artin};")
    return "\n".join(lines) + "\n"
