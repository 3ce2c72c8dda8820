"""Exact sparse symbolic core: Laurent polynomials over Q, truncated
multi-parameter series with pluggable coefficient carriers, and comparison
(majorant) series for convergence-style domination checks.

All arithmetic is exact (fractions.Fraction); nothing here floats.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Callable, Iterable, Mapping

from .errors import (
    ChartMismatch,
    NegativePowerAtZero,
    NonInvertibleSubstitution,
    ParameterMismatch,
)

Scalar = Fraction


def _as_scalar(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, int):
        return Fraction(c)
    raise TypeError(f"expected exact scalar, got {type(c).__name__}")


def grlex_key(exps: tuple) -> tuple:
    """Graded-lexicographic sort key for an exponent tuple."""
    return (sum(exps), exps)


class LaurentPoly:
    """Sparse Laurent polynomial over Q in a fixed ordered variable tuple.

    terms maps exponent tuples (ints, possibly negative) to nonzero Fractions.
    Instances are treated as immutable; all operations return new objects.
    """

    __slots__ = ("vars", "terms")

    def __init__(self, vars: Iterable[str], terms: Mapping[tuple, Fraction] | None = None):
        self.vars = tuple(vars)
        clean = {}
        if terms:
            n = len(self.vars)
            for e, c in terms.items():
                e = tuple(e)
                if len(e) != n:
                    raise ChartMismatch(
                        f"exponent tuple {e} does not fit variables {self.vars}")
                c = _as_scalar(c)
                if c:
                    clean[e] = clean.get(e, Fraction(0)) + c
                    if not clean[e]:
                        del clean[e]
        self.terms = clean

    # ---- constructors -------------------------------------------------
    @classmethod
    def zero(cls, vars: Iterable[str]) -> "LaurentPoly":
        return cls(vars)

    @classmethod
    def const(cls, vars: Iterable[str], c) -> "LaurentPoly":
        vars = tuple(vars)
        c = _as_scalar(c)
        return cls(vars, {(0,) * len(vars): c} if c else {})

    @classmethod
    def variable(cls, vars: Iterable[str], name: str) -> "LaurentPoly":
        vars = tuple(vars)
        if name not in vars:
            raise ChartMismatch(f"variable {name!r} not among {vars}")
        e = tuple(1 if v == name else 0 for v in vars)
        return cls(vars, {e: Fraction(1)})

    @classmethod
    def monomial(cls, vars: Iterable[str], exps: Iterable[int], coeff=1) -> "LaurentPoly":
        return cls(vars, {tuple(exps): _as_scalar(coeff)})

    # ---- predicates ---------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_monomial_unit(self) -> bool:
        """True when the polynomial is a single term (hence invertible in the
        Laurent ring)."""
        return len(self.terms) == 1

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * len(self.vars), Fraction(0))

    def total_degree(self):
        """Max over terms of the exponent sum; None for the zero polynomial."""
        if not self.terms:
            return None
        return max(sum(e) for e in self.terms)

    def min_exponent(self, name: str) -> int:
        i = self.vars.index(name)
        if not self.terms:
            return 0
        return min(e[i] for e in self.terms)

    def has_negative_exponent(self, names: Iterable[str] | None = None) -> bool:
        idx = (
            range(len(self.vars))
            if names is None
            else [self.vars.index(n) for n in names]
        )
        return any(e[i] < 0 for e in self.terms for i in idx)

    # ---- ring operations ----------------------------------------------
    def _check(self, other: "LaurentPoly"):
        if self.vars != other.vars:
            raise ChartMismatch(
                f"variable tuples differ: {self.vars} vs {other.vars}")

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.const(self.vars, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        self._check(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            s = terms.get(e, Fraction(0)) + c
            if s:
                terms[e] = s
            elif e in terms:
                del terms[e]
        out = LaurentPoly.__new__(LaurentPoly)
        out.vars, out.terms = self.vars, terms
        return out

    __radd__ = __add__

    def __neg__(self):
        out = LaurentPoly.__new__(LaurentPoly)
        out.vars = self.vars
        out.terms = {e: -c for e, c in self.terms.items()}
        return out

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.const(self.vars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = _as_scalar(other)
            if not c:
                return LaurentPoly.zero(self.vars)
            out = LaurentPoly.__new__(LaurentPoly)
            out.vars = self.vars
            out.terms = {e: c * v for e, v in self.terms.items()}
            return out
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        self._check(other)
        terms: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                s = terms.get(e, Fraction(0)) + c1 * c2
                if s:
                    terms[e] = s
                elif e in terms:
                    del terms[e]
        out = LaurentPoly.__new__(LaurentPoly)
        out.vars, out.terms = self.vars, terms
        return out

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise TypeError("exponent must be an integer")
        if n == 0:
            return LaurentPoly.const(self.vars, 1)
        if n < 0:
            return self.inverse() ** (-n)
        result = self
        for _ in range(n - 1):
            result = result * self
        return result

    def inverse(self) -> "LaurentPoly":
        if not self.is_monomial_unit():
            raise NonInvertibleSubstitution(
                f"cannot invert {self}: not a monomial times a unit")
        ((e, c),) = self.terms.items()
        return LaurentPoly(self.vars, {tuple(-x for x in e): 1 / c})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = LaurentPoly.const(self.vars, other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, frozenset(self.terms.items())))

    # ---- calculus -----------------------------------------------------
    def derivative(self, name: str) -> "LaurentPoly":
        i = self.vars.index(name)
        terms = {}
        for e, c in self.terms.items():
            if e[i] == 0:
                continue
            e2 = list(e)
            e2[i] -= 1
            terms[tuple(e2)] = c * e[i]
        return LaurentPoly(self.vars, terms)

    def set_zero(self, names: Iterable[str]) -> "LaurentPoly":
        """Evaluate the given variables at 0 (variable tuple unchanged)."""
        idx = [self.vars.index(n) for n in names]
        terms = {}
        for e, c in self.terms.items():
            if any(e[i] < 0 for i in idx):
                raise NegativePowerAtZero(
                    f"cannot set {names} to zero in {self}")
            if any(e[i] > 0 for i in idx):
                continue
            terms[e] = c
        return LaurentPoly(self.vars, terms)

    def coefficient_of(self, name: str, power: int) -> "LaurentPoly":
        """Coefficient of name**power (variable tuple unchanged; that slot 0)."""
        i = self.vars.index(name)
        terms = {}
        for e, c in self.terms.items():
            if e[i] == power:
                e2 = list(e)
                e2[i] = 0
                terms[tuple(e2)] = c
        return LaurentPoly(self.vars, terms)

    # ---- variable plumbing --------------------------------------------
    def with_vars(self, newvars: Iterable[str]) -> "LaurentPoly":
        """Re-express over a different variable tuple (matching by name).

        Dropped variables must not occur with nonzero exponent."""
        newvars = tuple(newvars)
        pos = {v: j for j, v in enumerate(newvars)}
        terms = {}
        for e, c in self.terms.items():
            e2 = [0] * len(newvars)
            for i, v in enumerate(self.vars):
                if e[i] == 0:
                    continue
                if v not in pos:
                    raise ChartMismatch(
                        f"variable {v!r} occurs but is absent from {newvars}")
                e2[pos[v]] += e[i]
            key = tuple(e2)
            terms[key] = terms.get(key, Fraction(0)) + c
        return LaurentPoly(newvars, terms)

    def rename_vars(self, mapping: Mapping[str, str]) -> "LaurentPoly":
        return LaurentPoly(tuple(mapping.get(v, v) for v in self.vars), self.terms)

    # ---- display ------------------------------------------------------
    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda ec: grlex_key(ec[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            factors = []
            for v, p in zip(self.vars, e):
                if p == 0:
                    continue
                factors.append(v if p == 1 else f"{v}^{p}")
            if not factors:
                body = str(abs(c))
            else:
                mono = "*".join(factors)
                body = mono if abs(c) == 1 else f"{abs(c)}*{mono}"
            sign = "-" if c < 0 else "+"
            parts.append((sign, body))
        first_sign, first_body = parts[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    __repr__ = __str__


# ----------------------------------------------------------------------
# Truncated multi-parameter series
# ----------------------------------------------------------------------

def _coeff_is_zero(c) -> bool:
    if isinstance(c, (int, Fraction)):
        return not c
    if hasattr(c, "is_zero"):
        return c.is_zero()
    if isinstance(c, tuple):
        return all(_coeff_is_zero(x) for x in c)
    raise TypeError(f"unsupported series coefficient {type(c).__name__}")


def _coeff_add(a, b):
    if isinstance(a, tuple):
        return tuple(_coeff_add(x, y) for x, y in zip(a, b))
    return a + b


def _coeff_neg(a):
    if isinstance(a, tuple):
        return tuple(_coeff_neg(x) for x in a)
    return -a


def _coeff_scale(a, s: Fraction):
    if isinstance(a, tuple):
        return tuple(_coeff_scale(x, s) for x in a)
    return a * s


class TruncatedSeries:
    """Series in parameters, truncated at a total-degree cutoff.

    Coefficients may be Fractions, LaurentPoly, polyvectors, or same-shape
    tuples thereof — anything supporting +, unary -, scaling by Fraction and
    an is_zero test. Multiplication is only defined when the carriers support
    `*` themselves; heterogeneous bilinear combinations go through `combine`.
    """

    __slots__ = ("params", "cutoff", "terms")

    def __init__(self, params: Iterable[str], cutoff: int,
                 terms: Mapping[tuple, object] | None = None):
        self.params = tuple(params)
        self.cutoff = int(cutoff)
        clean = {}
        if terms:
            n = len(self.params)
            for e, c in terms.items():
                e = tuple(e)
                if len(e) != n:
                    raise ParameterMismatch(
                        f"exponent tuple {e} does not fit parameters {self.params}")
                if any(x < 0 for x in e):
                    raise ParameterMismatch(
                        f"negative parameter exponent in {e}")
                if sum(e) > self.cutoff:
                    continue
                if not _coeff_is_zero(c):
                    clean[e] = c
        self.terms = clean

    # ---- constructors -------------------------------------------------
    @classmethod
    def zero(cls, params, cutoff):
        return cls(params, cutoff)

    @classmethod
    def const(cls, params, cutoff, c):
        params = tuple(params)
        return cls(params, cutoff, {(0,) * len(params): c})

    @classmethod
    def parameter(cls, params, cutoff, name: str, one):
        """The series `name * one` where `one` is the carrier's unit."""
        params = tuple(params)
        if name not in params:
            raise ParameterMismatch(f"{name!r} not among parameters {params}")
        e = tuple(1 if p == name else 0 for p in params)
        return cls(params, cutoff, {e: one})

    # ---- helpers ------------------------------------------------------
    def _check(self, other: "TruncatedSeries"):
        if self.params != other.params:
            raise ParameterMismatch(
                f"parameter tuples differ: {self.params} vs {other.params}")

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, exps: tuple, zero=None):
        return self.terms.get(tuple(exps), zero)

    def homogeneous(self, m: int) -> dict:
        """All degree-m coefficients as a dict exponent-tuple -> carrier."""
        return {e: c for e, c in self.terms.items() if sum(e) == m}

    def order_zero(self):
        return self.terms.get((0,) * len(self.params))

    def truncate(self, m: int) -> "TruncatedSeries":
        return TruncatedSeries(
            self.params, min(self.cutoff, m),
            {e: c for e, c in self.terms.items() if sum(e) <= m})

    def map(self, f: Callable) -> "TruncatedSeries":
        return TruncatedSeries(self.params, self.cutoff,
                               {e: f(c) for e, c in self.terms.items()})

    def min_order(self):
        """Lowest total degree with a nonzero coefficient; None if zero."""
        if not self.terms:
            return None
        return min(sum(e) for e in self.terms)

    # ---- linear structure ---------------------------------------------
    def __add__(self, other):
        self._check(other)
        cutoff = min(self.cutoff, other.cutoff)
        terms = {e: c for e, c in self.terms.items() if sum(e) <= cutoff}
        for e, c in other.terms.items():
            if sum(e) > cutoff:
                continue
            if e in terms:
                s = _coeff_add(terms[e], c)
                if _coeff_is_zero(s):
                    del terms[e]
                else:
                    terms[e] = s
            else:
                terms[e] = c
        return TruncatedSeries(self.params, cutoff, terms)

    def __neg__(self):
        return TruncatedSeries(self.params, self.cutoff,
                               {e: _coeff_neg(c) for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "TruncatedSeries":
        s = _as_scalar(s)
        if not s:
            return TruncatedSeries(self.params, self.cutoff)
        return TruncatedSeries(self.params, self.cutoff,
                               {e: _coeff_scale(c, s) for e, c in self.terms.items()})

    # ---- multiplicative structure -------------------------------------
    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return combine(self, other, lambda a, b: a * b)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if n < 0:
            raise NonInvertibleSubstitution(
                "negative powers of series go through substitute()")
        result = None
        for _ in range(n):
            result = self if result is None else result * self
        if result is None:
            raise ValueError("series**0 needs a carrier unit; use const()")
        return result

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        if self.params != other.params:
            return False
        keys = set(self.terms) | set(other.terms)
        zero_like = None
        for e in keys:
            a, b = self.terms.get(e), other.terms.get(e)
            if a is None:
                if not _coeff_is_zero(b):
                    return False
            elif b is None:
                if not _coeff_is_zero(a):
                    return False
            elif not _coeff_is_zero(_coeff_add(a, _coeff_neg(b))):
                return False
            del zero_like
        return True

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda ec: grlex_key(ec[0]))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for e, c in self.sorted_terms():
            mono = "*".join(
                (p if x == 1 else f"{p}^{x}")
                for p, x in zip(self.params, e) if x)
            body = str(c)
            if mono:
                body = f"({body})*{mono}" if ("+" in body or "-" in body[1:] or " " in body) else f"{body}*{mono}"
            parts.append(body)
        return " + ".join(parts)

    __repr__ = __str__


def combine(a: TruncatedSeries, b: TruncatedSeries, mul: Callable) -> TruncatedSeries:
    """Bilinear combination of two series via a carrier-level product."""
    a._check(b)
    cutoff = min(a.cutoff, b.cutoff)
    terms: dict = {}
    for e1, c1 in a.terms.items():
        d1 = sum(e1)
        for e2, c2 in b.terms.items():
            if d1 + sum(e2) > cutoff:
                continue
            e = tuple(x + y for x, y in zip(e1, e2))
            prod = mul(c1, c2)
            if e in terms:
                s = _coeff_add(terms[e], prod)
                if _coeff_is_zero(s):
                    del terms[e]
                else:
                    terms[e] = s
            elif not _coeff_is_zero(prod):
                terms[e] = prod
    return TruncatedSeries(a.params, cutoff, terms)


def series_equiv(a: TruncatedSeries, b: TruncatedSeries, m: int) -> bool:
    """True when a and b agree in every total degree <= m."""
    if a.params != b.params:
        raise ParameterMismatch(
            f"parameter tuples differ: {a.params} vs {b.params}")
    if m > min(a.cutoff, b.cutoff):
        raise ParameterMismatch(
            f"comparison order {m} exceeds cutoff {min(a.cutoff, b.cutoff)}")
    return (a.truncate(m) - b.truncate(m)).is_zero()


# ----------------------------------------------------------------------
# Substitution
# ----------------------------------------------------------------------

def _series_inverse(s: TruncatedSeries) -> TruncatedSeries:
    """Inverse of a series whose order-zero coefficient is a monomial unit."""
    s0 = s.order_zero()
    if s0 is None or not (isinstance(s0, LaurentPoly) and s0.is_monomial_unit()):
        raise NonInvertibleSubstitution(
            "series inverse requires an invertible order-zero part")
    inv0 = s0.inverse()
    # s = s0 (1 + n) with n of positive parameter order; expand geometrically.
    one = LaurentPoly.const(s0.vars, 1)
    n = TruncatedSeries(s.params, s.cutoff,
                        {e: inv0 * c for e, c in s.terms.items()}) \
        - TruncatedSeries.const(s.params, s.cutoff, one)
    result = TruncatedSeries.const(s.params, s.cutoff, one)
    power = TruncatedSeries.const(s.params, s.cutoff, one)
    sign = 1
    for _ in range(s.cutoff):
        power = power * n
        sign = -sign
        if power.is_zero():
            break
        result = result + power.scale(sign)
    return result.map(lambda c: inv0 * c)


def _series_pow(s: TruncatedSeries, n: int, one: LaurentPoly) -> TruncatedSeries:
    if n == 0:
        return TruncatedSeries.const(s.params, s.cutoff, one)
    base = s if n > 0 else _series_inverse(s)
    result = base
    for _ in range(abs(n) - 1):
        result = result * base
    return result


def substitute(p: LaurentPoly, assignment: Mapping[str, object]):
    """Substitute expressions for the variables of p.

    Values may be LaurentPoly over a common target variable tuple, Fractions/
    ints, or TruncatedSeries with LaurentPoly coefficients (then the result is
    a TruncatedSeries). Variables of p carrying nonzero exponent must all be
    assigned. Negative exponents require the value to be invertible: a single
    monomial, or a series whose order-zero part is one.
    """
    used = [v for i, v in enumerate(p.vars)
            if any(e[i] for e in p.terms)]
    missing = [v for v in used if v not in assignment]
    if missing:
        raise ChartMismatch(f"no substitution value for {missing}")

    target_vars = None
    series_sig = None
    for v in used:
        val = assignment[v]
        if isinstance(val, LaurentPoly):
            tv = val.vars
        elif isinstance(val, TruncatedSeries):
            series_sig = (val.params, val.cutoff) if series_sig is None else series_sig
            if (val.params, val.cutoff) != series_sig:
                raise ParameterMismatch(
                    "substitution series disagree on parameters or cutoff")
            lead = next(iter(val.terms.values()), None)
            tv = lead.vars if isinstance(lead, LaurentPoly) else None
        elif isinstance(val, (int, Fraction)):
            tv = None
        else:
            raise TypeError(f"bad substitution value for {v!r}")
        if tv is not None:
            if target_vars is None:
                target_vars = tv
            elif target_vars != tv:
                raise ChartMismatch(
                    f"substitution values live on different charts: "
                    f"{target_vars} vs {tv}")
    if target_vars is None:
        target_vars = ()

    one = LaurentPoly.const(target_vars, 1)

    if series_sig is None:
        # plain Laurent substitution
        vals = {}
        for v in used:
            val = assignment[v]
            if isinstance(val, (int, Fraction)):
                val = LaurentPoly.const(target_vars, val)
            vals[v] = val
        out = LaurentPoly.zero(target_vars)
        for e, c in p.terms.items():
            term = LaurentPoly.const(target_vars, c)
            for i, v in enumerate(p.vars):
                if e[i]:
                    term = term * (vals[v] ** e[i])
            out = out + term
        return out

    params, cutoff = series_sig
    svals = {}
    for v in used:
        val = assignment[v]
        if isinstance(val, (int, Fraction)):
            val = LaurentPoly.const(target_vars, val)
        if isinstance(val, LaurentPoly):
            val = TruncatedSeries.const(params, cutoff, val)
        svals[v] = val
    out = TruncatedSeries.zero(params, cutoff)
    for e, c in p.terms.items():
        term = TruncatedSeries.const(params, cutoff,
                                     LaurentPoly.const(target_vars, c))
        for i, v in enumerate(p.vars):
            if e[i]:
                term = term * _series_pow(svals[v], e[i], one)
        out = out + term
    return out


# ----------------------------------------------------------------------
# Majorant (comparison) series
# ----------------------------------------------------------------------

class MajorantSeries:
    """The classical comparison power series

        A(t) = (a/16b) * sum_{n>=1} b^n (t_1+...+t_l)^n / n^2

    used to dominate order-by-order constructions. Coefficients are exact:
    the t^h coefficient for |h| = n >= 1 is (a/16b) * b^n * multinomial(n; h) / n^2.
    """

    __slots__ = ("a", "b", "nparams")

    def __init__(self, a, b, nparams: int):
        self.a = _as_scalar(a)
        self.b = _as_scalar(b)
        if self.a <= 0 or self.b <= 0:
            raise ValueError("majorant parameters must be positive")
        self.nparams = int(nparams)

    def coefficient(self, exps: tuple) -> Fraction:
        exps = tuple(exps)
        if len(exps) != self.nparams:
            raise ParameterMismatch(
                f"exponent tuple {exps} does not fit {self.nparams} parameters")
        n = sum(exps)
        if n == 0:
            return Fraction(0)
        multi = math.factorial(n)
        for h in exps:
            multi //= math.factorial(h)
        return (self.a / (16 * self.b)) * self.b ** n * Fraction(multi, n * n)

    def as_series(self, params: Iterable[str], cutoff: int) -> TruncatedSeries:
        params = tuple(params)
        if len(params) != self.nparams:
            raise ParameterMismatch(
                f"{len(params)} parameter names for {self.nparams} parameters")
        terms = {}
        for e in _simplex(self.nparams, cutoff):
            c = self.coefficient(e)
            if c:
                terms[e] = c
        return TruncatedSeries(params, cutoff, terms)


def _simplex(nvars: int, bound: int):
    """All exponent tuples of length nvars with total degree <= bound."""
    if nvars == 0:
        yield ()
        return
    for head in range(bound + 1):
        for tail in _simplex(nvars - 1, bound - head):
            yield (head,) + tail


def dominates(p: TruncatedSeries, major: MajorantSeries, c=1) -> bool:
    """True when |p_h| < c * A_h for every parameter exponent h up to p's
    cutoff. The constant term of A vanishes, so a nonzero constant term of p
    always fails; the h = 0 comparison is skipped when p has none.
    """
    c = _as_scalar(c)
    const = p.order_zero()
    if const is not None and not _coeff_is_zero(const):
        return False
    for e in _simplex(len(p.params), p.cutoff):
        if sum(e) == 0:
            continue
        coeff = p.terms.get(e, Fraction(0))
        if not isinstance(coeff, (int, Fraction)):
            raise TypeError("domination applies to scalar-coefficient series")
        if not abs(coeff) < c * major.coefficient(e):
            return False
    return True
