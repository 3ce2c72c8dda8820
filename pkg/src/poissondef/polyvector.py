"""Exact multivector fields on a coordinate chart.

A degree-p polyvector is stored as a sparse sum of terms
coefficient * d/v_{i_1} ^ ... ^ d/v_{i_p} with strictly increasing index
tuples and LaurentPoly coefficients. The graded bracket follows the
convention in which, on decomposables with p, q >= 1,

    [f X_1^...^X_p, g Y_1^...^Y_q]
        = (-1)^(p-1) sum_k (-1)^(k+1) f (X_k g) X_1^...^skip k^...^X_p^Y_1^...^Y_q
        +            sum_l (-1)^l     g (Y_l f) X_1^...^X_p^Y_1^...^skip l^...^Y_q

while for a function g (q = 0) the first sum applies without the
(-1)^(p-1) prefactor, and the p = 0 case is defined through graded
antisymmetry [P, Q] = -(-1)^((p-1)(q-1)) [Q, P].
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product as _cartesian
from typing import Iterable, Mapping

from .errors import ChartMismatch
from .symbolic import LaurentPoly, substitute


def _sort_sign(indices: Iterable[int]):
    """Sort wedge indices, returning (tuple, sign); sign 0 on repeats."""
    idx = list(indices)
    sign = 1
    for i in range(1, len(idx)):
        j = i
        while j > 0 and idx[j - 1] > idx[j]:
            idx[j - 1], idx[j] = idx[j], idx[j - 1]
            sign = -sign
            j -= 1
    for a, b in zip(idx, idx[1:]):
        if a == b:
            return None, 0
    return tuple(idx), sign


class Polyvector:
    """Sparse exact polyvector field of fixed degree on one chart."""

    __slots__ = ("vars", "degree", "terms")

    def __init__(self, vars: Iterable[str], degree: int,
                 terms: Mapping[tuple, LaurentPoly] | None = None):
        self.vars = tuple(vars)
        self.degree = int(degree)
        if self.degree < 0:
            raise ValueError("polyvector degree must be >= 0")
        clean = {}
        if terms:
            for idx, coeff in terms.items():
                idx = tuple(idx)
                if len(idx) != self.degree:
                    raise ChartMismatch(
                        f"index tuple {idx} has wrong length for degree {self.degree}")
                if any(not 0 <= i < len(self.vars) for i in idx):
                    raise ChartMismatch(f"index out of range in {idx}")
                if list(idx) != sorted(set(idx)):
                    raise ChartMismatch(f"indices must be strictly increasing: {idx}")
                if coeff.vars != self.vars:
                    coeff = coeff.with_vars(self.vars)
                if coeff.is_zero():
                    continue
                if idx in clean:
                    s = clean[idx] + coeff
                    if s.is_zero():
                        del clean[idx]
                    else:
                        clean[idx] = s
                else:
                    clean[idx] = coeff
        self.terms = clean

    # ---- constructors -------------------------------------------------
    @classmethod
    def zero(cls, vars, degree: int) -> "Polyvector":
        return cls(vars, degree)

    @classmethod
    def from_function(cls, f: LaurentPoly) -> "Polyvector":
        return cls(f.vars, 0, {(): f})

    @classmethod
    def monomial(cls, vars, indices: Iterable[int], coeff: LaurentPoly) -> "Polyvector":
        """coeff * d/v_{i1} ^ ... with arbitrary index order (sign folded in)."""
        idx, sign = _sort_sign(indices)
        vars = tuple(vars)
        if sign == 0:
            return cls(vars, len(tuple(indices)))
        return cls(vars, len(idx), {idx: coeff * Fraction(sign)})

    # ---- predicates / access ------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, indices: tuple) -> LaurentPoly:
        return self.terms.get(tuple(indices), LaurentPoly.zero(self.vars))

    def as_function(self) -> LaurentPoly:
        if self.degree != 0:
            raise ChartMismatch("only a degree-0 polyvector is a function")
        return self.terms.get((), LaurentPoly.zero(self.vars))

    def _check(self, other: "Polyvector", same_degree=True):
        if self.vars != other.vars:
            raise ChartMismatch(
                f"charts differ: {self.vars} vs {other.vars}")
        if same_degree and self.degree != other.degree:
            raise ChartMismatch(
                f"degrees differ: {self.degree} vs {other.degree}")

    # ---- linear structure ---------------------------------------------
    def __add__(self, other: "Polyvector") -> "Polyvector":
        self._check(other)
        terms = dict(self.terms)
        for idx, c in other.terms.items():
            if idx in terms:
                s = terms[idx] + c
                if s.is_zero():
                    del terms[idx]
                else:
                    terms[idx] = s
            else:
                terms[idx] = c
        out = Polyvector.__new__(Polyvector)
        out.vars, out.degree, out.terms = self.vars, self.degree, terms
        return out

    def __neg__(self) -> "Polyvector":
        out = Polyvector.__new__(Polyvector)
        out.vars, out.degree = self.vars, self.degree
        out.terms = {i: -c for i, c in self.terms.items()}
        return out

    def __sub__(self, other: "Polyvector") -> "Polyvector":
        return self + (-other)

    def __mul__(self, factor) -> "Polyvector":
        """Multiply by a function (LaurentPoly) or exact scalar."""
        if isinstance(factor, (int, Fraction)):
            factor = LaurentPoly.const(self.vars, factor)
        terms = {}
        for idx, c in self.terms.items():
            prod = c * factor
            if not prod.is_zero():
                terms[idx] = prod
        out = Polyvector.__new__(Polyvector)
        out.vars, out.degree, out.terms = self.vars, self.degree, terms
        return out

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polyvector):
            return NotImplemented
        return (self.vars == other.vars and self.degree == other.degree
                and self.terms == other.terms)

    def __hash__(self):
        return hash((self.vars, self.degree,
                     frozenset((i, hash(c)) for i, c in self.terms.items())))

    # ---- coefficient-wise operations ----------------------------------
    def map_coefficients(self, f) -> "Polyvector":
        return Polyvector(self.vars, self.degree,
                          {i: f(c) for i, c in self.terms.items()})

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for idx, c in self.sorted_terms():
            frame = " ^ ".join(f"d/{self.vars[i]}" for i in idx)
            cs = str(c)
            if len(c.terms) > 1:
                cs = f"({cs})"
            parts.append(f"{cs} * {frame}" if frame else cs)
        return " + ".join(parts)

    __repr__ = __str__


# ----------------------------------------------------------------------
# Wedge and bracket
# ----------------------------------------------------------------------

def wedge(a: Polyvector, b: Polyvector) -> Polyvector:
    a._check(b, same_degree=False)
    out_terms: dict = {}
    for ia, ca in a.terms.items():
        for ib, cb in b.terms.items():
            idx, sign = _sort_sign(ia + ib)
            if sign == 0:
                continue
            coeff = ca * cb * Fraction(sign)
            if idx in out_terms:
                s = out_terms[idx] + coeff
                if s.is_zero():
                    del out_terms[idx]
                else:
                    out_terms[idx] = s
            else:
                out_terms[idx] = coeff
    return Polyvector(a.vars, a.degree + b.degree, out_terms)


def _acc(out_terms: dict, idx: tuple, coeff: LaurentPoly):
    if coeff.is_zero():
        return
    if idx in out_terms:
        s = out_terms[idx] + coeff
        if s.is_zero():
            del out_terms[idx]
        else:
            out_terms[idx] = s
    else:
        out_terms[idx] = coeff


def schouten(a: Polyvector, b: Polyvector) -> Polyvector:
    """Graded bracket of multivector fields (convention in module docstring)."""
    a._check(b, same_degree=False)
    p, q = a.degree, b.degree
    if p == 0 and q == 0:
        return Polyvector.zero(a.vars, 0)
    if p == 0:
        # [f, Q] = -(-1)^((0-1)(q-1)) [Q, f] = (-1)^q [Q, f]
        res = schouten(b, a)
        return res if q % 2 == 0 else -res
    vars = a.vars
    out_terms: dict = {}
    if q == 0:
        for ia, f in a.terms.items():
            g = b.terms.get((), None)
            if g is None:
                continue
            for kpos, ik in enumerate(ia):
                dg = g.derivative(vars[ik])
                if dg.is_zero():
                    continue
                coeff = f * dg
                if kpos % 2:
                    coeff = -coeff
                _acc(out_terms, ia[:kpos] + ia[kpos + 1:], coeff)
        return Polyvector(vars, p - 1, out_terms)
    pref = -1 if (p - 1) % 2 else 1
    for ia, f in a.terms.items():
        for ib, g in b.terms.items():
            for kpos, ik in enumerate(ia):
                dg = g.derivative(vars[ik])
                if dg.is_zero():
                    continue
                idx, sign = _sort_sign(ia[:kpos] + ia[kpos + 1:] + ib)
                if sign == 0:
                    continue
                s = pref * sign * (-1 if kpos % 2 else 1)
                _acc(out_terms, idx, f * dg * Fraction(s))
            for lpos, jl in enumerate(ib):
                df = f.derivative(vars[jl])
                if df.is_zero():
                    continue
                idx, sign = _sort_sign(ia + ib[:lpos] + ib[lpos + 1:])
                if sign == 0:
                    continue
                s = sign * (1 if lpos % 2 else -1)
                _acc(out_terms, idx, g * df * Fraction(s))
    return Polyvector(vars, p + q - 1, out_terms)


def hamiltonian(bivector: Polyvector, f) -> Polyvector:
    """Bracket of a bivector with a function: the associated vector field."""
    if bivector.degree != 2:
        raise ChartMismatch("hamiltonian expects a bivector")
    if isinstance(f, LaurentPoly):
        f = Polyvector.from_function(f)
    if f.degree != 0:
        raise ChartMismatch("hamiltonian expects a function argument")
    return schouten(bivector, f)


# ----------------------------------------------------------------------
# Restriction and pushforward
# ----------------------------------------------------------------------

def restrict(a: Polyvector, names: Iterable[str]) -> Polyvector:
    """Evaluate the listed variables at zero in every coefficient, keeping all
    frame components (including those along the zeroed directions)."""
    names = tuple(names)
    return Polyvector(a.vars, a.degree,
                      {i: c.set_zero(names) for i, c in a.terms.items()})


def pushforward(a: Polyvector,
                target_in_source: Mapping[str, LaurentPoly],
                source_in_target: Mapping[str, LaurentPoly],
                target_vars: Iterable[str]) -> Polyvector:
    """Re-express a polyvector in another chart's coordinates and frame.

    target_in_source: each target variable as a Laurent expression of the
    source variables (used for the Jacobian d(target)/d(source));
    source_in_target: each source variable as a Laurent expression of the
    target variables (used to convert coefficients at the end).
    """
    target_vars = tuple(target_vars)
    src_vars = a.vars
    # Jacobian over the source chart: J[b][s] = d(target_b)/d(source_s)
    jac = []
    for tv in target_vars:
        expr = target_in_source[tv]
        if expr.vars != src_vars:
            expr = expr.with_vars(src_vars)
        jac.append([expr.derivative(sv) for sv in src_vars])
    subs_map = dict(source_in_target)
    collected: dict = {}
    for idx, coeff in a.terms.items():
        if a.degree == 0:
            _acc(collected, (), coeff)
            continue
        for targets in _cartesian(range(len(target_vars)), repeat=a.degree):
            prod = coeff
            ok = True
            for t_i, s_i in zip(targets, idx):
                entry = jac[t_i][s_i]
                if entry.is_zero():
                    ok = False
                    break
                prod = prod * entry
            if not ok:
                continue
            sidx, sign = _sort_sign(targets)
            if sign == 0:
                continue
            _acc(collected, sidx, prod * Fraction(sign))
    out_terms = {}
    for idx, coeff in collected.items():
        conv = substitute(coeff, subs_map)
        if conv.vars != target_vars:
            conv = conv.with_vars(target_vars)
        if not conv.is_zero():
            out_terms[idx] = conv
    return Polyvector(target_vars, a.degree, out_terms)
