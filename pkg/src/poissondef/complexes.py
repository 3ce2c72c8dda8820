"""Controlling complexes and their exact cohomology engines.

Four complex kinds are supported:

- "normal":     chartwise r-tuples of polyvectors with coefficients constant
                along the normal directions; the differential combines the
                structure bracket with the structure vector fields.
- "extended":   pairs (ambient polyvector of degree p+2, normal r-tuple of
                degree p); the ambient part couples into the normal part via
                brackets with the normal coordinates.
- "linebundle": single-chart scalar-slot complex with the full, unrestricted
                structure field (graded affine engine only).
- "bivector":   ambient polyvectors of degree p+2 with the bracket against
                the structure as differential.

Cochains are plain dicts: {"nor": {chart: [Polyvector]*r}} and/or
{"amb": {chart: Polyvector}}. Every linear computation is exact over Q.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable

from .errors import (
    ChartMismatch,
    InconsistentData,
    NotInKernel,
    UnstableAnsatz,
)
from .geometry import PoissonLineBundle, PoissonManifold, SubmanifoldData
from .linalg import nullspace, rank, rref, solve_min
from .polyvector import Polyvector, restrict, schouten, wedge
from .symbolic import LaurentPoly, _simplex


# ----------------------------------------------------------------------
# Cochain helpers
# ----------------------------------------------------------------------

def cochain_add(a: dict, b: dict) -> dict:
    out = {}
    if "amb" in a or "amb" in b:
        out["amb"] = {}
        for c in set(a.get("amb", {})) | set(b.get("amb", {})):
            x, y = a.get("amb", {}).get(c), b.get("amb", {}).get(c)
            out["amb"][c] = x + y if (x is not None and y is not None) else (x if y is None else y)
    if "nor" in a or "nor" in b:
        out["nor"] = {}
        for c in set(a.get("nor", {})) | set(b.get("nor", {})):
            x, y = a.get("nor", {}).get(c), b.get("nor", {}).get(c)
            if x is None:
                out["nor"][c] = list(y)
            elif y is None:
                out["nor"][c] = list(x)
            else:
                out["nor"][c] = [u + v for u, v in zip(x, y)]
    return out


def cochain_scale(a: dict, s) -> dict:
    out = {}
    if "amb" in a:
        out["amb"] = {c: v * s for c, v in a["amb"].items()}
    if "nor" in a:
        out["nor"] = {c: [v * s for v in tup] for c, tup in a["nor"].items()}
    return out


def cochain_lincomb(coeffs: Iterable[Fraction], cochains: Iterable[dict]) -> dict:
    acc = None
    for s, c in zip(coeffs, cochains):
        if not s:
            continue
        piece = cochain_scale(c, s)
        acc = piece if acc is None else cochain_add(acc, piece)
    if acc is not None:
        return acc
    first = next(iter(cochains), None)
    return cochain_scale(first, Fraction(0)) if first else {}


def cochain_is_zero(a: dict) -> bool:
    for v in a.get("amb", {}).values():
        if not v.is_zero():
            return False
    for tup in a.get("nor", {}).values():
        if any(not v.is_zero() for v in tup):
            return False
    return True


def cochain_vector_entries(a: dict):
    """Deterministic (key, Fraction) stream for linearization."""
    for c in sorted(a.get("amb", {})):
        pv = a["amb"][c]
        for idx, coeff in pv.sorted_terms():
            for e, val in coeff.sorted_terms():
                yield ("amb", c, idx, e), val
    for c in sorted(a.get("nor", {})):
        for slot, pv in enumerate(a["nor"][c]):
            for idx, coeff in pv.sorted_terms():
                for e, val in coeff.sorted_terms():
                    yield ("nor", c, slot, idx, e), val


def vectorize(cochains: list) -> tuple:
    """Common coordinatization of several cochains: (keys, columns)."""
    entry_maps = []
    keys = set()
    for c in cochains:
        m = dict(cochain_vector_entries(c))
        entry_maps.append(m)
        keys.update(m)
    keys = sorted(keys)
    cols = [[m.get(k, Fraction(0)) for k in keys] for m in entry_maps]
    return keys, cols


# ----------------------------------------------------------------------
# Descriptor
# ----------------------------------------------------------------------

KINDS = ("normal", "extended", "linebundle", "bivector")


@dataclass
class ComplexDescriptor:
    kind: str
    manifold: PoissonManifold
    submanifold: SubmanifoldData | None = None
    linebundle: PoissonLineBundle | None = None
    probe_degree: int = 6

    @property
    def space(self):
        return self.manifold.space

    # ---- cochain structure --------------------------------------------
    def zero_cochain(self, p: int) -> dict:
        out = {}
        if self.kind in ("extended", "bivector", "linebundle"):
            deg = p if self.kind == "linebundle" else p + 2
            out["amb"] = {c.name: Polyvector.zero(c.vars, deg)
                          for c in self.space.charts}
        if self.kind in ("normal", "extended"):
            S = self.submanifold
            out["nor"] = {
                name: [Polyvector.zero(self.space.chart(name).vars, p)
                       for _ in range(S.codim)]
                for name in S.present_charts()}
        return out

    # ---- differential --------------------------------------------------
    def differential(self, cochain: dict, p: int) -> dict:
        if self.kind == "normal":
            return {"nor": self._d_normal(cochain["nor"], p)}
        if self.kind == "extended":
            amb = cochain.get("amb", {})
            nor_in = cochain.get("nor", {})
            S = self.submanifold
            amb_out = {}
            for name, pv in amb.items():
                amb_out[name] = -schouten(pv, self.manifold.bivector(name))
            nor_out = self._d_normal(nor_in, p) if nor_in else {
                name: [Polyvector.zero(self.space.chart(name).vars, p + 1)
                       for _ in range(S.codim)]
                for name in S.present_charts()}
            for name in S.present_charts():
                pv = amb.get(name)
                if pv is None:
                    continue
                w = S.normal[name]
                chart_vars = self.space.chart(name).vars
                for a, wv in enumerate(w):
                    coupling = restrict(
                        schouten(pv, Polyvector.from_function(
                            LaurentPoly.variable(chart_vars, wv))), w)
                    nor_out[name][a] = nor_out[name][a] + coupling
            return {"amb": amb_out, "nor": nor_out}
        if self.kind == "linebundle":
            lb = self.linebundle
            out = {}
            for name, pv in cochain["amb"].items():
                t_full = lb.fields[name]
                term = -schouten(pv, self.manifold.bivector(name))
                tw = wedge(pv, t_full)
                out[name] = term + tw if p % 2 == 0 else term - tw
            return {"amb": out}
        if self.kind == "bivector":
            return {"amb": {name: -schouten(pv, self.manifold.bivector(name))
                            for name, pv in cochain["amb"].items()}}
        raise InconsistentData(f"unknown complex kind {self.kind!r}")

    def _d_normal(self, nor: dict, p: int) -> dict:
        S = self.submanifold
        out = {}
        for name, tup in nor.items():
            w = S.normal[name]
            T0 = S.structure_fields_restricted(name)
            lam = self.manifold.bivector(name)
            row = []
            for a in range(S.codim):
                val = -restrict(schouten(tup[a], lam), w)
                for b in range(S.codim):
                    tw = wedge(tup[b], T0[a][b])
                    val = val + tw if p % 2 == 0 else val - tw
                row.append(val)
            out[name] = row
        return out

    # ---- probes --------------------------------------------------------
    def monomial_probes(self, p: int, degree: int):
        """Single-monomial cochains of coefficient degree <= degree."""
        if self.kind in ("normal", "extended"):
            S = self.submanifold
            for name in S.present_charts():
                chart = self.space.chart(name)
                tvars = S.tangential[name]
                tidx = [chart.vars.index(v) for v in tvars]
                for a in range(S.codim):
                    for idx in combinations(range(len(chart.vars)), p):
                        for e_t in _simplex(len(tvars), degree):
                            e = [0] * len(chart.vars)
                            for pos, x in zip(tidx, e_t):
                                e[pos] = x
                            pv = Polyvector(chart.vars, p, {
                                idx: LaurentPoly.monomial(chart.vars, e)})
                            z = self.zero_cochain(p)
                            z["nor"][name][a] = pv
                            yield z
        if self.kind in ("extended", "bivector", "linebundle"):
            deg = p if self.kind == "linebundle" else p + 2
            for chart in self.space.charts:
                n = len(chart.vars)
                if deg > n:
                    continue
                for idx in combinations(range(n), deg):
                    for e in _simplex(n, degree):
                        pv = Polyvector(chart.vars, deg, {
                            idx: LaurentPoly.monomial(chart.vars, e)})
                        z = self.zero_cochain(p)
                        z["amb"][chart.name] = pv
                        yield z

    def assert_square_zero(self, p: int = 0, degree: int | None = None):
        degree = self.probe_degree if degree is None else degree
        for probe in self.monomial_probes(p, degree):
            twice = self.differential(self.differential(probe, p), p + 1)
            if not cochain_is_zero(twice):
                raise InconsistentData(
                    f"differential does not square to zero on probe {probe}")


def build_complex(kind: str, *, manifold: PoissonManifold | None = None,
                  submanifold: SubmanifoldData | None = None,
                  linebundle: PoissonLineBundle | None = None,
                  probe_degree: int = 6, probe: bool = True) -> ComplexDescriptor:
    if kind not in KINDS:
        raise InconsistentData(f"unknown complex kind {kind!r}")
    if kind in ("normal", "extended"):
        if submanifold is None:
            raise InconsistentData(f"{kind} complex needs submanifold data")
        manifold = submanifold.manifold
    if kind == "linebundle":
        if linebundle is None:
            raise InconsistentData("linebundle complex needs line-bundle data")
        submanifold = linebundle.submanifold
        manifold = submanifold.manifold
        if manifold.space.transitions:
            raise InconsistentData(
                "the scalar-slot complex runs on the single-chart engine only")
    if kind == "bivector" and manifold is None:
        raise InconsistentData("bivector complex needs a structured space")
    desc = ComplexDescriptor(kind, manifold, submanifold, linebundle, probe_degree)
    if probe:
        desc.assert_square_zero(0, min(probe_degree, 6))
    return desc


# ----------------------------------------------------------------------
# Global sections over an atlas
# ----------------------------------------------------------------------

@dataclass
class SectionSpace:
    kind: str
    term_degree: int
    basis: list
    degree_bound: int
    stable: bool
    dims_checked: dict = field(default_factory=dict)

    @property
    def dimension(self) -> int:
        return len(self.basis)

    def coordinates_of(self, cochain: dict):
        """Exact coordinates of a cochain in this basis; None if outside."""
        keys, cols = vectorize(self.basis + [cochain])
        mat = [[cols[j][i] for j in range(len(self.basis))]
               for i in range(len(keys))]
        rhs = [cols[-1][i] for i in range(len(keys))]
        sol, _ = solve_min(mat, rhs)
        return sol


def suggested_bound(space) -> int:
    worst = 0
    for tmap in space.transitions.values():
        for expr in tmap.values():
            for e in expr.terms:
                worst = max(worst, max(abs(x) for x in e) if e else 0)
    return worst + 3


def transport_nor_tuple(S: SubmanifoldData, tup, src: str, dst: str):
    """Identify a chart-src normal tuple on chart dst (first-order matrix
    times the pushed-forward components)."""
    r = S.codim
    F = S.first_order[(dst, src)]
    moved = [S.push_restrict(pv, src, dst) for pv in tup]
    chart_vars = S.space.chart(dst).vars
    out = []
    for g in range(r):
        acc = Polyvector.zero(chart_vars, moved[0].degree)
        for a in range(r):
            coeff = S.substitute_tangential(F[g][a], src, dst)
            acc = acc + coeff * moved[a]
        out.append(acc)
    return out


def _atom_sections(descriptor: ComplexDescriptor, part: str, p: int, bound: int):
    """Atoms (root-chart monomial candidates) and their transported chart
    representatives, plus the holomorphy constraint matrix."""
    space = descriptor.space
    if part == "nor":
        S = descriptor.submanifold
        charts = list(S.present_charts())
        root = charts[0]
        tree = space.spanning_tree(root, charts)
        chart = space.chart(root)
        tvars = S.tangential[root]
        tidx = [chart.vars.index(v) for v in tvars]
        atoms = []
        for a in range(S.codim):
            for idx in combinations(range(len(chart.vars)), p):
                for e_t in sorted(_simplex(len(tvars), bound),
                                  key=lambda t: (sum(t), t)):
                    e = [0] * len(chart.vars)
                    for pos, x in zip(tidx, e_t):
                        e[pos] = x
                    atoms.append((a, idx, tuple(e)))
        reps = []
        for (a, idx, e) in atoms:
            tup = [Polyvector.zero(chart.vars, p) for _ in range(S.codim)]
            tup[a] = Polyvector(chart.vars, p,
                                {idx: LaurentPoly.monomial(chart.vars, e)})
            rep = {root: tup}
            for (parent, child) in tree:
                rep[child] = transport_nor_tuple(S, rep[parent], parent, child)
            reps.append(rep)
        return charts, atoms, reps
    # ambient parts
    deg = p if descriptor.kind == "linebundle" else p + 2
    charts = list(space.chart_names)
    root = charts[0]
    tree = space.spanning_tree(root, charts) if len(charts) > 1 else []
    chart = space.chart(root)
    n = len(chart.vars)
    atoms = []
    for idx in combinations(range(n), deg):
        for e in sorted(_simplex(n, bound), key=lambda t: (sum(t), t)):
            atoms.append((None, idx, e))
    reps = []
    for (_, idx, e) in atoms:
        pv = Polyvector(chart.vars, deg,
                        {idx: LaurentPoly.monomial(chart.vars, e)})
        rep = {root: pv}
        for (parent, child) in tree:
            rep[child] = space.pushforward(rep[parent], parent, child)
        reps.append(rep)
    return charts, atoms, reps


def _holomorphy_matrix(charts, reps, is_nor: bool):
    """Rows: coefficients of negative-exponent monomials across charts."""
    row_keys = set()
    maps = []
    for rep in reps:
        m = {}
        for cname in charts:
            data = rep[cname]
            items = (enumerate(data) if is_nor else [(0, data)])
            for slot, pv in items:
                for idx, coeff in pv.terms.items():
                    for e, val in coeff.terms.items():
                        if min(e) < 0:
                            m[(cname, slot, idx, e)] = val
        maps.append(m)
        row_keys.update(m)
    row_keys = sorted(row_keys)
    matrix = [[m.get(k, Fraction(0)) for m in maps] for k in row_keys]
    return matrix


def _sections_at_bound(descriptor, part, p, bound):
    charts, atoms, reps = _atom_sections(descriptor, part, p, bound)
    matrix = _holomorphy_matrix(charts, reps, part == "nor")
    kernel = nullspace(matrix, ncols=len(atoms))
    sections = []
    for vec in kernel:
        if part == "nor":
            S = descriptor.submanifold
            combo = {}
            for cname in charts:
                cvars = descriptor.space.chart(cname).vars
                tup = [Polyvector.zero(cvars, p) for _ in range(S.codim)]
                for coeff, rep in zip(vec, reps):
                    if coeff:
                        tup = [u + coeff * v for u, v in zip(tup, rep[cname])]
                combo[cname] = tup
            sections.append({"nor": combo})
        else:
            combo = {}
            for cname in charts:
                cvars = descriptor.space.chart(cname).vars
                deg = p if descriptor.kind == "linebundle" else p + 2
                pv = Polyvector.zero(cvars, deg)
                for coeff, rep in zip(vec, reps):
                    if coeff:
                        pv = pv + coeff * rep[cname]
                combo[cname] = pv
            sections.append({"amb": combo})
    return sections


def global_sections(descriptor: ComplexDescriptor, term_degree: int = 0,
                    bound: int | None = None, max_bound: int = 12) -> SectionSpace:
    """Basis of global sections of one term of the complex, via a root-chart
    ansatz transported along a spanning tree; certified stable when the
    dimension agrees at the bound and the bound plus one."""
    if descriptor.kind == "linebundle" or not descriptor.space.transitions:
        # single chart: every bounded cochain is a section; enumerate directly
        b = bound if bound is not None else suggested_bound(descriptor.space)
        parts = []
        if descriptor.kind in ("normal", "extended"):
            parts.append("nor")
        if descriptor.kind in ("extended", "bivector", "linebundle"):
            parts.append("amb")
        basis = []
        for part in parts:
            _, atoms, reps = _atom_sections(descriptor, part, term_degree, b)
            for rep in reps:
                if part == "nor":
                    basis.append({"nor": rep})
                else:
                    basis.append({"amb": rep})
        return SectionSpace(descriptor.kind, term_degree, basis, b, True,
                            {b: len(basis)})
    b = bound if bound is not None else suggested_bound(descriptor.space)
    parts = []
    if descriptor.kind in ("normal", "extended"):
        parts.append("nor")
    if descriptor.kind in ("extended", "bivector"):
        parts.append("amb")
    while True:
        dims = {}
        per_part = {}
        for part in parts:
            per_part[part] = _sections_at_bound(descriptor, part, term_degree, b)
        d_b = sum(len(v) for v in per_part.values())
        d_next = sum(len(_sections_at_bound(descriptor, part, term_degree, b + 1))
                     for part in parts)
        dims[b], dims[b + 1] = d_b, d_next
        if d_b == d_next:
            basis = []
            for part in parts:
                basis.extend(per_part[part])
            return SectionSpace(descriptor.kind, term_degree, basis, b, True, dims)
        if b + 1 >= max_bound:
            raise UnstableAnsatz(
                f"section dimension still changing at degree bound {b + 1}: "
                f"{dims}")
        b += 1


# ----------------------------------------------------------------------
# Degree-zero hypercohomology over the atlas
# ----------------------------------------------------------------------

@dataclass
class CohomologyReport:
    kind: str
    engine: str
    dimension: int | None
    basis: list
    degree_bound: int | None = None
    stable: bool = True
    section_dimension: int | None = None
    weights: dict = field(default_factory=dict)
    truncated: bool = False
    notes: tuple = ()


def h0_complex(descriptor: ComplexDescriptor, bound: int | None = None,
               max_bound: int = 12) -> CohomologyReport:
    """Kernel of the first differential on global sections."""
    space = global_sections(descriptor, 0, bound, max_bound)
    if not space.basis:
        return CohomologyReport(descriptor.kind, "atlas", 0, [],
                                space.degree_bound, space.stable, 0)
    images = [descriptor.differential(s, 0) for s in space.basis]
    keys, cols = vectorize(images)
    matrix = [[cols[j][i] for j in range(len(images))] for i in range(len(keys))]
    kernel = nullspace(matrix, ncols=len(images))
    basis = [cochain_lincomb(vec, space.basis) for vec in kernel]
    return CohomologyReport(descriptor.kind, "atlas", len(basis), basis,
                            space.degree_bound, space.stable, space.dimension)


# ----------------------------------------------------------------------
# Affine graded engine
# ----------------------------------------------------------------------

def _structure_weight(descriptor: ComplexDescriptor):
    """Common weight (coefficient degree minus frame degree) of the structure
    terms; None when the structure is not weight-homogeneous."""
    weights = set()
    for name in descriptor.space.chart_names:
        pv = descriptor.manifold.bivector(name)
        for idx, coeff in pv.terms.items():
            for e in coeff.terms:
                weights.add(sum(e) - 2)
    if descriptor.kind == "linebundle":
        for pv in descriptor.linebundle.fields.values():
            for idx, coeff in pv.terms.items():
                for e in coeff.terms:
                    weights.add(sum(e) - 1)
    if descriptor.kind in ("normal", "extended"):
        S = descriptor.submanifold
        for name in S.present_charts():
            for row in S.structure_fields_restricted(name):
                for pv in row:
                    for idx, coeff in pv.terms.items():
                        for e in coeff.terms:
                            weights.add(sum(e) - 1)
    if not weights:
        return 0, True
    if len(weights) == 1:
        return weights.pop(), True
    return max(weights), False


def _weight_atoms(descriptor: ComplexDescriptor, p: int, weight: int):
    """Monomial atoms of the given weight for term degree p (single chart)."""
    chart = descriptor.space.charts[0]
    n = len(chart.vars)
    atoms = []
    if descriptor.kind in ("normal", "extended"):
        S = descriptor.submanifold
        tvars = S.tangential[chart.name]
        tidx = [chart.vars.index(v) for v in tvars]
        for a in range(S.codim):
            for idx in combinations(range(n), p):
                need = weight + p
                if need < 0:
                    continue
                for e_t in _simplex(len(tvars), need):
                    if sum(e_t) != need:
                        continue
                    e = [0] * n
                    for pos, x in zip(tidx, e_t):
                        e[pos] = x
                    atoms.append(("nor", a, idx, tuple(e)))
    if descriptor.kind in ("extended", "bivector", "linebundle"):
        deg = p if descriptor.kind == "linebundle" else p + 2
        if deg <= n:
            for idx in combinations(range(n), deg):
                need = weight + deg
                if need < 0:
                    continue
                for e in _simplex(n, need):
                    if sum(e) != need:
                        continue
                    atoms.append(("amb", None, idx, tuple(e)))
    return atoms


def _atom_to_cochain(descriptor, p, atom):
    chart = descriptor.space.charts[0]
    part, a, idx, e = atom
    z = descriptor.zero_cochain(p)
    pv = Polyvector(chart.vars,
                    (p if descriptor.kind == "linebundle" else p + 2)
                    if part == "amb" else p,
                    {idx: LaurentPoly.monomial(chart.vars, e)})
    if part == "nor":
        z["nor"][chart.name][a] = pv
    else:
        z["amb"][chart.name] = pv
    return z


def _weight_matrix(descriptor, p, w_in, w_out):
    """Matrix of the differential from weight w_in atoms at term p to weight
    w_out atoms at term p+1; returns (matrix, in_atoms, out_atoms)."""
    in_atoms = _weight_atoms(descriptor, p, w_in)
    out_atoms = _weight_atoms(descriptor, p + 1, w_out)
    out_index = {atom: i for i, atom in enumerate(out_atoms)}
    cols = []
    for atom in in_atoms:
        img = descriptor.differential(_atom_to_cochain(descriptor, p, atom), p)
        col = [Fraction(0)] * len(out_atoms)
        for key, val in cochain_vector_entries(img):
            if key[0] == "amb":
                _, c, idx, e = key
                akey = ("amb", None, idx, e)
            else:
                _, c, slot, idx, e = key
                akey = ("nor", slot, idx, e)
            if akey in out_index:
                col[out_index[akey]] += val
            elif val:
                raise InconsistentData(
                    "differential left the graded window; structure is not "
                    "weight-homogeneous")
        cols.append(col)
    matrix = [[cols[j][i] for j in range(len(in_atoms))]
              for i in range(len(out_atoms))]
    return matrix, in_atoms, out_atoms


def affine_hyper(descriptor: ComplexDescriptor, weights: Iterable[int],
                 degrees: tuple = (0, 1)) -> CohomologyReport:
    """Per-weight exact cohomology in degrees 0 and/or 1 on a single chart.

    With a weight-homogeneous structure the differential shifts weight by a
    fixed amount and the per-weight answers are exact; otherwise the top
    filtration weight is used and the report carries a truncation note.
    """
    if descriptor.space.transitions:
        raise InconsistentData("the graded engine needs a single-chart space")
    shift, homogeneous = _structure_weight(descriptor)
    notes = () if homogeneous else (
        "structure not weight-homogeneous: graded answers are the top "
        "filtration layer only",)
    weights = list(weights)
    report = CohomologyReport(descriptor.kind, "affine-graded", None, [],
                              truncated=not homogeneous, notes=notes)
    h0_basis = {}
    for w in weights:
        m0, in0, _ = _weight_matrix(descriptor, 0, w, w + shift)
        if 0 in degrees:
            kern = nullspace(m0, ncols=len(in0))
            basis = [cochain_lincomb(vec,
                                     [_atom_to_cochain(descriptor, 0, a)
                                      for a in in0]) for vec in kern]
            h0_basis[w] = basis
            report.weights.setdefault("H0", {})[w] = len(basis)
        if 1 in degrees:
            m1, in1, _ = _weight_matrix(descriptor, 1, w, w + shift)
            k1 = len(in1) - rank(m1) if in1 else 0
            mprev, inprev, _ = _weight_matrix(descriptor, 0, w - shift, w)
            r_im = rank(mprev) if inprev else 0
            report.weights.setdefault("H1", {})[w] = k1 - r_im
    report.basis = h0_basis
    if "H0" in report.weights:
        report.dimension = sum(report.weights["H0"].values())
    return report


def semiregularity_image_rank(lb_descriptor: ComplexDescriptor,
                              nor_descriptor: ComplexDescriptor,
                              weight: int) -> int:
    """Rank of the image of the weight-w degree-1 cohomology of the scalar
    ambient complex inside the degree-1 cohomology of the restricted complex.

    Both complexes must live on the same single-chart space with the same
    structure; the restriction map sets the normal variable to zero and keeps
    every frame component.
    """
    S = nor_descriptor.submanifold
    chart = nor_descriptor.space.charts[0]
    w_names = S.normal[chart.name]
    shift, _ = _structure_weight(nor_descriptor)
    # cocycles upstairs
    m1, in1, _ = _weight_matrix(lb_descriptor, 1, weight, weight + shift)
    cocycles = nullspace(m1, ncols=len(in1))
    atoms1 = [_atom_to_cochain(lb_descriptor, 1, a) for a in in1]
    # coordinates downstairs
    out_atoms = _weight_atoms(nor_descriptor, 1, weight)
    out_index = {a: i for i, a in enumerate(out_atoms)}

    def restrict_vec(cochain):
        vec = [Fraction(0)] * len(out_atoms)
        pv = cochain["amb"][chart.name]
        rest = restrict(pv, w_names)
        for idx, coeff in rest.terms.items():
            for e, val in coeff.terms.items():
                akey = ("nor", 0, idx, e)
                if akey in out_index:
                    vec[out_index[akey]] += val
        return vec

    restricted = [restrict_vec(cochain_lincomb(vec, atoms1)) for vec in cocycles]
    mprev, inprev, _ = _weight_matrix(nor_descriptor, 0, weight - shift, weight)
    image_rows = []
    for j in range(len(inprev)):
        image_rows.append([mprev[i][j] for i in range(len(out_atoms))])
    base = rank(image_rows) if image_rows else 0
    total = rank(image_rows + restricted) if (image_rows or restricted) else 0
    return total - base


# ----------------------------------------------------------------------
# Characteristic map
# ----------------------------------------------------------------------

def characteristic_map(descriptor: ComplexDescriptor, basis: list, state) -> list:
    """Coordinates, in the given degree-zero basis, of the first-order
    directions of a family (one coordinate vector per parameter).

    The directions are certified to glue and to be closed before solving;
    NotInKernel otherwise.
    """
    params = state.params
    out = []
    for rho, pname in enumerate(params):
        unit = tuple(1 if i == rho else 0 for i in range(len(params)))
        direction = {}
        if descriptor.kind in ("normal", "extended"):
            S = descriptor.submanifold
            direction["nor"] = {}
            for name in S.present_charts():
                cvars = descriptor.space.chart(name).vars
                tup = []
                for a in range(S.codim):
                    coeff = state.phi[name][a].coefficient(unit)
                    f = (coeff.with_vars(cvars) if coeff is not None
                         else LaurentPoly.zero(cvars))
                    tup.append(Polyvector.from_function(f))
                direction["nor"][name] = tup
        if descriptor.kind == "extended":
            direction["amb"] = {}
            for name in descriptor.space.chart_names:
                cvars = descriptor.space.chart(name).vars
                coeff = state.lam[name].coefficient(unit)
                direction["amb"][name] = (coeff if coeff is not None
                                          else Polyvector.zero(cvars, 2))
        # closedness
        if not cochain_is_zero(descriptor.differential(direction, 0)):
            raise NotInKernel(
                f"first-order direction of {pname} is not closed")
        # gluing
        if descriptor.kind in ("normal", "extended"):
            S = descriptor.submanifold
            present = S.present_charts()
            for (i, k) in descriptor.space.overlap_pairs():
                if i not in present or k not in present:
                    continue
                moved = transport_nor_tuple(S, direction["nor"][k], k, i)
                for a, b in zip(moved, direction["nor"][i]):
                    if not (a - b).is_zero():
                        raise NotInKernel(
                            f"first-order direction of {pname} does not glue "
                            f"between {k} and {i}")
        if descriptor.kind == "extended":
            for (i, k) in descriptor.space.overlap_pairs():
                if (k, i) not in descriptor.space.transitions:
                    continue
                moved = descriptor.space.pushforward(direction["amb"][k], k, i)
                if not (moved - direction["amb"][i]).is_zero():
                    raise NotInKernel(
                        f"first-order bivector direction of {pname} does not "
                        f"glue between {k} and {i}")
        keys, cols = vectorize(basis + [direction])
        mat = [[cols[j][i] for j in range(len(basis))]
               for i in range(len(keys))]
        rhs = [cols[-1][i] for i in range(len(keys))]
        sol, bad = solve_min(mat, rhs)
        if sol is None:
            raise InconsistentData(
                f"direction of {pname} lies outside the provided basis "
                f"(failing row {bad})")
        out.append(sol)
    return out


# ----------------------------------------------------------------------
# Truncated atlas estimate for degree one
# ----------------------------------------------------------------------

def atlas_hyper_truncated(descriptor: ComplexDescriptor, bound: int) -> CohomologyReport:
    """Window-truncated degree-1 dimension estimate over a multi-chart atlas.

    Uses an overlap double complex with all Laurent exponents clipped to
    |e|_1 <= bound. NOT exact; the report is flagged truncated. Supported for
    the restricted-tuple and ambient-polyvector kinds.
    """
    if descriptor.kind not in ("normal", "bivector"):
        raise InconsistentData(
            "truncated atlas estimate supports the restricted-tuple and "
            "ambient-polyvector kinds only")
    is_nor = descriptor.kind == "normal"
    space = descriptor.space
    S = descriptor.submanifold
    charts = list(S.present_charts()) if is_nor else list(space.chart_names)
    pairs = [(i, k) for i in charts for k in charts
             if i < k and (i, k) in space.transitions and (k, i) in space.transitions]
    triples = [(i, j, k) for i in charts for j in charts for k in charts
               if i < j < k and all(p in space.transitions
                                    for p in [(i, j), (j, k), (i, k)])]

    def window(nv, b):
        if nv == 0:
            yield ()
            return
        for h in range(-b, b + 1):
            for t in window(nv - 1, b - abs(h)):
                yield (h,) + t

    def clip(pv):
        return Polyvector(pv.vars, pv.degree, {
            idx: LaurentPoly(pv.vars, {
                e: v for e, v in coeff.terms.items()
                if sum(abs(x) for x in e) <= bound})
            for idx, coeff in pv.terms.items()})

    def clip_chunk(data):
        return [clip(x) for x in data] if is_nor else clip(data)

    def zero_chunk(cname, p):
        cvars = space.chart(cname).vars
        if is_nor:
            return [Polyvector.zero(cvars, p) for _ in range(S.codim)]
        return Polyvector.zero(cvars, p + 2)

    def sub_chunk(x, y):
        if is_nor:
            return [a - b for a, b in zip(x, y)]
        return x - y

    def add_chunk(x, y):
        if is_nor:
            return [a + b for a, b in zip(x, y)]
        return x + y

    def transport(data, src, dst):
        if is_nor:
            return clip_chunk(transport_nor_tuple(S, data, src, dst))
        return clip(space.pushforward(data, src, dst))

    def d_chunk(data, cname, p):
        if is_nor:
            return clip_chunk(descriptor._d_normal({cname: data}, p)[cname])
        return clip(-schouten(data, descriptor.manifold.bivector(cname)))

    def atoms(cname, p):
        chart = space.chart(cname)
        n = len(chart.vars)
        deg = p if is_nor else p + 2
        tvars = S.tangential[cname] if is_nor else chart.vars
        tpos = [chart.vars.index(v) for v in tvars]
        slots = range(S.codim) if is_nor else [None]
        out = []
        for a in slots:
            for idx in combinations(range(n), deg):
                for e_t in window(len(tvars), bound):
                    e = [0] * n
                    for pos, x in zip(tpos, e_t):
                        e[pos] = x
                    out.append((a, idx, tuple(e)))
        return out

    def atom_chunk(cname, p, atom):
        chart = space.chart(cname)
        a, idx, e = atom
        pv = Polyvector(chart.vars, p if is_nor else p + 2,
                        {idx: LaurentPoly.monomial(chart.vars, e)})
        chunk = zero_chunk(cname, p)
        if is_nor:
            chunk[a] = pv
            return chunk
        return pv

    target_layout = [("t", k, 0) for (_, _, k) in triples] + \
                    [("m", k, 1) for (_, k) in pairs]
    target_atoms = {}
    offset = 0
    offsets = []
    for tag, cname, p in target_layout:
        al = atoms(cname, p)
        offsets.append(offset)
        target_atoms[len(offsets) - 1] = {a: i for i, a in enumerate(al)}
        offset += len(al)
    nrows = offset

    def embed(chunks):
        vec = [Fraction(0)] * nrows
        for slot_i, data in enumerate(chunks):
            index = target_atoms[slot_i]
            base = offsets[slot_i]
            items = (enumerate(data) if is_nor else [(None, data)])
            for a, pv in items:
                for idx, coeff in pv.terms.items():
                    for e, val in coeff.terms.items():
                        key = (a, idx, e)
                        if key in index:
                            vec[base + index[key]] += val
        return vec

    def d1_vector(a_ov, b_ch):
        chunks = []
        for (i, j, k) in triples:
            t = add_chunk(sub_chunk(a_ov[(j, k)], a_ov[(i, k)]),
                          transport(a_ov[(i, j)], j, k))
            chunks.append(t)
        for (i, k) in pairs:
            m = sub_chunk(d_chunk(a_ov[(i, k)], k, 0),
                          sub_chunk(transport(b_ch[i], i, k), b_ch[k]))
            chunks.append(m)
        return embed(chunks)

    cols = []
    for (pi, pk) in pairs:
        for atom in atoms(pk, 0):
            a_ov = {pr: zero_chunk(pr[1], 0) for pr in pairs}
            a_ov[(pi, pk)] = atom_chunk(pk, 0, atom)
            b_ch = {c: zero_chunk(c, 1) for c in charts}
            cols.append(d1_vector(a_ov, b_ch))
    for cn in charts:
        for atom in atoms(cn, 1):
            a_ov = {pr: zero_chunk(pr[1], 0) for pr in pairs}
            b_ch = {c: zero_chunk(c, 1) for c in charts}
            b_ch[cn] = atom_chunk(cn, 1, atom)
            cols.append(d1_vector(a_ov, b_ch))
    matrix = [[col[i] for col in cols] for i in range(nrows)]
    kernel_dim = (len(cols) - rank(matrix)) if cols else 0

    # image of the degree-0 map in the SAME domain coordinates as the kernel
    dom_layout = [("a", k, 0) for (_, k) in pairs] + [("b", c, 1) for c in charts]
    dom_atoms = {}
    offset = 0
    dom_offsets = []
    for tag, cname, p in dom_layout:
        al = atoms(cname, p)
        dom_offsets.append(offset)
        dom_atoms[len(dom_offsets) - 1] = {a: i for i, a in enumerate(al)}
        offset += len(al)
    dom_rows = offset

    def embed_dom(a_ov, b_ch):
        vec = [Fraction(0)] * dom_rows
        chunk_list = [a_ov[pr] for pr in pairs] + [b_ch[c] for c in charts]
        for slot_i, data in enumerate(chunk_list):
            index = dom_atoms[slot_i]
            base = dom_offsets[slot_i]
            items = (enumerate(data) if is_nor else [(None, data)])
            for a, pv in items:
                for idx, coeff in pv.terms.items():
                    for e, val in coeff.terms.items():
                        key = (a, idx, e)
                        if key in index:
                            vec[base + index[key]] += val
        return vec

    im_cols = []
    for cn in charts:
        for atom in atoms(cn, 0):
            c_ch = {c: zero_chunk(c, 0) for c in charts}
            c_ch[cn] = atom_chunk(cn, 0, atom)
            a_ov = {(i, k): sub_chunk(transport(c_ch[i], i, k), c_ch[k])
                    for (i, k) in pairs}
            b_ch = {c: d_chunk(c_ch[c], c, 0) for c in charts}
            im_cols.append(embed_dom(a_ov, b_ch))
    rank_d0 = rank([[col[i] for col in im_cols]
                    for i in range(dom_rows)]) if im_cols else 0
    return CohomologyReport(descriptor.kind, "atlas-truncated",
                            kernel_dim - rank_d0, [], degree_bound=bound,
                            stable=False, truncated=True,
                            notes=("window-truncated estimate; not exact",))
