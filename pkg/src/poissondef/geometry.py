"""Charted spaces, Poisson structures on them, and submanifold data.

A ChartedSpace stores, for each ordered chart pair (i, k) that overlaps, the
expression of every chart-i variable in chart-k coordinates (Laurent, since
the standard atlases invert coordinates). Submanifold extraction computes the
restriction tensors: the first-order normal transition matrices and the
structure vector fields appearing in the bracket of the structure with each
normal variable, and certifies the compatibility identities they satisfy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    ChartMismatch,
    InconsistentData,
    NonAdaptedTransition,
    NotPoissonSubmanifold,
    WrongCodimension,
)
from .polyvector import Polyvector, pushforward, restrict, schouten, wedge
from .symbolic import LaurentPoly, substitute


@dataclass(frozen=True)
class Chart:
    name: str
    vars: tuple


class ChartedSpace:
    """An atlas with explicit Laurent transition maps."""

    def __init__(self, name: str, charts: Iterable[Chart],
                 transitions: Mapping[tuple, Mapping[str, LaurentPoly]]):
        self.name = name
        self.charts = tuple(charts)
        self._by_name = {c.name: c for c in self.charts}
        if len(self._by_name) != len(self.charts):
            raise InconsistentData("duplicate chart names")
        self.transitions = {}
        for (i, k), tmap in transitions.items():
            ci, ck = self.chart(i), self.chart(k)
            fixed = {}
            for v, expr in tmap.items():
                if v not in ci.vars:
                    raise InconsistentData(
                        f"transition {i}->{k} assigns unknown variable {v!r}")
                fixed[v] = expr.with_vars(ck.vars) if expr.vars != ck.vars else expr
            missing = [v for v in ci.vars if v not in fixed]
            if missing:
                raise InconsistentData(
                    f"transition {i}->{k} misses variables {missing}")
            self.transitions[(i, k)] = fixed

    def chart(self, name: str) -> Chart:
        try:
            return self._by_name[name]
        except KeyError:
            raise ChartMismatch(f"unknown chart {name!r}") from None

    @property
    def chart_names(self):
        return tuple(c.name for c in self.charts)

    def overlap_pairs(self):
        return sorted(self.transitions.keys())

    # ---- transport ----------------------------------------------------
    def substitute_chart(self, f: LaurentPoly, src: str, dst: str) -> LaurentPoly:
        """Express a function of chart-src coordinates in chart-dst ones."""
        if (src, dst) not in self.transitions:
            raise ChartMismatch(f"no transition {src}->{dst}")
        if f.vars != self.chart(src).vars:
            f = f.with_vars(self.chart(src).vars)
        out = substitute(f, self.transitions[(src, dst)])
        if out.vars != self.chart(dst).vars:
            out = out.with_vars(self.chart(dst).vars)
        return out

    def pushforward(self, a: Polyvector, src: str, dst: str) -> Polyvector:
        """Re-express a chart-src polyvector on chart dst."""
        if src == dst:
            return a
        if (dst, src) not in self.transitions or (src, dst) not in self.transitions:
            raise ChartMismatch(f"no two-way transition between {src} and {dst}")
        return pushforward(a, self.transitions[(dst, src)],
                           self.transitions[(src, dst)],
                           self.chart(dst).vars)

    def spanning_tree(self, root: str, subset: Iterable[str] | None = None):
        """BFS tree edges (parent, child) over declared overlaps."""
        names = list(subset) if subset is not None else list(self.chart_names)
        if root not in names:
            raise ChartMismatch(f"root {root!r} not in chart subset")
        seen = {root}
        order = [root]
        edges = []
        queue = [root]
        while queue:
            cur = queue.pop(0)
            for nxt in names:
                if nxt in seen:
                    continue
                if (cur, nxt) in self.transitions and (nxt, cur) in self.transitions:
                    seen.add(nxt)
                    edges.append((cur, nxt))
                    order.append(nxt)
                    queue.append(nxt)
        if len(seen) != len(names):
            raise InconsistentData(
                f"overlap graph not connected over {names}")
        return edges

    # ---- validation ---------------------------------------------------
    def validate(self) -> dict:
        """Check two-way compositions and triple cocycle identities."""
        report = {"inverses": {}, "cocycles": {}, "pass": True}
        for (i, k) in self.overlap_pairs():
            if (k, i) not in self.transitions:
                continue
            ok = True
            for v in self.chart(i).vars:
                expr = self.substitute_chart(self.transitions[(i, k)][v], k, i)
                if expr != LaurentPoly.variable(self.chart(i).vars, v):
                    ok = False
            report["inverses"][f"{i}->{k}->{i}"] = ok
            report["pass"] &= ok
        names = self.chart_names
        for i in names:
            for j in names:
                for k in names:
                    if len({i, j, k}) != 3:
                        continue
                    if ((i, j) in self.transitions and (j, k) in self.transitions
                            and (i, k) in self.transitions):
                        ok = True
                        for v in self.chart(i).vars:
                            via_j = substitute(self.transitions[(i, j)][v],
                                               self.transitions[(j, k)])
                            direct = self.transitions[(i, k)][v]
                            if via_j.with_vars(direct.vars) != direct:
                                ok = False
                        report["cocycles"][f"{i}->{j}->{k}"] = ok
                        report["pass"] &= ok
        return report


# ----------------------------------------------------------------------
# Built-in atlases
# ----------------------------------------------------------------------

def affine_space(n: int, names: Iterable[str] | None = None) -> ChartedSpace:
    names = tuple(names) if names else tuple(f"x{i+1}" for i in range(n))
    if len(names) != n:
        raise InconsistentData("wrong number of variable names")
    return ChartedSpace(f"Affine({n})", [Chart("U", names)], {})


def projective_space(n: int) -> ChartedSpace:
    """n-dimensional projective space, n+1 standard charts U0..Un.

    On chart Ui the j-th variable z{j} is the ratio of homogeneous coordinate
    a_j over coordinate i, where a_1 < ... < a_n runs over {0..n} minus {i}.
    """
    if not 1 <= n <= 3:
        raise InconsistentData("projective atlas supported for dimensions 1..3")
    charts = [Chart(f"U{i}", tuple(f"z{j+1}" for j in range(n)))
              for i in range(n + 1)]
    hom = {i: [a for a in range(n + 1) if a != i] for i in range(n + 1)}
    transitions = {}
    for i in range(n + 1):
        for k in range(n + 1):
            if i == k:
                continue
            kvars = charts[k].vars

            def ratio(a):  # homogeneous a over homogeneous k, in Uk coords
                if a == k:
                    return LaurentPoly.const(kvars, 1)
                return LaurentPoly.variable(kvars, f"z{hom[k].index(a)+1}")

            den = ratio(i)  # xi_i / xi_k, a single variable (invertible)
            tmap = {}
            for j, a in enumerate(hom[i]):
                tmap[f"z{j+1}"] = ratio(a) * den.inverse()
            transitions[(f"U{i}", f"U{k}")] = tmap
    return ChartedSpace(f"P{n}", charts, transitions)


def hirzebruch(m: int) -> ChartedSpace:
    """The rational ruled surface of index m >= 0, four standard charts.

    U1(z, xi) and U2(zp, xip) cover the base-affine pieces of one ruling
    section's neighborhood with xi = zp^m * xip; U3/U4 invert the fibre
    coordinate (eta = 1/xi, etap = 1/xip).
    """
    if m < 0:
        raise InconsistentData("ruled-surface index must be >= 0")
    U1 = Chart("U1", ("z", "xi"))
    U2 = Chart("U2", ("zp", "xip"))
    U3 = Chart("U3", ("z", "eta"))
    U4 = Chart("U4", ("zp", "etap"))

    def mono(vars, exps):
        return LaurentPoly.monomial(vars, exps)

    t = {}
    t[("U1", "U2")] = {"z": mono(U2.vars, (-1, 0)), "xi": mono(U2.vars, (m, 1))}
    t[("U2", "U1")] = {"zp": mono(U1.vars, (-1, 0)), "xip": mono(U1.vars, (m, 1))}
    t[("U1", "U3")] = {"z": mono(U3.vars, (1, 0)), "xi": mono(U3.vars, (0, -1))}
    t[("U3", "U1")] = {"z": mono(U1.vars, (1, 0)), "eta": mono(U1.vars, (0, -1))}
    t[("U2", "U4")] = {"zp": mono(U4.vars, (1, 0)), "xip": mono(U4.vars, (0, -1))}
    t[("U4", "U2")] = {"zp": mono(U2.vars, (1, 0)), "etap": mono(U2.vars, (0, -1))}
    t[("U3", "U4")] = {"z": mono(U4.vars, (-1, 0)), "eta": mono(U4.vars, (-m, 1))}
    t[("U4", "U3")] = {"zp": mono(U3.vars, (-1, 0)), "etap": mono(U3.vars, (-m, 1))}
    t[("U1", "U4")] = {"z": mono(U4.vars, (-1, 0)), "xi": mono(U4.vars, (m, -1))}
    t[("U4", "U1")] = {"zp": mono(U1.vars, (-1, 0)), "etap": mono(U1.vars, (-m, -1))}
    t[("U2", "U3")] = {"zp": mono(U3.vars, (-1, 0)), "xip": mono(U3.vars, (m, -1))}
    t[("U3", "U2")] = {"z": mono(U2.vars, (-1, 0)), "eta": mono(U2.vars, (-m, -1))}
    return ChartedSpace(f"F{m}", [U1, U2, U3, U4], t)


def product(a: ChartedSpace, b: ChartedSpace, name: str | None = None) -> ChartedSpace:
    """Product atlas: one chart per chart pair, transitions componentwise."""
    charts = []
    for ca in a.charts:
        for cb in b.charts:
            if set(ca.vars) & set(cb.vars):
                raise InconsistentData(
                    f"variable clash between factors: {ca.vars} vs {cb.vars}")
            charts.append(Chart(f"{ca.name}x{cb.name}", ca.vars + cb.vars))
    transitions = {}
    for ca in a.charts:
        for cb in b.charts:
            for da in a.charts:
                for db in b.charts:
                    if (ca.name, cb.name) == (da.name, db.name):
                        continue
                    if ca.name != da.name and (ca.name, da.name) not in a.transitions:
                        continue
                    if cb.name != db.name and (cb.name, db.name) not in b.transitions:
                        continue
                    dst_vars = da.vars + db.vars
                    tmap = {}
                    for v in ca.vars:
                        expr = (LaurentPoly.variable(da.vars, v) if ca.name == da.name
                                else a.transitions[(ca.name, da.name)][v])
                        tmap[v] = expr.with_vars(dst_vars)
                    for v in cb.vars:
                        expr = (LaurentPoly.variable(db.vars, v) if cb.name == db.name
                                else b.transitions[(cb.name, db.name)][v])
                        tmap[v] = expr.with_vars(dst_vars)
                    transitions[(f"{ca.name}x{cb.name}", f"{da.name}x{db.name}")] = tmap
    return ChartedSpace(name or f"{a.name}x{b.name}", charts, transitions)


def builtin_space(name: str, args: tuple = ()) -> ChartedSpace:
    key = name.lower()
    if key == "p3":
        return projective_space(3)
    if key == "p2":
        return projective_space(2)
    if key == "p1":
        return projective_space(1)
    if key == "pn":
        return projective_space(int(args[0]))
    if key == "fm":
        return hirzebruch(int(args[0]))
    if key == "affine":
        return affine_space(int(args[0]))
    raise InconsistentData(f"unknown builtin atlas {name!r}")


# ----------------------------------------------------------------------
# Poisson structures
# ----------------------------------------------------------------------

class PoissonManifold:
    """A charted space with a bivector field on each chart."""

    def __init__(self, space: ChartedSpace,
                 bivectors: Mapping[str, Polyvector]):
        self.space = space
        self.bivectors = {}
        for name in space.chart_names:
            chart = space.chart(name)
            b = bivectors.get(name)
            if b is None:
                b = Polyvector.zero(chart.vars, 2)
            if b.degree != 2:
                raise InconsistentData(f"structure on {name} must be a bivector")
            if b.vars != chart.vars:
                raise ChartMismatch(
                    f"bivector on {name} uses {b.vars}, chart has {chart.vars}")
            self.bivectors[name] = b

    def bivector(self, chart: str) -> Polyvector:
        return self.bivectors[chart]

    @classmethod
    def from_chart_data(cls, space: ChartedSpace,
                        bivectors: Mapping[str, Polyvector]) -> "PoissonManifold":
        """Build a structure from bivectors on some charts, propagating to the
        remaining charts by pushforward along a spanning tree. Raises when a
        propagated representative fails to be holomorphic on its chart."""
        given = dict(bivectors)
        if not given:
            raise InconsistentData("no chart carries a bivector")
        root = next(n for n in space.chart_names if n in given)
        for (parent, child) in space.spanning_tree(root):
            if child in given:
                continue
            donor = parent if parent in given else root
            moved = space.pushforward(given[donor], donor, child)
            for idx, coeff in moved.terms.items():
                if coeff.has_negative_exponent():
                    raise InconsistentData(
                        f"structure propagated to chart {child} is singular: "
                        f"{moved}")
            given[child] = moved
        return cls(space, given)


def check_poisson_manifold(M: PoissonManifold) -> dict:
    """Exact integrability ([.,.] with itself vanishes) and chart agreement."""
    report = {"jacobi": {}, "gluing": {}, "pass": True}
    for name in M.space.chart_names:
        ok = schouten(M.bivectors[name], M.bivectors[name]).is_zero()
        report["jacobi"][name] = ok
        report["pass"] &= ok
    for (i, k) in M.space.overlap_pairs():
        if (k, i) not in M.space.transitions:
            continue
        pushed = M.space.pushforward(M.bivectors[k], k, i)
        ok = pushed == M.bivectors[i]
        report["gluing"][f"{k}->{i}"] = ok
        report["pass"] &= ok
    return report


# ----------------------------------------------------------------------
# Submanifolds
# ----------------------------------------------------------------------

ABSENT = "absent"


@dataclass
class SubmanifoldData:
    """A submanifold cut out chartwise by normal coordinates, plus the
    tensors extracted from the Poisson structure along it."""

    manifold: PoissonManifold
    normal: dict          # chart -> tuple of normal variable names, or None
    tangential: dict      # chart -> tuple of remaining variable names
    codim: int
    first_order: dict = field(default_factory=dict)   # (i,k) -> r x r LaurentPoly
    structure_fields: dict = field(default_factory=dict)  # chart -> r x r Polyvector
    checks: dict = field(default_factory=dict)

    @property
    def space(self) -> ChartedSpace:
        return self.manifold.space

    def present_charts(self):
        return tuple(n for n in self.space.chart_names if self.normal[n] is not None)

    def structure_fields_restricted(self, chart: str):
        w = self.normal[chart]
        return [[restrict(entry, w) for entry in row]
                for row in self.structure_fields[chart]]

    def normal_transition(self, i: str, k: str, alpha: int) -> LaurentPoly:
        """Expression of the alpha-th normal variable of chart i in chart-k
        coordinates (the defining transition component)."""
        return self.space.transitions[(i, k)][self.normal[i][alpha]]

    def restrict_function(self, f: LaurentPoly, chart: str) -> LaurentPoly:
        return f.set_zero(self.normal[chart])

    def substitute_tangential(self, f: LaurentPoly, src: str, dst: str) -> LaurentPoly:
        """Express a function of chart-src tangential coordinates in chart-dst
        ones, along the submanifold (normal variables set to zero)."""
        full = f.with_vars(self.space.chart(src).vars)
        out = self.space.substitute_chart(full, src, dst)
        return out.set_zero(self.normal[dst])

    def push_restrict(self, a: Polyvector, src: str, dst: str) -> Polyvector:
        """Pushforward a chart-src polyvector with coefficients along the
        submanifold to chart dst, restricting again afterwards."""
        moved = self.space.pushforward(a, src, dst)
        return restrict(moved, self.normal[dst])


def extract_submanifold(M: PoissonManifold, normal_spec: Mapping[str, object],
                        verify: bool = True) -> SubmanifoldData:
    """Build submanifold data from a per-chart choice of normal variables.

    normal_spec maps every chart name to a list of normal variable names or
    to the string "absent" for charts the submanifold misses. Transitions
    between present charts must send normal variables into the ideal of the
    target normal variables with non-negative powers; the extracted tensors
    are certified against their exact compatibility identities.
    """
    space = M.space
    normal = {}
    tangential = {}
    codim = None
    for name in space.chart_names:
        if name not in normal_spec:
            raise InconsistentData(f"no normal data for chart {name}")
        spec = normal_spec[name]
        if spec == ABSENT or spec is None:
            normal[name] = None
            tangential[name] = None
            continue
        w = tuple(spec)
        chart = space.chart(name)
        for v in w:
            if v not in chart.vars:
                raise InconsistentData(
                    f"normal variable {v!r} not on chart {name}")
        if len(set(w)) != len(w):
            raise InconsistentData(f"repeated normal variable on chart {name}")
        normal[name] = w
        tangential[name] = tuple(v for v in chart.vars if v not in w)
        if codim is None:
            codim = len(w)
        elif codim != len(w):
            raise WrongCodimension(
                f"chart {name} declares codimension {len(w)}, expected {codim}")
    if codim is None:
        raise InconsistentData("submanifold absent from every chart")

    data = SubmanifoldData(M, normal, tangential, codim)
    present = data.present_charts()

    # adapted-transition checks and first-order normal matrices
    for (i, k) in space.overlap_pairs():
        if i not in present or k not in present:
            continue
        wk = normal[k]
        tmap = space.transitions[(i, k)]
        for v in space.chart(i).vars:
            if tmap[v].has_negative_exponent(wk):
                raise NonAdaptedTransition(
                    f"transition {i}->{k}: {v} = {tmap[v]} is singular along "
                    f"the target normal locus")
        for a, wv in enumerate(normal[i]):
            expr = tmap[wv]
            if not expr.set_zero(wk).is_zero():
                raise NonAdaptedTransition(
                    f"transition {i}->{k} sends normal variable {wv} to "
                    f"{expr}, which does not vanish on the target normal locus")
        mat = []
        for a, wv in enumerate(normal[i]):
            row = []
            for b, wvk in enumerate(wk):
                row.append(space.transitions[(i, k)][wv]
                           .derivative(wvk).set_zero(wk))
            mat.append(row)
        data.first_order[(i, k)] = mat

    # structure vector fields via the division rule
    for name in present:
        chart = space.chart(name)
        w = normal[name]
        widx = {v: chart.vars.index(v) for v in w}
        r = len(w)
        T = [[Polyvector.zero(chart.vars, 1) for _ in range(r)] for _ in range(r)]
        for a, wv in enumerate(w):
            ham = schouten(M.bivectors[name],
                           Polyvector.from_function(
                               LaurentPoly.variable(chart.vars, wv)))
            residual = Polyvector.zero(chart.vars, 1)
            for idx, coeff in ham.terms.items():
                for e, c in coeff.terms.items():
                    beta = None
                    for b, wb in enumerate(w):
                        if e[widx[wb]] > 0:
                            beta = b
                            break
                    mono = LaurentPoly.monomial(chart.vars, e, c)
                    if beta is None:
                        residual = residual + Polyvector(chart.vars, 1, {idx: mono})
                    else:
                        shifted = list(e)
                        shifted[widx[w[beta]]] -= 1
                        T[a][beta] = T[a][beta] + Polyvector(
                            chart.vars, 1,
                            {idx: LaurentPoly.monomial(chart.vars, shifted, c)})
            if not residual.is_zero():
                raise NotPoissonSubmanifold(
                    f"bracket with {wv} on chart {name} leaves residual "
                    f"{residual} outside the normal ideal")
        data.structure_fields[name] = T

    if verify:
        data.checks = verify_submanifold_tensors(data)
    return data


def verify_submanifold_tensors(data: SubmanifoldData) -> dict:
    """Exact certification of the tensor identities along the submanifold.

    Per chart: the bracket of the structure with each restricted structure
    field matches the quadratic wedge of structure fields. Per overlap: the
    first-order normal matrix intertwines the two charts' structure fields up
    to the bracket of the structure with the matrix entries.
    """
    M = data.manifold
    report = {"chart_identity": {}, "overlap_identity": {}, "pass": True}
    for name in data.present_charts():
        w = data.normal[name]
        r = data.codim
        T0 = data.structure_fields_restricted(name)
        ok = True
        for a in range(r):
            for b in range(r):
                lhs = restrict(schouten(M.bivectors[name], T0[a][b]), w)
                quad = Polyvector.zero(M.space.chart(name).vars, 2)
                for g in range(r):
                    quad = quad + wedge(T0[g][b], T0[a][g])
                if not (lhs - quad).is_zero():
                    ok = False
        report["chart_identity"][name] = ok
        report["pass"] &= ok
    for (i, k) in sorted(data.first_order):
        r = data.codim
        wk = data.normal[k]
        F = data.first_order[(i, k)]
        T0k = data.structure_fields_restricted(k)
        Ti_on_k = [[data.push_restrict(entry, i, k) for entry in row]
                   for row in data.structure_fields_restricted(i)]
        ok = True
        for a in range(r):
            for g in range(r):
                lhs = Polyvector.zero(M.space.chart(k).vars, 1)
                for b in range(r):
                    lhs = lhs + F[b][g] * Ti_on_k[a][b]
                rhs = restrict(
                    schouten(M.bivectors[k],
                             Polyvector.from_function(F[a][g])), wk)
                for b in range(r):
                    rhs = rhs + F[a][b] * T0k[b][g]
                if not (lhs - rhs).is_zero():
                    ok = False
        report["overlap_identity"][f"{i}->{k}"] = ok
        report["pass"] &= ok
    if not report["pass"]:
        raise InconsistentData(
            f"submanifold tensor identities failed: {report}")
    return report


# ----------------------------------------------------------------------
# Codimension-one line bundle
# ----------------------------------------------------------------------

@dataclass
class PoissonLineBundle:
    submanifold: SubmanifoldData
    factors: dict        # (i,k) -> LaurentPoly transition factor along V
    fields: dict         # chart -> Polyvector (full, unrestricted)
    invariants: dict


def codim1_line_bundle(data: SubmanifoldData) -> PoissonLineBundle:
    """Package the codimension-one data: scalar transition factors and the
    single structure field per chart, with its cocycle and compatibility
    certificates."""
    if data.codim != 1:
        raise WrongCodimension(
            f"line-bundle packaging needs codimension 1, got {data.codim}")
    M = data.manifold
    present = data.present_charts()
    factors = {pair: mat[0][0] for pair, mat in data.first_order.items()}
    fields = {name: data.structure_fields[name][0][0] for name in present}
    inv = {"cocycle": {}, "field_closed": {}, "field_compat": {}, "pass": True}
    for i in present:
        for j in present:
            for k in present:
                if len({i, j, k}) != 3:
                    continue
                if ((i, j) in factors and (j, k) in factors and (i, k) in factors):
                    fij_on_k = data.substitute_tangential(factors[(i, j)], j, k)
                    ok = factors[(i, k)] == fij_on_k * factors[(j, k)]
                    inv["cocycle"][f"{i}->{j}->{k}"] = ok
                    inv["pass"] &= ok
    for name in present:
        w = data.normal[name]
        t0 = restrict(fields[name], w)
        ok = restrict(schouten(M.bivectors[name], t0), w).is_zero()
        inv["field_closed"][name] = ok
        inv["pass"] &= ok
    for (i, k), f in sorted(factors.items()):
        wk = data.normal[k]
        ti = data.push_restrict(restrict(fields[i], data.normal[i]), i, k)
        tk = restrict(fields[k], wk)
        lhs = f * ti - f * tk
        rhs = restrict(schouten(M.bivectors[k], Polyvector.from_function(f)), wk)
        ok = (lhs - rhs).is_zero()
        inv["field_compat"][f"{i}->{k}"] = ok
        inv["pass"] &= ok
    return PoissonLineBundle(data, factors, fields, inv)
