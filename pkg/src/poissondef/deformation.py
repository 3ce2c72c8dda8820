"""Order-by-order deformation engine.

A family is stored chartwise: truncated series (in the deformation
parameters) of tangential functions describing how each normal coordinate
moves, plus — when the ambient structure varies — a truncated series of
bivectors per chart. Three modes:

- "fixed":      the ambient structure stays put; unknowns are the normal
                motions, seeded from the degree-zero cohomology of the
                restricted-tuple complex.
- "extended":   the ambient bivector moves too, seeded from the paired
                complex; each order solves jointly for a global bivector
                correction and chartwise normal corrections.
- "prescribed": the ambient family is given (possibly with Laurent
                coefficients); only normal motions are solved, with the
                central-fibre operators on the left-hand side.

Every order step first assembles the obstruction cocycle and certifies its
closedness identities exactly (a failure raises ClosednessViolation and
indicates a bug, never bad luck); then a sparse exact linear system is solved
per parameter monomial — the matrix is shared across the monomials of one
degree.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

from .complexes import (
    CohomologyReport,
    ComplexDescriptor,
    build_complex,
    cochain_is_zero,
    characteristic_map,
    global_sections,
    h0_complex,
    transport_nor_tuple,
    vectorize,
)
from .errors import (
    ClosednessViolation,
    InconsistentData,
    InvalidDeformation,
    MatchFailure,
    ParameterMismatch,
)
from .geometry import SubmanifoldData
from .linalg import solve_min
from .polyvector import Polyvector, restrict, schouten, wedge
from .symbolic import (
    LaurentPoly,
    TruncatedSeries,
    combine,
    substitute,
    _simplex,
)


# ----------------------------------------------------------------------
# Series utilities
# ----------------------------------------------------------------------

def series_schouten(a: TruncatedSeries, b: TruncatedSeries) -> TruncatedSeries:
    return combine(a, b, schouten)


def compose_scalar_series(phi: TruncatedSeries, assign: Mapping[str, object],
                          params, cutoff, target_vars) -> TruncatedSeries:
    """Evaluate a scalar-coefficient series at series/polynomial arguments.

    Each coefficient is substituted, the result re-expanded in the target
    parameters and multiplied by its original parameter monomial; carriers
    are coerced onto the target variable tuple.
    """
    out = TruncatedSeries.zero(params, cutoff)
    for te, coeff in phi.terms.items():
        sub = substitute(coeff, assign)
        if isinstance(sub, LaurentPoly):
            sub = TruncatedSeries.const(params, cutoff, sub.with_vars(target_vars))
        shifted = {}
        for e2, c2 in sub.terms.items():
            tot = tuple(x + y for x, y in zip(te, e2))
            if sum(tot) <= cutoff:
                shifted[tot] = c2.with_vars(target_vars)
        out = out + TruncatedSeries(params, cutoff, shifted)
    return out


def subs_normal_pv_series(X: TruncatedSeries, assign: Mapping[str, object],
                          chart_vars, params, cutoff) -> TruncatedSeries:
    """Substitute series values for (normal) variables inside the Laurent
    coefficients of a polyvector series, keeping the frame unchanged."""
    out_terms: dict = {}
    for te, pv in X.terms.items():
        for idx, coeff in pv.terms.items():
            sub = substitute(coeff, assign)
            if isinstance(sub, LaurentPoly):
                sub = TruncatedSeries.const(params, cutoff, sub)
            for e2, c2 in sub.terms.items():
                tot = tuple(x + y for x, y in zip(te, e2))
                if sum(tot) > cutoff:
                    continue
                piece = Polyvector(chart_vars, pv.degree,
                                   {idx: c2.with_vars(chart_vars)})
                if tot in out_terms:
                    out_terms[tot] = out_terms[tot] + piece
                else:
                    out_terms[tot] = piece
    return TruncatedSeries(params, cutoff, out_terms)


def _identity_assign(vars, exclude=()):
    return {v: LaurentPoly.variable(vars, v) for v in vars if v not in exclude}


# ----------------------------------------------------------------------
# Problem and state
# ----------------------------------------------------------------------

MODES = ("fixed", "extended", "prescribed")


@dataclass
class DeformationProblem:
    submanifold: SubmanifoldData
    params: tuple
    order: int                    # target order M
    degree: int                   # polynomial degree bound for normal motions
    mode: str = "fixed"
    prescribed: dict | None = None  # chart -> TruncatedSeries of bivectors
    seed: tuple | None = None       # indices into the degree-zero basis
    directions: list | None = None  # explicit degree-zero cochains instead
    bound: int | None = None        # section degree bound override

    def __post_init__(self):
        if self.mode not in MODES:
            raise InconsistentData(f"unknown mode {self.mode!r}")
        self.params = tuple(self.params)
        if self.mode == "prescribed" and self.prescribed is None:
            raise InconsistentData("prescribed mode needs the ambient family")

    @property
    def space(self):
        return self.submanifold.space


@dataclass
class DeformationState:
    problem: DeformationProblem
    order: int
    phi: dict                      # chart -> [TruncatedSeries(LaurentPoly)]*r
    lam: dict                      # chart -> TruncatedSeries(Polyvector)

    @property
    def params(self):
        return self.problem.params


def initial_state(problem: DeformationProblem) -> DeformationState:
    S = problem.submanifold
    space = problem.space
    M = problem.order
    phi = {}
    for name in S.present_charts():
        phi[name] = [TruncatedSeries.zero(problem.params, M)
                     for _ in range(S.codim)]
    lam = {}
    for name in space.chart_names:
        if problem.mode == "prescribed":
            ser = problem.prescribed.get(name)
            if ser is None:
                raise InconsistentData(f"no prescribed bivectors on chart {name}")
            if ser.params != problem.params or ser.cutoff < M:
                raise ParameterMismatch(
                    "prescribed family parameters or cutoff do not match")
            lam[name] = ser.truncate(M)
        else:
            lam[name] = TruncatedSeries.const(
                problem.params, M, S.manifold.bivector(name))
    return DeformationState(problem, 0, phi, lam)


# ----------------------------------------------------------------------
# Congruence machinery
# ----------------------------------------------------------------------

def _chart_assign(problem, phi, chart):
    """Assignment substituting the normal motions for the normal variables
    and keeping tangential variables, on one chart."""
    space = problem.space
    cvars = space.chart(chart).vars
    S = problem.submanifold
    assign = _identity_assign(cvars)
    for a, wv in enumerate(S.normal[chart]):
        assign[wv] = phi[chart][a]
    return assign


def gluing_mismatch(problem, phi) -> dict:
    """Per ordered overlap of present charts: the series
    (motion of chart i composed with the transition) minus (transition
    applied to the motion of chart k), as functions on chart k."""
    S = problem.submanifold
    space = problem.space
    M = next(iter(phi.values()))[0].cutoff
    present = S.present_charts()
    out = {}
    for (i, k) in space.overlap_pairs():
        if i not in present or k not in present or i == k:
            continue
        kvars = space.chart(k).vars
        assign_k = _chart_assign(problem, phi, k)
        rows = []
        arg = {}
        for v in S.tangential[i]:
            expr = space.transitions[(i, k)][v]
            val = substitute(expr, assign_k)
            if isinstance(val, LaurentPoly):
                val = val.with_vars(kvars)
            arg[v] = val
        for v in S.normal[i]:
            arg[v] = LaurentPoly.zero(kvars)
        for a, wv in enumerate(S.normal[i]):
            f_ik = space.transitions[(i, k)][wv]
            lhs = substitute(f_ik, assign_k)
            if isinstance(lhs, LaurentPoly):
                lhs = TruncatedSeries.const(problem.params, M, lhs.with_vars(kvars))
            else:
                lhs = lhs.map(lambda c: c.with_vars(kvars))
            rhs = compose_scalar_series(phi[i][a], arg, problem.params, M, kvars)
            rows.append(rhs - lhs)
        out[(i, k)] = rows
    return out


def ideal_residual(problem, phi, lam) -> dict:
    """Per present chart: the series of vector fields obtained by bracketing
    the ambient family with (normal coordinate minus its motion) and
    evaluating on the moved locus."""
    S = problem.submanifold
    space = problem.space
    M = next(iter(phi.values()))[0].cutoff
    out = {}
    for name in S.present_charts():
        cvars = space.chart(name).vars
        assign = _chart_assign(problem, phi, name)
        rows = []
        for a, wv in enumerate(S.normal[name]):
            w_pv = TruncatedSeries.const(
                problem.params, M,
                Polyvector.from_function(LaurentPoly.variable(cvars, wv)))
            phi_pv = phi[name][a].map(
                lambda f: Polyvector.from_function(f.with_vars(cvars)))
            bracket = series_schouten(lam[name], w_pv - phi_pv)
            rows.append(subs_normal_pv_series(
                bracket, assign, cvars, problem.params, M))
        out[name] = rows
    return out


def lambda_gluing_mismatch(problem, lam) -> dict:
    space = problem.space
    out = {}
    for (i, k) in space.overlap_pairs():
        if (k, i) not in space.transitions:
            continue
        moved = lam[k].map(lambda pv: space.pushforward(pv, k, i))
        out[(k, i)] = moved - lam[i]
    return out


def jacobi_residual(problem, lam) -> dict:
    return {name: series_schouten(lam[name], lam[name])
            for name in problem.space.chart_names}


def _vanishing_order(series_or_list, cap: int) -> int:
    """Largest m <= cap such that everything vanishes in degrees <= m."""
    worst = cap
    items = series_or_list if isinstance(series_or_list, list) else [series_or_list]
    for s in items:
        o = s.min_order()
        if o is not None:
            worst = min(worst, o - 1)
    return worst


def verify_family(problem: DeformationProblem, family: DeformationState,
                  order: int | None = None) -> dict:
    """Exact per-identity verification of a family up to the given order.

    Reports, for each identity, the largest order up to which it holds
    (capped at the requested order); pass means every identity holds there.
    """
    M = problem.order if order is None else order
    phi, lam = family.phi, family.lam
    report = {"order": M, "gluing": {}, "ideal": {}, "lambda_gluing": {},
              "jacobi": {}, "pass": True}
    for pair, rows in sorted(gluing_mismatch(problem, phi).items()):
        o = _vanishing_order(rows, M)
        report["gluing"][f"{pair[0]}|{pair[1]}"] = o
        report["pass"] &= o >= M
    for name, rows in sorted(ideal_residual(problem, phi, lam).items()):
        o = _vanishing_order(rows, M)
        report["ideal"][name] = o
        report["pass"] &= o >= M
    if problem.mode in ("extended", "prescribed"):
        for pair, ser in sorted(lambda_gluing_mismatch(problem, lam).items()):
            o = _vanishing_order(ser, M)
            report["lambda_gluing"][f"{pair[0]}|{pair[1]}"] = o
            report["pass"] &= o >= M
        for name, ser in sorted(jacobi_residual(problem, lam).items()):
            o = _vanishing_order(ser, M)
            report["jacobi"][name] = o
            report["pass"] &= o >= M
    report["verified_order"] = min(
        [v for d in ("gluing", "ideal", "lambda_gluing", "jacobi")
         for v in report[d].values()] or [M])
    return report


# ----------------------------------------------------------------------
# Obstruction cocycle
# ----------------------------------------------------------------------

@dataclass
class ObstructionCocycle:
    order: int                     # the order being obstructed (m+1)
    mode: str
    psi: dict                      # (i,k) -> {texp: [LaurentPoly]*r} on chart k
    G: dict                        # chart -> {texp: [Polyvector deg 1]*r}
    Pi: dict = field(default_factory=dict)   # chart -> {texp: Polyvector deg 3}
    certificates: dict = field(default_factory=dict)

    def is_zero(self) -> bool:
        return (all(all(p.is_zero() for tup in d.values() for p in tup)
                    for d in self.psi.values())
                and all(all(v.is_zero() for tup in d.values() for v in tup)
                        for d in self.G.values())
                and all(all(v.is_zero() for v in d.values())
                        for d in self.Pi.values()))


def obstruction_cocycle(state: DeformationState) -> ObstructionCocycle:
    """Degree-(m+1) obstruction data of an order-m family, with its exact
    closedness certificates."""
    problem = state.problem
    S = problem.submanifold
    space = problem.space
    m1 = state.order + 1
    psi = {}
    for pair, rows in gluing_mismatch(problem, state.phi).items():
        per_t = {}
        for a, ser in enumerate(rows):
            for te, coeff in ser.homogeneous(m1).items():
                per_t.setdefault(te, [LaurentPoly.zero(space.chart(pair[1]).vars)
                                      for _ in range(S.codim)])
                per_t[te][a] = per_t[te][a] + coeff
        psi[pair] = per_t
    G = {}
    for name, rows in ideal_residual(problem, state.phi, state.lam).items():
        per_t = {}
        cvars = space.chart(name).vars
        for a, ser in enumerate(rows):
            for te, pv in ser.homogeneous(m1).items():
                per_t.setdefault(te, [Polyvector.zero(cvars, 1)
                                      for _ in range(S.codim)])
                per_t[te][a] = per_t[te][a] + pv
        G[name] = per_t
    Pi = {}
    if problem.mode == "extended":
        for name, ser in jacobi_residual(problem, state.lam).items():
            Pi[name] = dict(ser.homogeneous(m1))
    cocycle = ObstructionCocycle(m1, problem.mode, psi, G, Pi)
    cocycle.certificates = certify_cocycle(state, cocycle)
    return cocycle


def _tmonomials(cocycle: ObstructionCocycle, nparams: int):
    seen = set()
    for d in cocycle.psi.values():
        seen.update(d.keys())
    for d in cocycle.G.values():
        seen.update(d.keys())
    for d in cocycle.Pi.values():
        seen.update(d.keys())
    return sorted(seen, key=lambda e: (sum(e), e))


def certify_cocycle(state: DeformationState,
                    cocycle: ObstructionCocycle) -> dict:
    """Exact closedness identities; raises ClosednessViolation on failure."""
    problem = state.problem
    S = problem.submanifold
    space = problem.space
    present = S.present_charts()
    lam0 = {name: state.lam[name].order_zero() or
            Polyvector.zero(space.chart(name).vars, 2)
            for name in space.chart_names}
    tmonos = _tmonomials(cocycle, len(problem.params))
    cert = {"cech": True, "tangent": True, "overlap": True,
            "ambient": True, "ambient_gluing": True}

    def psi_at(pair, te):
        return cocycle.psi.get(pair, {}).get(
            te, [LaurentPoly.zero(space.chart(pair[1]).vars)
                 for _ in range(S.codim)])

    def g_at(name, te):
        return cocycle.G.get(name, {}).get(
            te, [Polyvector.zero(space.chart(name).vars, 1)
                 for _ in range(S.codim)])

    def pi_at(name, te):
        return cocycle.Pi.get(name, {}).get(
            te, Polyvector.zero(space.chart(name).vars, 3))

    # triple identity for the overlap mismatches, expressed on chart k
    for i in present:
        for j in present:
            for k in present:
                if len({i, j, k}) != 3:
                    continue
                if not all(p in space.transitions
                           for p in [(i, j), (j, k), (i, k)]):
                    continue
                F_ij = S.first_order[(i, j)]
                for te in tmonos:
                    lhs = psi_at((i, k), te)
                    pij = psi_at((i, j), te)
                    pjk = psi_at((j, k), te)
                    for a in range(S.codim):
                        val = S.substitute_tangential(pij[a], j, k)
                        for b in range(S.codim):
                            val = val + S.substitute_tangential(
                                F_ij[a][b], j, k) * pjk[b]
                        if not (lhs[a] - val).is_zero():
                            cert["cech"] = False
    # per-chart identity for the ideal obstruction
    for name in present:
        w = S.normal[name]
        T0 = S.structure_fields_restricted(name)
        for te in tmonos:
            g = g_at(name, te)
            for a in range(S.codim):
                val = restrict(schouten(lam0[name], g[a]), w)
                for b in range(S.codim):
                    val = val - wedge(g[b], T0[a][b])
                if problem.mode == "extended":
                    half_pi = pi_at(name, te) * Fraction(1, 2)
                    coupling = restrict(schouten(
                        half_pi, Polyvector.from_function(
                            LaurentPoly.variable(space.chart(name).vars,
                                                 w[a]))), w)
                    val = val - coupling
                if not val.is_zero():
                    cert["tangent"] = False
    # overlap compatibility between the two pieces
    for (i, k) in sorted(cocycle.psi):
        wk = S.normal[k]
        F = S.first_order[(i, k)]
        T0i_on_k = [[S.push_restrict(entry, i, k) for entry in row]
                    for row in S.structure_fields_restricted(i)]
        for te in tmonos:
            p = psi_at((i, k), te)
            gi = [S.push_restrict(v, i, k) for v in g_at(i, te)]
            gk = g_at(k, te)
            for a in range(S.codim):
                val = gi[a]
                for b in range(S.codim):
                    val = val - p[b] * T0i_on_k[a][b]
                val = val + restrict(
                    schouten(lam0[k], Polyvector.from_function(
                        p[a].with_vars(space.chart(k).vars))), wk)
                for b in range(S.codim):
                    val = val - F[a][b] * gk[b]
                if not val.is_zero():
                    cert["overlap"] = False
    # ambient certificates
    if problem.mode == "extended":
        for name in space.chart_names:
            for te in tmonos:
                if not schouten(pi_at(name, te), lam0[name]).is_zero():
                    cert["ambient"] = False
        for (i, k) in space.overlap_pairs():
            if (k, i) not in space.transitions:
                continue
            for te in tmonos:
                moved = space.pushforward(pi_at(k, te), k, i)
                if not (moved - pi_at(i, te)).is_zero():
                    cert["ambient_gluing"] = False
    if not all(cert.values()):
        raise ClosednessViolation(
            f"obstruction cocycle failed exact closedness: "
            f"{ {k: v for k, v in cert.items() if not v} }")
    return cert


# ----------------------------------------------------------------------
# Order step
# ----------------------------------------------------------------------

@dataclass
class Obstructed:
    order: int
    cocycle: ObstructionCocycle
    witness: str
    tested_degrees: dict

    def __bool__(self):
        return False


def _phi_atoms(problem):
    """Unknown atoms (chart, slot, tangential exponent) for one order step."""
    S = problem.submanifold
    space = problem.space
    atoms = []
    for name in S.present_charts():
        tvars = S.tangential[name]
        for a in range(S.codim):
            for e_t in sorted(_simplex(len(tvars), problem.degree),
                              key=lambda t: (sum(t), t)):
                atoms.append((name, a, e_t))
    return atoms


def _atom_poly(problem, atom):
    name, a, e_t = atom
    space = problem.space
    cvars = space.chart(name).vars
    S = problem.submanifold
    e = [0] * len(cvars)
    for v, x in zip(S.tangential[name], e_t):
        e[cvars.index(v)] = x
    return LaurentPoly.monomial(cvars, e)


def _assemble_step_matrix(problem, amb_basis):
    """Rows of the order-step system, evaluated on each unknown atom.

    Returns (row_keys, columns, row_descriptions); the right-hand side for a
    given parameter monomial is assembled separately from the cocycle.
    """
    S = problem.submanifold
    space = problem.space
    present = S.present_charts()
    lam0 = {name: S.manifold.bivector(name) for name in space.chart_names}
    atoms = _phi_atoms(problem)
    natoms = len(atoms)
    namb = len(amb_basis)
    tree = space.spanning_tree(present[0], present) if len(present) > 1 else []
    edges = [(child, parent) for (parent, child) in tree]

    columns = [dict() for _ in range(natoms + namb)]

    def add(colidx, key, val):
        if val:
            columns[colidx][key] = columns[colidx].get(key, Fraction(0)) + val

    # overlap equations on chart k for ordered (i, k):
    #   sum_b F[a][b] phi_k^b  -  (phi_i^a expressed on chart k)  ==  psi_(i,k)^a
    for (i, k) in edges:
        F = S.first_order[(i, k)]
        for ci, atom in enumerate(atoms):
            name, a, e_t = atom
            if name == k:
                poly = _atom_poly(problem, atom)
                for arow in range(S.codim):
                    contrib = F[arow][a] * poly
                    for e, val in contrib.terms.items():
                        add(ci, ("psi", i, k, arow, e), val)
            elif name == i:
                moved = S.substitute_tangential(_atom_poly(problem, atom), i, k)
                for e, val in moved.terms.items():
                    add(ci, ("psi", i, k, a, e), -val)
    # tangent equations on each present chart:
    #   nabla(phi)_a + [amb, w^a]|_0 == -G_a
    for name in present:
        w = S.normal[name]
        cvars = space.chart(name).vars
        T0 = S.structure_fields_restricted(name)
        for ci, atom in enumerate(atoms):
            aname, a, e_t = atom
            if aname != name:
                continue
            poly = _atom_poly(problem, atom)
            pv = Polyvector.from_function(poly)
            for arow in range(S.codim):
                val = Polyvector.zero(cvars, 1)
                if arow == a:
                    val = val - restrict(schouten(lam0[name], pv), w)
                val = val + poly * T0[arow][a]
                for idx, coeff in val.terms.items():
                    for e, v in coeff.terms.items():
                        add(ci, ("G", name, arow, idx, e), v)
        for cs, sec in enumerate(amb_basis):
            pv_amb = sec["amb"][name]
            for arow, wv in enumerate(w):
                coupling = restrict(schouten(
                    pv_amb, Polyvector.from_function(
                        LaurentPoly.variable(cvars, wv))), w)
                for idx, coeff in coupling.terms.items():
                    for e, v in coeff.terms.items():
                        add(natoms + cs, ("G", name, arow, idx, e), v)
    # ambient equations on every chart: -[amb, lam0] == (1/2) Pi
    if namb:
        for name in space.chart_names:
            for cs, sec in enumerate(amb_basis):
                img = -schouten(sec["amb"][name], lam0[name])
                for idx, coeff in img.terms.items():
                    for e, v in coeff.terms.items():
                        add(natoms + cs, ("Pi", name, idx, e), v)
    row_keys = sorted({k for col in columns for k in col})
    return atoms, row_keys, columns


def _step_rhs(problem, cocycle, row_keys, te):
    S = problem.submanifold
    rhs_map = {}
    for (i, k), d in cocycle.psi.items():
        tup = d.get(te)
        if not tup:
            continue
        for a, p in enumerate(tup):
            for e, v in p.terms.items():
                rhs_map[("psi", i, k, a, e)] = rhs_map.get(
                    ("psi", i, k, a, e), Fraction(0)) + v
    for name, d in cocycle.G.items():
        tup = d.get(te)
        if not tup:
            continue
        for a, pv in enumerate(tup):
            for idx, coeff in pv.terms.items():
                for e, v in coeff.terms.items():
                    key = ("G", name, a, idx, e)
                    rhs_map[key] = rhs_map.get(key, Fraction(0)) - v
    for name, d in cocycle.Pi.items():
        pv = d.get(te)
        if pv is None:
            continue
        for idx, coeff in pv.terms.items():
            for e, v in coeff.terms.items():
                key = ("Pi", name, idx, e)
                rhs_map[key] = rhs_map.get(key, Fraction(0)) + v / 2
    missing = [k for k in rhs_map if k not in set(row_keys)]
    return rhs_map, missing


def _solve_step(problem, cocycle, amb_basis, degree_override=None):
    """Solve one order step; returns (per-te solutions, None) or
    (None, witness description)."""
    import dataclasses
    prob = problem
    if degree_override is not None:
        prob = dataclasses.replace(problem, degree=degree_override)
    atoms, row_keys, columns = _assemble_step_matrix(prob, amb_basis)
    key_index = {k: i for i, k in enumerate(row_keys)}
    matrix = [[Fraction(0)] * len(columns) for _ in row_keys]
    for j, col in enumerate(columns):
        for k, v in col.items():
            matrix[key_index[k]][j] = v
    tmonos = _tmonomials(cocycle, len(prob.params))
    solutions = {}
    for te in tmonos:
        rhs_map, missing = _step_rhs(prob, cocycle, row_keys, te)
        if missing:
            return None, (f"no unknown reaches equation row {missing[0]} "
                          f"at parameter monomial {te}")
        rhs = [rhs_map.get(k, Fraction(0)) for k in row_keys]
        sol, bad = solve_min(matrix, rhs)
        if sol is None:
            return None, (f"inconsistent at parameter monomial {te}, "
                          f"equation row {row_keys[bad]}")
        solutions[te] = (atoms, sol)
    return solutions, None


def solve_order(state: DeformationState,
                degree: int | None = None) -> DeformationState | Obstructed:
    """Extend an order-m family to order m+1 or report the obstruction.

    The produced state is re-verified through the congruence machinery; when
    the step is infeasible at the requested polynomial degree bound but
    becomes feasible one or two degrees higher, DegreeBoundTooSmall is raised
    instead of declaring an obstruction.
    """
    problem = state.problem
    D = problem.degree if degree is None else degree
    cocycle = obstruction_cocycle(state)
    amb_basis = []
    if problem.mode == "extended":
        bdesc = build_complex("bivector", manifold=problem.submanifold.manifold,
                              probe=False)
        amb_basis = global_sections(bdesc, 0, problem.bound).basis
    solutions, witness = _solve_step(problem, cocycle, amb_basis, D)
    if solutions is None:
        tested = {D: "infeasible"}
        for bump in (D + 1, D + 2):
            got, _ = _solve_step(problem, cocycle, amb_basis, bump)
            tested[bump] = "feasible" if got is not None else "infeasible"
        if any(v == "feasible" for v in tested.values()):
            from .errors import DegreeBoundTooSmall
            raise DegreeBoundTooSmall(
                f"order {cocycle.order} infeasible at degree {D} but "
                f"feasible within two degrees: {tested}")
        return Obstructed(cocycle.order, cocycle, witness, tested)
    # accumulate the corrections
    S = problem.submanifold
    space = problem.space
    M = problem.order
    new_phi = {name: list(tups) for name, tups in state.phi.items()}
    for te, (atoms, sol) in solutions.items():
        for val, atom in zip(sol, atoms):
            if not val:
                continue
            name, a, e_t = atom
            poly = _atom_poly(problem, atom) * val
            new_phi[name][a] = new_phi[name][a] + TruncatedSeries(
                problem.params, M, {te: poly})
    new_lam = dict(state.lam)
    if problem.mode == "extended" and amb_basis:
        for te, (atoms, sol) in solutions.items():
            coeffs = sol[len(atoms):]
            for cs, val in enumerate(coeffs):
                if not val:
                    continue
                for name in space.chart_names:
                    new_lam[name] = new_lam[name] + TruncatedSeries(
                        problem.params, M,
                        {te: amb_basis[cs]["amb"][name] * val})
    new_state = DeformationState(problem, state.order + 1, new_phi, new_lam)
    check = verify_family(problem, new_state, new_state.order)
    if not check["pass"]:
        raise InconsistentData(
            f"order step produced an invalid family: {check}")
    return new_state


# ----------------------------------------------------------------------
# Full solver
# ----------------------------------------------------------------------

@dataclass
class SolverResult:
    problem: DeformationProblem
    state: DeformationState | None
    obstructed: Obstructed | None
    h0: CohomologyReport | None
    chosen_basis: list
    verify: dict | None
    char_map_identity: bool | None

    @property
    def ok(self) -> bool:
        return self.obstructed is None


def run_solver(problem: DeformationProblem) -> SolverResult:
    """Seed from the degree-zero basis (fixed/extended) or from the given
    ambient family (prescribed), then extend order by order to the target."""
    S = problem.submanifold
    space = problem.space
    M = problem.order
    state = initial_state(problem)
    h0 = None
    chosen = []
    descriptor = None
    if problem.mode in ("fixed", "extended"):
        kind = "normal" if problem.mode == "fixed" else "extended"
        descriptor = build_complex(kind, submanifold=S, probe=False)
        h0 = h0_complex(descriptor, problem.bound)
        if problem.directions is not None:
            chosen = list(problem.directions)
            for d in chosen:
                keys, cols = vectorize(h0.basis + [d])
                mat = [[cols[j][i] for j in range(len(h0.basis))]
                       for i in range(len(keys))]
                rhs = [cols[-1][i] for i in range(len(keys))]
                sol, _ = solve_min(mat, rhs)
                if sol is None:
                    from .errors import NotInKernel
                    raise NotInKernel(
                        "a seeding direction lies outside the degree-zero "
                        "cohomology")
        else:
            indices = (tuple(problem.seed) if problem.seed is not None
                       else tuple(range(h0.dimension)))
            chosen = [h0.basis[i] for i in indices]
        if len(chosen) != len(problem.params):
            raise ParameterMismatch(
                f"{len(problem.params)} parameters for {len(chosen)} chosen "
                f"directions")
        for rho, sec in enumerate(chosen):
            te = tuple(1 if i == rho else 0
                       for i in range(len(problem.params)))
            for name in S.present_charts():
                tup = sec.get("nor", {}).get(name)
                if tup is None:
                    continue
                for a in range(S.codim):
                    f = tup[a].as_function()
                    if not f.is_zero():
                        state.phi[name][a] = state.phi[name][a] + \
                            TruncatedSeries(problem.params, M, {te: f})
            if problem.mode == "extended":
                for name in space.chart_names:
                    pv = sec.get("amb", {}).get(name)
                    if pv is not None and not pv.is_zero():
                        state.lam[name] = state.lam[name] + TruncatedSeries(
                            problem.params, M, {te: pv})
        state = DeformationState(problem, 1, state.phi, state.lam)
        seeded = verify_family(problem, state, 1)
        if not seeded["pass"]:
            raise InconsistentData(
                f"seeded first-order family fails its congruences: {seeded}")
    else:
        for name in space.chart_names:
            central = state.lam[name].order_zero()
            expected = S.manifold.bivector(name)
            if central is None:
                central = Polyvector.zero(space.chart(name).vars, 2)
            if not (central - expected).is_zero():
                raise InvalidDeformation(
                    f"prescribed family does not start at the central "
                    f"structure on chart {name}")
        pres = verify_family(problem, state, M)
        if (any(v < M for v in pres["lambda_gluing"].values())
                or any(v < M for v in pres["jacobi"].values())):
            raise InvalidDeformation(
                f"prescribed ambient family is not a deformation: {pres}")
        if (any(v < 0 for v in pres["gluing"].values())
                or any(v < 0 for v in pres["ideal"].values())):
            raise InvalidDeformation(
                "central fibre of the prescribed family does not contain "
                "the submanifold as a Poisson submanifold")
    while state.order < M:
        nxt = solve_order(state)
        if isinstance(nxt, Obstructed):
            return SolverResult(problem, state, nxt, h0, chosen, None, None)
        state = nxt
    final = verify_family(problem, state, M)
    char_ok = None
    if problem.mode in ("fixed", "extended") and chosen:
        coords = characteristic_map(descriptor, chosen, state)
        char_ok = all(
            all(c == (1 if j == rho else 0) for j, c in enumerate(vec))
            for rho, vec in enumerate(coords))
        if not char_ok:
            raise InconsistentData(
                "produced family does not restrict to the chosen directions")
    return SolverResult(problem, state, None, h0, chosen, final, char_ok)


# ----------------------------------------------------------------------
# Matching families
# ----------------------------------------------------------------------

def _first_order_cochains(problem, state):
    """First-order directions of a family as degree-zero cochains."""
    S = problem.submanifold
    space = problem.space
    out = []
    for rho in range(len(problem.params)):
        te = tuple(1 if i == rho else 0 for i in range(len(problem.params)))
        c = {"nor": {}}
        for name in S.present_charts():
            cvars = space.chart(name).vars
            tup = []
            for a in range(S.codim):
                coeff = state.phi[name][a].coefficient(te)
                tup.append(Polyvector.from_function(
                    coeff.with_vars(cvars) if coeff is not None
                    else LaurentPoly.zero(cvars)))
            c["nor"][name] = tup
        if problem.mode == "extended":
            c["amb"] = {}
            for name in space.chart_names:
                coeff = state.lam[name].coefficient(te)
                c["amb"][name] = (coeff if coeff is not None
                                  else Polyvector.zero(space.chart(name).vars, 2))
        out.append(c)
    return out


def match_families(problem: DeformationProblem, family_t: DeformationState,
                   observed: DeformationState, order: int | None = None):
    """Find a parameter substitution making the solver family agree with an
    observed family order by order; MatchFailure carries the residual when
    no substitution exists.

    Returns (h, report) with h a tuple of truncated series in the observed
    family's parameters.
    """
    M = problem.order if order is None else order
    S = problem.submanifold
    space = problem.space
    s_params = observed.params
    t_params = problem.params
    basis = _first_order_cochains(problem, family_t)
    descriptor = build_complex(
        "normal" if problem.mode == "fixed" else "extended",
        submanifold=S, probe=False)
    h = [TruncatedSeries.zero(s_params, M) for _ in t_params]
    report = {"orders": {}}

    def compose_phi(hcur):
        out = {}
        for name in S.present_charts():
            cvars = space.chart(name).vars
            tup = []
            for a in range(S.codim):
                ser = family_t.phi[name][a]
                acc = TruncatedSeries.zero(s_params, M)
                for te, coeff in ser.terms.items():
                    piece = TruncatedSeries.const(
                        s_params, M, coeff.with_vars(cvars))
                    for rho, power in enumerate(te):
                        for _ in range(power):
                            piece = combine(piece, hcur[rho],
                                            lambda x, y: x * _embed(y, cvars))
                    acc = acc + piece
                tup.append(acc)
            out[name] = tup
        return out

    def _embed(fr, cvars):
        return LaurentPoly.const(cvars, fr) if isinstance(fr, Fraction) else fr

    def compose_lam(hcur):
        out = {}
        for name in space.chart_names:
            cvars = space.chart(name).vars
            ser = family_t.lam[name]
            acc = TruncatedSeries.zero(s_params, M)
            for te, pv in ser.terms.items():
                piece = TruncatedSeries.const(s_params, M, pv)
                for rho, power in enumerate(te):
                    for _ in range(power):
                        piece = combine(piece, hcur[rho],
                                        lambda x, y: x * y)
                acc = acc + piece
            out[name] = acc
        return out

    for step in range(1, M + 1):
        comp_phi = compose_phi(h)
        comp_lam = compose_lam(h) if problem.mode == "extended" else None
        omegas = {}
        for name in S.present_charts():
            cvars = space.chart(name).vars
            tup = []
            for a in range(S.codim):
                diff = observed.phi[name][a] - comp_phi[name][a]
                tup.append(diff.homogeneous(step))
            omegas[name] = tup
        bs = None
        if problem.mode == "extended":
            bs = {}
            for name in space.chart_names:
                diff = observed.lam[name] - comp_lam[name]
                bs[name] = diff.homogeneous(step)
        smonos = sorted({te for d in omegas.values() for slot in d
                         for te in slot} |
                        ({te for d in bs.values() for te in d} if bs else set()),
                        key=lambda e: (sum(e), e))
        coeffs_per_mono = {}
        for te in smonos:
            cochain = {"nor": {}}
            for name in S.present_charts():
                cvars = space.chart(name).vars
                tup = []
                for a in range(S.codim):
                    coeff = omegas[name][a].get(te)
                    tup.append(Polyvector.from_function(
                        coeff.with_vars(cvars) if coeff is not None
                        else LaurentPoly.zero(cvars)))
                cochain["nor"][name] = tup
            if problem.mode == "extended":
                cochain["amb"] = {}
                for name in space.chart_names:
                    pv = bs[name].get(te)
                    cochain["amb"][name] = (
                        pv if pv is not None
                        else Polyvector.zero(space.chart(name).vars, 2))
            # closedness preconditions -> MatchFailure, never an internal error
            if not cochain_is_zero(descriptor.differential(cochain, 0)):
                raise MatchFailure(
                    f"order-{step} mismatch is not tangent to the moduli "
                    f"problem (fails the kernel condition)",
                    residual=cochain, reason="not-closed")
            present = S.present_charts()
            for (i, k) in space.overlap_pairs():
                if i not in present or k not in present:
                    continue
                moved = transport_nor_tuple(S, cochain["nor"][k], k, i)
                if any(not (x - y).is_zero()
                       for x, y in zip(moved, cochain["nor"][i])):
                    raise MatchFailure(
                        f"order-{step} mismatch does not glue between "
                        f"{k} and {i}", residual=cochain, reason="not-glued")
            if problem.mode == "extended":
                for (i, k) in space.overlap_pairs():
                    if (k, i) not in space.transitions:
                        continue
                    moved = space.pushforward(cochain["amb"][k], k, i)
                    if not (moved - cochain["amb"][i]).is_zero():
                        raise MatchFailure(
                            f"order-{step} ambient mismatch does not glue",
                            residual=cochain, reason="not-glued")
            keys, cols = vectorize(basis + [cochain])
            mat = [[cols[j][i] for j in range(len(basis))]
                   for i in range(len(keys))]
            rhs = [cols[-1][i] for i in range(len(keys))]
            sol, bad = solve_min(mat, rhs)
            if sol is None:
                raise MatchFailure(
                    f"order-{step} mismatch lies outside the span of the "
                    f"solver family's directions (row {bad})",
                    residual=cochain, reason="outside-span")
            coeffs_per_mono[te] = sol
        for te, sol in coeffs_per_mono.items():
            for rho, val in enumerate(sol):
                if val:
                    h[rho] = h[rho] + TruncatedSeries(s_params, M, {te: val})
        report["orders"][step] = {str(te): [str(v) for v in sol]
                                  for te, sol in coeffs_per_mono.items()}
    # final agreement check
    comp_phi = compose_phi(h)
    for name in S.present_charts():
        for a in range(S.codim):
            if not (observed.phi[name][a] - comp_phi[name][a]).truncate(M).is_zero():
                raise MatchFailure(
                    "substituted family still disagrees after matching",
                    residual=None, reason="internal")
    if problem.mode == "extended":
        comp_lam = compose_lam(h)
        for name in space.chart_names:
            if not (observed.lam[name] - comp_lam[name]).truncate(M).is_zero():
                raise MatchFailure(
                    "substituted ambient family still disagrees",
                    residual=None, reason="internal")
    report["pass"] = True
    return tuple(h), report
