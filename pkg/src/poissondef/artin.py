"""Small-extension obstruction calculus for the three deformation functors.

Given a family defined over a truncated one-parameter base, this module
computes the canonical obstruction class blocking its extension one order
further, certifies the exact closedness identities the class must satisfy,
verifies that a different choice of lifting data moves the class by an exact
coboundary, and decides liftability by solving the coboundary equations with
bounded-degree polynomial unknowns.

Three functors are covered:

* ``"def"``     — deformations of the ambient Poisson bivector alone;
* ``"hilb"``    — deformations of the submanifold inside a fixed (possibly
                  parameter-dependent) ambient Poisson structure;
* ``"exthilb"`` — simultaneous deformations of the pair.

The class has up to four components, stored chartwise:

* ``ambient``       — per chart, half the failure of the extended bivector to
                      square to zero (a trivector);
* ``normal``        — per present chart, minus the restricted failure of the
                      moved ideal to be a bracket ideal (a tuple of vector
                      fields along the submanifold);
* ``ambient_cech``  — per ordered overlap, minus the failure of the extended
                      bivectors to glue (a bivector on the first chart);
* ``normal_cech``   — per ordered overlap, the failure of the moved ideals to
                      agree (a tuple of functions, expressed on the first
                      chart along the submanifold).

An independent first-order tangent-space computation by direct epsilon
linearisation is provided for cross-checking the cohomology engines.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .complexes import build_complex, h0_complex
from .deformation import (DeformationProblem, DeformationState,
                          gluing_mismatch, ideal_residual, series_schouten)
from .errors import (ClosednessViolation, InconsistentData, InvalidDeformation,
                     ParameterMismatch)
from .geometry import PoissonManifold, SubmanifoldData
from .linalg import nullspace, solve_min
from .polyvector import Polyvector, restrict, schouten, wedge
from .symbolic import LaurentPoly, TruncatedSeries, _simplex

FUNCTORS = ("def", "hilb", "exthilb")


# ----------------------------------------------------------------------
# Small helpers
# ----------------------------------------------------------------------

def _recut(ser: TruncatedSeries, cutoff: int) -> TruncatedSeries:
    """Same series with a different truncation cutoff."""
    return TruncatedSeries(ser.params, cutoff,
                           {e: c for e, c in ser.terms.items()
                            if sum(e) <= cutoff})


def _coeff_pv(ser: TruncatedSeries, exp: tuple, vars, degree: int) -> Polyvector:
    c = ser.coefficient(exp)
    return Polyvector.zero(vars, degree) if c is None else c


def _coeff_lp(ser: TruncatedSeries, exp: tuple, vars) -> LaurentPoly:
    c = ser.coefficient(exp)
    return LaurentPoly.zero(vars) if c is None else c


def _scale_pv(pv: Polyvector, f: LaurentPoly) -> Polyvector:
    return pv.map_coefficients(lambda c: c * f)


def _vec_entries(obj):
    """Flatten a function or polyvector into ((frame, exponent), value)."""
    if isinstance(obj, LaurentPoly):
        for e, c in obj.terms.items():
            yield ((), e), c
    else:
        for idx, coeff in obj.terms.items():
            for e, c in coeff.terms.items():
                yield (idx, e), c


def _restricted_first_order(S: SubmanifoldData, i: str, k: str):
    """Linearised transition matrix of pair (i, k), as functions on chart i.

    Entry [a][b] multiplies the b-th normal generator of chart k in the
    expansion of the a-th one of chart i; it is transported from chart k to
    chart i along the submanifold.
    """
    return [[S.substitute_tangential(entry, k, i) for entry in row]
            for row in S.first_order[(i, k)]]


# ----------------------------------------------------------------------
# Class container
# ----------------------------------------------------------------------

@dataclass
class ObstructionClass:
    """Canonical obstruction class of a family at one extension step."""
    kind: str
    order: int
    ambient: dict | None = None        # chart -> Polyvector (degree 3)
    normal: dict | None = None         # chart -> [Polyvector deg 1]*r
    ambient_cech: dict | None = None   # (i, k) -> Polyvector (degree 2)
    normal_cech: dict | None = None    # (i, k) -> [LaurentPoly]*r on chart i

    def components(self):
        out = {}
        for label in ("ambient", "normal", "ambient_cech", "normal_cech"):
            val = getattr(self, label)
            if val is not None:
                out[label] = val
        return out

    def is_zero(self) -> bool:
        for label, data in self.components().items():
            for val in data.values():
                items = val if isinstance(val, (list, tuple)) else [val]
                if any(not x.is_zero() for x in items):
                    return False
        return True

    def minus(self, other: "ObstructionClass") -> dict:
        """Componentwise difference self - other (same-shape dictionaries)."""
        diff = {}
        for label, data in self.components().items():
            odata = getattr(other, label)
            block = {}
            for key, val in data.items():
                oval = odata[key]
                if isinstance(val, (list, tuple)):
                    block[key] = [a - b for a, b in zip(val, oval)]
                else:
                    block[key] = val - oval
            diff[label] = block
        return diff


@dataclass
class ArtinReport:
    kind: str
    order: int
    cls: ObstructionClass
    certificates: dict
    liftable: bool
    witness: str | None
    solution: dict | None
    invariance: dict | None = None
    perturbed: ObstructionClass | None = None


# ----------------------------------------------------------------------
# First order: tangent spaces via the cohomology engines
# ----------------------------------------------------------------------

def artin_first_order(kind: str, *, manifold: PoissonManifold | None = None,
                      submanifold: SubmanifoldData | None = None,
                      bound: int | None = None):
    """Tangent space of a functor as the degree-zero hypercohomology of its
    controlling complex. Returns a cohomology report with basis cochains."""
    if kind not in FUNCTORS:
        raise InconsistentData(f"unknown functor kind {kind!r}")
    if kind == "def":
        if manifold is None:
            raise InconsistentData("ambient functor needs the manifold")
        desc = build_complex("bivector", manifold=manifold, probe=False)
    else:
        if submanifold is None:
            raise InconsistentData(f"functor {kind!r} needs the submanifold")
        which = "normal" if kind == "hilb" else "extended"
        desc = build_complex(which, submanifold=submanifold, probe=False)
    return h0_complex(desc, bound=bound)


# ----------------------------------------------------------------------
# First order: independent epsilon-linearisation path
# ----------------------------------------------------------------------

_EPS = ("_eps",)


def _enumeration_atoms(kind, manifold, submanifold, bound, amb_bound):
    atoms = []
    if kind in ("hilb", "exthilb"):
        S = submanifold
        for name in S.present_charts():
            tang = S.tangential[name]
            for slot in range(S.codim):
                for e in sorted(_simplex(len(tang), bound)):
                    atoms.append(("chi", name, slot, e))
    if kind in ("def", "exthilb"):
        space = manifold.space
        for name in space.chart_names:
            cvars = space.chart(name).vars
            n = len(cvars)
            for fi in range(n):
                for fj in range(fi + 1, n):
                    for e in sorted(_simplex(n, amb_bound)):
                        atoms.append(("amb", name, (fi, fj), e))
    return atoms


def _atom_function(S: SubmanifoldData, atom) -> LaurentPoly:
    _, name, _, e = atom
    cvars = S.space.chart(name).vars
    tang = S.tangential[name]
    full = [0] * len(cvars)
    for v, p in zip(tang, e):
        full[cvars.index(v)] = p
    return LaurentPoly(cvars, {tuple(full): Fraction(1)})


def _atom_bivector(space, atom) -> Polyvector:
    _, name, (fi, fj), e = atom
    cvars = space.chart(name).vars
    return Polyvector.monomial(cvars, (fi, fj),
                               LaurentPoly(cvars, {tuple(e): Fraction(1)}))


def first_order_by_enumeration(kind: str, *,
                               manifold: PoissonManifold | None = None,
                               submanifold: SubmanifoldData | None = None,
                               bound: int = 2, amb_bound: int | None = None):
    """Tangent space by brute linearisation, independent of the cohomology
    engines: enumerate bounded-degree monomial directions, impose first-order
    validity of the perturbed family, and return the kernel.

    Works coefficient-exactly with a nilpotent square-zero parameter; the
    reported dimension equals the engine's once the degree bound covers the
    engine basis.
    """
    if kind not in FUNCTORS:
        raise InconsistentData(f"unknown functor kind {kind!r}")
    if kind != "def" and submanifold is None:
        raise InconsistentData(f"functor {kind!r} needs the submanifold")
    if manifold is None:
        if submanifold is None:
            raise InconsistentData("ambient functor needs the manifold")
        manifold = submanifold.manifold
    if amb_bound is None:
        amb_bound = bound + 2
    space = manifold.space
    atoms = _enumeration_atoms(kind, manifold, submanifold, bound, amb_bound)
    columns = []
    for atom in atoms:
        entries = {}
        phi = lam = None
        if atom[0] == "chi":
            phi = {name: [TruncatedSeries.zero(_EPS, 1)
                          for _ in range(submanifold.codim)]
                   for name in submanifold.present_charts()}
            mono = _atom_function(submanifold, atom)
            phi[atom[1]][atom[2]] = TruncatedSeries(_EPS, 1, {(1,): mono})
        else:
            lam = {name: TruncatedSeries.const(_EPS, 1, manifold.bivector(name))
                   for name in space.chart_names}
            lam[atom[1]] = lam[atom[1]] + TruncatedSeries(
                _EPS, 1, {(1,): _atom_bivector(space, atom)})
        if kind in ("def", "exthilb"):
            full_lam = lam or {name: TruncatedSeries.const(
                _EPS, 1, manifold.bivector(name)) for name in space.chart_names}
            for name in space.chart_names:
                jac = series_schouten(full_lam[name], full_lam[name])
                lin = jac.coefficient((1,))
                if lin is not None:
                    for sub, c in _vec_entries(lin):
                        entries[("jac", name) + sub] = c
            for (i, k) in space.overlap_pairs():
                if (k, i) not in space.transitions:
                    continue
                moved = full_lam[k].map(lambda pv: space.pushforward(pv, k, i))
                lin = (full_lam[i] - moved).coefficient((1,))
                if lin is not None:
                    for sub, c in _vec_entries(lin):
                        entries[("biglue", i, k) + sub] = c
        if kind in ("hilb", "exthilb"):
            S = submanifold
            problem = DeformationProblem(S, _EPS, 1, bound, mode="fixed")
            full_phi = phi or {name: [TruncatedSeries.zero(_EPS, 1)
                                      for _ in range(S.codim)]
                               for name in S.present_charts()}
            full_lam = lam or {name: TruncatedSeries.const(
                _EPS, 1, manifold.bivector(name)) for name in space.chart_names}
            res = ideal_residual(problem, full_phi, full_lam)
            for name, rows in res.items():
                for a, row in enumerate(rows):
                    lin = row.coefficient((1,))
                    if lin is not None:
                        for sub, c in _vec_entries(lin):
                            entries[("ideal", name, a) + sub] = c
            mism = gluing_mismatch(problem, full_phi)
            for pair, rows in mism.items():
                for a, row in enumerate(rows):
                    lin = row.coefficient((1,))
                    if lin is not None:
                        for sub, c in _vec_entries(lin):
                            entries[("glue", pair, a) + sub] = c
        columns.append(entries)
    keys = sorted({k for col in columns for k in col})
    matrix = [[col.get(key, Fraction(0)) for col in columns] for key in keys]
    kernel = nullspace(matrix, ncols=len(atoms))
    return {"dimension": len(kernel), "atoms": atoms, "kernel": kernel}


# ----------------------------------------------------------------------
# Canonical obstruction class of a family at one extension step
# ----------------------------------------------------------------------

def _family_pieces(kind, state, manifold, lam, order):
    """Normalise input: return (S, manifold, phi, lam, m) with single-parameter
    series recut to cutoff m + 1."""
    if kind in ("hilb", "exthilb"):
        if state is None:
            raise InconsistentData(f"functor {kind!r} needs a family state")
        S = state.problem.submanifold
        M = S.manifold
        if len(state.params) != 1:
            raise ParameterMismatch(
                "obstruction calculus works over a one-parameter base")
        m = state.order if order is None else order
        cut = m + 1
        phi = {name: [_recut(s, cut) for s in rows]
               for name, rows in state.phi.items()}
        lam_map = {name: _recut(s, cut) for name, s in state.lam.items()}
        return S, M, phi, lam_map, m
    if manifold is None or lam is None:
        raise InconsistentData(
            "ambient functor needs the manifold and the bivector family")
    if order is None:
        raise InconsistentData("ambient functor needs the family order")
    params = next(iter(lam.values())).params
    if len(params) != 1:
        raise ParameterMismatch(
            "obstruction calculus works over a one-parameter base")
    for name in manifold.space.chart_names:
        if name not in lam:
            raise InconsistentData(f"no bivector family on chart {name}")
        if lam[name].order_zero() != manifold.bivector(name):
            raise InvalidDeformation(
                f"family on chart {name} does not start at the ambient "
                "bivector")
    lam_map = {name: _recut(s, order + 1) for name, s in lam.items()}
    return None, manifold, None, lam_map, order


def _ambient_components(space, lam_map, m):
    """Per-chart trivector failures and per-overlap gluing failures of the
    canonical extension-by-zero of the bivector family."""
    exp = (m + 1,)
    half_pi = {}
    for name in space.chart_names:
        cvars = space.chart(name).vars
        jac = series_schouten(lam_map[name], lam_map[name])
        low = jac.truncate(m)
        if not low.is_zero():
            raise InvalidDeformation(
                f"bivector family on chart {name} fails its square-zero "
                f"identity at order {low.min_order()}")
        half_pi[name] = _coeff_pv(jac, exp, cvars, 3) * Fraction(1, 2)
    lam_prime = {}
    for (i, k) in space.overlap_pairs():
        if (k, i) not in space.transitions:
            continue
        cvars = space.chart(i).vars
        moved = lam_map[k].map(lambda pv: space.pushforward(pv, k, i))
        diff = lam_map[i] - moved
        low = diff.truncate(m)
        if not low.is_zero():
            raise InvalidDeformation(
                f"bivector family does not glue over the base on overlap "
                f"({i}, {k})")
        lam_prime[(i, k)] = _coeff_pv(diff, exp, cvars, 2)
    return half_pi, lam_prime


def _normal_components(S, problem, phi, lam_map, m, perturb):
    """Per-chart vector-field failures (minus, restricted) and per-overlap
    ideal mismatches of the canonical liftings-by-zero of the family."""
    space = S.space
    exp = (m + 1,)
    res = ideal_residual(problem, phi, lam_map)
    minus_normal = {}
    for name, rows in res.items():
        cvars = space.chart(name).vars
        w = S.normal[name]
        out = []
        for a, row in enumerate(rows):
            low = row.truncate(m)
            if not low.is_zero():
                raise InvalidDeformation(
                    f"family is not a bracket-ideal family on chart {name} "
                    f"at order {low.min_order()}")
            G = _coeff_pv(row, exp, cvars, 1)
            if perturb is not None and name in perturb.get("B", {}):
                for b in range(S.codim):
                    wb = LaurentPoly.variable(cvars, w[b])
                    G = G - _scale_pv(perturb["B"][name][a][b], wb)
            out.append(restrict(-G, w))
        minus_normal[name] = out
    mism = gluing_mismatch(problem, phi)
    normal_cech = {}
    for (i, k), rows in mism.items():
        out = []
        for a, row in enumerate(rows):
            low = row.truncate(m)
            if not low.is_zero():
                raise InvalidDeformation(
                    f"family ideals do not glue on overlap ({i}, {k}) at "
                    f"order {low.min_order()}")
            h_on_k = -_coeff_lp(row, exp, space.chart(k).vars)
            out.append(S.substitute_tangential(h_on_k, k, i))
        normal_cech[(i, k)] = out
    return minus_normal, normal_cech


def _canonical_class(kind, S, manifold, phi, lam_map, m, perturb=None):
    """Obstruction class of the canonical liftings of a degree-m family,
    optionally shifted by explicit lifting perturbations.

    ``perturb`` may carry per-chart ideal-generator shifts ``A`` (functions),
    structure-field shifts ``B`` (matrices of vector fields) and bivector
    shifts ``D``; each enters the liftings at the new order only.
    """
    space = manifold.space
    cut = m + 1
    if perturb is not None:
        if "D" in perturb and kind in ("def", "exthilb"):
            lam_map = dict(lam_map)
            for name, D in perturb["D"].items():
                lam_map[name] = lam_map[name] + TruncatedSeries(
                    lam_map[name].params, cut, {(cut,): D})
        if "A" in perturb and kind in ("hilb", "exthilb"):
            phi = {name: list(rows) for name, rows in phi.items()}
            for name, shift in perturb["A"].items():
                for a, A in enumerate(shift):
                    phi[name][a] = phi[name][a] - TruncatedSeries(
                        phi[name][a].params, cut, {(cut,): A})
    cls = ObstructionClass(kind, m)
    if kind in ("def", "exthilb"):
        half_pi, lam_prime = _ambient_components(space, lam_map, m)
        cls.ambient = half_pi
        cls.ambient_cech = {pair: -lp for pair, lp in lam_prime.items()}
    if kind == "hilb":
        for name in space.chart_names:
            if not series_schouten(lam_map[name], lam_map[name]).is_zero():
                raise InvalidDeformation(
                    f"ambient bivector family on chart {name} fails its "
                    "square-zero identity")
        for (i, k) in space.overlap_pairs():
            if (k, i) not in space.transitions:
                continue
            moved = lam_map[k].map(lambda pv: space.pushforward(pv, k, i))
            if not (lam_map[i] - moved).is_zero():
                raise InvalidDeformation(
                    f"ambient bivector family does not glue on ({i}, {k})")
    if kind in ("hilb", "exthilb"):
        params = next(iter(lam_map.values())).params
        problem = DeformationProblem(S, params, cut, 0, mode="fixed")
        cls.normal, cls.normal_cech = _normal_components(
            S, problem, phi, lam_map, m, perturb)
    return cls


# ----------------------------------------------------------------------
# Exact closedness certificates
# ----------------------------------------------------------------------

def _present_pairs(S):
    present = S.present_charts()
    return [(i, k) for (i, k) in S.space.overlap_pairs()
            if i in present and k in present and i != k]


def _normal_diff_zero(S, chart, chi, lam0, extra=None):
    """p = 0 covariant derivative of a tuple of functions, plus the bracket
    of an optional bivector with the normal coordinates (the mixed term of
    the extended complex)."""
    space = S.space
    cvars = space.chart(chart).vars
    w = S.normal[chart]
    Tbar = S.structure_fields_restricted(chart)
    out = []
    for a in range(S.codim):
        acc = -restrict(schouten(lam0, Polyvector.from_function(
            chi[a].with_vars(cvars))), w)
        for b in range(S.codim):
            acc = acc + _scale_pv(Tbar[a][b], chi[b])
        if extra is not None:
            w_pv = Polyvector.from_function(LaurentPoly.variable(cvars, w[a]))
            acc = acc + restrict(schouten(extra, w_pv), w)
        out.append(acc)
    return out


def _certify_class(cls: ObstructionClass, S, manifold):
    """Exact closedness identities of the canonical class; raises when any
    fails, returns the certificate map otherwise."""
    space = manifold.space
    kind = cls.kind
    certs = {}
    lam0 = {name: manifold.bivector(name) for name in space.chart_names}

    if kind in ("def", "exthilb"):
        ok = True
        for name, half_pi in cls.ambient.items():
            if not schouten(half_pi, lam0[name]).is_zero():
                ok = False
        certs["ambient-closed"] = ok
        ok = True
        for (i, k), minus_lp in cls.ambient_cech.items():
            diff = cls.ambient[i] - space.pushforward(cls.ambient[k], k, i)
            if diff != schouten(lam0[i], -minus_lp):
                ok = False
        certs["ambient-step"] = ok
        ok = True
        names = space.chart_names
        for i in names:
            for j in names:
                for k in names:
                    if len({i, j, k}) != 3:
                        continue
                    needed = [(i, j), (j, k), (i, k)]
                    if any(p not in cls.ambient_cech for p in needed):
                        continue
                    tot = space.pushforward(cls.ambient_cech[(j, k)], j, i) \
                        - cls.ambient_cech[(i, k)] + cls.ambient_cech[(i, j)]
                    if not tot.is_zero():
                        ok = False
        certs["ambient-triple"] = ok

    if kind in ("hilb", "exthilb"):
        ok = True
        for name, rows in cls.normal.items():
            cvars = space.chart(name).vars
            w = S.normal[name]
            Tbar = S.structure_fields_restricted(name)
            for a in range(S.codim):
                acc = restrict(schouten(lam0[name], rows[a]), w)
                for b in range(S.codim):
                    acc = acc - wedge(rows[b], Tbar[a][b])
                if kind == "exthilb":
                    w_pv = Polyvector.from_function(
                        LaurentPoly.variable(cvars, w[a]))
                    acc = acc + restrict(
                        schouten(cls.ambient[name], w_pv), w)
                if not acc.is_zero():
                    ok = False
        certs["normal-closed"] = ok

        ok = True
        for (i, k) in _present_pairs(S):
            rbar = _restricted_first_order(S, i, k)
            w = S.normal[i]
            Tbar = S.structure_fields_restricted(i)
            cvars = space.chart(i).vars
            h = cls.normal_cech[(i, k)]
            for a in range(S.codim):
                acc = -cls.normal[i][a]
                for b in range(S.codim):
                    acc = acc + _scale_pv(
                        S.push_restrict(cls.normal[k][b], k, i), rbar[a][b])
                acc = acc - restrict(schouten(
                    lam0[i], Polyvector.from_function(
                        h[a].with_vars(cvars))), w)
                for b in range(S.codim):
                    acc = acc + _scale_pv(Tbar[a][b], h[b])
                if kind == "exthilb":
                    w_pv = Polyvector.from_function(
                        LaurentPoly.variable(cvars, w[a]))
                    acc = acc + restrict(schouten(
                        cls.ambient_cech[(i, k)], w_pv), w)
                if not acc.is_zero():
                    ok = False
        certs["normal-step"] = ok

        ok = True
        present = S.present_charts()
        for i in present:
            for j in present:
                for k in present:
                    if len({i, j, k}) != 3:
                        continue
                    needed = [(i, j), (j, k), (i, k)]
                    if any(p not in cls.normal_cech for p in needed):
                        continue
                    rbar = _restricted_first_order(S, i, j)
                    h_jk = [S.substitute_tangential(x, j, i)
                            for x in cls.normal_cech[(j, k)]]
                    for a in range(S.codim):
                        tot = cls.normal_cech[(i, j)][a] \
                            - cls.normal_cech[(i, k)][a]
                        for b in range(S.codim):
                            tot = tot + rbar[a][b] * h_jk[b]
                        if not tot.is_zero():
                            ok = False
        certs["normal-triple"] = ok

    failed = sorted(name for name, ok in certs.items() if not ok)
    if failed:
        raise ClosednessViolation(
            "obstruction class fails closedness certificates: "
            + ", ".join(failed))
    return certs


# ----------------------------------------------------------------------
# Liftability: explicit coboundary equations
# ----------------------------------------------------------------------

def _lift_atoms(kind, S, manifold, bound, amb_bound):
    atoms = []
    if kind in ("hilb", "exthilb"):
        for name in S.present_charts():
            tang = S.tangential[name]
            for slot in range(S.codim):
                for e in sorted(_simplex(len(tang), bound)):
                    atoms.append(("chi", name, slot, e))
    if kind in ("def", "exthilb"):
        space = manifold.space
        for name in space.chart_names:
            cvars = space.chart(name).vars
            n = len(cvars)
            for fi in range(n):
                for fj in range(fi + 1, n):
                    for e in sorted(_simplex(n, amb_bound)):
                        atoms.append(("amb", name, (fi, fj), e))
    return atoms


def _lift_column(kind, S, manifold, atom):
    """Residual entries of the coboundary map on one monomial unknown."""
    space = manifold.space
    entries = {}
    if atom[0] == "chi":
        _, name, slot, e = atom
        chi = [LaurentPoly.zero(space.chart(name).vars)
               for _ in range(S.codim)]
        chi[slot] = _atom_function(S, atom)
        lam0 = manifold.bivector(name)
        rows = _normal_diff_zero(S, name, chi, lam0)
        for a, pv in enumerate(rows):
            for sub, c in _vec_entries(pv):
                entries[("nabla", name, a) + sub] = c
        for (i, k) in _present_pairs(S):
            if name not in (i, k):
                continue
            rbar = _restricted_first_order(S, i, k)
            for a in range(S.codim):
                if name == i and a == slot:
                    val = chi[slot]
                elif name == k:
                    val = -(rbar[a][slot] *
                            S.substitute_tangential(chi[slot], k, i))
                else:
                    continue
                for sub, c in _vec_entries(val):
                    entries[("cech", i, k, a) + sub] = c
    else:
        _, name, _, _ = atom
        D = _atom_bivector(space, atom)
        lam0 = manifold.bivector(name)
        for sub, c in _vec_entries(-schouten(D, lam0)):
            entries[("amb", name) + sub] = c
        for (i, k) in space.overlap_pairs():
            if (k, i) not in space.transitions:
                continue
            if name == i:
                val = D
            elif name == k:
                val = -space.pushforward(D, k, i)
            else:
                continue
            for sub, c in _vec_entries(val):
                entries[("ambcech", i, k) + sub] = c
        if kind == "exthilb" and S is not None and \
                name in S.present_charts():
            w = S.normal[name]
            cvars = space.chart(name).vars
            for a in range(S.codim):
                w_pv = Polyvector.from_function(
                    LaurentPoly.variable(cvars, w[a]))
                pv = restrict(schouten(D, w_pv), w)
                for sub, c in _vec_entries(pv):
                    entries[("nabla", name, a) + sub] = c
    return entries


def _lift_rhs(cls: ObstructionClass, S, manifold):
    rhs = {}
    if cls.normal is not None:
        for name, rows in cls.normal.items():
            for a, pv in enumerate(rows):
                for sub, c in _vec_entries(pv):
                    rhs[("nabla", name, a) + sub] = c
        for (i, k), rows in cls.normal_cech.items():
            for a, f in enumerate(rows):
                for sub, c in _vec_entries(f):
                    rhs[("cech", i, k, a) + sub] = c
    if cls.ambient is not None:
        for name, pv in cls.ambient.items():
            for sub, c in _vec_entries(pv):
                rhs[("amb", name) + sub] = c
        for (i, k), pv in cls.ambient_cech.items():
            for sub, c in _vec_entries(pv):
                rhs[("ambcech", i, k) + sub] = c
    return rhs


def _decide_liftable(cls, S, manifold, bound, amb_bound):
    atoms = _lift_atoms(cls.kind, S, manifold, bound, amb_bound)
    columns = [_lift_column(cls.kind, S, manifold, atom) for atom in atoms]
    rhs = _lift_rhs(cls, S, manifold)
    reachable = {k for col in columns for k in col}
    missing = sorted(k for k in rhs if k not in reachable)
    if missing:
        return False, f"no unknown reaches equation row {missing[0]}", None
    keys = sorted(reachable)
    matrix = [[col.get(key, Fraction(0)) for col in columns] for key in keys]
    vec = [rhs.get(key, Fraction(0)) for key in keys]
    sol, witness = solve_min(matrix, vec)
    if sol is None:
        where = keys[witness] if witness is not None else "unknown"
        return False, f"inconsistent equation row {where}", None
    solution = {atom: v for atom, v in zip(atoms, sol) if v}
    return True, None, solution


# ----------------------------------------------------------------------
# Lifting-choice independence
# ----------------------------------------------------------------------

def _default_perturbation(kind, S, manifold, seed: int):
    """Deterministic nonzero shifts of every lifting choice."""
    space = manifold.space
    perturb = {}
    if kind in ("hilb", "exthilb"):
        A = {}
        B = {}
        for ci, name in enumerate(S.present_charts()):
            cvars = space.chart(name).vars
            tang = S.tangential[name]
            rows_A = []
            rows_B = []
            for a in range(S.codim):
                c = Fraction(seed + 2 * ci + 3 * a + 1)
                if tang:
                    base = LaurentPoly.variable(cvars, tang[0])
                else:
                    base = LaurentPoly.const(cvars, 1)
                rows_A.append(base * LaurentPoly.const(cvars, c))
                rows_B.append([Polyvector.monomial(
                    cvars, (0,), LaurentPoly.const(cvars, c + b + 1))
                    for b in range(S.codim)])
            A[name] = rows_A
            B[name] = rows_B
        perturb["A"] = A
        perturb["B"] = B
    if kind in ("def", "exthilb"):
        D = {}
        for ci, name in enumerate(space.chart_names):
            cvars = space.chart(name).vars
            if len(cvars) < 2:
                continue
            c = Fraction(seed + ci + 2)
            D[name] = Polyvector.monomial(
                cvars, (0, 1), LaurentPoly.const(cvars, c))
        perturb["D"] = D
    return perturb


def _coboundary_of_perturbation(kind, S, manifold, perturb):
    """Image of the lifting shifts under the coboundary map; by the exact
    lifting-difference identities this must equal (canonical class) minus
    (perturbed class)."""
    space = manifold.space
    out = {}
    D = perturb.get("D", {})
    A = perturb.get("A", {})

    def D_of(name):
        cvars = space.chart(name).vars
        return D.get(name, Polyvector.zero(cvars, 2))

    if kind in ("def", "exthilb"):
        amb = {}
        ambc = {}
        for name in space.chart_names:
            amb[name] = -schouten(D_of(name), manifold.bivector(name))
        for (i, k) in space.overlap_pairs():
            if (k, i) not in space.transitions:
                continue
            ambc[(i, k)] = D_of(i) - space.pushforward(D_of(k), k, i)
        out["ambient"] = amb
        out["ambient_cech"] = ambc
    if kind in ("hilb", "exthilb"):
        nor = {}
        norc = {}
        for name in S.present_charts():
            minus_A = [-x for x in A[name]]
            extra = D_of(name) if kind == "exthilb" else None
            nor[name] = _normal_diff_zero(
                S, name, minus_A, manifold.bivector(name), extra=extra)
        for (i, k) in _present_pairs(S):
            rbar = _restricted_first_order(S, i, k)
            moved = [S.substitute_tangential(x, k, i) for x in A[k]]
            rows = []
            for a in range(S.codim):
                tot = -A[i][a]
                for b in range(S.codim):
                    tot = tot + rbar[a][b] * moved[b]
                rows.append(tot)
            norc[(i, k)] = rows
        out["normal"] = nor
        out["normal_cech"] = norc
    return out


def _dicts_equal(diff: dict, cob: dict) -> bool:
    if sorted(diff) != sorted(cob):
        return False
    for label, block in diff.items():
        other = cob[label]
        if sorted(block) != sorted(other):
            return False
        for key, val in block.items():
            oval = other[key]
            if isinstance(val, (list, tuple)):
                if any(a != b for a, b in zip(val, oval)):
                    return False
            elif val != oval:
                return False
    return True


# ----------------------------------------------------------------------
# Top-level entry point
# ----------------------------------------------------------------------

def artin_obstruction(kind: str, *, state: DeformationState | None = None,
                      manifold: PoissonManifold | None = None,
                      lam: dict | None = None, order: int | None = None,
                      bound: int = 2, amb_bound: int | None = None,
                      perturb: int | None = None) -> ArtinReport:
    """Canonical obstruction class of a one-parameter family at its next
    extension step, with exact closedness certificates and a bounded-degree
    liftability decision.

    ``state`` supplies the family for the submanifold functors; ``manifold``,
    ``lam`` and ``order`` supply it for the ambient one. When ``perturb`` is
    an integer seed, every lifting choice is additionally shifted by explicit
    nonzero data, the class is recomputed, and the difference is checked to be
    exactly the coboundary of the shifts; the liftability verdicts must agree.
    """
    if kind not in FUNCTORS:
        raise InconsistentData(f"unknown functor kind {kind!r}")
    if amb_bound is None:
        amb_bound = bound + 2
    S, M, phi, lam_map, m = _family_pieces(kind, state, manifold, lam, order)
    cls = _canonical_class(kind, S, M, phi, lam_map, m)
    certs = _certify_class(cls, S, M)
    liftable, witness, solution = _decide_liftable(
        cls, S, M, bound, amb_bound)
    invariance = None
    perturbed = None
    if perturb is not None:
        shifts = _default_perturbation(kind, S, M, int(perturb))
        perturbed = _canonical_class(kind, S, M, phi, lam_map, m,
                                     perturb=shifts)
        pert_certs = _certify_class(perturbed, S, M)
        diff = cls.minus(perturbed)
        cob = _coboundary_of_perturbation(kind, S, M, shifts)
        identities = _dicts_equal(diff, cob)
        p_liftable, _, _ = _decide_liftable(perturbed, S, M, bound, amb_bound)
        invariance = {
            "identities": identities,
            "certificates": pert_certs,
            "same_verdict": p_liftable == liftable,
        }
        if not identities:
            raise ClosednessViolation(
                "perturbed liftings moved the class by a non-coboundary")
        if p_liftable != liftable:
            raise InconsistentData(
                "perturbed liftings changed the liftability verdict")
    return ArtinReport(kind, m, cls, certs, liftable, witness, solution,
                       invariance, perturbed)
