"""One-parameter invariant families of boundary forms.

A family is a template network on the boundary whose positive edges carry
conductance 1 (``one``) or the parameter v (``vee``).  Renormalizing an
evaluation must land back in the family:

    Lambda(E_v) = rho(v)^{-1} E_{alpha(v)}.

alpha and rho are extracted from exact traces, certified to be rational
functions by exact interpolation, and their limits give the constants

    rho_G = lim rho(v),   beta = lim v / alpha(v)

that control the v -> infinity (shorting) regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import sympy

from fractalforms.network import (
    ConductanceNetwork,
    PatternMismatchError,
    renormalize,
    replicate,
)
from fractalforms.scalars import INF, is_exact
from fractalforms.structure import build_level


class FitError(ValueError):
    """No rational function of the requested degree fits the samples."""


class ExactUnavailableError(ValueError):
    """An exact rational value was requested where only floats exist."""


# ---------------------------------------------------------------------------
# rational-function machinery (Fraction coefficients, ascending order)

def _trim(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


def _padd(p, q):
    n = max(len(p), len(q))
    return _trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def _pneg(p):
    return tuple(-c for c in p)


def _pmul(p, q):
    if not p or not q:
        return ()
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] += a * b
    return _trim(out)


def _peval(p, x):
    acc = 0 * x if not isinstance(x, float) else 0.0
    for c in reversed(p):
        acc = acc * x + (c if not isinstance(x, float) else float(c))
    return acc


def _pder(p):
    return _trim([i * c for i, c in enumerate(p)][1:])


def _pdivmod(p, q):
    p, q = list(p), list(q)
    if not q:
        raise ZeroDivisionError("polynomial division by zero")
    out = [Fraction(0)] * max(0, len(p) - len(q) + 1)
    while len(p) >= len(q) and any(c != 0 for c in p):
        if p[-1] == 0:
            p.pop()
            continue
        k = len(p) - len(q)
        f = p[-1] / q[-1]
        out[k] = f
        for i, c in enumerate(q):
            p[i + k] -= f * c
        p.pop()
    return _trim(out), _trim(p)


def _pgcd(p, q):
    p, q = _trim(p), _trim(q)
    while q:
        _, r = _pdivmod(p, q)
        p, q = q, r
    if not p:
        return ()
    lead = p[-1]
    return tuple(c / lead for c in p)


class RationalFunction:
    """Reduced ratio of Fraction polynomials with monic denominator."""

    def __init__(self, num, den):
        num, den = _trim(num), _trim(den)
        if not den:
            raise ZeroDivisionError("zero denominator")
        g = _pgcd(num, den)
        if len(g) > 1:
            num, _ = _pdivmod(num, g)
            den, _ = _pdivmod(den, g)
        lead = den[-1]
        self.num = tuple(Fraction(c) / lead for c in num)
        self.den = tuple(Fraction(c) / lead for c in den)

    def __call__(self, v):
        if isinstance(v, float):
            return _peval(self.num, v) / _peval(self.den, v)
        v = Fraction(v)
        dv = _peval(self.den, v)
        if dv == 0:
            raise ZeroDivisionError(f"pole at v={v}")
        return _peval(self.num, v) / dv

    @property
    def deg_num(self):
        return len(self.num) - 1

    @property
    def deg_den(self):
        return len(self.den) - 1

    def derivative(self):
        num = _padd(_pmul(_pder(self.num), self.den), _pneg(_pmul(self.num, _pder(self.den))))
        return RationalFunction(num, _pmul(self.den, self.den))

    def limit_at_infinity(self):
        if self.deg_num < self.deg_den:
            return Fraction(0)
        if self.deg_num == self.deg_den:
            return self.num[-1] / self.den[-1]
        return INF

    def __eq__(self, other):
        if not isinstance(other, RationalFunction):
            return NotImplemented
        return _pmul(self.num, other.den) == _pmul(other.num, self.den)

    def __hash__(self):
        return hash((self.num, self.den))

    def __repr__(self):
        def fmt(p):
            return " + ".join(f"{c}*v^{i}" if i else f"{c}" for i, c in enumerate(p) if c != 0) or "0"
        return f"({fmt(self.num)}) / ({fmt(self.den)})"

    def sympy_expr(self, symbol):
        num = sum(sympy.Rational(c.numerator, c.denominator) * symbol ** i for i, c in enumerate(self.num))
        den = sum(sympy.Rational(c.numerator, c.denominator) * symbol ** i for i, c in enumerate(self.den))
        return num / den


def interpolate_rational(points, max_degree):
    """Exact rational interpolation through (v, y) Fraction samples.

    Searches degrees 0..max_degree for the least-degree P/Q with
    P(v_i) - y_i Q(v_i) = 0 at every sample and Q(v_i) != 0; needs at least
    2*d + 2 samples to pin degree d.  Raises FitError with a residual
    witness when nothing fits.
    """
    points = [(Fraction(v), Fraction(y)) for v, y in points]
    if len({v for v, _ in points}) != len(points):
        raise ValueError("sample points must be distinct")
    witness = None
    for d in range(max_degree + 1):
        if len(points) < 2 * d + 2:
            raise FitError(f"need at least {2 * d + 2} samples for degree {d}")
        rows = []
        for v, y in points:
            pv = [v ** i for i in range(d + 1)]
            rows.append(pv + [-y * t for t in pv])
        for vec in _nullspace(rows):
            num, den = _trim(vec[: d + 1]), _trim(vec[d + 1:])
            if not den:
                continue
            cand = RationalFunction(num, den)
            bad = next(
                (
                    (v, y)
                    for v, y in points
                    if _peval(cand.den, v) == 0 or cand(v) != y
                ),
                None,
            )
            if bad is None:
                return cand
            witness = bad
    raise FitError(f"no rational function of degree <= {max_degree} fits; residual witness at v={witness}")


def _nullspace(rows):
    """Basis of the nullspace of an exact matrix, via RREF."""
    rows = [[Fraction(c) for c in r] for r in rows]
    ncols = len(rows[0])
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = Fraction(1) / rows[r][c]
        rows[r] = [x * inv for x in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        vec = [Fraction(0)] * ncols
        vec[fc] = Fraction(1)
        for i, pc in enumerate(pivots):
            vec[pc] = -rows[i][fc]
        basis.append(vec)
    return basis


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AlphaRho:
    v: object
    alpha: object
    rho: object


@dataclass
class AssumptionReport:
    asymptotically_regular: bool
    non_vanishing: bool
    vee_path_condition: bool
    beta_gt_one: bool
    rho_G: object = None
    beta: object = None
    pattern_failures: tuple = ()
    notes: tuple = ()

    def all_hold(self):
        return (self.asymptotically_regular and self.non_vanishing
                and self.vee_path_condition and self.beta_gt_one)

    def as_dict(self):
        return {
            "asymptotically_regular": self.asymptotically_regular,
            "non_vanishing": self.non_vanishing,
            "vee_path_condition": self.vee_path_condition,
            "beta_gt_one": self.beta_gt_one,
            "rho_G": str(self.rho_G),
            "beta": str(self.beta),
        }


class OneParamFamily:
    """Template with one/vee edge classes, evaluable at any v > 0."""

    def __init__(self, structure):
        if structure.family is None:
            raise ValueError("structure config has no family block")
        self.structure = structure
        self.template = dict(structure.family["template"])
        if not any(kind == "vee" for kind in self.template.values()):
            raise ValueError("family needs at least one vee edge")
        self._fit = None
        self._vmin = None

    # -- evaluation --------------------------------------------------------

    def vee_edges(self):
        return sorted(e for e, kind in self.template.items() if kind == "vee")

    def one_edges(self):
        return sorted(e for e, kind in self.template.items() if kind == "one")

    def eval(self, v, exact=None) -> ConductanceNetwork:
        if exact is None:
            exact = is_exact(v)
        if v <= 0:
            raise ValueError("family parameter must be positive")
        net = ConductanceNetwork(self.structure.boundary, exact=exact)
        one = Fraction(1) if exact else 1.0
        vv = Fraction(v) if exact else float(v)
        for (u, w), kind in sorted(self.template.items()):
            net.add_edge(u, w, vv if kind == "vee" else one, kind)
        return net

    def extract_alpha_rho(self, v, rel=1e-9) -> AlphaRho:
        """Renormalize E_v and read off (alpha(v), rho(v)) from the two-class
        pattern; raises PatternMismatchError if the family is not invariant
        at v."""
        exact = is_exact(v)
        traced = renormalize(self.structure, self.eval(v, exact=exact))
        ones, vees = [], []
        B = self.structure.boundary
        for a in range(len(B)):
            for b in range(a + 1, len(B)):
                key = (min(B[a], B[b]), max(B[a], B[b]))
                c = traced.conductance(B[a], B[b])
                kind = self.template.get(key)
                if kind == "one":
                    ones.append(c)
                elif kind == "vee":
                    vees.append(c)
                elif c != 0 and (exact or abs(float(c)) > rel * _max_c(traced)):
                    raise PatternMismatchError(
                        f"not a one-parameter invariant family at v={v}: "
                        f"edge {key} appears outside the template")
        if not ones or not vees:
            raise PatternMismatchError("template must have both one and vee edges")
        if not _uniform(ones, exact, rel) or not _uniform(vees, exact, rel):
            raise PatternMismatchError(
                f"not a one-parameter invariant family at v={v}: "
                f"traced classes are not uniform (one={ones}, vee={vees})")
        c1, cv = ones[0], vees[0]
        if c1 <= 0 or cv <= 0:
            raise PatternMismatchError(f"traced class value vanished at v={v}")
        return AlphaRho(v=v, alpha=cv / c1, rho=(Fraction(1) if exact else 1.0) / c1)

    # -- fitted rational functions ------------------------------------------

    def fit(self, degree=4, n_extra=2):
        """Exact rational interpolation of alpha and rho from renormalized
        samples; cached."""
        if self._fit is not None and self._fit[2] >= degree:
            return self._fit[:2]
        npts = 2 * degree + 2 + n_extra
        pts = [Fraction(3, 2) + Fraction(k, 7) for k in range(npts)]
        samples = [self.extract_alpha_rho(v) for v in pts]
        alpha_hat = interpolate_rational([(s.v, s.alpha) for s in samples], degree)
        rho_hat = interpolate_rational([(s.v, s.rho) for s in samples], degree)
        self._fit = (alpha_hat, rho_hat, degree)
        return alpha_hat, rho_hat

    @property
    def alpha_hat(self) -> RationalFunction:
        return self.fit()[0]

    @property
    def rho_hat(self) -> RationalFunction:
        return self.fit()[1]

    def limit_constants(self, cross_check=True):
        """(rho_G, beta) as exact Fractions from the fitted leading
        coefficients, cross-checked against a probe at v = 1e6."""
        alpha_hat, rho_hat = self.fit()
        rho_G = rho_hat.limit_at_infinity()
        if rho_G is INF or rho_G == 0:
            raise ValueError("rho has no finite positive limit; the family is not iterable")
        if alpha_hat.deg_num != alpha_hat.deg_den + 1:
            raise ValueError("alpha(v)/v has no finite positive limit; beta undefined")
        beta = alpha_hat.den[-1] / alpha_hat.num[-1]
        if cross_check:
            probe = 10.0 ** 6
            for fn, lim in ((rho_hat, rho_G), (alpha_hat, None)):
                got = fn(probe) / (1.0 if lim is not None else probe)
                want = float(lim) if lim is not None else 1.0 / float(beta)
                if abs(got - want) > 1e-4 * max(abs(want), 1e-12):
                    raise AssertionError(f"fitted limit {want} disagrees with probe value {got}")
        return rho_G, beta

    # -- assumption checks ---------------------------------------------------

    def probe_grid(self, n_points=24, hi=1e6):
        vmin, _ = self.vmin()
        lo = max(float(vmin), 1e-3) * 1.0001 + 1e-9
        return [lo * (hi / lo) ** (k / (n_points - 1)) for k in range(n_points)]

    def verify_assumptions(self, grid=None) -> AssumptionReport:
        alpha_hat, rho_hat = self.fit()
        notes = []
        # (1) asymptotic regularity: r_max * rho(v)^{-1} < 1 on the grid and
        #     at the fitted limit
        r_max = max(self.structure.resistance)
        try:
            rho_G, beta = self.limit_constants()
        except ValueError as exc:
            notes.append(str(exc))
            rho_G, beta = None, None
        grid = grid if grid is not None else self.probe_grid()
        regular = rho_G is not None and r_max < rho_G
        failures = []
        for v in grid:
            try:
                rv = rho_hat(float(v))
            except ZeroDivisionError:
                failures.append(v)
                continue
            if not float(r_max) / rv < 1:
                regular = False
        # (2) non-vanishing: deleting the conductance-1 edges must disconnect
        #     the template graph
        non_vanishing = self._vee_subgraph_disconnected()
        # (3) path condition: a vee edge whose endpoints are joined by a
        #     vee-only path in the replicated level-1 network
        vee_path = self._vee_path_level1()
        beta_ok = beta is not None and beta > 1
        return AssumptionReport(
            asymptotically_regular=regular,
            non_vanishing=non_vanishing,
            vee_path_condition=vee_path,
            beta_gt_one=beta_ok,
            rho_G=rho_G,
            beta=beta,
            pattern_failures=tuple(failures),
            notes=tuple(notes),
        )

    def _vee_subgraph_disconnected(self):
        B = self.structure.boundary
        parent = {u: u for u in B}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for (u, w) in self.vee_edges():
            parent[find(u)] = find(w)
        return len({find(u) for u in B}) > 1

    def _vee_path_level1(self):
        net, g1 = replicate(self.structure, self.eval(Fraction(2)), 1)
        vee_adj = {i: set() for i in range(g1.n_vertices)}
        for u, w, _, label in net.edges():
            if label == "vee":
                vee_adj[net.index[u]].add(net.index[w])
                vee_adj[net.index[w]].add(net.index[u])
        for (u, w) in self.vee_edges():
            a = g1.boundary_ids[self.structure.label_index(u)]
            b = g1.boundary_ids[self.structure.label_index(w)]
            seen, stack = {a}, [a]
            while stack:
                x = stack.pop()
                if x == b:
                    break
                for y in vee_adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            if b in seen:
                return True
        return False

    # -- v_min and inverse iteration -----------------------------------------

    def vmin(self):
        """Largest real root of d(alpha)/dv = 0, alpha(v) = v, rho(v) = r_max
        (and 0).  Returns (value, is_exact)."""
        if self._vmin is not None:
            return self._vmin
        alpha_hat, rho_hat = self.fit()
        v = sympy.Symbol("v", real=True)
        alpha_expr = alpha_hat.sympy_expr(v)
        if sympy.simplify(alpha_expr - v) == 0:
            raise ValueError("family is a fixed line: alpha(v) = v identically")
        r_max = max(self.structure.resistance)
        candidates = [sympy.Integer(0)]
        polys = [
            sympy.numer(sympy.together(sympy.diff(alpha_expr, v))),
            sympy.numer(sympy.together(alpha_expr - v)),
            sympy.numer(sympy.together(rho_hat.sympy_expr(v) - sympy.Rational(r_max.numerator, r_max.denominator))),
        ]
        for p in polys:
            p = sympy.Poly(sympy.expand(p), v)
            if p.degree() < 1:
                continue
            candidates.extend(sympy.real_roots(p))
        vmax = max(candidates)
        if vmax.is_rational:
            out = (Fraction(int(sympy.numer(vmax)), int(sympy.denom(vmax))), True)
        else:
            out = (float(vmax.evalf(30)), False)
        self._vmin = out
        return out

    def alpha_forward(self, v: Fraction) -> Fraction:
        """Exact alpha(v) for rational v (for constructing exact chains)."""
        return self.alpha_hat(Fraction(v))

    def forward_parameter(self, u0: Fraction, n: int) -> Fraction:
        """v = alpha^n(u0): a parameter whose inverse iterates down to u0 are
        all exact rationals."""
        v = Fraction(u0)
        for _ in range(n):
            v = self.alpha_forward(v)
        return v

    def alpha_inverse(self, v, n=1, exact=False, rel_tol=1e-12):
        """alpha^{-n}(v) on (v_min, infinity).

        Float path: monotone bisection on the fitted alpha.  Exact path:
        rational roots of P(u) - v Q(u) (available e.g. when alpha is affine
        or v lies on a forward chain); raises ExactUnavailableError otherwise.
        """
        vmin, vmin_exact = self.vmin()
        at_fixed_point = (vmin_exact and float(v) == float(vmin)
                          and self.alpha_hat(Fraction(vmin)) == vmin)
        if not float(v) > float(vmin) and not at_fixed_point:
            raise ValueError(f"alpha_inverse needs v > v_min = {vmin}, got {v}")
        if n < 0:
            raise ValueError("n must be >= 0")
        out = Fraction(v) if exact else float(v)
        for _ in range(n):
            out = self._alpha_inverse_exact(out) if exact else self._alpha_inverse_float(out, rel_tol)
        return out

    def _alpha_inverse_float(self, v, rel_tol):
        alpha_hat = self.alpha_hat
        lo = float(v)
        hi = max(2.0 * lo, lo + 1.0)
        while alpha_hat(hi) < v:
            hi *= 2.0
            if hi > 1e300:
                raise ValueError("alpha inverse bracket failed")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if alpha_hat(mid) < v:
                lo = mid
            else:
                hi = mid
            if hi - lo <= rel_tol * max(1.0, abs(hi)):
                break
        return 0.5 * (lo + hi)

    def _alpha_inverse_exact(self, v: Fraction) -> Fraction:
        alpha_hat = self.alpha_hat
        v = Fraction(v)
        # P(u) - v Q(u) = 0
        p = list(alpha_hat.num)
        q = [c * v for c in alpha_hat.den]
        coeffs = _padd(p, _pneg(q))
        if len(coeffs) == 2:
            root = -coeffs[0] / coeffs[1]
            if root >= v:
                return root
            raise ExactUnavailableError(f"no exact inverse above v={v}")
        u = sympy.Symbol("u")
        poly = sympy.Poly(
            sum(sympy.Rational(c.numerator, c.denominator) * u ** i for i, c in enumerate(coeffs)), u)
        roots = [r for r in sympy.real_roots(poly) if r.is_rational]
        roots = [Fraction(int(sympy.numer(r)), int(sympy.denom(r))) for r in roots]
        roots = [r for r in roots if r >= v]
        if not roots:
            raise ExactUnavailableError(
                f"alpha^-1({v}) is irrational; use float mode or a forward-chain parameter")
        return min(roots)

    def rho_n(self, v, n: int, exact=False):
        """Product of rho over the inverse iterates; rho_0 = 1."""
        rho_hat = self.rho_hat
        out = Fraction(1) if exact else 1.0
        u = Fraction(v) if exact else float(v)
        for _ in range(n):
            u = self._alpha_inverse_exact(u) if exact else self._alpha_inverse_float(u, 1e-12)
            out = out * rho_hat(u)
        return out

    def level_form(self, v, n: int, exact=False, graph=None):
        """The level-n form of the family: rho_n(v) * R^n(E_{alpha^{-n}(v)}).

        Returns (network on level-n vertex ids, LevelGraph).  Nested under
        traces by construction.
        """
        u = self.alpha_inverse(v, n, exact=exact) if n > 0 else (Fraction(v) if exact else float(v))
        scale = self.rho_n(v, n, exact=exact)
        g = graph if graph is not None else build_level(self.structure, n)
        net, g = replicate(self.structure, self.eval(u, exact=exact), n, graph=g)
        return net.scale(scale), g


def _uniform(values, exact, rel):
    if exact:
        return all(c == values[0] for c in values)
    top = max(abs(float(c)) for c in values)
    return all(abs(float(c) - float(values[0])) <= rel * max(top, 1e-300) for c in values)


def _max_c(net):
    return max((abs(float(c)) for _, _, c, _ in net.edges()), default=0.0)
