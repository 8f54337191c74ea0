"""Finite metric spaces from networks and convergence diagnostics.

The resistance metric of a connected network is a genuine metric; the
projection onto the quotient network has a distortion that bounds the
Gromov-Hausdorff distance (d_GH <= dis/2), and an exhaustive correspondence
search gives the exact GH distance for very small spaces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from fractalforms.network import all_pairs_resistance
from fractalforms.shorting import partition, quotient
from fractalforms.structure import build_level, measure_level


class MetricError(ValueError):
    pass


class FiniteMetricSpace:
    """Point list plus a validated distance matrix.

    Distances are Fractions (exact) or floats; ``provenance`` records where
    the metric came from (e.g. which network's resistance metric).
    """

    def __init__(self, points, dist, exact=True, provenance="", validate=True):
        self.points = tuple(points)
        self.index = {p: i for i, p in enumerate(self.points)}
        self.exact = exact
        self.provenance = provenance
        n = len(self.points)
        if exact:
            self.dist = [[Fraction(dist[i][j]) for j in range(n)] for i in range(n)]
        else:
            self.dist = np.asarray(dist, dtype=float)
        if validate:
            self.validate()

    @property
    def n(self):
        return len(self.points)

    def d(self, x, y):
        return self.dist[self.index[x]][self.index[y]]

    def diameter(self):
        return max(self.dist[i][j] for i in range(self.n) for j in range(self.n))

    def validate(self):
        n = self.n
        tol = 0 if self.exact else 1e-9
        for i in range(n):
            if self.dist[i][i] != 0:
                raise MetricError(f"d(x,x) != 0 at {self.points[i]!r}")
            for j in range(i + 1, n):
                dij = self.dist[i][j]
                if abs(dij - self.dist[j][i]) > tol:
                    raise MetricError("distance matrix is not symmetric")
                if not dij > 0:
                    raise MetricError(f"zero distance between distinct points {self.points[i]!r}, {self.points[j]!r}")
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    if self.dist[i][j] > self.dist[i][k] + self.dist[k][j] + tol:
                        raise MetricError(
                            f"triangle inequality fails on ({self.points[i]!r}, "
                            f"{self.points[j]!r}, {self.points[k]!r})")
        return self

    def restrict(self, points):
        ids = [self.index[p] for p in points]
        if self.exact:
            sub = [[self.dist[i][j] for j in ids] for i in ids]
        else:
            sub = self.dist[np.ix_(ids, ids)]
        return FiniteMetricSpace(points, sub, exact=self.exact,
                                 provenance=self.provenance + "|restricted", validate=False)


def resistance_space(net, validate=True) -> FiniteMetricSpace:
    """All-pairs effective-resistance metric of a connected network."""
    if not net.is_connected():
        raise MetricError("resistance metric needs a connected network")
    R = all_pairs_resistance(net)
    return FiniteMetricSpace(net.vertices, R, exact=net.exact,
                             provenance="resistance", validate=validate)


def distortion(M1: FiniteMetricSpace, M2: FiniteMetricSpace, f: dict):
    """sup |d1(x,y) - d2(f(x),f(y))| over pairs, for a surjection f."""
    if set(f.keys()) != set(M1.points):
        raise MetricError("map must be defined on all points of the source")
    if set(f.values()) != set(M2.points):
        raise MetricError("map must be surjective onto the target")
    worst = Fraction(0) if (M1.exact and M2.exact) else 0.0
    for i, x in enumerate(M1.points):
        for j in range(i + 1, M1.n):
            y = M1.points[j]
            gap = M1.d(x, y) - M2.d(f[x], f[y])
            if gap < 0:
                gap = -gap
            if gap > worst:
                worst = gap
    return worst


def gh_upper_bound(M1, M2, f):
    return distortion(M1, M2, f) / 2


def gh_exact_small(M1: FiniteMetricSpace, M2: FiniteMetricSpace, max_points=7):
    """Exact Gromov-Hausdorff distance via the correspondence
    characterization: half the minimal distortion over all correspondences.

    Feasibility of a distortion threshold is decided by a covering-clique
    search over the pair-compatibility graph; exhaustive, so capped at
    ``max_points`` points per space.
    """
    if M1.n > max_points or M2.n > max_points:
        raise MetricError(f"gh_exact_small is capped at {max_points} points")
    exact = M1.exact and M2.exact
    n1, n2 = M1.n, M2.n
    d1 = M1.dist
    d2 = M2.dist
    pairs = [(i, j) for i in range(n1) for j in range(n2)]
    np_ = len(pairs)

    def gap(p, q):
        (i, j), (k, l) = pairs[p], pairs[q]
        g = d1[i][k] - d2[j][l]
        return -g if g < 0 else g

    thresholds = sorted({gap(p, q) for p in range(np_) for q in range(p, np_)})

    compat_cache = {}

    def feasible(t):
        compat = compat_cache.get(t)
        if compat is None:
            compat = [[gap(p, q) <= t for q in range(np_)] for p in range(np_)]
            compat_cache[t] = compat

        def options_for(element, chosen):
            side, idx = element
            opts = []
            for p in range(np_):
                if pairs[p][side] != idx:
                    continue
                if all(compat[p][q] for q in chosen):
                    opts.append(p)
            return opts

        def search(chosen, uncovered):
            if not uncovered:
                return True
            best, best_opts = None, None
            for el in uncovered:
                opts = options_for(el, chosen)
                if not opts:
                    return False
                if best_opts is None or len(opts) < len(best_opts):
                    best, best_opts = el, opts
                    if len(opts) == 1:
                        break
            for p in best_opts:
                covered = {e for e in uncovered
                           if (e[0] == 0 and pairs[p][0] == e[1]) or (e[0] == 1 and pairs[p][1] == e[1])}
                if search(chosen + [p], uncovered - covered):
                    return True
            return False

        universe = {(0, i) for i in range(n1)} | {(1, j) for j in range(n2)}
        return search([], universe)

    lo, hi = 0, len(thresholds) - 1
    if not feasible(thresholds[hi]):
        raise MetricError("no feasible correspondence (should not happen)")
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(thresholds[mid]):
            hi = mid
        else:
            lo = mid + 1
    t = thresholds[lo]
    return t / 2 if exact else float(t) / 2.0


# ---------------------------------------------------------------------------
# family-level diagnostics

def projection_map(fam, n, part=None):
    """Vertex id -> class id map of the level-n shorting partition."""
    part = part if part is not None else partition(fam, n)
    return {vid: part.class_of[vid] for vid in range(part.graph.n_vertices)}


def convergence_table(fam, n, v_list):
    """Rows (v, dis p_{v,n}, gh bound) for the projection onto H^n, with a
    terminal (inf, 0, 0) reference row for the limit itself."""
    q = quotient(fam, n, exact=False)
    M2 = resistance_space(q.network, validate=False)
    p = projection_map(fam, n, q.partition)
    rows = []
    for v in sorted(float(v) for v in v_list):
        net, _ = fam.level_form(v, n)
        M1 = resistance_space(net, validate=False)
        f = {vid: p[vid] for vid in range(net.n)}
        dis = distortion(M1, M2, f)
        rows.append((v, dis, dis / 2))
    rows.append((float("inf"), 0.0, 0.0))
    return rows


def distortion_level0(fam, v):
    """Exact distortion of p_{v,0} (rational v)."""
    net = fam.eval(Fraction(v), exact=True)
    M1 = resistance_space(net)
    q = quotient(fam, 0, exact=True)
    M2 = resistance_space(q.network)
    p = projection_map(fam, 0, q.partition)
    # level-0 graph ids coincide with boundary order
    f = {fam.structure.boundary[i]: p[i] for i in range(len(fam.structure.boundary))}
    return distortion(M1, M2, f)


def diameter_report(fam, v, n, probe_points=8):
    """Per-cell resistance diameters at level n against the contraction
    bound (cell conductance scale * rho_n(v))^{-1} * sup-diam.

    sup-diam is the largest level-0 diameter over a probe grid of
    parameters (including the quotient as the v = infinity reference).
    """
    S = fam.structure
    vmin, _ = fam.vmin()
    if not float(v) > float(vmin):
        raise ValueError("diameter report needs v > v_min")
    lo = max(float(vmin) * 1.001, float(vmin) + 1e-6)
    grid = [lo * (1e6 / lo) ** (k / (probe_points - 1)) for k in range(probe_points)]
    sup_diam = 0.0
    for u in grid:
        sup_diam = max(sup_diam, float(resistance_space(fam.eval(u), validate=False).diameter()))
    q0 = quotient(fam, 0, exact=False)
    sup_diam = max(sup_diam, float(resistance_space(q0.network, validate=False).diameter()))

    net, g = fam.level_form(float(v), n)
    M = resistance_space(net, validate=False)
    rho_n = fam.rho_n(float(v), n)
    rows = []
    for k, w in enumerate(g.words):
        scale = 1.0
        for i in w:
            scale *= float(S.conductance_scale[i - 1])
        cell = g.cells[k]
        diam = max(
            (M.dist[a][b] for a in cell for b in cell),
            default=0.0,
        )
        bound = sup_diam / (scale * rho_n)
        rows.append(("".join(map(str, w)) or "-", float(diam), float(bound), diam <= bound * (1 + 1e-9)))
    return rows, sup_diam


def ambient_space(fam, v_list, depth=None):
    """Finite-stage model of the disjoint-union ambient space.

    Stage k uses parameter v_k (sorted input list) and mesh n_k = k; every
    copy is represented at working depth D = max mesh.  Distances follow the
    disjoint-union construction: within-copy resistance metrics,
    d(x, p(x)) = c/(2(k+1)) on the stage-k mesh, and infimum formulas across
    copies.  The result is validated as a metric space.
    """
    vs = sorted(float(v) for v in v_list)
    K = len(vs)
    D = depth if depth is not None else K - 1
    S = fam.structure

    q = quotient(fam, D, exact=False)
    H = resistance_space(q.network, validate=False)
    p = projection_map(fam, D, q.partition)

    # c = sup over stages of dis p_{v,0}
    c = max(float(distortion_level0(fam, Fraction(v).limit_denominator(10 ** 6))) for v in vs)

    spaces = []
    for k, v in enumerate(vs):
        net, g = fam.level_form(v, D)
        Mk = resistance_space(net, validate=False)
        emb = _embedded_ids(fam, min(k, D), D)
        spaces.append((Mk, emb, c / (2 * (k + 1))))

    points = [("H", x) for x in range(H.n)]
    for k in range(K):
        points += [(f"G{k}", x) for x in range(spaces[k][0].n)]
    idx = {pt: i for i, pt in enumerate(points)}
    n_tot = len(points)
    dmat = np.zeros((n_tot, n_tot))

    def set_d(a, b, val):
        dmat[idx[a], idx[b]] = dmat[idx[b], idx[a]] = val

    for x in range(H.n):
        for y in range(H.n):
            set_d(("H", x), ("H", y), H.dist[x][y])
    for k, (Mk, emb, offset) in enumerate(spaces):
        for x in range(Mk.n):
            for y in range(Mk.n):
                set_d((f"G{k}", x), (f"G{k}", y), Mk.dist[x][y])
        for x in range(Mk.n):
            for y in range(H.n):
                best = min(Mk.dist[x][e] + offset + H.dist[p[e]][y] for e in emb)
                set_d((f"G{k}", x), ("H", y), best)
    for k1 in range(K):
        for k2 in range(k1 + 1, K):
            for x in range(spaces[k1][0].n):
                for y in range(spaces[k2][0].n):
                    best = min(
                        dmat[idx[(f"G{k1}", x)], idx[("H", z)]] + dmat[idx[("H", z)], idx[(f"G{k2}", y)]]
                        for z in range(H.n)
                    )
                    set_d((f"G{k1}", x), (f"G{k2}", y), best)
    return FiniteMetricSpace(points, dmat, exact=False, provenance="ambient", validate=True)


def _embedded_ids(fam, m, n):
    from fractalforms.structure import embed_level

    S = fam.structure
    if m == n:
        return list(range(build_level(S, n).n_vertices))
    return list(embed_level(S, m, n))
