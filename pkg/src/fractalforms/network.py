"""Conductance-network algebra.

A network is a finite vertex set with a symmetric nonnegative conductance
matrix (zero row sums are implicit: the Laplacian diagonal is minus the
off-diagonal row sum).  Edges may carry a class label (``"one"`` / ``"vee"``)
identifying the template edge they descend from; labels are structural and
never inferred from numeric values.

The trace of a network onto a vertex subset is computed by star-mesh
elimination of the interior (exactly the Schur complement of the Laplacian),
with min-degree pivoting ordered by vertex id for determinism.  Interior
components with no conductance path to the kept set contribute nothing to
the minimal energy and are dropped.
"""

from __future__ import annotations

import heapq
from fractions import Fraction

import numpy as np

from fractalforms.scalars import INF, SNAP_RELATIVE, close, is_exact


class DegenerateTraceError(ValueError):
    """Raised when interior elimination hits a genuinely singular block."""


class PatternMismatchError(ValueError):
    """Raised when a traced network does not fit a family's one/vee pattern."""


class ConductanceNetwork:
    """Finite weighted graph with optional per-edge class labels.

    Parameters
    ----------
    vertices : sequence of hashables
        Vertex names, order fixes the matrix indexing.
    edges : iterable of (u, w, c) or (u, w, c, label)
        Positive conductances; parallel contributions are summed.
    exact : bool
        Exact-rational scalars (Fractions) vs floats.
    """

    def __init__(self, vertices, edges=(), exact=True):
        self.vertices = tuple(vertices)
        if len(set(self.vertices)) != len(self.vertices):
            raise ValueError("duplicate vertex names")
        self.index = {v: k for k, v in enumerate(self.vertices)}
        self.exact = exact
        self.adj = {k: {} for k in range(len(self.vertices))}
        self.edge_class = {}
        for e in edges:
            u, w, c = e[0], e[1], e[2]
            label = e[3] if len(e) > 3 else None
            self.add_edge(u, w, c, label)

    # -- construction ------------------------------------------------------

    def add_edge(self, u, w, c, label=None):
        i, j = self.index[u], self.index[w]
        if i == j:
            raise ValueError(f"self-loop at {u!r}")
        c = Fraction(c) if self.exact else float(c)
        if c < 0:
            raise ValueError(f"negative conductance on {u!r}-{w!r}")
        if c == 0:
            return
        self.adj[i][j] = self.adj[i].get(j, self._zero()) + c
        self.adj[j][i] = self.adj[i][j]
        key = (min(i, j), max(i, j))
        if label is not None:
            prev = self.edge_class.get(key)
            if prev is not None and prev != label:
                raise ValueError(f"conflicting class labels on edge {u!r}-{w!r}: {prev} vs {label}")
            self.edge_class[key] = label

    def _zero(self):
        return Fraction(0) if self.exact else 0.0

    def copy(self):
        out = ConductanceNetwork(self.vertices, exact=self.exact)
        out.adj = {i: dict(nb) for i, nb in self.adj.items()}
        out.edge_class = dict(self.edge_class)
        return out

    def relabel(self, names):
        if len(names) != len(self.vertices):
            raise ValueError("relabel needs one name per vertex")
        out = ConductanceNetwork(names, exact=self.exact)
        out.adj = {i: dict(nb) for i, nb in self.adj.items()}
        out.edge_class = dict(self.edge_class)
        return out

    # -- inspection --------------------------------------------------------

    @property
    def n(self):
        return len(self.vertices)

    def edges(self):
        """Sorted (u, w, conductance, label) with index(u) < index(w)."""
        for i in sorted(self.adj):
            for j in sorted(self.adj[i]):
                if i < j:
                    yield (self.vertices[i], self.vertices[j], self.adj[i][j],
                           self.edge_class.get((i, j)))

    def conductance(self, u, w):
        i, j = self.index[u], self.index[w]
        return self.adj[i].get(j, self._zero())

    def degree_sum(self, u):
        return sum(self.adj[self.index[u]].values(), self._zero())

    def laplacian(self):
        """Dense matrix A with a(x,x) = -sum of the row (numpy, float)."""
        A = np.zeros((self.n, self.n))
        for i, nb in self.adj.items():
            for j, c in nb.items():
                A[i, j] = float(c)
            A[i, i] = -sum(float(c) for c in nb.values())
        return A

    def components(self):
        seen, comps = set(), []
        for s in range(self.n):
            if s in seen:
                continue
            stack, comp = [s], []
            seen.add(s)
            while stack:
                x = stack.pop()
                comp.append(x)
                for y in self.adj[x]:
                    if y not in seen:
                        seen.add(y)
                        stack.append(y)
            comps.append(sorted(comp))
        return comps

    def is_connected(self):
        return len(self.components()) == 1

    def scale(self, c):
        out = self.copy()
        c = Fraction(c) if self.exact else float(c)
        for i in out.adj:
            for j in out.adj[i]:
                out.adj[i][j] = out.adj[i][j] * c
        return out

    def to_float(self):
        out = ConductanceNetwork(self.vertices, exact=False)
        out.adj = {i: {j: float(c) for j, c in nb.items()} for i, nb in self.adj.items()}
        out.edge_class = dict(self.edge_class)
        return out

    def equal(self, other, rel=0.0):
        """Entrywise equality; rel > 0 allows relative float deviation."""
        if set(self.vertices) != set(other.vertices):
            return False
        for u in self.vertices:
            for w in self.vertices:
                if u == w:
                    continue
                a, b = self.conductance(u, w), other.conductance(u, w)
                if rel == 0.0:
                    if a != b:
                        return False
                elif not close(a, b, rel=rel):
                    return False
        return True

    def max_deviation(self, other):
        dev = 0.0
        for u in self.vertices:
            for w in other.vertices:
                if u == w:
                    continue
                a = float(self.conductance(u, w))
                b = float(other.conductance(u, w))
                scale = max(abs(a), abs(b), 1e-300)
                dev = max(dev, abs(a - b) / scale)
        return dev

    def __repr__(self):
        kind = "exact" if self.exact else "float"
        return f"<ConductanceNetwork {self.n} vertices, {sum(len(v) for v in self.adj.values()) // 2} edges, {kind}>"


def energy(net: ConductanceNetwork, f):
    """Dirichlet energy E(f,f) = 1/2 sum a(x,y)(f(x)-f(y))^2."""
    vals = _as_vector(net, f)
    total = Fraction(0) if net.exact else 0.0
    for i, nb in net.adj.items():
        for j, c in nb.items():
            if i < j:
                d = vals[i] - vals[j]
                total += c * d * d
    return total


def _as_vector(net, f):
    if isinstance(f, dict):
        return [f[v] for v in net.vertices]
    vals = list(f)
    if len(vals) != net.n:
        raise ValueError("function must be defined on every vertex")
    return vals


def trace(net: ConductanceNetwork, keep, snap=True) -> ConductanceNetwork:
    """Trace (Schur complement) of the network onto ``keep``.

    Interior vertices unreachable from ``keep`` are dropped: the minimizing
    extension is constant there so they never contribute energy (the
    minimizer is non-unique, the traced form is still well-defined).
    """
    keep = list(keep)
    for v in keep:
        if v not in net.index:
            raise ValueError(f"trace target {v!r} is not a vertex")
    keep_pos = [net.index[v] for v in keep]
    keep_set = set(keep_pos)
    if len(keep_set) != len(keep_pos):
        raise ValueError("duplicate vertices in trace target")

    adj = {i: dict(nb) for i, nb in net.adj.items()}

    # reachability from the kept set over positive edges
    reach = set(keep_pos)
    stack = list(keep_pos)
    while stack:
        x = stack.pop()
        for y in adj[x]:
            if y not in reach:
                reach.add(y)
                stack.append(y)
    for x in list(adj):
        if x not in reach:
            for y in adj[x]:
                pass  # neighbours are also unreachable; dropped as a block
            del adj[x]

    # min-degree elimination, deterministic tie-break on vertex id
    interior = [x for x in adj if x not in keep_set]
    heap = [(len(adj[x]), x) for x in interior]
    heapq.heapify(heap)
    eliminated = set()
    while heap:
        deg, x = heapq.heappop(heap)
        if x in eliminated or x not in adj:
            continue
        if deg != len(adj[x]):
            heapq.heappush(heap, (len(adj[x]), x))
            continue
        nbrs = sorted(adj[x].items())
        total = sum(c for _, c in nbrs)
        if total == 0:
            if nbrs:
                raise DegenerateTraceError(f"degenerate trace: zero pivot at vertex {net.vertices[x]!r}")
            del adj[x]
            eliminated.add(x)
            continue
        for a in range(len(nbrs)):
            ya, ca = nbrs[a]
            for b in range(a + 1, len(nbrs)):
                yb, cb = nbrs[b]
                inc = ca * cb / total
                adj[ya][yb] = adj[ya].get(yb, inc * 0) + inc
                adj[yb][ya] = adj[ya][yb]
        for y, _ in nbrs:
            del adj[y][x]
        del adj[x]
        eliminated.add(x)
        for y, _ in nbrs:
            if y not in keep_set:
                heapq.heappush(heap, (len(adj[y]), y))

    out = ConductanceNetwork(keep, exact=net.exact)
    for i in adj:
        for j, c in adj[i].items():
            if i < j and c != 0:
                ki = keep.index(net.vertices[i])
                kj = keep.index(net.vertices[j])
                out.adj[out.index[keep[ki]]][out.index[keep[kj]]] = c
                out.adj[out.index[keep[kj]]][out.index[keep[ki]]] = c
    if snap and not net.exact:
        _snap_small(out)
    return out


def _snap_small(net: ConductanceNetwork):
    biggest = max((c for nb in net.adj.values() for c in nb.values()), default=0.0)
    cut = SNAP_RELATIVE * biggest
    for i in list(net.adj):
        for j in list(net.adj[i]):
            if net.adj[i][j] < cut:
                del net.adj[i][j]


def effective_resistance(net: ConductanceNetwork, x, y):
    """Two-point effective resistance; inf when x and y are disconnected."""
    if x == y:
        raise ValueError("effective resistance needs two distinct vertices")
    t = trace(net, [x, y])
    c = t.conductance(x, y)
    if c == 0:
        return INF
    return (Fraction(1) / c) if net.exact else 1.0 / c


def effective_resistance_sets(net: ConductanceNetwork, H1, H2):
    """Effective resistance between two disjoint vertex sets (sets shorted)."""
    H1, H2 = list(H1), list(H2)
    if not H1 or not H2:
        raise ValueError("both sets must be non-empty")
    if set(H1) & set(H2):
        raise ValueError("sets must be disjoint")
    s, t = object(), object()
    merged = {}
    for v in net.vertices:
        merged[v] = s if v in set(H1) else t if v in set(H2) else v
    verts = [s, t] + [v for v in net.vertices if merged[v] == v]
    out = ConductanceNetwork(verts, exact=net.exact)
    for u, w, c, _ in net.edges():
        a, b = merged[u], merged[w]
        if a == b:
            continue
        i, j = out.index[a], out.index[b]
        out.adj[i][j] = out.adj[i].get(j, out._zero()) + c
        out.adj[j][i] = out.adj[i][j]
    return effective_resistance(out, s, t)


def all_pairs_resistance(net: ConductanceNetwork):
    """Matrix of pairwise effective resistances.

    Exact mode eliminates per pair; float mode goes through the Laplacian
    pseudo-inverse.  Requires a connected network.
    """
    if not net.is_connected():
        raise ValueError("all-pairs resistance needs a connected network")
    n = net.n
    if net.exact:
        R = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i + 1, n):
                r = effective_resistance(net, net.vertices[i], net.vertices[j])
                R[i][j] = R[j][i] = r
        return R
    L = -net.laplacian()
    Lp = np.linalg.pinv(L)
    d = np.diag(Lp)
    R = d[:, None] + d[None, :] - 2 * Lp
    np.fill_diagonal(R, 0.0)
    return R


def replicate(S, net: ConductanceNetwork, n: int, graph=None):
    """Assemble scaled copies of a boundary network over every level-n cell.

    Copy ``w`` is weighted by the product of the per-cell conductance scales
    along ``w``; edge class labels propagate unchanged from the base edge.
    Returns the level-n network (integer vertex ids) and its LevelGraph.
    """
    from fractalforms.structure import build_level

    if set(net.vertices) != set(S.boundary):
        raise ValueError("replicate needs a network on the structure's boundary")
    g = graph if graph is not None else build_level(S, n)
    out = ConductanceNetwork(range(g.n_vertices), exact=net.exact)
    base_edges = list(net.edges())
    one = Fraction(1) if net.exact else 1.0
    for k, w in enumerate(g.words):
        scale = one
        for i in w:
            scale = scale * (S.conductance_scale[i - 1] if net.exact
                             else float(S.conductance_scale[i - 1]))
        cell = g.cells[k]
        for u, z, c, label in base_edges:
            a = cell[S.label_index(u)]
            b = cell[S.label_index(z)]
            if a == b:
                raise ValueError(f"cell {w} collapses template edge {u!r}-{z!r}")
            out.add_edge(a, b, c * scale, label)
    return out, g


def renormalize(S, net: ConductanceNetwork) -> ConductanceNetwork:
    """One renormalization step: replicate to level 1, trace back to F^0."""
    rep, g1 = replicate(S, net, 1)
    traced = trace(rep, g1.boundary_ids)
    return traced.relabel(S.boundary)


def harmonic_extend(net_n: ConductanceNetwork, boundary_ids, f, net_m=None,
                    embedding=None, compat_rel=1e-9):
    """Minimal-energy extension of ``f`` (given on ``boundary_ids``) to all
    vertices of ``net_n``.

    When ``net_m``/``embedding`` are supplied, first checks the trace
    compatibility trace(net_n, V_m) == net_m that makes the extension
    energy-preserving.
    """
    boundary_ids = list(boundary_ids)
    if net_m is not None and embedding is not None:
        tr = trace(net_n, [net_n.vertices[e] for e in embedding])
        rel = 0.0 if (net_n.exact and net_m.exact) else compat_rel
        if not tr.relabel(net_m.vertices).equal(net_m, rel=rel):
            raise ValueError("level networks are not trace-compatible")
    fixed = dict(zip(boundary_ids, _as_vector_on(net_n, boundary_ids, f)))
    interior = [i for i in range(net_n.n) if i not in fixed]
    # harmonic equations: sum_y a(x,y)(g(y) - g(x)) = 0 on the interior
    reach = set(fixed)
    stack = list(fixed)
    while stack:
        x = stack.pop()
        for y in net_n.adj[x]:
            if y not in reach:
                reach.add(y)
                stack.append(y)
    if any(x not in reach for x in interior):
        raise DegenerateTraceError("harmonic extension is non-unique: interior "
                                   "component with no path to the boundary")
    if net_n.exact:
        values = _solve_harmonic_exact(net_n, fixed, interior)
    else:
        values = _solve_harmonic_float(net_n, fixed, interior)
    return values


def _as_vector_on(net, ids, f):
    if isinstance(f, dict):
        return [f[net.vertices[i]] for i in ids]
    vals = list(f)
    if len(vals) != len(ids):
        raise ValueError("boundary data must match the boundary set")
    return vals


def _solve_harmonic_exact(net, fixed, interior):
    pos = {x: k for k, x in enumerate(interior)}
    m = len(interior)
    A = [[Fraction(0)] * m for _ in range(m)]
    rhs = [Fraction(0)] * m
    for x in interior:
        k = pos[x]
        for y, c in net.adj[x].items():
            A[k][k] += c
            if y in pos:
                A[k][pos[y]] -= c
            else:
                rhs[k] += c * fixed[y]
    sol = _gauss_exact(A, rhs)
    values = [None] * net.n
    for x, v in fixed.items():
        values[x] = Fraction(v)
    for x in interior:
        values[x] = sol[pos[x]]
    return values


def _solve_harmonic_float(net, fixed, interior):
    from scipy.sparse import lil_matrix
    from scipy.sparse.linalg import spsolve

    pos = {x: k for k, x in enumerate(interior)}
    m = len(interior)
    values = [None] * net.n
    for x, v in fixed.items():
        values[x] = float(v)
    if m == 0:
        return values
    A = lil_matrix((m, m))
    rhs = np.zeros(m)
    for x in interior:
        k = pos[x]
        diag = 0.0
        for y, c in net.adj[x].items():
            diag += c
            if y in pos:
                A[k, pos[y]] -= c
            else:
                rhs[k] += c * float(fixed[y])
        A[k, k] = diag
    sol = spsolve(A.tocsr(), rhs)
    for x in interior:
        values[x] = float(sol[pos[x]])
    return values


def _gauss_exact(A, rhs):
    """Exact Gaussian elimination with partial (first nonzero) pivoting."""
    m = len(A)
    A = [row[:] for row in A]
    rhs = rhs[:]
    for col in range(m):
        piv = next((r for r in range(col, m) if A[r][col] != 0), None)
        if piv is None:
            raise DegenerateTraceError("singular interior block")
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            rhs[col], rhs[piv] = rhs[piv], rhs[col]
        inv = Fraction(1) / A[col][col]
        for r in range(col + 1, m):
            if A[r][col] == 0:
                continue
            factor = A[r][col] * inv
            for c in range(col, m):
                A[r][c] -= factor * A[col][c]
            rhs[r] -= factor * rhs[col]
    sol = [Fraction(0)] * m
    for r in range(m - 1, -1, -1):
        acc = rhs[r]
        for c in range(r + 1, m):
            acc -= A[r][c] * sol[c]
        sol[r] = acc / A[r][r]
    return sol


def spectrum(net: ConductanceNetwork, measure):
    """Ascending eigenvalues of -L with L f(x) = mu(x)^{-1} sum a(x,y)(f(y)-f(x)).

    Solved as the symmetric problem D^{-1/2} (-A) D^{-1/2}.  The smallest
    eigenvalue is 0 with multiplicity equal to the number of connected
    components.
    """
    from scipy.linalg import eigh

    mu = _measure_vector(net, measure)
    if any(m <= 0 for m in mu):
        raise ValueError("measure must be strictly positive")
    L = -net.laplacian()
    d = 1.0 / np.sqrt(np.array([float(m) for m in mu]))
    B = d[:, None] * L * d[None, :]
    B = 0.5 * (B + B.T)
    vals = eigh(B, eigvals_only=True)
    return np.clip(vals, 0.0, None)


def _measure_vector(net, measure):
    if isinstance(measure, dict):
        return [measure[v] for v in net.vertices]
    if hasattr(measure, "mass"):
        return list(measure.mass)
    vals = list(measure)
    if len(vals) != net.n:
        raise ValueError("measure must be defined on every vertex")
    return vals


def network_csv_rows(net: ConductanceNetwork):
    rows = [("x", "y", "conductance", "class")]
    for u, w, c, label in net.edges():
        rows.append((str(u), str(w), str(c), label or ""))
    return rows
