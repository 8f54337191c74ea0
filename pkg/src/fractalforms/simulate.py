"""Continuous-time random walks on level networks.

The walk associated with a network and a vertex measure jumps from x to y at
rate a(x,y)/mu(x).  Mean hitting times solve the exact linear system

    sum_y a(x,y) (u(y) - u(x)) = -mu(x)   for x outside the target set,

and Monte Carlo sampling uses inverse-CDF exponential clocks on a
counter-based RNG (numpy Philox keyed by (seed, path id)), so every path has
its own substream and results are byte-reproducible and independent of how
paths are batched.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numpy.random import Generator, Philox

from fractalforms.network import ConductanceNetwork, _gauss_exact
from fractalforms.scalars import INF
from fractalforms.shorting import partition, quotient
from fractalforms.structure import build_level, measure_level

RNG_CONTRACT = "philox4x64 key=(seed, path_id), draws consumed as (time, jump) pairs"


@dataclass
class WalkSpec:
    """A walk: float network + measure, start vertex, absorbing target set."""

    network: ConductanceNetwork
    measure: tuple
    start: object
    targets: frozenset
    seed: int = 0
    t_cap: float = float("inf")
    label: str = ""

    def __post_init__(self):
        if not self.targets:
            raise ValueError("target set must be non-empty")
        missing = [t for t in self.targets if t not in self.network.index]
        if missing or self.start not in self.network.index:
            raise ValueError("start/targets must be vertices of the network")


@dataclass(frozen=True)
class HittingSample:
    time: float
    exit_vertex: object
    censored: bool = False


def mean_hitting(net: ConductanceNetwork, measure, start, targets, exact=None):
    """E[T_A] from ``start``; +inf when the target set is unreachable."""
    if exact is None:
        exact = net.exact
    targets = {net.index[t] for t in targets}
    s = net.index[start]
    if s in targets:
        return Fraction(0) if exact else 0.0
    mu = _measure_list(net, measure)
    # restrict to the start's component; unreachable target -> infinity
    comp = {s}
    stack = [s]
    while stack:
        x = stack.pop()
        for y in net.adj[x]:
            if y not in comp:
                comp.add(y)
                stack.append(y)
    if not (comp & targets):
        return INF
    unknown = sorted(comp - targets)
    pos = {x: k for k, x in enumerate(unknown)}
    if exact:
        A = [[Fraction(0)] * len(unknown) for _ in unknown]
        rhs = [Fraction(mu[x]) for x in unknown]
        for x in unknown:
            k = pos[x]
            for y, c in net.adj[x].items():
                A[k][k] += c
                if y in pos:
                    A[k][pos[y]] -= c
        sol = _gauss_exact(A, rhs)
        return sol[pos[s]]
    from scipy.sparse import lil_matrix
    from scipy.sparse.linalg import spsolve

    m = len(unknown)
    A = lil_matrix((m, m))
    rhs = np.array([float(mu[x]) for x in unknown])
    for x in unknown:
        k = pos[x]
        diag = 0.0
        for y, c in net.adj[x].items():
            diag += c
            if y in pos:
                A[k, pos[y]] -= c
        A[k, k] = diag
    sol = spsolve(A.tocsr(), rhs)
    return float(sol[pos[s]])


def _measure_list(net, measure):
    if isinstance(measure, dict):
        return [measure[v] for v in net.vertices]
    if hasattr(measure, "mass"):
        measure = measure.mass
    mu = list(measure)
    if len(mu) != net.n:
        raise ValueError("measure must cover every vertex")
    if any(float(m) <= 0 for m in mu):
        raise ValueError("measure must be strictly positive")
    return mu


class _PathStream:
    """Sequential (time, jump) uniform draws for one path, drawn in blocks."""

    __slots__ = ("gen", "buf", "pos")

    def __init__(self, seed, pid, block=512):
        self.gen = Generator(Philox(key=[seed, pid]))
        self.buf = self.gen.random(block)
        self.pos = 0

    def take_pair(self):
        if self.pos + 2 > len(self.buf):
            self.buf = self.gen.random(1024)
            self.pos = 0
        u1, u2 = self.buf[self.pos], self.buf[self.pos + 1]
        self.pos += 2
        return u1, u2


def sample_hitting(spec: WalkSpec, n_paths: int, block=512):
    """i.i.d. first-hitting samples, one Philox substream per path id."""
    if n_paths < 1:
        raise ValueError("need at least one path")
    net = spec.network
    mu = np.array([float(m) for m in _measure_list(net, spec.measure)])
    n = net.n
    target_mask = np.zeros(n, dtype=bool)
    for t in spec.targets:
        target_mask[net.index[t]] = True
    nbrs, cums, rates = _transition_tables(net, mu)
    start = net.index[spec.start]
    out = []
    for pid in range(n_paths):
        if target_mask[start]:
            out.append(HittingSample(0.0, spec.start, False))
            continue
        stream = _PathStream(spec.seed, pid, block)
        x, t = start, 0.0
        while True:
            u1, u2 = stream.take_pair()
            t += -np.log1p(-u1) / rates[x]
            if t > spec.t_cap:
                out.append(HittingSample(float(spec.t_cap), net.vertices[x], True))
                break
            row = cums[x]
            x = nbrs[x][int(np.searchsorted(row, u2, side="right"))]
            if target_mask[x]:
                out.append(HittingSample(float(t), net.vertices[x], False))
                break
    return out


def sample_hitting_times(spec: WalkSpec, n_paths: int):
    """Vectorized lockstep variant of :func:`sample_hitting`, identical
    samples (same per-path substreams), returning times + censoring flags."""
    net = spec.network
    mu = np.array([float(m) for m in _measure_list(net, spec.measure)])
    n = net.n
    target_mask = np.zeros(n, dtype=bool)
    for t in spec.targets:
        target_mask[net.index[t]] = True
    nbr_pad, cum_pad, rates = _padded_tables(net, mu)
    start = net.index[spec.start]
    times = np.zeros(n_paths)
    exit_v = np.full(n_paths, -1, dtype=int)
    censored = np.zeros(n_paths, dtype=bool)
    if target_mask[start]:
        exit_v[:] = start
        return times, exit_v, censored

    block = 512
    ids = np.arange(n_paths)
    state = np.full(n_paths, start, dtype=int)
    t_acc = np.zeros(n_paths)
    bufs = np.empty((n_paths, block))
    gens = [Generator(Philox(key=[spec.seed, int(pid)])) for pid in ids]
    for k, g in enumerate(gens):
        bufs[k] = g.random(block)
    pose = np.zeros(n_paths, dtype=int)
    active = np.arange(n_paths)
    while active.size:
        need = pose[active] + 2 > block
        for k in active[need]:
            bufs[k] = gens[k].random(block)
            pose[k] = 0
        u1 = bufs[active, pose[active]]
        u2 = bufs[active, pose[active] + 1]
        pose[active] += 2
        st = state[active]
        t_acc[active] += -np.log1p(-u1) / rates[st]
        over = t_acc[active] > spec.t_cap
        rows = cum_pad[st]
        choice = (u2[:, None] >= rows).sum(axis=1)
        nxt = nbr_pad[st, choice]
        state[active] = nxt
        hit = target_mask[nxt]
        done = hit | over
        if done.any():
            fin = active[done]
            times[fin] = np.where(over[done], spec.t_cap, t_acc[fin])
            censored[fin] = over[done]
            exit_v[fin] = state[fin]
            active = active[~done]
    return times, exit_v, censored


def _transition_tables(net, mu):
    nbrs, cums, rates = [], [], np.zeros(net.n)
    for x in range(net.n):
        items = sorted(net.adj[x].items())
        ns = np.array([y for y, _ in items], dtype=int)
        cs = np.array([float(c) for _, c in items])
        tot = cs.sum()
        if tot <= 0:
            ns, cs, tot = np.array([x]), np.array([1.0]), 1.0
        nbrs.append(ns)
        cums.append(np.cumsum(cs / tot)[:-1])  # searchsorted boundaries
        rates[x] = tot / mu[x]
    return nbrs, cums, rates


def _padded_tables(net, mu):
    nbrs, cums, rates = _transition_tables(net, mu)
    deg = max(len(ns) for ns in nbrs)
    nbr_pad = np.zeros((net.n, deg), dtype=int)
    cum_pad = np.ones((net.n, deg - 1)) if deg > 1 else np.ones((net.n, 0))
    for x in range(net.n):
        k = len(nbrs[x])
        nbr_pad[x, :k] = nbrs[x]
        nbr_pad[x, k:] = nbrs[x][-1] if k else x
        cum_pad[x, : k - 1] = cums[x]
    return nbr_pad, cum_pad, rates


def hitting_samples_csv_rows(samples):
    rows = [("path", "T", "exit_vertex", "censored")]
    for k, s in enumerate(samples):
        rows.append((k, repr(s.time), s.exit_vertex, int(s.censored)))
    return rows


# ---------------------------------------------------------------------------
# crossing-time machinery for SG-like families

def crossing_data(fam, start_label=None, target_label=None):
    """Start vertex and target-line seed for crossing experiments.

    With no explicit labels this requires an SG-like family (3 boundary
    points, one vee edge): the start is the boundary point off the vee edge
    and the target line is the vee edge's shorting class.  Explicit labels
    select any other crossing (exploratory mode).
    """
    S = fam.structure
    if start_label is not None and target_label is not None:
        if start_label not in S.boundary or target_label not in S.boundary:
            raise ValueError("crossing labels must be boundary labels")
        return start_label, (target_label,)
    vees = fam.vee_edges()
    if S.b != 3 or len(vees) != 1:
        raise ValueError("crossing experiment needs an SG-like family "
                         "(3 boundary points, one vee edge); supply explicit start/target labels instead")
    base = set(vees[0])
    top = next(u for u in S.boundary if u not in base)
    return top, tuple(sorted(base))


def base_line_targets(fam, m, part=None, graph=None, seed_label=None):
    """Level-m vertex ids of the shorting class through a boundary label
    (default: the vee line of an SG-like family)."""
    S = fam.structure
    part = part if part is not None else partition(fam, m, graph=graph)
    if seed_label is None:
        top, base = crossing_data(fam)
        u = base[0]
    else:
        u = seed_label
    anchor = S.anchors[S.label_index(u)]
    base_vid = part.graph.address[((anchor,) * m, S.label_index(u))]
    cid = part.class_of[base_vid]
    return set(part.classes[cid]), part


def crossing_mean(fam, v, m, exact=False, start_label=None, target_label=None):
    """Mean crossing time E_top[T_base] of the level-m walk at parameter v."""
    S = fam.structure
    net, g = fam.level_form(v, m, exact=exact)
    mu = measure_level(S, m, g)
    top, base = crossing_data(fam, start_label, target_label)
    targets, part = base_line_targets(fam, m, graph=g, seed_label=base[0])
    start = g.address[((S.anchors[S.label_index(top)],) * m, S.label_index(top))]
    return mean_hitting(net, mu, start, targets, exact=exact)


def quotient_crossing_mean(fam, m, exact=False, start_label=None, target_label=None):
    """Mean crossing of the quotient walk on (H^m, nu_m), top class to base class."""
    q = quotient(fam, m, exact=exact)
    top, base = crossing_data(fam, start_label, target_label)
    S = fam.structure
    g = q.partition.graph
    t_vid = g.address[((S.anchors[S.label_index(top)],) * m, S.label_index(top))]
    b_vid = g.address[((S.anchors[S.label_index(base[0])],) * m, S.label_index(base[0]))]
    start = q.partition.class_of[t_vid]
    target = q.partition.class_of[b_vid]
    mu = [float(x) for x in q.measure] if not exact else list(q.measure)
    return mean_hitting(q.network, mu, start, {target}, exact=exact)


def top_cell_restriction(fam, v, n, m, exact=True):
    """The level-(m+n) walk data restricted to the scale-n top cell.

    Builds only the cell contributions whose word starts with n copies of
    the top cell, plus the measure collected from those words; the walk
    started at the apex cannot leave this cell before hitting its base line.

    Returns (network, start id, target ids, level graph).
    """
    S = fam.structure
    top, base = crossing_data(fam)
    top_cell = S.anchors[S.label_index(top)]
    total = m + n
    g = build_level(S, total)
    u_par = fam.alpha_inverse(v, total, exact=exact) if total else v
    scale = fam.rho_n(v, total, exact=exact)
    base_net = fam.eval(u_par, exact=exact)
    prefix = (top_cell,) * n
    net = ConductanceNetwork(range(g.n_vertices), exact=exact)
    mass = {}
    bmass = Fraction(S.b)
    for k, w in enumerate(g.words):
        if w[:n] != prefix:
            continue
        cell_scale = Fraction(1) if exact else 1.0
        theta_w = Fraction(1)
        for i in w:
            cell_scale = cell_scale * (S.conductance_scale[i - 1] if exact else float(S.conductance_scale[i - 1]))
            theta_w *= S.theta[i - 1]
        cell = g.cells[k]
        for uu, zz, c, label in base_net.edges():
            a, b = cell[S.label_index(uu)], cell[S.label_index(zz)]
            net.add_edge(a, b, c * cell_scale * scale, label)
        for vid in cell:
            mass[vid] = mass.get(vid, Fraction(0)) + theta_w / bmass
    start = g.address[((top_cell,) * total, S.label_index(top))]
    # targets: the base line of the scale-n top cell = top-prefixed images of
    # the level-m base line
    targets_m, part_m = base_line_targets(fam, m)
    g_m = part_m.graph
    targets = set()
    for (w, u), vid in g_m.address.items():
        if vid in targets_m:
            targets.add(g.address[(prefix + w, u)])
    keep = sorted(mass)
    sub = ConductanceNetwork(keep, exact=exact)
    for x in keep:
        for y, c in net.adj[x].items():
            if x < y:
                sub.add_edge(x, y, c)
    mu = [mass[x] for x in keep]
    return sub, start, targets, mu


def crossing_walk_spec(fam, v, m, seed=0, t_cap=float("inf"),
                       start_label=None, target_label=None) -> WalkSpec:
    """WalkSpec for the level-m crossing (top vertex to base line) at v."""
    S = fam.structure
    net, g = fam.level_form(float(v), m)
    mu = [float(x) for x in measure_level(S, m, g).mass]
    top, base = crossing_data(fam, start_label, target_label)
    targets, _ = base_line_targets(fam, m, graph=g, seed_label=base[0])
    start = g.address[((S.anchors[S.label_index(top)],) * m, S.label_index(top))]
    return WalkSpec(network=net, measure=tuple(mu), start=start,
                    targets=frozenset(targets), seed=seed, t_cap=t_cap,
                    label=f"G^(v={float(v):g},{m})")


def quotient_walk_spec(fam, m, seed=0, t_cap=float("inf"),
                       start_label=None, target_label=None) -> WalkSpec:
    """WalkSpec for the quotient crossing on (H^m, nu_m)."""
    S = fam.structure
    q = quotient(fam, m, exact=False)
    top, base = crossing_data(fam, start_label, target_label)
    g = q.partition.graph
    t_vid = g.address[((S.anchors[S.label_index(top)],) * m, S.label_index(top))]
    b_vid = g.address[((S.anchors[S.label_index(base[0])],) * m, S.label_index(base[0]))]
    return WalkSpec(network=q.network,
                    measure=tuple(float(x) for x in q.measure),
                    start=q.partition.class_of[t_vid],
                    targets=frozenset({q.partition.class_of[b_vid]}),
                    seed=seed, t_cap=t_cap, label=f"H^{m}")


def time_change_check(fam, w0, n, m):
    """Exact finite shadow of the small-scale time change.

    With v on the forward chain v = alpha^{m+n}(w0) (so every inverse
    iterate is rational), the level-m mean crossing at alpha^{-n}(v) must
    equal (1/theta_top)^n * rho_n(v) times the top-cell-restricted
    level-(m+n) mean crossing at v, exactly.

    Returns (lhs, rhs, factor, ok).
    """
    S = fam.structure
    w0 = Fraction(w0)
    v = fam.forward_parameter(w0, m + n)
    u_n = fam.forward_parameter(w0, m)  # = alpha^{-n}(v)
    assert fam.alpha_inverse(v, n, exact=True) == u_n
    top, _ = crossing_data(fam)
    theta_top = S.theta[S.anchors[S.label_index(top)] - 1]
    lhs = crossing_mean(fam, u_n, m, exact=True)
    sub, start, targets, mu = top_cell_restriction(fam, v, n, m, exact=True)
    restricted = mean_hitting(sub, dict(zip(sub.vertices, mu)), start, targets & set(sub.vertices), exact=True)
    factor = (Fraction(1) / theta_top) ** n * fam.rho_n(v, n, exact=True)
    rhs = factor * restricted
    return lhs, rhs, factor, lhs == rhs


@dataclass
class UvRow:
    n: int
    parameter: float
    level_mean: float
    rescaled: float
    ratio: float | None


@dataclass
class UvTable:
    rows: list
    quotient_mean: float
    target: float
    quotient_levels: list = field(default_factory=list)

    def csv_rows(self):
        out = [("n", "alpha_inv_n_v", "E_top_T_base", "t_n", "ratio_t_n_over_t_n1", "target_3rhoG")]
        for r in self.rows:
            out.append((r.n, repr(r.parameter), repr(r.level_mean), repr(r.rescaled),
                        "" if r.ratio is None else repr(r.ratio), repr(self.target)))
        return out


def uv_scaling_experiment(fam, v, n_max, m, start_label=None, target_label=None) -> UvTable:
    """Ultraviolet crossing-time scaling.

    For each n, the crossing time of the scale-n top cell (computed through
    the level-m solve at alpha^{-n}(v) and the exact time change) is
    t_n = theta_top^n rho_n(v)^{-1} E_m(alpha^{-n}(v)); the ratios
    t_n/t_{n+1} converge to (1/theta_top) * rho_G.
    """
    S = fam.structure
    rho_G, _ = fam.limit_constants()
    top, _ = crossing_data(fam, start_label, target_label)
    theta_top = float(S.theta[S.anchors[S.label_index(top)] - 1])
    target = float(rho_G) / theta_top
    v = float(v)
    means, params = [], []
    for n in range(n_max + 1):
        u = fam.alpha_inverse(v, n) if n else v
        params.append(u)
        means.append(crossing_mean(fam, u, m, start_label=start_label, target_label=target_label))
    rescaled = []
    for n in range(n_max + 1):
        rescaled.append(theta_top ** n / fam.rho_n(v, n) * means[n])
    rows = []
    for n in range(n_max + 1):
        ratio = rescaled[n] / rescaled[n + 1] if n + 1 <= n_max else None
        rows.append(UvRow(n=n, parameter=params[n], level_mean=means[n],
                          rescaled=rescaled[n], ratio=ratio))
    q_mean = quotient_crossing_mean(fam, m, start_label=start_label, target_label=target_label)
    return UvTable(rows=rows, quotient_mean=q_mean, target=target)


def quotient_level_ratios(fam, max_level):
    """Per-level crossing ratio on the quotient tower.

    ratio(level) = t_*(level-1) / (top-cell crossing inside H^level); the
    self-similar fixed point makes this exactly (1/theta_top) * rho_G, and the
    H^level data here comes from the original structure's partition, so the
    identity genuinely tests the quotient pipeline.
    """
    S = fam.structure
    top, base = crossing_data(fam)
    top_cell = S.anchors[S.label_index(top)]
    rows = []
    whole = {lev: quotient_crossing_mean(fam, lev) for lev in range(max_level + 1)}
    for lev in range(1, max_level + 1):
        q = quotient(fam, lev, exact=False)
        part, g = q.partition, q.partition.graph
        rho_G, _ = fam.limit_constants()
        # rebuild only the top-cell contributions of H^lev
        one = [(S.label_index(u), S.label_index(w)) for u, w in fam.one_edges()]
        net = ConductanceNetwork(range(part.n_classes), exact=False)
        mass = {}
        for k, w in enumerate(g.words):
            if w[0] != top_cell:
                continue
            scale = 1.0
            theta_w = Fraction(1)
            for i in w:
                scale *= float(S.conductance_scale[i - 1])
                theta_w *= S.theta[i - 1]
            cell = g.cells[k]
            for ui, wi in one:
                a, b = part.class_of[cell[ui]], part.class_of[cell[wi]]
                if a != b:
                    net.add_edge(a, b, scale * float(rho_G) ** lev)
            for vid in cell:
                cid = part.class_of[vid]
                mass[cid] = mass.get(cid, Fraction(0)) + theta_w / S.b
        start = part.class_of[g.address[((top_cell,) * lev, S.label_index(top))]]
        target_cid = part.class_of[g.address[((top_cell,) + (S.anchors[S.label_index(base[0])],) * (lev - 1),
                                              S.label_index(base[0]))]]
        keep = sorted(mass)
        sub = ConductanceNetwork(keep, exact=False)
        for x in keep:
            for y, c in net.adj[x].items():
                if x < y and y in mass:
                    sub.add_edge(x, y, c)
        mu = {x: float(mass[x]) for x in keep}
        cell_mean = mean_hitting(sub, mu, start, {target_cid}, exact=False)
        rows.append((lev, whole[lev - 1], cell_mean, whole[lev - 1] / cell_mean))
    return rows


def rescaled_survival(spec: WalkSpec):
    """S(t) = P(T/E[T] > t) of the first-hitting law, by phase-type spectral
    decomposition of the generator restricted to the transient states."""
    from scipy.linalg import eig

    net = spec.network
    mu = _measure_list(net, spec.measure)
    targets = spec.targets
    trans = [i for i in range(net.n) if net.vertices[i] not in targets]
    pos = {x: k for k, x in enumerate(trans)}
    Q = np.zeros((len(trans), len(trans)))
    for x in trans:
        for y, c in net.adj[x].items():
            Q[pos[x], pos[x]] -= c / float(mu[x])
            if y in pos:
                Q[pos[x], pos[y]] += c / float(mu[x])
    s = pos[net.index[spec.start]]
    w, V = eig(Q)
    coef = V[s, :] * (np.linalg.inv(V) @ np.ones(len(trans)))
    mean = mean_hitting(net, spec.measure, spec.start, spec.targets, exact=False)

    def survival(ts):
        ts = np.asarray(ts, dtype=float)
        return np.clip(np.real(np.exp(np.outer(ts * mean, w)) @ coef), 0.0, 1.0)

    return survival


def exact_law_ks(spec_a: WalkSpec, spec_b: WalkSpec, t_max=8.0, n_grid=3000):
    """Deterministic KS distance between the mean-rescaled hitting laws,
    computed from the exact phase-type distributions (no sampling)."""
    Sa, Sb = rescaled_survival(spec_a), rescaled_survival(spec_b)
    ts = np.linspace(t_max / n_grid, t_max, n_grid)
    return float(np.max(np.abs(Sa(ts) - Sb(ts))))


def law_comparison(spec_a: WalkSpec, spec_b: WalkSpec, n_paths: int,
                   mean_a=None, mean_b=None):
    """Two-sample KS statistic between mean-rescaled hitting laws."""
    from scipy.stats import ks_2samp

    ta, _, ca = sample_hitting_times(spec_a, n_paths)
    tb, _, cb = sample_hitting_times(spec_b, n_paths)
    if ca.any() or cb.any():
        raise ValueError("censored samples cannot enter the law comparison")
    ma = mean_a if mean_a is not None else mean_hitting(spec_a.network, spec_a.measure,
                                                        spec_a.start, spec_a.targets, exact=False)
    mb = mean_b if mean_b is not None else mean_hitting(spec_b.network, spec_b.measure,
                                                        spec_b.start, spec_b.targets, exact=False)
    stat = ks_2samp(ta / ma, tb / mb).statistic
    band95 = 1.36 * np.sqrt((len(ta) + len(tb)) / (len(ta) * len(tb)))
    return float(stat), float(band95)


@dataclass
class SpectralDimensionFit:
    d_s: float
    slope: float
    residual: float
    n_eigenvalues: int
    window: tuple


def spectral_dimension_estimate(net, measure, min_eigs=50, edge_trim=0.75,
                                low_trim=0.25, period_decades=None) -> SpectralDimensionFit:
    """Least-squares slope of log N(lambda) vs log lambda over the bulk of
    the spectrum; d_s = 2 * slope.

    The top ``edge_trim`` decades are discarded (finite-graph spectral edge)
    and the bottom ``low_trim`` (small counts).  For self-similar Laplacians
    the counting function oscillates with log-period log10 of the
    renormalization time factor; passing it as ``period_decades`` snaps the
    window to a whole number of periods, which averages the oscillation out.
    """
    from fractalforms.network import spectrum

    lam = spectrum(net, measure)
    lam = lam[lam > 1e-9 * lam[-1]]
    if len(lam) < min_eigs:
        raise ValueError(f"need at least {min_eigs} eigenvalues, got {len(lam)}")
    logs = np.log10(lam)
    counts = np.log10(np.arange(1, len(lam) + 1))
    hi = logs[-1] - edge_trim
    lo = logs[0] + low_trim
    if period_decades:
        k = int((hi - lo) / period_decades)
        if k >= 1:
            lo = hi - k * period_decades
    sel = (logs >= lo) & (logs <= hi)
    if sel.sum() < 10:
        n = len(lam)
        sel = np.zeros(n, dtype=bool)
        sel[n // 4: (3 * n) // 4] = True
    x, y = logs[sel], counts[sel]
    A = np.vstack([x, np.ones_like(x)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    residual = float(np.sqrt(res[0] / len(x))) if len(res) else 0.0
    return SpectralDimensionFit(
        d_s=2 * slope, slope=slope, residual=residual,
        n_eigenvalues=int(len(lam)), window=(float(x[0]), float(x[-1])),
    )
