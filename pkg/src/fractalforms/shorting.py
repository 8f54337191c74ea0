"""The v -> infinity quotient: equivalence classes, quotient networks, and
the limit self-similar structure.

Two vertices are equivalent when a path of vee-class edges joins them in the
replicated level-n template.  The relation is computed from propagated edge
labels only, never from numeric conductance values, and is independent of n
(level-m classes refine into level-n classes).

The quotient network H^n keeps one vertex per class; each surviving
conductance is the sum of the limiting one-edge values scale_w * rho_G^n.
Vee edges are always internal to a class and vanish in the quotient.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from fractalforms.network import ConductanceNetwork, renormalize, trace
from fractalforms.structure import (
    SelfSimilarStructure,
    UnionFind,
    build_level,
    embed_level,
    measure_level,
)


class StructuralError(ValueError):
    """The reconstructed limit structure fails its validation pass."""


@dataclass(frozen=True)
class VertexPartition:
    """Equivalence classes of ~ on the level-n vertex set."""

    level: int
    graph: object
    class_of: tuple   # vertex id -> class id
    classes: tuple    # class id -> sorted tuple of member vertex ids

    @property
    def n_classes(self):
        return len(self.classes)

    def same(self, x, y):
        return self.class_of[x] == self.class_of[y]

    def projection(self):
        return dict(enumerate(self.class_of))


def partition(fam, n: int, graph=None) -> VertexPartition:
    """Union-find over the vee-labeled edges of the level-n replication."""
    S = fam.structure
    g = graph if graph is not None else build_level(S, n)
    uf = UnionFind()
    for vid in range(g.n_vertices):
        uf.add(vid)
    vee = [(S.label_index(u), S.label_index(w)) for u, w in fam.vee_edges()]
    for cell in g.cells:
        for ui, wi in vee:
            uf.union(cell[ui], cell[wi])
    groups = uf.classes()
    classes = tuple(tuple(groups[root]) for root in sorted(groups))
    class_of = [None] * g.n_vertices
    for cid, members in enumerate(classes):
        for vid in members:
            class_of[vid] = cid
    return VertexPartition(level=n, graph=g, class_of=tuple(class_of), classes=classes)


def partition_refines(fam, m: int, n: int) -> bool:
    """Level-m classes must map injectively into level-n classes (the
    relation ~ is independent of the level)."""
    pm, pn = partition(fam, m), partition(fam, n)
    emb = embed_level(fam.structure, m, n, pm.graph, pn.graph)
    image = {}
    for cid, members in enumerate(pm.classes):
        targets = {pn.class_of[emb[v]] for v in members}
        if len(targets) != 1:
            return False
        image[cid] = targets.pop()
    return len(set(image.values())) == len(image)


def check_D_injectivity(fam, depth: int = 0):
    """x ~ y iff psi_i(x) ~ psi_i(y); it suffices to test level 0 -> 1, and
    ``depth`` adds belt-and-braces re-checks at deeper levels.

    Returns (ok, witness) where witness is (cell, x_name, y_name) on failure.
    """
    S = fam.structure
    parts = {m: partition(fam, m) for m in range(depth + 2)}
    for m in range(depth + 1):
        pm, pn = parts[m], parts[m + 1]
        gm, gn = pm.graph, pn.graph
        image = {}
        for (w, u), vid in gm.address.items():
            for i in range(1, S.n_cells + 1):
                image.setdefault(i, {})[vid] = gn.address[((i,) + w, u)]
        verts = range(gm.n_vertices)
        for i in range(1, S.n_cells + 1):
            img = image[i]
            for x in verts:
                for y in verts:
                    if y <= x:
                        continue
                    if pm.same(x, y) != pn.same(img[x], img[y]):
                        return False, (i, gm.vertex_name(x), gm.vertex_name(y))
    return True, None


@dataclass(frozen=True)
class QuotientNetwork:
    """H^n: the quotient conductance network with its class measure nu_n."""

    partition: VertexPartition
    network: ConductanceNetwork
    measure: tuple

    @property
    def level(self):
        return self.partition.level


def quotient(fam, n: int, exact=True, graph=None) -> QuotientNetwork:
    """Limit network H^n: vee edges are shorted, each one-edge contributes
    its limiting conductance scale_w * rho_G^n between the incident classes."""
    ok, witness = check_D_injectivity(fam)
    if not ok:
        raise StructuralError(f"family is not D-injective (witness {witness}); quotient refused")
    S = fam.structure
    part = partition(fam, n, graph=graph)
    g = part.graph
    rho_G, _ = fam.limit_constants()
    rho_G = rho_G if exact else float(rho_G)
    level_factor = rho_G ** n
    one = [(S.label_index(u), S.label_index(w)) for u, w in fam.one_edges()]
    vee = [(S.label_index(u), S.label_index(w)) for u, w in fam.vee_edges()]
    net = ConductanceNetwork(range(part.n_classes), exact=exact)
    for k, w in enumerate(g.words):
        scale = Fraction(1) if exact else 1.0
        for i in w:
            scale = scale * (S.conductance_scale[i - 1] if exact else float(S.conductance_scale[i - 1]))
        cell = g.cells[k]
        for ui, wi in vee:
            assert part.same(cell[ui], cell[wi]), "vee edge crosses classes"
        for ui, wi in one:
            a, b = part.class_of[cell[ui]], part.class_of[cell[wi]]
            if a != b:
                net.add_edge(a, b, scale * level_factor)
    if not net.is_connected():
        raise StructuralError(f"quotient network H^{n} is disconnected")
    mu = measure_level(S, n, g)
    nu = [Fraction(0)] * part.n_classes
    for vid, m in enumerate(mu.mass):
        nu[part.class_of[vid]] += m
    assert sum(nu, Fraction(0)) == 1
    return QuotientNetwork(partition=part, network=net, measure=tuple(nu))


def class_embedding(fam, qm: QuotientNetwork, qn: QuotientNetwork) -> tuple:
    """Map of level-m class ids into level-n class ids."""
    S = fam.structure
    emb = embed_level(S, qm.level, qn.level, qm.partition.graph, qn.partition.graph)
    out = []
    for members in qm.partition.classes:
        targets = {qn.partition.class_of[emb[v]] for v in members}
        if len(targets) != 1:
            raise StructuralError("partition refinement failed between levels "
                                  f"{qm.level} and {qn.level}")
        out.append(targets.pop())
    if len(set(out)) != len(out):
        raise StructuralError("class embedding is not injective")
    return tuple(out)


def quotient_trace_check(fam, m: int, n: int, exact=True, rel=1e-9):
    """Trace compatibility of the quotient tower: trace(H^n, F_*^m) == H^m.

    Returns (ok, max relative deviation).
    """
    if not m < n:
        raise ValueError("need m < n")
    qm = quotient(fam, m, exact=exact)
    qn = quotient(fam, n, exact=exact)
    emb = class_embedding(fam, qm, qn)
    traced = trace(qn.network, emb).relabel(range(qm.partition.n_classes))
    if exact:
        return traced.equal(qm.network), 0.0 if traced.equal(qm.network) else traced.max_deviation(qm.network)
    dev = traced.max_deviation(qm.network)
    return dev <= rel, dev


@dataclass(frozen=True)
class LimitStructure:
    """S_*: the quotient self-similar structure with its base form H^0."""

    structure: SelfSimilarStructure
    base_form: ConductanceNetwork
    boundary_classes: tuple   # new label -> tuple of original boundary labels
    checked_depth: int


def limit_structure(fam, check_depth: int = 3) -> LimitStructure:
    """Reconstruct S_* = (F_*, (phi_i)) from the level-0 and level-1
    partitions, then validate that its level graphs are vertex-bijective
    with the partition classes up to ``check_depth``."""
    ok, witness = check_D_injectivity(fam)
    if not ok:
        raise StructuralError(f"family is not D-injective (witness {witness})")
    S = fam.structure
    p0, p1 = partition(fam, 0), partition(fam, 1)
    g0, g1 = p0.graph, p1.graph

    # new boundary: level-0 classes, ordered by their least anchor cell
    members_of = []
    for members in p0.classes:
        labels = tuple(S.boundary[g0.reps[v][1]] for v in members)
        anchor = min(S.anchors[S.label_index(l)] for l in labels)
        members_of.append((anchor, labels))
    members_of.sort()
    new_anchors = tuple(a for a, _ in members_of)
    new_labels = tuple("+".join(labels) for _, labels in members_of)
    class_by_label = {}  # original boundary label -> new label index
    for k, (_, labels) in enumerate(members_of):
        for l in labels:
            class_by_label[l] = k

    # phi_i action on the new boundary, read off from the level-1 partition
    action = {}
    for i in range(1, S.n_cells + 1):
        for k, (_, labels) in enumerate(members_of):
            images = {p1.class_of[g1.address[((i,), S.label_index(l))]] for l in labels}
            if len(images) != 1:
                raise StructuralError(f"phi_{i} is not well-defined on class {new_labels[k]}")
            action[(i, k)] = images.pop()

    groups = {}
    for (i, k), cls in action.items():
        groups.setdefault(cls, []).append((i, k))
    gluing = set()
    for slots in groups.values():
        slots.sort()
        for a in range(len(slots)):
            for b in range(a + 1, len(slots)):
                (i, u), (j, w) = slots[a], slots[b]
                if i == j:
                    raise StructuralError("phi maps two boundary classes of one cell together")
                gluing.add(((i, u), (j, w)))

    limit = SelfSimilarStructure(
        n_cells=S.n_cells,
        boundary=new_labels,
        gluing=frozenset(gluing),
        resistance=S.resistance,
        theta=S.theta,
        conductance_scale=S.conductance_scale,
        anchors=new_anchors,
        name=f"{S.name}_limit",
        family=None,
        base_form=None,
    ).validate()

    # validation: level graphs of S_* must be vertex-bijective with the
    # partition classes of the original structure
    for k in range(check_depth + 1):
        pk = partition(fam, k)
        gk_orig = pk.graph
        gk = build_level(limit, k)
        if gk.n_vertices != pk.n_classes:
            raise StructuralError(
                f"limit structure has {gk.n_vertices} vertices at level {k}, "
                f"but the partition has {pk.n_classes} classes")
        seen = {}
        for (w, y), vid in gk.address.items():
            member = members_of[y][1][0]
            target = pk.class_of[gk_orig.address[(w, S.label_index(member))]]
            if seen.setdefault(vid, target) != target:
                raise StructuralError(f"limit vertex {gk.vertex_name(vid)} maps to two classes")
        if len(set(seen.values())) != pk.n_classes:
            raise StructuralError(f"limit level {k} does not cover all classes")

    q0 = quotient(fam, 0)
    base = q0.network.relabel(new_labels_in_class_order(q0, members_of, new_labels, class_by_label, S))
    base_form_edges = tuple((u, w, c) for u, w, c, _ in base.edges())
    limit = SelfSimilarStructure(
        n_cells=limit.n_cells,
        boundary=limit.boundary,
        gluing=limit.gluing,
        resistance=limit.resistance,
        theta=limit.theta,
        conductance_scale=limit.conductance_scale,
        anchors=limit.anchors,
        name=limit.name,
        family=None,
        base_form=base_form_edges,
    )
    return LimitStructure(
        structure=limit,
        base_form=base,
        boundary_classes=tuple(labels for _, labels in members_of),
        checked_depth=check_depth,
    )


def new_labels_in_class_order(q0, members_of, new_labels, class_by_label, S):
    """Order the new labels to match quotient(0) class ids."""
    names = []
    for members in q0.partition.classes:
        label = S.boundary[q0.partition.graph.reps[members[0]][1]]
        names.append(new_labels[class_by_label[label]])
    return names


@dataclass(frozen=True)
class FixedPointResult:
    ok: bool
    eigenvalue: object
    regular: bool
    irreducible: bool
    renormalized: ConductanceNetwork


def fixed_point_check(fam) -> FixedPointResult:
    """Certify Lambda_*(H^0) = rho_G^{-1} H^0 on the limit structure, plus
    regularity (r_i / rho_G < 1) and irreducibility."""
    lim = limit_structure(fam)
    rho_G, _ = fam.limit_constants()
    H0 = lim.base_form
    lam = renormalize(lim.structure, H0)
    expected = H0.scale(Fraction(1) / rho_G if H0.exact else 1.0 / float(rho_G))
    ok = lam.equal(expected) if H0.exact else lam.max_deviation(expected) <= 1e-9
    regular = all(r / rho_G < 1 for r in lim.structure.resistance)
    irreducible = H0.is_connected()
    return FixedPointResult(
        ok=ok and regular and irreducible,
        eigenvalue=Fraction(1) / rho_G,
        regular=regular,
        irreducible=irreducible,
        renormalized=lam,
    )
