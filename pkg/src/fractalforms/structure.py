"""Combinatorial self-similar structures and their level graphs.

A structure is given purely combinatorially: ``N`` cells, an ordered list of
boundary labels for the level-0 set, and gluing pairs ``(i, u) ~ (j, w)``
identifying boundary images of distinct cells at level 1.  All level-n
objects (vertex sets, cell addressing, approximating measures) are generated
from this data.

Vertices of the level-n graph are equivalence classes of address slots
``(word, boundary label)``; the canonical representative of a class is its
lexicographically least slot, and vertex ids are assigned in sorted order of
representatives, so rebuilding a level always yields identical ids.

Convention: boundary label ``boundary[k]`` is the fixed point of cell
``anchors[k]`` (default: cell ``k+1``).  This anchors the refinement map
``(w, u) -> (w + anchor(u)**k, u)`` used for embedding coarser levels into
finer ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from fractalforms.scalars import ConfigError, parse_rational

Word = tuple  # tuple of 1-based cell indices
Slot = tuple  # (Word, label index)


class UnionFind:
    """Union-find over hashable keys with path compression."""

    def __init__(self):
        self.parent = {}

    def add(self, k):
        if k not in self.parent:
            self.parent[k] = k
        return k

    def find(self, k):
        self.add(k)
        root = k
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[k] != root:
            self.parent[k], k = root, self.parent[k]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # smallest representative wins, for deterministic class names
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra
        return ra

    def classes(self):
        groups = {}
        for k in self.parent:
            groups.setdefault(self.find(k), []).append(k)
        return {root: sorted(members) for root, members in groups.items()}


@dataclass(frozen=True)
class SelfSimilarStructure:
    """Combinatorial description of a generalized p.c.f. self-similar set.

    Parameters
    ----------
    n_cells : int
        Number of contractions N >= 2.
    boundary : tuple[str]
        Ordered labels of the level-0 vertex set.
    gluing : frozenset
        Identification pairs ``((i, u), (j, w))`` with 1-based cell indices
        ``i != j`` and label indices ``u``, ``w``.  Stored closed under the
        equivalence it generates at level 1.
    resistance : tuple[Fraction]
        Per-cell resistance weights r_i (used in regularity checks and
        diameter bounds).
    theta : tuple[Fraction]
        Bernoulli measure weights, positive, summing to 1.
    conductance_scale : tuple[Fraction]
        Per-cell conductance multiplier used by replication; defaults to
        1/r_i.
    anchors : tuple[int]
        anchors[k] = 1-based cell index whose fixed point is boundary[k].
    """

    n_cells: int
    boundary: tuple
    gluing: frozenset
    resistance: tuple
    theta: tuple
    conductance_scale: tuple
    anchors: tuple
    name: str = "structure"
    family: dict | None = field(default=None, compare=False)
    base_form: tuple | None = field(default=None, compare=False)

    @property
    def b(self):
        return len(self.boundary)

    def label_index(self, label) -> int:
        try:
            return self.boundary.index(label)
        except ValueError:
            raise ConfigError(f"unknown boundary label {label!r}") from None

    def validate(self):
        if self.n_cells < 2:
            raise ConfigError("n_cells must be >= 2 (a single cell has no renormalization content)")
        if self.b < 2:
            raise ConfigError("need at least two boundary labels")
        if len(set(self.boundary)) != self.b:
            raise ConfigError("boundary labels must be distinct")
        if len(self.resistance) != self.n_cells or any(r <= 0 for r in self.resistance):
            raise ConfigError("resistance must list one positive rational per cell")
        if len(self.conductance_scale) != self.n_cells or any(g <= 0 for g in self.conductance_scale):
            raise ConfigError("conductance_scale must list one positive rational per cell")
        if len(self.theta) != self.n_cells or any(t <= 0 for t in self.theta):
            raise ConfigError("theta must list one positive rational per cell")
        if sum(self.theta, Fraction(0)) != 1:
            raise ConfigError(f"theta must sum to 1 exactly, got {sum(self.theta, Fraction(0))}")
        if len(self.anchors) != self.b:
            raise ConfigError("anchors must list one cell per boundary label")
        for k, i in enumerate(self.anchors):
            if not 1 <= i <= self.n_cells:
                raise ConfigError(f"anchor {i} of boundary label {self.boundary[k]!r} is not a cell index")
        for (i, u), (j, w) in self.gluing:
            if not (1 <= i <= self.n_cells and 1 <= j <= self.n_cells):
                raise ConfigError(f"gluing references invalid cell: {((i, u), (j, w))}")
            if i == j:
                raise ConfigError(f"gluing must identify distinct cells: {((i, u), (j, w))}")
            if not (0 <= u < self.b and 0 <= w < self.b):
                raise ConfigError(f"gluing references invalid boundary label: {((i, u), (j, w))}")
        # level-1 cell graph must be connected
        uf = UnionFind()
        for i in range(1, self.n_cells + 1):
            uf.add(i)
        for (i, _), (j, _) in self.gluing:
            uf.union(i, j)
        if len(uf.classes()) != 1:
            raise ConfigError("level-1 cell graph is disconnected")
        # the equivalence generated at level 1 must not merge two labels of one cell
        # (that would identify two distinct boundary points of the level-0 set)
        classes = _level1_classes(self)
        for members in classes.values():
            cells = [i for ((i,), _) in members]
            if len(set(cells)) != len(cells):
                raise ConfigError(
                    "gluing identifies two boundary labels within one cell; "
                    f"offending class: {[( (w[0], self.boundary[u])) for (w, u) in members]}"
                )
        return self


def _level1_classes(S: SelfSimilarStructure):
    uf = UnionFind()
    for i in range(1, S.n_cells + 1):
        for u in range(S.b):
            uf.add(((i,), u))
    for (i, u), (j, w) in S.gluing:
        uf.union(((i,), u), ((j,), w))
    return uf.classes()


def _close_gluing(S_raw_pairs, n_cells, b):
    """Close a generator list of gluing pairs under the level-1 equivalence."""
    uf = UnionFind()
    for i in range(1, n_cells + 1):
        for u in range(b):
            uf.add(((i,), u))
    for (i, u), (j, w) in S_raw_pairs:
        uf.union(((i,), u), ((j,), w))
    closed = set()
    for members in uf.classes().values():
        for a in range(len(members)):
            for c in range(a + 1, len(members)):
                (wi, u), (wj, w) = members[a], members[c]
                if wi[0] != wj[0]:
                    closed.add(((wi[0], u), (wj[0], w)))
    return frozenset(closed)


def load_structure(source) -> SelfSimilarStructure:
    """Load and validate a structure config (path, file object, or dict)."""
    if isinstance(source, dict):
        cfg = source
    elif hasattr(source, "read"):
        cfg = json.load(source)
    else:
        with open(source) as fh:
            cfg = json.load(fh)
    return structure_from_config(cfg)


def structure_from_config(cfg: dict) -> SelfSimilarStructure:
    try:
        n_cells = int(cfg["n_cells"])
        boundary = tuple(str(u) for u in cfg["boundary"])
        raw_gluing = cfg["gluing"]
        resistance = tuple(parse_rational(r) for r in cfg["resistance"])
        theta = tuple(parse_rational(t) for t in cfg["theta"])
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc}") from exc
    b = len(boundary)
    label = {u: k for k, u in enumerate(boundary)}

    def lab(u):
        if str(u) not in label:
            raise ConfigError(f"unknown boundary label {u!r} in gluing")
        return label[str(u)]

    pairs = []
    for entry in raw_gluing:
        (i, u), (j, w) = entry
        pairs.append(((int(i), lab(u)), (int(j), lab(w))))
    for (i, u), (j, w) in pairs:
        if not (1 <= i <= n_cells and 1 <= j <= n_cells):
            raise ConfigError(f"gluing references invalid cell index: {[(i, u), (j, w)]}")
    gluing = _close_gluing(pairs, n_cells, b)

    if "conductance_scale" in cfg:
        scale = tuple(parse_rational(g) for g in cfg["conductance_scale"])
    else:
        scale = tuple(Fraction(1) / r for r in resistance)
    if "anchors" in cfg:
        anchors = tuple(int(a) for a in cfg["anchors"])
    else:
        if b > n_cells:
            raise ConfigError("default anchors need len(boundary) <= n_cells; supply 'anchors'")
        anchors = tuple(range(1, b + 1))

    family = None
    if cfg.get("family") is not None:
        family = _parse_family_block(cfg["family"], boundary, label)

    base_form = None
    if cfg.get("base_form") is not None:
        base_form = tuple(
            (str(u), str(w), parse_rational(c)) for u, w, c in cfg["base_form"]
        )

    S = SelfSimilarStructure(
        n_cells=n_cells,
        boundary=boundary,
        gluing=gluing,
        resistance=resistance,
        theta=theta,
        conductance_scale=scale,
        anchors=anchors,
        name=str(cfg.get("name", "structure")),
        family=family,
        base_form=base_form,
    )
    return S.validate()


def _parse_family_block(block: dict, boundary, label) -> dict:
    """Parse the one-parameter family block.

    ``vee`` lists the parameter-v edges.  The template edge set defaults to
    the complete graph on the boundary; an explicit ``template`` list may
    restrict it, with conductances only ``"1"`` or ``"v"``.
    """
    vee = set()
    for u, w in block.get("vee", []):
        eu, ew = str(u), str(w)
        if eu == ew:
            raise ConfigError(f"vee edge endpoints must differ: {u!r}")
        if eu not in label or ew not in label:
            raise ConfigError(f"vee edge {u!r}-{w!r} references unknown labels")
        vee.add(tuple(sorted((eu, ew))))
    if block.get("template") is not None:
        template = {}
        for u, w, c in block["template"]:
            key = tuple(sorted((str(u), str(w))))
            if str(c) not in ("1", "v"):
                raise ConfigError(f"template conductance must be '1' or 'v', got {c!r}")
            template[key] = "vee" if str(c) == "v" else "one"
        for e in vee:
            if template.get(e) != "vee":
                raise ConfigError(f"vee edge {e} missing from explicit template")
        for e, kind in template.items():
            if kind == "vee" and e not in vee:
                vee.add(e)
    else:
        template = {}
        bl = sorted(boundary)
        for a in range(len(bl)):
            for c in range(a + 1, len(bl)):
                key = (bl[a], bl[c])
                template[key] = "vee" if key in vee else "one"
    if not any(kind == "vee" for kind in template.values()):
        raise ConfigError("family must contain at least one edge of conductance v")
    return {"template": template}


def structure_to_config(S: SelfSimilarStructure) -> dict:
    """Inverse of :func:`structure_from_config`, for exporting structures."""
    cfg = {
        "name": S.name,
        "n_cells": S.n_cells,
        "boundary": list(S.boundary),
        "gluing": sorted(
            [[[i, S.boundary[u]], [j, S.boundary[w]]] for (i, u), (j, w) in S.gluing]
        ),
        "resistance": [str(r) for r in S.resistance],
        "theta": [str(t) for t in S.theta],
        "conductance_scale": [str(g) for g in S.conductance_scale],
        "anchors": list(S.anchors),
    }
    if S.family is not None:
        cfg["family"] = {
            "vee": sorted([list(e) for e, kind in S.family["template"].items() if kind == "vee"]),
            "template": sorted(
                [[u, w, "v" if kind == "vee" else "1"] for (u, w), kind in S.family["template"].items()]
            ),
        }
    if S.base_form is not None:
        cfg["base_form"] = [[u, w, str(c)] for u, w, c in S.base_form]
    return cfg


@dataclass(frozen=True)
class LevelGraph:
    """Vertex set of F^n with cell addressing.

    ``address`` maps every slot ``(word, label index)`` to its vertex id;
    ``cells[k]`` lists the b vertex ids of the k-th n-cell (words in
    lexicographic order); ``boundary_ids`` embeds F^0.
    """

    structure: SelfSimilarStructure
    level: int
    reps: tuple
    address: dict
    cells: tuple
    words: tuple
    boundary_ids: tuple

    @property
    def n_vertices(self):
        return len(self.reps)

    def vertex_name(self, vid) -> str:
        w, u = self.reps[vid]
        word = "".join(str(i) for i in w) or "-"
        return f"{word}.{self.structure.boundary[u]}"


def build_level(S: SelfSimilarStructure, n: int) -> LevelGraph:
    """Generate the level-n vertex set of ``S``.

    Identifications are generated by applying every gluing pair inside every
    word prefix, with boundary labels refined along their anchor cells:
    for a prefix ``a`` of length m < n and gluing ``(i,u) ~ (j,w)`` the slots
    ``(a + (i,) + anchor(u)*(n-1-m), u)`` and ``(a + (j,) + anchor(w)*(n-1-m), w)``
    are merged.
    """
    if n < 0:
        raise ValueError("level must be >= 0")
    S.validate()
    N, b = S.n_cells, S.b
    uf = UnionFind()
    words = tuple(product(range(1, N + 1), repeat=n))
    for w in words:
        for u in range(b):
            uf.add((w, u))
    for m in range(n):
        pad = n - 1 - m
        for a in product(range(1, N + 1), repeat=m):
            for (i, u), (j, w) in S.gluing:
                s1 = (a + (i,) + (S.anchors[u],) * pad, u)
                s2 = (a + (j,) + (S.anchors[w],) * pad, w)
                uf.union(s1, s2)
    groups = uf.classes()
    # one word may not appear twice inside a class (two labels of one cell
    # would name the same point twice, breaking the measure sum)
    for members in groups.values():
        ws = [w for (w, _) in members]
        if len(set(ws)) != len(ws):
            raise ConfigError(f"level-{n} identification merges two labels of one cell: {members}")
    reps = tuple(sorted(groups.keys()))
    ids = {rep: k for k, rep in enumerate(reps)}
    address = {}
    for rep, members in groups.items():
        vid = ids[rep]
        for slot in members:
            address[slot] = vid
    cells = tuple(tuple(address[(w, u)] for u in range(b)) for w in words)
    boundary_ids = tuple(address[((S.anchors[u],) * n, u)] for u in range(b))
    return LevelGraph(
        structure=S,
        level=n,
        reps=reps,
        address=address,
        cells=cells,
        words=words,
        boundary_ids=boundary_ids,
    )


@dataclass(frozen=True)
class LevelMeasure:
    """Strictly positive rational masses on the vertices of a level graph."""

    level: int
    mass: tuple

    def total(self):
        return sum(self.mass, Fraction(0))

    def __getitem__(self, vid):
        return self.mass[vid]


def measure_level(S: SelfSimilarStructure, n: int, graph: LevelGraph | None = None) -> LevelMeasure:
    """Approximating measure: each word w charges theta_w / #F^0 to every
    vertex of its cell."""
    g = graph if graph is not None else build_level(S, n)
    b = Fraction(S.b)
    mass = [Fraction(0)] * g.n_vertices
    for k, w in enumerate(g.words):
        theta_w = Fraction(1)
        for i in w:
            theta_w *= S.theta[i - 1]
        share = theta_w / b
        for vid in g.cells[k]:
            mass[vid] += share
    out = LevelMeasure(level=n, mass=tuple(mass))
    assert out.total() == 1
    assert all(m > 0 for m in out.mass)
    return out


def embed_level(S: SelfSimilarStructure, m: int, n: int,
                g_m: LevelGraph | None = None, g_n: LevelGraph | None = None) -> tuple:
    """Injective map of level-m vertex ids into level-n ids (m <= n), via
    anchor refinement of addresses."""
    if m > n:
        raise ValueError("embed_level requires m <= n")
    gm = g_m if g_m is not None else build_level(S, m)
    gn = g_n if g_n is not None else build_level(S, n)
    emb = [None] * gm.n_vertices
    for (w, u), vid in gm.address.items():
        target = gn.address[(w + (S.anchors[u],) * (n - m), u)]
        if emb[vid] is None:
            emb[vid] = target
        elif emb[vid] != target:
            raise AssertionError(f"refinement of level-{m} vertex {vid} is not well-defined")
    if len(set(emb)) != len(emb):
        raise AssertionError("level embedding is not injective")
    return tuple(emb)
