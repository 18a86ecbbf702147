"""Generators for the formula families: clique CNF, block polynomial encoding,
random 3-XOR and its k-partite graph, threshold formulas, the symmetric
template machinery with domain generalization and relativization, and the
brute-force gadget.

Conventions
-----------
Variables are tagged `(kind, *int indices)`; for domain-indexed variables the
domain element is always `tag[1]`.  Vertex-indexed variables use the vertex's
1-based position in the graph's fixed enumeration, which is serialized with
every instance.  Formulas are sets of clauses: duplicates always collapse.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .algebra import (
    Clause,
    Poly,
    PolynomialConstraint,
    Relation,
    VariableSpace,
    VarId,
    indicator_poly,
    parse_var_name,
)


class SymmetryError(ValueError):
    """Raised when a formula fails its domain-symmetry check."""

    def __init__(self, permutation, clause):
        self.permutation = permutation
        self.clause = clause
        super().__init__(
            "formula not symmetric: image of clause [%r] under %r is missing"
            % (clause, permutation)
        )


# ---------------------------------------------------------------------------
# CNF formulas
# ---------------------------------------------------------------------------


def _clause_key(clause: Clause):
    return (
        clause.width,
        tuple((v.sort_key, pol) for v, pol in clause.sorted_literals()),
    )


@dataclass(eq=False)
class CnfFormula:
    clauses: frozenset
    space: VariableSpace
    domain_size: Optional[int] = None
    meta: dict = field(default_factory=dict)

    def __eq__(self, other):
        return (
            isinstance(other, CnfFormula)
            and self.clauses == other.clauses
            and self.domain_size == other.domain_size
        )

    def __len__(self):
        return len(self.clauses)

    def sorted_clauses(self) -> list:
        return sorted(self.clauses, key=_clause_key)

    def variables(self) -> list:
        out = set()
        for c in self.clauses:
            out.update(c.variables())
        return sorted(out)

    @property
    def width(self) -> int:
        return max((c.width for c in self.clauses), default=0)

    @property
    def domain_width(self) -> int:
        return max((c.domain_width for c in self.clauses), default=0)

    def restrict(self, assignment: Mapping[VarId, int]) -> "CnfFormula":
        """Remove satisfied clauses, drop falsified literals from the rest."""
        kept = []
        for c in self.clauses:
            r = c.restrict(assignment)
            if r is not None:
                kept.append(r)
        return CnfFormula(
            frozenset(kept),
            self.space,
            self.domain_size,
            dict(self.meta, restricted=True),
        )

    def satisfied_by(self, assignment: Mapping[VarId, int]) -> bool:
        for c in self.clauses:
            if not any((assignment[v] == 1) == pol for v, pol in c.literals):
                return False
        return True


# ---------------------------------------------------------------------------
# Graphs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Undirected graph with a fixed vertex enumeration and optional partition."""

    vertices: tuple
    edges: frozenset
    partition: Optional[tuple] = None

    def __post_init__(self):
        vset = set(self.vertices)
        if len(vset) != len(self.vertices):
            raise ValueError("duplicate vertex labels")
        for v in self.vertices:
            if not isinstance(v, str) or any(ch.isspace() for ch in v):
                raise ValueError("vertex labels must be strings without whitespace")
        for e in self.edges:
            if len(e) != 2:
                raise ValueError("self-loops and malformed edges are not allowed")
            if not e <= vset:
                raise ValueError("edge %r mentions unknown vertex" % (set(e),))
        if self.partition is not None:
            flat = [v for block in self.partition for v in block]
            if sorted(flat) != sorted(self.vertices):
                raise ValueError("partition blocks must be disjoint and cover V")

    @staticmethod
    def of(vertices: Iterable, edges: Iterable, partition=None) -> "Graph":
        verts = tuple(str(v) for v in vertices)
        es = frozenset(frozenset((str(u), str(v))) for u, v in edges)
        part = (
            tuple(tuple(str(v) for v in block) for block in partition)
            if partition is not None
            else None
        )
        return Graph(verts, es, part)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def position(self, label: str) -> int:
        """1-based position in the fixed enumeration."""
        return self.vertices.index(label) + 1

    def has_edge(self, u: str, v: str) -> bool:
        return frozenset((u, v)) in self.edges

    def block_of(self, label: str) -> int:
        for i, block in enumerate(self.partition, start=1):
            if label in block:
                return i
        raise KeyError(label)

    def to_json(self) -> dict:
        out = {
            "vertices": list(self.vertices),
            "edges": sorted(sorted(e) for e in self.edges),
        }
        if self.partition is not None:
            out["partition"] = [list(b) for b in self.partition]
        return out

    @staticmethod
    def from_json(data: dict) -> "Graph":
        return Graph.of(
            data["vertices"], data.get("edges", []), data.get("partition")
        )


def cycle_graph(n: int) -> Graph:
    verts = ["v%d" % i for i in range(1, n + 1)]
    edges = [(verts[i], verts[(i + 1) % n]) for i in range(n)]
    return Graph.of(verts, edges)


def find_clique(graph: Graph, k: int):
    """Brute-force k-clique search; returns a witness tuple or None."""
    if k == 0:
        return ()
    for combo in itertools.combinations(graph.vertices, k):
        if all(graph.has_edge(u, v) for u, v in itertools.combinations(combo, 2)):
            return combo
    return None


# ---------------------------------------------------------------------------
# Clique formula (3-CNF, domain [k], domain-width 2)
# ---------------------------------------------------------------------------


def gen_clique(graph: Graph, k: int) -> CnfFormula:
    """CNF claiming `graph` has a k-clique.

    Clause groups: edge clauses ~x(i,u) | ~x(i',v) for distinct indices and
    non-adjacent (or identical) vertex pairs, functional clauses per index,
    and the three z-chain groups encoding "some vertex is chosen" per index.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    sp = VariableSpace()
    n = graph.n

    def x(i, j):
        return sp.var("x", i, j, domain=i)

    def z(i, j):
        return sp.var("z", i, j, domain=i)

    clauses = set()
    # edge clauses: non-edges across distinct indices, including u = v
    for i1 in range(1, k + 1):
        for i2 in range(1, k + 1):
            if i1 == i2:
                continue
            for ju in range(1, n + 1):
                for jv in range(ju, n + 1):
                    u, v = graph.vertices[ju - 1], graph.vertices[jv - 1]
                    if ju != jv and graph.has_edge(u, v):
                        continue
                    clauses.add(Clause.of((x(i1, ju), False), (x(i2, jv), False)))
    # functional clauses: at most one vertex per index
    for i in range(1, k + 1):
        for ju in range(1, n + 1):
            for jv in range(ju + 1, n + 1):
                clauses.add(Clause.of((x(i, ju), False), (x(i, jv), False)))
    # z-chains: at least one vertex per index
    for i in range(1, k + 1):
        clauses.add(Clause.of((z(i, 0), True)))
        for j in range(1, n + 1):
            clauses.add(
                Clause.of((z(i, j - 1), False), (x(i, j), True), (z(i, j), True))
            )
        clauses.add(Clause.of((z(i, n), False)))

    return CnfFormula(
        frozenset(clauses),
        sp,
        domain_size=k,
        meta={"family": "clique", "k": k, "graph": graph},
    )


# ---------------------------------------------------------------------------
# Block encoding of k-clique on k-partite graphs
# ---------------------------------------------------------------------------


@dataclass
class BlockSystem:
    """Polynomial constraints encoding a transversal clique in a k-partite graph.

    One x variable per vertex, tagged by (block, vertex position); one block
    equality and one inequality per cross-block non-edge.
    """

    constraints: list
    space: VariableSpace
    graph: Graph
    k: int
    var_of: dict  # vertex label -> VarId

    def __len__(self):
        return len(self.constraints)


def gen_block(graph: Graph, k: int) -> BlockSystem:
    if graph.partition is None:
        raise ValueError("block encoding needs a partitioned graph")
    if len(graph.partition) != k:
        raise ValueError(
            "partition has %d blocks, expected k=%d" % (len(graph.partition), k)
        )
    sp = VariableSpace()
    var_of = {}
    for i, block in enumerate(graph.partition, start=1):
        for v in block:
            var_of[v] = sp.var("xb", i, graph.position(v), domain=i)

    constraints = []
    for i, block in enumerate(graph.partition, start=1):
        total = Poly.zero()
        for v in sorted(block, key=graph.position):
            total = total + Poly.variable(var_of[v])
        constraints.append(PolynomialConstraint(total - Poly.one(), Relation.EQ0))
    for i1, i2 in itertools.combinations(range(1, k + 1), 2):
        for u in sorted(graph.partition[i1 - 1], key=graph.position):
            for v in sorted(graph.partition[i2 - 1], key=graph.position):
                if graph.has_edge(u, v):
                    continue
                poly = Poly.one() - Poly.variable(var_of[u]) - Poly.variable(var_of[v])
                constraints.append(PolynomialConstraint(poly, Relation.GE0))
    return BlockSystem(constraints, sp, graph, k, var_of)


# ---------------------------------------------------------------------------
# Random 3-XOR
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class XorSystem:
    """Linear equations x_i + x_j + x_l = b over F_2, variables in [n]."""

    n: int
    equations: tuple  # of (i, j, l, b) with i < j < l

    def __post_init__(self):
        for i, j, l, b in self.equations:
            if not (1 <= i < j < l <= self.n):
                raise ValueError("bad equation support (%d,%d,%d)" % (i, j, l))
            if b not in (0, 1):
                raise ValueError("bad right-hand side %r" % b)

    @staticmethod
    def of(n: int, equations: Iterable) -> "XorSystem":
        eqs = []
        for i, j, l, b in equations:
            si, sj, sl = sorted((i, j, l))
            eqs.append((si, sj, sl, b))
        return XorSystem(n, tuple(eqs))

    def to_json(self) -> dict:
        return {"n": self.n, "equations": [list(e) for e in self.equations]}

    @staticmethod
    def from_json(data: dict) -> "XorSystem":
        return XorSystem.of(data["n"], [tuple(e) for e in data["equations"]])


def gen_random_3xor(n: int, delta: int = 8, seed: int = 0) -> XorSystem:
    """Sample `delta * n` equations; triples uniform without replacement,
    right-hand sides uniform.  Deterministic given the seed."""
    if n < 3:
        raise ValueError("n must be >= 3")
    rng = np.random.Generator(np.random.PCG64(seed))
    eqs = []
    for _ in range(delta * n):
        triple = rng.choice(n, size=3, replace=False)
        b = int(rng.integers(2))
        i, j, l = sorted(int(t) + 1 for t in triple)
        eqs.append((i, j, l, b))
    return XorSystem(n, tuple(eqs))


@dataclass
class XorEncoding:
    """Polynomial encoding of a 3-XOR system: four EqZero indicator products
    per equation, one for each falsifying assignment of its support."""

    constraints: list
    space: VariableSpace
    system: XorSystem
    var_of: dict  # variable index -> VarId
    # constraint position -> (equation position, falsifying pattern over (i,j,l))
    origin: list


def encode_xor(system: XorSystem) -> XorEncoding:
    sp = VariableSpace()
    var_of = {i: sp.var("x", i) for i in range(1, system.n + 1)}
    constraints = []
    origin = []
    for e_idx, (i, j, l, b) in enumerate(system.equations):
        vars_ = [var_of[i], var_of[j], var_of[l]]
        for bits in itertools.product((0, 1), repeat=3):
            if (bits[0] ^ bits[1] ^ bits[2]) == b:
                continue  # satisfying pattern: not a constraint
            poly = indicator_poly(vars_, bits)
            constraints.append(PolynomialConstraint(poly, Relation.EQ0))
            origin.append((e_idx, bits))
    return XorEncoding(constraints, sp, system, var_of, origin)


def max_satisfiable(system: XorSystem) -> int:
    """Maximum number of simultaneously satisfiable equations, by exhaustive
    sweep over all 2^n assignments (vectorized; n <= 24)."""
    if system.n > 24:
        raise ValueError("exhaustive sweep limited to n <= 24")
    idx = np.arange(1 << system.n, dtype=np.uint32)
    counts = np.zeros(1 << system.n, dtype=np.uint16)
    for i, j, l, b in system.equations:
        parity = ((idx >> (i - 1)) ^ (idx >> (j - 1)) ^ (idx >> (l - 1))) & 1
        counts += (parity == b).astype(np.uint16)
    return int(counts.max())


# ---------------------------------------------------------------------------
# 3-XOR graph
# ---------------------------------------------------------------------------


@dataclass
class XorBlockGraph:
    graph: Graph
    system: XorSystem
    k: int
    block_vars: tuple  # per block, sorted tuple of variable indices
    assignments: dict  # vertex label -> {variable index: bit}


def _violates(assignment: Mapping[int, int], eq) -> bool:
    i, j, l, b = eq
    if i in assignment and j in assignment and l in assignment:
        return (assignment[i] ^ assignment[j] ^ assignment[l]) != b
    return False


def build_xor_graph(system: XorSystem, k: int, keep_violating: bool = False) -> XorBlockGraph:
    """k-partite graph whose blocks are assignments to contiguous equation
    groups; edges join compatible pairs whose union violates no equation.

    Assignments that violate an equation fully contained in their own block
    are excluded unless `keep_violating` is set.
    """
    n_eq = len(system.equations)
    if n_eq % k != 0:
        raise ValueError("k=%d does not divide the equation count %d" % (k, n_eq))
    group = n_eq // k
    block_vars = []
    for i in range(k):
        eqs = system.equations[i * group : (i + 1) * group]
        vs = sorted({v for (a, b_, c, _) in eqs for v in (a, b_, c)})
        if len(vs) > 20:
            raise ValueError("block with %d variables is beyond desk scale" % len(vs))
        block_vars.append(tuple(vs))

    vertices = []
    assignments = {}
    partition = []
    for i in range(k):
        vs = block_vars[i]
        eqs_inside = system.equations[i * group : (i + 1) * group]
        block = []
        for bits in itertools.product((0, 1), repeat=len(vs)):
            assign = dict(zip(vs, bits))
            if not keep_violating and any(_violates(assign, eq) for eq in eqs_inside):
                continue
            label = "b%d:%s" % (i + 1, "".join(str(b) for b in bits))
            vertices.append(label)
            assignments[label] = assign
            block.append(label)
        partition.append(tuple(block))

    edges = set()
    for i1, i2 in itertools.combinations(range(k), 2):
        for u in partition[i1]:
            au = assignments[u]
            for v in partition[i2]:
                av = assignments[v]
                shared = au.keys() & av.keys()
                if any(au[w] != av[w] for w in shared):
                    continue
                union = dict(au)
                union.update(av)
                if any(_violates(union, eq) for eq in system.equations):
                    continue
                edges.add((u, v))
    graph = Graph.of(vertices, edges, partition)
    return XorBlockGraph(graph, system, k, tuple(block_vars), assignments)


# ---------------------------------------------------------------------------
# Threshold formula THR(k, s)
# ---------------------------------------------------------------------------


def threshold_vars(space: VariableSpace, k: int, m: int):
    s = {i: space.var("s", i, domain=i) for i in range(1, m + 1)}
    p = {(j, i): space.var("p", i, j, domain=i) for j in range(1, k + 1) for i in range(1, m + 1)}
    y = {(j, i): space.var("y", j, i) for j in range(1, k + 1) for i in range(0, m + 1)}
    return s, p, y


def gen_threshold(k: int, m: int, space: Optional[VariableSpace] = None) -> CnfFormula:
    """3-CNF forcing at least k of the selectors s_1..s_m to be true, via an
    injective map gadget with variables p and chain variables y."""
    if not (1 <= k <= m):
        raise ValueError("need 1 <= k <= m")
    sp = space if space is not None else VariableSpace()
    s, p, y = threshold_vars(sp, k, m)
    clauses = set()
    for j in range(1, k + 1):
        clauses.add(Clause.of((y[(j, 0)], True)))
        for i in range(1, m + 1):
            clauses.add(
                Clause.of((y[(j, i - 1)], False), (p[(j, i)], True), (y[(j, i)], True))
            )
        # the chain-end group ranges over j in [k]; the source text's [m] is a typo
        clauses.add(Clause.of((y[(j, m)], False)))
    for i in range(1, m + 1):
        for j1, j2 in itertools.combinations(range(1, k + 1), 2):
            clauses.add(Clause.of((p[(j1, i)], False), (p[(j2, i)], False)))
        for j in range(1, k + 1):
            clauses.add(Clause.of((p[(j, i)], False), (s[i], True)))
    return CnfFormula(
        frozenset(clauses),
        sp,
        domain_size=m,
        meta={"family": "threshold", "k": k, "m": m},
    )


def threshold_extension(k: int, m: int, survivors: Sequence[int], space: VariableSpace) -> dict:
    """Canonical satisfying assignment of THR's extension variables given the
    set of true selectors: p maps [k] onto the survivors in increasing order."""
    d = sorted(survivors)
    if len(d) < k:
        raise ValueError("need at least k true selectors")
    s, p, y = threshold_vars(space, k, m)
    out = {}
    targets = {j: d[j - 1] for j in range(1, k + 1)}
    for (j, i), v in p.items():
        out[v] = 1 if targets[j] == i else 0
    for (j, i), v in y.items():
        out[v] = 1 if i < targets[j] else 0
    return out


# ---------------------------------------------------------------------------
# Symmetric formulas, domain generalization, relativization
# ---------------------------------------------------------------------------


def rename_clause(clause: Clause, mapping: Mapping[int, int], space: VariableSpace) -> Clause:
    lits = []
    for v, pol in clause.literals:
        if v.domain_index is None:
            lits.append((space.register(v), pol))
        else:
            if v.tag[1] != v.domain_index:
                raise ValueError("domain-indexed variable %s must carry the "
                                 "domain element as tag[1]" % v)
            new_idx = mapping.get(v.domain_index, v.domain_index)
            lits.append(
                (space.var(v.kind, new_idx, *v.tag[2:], domain=new_idx), pol)
            )
    return Clause(frozenset(lits))


@dataclass
class SymmetricTemplate:
    """Canonical representatives F_eta of a symmetric formula, eta = 0..w.

    F_eta holds the clauses mentioning exactly the domain elements [eta],
    over canonical index sets; together with a domain size these determine
    the generalized formula F[D'].
    """

    subformulas: dict  # eta -> frozenset of Clause over domain [eta]
    domain_width: int
    space: VariableSpace
    meta: dict = field(default_factory=dict)


def symmetric_template(formula: CnfFormula) -> SymmetricTemplate:
    """Decompose a symmetric formula; raises SymmetryError with a witness
    permutation and missing clause if the symmetry check fails."""
    domain = sorted(
        {
            v.domain_index
            for c in formula.clauses
            for v in c.variables()
            if v.domain_index is not None
        }
    )
    clause_set = formula.clauses
    sp = formula.space
    # invariance under transpositions generates the full symmetric group
    for a, b in itertools.combinations(domain, 2):
        perm = {a: b, b: a}
        for c in clause_set:
            if not (c.domain_indices & {a, b}):
                continue
            image = rename_clause(c, perm, sp)
            if image not in clause_set:
                raise SymmetryError(perm, c)

    # canonicalize the domain to [1..m] before cutting representatives
    to_canon = {d: i for i, d in enumerate(domain, start=1)}
    width = max((c.domain_width for c in clause_set), default=0)
    subformulas = {eta: set() for eta in range(width + 1)}
    canon_sets = {
        eta: frozenset(range(1, eta + 1)) for eta in range(width + 1)
    }
    sp2 = VariableSpace()
    for c in clause_set:
        ids = sorted(to_canon[d] for d in c.domain_indices)
        eta = len(ids)
        # order-preserving renaming onto [eta]
        mapping = dict(zip(ids, range(1, eta + 1)))
        full_map = dict(to_canon)
        full_map.update(
            {d: mapping[to_canon[d]] for d in c.domain_indices}
        )
        image = rename_clause(c, {d: mapping[to_canon[d]] for d in c.domain_indices}, sp2)
        assert image.domain_indices <= canon_sets[eta]
        subformulas[eta].add(image)
    return SymmetricTemplate(
        {eta: frozenset(cs) for eta, cs in subformulas.items()},
        width,
        sp2,
        meta=dict(formula.meta),
    )


def generalize_domain(template: SymmetricTemplate, m: int, space: Optional[VariableSpace] = None) -> CnfFormula:
    """Instantiate the template on every eta-subset of [m]."""
    if m < template.domain_width:
        raise ValueError(
            "target domain size %d below domain width %d" % (m, template.domain_width)
        )
    sp = space if space is not None else VariableSpace()
    clauses = set()
    for eta in sorted(template.subformulas):
        sub = template.subformulas[eta]
        if not sub:
            continue
        if eta == 0:
            for c in sub:
                clauses.add(rename_clause(c, {}, sp))
            continue
        for combo in itertools.combinations(range(1, m + 1), eta):
            mapping = dict(zip(range(1, eta + 1), combo))
            for c in sub:
                clauses.add(rename_clause(c, mapping, sp))
    meta = dict(template.meta)
    meta.update({"family": "generalized", "m": m})
    return CnfFormula(frozenset(clauses), sp, domain_size=m, meta=meta)


def relativize(formula: CnfFormula, k: int, m: int) -> CnfFormula:
    """THR(k, s) plus a selectable clause ~s_{i1} | ... | ~s_{i_eta} | C for
    every C in F[m], where the i's are the domain elements C mentions."""
    template = symmetric_template(formula)
    if m < max(k, template.domain_width):
        raise ValueError("m must be at least k and the domain width")
    sp = VariableSpace()
    thr = gen_threshold(k, m, space=sp)
    base = generalize_domain(template, m, space=sp)
    s = {i: sp.var("s", i, domain=i) for i in range(1, m + 1)}
    clauses = set(thr.clauses)
    for c in base.clauses:
        guard = [(s[i], False) for i in sorted(c.domain_indices)]
        clauses.add(Clause(frozenset(set(c.literals) | set(guard))))
    meta = {
        "family": "relativized",
        "k": k,
        "m": m,
        "base_meta": dict(template.meta),
        "base_domain_width": template.domain_width,
    }
    return CnfFormula(frozenset(clauses), sp, domain_size=m, meta=meta)


# ---------------------------------------------------------------------------
# Brute-force gadget
# ---------------------------------------------------------------------------


def gen_bruteforce_gadget(k: int, ms: Sequence[int]) -> CnfFormula:
    """The chain/tuple gadget: per row i a y-chain forcing some x_{i,j} true,
    plus one all-negative tuple clause per element of [m_1] x ... x [m_k]."""
    ms = list(ms)
    if len(ms) != k or any(m < 1 for m in ms):
        raise ValueError("need k row sizes, all >= 1")
    sp = VariableSpace()

    def x(i, j):
        return sp.var("x", i, j)

    def y(i, j):
        return sp.var("y", i, j)

    clauses = set()
    for i in range(1, k + 1):
        clauses.add(Clause.of((y(i, 0), True)))
        for j in range(1, ms[i - 1] + 1):
            clauses.add(Clause.of((y(i, j - 1), False), (x(i, j), True), (y(i, j), True)))
        clauses.add(Clause.of((y(i, ms[i - 1]), False)))
    for tup in itertools.product(*(range(1, m + 1) for m in ms)):
        clauses.add(Clause(frozenset((x(i + 1, j), False) for i, j in enumerate(tup))))
    return CnfFormula(
        frozenset(clauses), sp, meta={"family": "bruteforce", "k": k, "ms": ms}
    )


def bruteforce_axiom_count(k: int, ms: Sequence[int]) -> int:
    prod = 1
    for m in ms:
        prod *= m
    return 2 * k + sum(ms) + prod


# ---------------------------------------------------------------------------
# DIMACS serialization
# ---------------------------------------------------------------------------


def write_dimacs(formula: CnfFormula) -> str:
    """DIMACS CNF with a comment header recording generator metadata and a
    variable-name map `c varmap <id> <name> <domain>`."""
    variables = list(formula.space)
    used = {v for c in formula.clauses for v in c.variables()}
    for v in sorted(used):
        if v not in formula.space:
            raise ValueError("clause variable %s not registered in space" % v)
    ids = {v: i for i, v in enumerate(variables, start=1)}
    lines = []
    meta = formula.meta
    fam = meta.get("family", "unknown")
    lines.append("c generator %s" % fam)
    for key in sorted(meta):
        val = meta[key]
        if isinstance(val, (int, str)):
            lines.append("c meta %s=%s" % (key, val))
    if formula.domain_size is not None:
        lines.append("c meta domain_size=%d" % formula.domain_size)
    graph = meta.get("graph")
    if isinstance(graph, Graph):
        lines.append("c vertices %s" % " ".join(graph.vertices))
    for v in variables:
        dom = "-" if v.domain_index is None else str(v.domain_index)
        lines.append("c varmap %d %s %s" % (ids[v], v.name, dom))
    clauses = formula.sorted_clauses()
    lines.append("p cnf %d %d" % (len(variables), len(clauses)))
    for c in clauses:
        lits = sorted(
            ((ids[v] if pol else -ids[v]) for v, pol in c.literals),
            key=lambda x: (abs(x), x),
        )
        lines.append(" ".join(str(x) for x in lits) + " 0")
    return "\n".join(lines) + "\n"


def read_dimacs(text: str) -> CnfFormula:
    sp = VariableSpace()
    by_id = {}
    meta = {}
    domain_size = None
    clauses = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("c varmap "):
            _, _, vid, name, dom = line.split()
            tag = parse_var_name(name)
            domain = None if dom == "-" else int(dom)
            by_id[int(vid)] = sp.var(tag[0], *tag[1:], domain=domain)
        elif line.startswith("c meta "):
            key, _, val = line[len("c meta "):].partition("=")
            meta[key] = int(val) if val.lstrip("-").isdigit() else val
        elif line.startswith("c generator "):
            meta.setdefault("family", line[len("c generator "):].strip())
        elif line.startswith("c") or line.startswith("p"):
            continue
        else:
            nums = [int(t) for t in line.split()]
            if nums and nums[-1] == 0:
                nums = nums[:-1]
            clauses.append(
                Clause(frozenset((by_id[abs(x)], x > 0) for x in nums))
            )
    domain_size = meta.pop("domain_size", None)
    return CnfFormula(frozenset(clauses), sp, domain_size=domain_size, meta=meta)


# ---------------------------------------------------------------------------
# Constraint-system JSON (shared with the sos module)
# ---------------------------------------------------------------------------


def constraints_to_json(constraints: Sequence[PolynomialConstraint]) -> dict:
    vars_ = sorted({v for c in constraints for v in c.poly.variables()})
    return {
        "vars": [
            {"name": v.name, "domain": v.domain_index} for v in vars_
        ],
        "constraints": [
            {"poly": c.poly.to_text(), "rel": c.relation.value} for c in constraints
        ],
    }


def constraints_from_json(data: dict) -> tuple[list, VariableSpace]:
    from .algebra import parse_poly

    sp = VariableSpace()
    for entry in data["vars"]:
        tag = parse_var_name(entry["name"])
        sp.var(tag[0], *tag[1:], domain=entry.get("domain"))
    out = []
    for entry in data["constraints"]:
        poly = parse_poly(entry["poly"], sp)
        out.append(PolynomialConstraint(poly, Relation(entry["rel"])))
    return out, sp
