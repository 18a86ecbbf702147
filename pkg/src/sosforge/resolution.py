"""Resolution proofs: DAG-shaped step sequences, a strict checker, restriction
and lifting of proofs, and constructive refutation builders for the
brute-force gadget, clique formulas, threshold closures, and relativized
formulas.

Width conventions: `ProofMeasures.width` is the maximum width among clauses
introduced by weakening or resolution steps (the measure the builders' bounds
are stated in); `max_clause_width` additionally includes axiom steps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

from .algebra import Clause, VariableSpace, VarId
from .formulas import (
    CnfFormula,
    Graph,
    SymmetricTemplate,
    find_clique,
    gen_bruteforce_gadget,
    gen_clique,
    gen_threshold,
    relativize,
    rename_clause,
    symmetric_template,
)


class ProofError(ValueError):
    def __init__(self, step: Optional[int], reason: str):
        self.step = step
        self.reason = reason
        where = "step %d" % (step + 1) if step is not None else "proof"
        super().__init__("%s: %s" % (where, reason))


class CliqueExistsError(ValueError):
    def __init__(self, witness):
        self.witness = tuple(witness)
        super().__init__("graph has a clique: %s" % (self.witness,))


@dataclass(frozen=True)
class Axiom:
    clause: Clause


@dataclass(frozen=True)
class Weaken:
    source: int
    clause: Clause


@dataclass(frozen=True)
class Resolve:
    left: int
    right: int
    pivot: VarId
    clause: Clause


@dataclass
class ResolutionProof:
    steps: list

    @property
    def size(self) -> int:
        return len(self.steps)

    @property
    def derived(self) -> Clause:
        return self.steps[-1].clause

    def is_refutation(self) -> bool:
        return bool(self.steps) and self.derived.is_empty()


@dataclass(frozen=True)
class ProofMeasures:
    size: int
    width: int
    domain_width: int
    tree_like: bool
    is_refutation: bool
    max_clause_width: int
    axiom_steps: int

    def __str__(self):
        return "size=%d width=%d domain_width=%d tree_like=%s" % (
            self.size,
            self.width,
            self.domain_width,
            self.tree_like,
        )


def _resolvent(left: Clause, right: Clause, pivot: VarId) -> Clause:
    pos, neg = (pivot, True), (pivot, False)
    if pos in left.literals and neg in right.literals:
        pass
    elif pos in right.literals and neg in left.literals:
        left, right = right, left
    else:
        raise ValueError("pivot %s not resolvable between premises" % pivot)
    lits = (left.literals | right.literals) - {pos, neg}
    return Clause(frozenset(lits))  # raises on a tautological resolvent


def check_proof(formula: CnfFormula, proof: ResolutionProof) -> ProofMeasures:
    """Accept iff every axiom step's clause is in the formula and every
    inference is sound; returns the proof measures."""
    if not proof.steps:
        raise ProofError(None, "empty proof")
    clause_set = formula.clauses
    uses = [0] * len(proof.steps)
    width = 0
    domain_width = 0
    max_width = 0
    axiom_steps = 0
    for idx, step in enumerate(proof.steps):
        if isinstance(step, Axiom):
            if step.clause not in clause_set:
                raise ProofError(idx, "axiom clause [%r] not in formula" % step.clause)
            axiom_steps += 1
        elif isinstance(step, Weaken):
            if not (0 <= step.source < idx):
                raise ProofError(idx, "weakening source out of range")
            uses[step.source] += 1
            if not proof.steps[step.source].clause <= step.clause:
                raise ProofError(idx, "weakening target is not a superset")
            width = max(width, step.clause.width)
            domain_width = max(domain_width, step.clause.domain_width)
        elif isinstance(step, Resolve):
            if not (0 <= step.left < idx and 0 <= step.right < idx):
                raise ProofError(idx, "resolution premise out of range")
            uses[step.left] += 1
            uses[step.right] += 1
            try:
                expected = _resolvent(
                    proof.steps[step.left].clause,
                    proof.steps[step.right].clause,
                    step.pivot,
                )
            except ValueError as e:
                raise ProofError(idx, str(e))
            if expected != step.clause:
                raise ProofError(idx, "resolvent mismatch")
            width = max(width, step.clause.width)
            domain_width = max(domain_width, step.clause.domain_width)
        else:
            raise ProofError(idx, "unknown step type %r" % (step,))
        max_width = max(max_width, step.clause.width)
    return ProofMeasures(
        size=len(proof.steps),
        width=width,
        domain_width=domain_width,
        tree_like=all(u <= 1 for u in uses),
        is_refutation=proof.is_refutation(),
        max_clause_width=max_width,
        axiom_steps=axiom_steps,
    )


class ProofBuilder:
    """Appends steps; when given a formula, validates axiom membership."""

    def __init__(self, formula: Optional[CnfFormula] = None):
        self.formula = formula
        self.steps: list = []

    def axiom(self, clause: Clause) -> int:
        if self.formula is not None and clause not in self.formula.clauses:
            raise ProofError(len(self.steps), "axiom [%r] not in formula" % clause)
        self.steps.append(Axiom(clause))
        return len(self.steps) - 1

    def weaken(self, source: int, clause: Clause) -> int:
        if not self.steps[source].clause <= clause:
            raise ProofError(len(self.steps), "weakening would shrink the clause")
        self.steps.append(Weaken(source, clause))
        return len(self.steps) - 1

    def resolve(self, left: int, right: int, pivot: VarId) -> int:
        clause = _resolvent(self.steps[left].clause, self.steps[right].clause, pivot)
        self.steps.append(Resolve(left, right, pivot, clause))
        return len(self.steps) - 1

    def extend(self, proof: ResolutionProof) -> int:
        """Append another proof's steps, shifting internal references."""
        off = len(self.steps)
        for step in proof.steps:
            if isinstance(step, Axiom):
                self.axiom(step.clause)
            elif isinstance(step, Weaken):
                self.steps.append(Weaken(step.source + off, step.clause))
            else:
                self.steps.append(
                    Resolve(step.left + off, step.right + off, step.pivot, step.clause)
                )
        return len(self.steps) - 1

    def proof(self) -> ResolutionProof:
        return ResolutionProof(list(self.steps))


# ---------------------------------------------------------------------------
# Proof transformations
# ---------------------------------------------------------------------------


def falsified_clause(rho: Mapping[VarId, int]) -> Clause:
    """The unique clause over rho's variables evaluating to false under rho."""
    return Clause(frozenset((v, b == 0) for v, b in rho.items()))


def lift_proof(
    proof: ResolutionProof,
    rho: Mapping[VarId, int],
    formula: CnfFormula,
    validate: bool = True,
) -> ResolutionProof:
    """Lift a derivation of C over formula|rho to a derivation of A | C over
    the formula itself, where A is the clause falsified by rho.

    Width grows by at most |rho| and size by at most one step.
    """
    restricted = formula.restrict(rho)
    if validate:
        check_proof(restricted, proof)
    preimage = {}
    for c in formula.sorted_clauses():
        r = c.restrict(rho)
        if r is not None:
            preimage.setdefault(r, c)
    a_clause = falsified_clause(rho)
    target = Clause(frozenset(a_clause.literals | proof.derived.literals))

    pb = ProofBuilder()
    lifted: list = []
    for idx, step in enumerate(proof.steps):
        if isinstance(step, Axiom):
            orig = preimage.get(step.clause)
            if orig is None:
                raise ProofError(idx, "axiom [%r] not in restricted formula" % step.clause)
            pb.axiom(orig)
            lifted.append(orig)
        elif isinstance(step, Weaken):
            src = proof.steps[step.source].clause
            added = step.clause.literals - src.literals
            new = Clause(frozenset(lifted[step.source].literals | added))
            pb.weaken(step.source, new)
            lifted.append(new)
        else:
            i = pb.resolve(step.left, step.right, step.pivot)
            lifted.append(pb.steps[i].clause)
    if lifted[-1] != target:
        pb.weaken(len(pb.steps) - 1, target)
    return pb.proof()


def restrict_proof(proof: ResolutionProof, rho: Mapping[VarId, int]) -> ResolutionProof:
    """Apply a restriction to a proof, yielding a proof over formula|rho.

    Satisfied clauses disappear; resolutions on an assigned pivot degrade to
    weakenings from the surviving premise.
    """
    pb = ProofBuilder()
    mapped: list = []  # old index -> new index, or None when satisfied
    for idx, step in enumerate(proof.steps):
        r = step.clause.restrict(rho)
        if r is None:
            mapped.append(None)
            continue
        if isinstance(step, Axiom):
            mapped.append(pb.axiom(r))
        elif isinstance(step, Weaken):
            src = mapped[step.source]
            if src is None:
                raise ProofError(idx, "weakening source satisfied but target is not")
            mapped.append(pb.weaken(src, r))
        else:
            b = rho.get(step.pivot)
            if b is None:
                l, rr = mapped[step.left], mapped[step.right]
                if l is None or rr is None:
                    raise ProofError(idx, "premise satisfied but resolvent is not")
                mapped.append(pb.resolve(l, rr, step.pivot))
            else:
                # the premise containing the falsified pivot literal survives
                pos_first = (step.pivot, True) in proof.steps[step.left].clause.literals
                keep = step.right if (b == 1) == pos_first else step.left
                src = mapped[keep]
                if src is None:
                    raise ProofError(idx, "surviving premise satisfied unexpectedly")
                mapped.append(pb.weaken(src, r))
    if mapped[-1] is None:
        raise ProofError(len(proof.steps) - 1, "final clause satisfied by restriction")
    return pb.proof()


def rename_proof(
    proof: ResolutionProof, mapping: Mapping[int, int], space: VariableSpace
) -> ResolutionProof:
    """Rename domain indices throughout a proof."""
    steps: list = []
    for step in proof.steps:
        clause = rename_clause(step.clause, mapping, space)
        if isinstance(step, Axiom):
            steps.append(Axiom(clause))
        elif isinstance(step, Weaken):
            steps.append(Weaken(step.source, clause))
        else:
            pv = step.pivot
            if pv.domain_index is not None:
                new_idx = mapping.get(pv.domain_index, pv.domain_index)
                pv = space.var(pv.kind, new_idx, *pv.tag[2:], domain=new_idx)
            else:
                pv = space.register(pv)
            steps.append(Resolve(step.left, step.right, pv, clause))
    return ResolutionProof(steps)


# ---------------------------------------------------------------------------
# The chain-descent construction shared by all refutation builders
# ---------------------------------------------------------------------------


def _chain_descent(
    pb: ProofBuilder,
    k: int,
    row_sizes: Sequence[int],
    head: Callable[[int], Clause],
    chain: Callable[[int, int], Clause],
    tail: Callable[[int], Clause],
    xvar: Callable[[int, int], VarId],
    yvar: Callable[[int, int], VarId],
    tuple_step: Callable[[tuple], int],
) -> int:
    """Backward-induction refutation: derives, for each prefix (j_1..j_{i-1}),
    the all-negative clause on the chosen x's, walking row i's y-chain and
    consuming the clause for each extended prefix."""

    def descend(prefix: tuple) -> int:
        i = len(prefix) + 1
        if i > k:
            return tuple_step(prefix)
        m = row_sizes[i - 1]
        cur = pb.resolve(pb.axiom(head(i)), pb.axiom(chain(i, 1)), yvar(i, 0))
        cur = pb.resolve(cur, descend(prefix + (1,)), xvar(i, 1))
        for j in range(2, m + 1):
            cur = pb.resolve(cur, pb.axiom(chain(i, j)), yvar(i, j - 1))
            cur = pb.resolve(cur, descend(prefix + (j,)), xvar(i, j))
        return pb.resolve(cur, pb.axiom(tail(i)), yvar(i, m))

    return descend(())


def build_bruteforce_refutation(k: int, ms: Sequence[int]) -> ResolutionProof:
    """Tree-like refutation of the brute-force gadget; width of the derived
    clauses is at most k+1 and the size is twice the number of axiom steps
    minus one."""
    ms = list(ms)
    formula = gen_bruteforce_gadget(k, ms)
    sp = formula.space
    pb = ProofBuilder(formula)

    def x(i, j):
        return sp.var("x", i, j)

    def y(i, j):
        return sp.var("y", i, j)

    _chain_descent(
        pb,
        k,
        ms,
        head=lambda i: Clause.of((y(i, 0), True)),
        chain=lambda i, j: Clause.of((y(i, j - 1), False), (x(i, j), True), (y(i, j), True)),
        tail=lambda i: Clause.of((y(i, ms[i - 1]), False)),
        xvar=x,
        yvar=y,
        tuple_step=lambda prefix: pb.axiom(
            Clause(frozenset((x(i + 1, j), False) for i, j in enumerate(prefix)))
        ),
    )
    return pb.proof()


def build_clique_refutation(graph: Graph, k: int) -> ResolutionProof:
    """Refutation of gen_clique(graph, k) when the graph has no k-clique:
    weaken an edge or functional violation into every vertex sequence, then
    close with the chain gadget over the z variables."""
    witness = find_clique(graph, k)
    if witness is not None:
        raise CliqueExistsError(witness)
    formula = gen_clique(graph, k)
    sp = formula.space
    n = graph.n
    pb = ProofBuilder(formula)

    def x(i, j):
        return sp.var("x", i, j, domain=i)

    def z(i, j):
        return sp.var("z", i, j, domain=i)

    def tuple_step(prefix: tuple) -> int:
        # some pair in the sequence repeats a vertex or misses an edge
        full = Clause(frozenset((x(i + 1, j), False) for i, j in enumerate(prefix)))
        for (t1, j1), (t2, j2) in itertools.combinations(enumerate(prefix), 2):
            u, v = graph.vertices[j1 - 1], graph.vertices[j2 - 1]
            if j1 == j2 or not graph.has_edge(u, v):
                ax = pb.axiom(Clause.of((x(t1 + 1, j1), False), (x(t2 + 1, j2), False)))
                return pb.weaken(ax, full)
        raise ProofError(None, "sequence %r is a clique; formula satisfiable" % (prefix,))

    _chain_descent(
        pb,
        k,
        [n] * k,
        head=lambda i: Clause.of((z(i, 0), True)),
        chain=lambda i, j: Clause.of((z(i, j - 1), False), (x(i, j), True), (z(i, j), True)),
        tail=lambda i: Clause.of((z(i, n), False)),
        xvar=x,
        yvar=z,
        tuple_step=tuple_step,
    )
    return pb.proof()


def threshold_refutation_system(k: int, m: int) -> CnfFormula:
    """THR(k, s) together with the clause of negated selectors for every
    k-subset of [m]; jointly unsatisfiable."""
    thr = gen_threshold(k, m)
    sp = thr.space
    clauses = set(thr.clauses)
    for combo in itertools.combinations(range(1, m + 1), k):
        clauses.add(Clause(frozenset((sp.var("s", i, domain=i), False) for i in combo)))
    return CnfFormula(
        frozenset(clauses),
        sp,
        domain_size=m,
        meta={"family": "threshold_refutation", "k": k, "m": m},
    )


def _threshold_closure(
    pb: ProofBuilder,
    sp: VariableSpace,
    k: int,
    m: int,
    selector_clause_step: Callable[[tuple], int],
) -> int:
    """Derive the empty clause from THR(k, s) given, for each k-subset D of
    [m], a step deriving the all-negative selector clause on D."""

    def s(i):
        return sp.var("s", i, domain=i)

    def p(j, i):
        return sp.var("p", i, j, domain=i)

    def y(j, i):
        return sp.var("y", j, i)

    dstep_cache: dict = {}

    def tuple_step(prefix: tuple) -> int:
        full = Clause(frozenset((p(j + 1, i), False) for j, i in enumerate(prefix)))
        if len(set(prefix)) < k:
            for (j1, i1), (j2, i2) in itertools.combinations(enumerate(prefix), 2):
                if i1 == i2:
                    ax = pb.axiom(
                        Clause.of((p(j1 + 1, i1), False), (p(j2 + 1, i1), False))
                    )
                    return pb.weaken(ax, full)
        d = tuple(sorted(set(prefix)))
        if d not in dstep_cache:
            dstep_cache[d] = selector_clause_step(d)
        cur = dstep_cache[d]
        for j, i in enumerate(prefix, start=1):
            ax = pb.axiom(Clause.of((p(j, i), False), (s(i), True)))
            cur = pb.resolve(cur, ax, s(i))
        return cur

    return _chain_descent(
        pb,
        k,
        [m] * k,
        head=lambda j: Clause.of((y(j, 0), True)),
        chain=lambda j, i: Clause.of((y(j, i - 1), False), (p(j, i), True), (y(j, i), True)),
        tail=lambda j: Clause.of((y(j, m), False)),
        xvar=lambda j, i: p(j, i),
        yvar=lambda j, i: y(j, i),
        tuple_step=tuple_step,
    )


def build_threshold_refutation(k: int, m: int) -> ResolutionProof:
    """Refute THR(k, s) plus all k-subset selector clauses; width <= k+1,
    size O(k m^k)."""
    formula = threshold_refutation_system(k, m)
    sp = formula.space
    pb = ProofBuilder(formula)

    def selector_clause_step(d: tuple) -> int:
        return pb.axiom(
            Clause(frozenset((sp.var("s", i, domain=i), False) for i in d))
        )

    _threshold_closure(pb, sp, k, m, selector_clause_step)
    return pb.proof()


def build_relativized_refutation(
    base: CnfFormula, k: int, m: int, inner: ResolutionProof
) -> ResolutionProof:
    """Refute relativize(base, k, m) by lifting the inner refutation of the
    base formula under every k-subset of selectors and closing with the
    threshold machinery.  Width <= max(inner width + k, k + 1)."""
    measures = check_proof(base, inner)
    if not measures.is_refutation:
        raise ProofError(None, "inner proof is not a refutation")
    rel = relativize(base, k, m)
    sp = rel.space
    base_domain = sorted(
        {v.domain_index for v in base.variables() if v.domain_index is not None}
    )
    if len(base_domain) != k:
        raise ValueError(
            "base formula mentions %d domain elements, expected k=%d"
            % (len(base_domain), k)
        )
    pb = ProofBuilder(rel)

    def selector_clause_step(d: tuple) -> int:
        mapping = dict(zip(base_domain, d))
        renamed = rename_proof(inner, mapping, sp)
        rho = {sp.var("s", i, domain=i): 1 for i in d}
        lifted = lift_proof(renamed, rho, rel, validate=False)
        return pb.extend(lifted)

    _threshold_closure(pb, sp, k, m, selector_clause_step)
    return pb.proof()


# ---------------------------------------------------------------------------
# Trace format
# ---------------------------------------------------------------------------


def write_trace(proof: ResolutionProof, formula: CnfFormula) -> str:
    """One step per line: `a <lits> 0`, `w <src> <lits> 0`,
    `r <left> <right> <pivot> <lits> 0`; DIMACS literal numbering taken from
    the formula's variable enumeration, step ids are 1-based line numbers."""
    ids = {v: i for i, v in enumerate(formula.space, start=1)}
    lines = []
    for step in proof.steps:
        lits = sorted(
            ((ids[v] if pol else -ids[v]) for v, pol in step.clause.literals),
            key=lambda x: (abs(x), x),
        )
        lit_s = " ".join(str(x) for x in lits)
        body = (lit_s + " 0").strip() if lit_s else "0"
        if isinstance(step, Axiom):
            lines.append("a %s" % body)
        elif isinstance(step, Weaken):
            lines.append("w %d %s" % (step.source + 1, body))
        else:
            lines.append(
                "r %d %d %d %s" % (step.left + 1, step.right + 1, ids[step.pivot], body)
            )
    return "\n".join(lines) + "\n"


def read_trace(text: str, formula: CnfFormula) -> ResolutionProof:
    by_id = {i: v for i, v in enumerate(formula.space, start=1)}

    def clause_of(tokens):
        nums = [int(t) for t in tokens]
        if nums and nums[-1] == 0:
            nums = nums[:-1]
        return Clause(frozenset((by_id[abs(x)], x > 0) for x in nums))

    steps: list = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("c"):
            continue
        toks = line.split()
        if toks[0] == "a":
            steps.append(Axiom(clause_of(toks[1:])))
        elif toks[0] == "w":
            steps.append(Weaken(int(toks[1]) - 1, clause_of(toks[2:])))
        elif toks[0] == "r":
            steps.append(
                Resolve(
                    int(toks[1]) - 1,
                    int(toks[2]) - 1,
                    by_id[int(toks[3])],
                    clause_of(toks[4:]),
                )
            )
        else:
            raise ValueError("bad trace line: %r" % line)
    return ResolutionProof(steps)
