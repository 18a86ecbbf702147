"""Sums-of-squares certificates and their exact verification.

A certificate realizes  target = sum_i g_i f_i + sum_j u_j h_j + u_0  over a
constraint system of equalities f = 0 and inequalities h >= 0, where every u
is a weighted sum of squared generators with nonnegative rational weights.
(A weight c = p/q is sugar for p*q copies of the square of generator/q, so
weighted sums are plain sums of squares; storing weights keeps certificates
compact when multiplicities get large.)  Acceptance is a syntactic identity
of multilinear polynomials over the rationals; there is no tolerance.

Also here: the resolution-to-SOS compiler and the two substitution-based
certificate transformers (clique formula -> block encoding -> 3-XOR).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .algebra import (
    Clause,
    Poly,
    PolynomialConstraint,
    Relation,
    VariableSpace,
    VarId,
    encode_clause,
    falsifying_indicator,
    indicator_of_assignment,
    indicator_poly,
    multilinear_reduce,
    parse_poly,
    raw_degree,
)
from .formulas import (
    BlockSystem,
    CnfFormula,
    XorBlockGraph,
    XorEncoding,
    constraints_from_json,
    constraints_to_json,
    encode_xor,
    gen_block,
    parse_var_name,
)
from .resolution import Axiom, ProofError, Resolve, ResolutionProof, Weaken, check_proof


class CertificateError(ValueError):
    def __init__(self, reason: str, residual: Optional[Poly] = None):
        self.residual = residual
        if residual is not None:
            reason = "%s; residual: %s" % (reason, residual.to_text())
        super().__init__(reason)


class SquareSum:
    """Weighted sum of squares sum_t w_t * q_t^2 with rational w_t >= 0."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[tuple]):
        kept = []
        for w, q in entries:
            w = Fraction(w)
            if w < 0:
                raise CertificateError("negative square weight %s" % w)
            if w == 0 or q.is_zero():
                continue
            kept.append((w, q))
        self.entries = tuple(kept)

    @staticmethod
    def of(*gens: Poly) -> "SquareSum":
        return SquareSum([(Fraction(1), q) for q in gens])

    @staticmethod
    def zero() -> "SquareSum":
        return SquareSum([])

    def __iter__(self):
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    def __bool__(self):
        return bool(self.entries)

    def expand(self) -> Poly:
        acc = Poly.zero()
        for w, q in self.entries:
            acc = acc + (q * q) * w
        return acc


@dataclass(frozen=True)
class SosCertificate:
    system: tuple  # of PolynomialConstraint
    equality_terms: tuple  # of (Poly g, constraint index)
    inequality_terms: tuple  # of (SquareSum u, constraint index)
    free_term: SquareSum
    target: PolynomialConstraint

    @staticmethod
    def build(system, equality=(), inequality=(), free=SquareSum.zero(), target=None):
        if target is None:
            target = PolynomialConstraint(Poly.const(-1), Relation.GE0)
        return SosCertificate(
            tuple(system), tuple(equality), tuple(inequality), free, target
        )

    def is_refutation(self) -> bool:
        return self.target.poly == Poly.const(-1)


@dataclass(frozen=True)
class SosMeasures:
    degree: int
    size: int
    domain_degree: int

    def __str__(self):
        return "degree=%d size=%d domain_degree=%d" % (
            self.degree,
            self.size,
            self.domain_degree,
        )


def _products(system, cert: SosCertificate) -> list:
    out = []
    for g, i in cert.equality_terms:
        out.append(g * system[i].poly)
    for u, j in cert.inequality_terms:
        out.append(u.expand() * system[j].poly)
    out.append(cert.free_term.expand())
    return out


def measure_certificate(cert: SosCertificate, system=None) -> SosMeasures:
    """Degree/size/domain-degree over the expanded products g_i f_i, u_j h_j,
    u_0; size counts monomials with repetition across the products."""
    system = cert.system if system is None else system
    prods = _products(system, cert)
    return SosMeasures(
        degree=max((p.degree for p in prods), default=0),
        size=sum(p.monomial_count for p in prods),
        domain_degree=max((p.domain_degree for p in prods), default=0),
    )


def check_certificate(system, cert: SosCertificate) -> SosMeasures:
    """Accept iff the certificate identity holds exactly in canonical
    multilinear form; returns measures, raises CertificateError otherwise."""
    system = list(system)
    for g, i in cert.equality_terms:
        if not (0 <= i < len(system)):
            raise CertificateError("equality index %d out of range" % i)
        if system[i].relation is not Relation.EQ0:
            raise CertificateError("equality multiplier used on inequality %d" % i)
    for u, j in cert.inequality_terms:
        if not (0 <= j < len(system)):
            raise CertificateError("inequality index %d out of range" % j)
        if system[j].relation is not Relation.GE0:
            raise CertificateError("sos multiplier used on equality %d" % j)
    total = Poly.zero()
    for p in _products(system, cert):
        total = total + p
    if total != cert.target.poly:
        raise CertificateError(
            "certificate identity fails", residual=cert.target.poly - total
        )
    return measure_certificate(cert, system)


# ---------------------------------------------------------------------------
# Raw (non-multilinear) certificates and multilinearization
# ---------------------------------------------------------------------------

# A raw polynomial is a list of (variable sequence with repeats, coefficient).


@dataclass(frozen=True)
class RawCertificate:
    equality_terms: tuple  # of (raw poly, index)
    inequality_terms: tuple  # of (tuple of (weight, raw poly), index)
    free_term: tuple  # of (weight, raw poly)


def _raw_product_size(a, b) -> int:
    # distinct monomials of the product keeping exponents (no x^2 = x)
    monos = set()
    for va, ca in a:
        if Fraction(ca) == 0:
            continue
        for vb, cb in b:
            if Fraction(cb) == 0:
                continue
            exp = {}
            for v in tuple(va) + tuple(vb):
                exp[v] = exp.get(v, 0) + 1
            monos.add(tuple(sorted(exp.items())))
    return len(monos)


def raw_measures(raw: RawCertificate, system) -> SosMeasures:
    """Measures of a raw certificate without multilinear reduction."""
    degree = 0
    size = 0
    for g, i in raw.equality_terms:
        f_raw = [(tuple(m), c) for m, c in system[i].poly.terms.items()]
        degree = max(degree, raw_degree(g) + system[i].poly.degree)
        size += _raw_product_size(g, f_raw)
    for u, j in raw.inequality_terms:
        h_raw = [(tuple(m), c) for m, c in system[j].poly.terms.items()]
        u_sq = []
        for w, q in u:
            u_sq.append(2 * raw_degree(q))
            # crude size: squared generator times h, summed per generator
            qq = [
                (tuple(va) + tuple(vb), Fraction(ca) * Fraction(cb) * Fraction(w))
                for va, ca in q
                for vb, cb in q
            ]
            size += _raw_product_size(qq, h_raw)
        degree = max(degree, max(u_sq, default=0) + system[j].poly.degree)
    for w, q in raw.free_term:
        degree = max(degree, 2 * raw_degree(q))
        qq = [
            (tuple(va) + tuple(vb), Fraction(ca) * Fraction(cb) * Fraction(w))
            for va, ca in q
            for vb, cb in q
        ]
        size += _raw_product_size(qq, [((), Fraction(1))])
    return SosMeasures(degree=degree, size=size, domain_degree=0)


def multilinearize_certificate(raw: RawCertificate, system, target=None) -> SosCertificate:
    """Map x^l to x throughout a raw certificate; size and degree never grow."""
    eq = [(multilinear_reduce(g), i) for g, i in raw.equality_terms]
    ineq = [
        (SquareSum([(w, multilinear_reduce(q)) for w, q in u]), j)
        for u, j in raw.inequality_terms
    ]
    free = SquareSum([(w, multilinear_reduce(q)) for w, q in raw.free_term])
    return SosCertificate.build(system, eq, ineq, free, target)


# ---------------------------------------------------------------------------
# Resolution simulation
# ---------------------------------------------------------------------------


def encode_system(formula: CnfFormula) -> list:
    """Clause encodings in the formula's canonical clause order."""
    return [encode_clause(c) for c in formula.sorted_clauses()]


def compile_resolution(formula: CnfFormula, proof: ResolutionProof) -> SosCertificate:
    """Compile a checker-accepted resolution refutation into an SOS refutation
    of the clause encodings, of degree at most width + 1.

    Per proof line D, let a(D) be D's falsifying assignment and d(D) its
    indicator.  The construction unrolls the identities

        axiom C:        d(C) = -d(C) * encode(C)
        weaken D <= D': d(D') = d(D) - [d(D) - d(D')]
        resolve D:      d(D) = d(P1) + d(P2) - R1 - R2,
                        R1 = d(P1) - d(a(D) + {x=0}),  R2 likewise for P2,

    whose bracketed correction terms are 0/1-valued and hence squares.  The
    axiom multipliers accumulate integer use-counts, so DAG proofs compile
    without expanding shared subproofs.
    """
    measures = check_proof(formula, proof)
    if not measures.is_refutation:
        raise ProofError(None, "proof does not derive the empty clause")
    clauses = formula.sorted_clauses()
    index_of = {c: i for i, c in enumerate(clauses)}
    system = [encode_clause(c) for c in clauses]

    steps = proof.steps
    coeff = [0] * len(steps)
    coeff[-1] = 1
    axiom_mult: dict = {}
    free_entries: list = []
    for i in range(len(steps) - 1, -1, -1):
        c = coeff[i]
        if c == 0:
            continue
        step = steps[i]
        if isinstance(step, Axiom):
            idx = index_of[step.clause]
            axiom_mult[idx] = axiom_mult.get(idx, 0) + c
        elif isinstance(step, Weaken):
            src = steps[step.source].clause
            r = falsifying_indicator(src) - falsifying_indicator(step.clause)
            if not r.is_zero():
                free_entries.append((Fraction(c), r))
            coeff[step.source] += c
        else:
            alpha = step.clause.falsifying_assignment()
            left, right = steps[step.left].clause, steps[step.right].clause
            pos, neg = (left, right) if (step.pivot, True) in left.literals else (right, left)
            for premise, bit in ((pos, 0), (neg, 1)):
                ext = dict(alpha)
                ext[step.pivot] = bit
                r = falsifying_indicator(premise) - indicator_of_assignment(ext)
                if not r.is_zero():
                    free_entries.append((Fraction(c), r))
            coeff[step.left] += c
            coeff[step.right] += c

    inequality = [
        (SquareSum([(Fraction(axiom_mult[idx]), falsifying_indicator(clauses[idx]))]), idx)
        for idx in sorted(axiom_mult)
    ]
    cert = SosCertificate.build(
        system,
        equality=(),
        inequality=inequality,
        free=SquareSum(free_entries),
    )
    check_certificate(system, cert)
    return cert


# ---------------------------------------------------------------------------
# Substitution of certificates
# ---------------------------------------------------------------------------


class MissingBridgeError(CertificateError):
    pass


def subst_poly(p: Poly, sigma: Mapping[VarId, Poly]) -> Poly:
    """Substitute variables by multilinear polynomials and reduce."""
    acc = Poly.zero()
    for mono, c in p.terms.items():
        term = Poly.const(c)
        for v in mono:
            img = sigma.get(v)
            term = term * (img if img is not None else Poly.variable(v))
            if term.is_zero():
                break
        acc = acc + term
    return acc


def _subst_parts(cert: SosCertificate, sigma, bridges):
    """Push a certificate through a substitution, composing the bridge
    certificates that derive each substituted axiom from the target system."""
    used = {i for _, i in cert.equality_terms} | {j for _, j in cert.inequality_terms}
    for i in sorted(used):
        if i not in bridges:
            raise MissingBridgeError("no bridge for constraint %d" % i)
        br = bridges[i]
        expected = subst_poly(cert.system[i].poly, sigma)
        if br.target.poly != expected:
            raise CertificateError(
                "bridge %d derives the wrong polynomial" % i,
                residual=br.target.poly - expected,
            )
        check_certificate(br.system, br)
        if cert.system[i].relation is Relation.EQ0 and (
            br.inequality_terms or br.free_term
        ):
            raise CertificateError(
                "bridge for equality constraint %d must use equality terms only" % i
            )

    new_eq: list = []
    new_ineq: dict = {}
    new_free: list = []
    for g, i in cert.equality_terms:
        gs = subst_poly(g, sigma)
        for g2, i2 in bridges[i].equality_terms:
            new_eq.append((gs * g2, i2))
    for u, j in cert.inequality_terms:
        us = [(w, subst_poly(q, sigma)) for w, q in u]
        u_poly = SquareSum(us).expand()
        br = bridges[j]
        for g2, i2 in br.equality_terms:
            new_eq.append((u_poly * g2, i2))
        for u2, j2 in br.inequality_terms:
            bucket = new_ineq.setdefault(j2, [])
            for w1, q1 in us:
                for w2, q2 in u2:
                    bucket.append((w1 * w2, q1 * q2))
        for w2, q2 in br.free_term:
            for w1, q1 in us:
                new_free.append((w1 * w2, q1 * q2))
    for w, q in cert.free_term:
        new_free.append((w, subst_poly(q, sigma)))
    return new_eq, new_ineq, new_free


def _assemble(system, new_eq, new_ineq, new_free, target) -> SosCertificate:
    inequality = [
        (SquareSum(entries), j) for j, entries in sorted(new_ineq.items())
    ]
    return SosCertificate.build(
        system, new_eq, inequality, SquareSum(new_free), target
    )


def substitute_certificate(
    cert: SosCertificate,
    sigma: Mapping[VarId, Poly],
    bridges: Mapping[int, SosCertificate],
    target_system=None,
) -> SosCertificate:
    """Substituted certificate over the bridges' system; the composed identity
    must hold exactly (substitutions whose images are 0/1-valued, like
    indicator polynomials, always do)."""
    if target_system is None:
        for br in bridges.values():
            target_system = br.system
            break
        else:
            raise MissingBridgeError("no bridges supplied")
    target = PolynomialConstraint(subst_poly(cert.target.poly, sigma), cert.target.relation)
    new_eq, new_ineq, new_free = _subst_parts(cert, sigma, bridges)
    out = _assemble(target_system, new_eq, new_ineq, new_free, target)
    check_certificate(target_system, out)
    return out


# ---------------------------------------------------------------------------
# Clique formula -> block encoding
# ---------------------------------------------------------------------------


def derive_functional_bridge(block: BlockSystem, iota: int, u: str, v: str) -> SosCertificate:
    """Derive 1 - x_u - x_v >= 0 for distinct same-block vertices, from the
    block equality plus one square per remaining block member."""
    if u == v:
        raise ValueError("need distinct vertices")
    members = block.graph.partition[iota - 1]
    if u not in members or v not in members:
        raise ValueError("%s, %s not both in block %d" % (u, v, iota))
    eq_idx = iota - 1  # block equalities come first, in block order
    gens = [
        Poly.variable(block.var_of[w])
        for w in sorted(members, key=block.graph.position)
        if w not in (u, v)
    ]
    target = PolynomialConstraint(
        Poly.one() - Poly.variable(block.var_of[u]) - Poly.variable(block.var_of[v]),
        Relation.GE0,
    )
    cert = SosCertificate.build(
        block.constraints,
        equality=[(Poly.const(-1), eq_idx)],
        free=SquareSum.of(*gens),
        target=target,
    )
    check_certificate(block.constraints, cert)
    return cert


def _block_indices(block: BlockSystem):
    eq_idx = {i: i - 1 for i in range(1, block.k + 1)}
    ineq_idx = {}
    for pos, cons in enumerate(block.constraints):
        if cons.relation is Relation.GE0:
            vs = sorted(cons.poly.variables())
            labels = frozenset(
                block.graph.vertices[v.tag[2] - 1] for v in vs
            )
            ineq_idx[labels] = pos
    return eq_idx, ineq_idx


def clique_to_block(
    cert: SosCertificate, clique_formula: CnfFormula, block: BlockSystem
) -> SosCertificate:
    """Transform an SOS refutation of the clique formula into one of the block
    encoding, preserving domain-degree.

    Substitutes each chain variable z(i,j) by the sum of later in-block
    vertex variables and zeroes out-of-block x's; because those images are
    not 0/1-valued, the multilinear identity picks up correction terms
    supported on same-block products, each of which is discharged against a
    block equality (or absorbed as a square)."""
    graph = block.graph
    k = block.k
    sigma: dict = {}
    for var in clique_formula.space:
        kind = var.kind
        if kind == "x":
            i, j = var.tag[1], var.tag[2]
            label = graph.vertices[j - 1]
            sigma[var] = (
                Poly.variable(block.var_of[label])
                if graph.block_of(label) == i
                else Poly.zero()
            )
        elif kind == "z":
            i, j = var.tag[1], var.tag[2]
            acc = Poly.zero()
            for t in range(j + 1, graph.n + 1):
                label = graph.vertices[t - 1]
                if graph.block_of(label) == i:
                    acc = acc + Poly.variable(block.var_of[label])
            sigma[var] = acc
        else:
            raise CertificateError("unexpected clique variable kind %r" % kind)

    eq_idx, ineq_idx = _block_indices(block)
    eq_poly_of = {
        i: block.constraints[eq_idx[i]].poly for i in eq_idx
    }
    bridges: dict = {}
    for pos, cons in enumerate(cert.system):
        image = subst_poly(cons.poly, sigma)
        target = PolynomialConstraint(image, Relation.GE0)
        if image.is_zero():
            bridges[pos] = SosCertificate.build(block.constraints, target=target)
            continue
        matched = None
        for i, fp in eq_poly_of.items():
            if image == fp:
                matched = SosCertificate.build(
                    block.constraints, equality=[(Poly.one(), eq_idx[i])], target=target
                )
                break
        if matched is not None:
            bridges[pos] = matched
            continue
        vs = sorted(image.variables())
        if len(vs) <= 1:
            # 1 or 1 - x: a square of itself
            bridges[pos] = SosCertificate.build(
                block.constraints, free=SquareSum.of(image), target=target
            )
            continue
        if len(vs) == 2:
            u_lab = graph.vertices[vs[0].tag[2] - 1]
            v_lab = graph.vertices[vs[1].tag[2] - 1]
            bu, bv = graph.block_of(u_lab), graph.block_of(v_lab)
            if bu == bv:
                bridges[pos] = derive_functional_bridge(block, bu, u_lab, v_lab)
            else:
                h = ineq_idx.get(frozenset((u_lab, v_lab)))
                if h is None:
                    raise CertificateError(
                        "no block axiom for pair %s, %s" % (u_lab, v_lab)
                    )
                bridges[pos] = SosCertificate.build(
                    block.constraints,
                    inequality=[(SquareSum.of(Poly.one()), h)],
                    target=target,
                )
            continue
        raise CertificateError("unrecognized substituted axiom: %s" % image.to_text())

    target = PolynomialConstraint(cert.target.poly, cert.target.relation)
    new_eq, new_ineq, new_free = _subst_parts(cert, sigma, bridges)

    # correction pass: cancel the residual left by non-idempotent z images
    def total_of(parts_eq, parts_ineq, parts_free):
        t = Poly.zero()
        for g, i in parts_eq:
            t = t + g * block.constraints[i].poly
        for j, entries in parts_ineq.items():
            t = t + SquareSum(entries).expand() * block.constraints[j].poly
        t = t + SquareSum(parts_free).expand()
        return t

    residual = target.poly - total_of(new_eq, new_ineq, new_free)
    guard = 0
    while not residual.is_zero():
        guard += 1
        if guard > 100000:
            raise CertificateError("correction pass did not terminate")
        mono, c = residual.sorted_terms()[-1]
        by_block: dict = {}
        pair = None
        for v in mono:
            pair = by_block.get(v.domain_index)
            if pair is not None:
                pair = (pair, v)
                break
            by_block[v.domain_index] = v
        if pair is None:
            raise CertificateError(
                "uncorrectable residual", residual=residual
            )
        mono_poly = Poly({mono: Fraction(1)})
        if c > 0:
            new_free.append((c, mono_poly))
        else:
            iota = pair[0].domain_index
            members = set(graph.partition[iota - 1])
            uv = {graph.vertices[pair[0].tag[2] - 1], graph.vertices[pair[1].tag[2] - 1]}
            new_eq.append((c * mono_poly, eq_idx[iota]))
            for w in sorted(members - uv, key=graph.position):
                new_free.append((-c, mono_poly * Poly.variable(block.var_of[w])))
        residual = residual - c * mono_poly

    out = _assemble(block.constraints, new_eq, new_ineq, new_free, target)
    check_certificate(block.constraints, out)
    return out


# ---------------------------------------------------------------------------
# Block encoding -> 3-XOR
# ---------------------------------------------------------------------------


def _vertex_indicator(xbg: XorBlockGraph, enc: XorEncoding, label: str) -> Poly:
    assign = xbg.assignments[label]
    vs = sorted(assign)
    return indicator_poly([enc.var_of[i] for i in vs], [assign[i] for i in vs])


def _violated_constraint(xbg: XorBlockGraph, enc: XorEncoding, assignment) -> int:
    """Index (in the encoding) of a falsifying product matching `assignment`."""
    lookup = {pair: pos for pos, pair in enumerate(enc.origin)}
    for e_idx, (i, j, l, b) in enumerate(xbg.system.equations):
        if i in assignment and j in assignment and l in assignment:
            bits = (assignment[i], assignment[j], assignment[l])
            if (bits[0] ^ bits[1] ^ bits[2]) != b:
                return lookup[(e_idx, bits)]
    raise CertificateError("assignment violates no constraint")


def derive_block_bridge(
    xbg: XorBlockGraph, enc: XorEncoding, u: str, v: str
) -> SosCertificate:
    """Derive 1 - delta_u - delta_v >= 0 from the XOR encoding for a
    non-adjacent cross-block pair: incompatible assignments give a pure
    square; compatible ones factor the violated indicator product f as
    f_u * f_v and use (1-f_u-f_v)^2 + (f_u-d_u)^2 + (f_v-d_v)^2 - 2f."""
    if xbg.graph.has_edge(u, v):
        raise ValueError("%s and %s are adjacent; nothing to derive" % (u, v))
    if xbg.graph.block_of(u) == xbg.graph.block_of(v):
        raise ValueError("%s and %s are in the same block" % (u, v))
    du, dv = _vertex_indicator(xbg, enc, u), _vertex_indicator(xbg, enc, v)
    target = PolynomialConstraint(Poly.one() - du - dv, Relation.GE0)
    au, av = xbg.assignments[u], xbg.assignments[v]
    if any(au[w] != av[w] for w in au.keys() & av.keys()):
        cert = SosCertificate.build(
            enc.constraints, free=SquareSum.of(Poly.one() - du - dv), target=target
        )
    else:
        union = dict(au)
        union.update(av)
        pos = _violated_constraint(xbg, enc, union)
        e_idx, bits = enc.origin[pos]
        i, j, l, _ = xbg.system.equations[e_idx]
        fu = Poly.one()
        fv = Poly.one()
        for var_index, bit in zip((i, j, l), bits):
            chi = indicator_poly([enc.var_of[var_index]], [bit])
            if var_index in au:
                fu = fu * chi
            else:
                fv = fv * chi
        cert = SosCertificate.build(
            enc.constraints,
            equality=[(Poly.const(-2), pos)],
            free=SquareSum.of(Poly.one() - fu - fv, fu - du, fv - dv),
            target=target,
        )
    check_certificate(enc.constraints, cert)
    return cert


def block_to_xor(cert: SosCertificate, xbg: XorBlockGraph) -> SosCertificate:
    """Transform an SOS refutation of the block encoding into one of the
    3-XOR encoding by substituting each vertex variable with the indicator
    polynomial of its assignment.  Indicators are 0/1-valued, so the identity
    transfers exactly; degree is bounded by (variables per block) times the
    block certificate's domain-degree."""
    block = gen_block(xbg.graph, xbg.k)
    enc = encode_xor(xbg.system)
    if list(cert.system) != list(block.constraints):
        raise CertificateError("certificate system is not this graph's block encoding")
    sigma = {
        block.var_of[label]: _vertex_indicator(xbg, enc, label)
        for label in xbg.graph.vertices
    }
    eq_idx, ineq_idx = _block_indices(block)
    label_of_pos = {pos: lab for lab, pos in ((l, xbg.graph.position(l)) for l in xbg.graph.vertices)}

    bridges: dict = {}
    for pos, cons in enumerate(cert.system):
        image = subst_poly(cons.poly, sigma)
        if cons.relation is Relation.EQ0:
            # image = -(sum of excluded-assignment indicators); discharge each
            # against a violated falsifying product
            iota = pos + 1
            vs = xbg.block_vars[iota - 1]
            eqs = []
            present = {
                tuple(xbg.assignments[lab][w] for w in vs)
                for lab in xbg.graph.partition[iota - 1]
            }
            for bits in itertools.product((0, 1), repeat=len(vs)):
                if bits in present:
                    continue
                assign = dict(zip(vs, bits))
                cpos = _violated_constraint(xbg, enc, assign)
                e_idx, fbits = enc.origin[cpos]
                i, j, l, _ = xbg.system.equations[e_idx]
                rest = {w: b for w, b in assign.items() if w not in (i, j, l)}
                rest_ind = indicator_of_assignment(
                    {enc.var_of[w]: b for w, b in rest.items()}
                )
                eqs.append((-rest_ind, cpos))
            br = SosCertificate.build(
                enc.constraints,
                equality=eqs,
                target=PolynomialConstraint(image, Relation.EQ0),
            )
            check_certificate(enc.constraints, br)
            bridges[pos] = br
        else:
            vs = sorted(cons.poly.variables())
            u_lab = label_of_pos[vs[0].tag[2]]
            v_lab = label_of_pos[vs[1].tag[2]]
            bridges[pos] = derive_block_bridge(xbg, enc, u_lab, v_lab)

    return substitute_certificate(cert, sigma, bridges, target_system=enc.constraints)


# ---------------------------------------------------------------------------
# Certificate JSON
# ---------------------------------------------------------------------------


def cert_to_json(cert: SosCertificate) -> dict:
    extra_vars = set()
    for g, _ in cert.equality_terms:
        extra_vars |= g.variables()
    for u, _ in cert.inequality_terms:
        for _, q in u:
            extra_vars |= q.variables()
    for _, q in cert.free_term:
        extra_vars |= q.variables()
    extra_vars |= cert.target.poly.variables()
    sys_json = constraints_to_json(list(cert.system))
    names = {v["name"] for v in sys_json["vars"]}
    for v in sorted(extra_vars):
        if v.name not in names:
            sys_json["vars"].append({"name": v.name, "domain": v.domain_index})
    return {
        "system": sys_json,
        "equality": [{"g": g.to_text(), "f": i} for g, i in cert.equality_terms],
        "inequality": [
            {
                "q": [q.to_text() for _, q in u],
                "w": [str(w) for w, _ in u],
                "h": j,
            }
            for u, j in cert.inequality_terms
        ],
        "free": {
            "q": [q.to_text() for _, q in cert.free_term],
            "w": [str(w) for w, _ in cert.free_term],
        },
        "target": cert.target.poly.to_text(),
        "target_rel": cert.target.relation.value,
    }


def cert_from_json(data: dict) -> SosCertificate:
    system, sp = constraints_from_json(data["system"])

    def squares(entry):
        qs = [parse_poly(t, sp) for t in entry.get("q", [])]
        ws = [Fraction(w) for w in entry.get("w", ["1"] * len(qs))]
        return SquareSum(list(zip(ws, qs)))

    equality = [(parse_poly(e["g"], sp), e["f"]) for e in data.get("equality", [])]
    inequality = [(squares(e), e["h"]) for e in data.get("inequality", [])]
    free = squares(data.get("free", {}))
    target = PolynomialConstraint(
        parse_poly(data["target"], sp), Relation(data.get("target_rel", "ge0"))
    )
    return SosCertificate.build(system, equality, inequality, free, target)
