"""Vectorized exhaustive 0/1 sweeps at desk scale; the independent oracle the
test suite uses to cross-check accepted refutations and certificates."""

from __future__ import annotations

import numpy as np

from .algebra import Poly, PolynomialConstraint, Relation
from .formulas import CnfFormula

MAX_SWEEP_VARS = 22


def _var_columns(variables, nbits: int):
    idx = np.arange(1 << nbits, dtype=np.uint32)
    return {v: ((idx >> i) & 1).astype(np.int64) for i, v in enumerate(variables)}


def formula_satisfiable(formula: CnfFormula):
    """Exhaustively search for a satisfying assignment; returns one as a
    dict or None.  Limited to MAX_SWEEP_VARS variables."""
    variables = formula.variables()
    n = len(variables)
    if n > MAX_SWEEP_VARS:
        raise ValueError("formula has %d variables; sweep limit is %d" % (n, MAX_SWEEP_VARS))
    cols = _var_columns(variables, n)
    ok = np.ones(1 << n, dtype=bool)
    for clause in formula.clauses:
        sat = np.zeros(1 << n, dtype=bool)
        for v, pol in clause.literals:
            sat |= cols[v] == (1 if pol else 0)
        ok &= sat
        if not ok.any():
            return None
    hits = np.flatnonzero(ok)
    if len(hits) == 0:
        return None
    a = int(hits[0])
    return {v: (a >> i) & 1 for i, v in enumerate(variables)}


def _eval_poly_vector(poly: Poly, cols, n: int):
    total = np.zeros(1 << n, dtype=np.int64)
    for mono, c in poly.terms.items():
        if c.denominator != 1:
            raise ValueError("integer-coefficient sweep only")
        term = np.ones(1 << n, dtype=np.int64)
        for v in mono:
            term = term * cols[v]
        total += int(c) * term
    return total


def system_feasible(constraints):
    """Exhaustively search for a 0/1 point satisfying every constraint;
    returns one as a dict or None.  Integer coefficients only."""
    variables = sorted({v for c in constraints for v in c.poly.variables()})
    n = len(variables)
    if n > MAX_SWEEP_VARS:
        raise ValueError("system has %d variables; sweep limit is %d" % (n, MAX_SWEEP_VARS))
    cols = _var_columns(variables, n)
    ok = np.ones(1 << n, dtype=bool)
    for cons in constraints:
        val = _eval_poly_vector(cons.poly, cols, n)
        ok &= (val == 0) if cons.relation is Relation.EQ0 else (val >= 0)
        if not ok.any():
            return None
    hits = np.flatnonzero(ok)
    if len(hits) == 0:
        return None
    a = int(hits[0])
    return {v: (a >> i) & 1 for i, v in enumerate(variables)}
