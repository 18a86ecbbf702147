"""Random restrictions for relativized formulas: the sampling distribution,
application to formulas, the recovers-the-base-formula check, the monomial
shrinkage experiment, and the union-bound size calculator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional

import numpy as np
from scipy.stats import chi2

from .algebra import VariableSpace, VarId
from .formulas import CnfFormula, rename_clause, threshold_extension


@dataclass(frozen=True)
class Restriction:
    """Partial assignment from the relativization distribution: a surviving
    k-subset D of [m] with s, THR-extension, and non-survivor variables set."""

    survivors: tuple
    assignments: dict
    k: int
    m: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignments", dict(self.assignments))


def sample_restriction(rel: CnfFormula, seed: int) -> Restriction:
    """Sample the five-step distribution: a uniform k-subset D of [m], the
    selectors forced accordingly, the canonical THR extension, uniform bits
    for every domain variable whose index is outside D, survivors unset."""
    meta = rel.meta
    if meta.get("family") != "relativized" or "k" not in meta or "m" not in meta:
        raise ValueError("formula lacks relativization metadata")
    k, m = meta["k"], meta["m"]
    rng = np.random.Generator(np.random.PCG64(seed))
    survivors = tuple(sorted(int(i) + 1 for i in rng.choice(m, size=k, replace=False)))
    inside = set(survivors)
    assignments: dict = {}
    for i in range(1, m + 1):
        assignments[rel.space.var("s", i, domain=i)] = 1 if i in inside else 0
    assignments.update(threshold_extension(k, m, survivors, rel.space))
    for v in rel.space:
        if v.kind in ("s", "p", "y"):
            continue
        if v.domain_index is not None and v.domain_index not in inside:
            assignments[v] = int(rng.integers(2))
    return Restriction(survivors, assignments, k, m, seed)


def apply_restriction(rel: CnfFormula, rho: Restriction) -> CnfFormula:
    """Standard clause restriction: satisfied clauses removed, falsified
    literals dropped."""
    return rel.restrict(rho.assignments)


@dataclass(frozen=True)
class RecoveryResult:
    ok: bool
    domain_map: dict
    variable_map: dict = field(default_factory=dict)
    counterexample: Optional[object] = None

    def to_json(self) -> dict:
        out = {"ok": self.ok, "domain_map": {str(a): b for a, b in self.domain_map.items()}}
        if self.ok:
            out["variable_map"] = dict(sorted(self.variable_map.items()))
        else:
            out["counterexample"] = repr(self.counterexample)
        return out


def check_recovers_base(rel: CnfFormula, rho: Restriction, base: CnfFormula) -> RecoveryResult:
    """Check that rel|rho equals the base formula up to renaming the surviving
    domain D onto the base's domain; returns the realizing renaming or a
    counterexample clause."""
    restricted = apply_restriction(rel, rho)
    base_domain = sorted(
        {v.domain_index for v in base.variables() if v.domain_index is not None}
    )
    if len(base_domain) != len(rho.survivors):
        return RecoveryResult(False, {}, counterexample="domain size mismatch")
    mapping = dict(zip(rho.survivors, base_domain))
    sp = VariableSpace()
    renamed = frozenset(rename_clause(c, mapping, sp) for c in restricted.clauses)
    if renamed == base.clauses:
        var_map = {}
        for c in restricted.clauses:
            for v in c.variables():
                if v.domain_index is None:
                    var_map[v.name] = v.name
                else:
                    nd = mapping[v.domain_index]
                    var_map[v.name] = VarId((v.kind, nd, *v.tag[2:]), nd).name
        return RecoveryResult(True, mapping, var_map)
    missing = base.clauses - renamed
    extra = renamed - base.clauses
    witness = next(iter(extra or missing))
    return RecoveryResult(False, mapping, counterexample=witness)


# ---------------------------------------------------------------------------
# Shrinkage
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ShrinkageReport:
    m: int
    k: int
    ell: int
    ell_prime: int
    trials: int
    survived: int
    empirical_survival: float
    tail_bound: Fraction          # 1/m^ell branch
    union_bound: Fraction         # combinatorial branch at this ell_prime
    applicable_branch: str
    survivor_counts: tuple        # per domain element, over all trials
    regime_ok: bool               # k <= m / (4 log2 m)

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "k": self.k,
            "ell": self.ell,
            "ell_prime": self.ell_prime,
            "trials": self.trials,
            "survived": self.survived,
            "empirical_survival": self.empirical_survival,
            "bound_components": {
                "tail": str(self.tail_bound),
                "union": str(self.union_bound),
                "applicable": self.applicable_branch,
            },
            "survivor_counts": list(self.survivor_counts),
            "regime_ok": self.regime_ok,
        }


def _union_branch(m: int, k: int, ell: int, ell_prime: int) -> Fraction:
    if ell_prime < ell or k < ell:
        return Fraction(0)
    val = Fraction(
        math.comb(ell_prime, ell) * math.comb(m - ell, k - ell), math.comb(m, k)
    )
    return min(val, Fraction(1))


def _tail_applies(m: int, k: int, ell: int, ell_prime: int) -> bool:
    # the restriction sets at least ell_prime - k variables at random;
    # survival probability <= 2^-(ell_prime - k) < m^-ell in this regime
    return ell_prime > k and 2 ** (ell_prime - k) > m**ell


def shrinkage_experiment(
    m: int, k: int, ell: int, ell_prime: int, trials: int, seed: int = 0
) -> ShrinkageReport:
    """Sample worst-case monomials (one variable per domain element, ell_prime
    elements), hit them with restrictions, and report the empirical frequency
    of restricted domain-degree >= ell next to the two analytic branches."""
    if m < 16:
        raise ValueError("need m >= 16")
    if not (1 <= ell <= k <= m):
        raise ValueError("need 1 <= ell <= k <= m")
    if not (0 <= ell_prime <= m):
        raise ValueError("need 0 <= ell_prime <= m")
    if trials < 1:
        raise ValueError("need at least one trial")
    regime_ok = k <= m / (4 * math.log2(m))
    rng = np.random.Generator(np.random.PCG64(seed))
    survived = 0
    counts = np.zeros(m, dtype=np.int64)
    for _ in range(trials):
        d = rng.choice(m, size=k, replace=False)
        counts[d] += 1
        idx = rng.choice(m, size=ell_prime, replace=False)
        dset = set(int(x) for x in d)
        unset = sum(1 for x in idx if int(x) in dset)
        assigned = ell_prime - unset
        if unset < ell:
            continue
        # a random bit kills the monomial's variable unless it draws 1
        if assigned and not np.all(rng.integers(2, size=assigned) == 1):
            continue
        survived += 1
    tail = Fraction(1, m**ell)
    union = _union_branch(m, k, ell, ell_prime)
    branch = "tail" if _tail_applies(m, k, ell, ell_prime) else "union"
    return ShrinkageReport(
        m=m,
        k=k,
        ell=ell,
        ell_prime=ell_prime,
        trials=trials,
        survived=survived,
        empirical_survival=survived / trials,
        tail_bound=tail,
        union_bound=union,
        applicable_branch=branch,
        survivor_counts=tuple(int(c) for c in counts),
        regime_ok=regime_ok,
    )


def survivor_uniformity_pvalue(counts, trials: int, k: int, m: int) -> float:
    """Chi-square test of the per-element survival marginal against the
    uniform k-subset distribution.  Each draw places exactly k survivors, so
    the Pearson statistic is rescaled by (m-1)/(m-k) before comparing with a
    chi-square on m-1 degrees of freedom."""
    counts = np.asarray(counts, dtype=float)
    expected = trials * k / m
    raw = float(np.sum((counts - expected) ** 2) / expected)
    adjusted = raw * (m - 1) / (m - k)
    return float(chi2.sf(adjusted, df=m - 1))


# ---------------------------------------------------------------------------
# Size lower bound from the shrinkage bound
# ---------------------------------------------------------------------------


def default_bound_fn(m: int, k: int, ell: int) -> Fraction:
    """Proof-sketch composite: the worst over monomial domain-degrees of the
    tail branch 1/m^ell and the union branch at the largest domain-degree
    still below the tail regime, clipped to 1."""
    tail = Fraction(1, m**ell)
    lp = k
    while lp + 1 <= m and not _tail_applies(m, k, ell, lp + 1):
        lp += 1
    union = _union_branch(m, k, ell, min(lp, m))
    return min(Fraction(1), max(tail, union))


def size_lower_bound(
    m: int, k: int, ell: int, bound_fn: Optional[Callable] = None
) -> Fraction:
    """1 / bound_fn(m, k, ell): no SOS refutation of the relativized formula
    can have fewer monomials, else a union bound over its monomials would
    contradict the base formula's domain-degree lower bound."""
    fn = bound_fn if bound_fn is not None else default_bound_fn
    val = Fraction(fn(m, k, ell))
    if val <= 0 or val > 1:
        raise ValueError("bound_fn must return a probability in (0, 1], got %s" % val)
    return Fraction(1) / val
