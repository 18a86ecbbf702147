"""Degree-d SOS refutation search as a small dense semidefinite feasibility
problem over certificate coefficients.

The identity  -1 = sum_i g_i f_i + sum_j u_j h_j + u_0  becomes a linear
system in the g coefficients and the Gram-matrix entries of each u (one PSD
block per inequality plus one for u_0, bases capped at floor((d - deg h)/2)).
Solving alternates projections between the affine solution set and the PSD
cone (the paper treats the SDP itself as a black box); infeasibility evidence
is a dual vector y acting as a pseudo-expectation on monomials: y is
orthogonal to every g column, its localizing matrices are PSD, and it gives
the target -1 a negative value.  `Unknown` is a first-class outcome: numeric
failure never masquerades as a mathematical conclusion.

Exact certificates are recovered by bounded-denominator rounding of the Gram
blocks, a rational LDL^T split into weighted squares, and an exact rational
re-solve of the leftover linear system in the g coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .algebra import Poly, PolynomialConstraint, Relation
from .sos import (
    CertificateError,
    SosCertificate,
    SquareSum,
    check_certificate,
)

DEFAULT_TOL_EQ = 1e-8
DEFAULT_TOL_PSD = 1e-8
MAX_BASIS = 4000


class ExtractionError(ValueError):
    pass


@dataclass
class GramBlock:
    constraint: Optional[int]  # None for the free block u_0
    basis: list  # monomials (tuples of VarId)

    @property
    def n(self) -> int:
        return len(self.basis)

    @property
    def packed(self) -> int:
        return self.n * (self.n + 1) // 2


@dataclass
class CoefficientSystem:
    constraints: list
    degree: int
    basis: list                  # row monomials, degree <= d
    row_index: dict
    g_slots: list                # (constraint index, multiplier monomial)
    blocks: list                 # GramBlock, last one is u_0
    a_mat: np.ndarray            # rows x cols, float
    a_exact: list                # per column, {row: Fraction}
    c_exact: dict                # {row: Fraction}
    c_vec: np.ndarray
    target: PolynomialConstraint

    @property
    def n_cols(self) -> int:
        return self.a_mat.shape[1]

    @property
    def n_g(self) -> int:
        return len(self.g_slots)

    def block_offsets(self):
        off = self.n_g
        for blk in self.blocks:
            yield off, blk
            off += blk.packed


def _monomials_up_to(variables, limit: int):
    out = [()]
    for size in range(1, limit + 1):
        out.extend(itertools.combinations(variables, size))
    return out


def build_coefficient_system(
    constraints: Sequence[PolynomialConstraint],
    degree: int,
    target: Optional[PolynomialConstraint] = None,
) -> CoefficientSystem:
    """Assemble the exact linear map from certificate coefficients to the
    coefficient vector of the identity's left-hand side.

    Constraints whose degree exceeds the cap simply receive no multiplier,
    matching level-d of the hierarchy (so probing below the maximum
    constraint degree is allowed)."""
    if degree < 1:
        raise ValueError("degree cap must be >= 1")
    constraints = list(constraints)
    if target is None:
        target = PolynomialConstraint(Poly.const(-1), Relation.GE0)
    variables = sorted({v for c in constraints for v in c.poly.variables()})
    nbasis = sum(math.comb(len(variables), i) for i in range(min(degree, len(variables)) + 1))
    if nbasis > MAX_BASIS:
        raise ValueError("basis of %d monomials is beyond desk scale" % nbasis)
    basis = _monomials_up_to(variables, min(degree, len(variables)))
    row_index = {mono: r for r, mono in enumerate(basis)}

    g_slots = []
    blocks = []
    for idx, cons in enumerate(constraints):
        room = degree - cons.poly.degree
        if room < 0:
            continue
        if cons.relation is Relation.EQ0:
            for mono in _monomials_up_to(variables, min(room, len(variables))):
                g_slots.append((idx, mono))
        else:
            blocks.append(
                GramBlock(idx, _monomials_up_to(variables, min(room // 2, len(variables))))
            )
    blocks.append(GramBlock(None, _monomials_up_to(variables, degree // 2)))

    a_exact = []
    for idx, mono in g_slots:
        prod = Poly({mono: Fraction(1)}) * constraints[idx].poly
        a_exact.append({row_index[m]: c for m, c in prod.terms.items()})
    for blk in blocks:
        h = Poly.one() if blk.constraint is None else constraints[blk.constraint].poly
        for p in range(blk.n):
            bp = Poly({blk.basis[p]: Fraction(1)})
            for q in range(p, blk.n):
                prod = bp * Poly({blk.basis[q]: Fraction(1)}) * h
                if p != q:
                    prod = prod * 2
                a_exact.append({row_index[m]: c for m, c in prod.terms.items()})

    a_mat = np.zeros((len(basis), len(a_exact)))
    for col, coldict in enumerate(a_exact):
        for row, c in coldict.items():
            a_mat[row, col] = float(c)
    c_exact = {row_index[m]: c for m, c in target.poly.terms.items()}
    c_vec = np.zeros(len(basis))
    for row, c in c_exact.items():
        c_vec[row] = float(c)
    return CoefficientSystem(
        constraints=constraints,
        degree=degree,
        basis=basis,
        row_index=row_index,
        g_slots=g_slots,
        blocks=blocks,
        a_mat=a_mat,
        a_exact=a_exact,
        c_exact=c_exact,
        c_vec=c_vec,
        target=target,
    )


@dataclass
class SdpOutcome:
    status: str  # "Feasible" | "Infeasible" | "Unknown"
    degree: int
    residual: float = float("inf")
    min_eigs: tuple = ()
    g_values: Optional[np.ndarray] = None
    gram: Optional[list] = None  # full symmetric matrices, per block
    evidence: Optional[np.ndarray] = None
    evidence_margin: float = 0.0
    exact_g: Optional[list] = None  # Fractions for the g slots, if found exactly
    iterations: int = 0

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "degree": self.degree,
            "residual": self.residual if self.residual != float("inf") else None,
            "min_eigs": [float(e) for e in self.min_eigs],
            "iterations": self.iterations,
        }
        if self.evidence is not None:
            out["evidence"] = [float(y) for y in self.evidence]
            out["evidence_margin"] = self.evidence_margin
        return out


# ---------------------------------------------------------------------------
# Exact rational linear algebra (small dense systems)
# ---------------------------------------------------------------------------


def solve_exact(columns: list, rhs: dict, nrows: int) -> Optional[list]:
    """Solve sum_j x_j * col_j = rhs over the rationals; None if inconsistent.
    Free variables are set to zero."""
    ncols = len(columns)
    mat = [[Fraction(0)] * (ncols + 1) for _ in range(nrows)]
    for j, col in enumerate(columns):
        for r, c in col.items():
            mat[r][j] = c
    for r, c in rhs.items():
        mat[r][ncols] = c
    pivots = []
    row = 0
    for col in range(ncols):
        piv = next((r for r in range(row, nrows) if mat[r][col] != 0), None)
        if piv is None:
            continue
        mat[row], mat[piv] = mat[piv], mat[row]
        inv = Fraction(1) / mat[row][col]
        mat[row] = [x * inv for x in mat[row]]
        for r in range(nrows):
            if r != row and mat[r][col] != 0:
                f = mat[r][col]
                mat[r] = [a - f * b for a, b in zip(mat[r], mat[row])]
        pivots.append((row, col))
        row += 1
        if row == nrows:
            break
    for r in range(row, nrows):
        if mat[r][ncols] != 0:
            return None
    sol = [Fraction(0)] * ncols
    for r, col in pivots:
        sol[col] = mat[r][ncols]
    return sol


def ldl_rational(q: list) -> Optional[tuple]:
    """LDL^T of a rational symmetric matrix; None unless PSD.  A zero pivot
    is accepted only when its whole column is zero (true of any PSD matrix)."""
    n = len(q)
    lmat = [[Fraction(0)] * n for _ in range(n)]
    d = [Fraction(0)] * n
    for j in range(n):
        acc = q[j][j] - sum(d[t] * lmat[j][t] * lmat[j][t] for t in range(j))
        if acc < 0:
            return None
        d[j] = acc
        lmat[j][j] = Fraction(1)
        for i in range(j + 1, n):
            val = q[i][j] - sum(d[t] * lmat[i][t] * lmat[j][t] for t in range(j))
            if acc == 0:
                if val != 0:
                    return None
                lmat[i][j] = Fraction(0)
            else:
                lmat[i][j] = val / acc
    return lmat, d


# ---------------------------------------------------------------------------
# Projections
# ---------------------------------------------------------------------------


def _unpack(packed: np.ndarray, n: int) -> np.ndarray:
    full = np.zeros((n, n))
    t = 0
    for p in range(n):
        for q in range(p, n):
            full[p, q] = packed[t]
            full[q, p] = packed[t]
            t += 1
    return full


def _pack(full: np.ndarray) -> np.ndarray:
    n = full.shape[0]
    out = np.zeros(n * (n + 1) // 2)
    t = 0
    for p in range(n):
        for q in range(p, n):
            out[t] = full[p, q]
            t += 1
    return out


def _psd_clip(full: np.ndarray) -> tuple:
    full = 0.5 * (full + full.T)
    w, v = np.linalg.eigh(full)
    clipped = v @ np.diag(np.maximum(w, 0.0)) @ v.T
    return 0.5 * (clipped + clipped.T), float(w.min()) if len(w) else 0.0


def _project_psd_blocks(cs: CoefficientSystem, x: np.ndarray) -> tuple:
    x = x.copy()
    min_eigs = []
    for off, blk in cs.block_offsets():
        if blk.n == 0:
            min_eigs.append(0.0)
            continue
        full = _unpack(x[off : off + blk.packed], blk.n)
        clipped, me = _psd_clip(full)
        x[off : off + blk.packed] = _pack(clipped)
        min_eigs.append(me)
    return x, min_eigs


# ---------------------------------------------------------------------------
# Feasibility solve
# ---------------------------------------------------------------------------


def _try_exact_linear(cs: CoefficientSystem) -> Optional[list]:
    if not cs.g_slots:
        return None
    cols = cs.a_exact[: cs.n_g]
    return solve_exact(cols, cs.c_exact, len(cs.basis))


def _dual_search(cs: CoefficientSystem, tol_psd: float, max_iters: int):
    """Projections in the product space (y, localizing matrices): the affine
    part ties each matrix to y and pins A_g^T y = 0, c^T y = -1."""
    nrows = len(cs.basis)
    block_cols = []
    for blk in cs.blocks:
        h = Poly.one() if blk.constraint is None else cs.constraints[blk.constraint].poly
        cols = []
        for p in range(blk.n):
            bp = Poly({blk.basis[p]: Fraction(1)})
            for q in range(p, blk.n):
                prod = bp * Poly({blk.basis[q]: Fraction(1)}) * h
                col = np.zeros(nrows)
                for m, c in prod.terms.items():
                    col[cs.row_index[m]] = float(c)
                cols.append(col)
        block_cols.append(cols)

    packed_total = sum(blk.packed for blk in cs.blocks)
    nvars = nrows + packed_total
    eqs = []
    rhs = []
    for j in range(cs.n_g):
        row = np.zeros(nvars)
        row[:nrows] = cs.a_mat[:, j]
        eqs.append(row)
        rhs.append(0.0)
    row = np.zeros(nvars)
    row[:nrows] = cs.c_vec
    eqs.append(row)
    rhs.append(-1.0)
    off = nrows
    for blk, cols in zip(cs.blocks, block_cols):
        for t, col in enumerate(cols):
            row = np.zeros(nvars)
            row[:nrows] = -col
            row[off + t] = 1.0
            eqs.append(row)
            rhs.append(0.0)
        off += blk.packed
    emat = np.array(eqs)
    erhs = np.array(rhs)
    pinv = np.linalg.pinv(emat)

    w = pinv @ erhs
    for it in range(max_iters):
        w = w - pinv @ (emat @ w - erhs)
        off = nrows
        worst = 0.0
        for blk in cs.blocks:
            if blk.n:
                full = _unpack(w[off : off + blk.packed], blk.n)
                clipped, me = _psd_clip(full)
                w[off : off + blk.packed] = _pack(clipped)
                worst = min(worst, me)
            off += blk.packed
        if it % 10 == 0 or it == max_iters - 1:
            y = w[:nrows].copy()
            ortho = (
                float(np.abs(cs.a_mat[:, : cs.n_g].T @ y).max()) if cs.n_g else 0.0
            )
            margin = float(cs.c_vec @ y)
            eigs = []
            for cols, blk in zip(block_cols, cs.blocks):
                if blk.n == 0:
                    continue
                loc = np.zeros((blk.n, blk.n))
                t = 0
                for p in range(blk.n):
                    for q in range(p, blk.n):
                        loc[p, q] = loc[q, p] = cols[t] @ y
                        t += 1
                eigs.append(float(np.linalg.eigvalsh(loc).min()))
            scale = max(1.0, float(np.abs(y).max()))
            if (
                margin <= -0.5
                and ortho <= 1e-6 * scale
                and all(e >= -tol_psd * scale for e in eigs)
            ):
                return y, margin, it + 1
    return None, 0.0, max_iters


def solve_feasibility(
    cs: CoefficientSystem,
    tol_eq: float = DEFAULT_TOL_EQ,
    tol_psd: float = DEFAULT_TOL_PSD,
    max_iters: int = 20000,
) -> SdpOutcome:
    """Feasible with a witness, Infeasible with dual evidence, or Unknown."""
    exact = _try_exact_linear(cs)
    if exact is not None:
        g = np.array([float(v) for v in exact])
        return SdpOutcome(
            status="Feasible",
            degree=cs.degree,
            residual=0.0,
            min_eigs=tuple(0.0 for _ in cs.blocks),
            g_values=g,
            gram=[np.zeros((blk.n, blk.n)) for blk in cs.blocks],
            exact_g=exact,
        )

    pinv = np.linalg.pinv(cs.a_mat)
    x = pinv @ cs.c_vec
    base_residual = float(np.abs(cs.a_mat @ x - cs.c_vec).max())
    if base_residual > 1e-7 * max(1.0, float(np.abs(cs.c_vec).max())):
        # even the unconstrained linear system is unsolvable: the least-squares
        # residual r satisfies A^T r = 0 and r . c < 0, so it is dual evidence
        r = cs.a_mat @ x - cs.c_vec
        return SdpOutcome(
            status="Infeasible",
            degree=cs.degree,
            evidence=r,
            evidence_margin=float(cs.c_vec @ r),
        )

    best = float("inf")
    since_best = 0
    it = 0
    while it < max_iters:
        x = x - pinv @ (cs.a_mat @ x - cs.c_vec)
        x, min_eigs = _project_psd_blocks(cs, x)
        it += 1
        if it % 5 == 0 or it == 1:
            residual = float(np.abs(cs.a_mat @ x - cs.c_vec).max())
            if residual <= tol_eq:
                return SdpOutcome(
                    status="Feasible",
                    degree=cs.degree,
                    residual=residual,
                    min_eigs=tuple(min_eigs),
                    g_values=x[: cs.n_g].copy(),
                    gram=[
                        _unpack(x[off : off + blk.packed], blk.n)
                        for off, blk in cs.block_offsets()
                    ],
                    iterations=it,
                )
            if residual < best - 1e-14:
                best = residual
                since_best = 0
            else:
                since_best += 5
                if since_best >= 400:
                    break

    y, margin, dual_iters = _dual_search(cs, tol_psd, max_iters)
    if y is not None:
        return SdpOutcome(
            status="Infeasible",
            degree=cs.degree,
            evidence=y,
            evidence_margin=margin,
            iterations=it + dual_iters,
        )
    return SdpOutcome(status="Unknown", degree=cs.degree, residual=best, iterations=it)


def verify_evidence(cs: CoefficientSystem, outcome: SdpOutcome, tol_psd: float = DEFAULT_TOL_PSD):
    """Numeric check of Infeasible evidence: nonnegative on the feasible cone
    (orthogonal to g columns, PSD-compatible localizing blocks) and negative
    on the target."""
    y = outcome.evidence
    if y is None:
        raise ValueError("outcome carries no evidence")
    scale = max(1.0, float(np.abs(y).max()))
    ortho = float(np.abs(cs.a_mat[:, : cs.n_g].T @ y).max()) if cs.n_g else 0.0
    eigs = []
    for off, blk in cs.block_offsets():
        if blk.n == 0:
            continue
        loc = np.zeros((blk.n, blk.n))
        t = 0
        for p in range(blk.n):
            bp = Poly({blk.basis[p]: Fraction(1)})
            for q in range(p, blk.n):
                h = Poly.one() if blk.constraint is None else cs.constraints[blk.constraint].poly
                prod = bp * Poly({blk.basis[q]: Fraction(1)}) * h
                val = sum(float(c) * y[cs.row_index[m]] for m, c in prod.terms.items())
                loc[p, q] = loc[q, p] = val
                t += 1
        eigs.append(float(np.linalg.eigvalsh(loc).min()))
    margin = float(cs.c_vec @ y)
    ok = margin < 0 and ortho <= 1e-5 * scale and all(e >= -tol_psd * scale for e in eigs)
    return ok, {"margin": margin, "ortho": ortho, "min_eigs": eigs}


# ---------------------------------------------------------------------------
# Exact certificate extraction
# ---------------------------------------------------------------------------


def _g_polys(cs: CoefficientSystem, values: Sequence[Fraction]) -> list:
    per_cons: dict = {}
    for (idx, mono), val in zip(cs.g_slots, values):
        if val == 0:
            continue
        per_cons.setdefault(idx, []).append((mono, val))
    out = []
    for idx in sorted(per_cons):
        out.append((Poly.from_terms(per_cons[idx]), idx))
    return out


DENOMINATOR_LADDER = (1, 4, 32, 1024, 10**5, 10**8)


def extract_exact(outcome: SdpOutcome, cs: CoefficientSystem) -> SosCertificate:
    """Turn a Feasible outcome into a checker-accepted exact certificate:
    round the Gram blocks at bounded denominator, split them into weighted
    squares by rational LDL^T, then re-solve the remaining linear part of the
    identity exactly in the g coefficients."""
    if outcome.status != "Feasible":
        raise ExtractionError("outcome status is %s, not Feasible" % outcome.status)
    system = list(cs.constraints)

    if outcome.exact_g is not None:
        cert = SosCertificate.build(
            system, equality=_g_polys(cs, outcome.exact_g), target=cs.target
        )
        check_certificate(system, cert)
        return cert

    for bound in DENOMINATOR_LADDER:
        grams = []
        ok = True
        for full, blk in zip(outcome.gram, cs.blocks):
            if blk.n == 0:
                grams.append(([], []))
                continue
            clipped, _ = _psd_clip(full)
            qr = [
                [Fraction(clipped[p, q]).limit_denominator(bound) for q in range(blk.n)]
                for p in range(blk.n)
            ]
            for p in range(blk.n):
                for q in range(p):
                    qr[p][q] = qr[q][p]
            ldl = ldl_rational(qr)
            if ldl is None:
                ok = False
                break
            grams.append(ldl)
        if not ok:
            continue

        total = Poly.zero()
        square_sums = []
        for (lmat, d), blk in zip(grams, cs.blocks):
            entries = []
            for t in range(blk.n):
                if d[t] == 0:
                    continue
                gen = Poly.from_terms(
                    (blk.basis[p], lmat[p][t]) for p in range(blk.n)
                )
                entries.append((d[t], gen))
            ss = SquareSum(entries)
            square_sums.append((ss, blk.constraint))
            h = Poly.one() if blk.constraint is None else system[blk.constraint].poly
            total = total + ss.expand() * h

        rhs_poly = cs.target.poly - total
        rhs = {}
        for m, c in rhs_poly.terms.items():
            row = cs.row_index.get(m)
            if row is None:
                rhs = None
                break
            rhs[row] = c
        if rhs is None:
            continue
        gvals = solve_exact(cs.a_exact[: cs.n_g], rhs, len(cs.basis))
        if gvals is None:
            continue

        inequality = [(ss, idx) for ss, idx in square_sums if idx is not None and ss]
        free = next((ss for ss, idx in square_sums if idx is None), SquareSum.zero())
        cert = SosCertificate.build(
            system,
            equality=_g_polys(cs, gvals),
            inequality=inequality,
            free=free,
            target=cs.target,
        )
        try:
            check_certificate(system, cert)
        except CertificateError:
            continue
        return cert
    raise ExtractionError(
        "rationalization failed at denominator bound %d" % DENOMINATOR_LADDER[-1]
    )


# ---------------------------------------------------------------------------
# Minimum-degree search
# ---------------------------------------------------------------------------


@dataclass
class MinDegreeResult:
    found: bool
    degree: Optional[int]
    d_max: int
    outcomes: dict
    certificate: Optional[SosCertificate] = None
    numeric_only: bool = False

    def __str__(self):
        if not self.found:
            return "NotFoundBelow(%d)" % (self.d_max + 1)
        flag = " (numeric only)" if self.numeric_only else ""
        return "min degree %d%s" % (self.degree, flag)


def min_degree(
    constraints: Sequence[PolynomialConstraint],
    d_max: int,
    tol_eq: float = DEFAULT_TOL_EQ,
    tol_psd: float = DEFAULT_TOL_PSD,
    max_iters: int = 20000,
) -> MinDegreeResult:
    """Smallest d <= d_max at which the degree-d refutation search is
    Feasible, confirmed by exact extraction whenever rationalization
    succeeds."""
    outcomes = {}
    for d in range(1, d_max + 1):
        cs = build_coefficient_system(constraints, d)
        outcome = solve_feasibility(cs, tol_eq, tol_psd, max_iters)
        outcomes[d] = outcome
        if outcome.status == "Feasible":
            try:
                cert = extract_exact(outcome, cs)
                return MinDegreeResult(True, d, d_max, outcomes, cert, False)
            except ExtractionError:
                return MinDegreeResult(True, d, d_max, outcomes, None, True)
    return MinDegreeResult(False, None, d_max, outcomes)
