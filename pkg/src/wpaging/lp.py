"""Covering LPs ``min c.x  s.t.  sum_{v in row} x_v >= h_row,  0 <= x <= 1``.

The exact solver runs Bland's-rule simplex on the dual packing problem in
rational arithmetic.  The dual's slack basis is feasible from the start, so
there is no phase one, and the primal solution read off the final tableau
certifies optimality.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class LpSolution:
    value: Fraction
    x: tuple[Fraction, ...]
    y: tuple[Fraction, ...]  # multipliers of the covering rows


def covering_lp_exact(costs: Sequence, rows: Sequence[Sequence[int]], rhs: Sequence[int],
                      max_pivots: int = 100_000) -> LpSolution:
    nv, nr = len(costs), len(rows)
    if nr == 0:
        return LpSolution(Fraction(0), tuple(Fraction(0) for _ in costs), ())
    # dual: max h.y - 1.z   s.t.  G^T y - z + s = c,  y, z, s >= 0
    # columns: y_0..y_{nr-1}, z_0..z_{nv-1}, s_0..s_{nv-1}
    ncol = nr + 2 * nv
    tab = []
    for v in range(nv):
        row = [Fraction(0)] * (ncol + 1)
        row[nr + v] = Fraction(-1)
        row[nr + nv + v] = Fraction(1)
        row[ncol] = Fraction(costs[v])
        tab.append(row)
    for r, members in enumerate(rows):
        for v in members:
            tab[v][r] += 1
    obj = [Fraction(h) for h in rhs] + [Fraction(-1)] * nv + [Fraction(0)] * nv
    basis = [nr + nv + v for v in range(nv)]
    # reduced costs d_j = obj_j - sum_r obj[basis_r] * tab[r][j]
    red = obj[:] + [Fraction(0)]

    for _ in range(max_pivots):
        enter = next((j for j in range(ncol) if red[j] > 0), None)
        if enter is None:
            break
        leave, best = None, None
        for r in range(nv):
            a = tab[r][enter]
            if a > 0:
                ratio = tab[r][ncol] / a
                if best is None or ratio < best or (ratio == best and basis[r] < basis[leave]):
                    leave, best = r, ratio
        if leave is None:
            raise SolverError("dual unbounded: covering LP infeasible")
        prow = tab[leave]
        piv = prow[enter]
        if piv != 1:
            prow = [a / piv for a in prow]
            tab[leave] = prow
        nz = [j for j, a in enumerate(prow) if a]
        for r in range(nv):
            if r != leave:
                f = tab[r][enter]
                if f:
                    row = tab[r]
                    for j in nz:
                        row[j] -= f * prow[j]
        f = red[enter]
        for j in nz:
            red[j] -= f * prow[j]
        basis[leave] = enter
    else:
        raise SolverError("pivot limit reached")

    value = -red[ncol]
    x = tuple(-red[nr + nv + v] for v in range(nv))
    y = [Fraction(0)] * nr
    for r, b in enumerate(basis):
        if b < nr:
            y[b] = tab[r][ncol]
    _certify(costs, rows, rhs, x, value)
    return LpSolution(value, x, tuple(y))


def _certify(costs, rows, rhs, x, value) -> None:
    if any(xi < 0 or xi > 1 for xi in x):
        raise SolverError("primal solution out of bounds")
    for members, h in zip(rows, rhs):
        if sum(x[v] for v in members) < h:
            raise SolverError("primal solution violates a covering row")
    if sum(Fraction(c) * xi for c, xi in zip(costs, x)) != value:
        raise SolverError("duality gap: primal and dual values differ")


def covering_lp_float(costs: Sequence, rows: Sequence[Sequence[int]], rhs: Sequence[int]) -> float:
    """Floating-point solve through HiGHS, for instances too large for the exact path."""
    import numpy as np
    from scipy.optimize import linprog

    nv = len(costs)
    if not rows:
        return 0.0
    G = np.zeros((len(rows), nv))
    for r, members in enumerate(rows):
        G[r, list(members)] = 1.0
    res = linprog(np.array([float(c) for c in costs]), A_ub=-G, b_ub=-np.array(rhs, dtype=float),
                  bounds=[(0.0, 1.0)] * nv, method="highs")
    if res.status != 0:
        raise SolverError(f"HiGHS did not converge: {res.message}")
    return float(res.fun)
