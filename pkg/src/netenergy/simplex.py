"""Deterministic LP solver.

The native solver is a bounded-variable revised simplex with Bland's
smallest-index rule for both the entering and the leaving variable, so the
pivot sequence (and the returned vertex) depends only on the input data.
Pricing scans columns in index order in fixed-size chunks and stops at the
first eligible column, which is exactly what Bland's rule needs.

Large instances can be routed to HiGHS (through scipy) with ``method="highs"``
or automatically with ``method="auto"``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .lp import LPProblem, VarKey

TOL_FEAS = 1e-9
TOL_OPT = 1e-9
PIVOT_TOL = 1e-9
BREAKDOWN_TOL = 1e-11
AUTO_MAX_ROWS = 400


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


class SolverError(RuntimeError):
    pass


class NumericalBreakdown(SolverError):
    pass


class IterationLimit(SolverError):
    pass


@dataclass
class Solution:
    status: Status
    objective: float
    x: np.ndarray
    var_keys: list[VarKey]
    duals: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None
    certificate: np.ndarray | None = None
    iterations: int = 0
    method: str = "simplex"
    _index: dict[VarKey, int] = field(default_factory=dict, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def values(self) -> dict[VarKey, float]:
        return dict(zip(self.var_keys, self.x.tolist()))

    def value(self, key: VarKey) -> float:
        if not self._index:
            self._index = {k: i for i, k in enumerate(self.var_keys)}
        return float(self.x[self._index[key]])


def _equilibrate(A: sp.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
    """Max-abs row then column scaling factors."""
    absA = abs(A).tocsr()
    row_max = absA.max(axis=1).toarray().ravel() if A.shape[1] else np.zeros(A.shape[0])
    r = np.where(row_max > 0, 1.0 / np.where(row_max > 0, row_max, 1.0), 1.0)
    scaled = sp.diags(r) @ absA
    col_max = scaled.max(axis=0).toarray().ravel() if A.shape[0] else np.zeros(A.shape[1])
    s = np.where(col_max > 0, 1.0 / np.where(col_max > 0, col_max, 1.0), 1.0)
    return r, s


class _RevisedSimplex:
    """Working state of one solve on the scaled problem."""

    def __init__(self, A: np.ndarray, b: np.ndarray, c: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                 max_iter: int, chunk: int):
        self.A = A  # m x n_total dense, structural + slack + artificial columns
        self.b = b
        self.c = c
        self.lo = lo
        self.hi = hi
        self.m, self.ntot = A.shape
        self.max_iter = max_iter
        self.chunk = chunk
        self.iterations = 0

    # basis bookkeeping -----------------------------------------------------
    def start(self, basis: np.ndarray, x: np.ndarray) -> None:
        self.basis = basis.copy()
        self.x = x.copy()
        self.is_basic = np.zeros(self.ntot, dtype=bool)
        self.is_basic[self.basis] = True
        self.refactor()

    def refactor(self) -> None:
        if self.m == 0:
            self.Binv = np.zeros((0, 0))
            return
        B = self.A[:, self.basis]
        lu, piv = sla.lu_factor(B, check_finite=False)
        if np.min(np.abs(np.diag(lu))) < BREAKDOWN_TOL:
            raise NumericalBreakdown("basis matrix is numerically singular")
        self.Binv = sla.lu_solve((lu, piv), np.eye(self.m), check_finite=False)
        nonbasic = ~self.is_basic
        rhs = self.b - self.A[:, nonbasic] @ self.x[nonbasic]
        self.x[self.basis] = self.Binv @ rhs

    def _pivot_update(self, r: int, alpha: np.ndarray) -> None:
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row

    # one phase -------------------------------------------------------------
    def run(self, cost: np.ndarray) -> tuple[str, np.ndarray | None]:
        """Iterate to optimality for ``cost``; returns (status, ray)."""
        since_refactor = 0
        while True:
            y = self.Binv.T @ cost[self.basis] if self.m else np.zeros(0)
            q, direction = self._price(cost, y)
            if q < 0:
                return "optimal", None
            if self.iterations >= self.max_iter:
                raise IterationLimit(f"no optimum after {self.iterations} iterations")
            self.iterations += 1
            alpha = self.Binv @ self.A[:, q] if self.m else np.zeros(0)
            step, leave, to_upper = self._ratio(q, direction, alpha)
            if leave is None and math.isinf(step):
                ray = np.zeros(self.ntot)
                ray[q] = direction
                ray[self.basis] = -direction * alpha
                return "unbounded", ray
            self.x[q] += direction * step
            if self.m:
                self.x[self.basis] -= direction * step * alpha
            if leave is None:
                continue  # entering variable moved to its opposite bound
            out = self.basis[leave]
            self.x[out] = self.hi[out] if to_upper else self.lo[out]
            self._pivot_update(leave, alpha)
            self.basis[leave] = q
            self.is_basic[out] = False
            self.is_basic[q] = True
            since_refactor += 1
            if since_refactor >= 100:
                self.refactor()
                since_refactor = 0

    def _price(self, cost: np.ndarray, y: np.ndarray) -> tuple[int, int]:
        """Smallest-index eligible column (Bland), scanned chunk by chunk."""
        for start in range(0, self.ntot, self.chunk):
            stop = min(start + self.chunk, self.ntot)
            d = cost[start:stop] - (y @ self.A[:, start:stop] if self.m else 0.0)
            x = self.x[start:stop]
            lo = self.lo[start:stop]
            hi = self.hi[start:stop]
            nb = ~self.is_basic[start:stop]
            up = nb & (d < -TOL_OPT) & (x < hi)
            down = nb & (d > TOL_OPT) & (x > lo)
            hits = np.flatnonzero(up | down)
            if hits.size:
                k = int(hits[0])
                return start + k, (1 if up[k] else -1)
        return -1, 0

    def _ratio(self, q: int, direction: int, alpha: np.ndarray):
        """Bounded ratio test; ties go to the smallest variable index."""
        best = math.inf
        if math.isfinite(self.lo[q]) and math.isfinite(self.hi[q]):
            best = self.hi[q] - self.lo[q]
        leave = None
        to_upper = False
        if self.m == 0:
            return best, leave, to_upper
        delta = direction * alpha  # basic x decreases by step * delta
        xb = self.x[self.basis]
        lob = self.lo[self.basis]
        hib = self.hi[self.basis]
        ratios = np.full(self.m, math.inf)
        dec = (delta > PIVOT_TOL) & np.isfinite(lob)
        inc = (delta < -PIVOT_TOL) & np.isfinite(hib)
        ratios[dec] = np.maximum(xb[dec] - lob[dec], 0.0) / delta[dec]
        ratios[inc] = np.maximum(hib[inc] - xb[inc], 0.0) / -delta[inc]
        tmin = ratios.min()
        if tmin < best:
            tied = np.flatnonzero(ratios <= tmin + 1e-12 * (1.0 + abs(tmin)))
            r = int(tied[np.argmin(self.basis[tied])])
            if abs(alpha[r]) < BREAKDOWN_TOL:
                raise NumericalBreakdown(f"pivot {alpha[r]:.3e} below {BREAKDOWN_TOL}")
            return tmin, r, bool(inc[r])
        return best, leave, to_upper


def _solve_simplex(lp: LPProblem, max_iter: int | None = None, chunk: int = 64) -> Solution:
    m, n = lp.n_rows, lp.n_vars
    r, s = _equilibrate(lp.A)
    As = (sp.diags(r) @ lp.A @ sp.diags(s)).toarray() if m and n else np.zeros((m, n))
    bs = r * lp.rhs
    cs = lp.c * s
    cscale = float(np.max(np.abs(cs))) if n else 0.0
    cscale = cscale if cscale > 0 else 1.0
    cs = cs / cscale
    lo = lp.lo / s
    hi = lp.hi / s

    senses = np.array(lp.senses) if m else np.array([], dtype=str)
    slack_lo = np.where(senses == ">=", -math.inf, 0.0)
    slack_hi = np.where(senses == "<=", math.inf, 0.0)

    x0 = np.where(np.isfinite(lo), lo, np.where(np.isfinite(hi), hi, 0.0))
    resid = bs - As @ x0 if m else np.zeros(0)
    slack_val = np.clip(resid, slack_lo, slack_hi)
    need_art = np.abs(resid - slack_val) > 0.0
    art_rows = np.flatnonzero(need_art)
    sigma = np.sign(resid[art_rows] - slack_val[art_rows])
    k = art_rows.size

    A_full = np.zeros((m, n + m + k))
    A_full[:, :n] = As
    A_full[:, n:n + m] = np.eye(m)
    A_full[art_rows, n + m + np.arange(k)] = sigma
    lo_full = np.concatenate([lo, slack_lo, np.zeros(k)])
    hi_full = np.concatenate([hi, slack_hi, np.full(k, math.inf)])
    x = np.concatenate([x0, slack_val, np.abs(resid[art_rows] - slack_val[art_rows])])
    basis = np.arange(n, n + m)
    basis[art_rows] = n + m + np.arange(k)

    ntot = n + m + k
    if max_iter is None:
        max_iter = 50 * (m + ntot) + 1000
    solver = _RevisedSimplex(A_full, bs, np.zeros(ntot), lo_full, hi_full, max_iter, chunk)
    solver.start(basis, x)

    if k:
        cost1 = np.zeros(ntot)
        cost1[n + m:] = 1.0
        solver.run(cost1)
        infeas = float(solver.x[n + m:].sum())
        if infeas > TOL_FEAS * max(1.0, float(np.max(np.abs(bs)))):
            y1 = solver.Binv.T @ cost1[solver.basis]
            return Solution(
                Status.INFEASIBLE, math.nan, np.full(n, math.nan), list(lp.var_keys),
                certificate=r * y1, iterations=solver.iterations, method="simplex",
            )
        _drive_out_artificials(solver, n + m)
        solver.lo[n + m:] = 0.0
        solver.hi[n + m:] = 0.0
        solver.x[n + m:] = 0.0

    cost2 = np.zeros(ntot)
    cost2[:n] = cs
    status, ray = solver.run(cost2)
    if status == "unbounded":
        cert = ray[:n] * s
        return Solution(
            Status.UNBOUNDED, -math.inf, np.full(n, math.nan), list(lp.var_keys),
            certificate=cert, iterations=solver.iterations, method="simplex",
        )
    solver.refactor()
    x_s = solver.x[:n]
    x_out = x_s * s
    y_s = solver.Binv.T @ cost2[solver.basis] if m else np.zeros(0)
    y = cscale * r * y_s
    d = lp.c - (lp.A.T @ y if m else 0.0)
    return Solution(
        Status.OPTIMAL, float(lp.c @ x_out), x_out, list(lp.var_keys),
        duals=y, reduced_costs=np.asarray(d, dtype=float),
        iterations=solver.iterations, method="simplex",
    )


def _drive_out_artificials(solver: _RevisedSimplex, first_art: int) -> None:
    for pos in range(solver.m):
        if solver.basis[pos] < first_art:
            continue
        row = solver.Binv[pos] @ solver.A[:, :first_art]
        row[solver.is_basic[:first_art]] = 0.0
        cand = np.flatnonzero(np.abs(row) > PIVOT_TOL)
        if cand.size == 0:
            continue  # redundant row: the artificial stays basic at zero
        q = int(cand[0])
        alpha = solver.Binv @ solver.A[:, q]
        out = solver.basis[pos]
        solver._pivot_update(pos, alpha)
        solver.basis[pos] = q
        solver.is_basic[out] = False
        solver.is_basic[q] = True
    solver.refactor()


def _solve_highs(lp: LPProblem) -> Solution:
    from scipy.optimize import linprog

    senses = np.array(lp.senses)
    A = lp.A.tocsr()
    le = np.flatnonzero(senses == "<=")
    ge = np.flatnonzero(senses == ">=")
    eq = np.flatnonzero(senses == "=")
    ub_rows = np.concatenate([le, ge])
    sign = np.concatenate([np.ones(le.size), -np.ones(ge.size)])
    A_ub = sp.diags(sign) @ A[ub_rows] if ub_rows.size else None
    b_ub = sign * lp.rhs[ub_rows] if ub_rows.size else None
    A_eq = A[eq] if eq.size else None
    b_eq = lp.rhs[eq] if eq.size else None
    bounds = np.column_stack([lp.lo, lp.hi])
    bounds = [(None if math.isinf(a) else a, None if math.isinf(b) else b) for a, b in bounds]
    if lp.n_vars == 0:
        return _solve_simplex(lp)
    res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options={"presolve": True})
    if res.status == 2:
        # presolve may report "infeasible or unbounded"; decide without it
        res = linprog(lp.c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                      method="highs", options={"presolve": False})
    keys = list(lp.var_keys)
    if res.status == 2:
        return Solution(Status.INFEASIBLE, math.nan, np.full(lp.n_vars, math.nan), keys, method="highs")
    if res.status == 3:
        return Solution(Status.UNBOUNDED, -math.inf, np.full(lp.n_vars, math.nan), keys, method="highs")
    if res.status != 0:
        raise NumericalBreakdown(f"HiGHS stopped with status {res.status}: {res.message}")
    y = np.zeros(lp.n_rows)
    if ub_rows.size:
        y[ub_rows] = sign * res.ineqlin.marginals
    if eq.size:
        y[eq] = res.eqlin.marginals
    d = res.lower.marginals + res.upper.marginals
    x = np.asarray(res.x, dtype=float)
    return Solution(Status.OPTIMAL, float(lp.c @ x), x, keys, duals=y, reduced_costs=d,
                    iterations=int(getattr(res, "nit", 0)), method="highs")


def solve(lp: LPProblem, method: str = "auto", max_iter: int | None = None) -> Solution:
    """Solve ``lp``.

    ``method`` is ``"simplex"`` (native revised simplex), ``"highs"`` or
    ``"auto"``, which uses the native solver up to ``AUTO_MAX_ROWS`` rows.
    """
    if method == "auto":
        method = "simplex" if lp.n_rows <= AUTO_MAX_ROWS else "highs"
    if method == "simplex":
        return _solve_simplex(lp, max_iter=max_iter)
    if method == "highs":
        return _solve_highs(lp)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class SolutionCheck:
    max_primal_residual: float
    max_relative_residual: float
    max_bound_violation: float
    objective_gap: float
    duality_gap: float | None
    tol: float

    @property
    def ok(self) -> bool:
        gaps = [self.max_relative_residual, self.max_bound_violation, self.objective_gap]
        return all(g <= self.tol for g in gaps)


def row_residuals(lp: LPProblem, x: np.ndarray) -> np.ndarray:
    act = lp.A @ x if lp.n_rows else np.zeros(0)
    senses = np.array(lp.senses)
    diff = act - lp.rhs
    res = np.where(senses == "=", np.abs(diff), 0.0)
    res = np.where(senses == "<=", np.maximum(diff, 0.0), res)
    return np.where(senses == ">=", np.maximum(-diff, 0.0), res)


def dual_objective(lp: LPProblem, sol: Solution) -> float:
    """b'y plus bound terms; equals the primal optimum iff the duals are feasible."""
    y, d = sol.duals, sol.reduced_costs
    val = float(lp.rhs @ y) if lp.n_rows else 0.0
    cmax = float(np.max(np.abs(lp.c))) if lp.n_vars else 0.0
    for j in np.flatnonzero(np.abs(d) > TOL_OPT * max(1.0, cmax)):
        bound = lp.lo[j] if d[j] > 0 else lp.hi[j]
        val += d[j] * bound
    return val


def check_solution(lp: LPProblem, sol: Solution, tol: float = 1e-8) -> SolutionCheck:
    """Residual report for an optimal solution; numbers are absolute unless noted."""
    x = sol.x
    res = row_residuals(lp, x)
    if lp.n_rows:
        scale = np.maximum.reduce([
            np.ones(lp.n_rows),
            np.abs(lp.rhs),
            abs(lp.A).tocsr() @ np.abs(x),
        ])
        rel = float(np.max(res / scale))
    else:
        rel = 0.0
    bound_viol = np.maximum(lp.lo - x, 0.0)
    bound_viol = np.maximum(bound_viol, np.maximum(x - lp.hi, 0.0))
    obj_gap = abs(float(lp.c @ x) - sol.objective) / max(1.0, abs(sol.objective))
    dgap = None
    if sol.duals is not None and sol.reduced_costs is not None:
        dgap = abs(dual_objective(lp, sol) - sol.objective) / max(1.0, abs(sol.objective))
    return SolutionCheck(
        max_primal_residual=float(res.max()) if res.size else 0.0,
        max_relative_residual=rel,
        max_bound_violation=float(bound_viol.max()) if bound_viol.size else 0.0,
        objective_gap=obj_gap,
        duality_gap=dgap,
        tol=tol,
    )
