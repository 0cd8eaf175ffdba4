"""LP relaxation of the restricted master problem.

The master LP over patterns ``P`` (rows = item types, columns = patterns)::

    min  sum_h z_h   s.t.  sum_h P[t, h] z_h >= q_t,  z >= 0

is solved through its dual::

    max  q . delta   s.t.  P[:, h] . delta <= 1,  delta >= 0

which is already in ``G x <= 1, x >= 0`` form, so the all-slack basis is a
feasible start and no phase one is needed.  The simplex multipliers of the
final basis are the master's primal values ``z``.

Appending patterns adds rows to the dual form; the old basis stays dual
feasible, so :meth:`DualFormSimplex.solve` restores feasibility with dual
simplex pivots.  Appending dual variables (used for branching bounds) keeps
the basis primal feasible and primal simplex continues from it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class LpError(RuntimeError):
    pass


class InfeasibleError(LpError):
    """The master LP has no feasible solution (a demanded type is uncovered)."""


class NumericFailure(LpError):
    """Pivot count exceeded the iteration cap."""


PIVOT_TOL = 1e-9
FEAS_TOL = 1e-9
REFACTOR_EVERY = 64


def default_tolerance(demands) -> float:
    return 1e-7 * max(1.0, float(np.sum(demands)))


class DualFormSimplex:
    """Revised simplex for ``max c.x  s.t.  G x <= 1, x >= 0``.

    Rows of ``G`` correspond to master columns (patterns, plus any bound
    rows the caller adds); columns of ``G`` are the dual-form variables.
    The explicit basis inverse is kept and updated by rank-one pivots,
    with periodic refactorisation.
    """

    def __init__(self, G: np.ndarray, c: np.ndarray, tol: float = 1e-7):
        self.G = np.array(G, dtype=float, ndmin=2)
        self.c = np.array(c, dtype=float).reshape(-1)
        m, n = self.G.shape
        if len(self.c) != n:
            raise ValueError("cost vector length does not match G")
        self.tol = tol
        # basis[i] >= 0: structural column; basis[i] = -(k + 1): slack of row k
        self.basis = np.array([-(i + 1) for i in range(m)], dtype=np.int64)
        self.Binv = np.eye(m)
        self.xB = np.ones(m)
        self.pivots = 0
        self._since_refactor = 0

    @property
    def m(self) -> int:
        return self.G.shape[0]

    @property
    def n(self) -> int:
        return self.G.shape[1]

    def copy(self) -> "DualFormSimplex":
        other = object.__new__(DualFormSimplex)
        other.G = self.G.copy()
        other.c = self.c.copy()
        other.tol = self.tol
        other.basis = self.basis.copy()
        other.Binv = self.Binv.copy()
        other.xB = self.xB.copy()
        other.pivots = 0
        other._since_refactor = self._since_refactor
        return other

    # -- structural edits ----------------------------------------------------

    def add_rows(self, rows: np.ndarray) -> None:
        """Append constraints ``rows . x <= 1`` with their slacks basic."""
        rows = np.array(rows, dtype=float, ndmin=2)
        if rows.size == 0:
            return
        k, m = rows.shape[0], self.m
        coef = np.zeros((k, m))
        structural = self.basis >= 0
        coef[:, structural] = rows[:, self.basis[structural]]
        Binv = np.zeros((m + k, m + k))
        Binv[:m, :m] = self.Binv
        Binv[m:, :m] = -coef @ self.Binv
        Binv[m:, m:] = np.eye(k)
        x = self._x_structural()
        self.G = np.vstack([self.G, rows])
        self.basis = np.concatenate([self.basis, -(np.arange(m, m + k) + 1)])
        self.Binv = Binv
        self.xB = np.concatenate([self.xB, 1.0 - rows @ x])

    def add_columns(self, cols: np.ndarray, costs) -> None:
        """Append nonbasic dual-form variables (columns of ``G``)."""
        cols = np.array(cols, dtype=float).reshape(self.m, -1)
        self.G = np.hstack([self.G, cols])
        self.c = np.concatenate([self.c, np.asarray(costs, dtype=float).reshape(-1)])

    # -- linear algebra --------------------------------------------------------

    def _column(self, j: int) -> np.ndarray:
        if j >= 0:
            return self.G[:, j]
        e = np.zeros(self.m)
        e[-j - 1] = 1.0
        return e

    def _refactor(self) -> None:
        if not self.m:
            self._since_refactor = 0
            return
        B = np.column_stack([self._column(j) for j in self.basis])
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError:
            # accumulated round-off made the basis singular; restart from slacks
            self.basis = -(np.arange(self.m) + 1)
            self.Binv = np.eye(self.m)
        self.xB = self.Binv @ np.ones(self.m)
        self._since_refactor = 0

    def _x_structural(self) -> np.ndarray:
        x = np.zeros(self.n)
        structural = self.basis >= 0
        x[self.basis[structural]] = self.xB[structural]
        return x

    def _multipliers(self) -> np.ndarray:
        cB = np.where(self.basis >= 0, self.c[np.maximum(self.basis, 0)], 0.0)
        return cB @ self.Binv

    def _pivot(self, r: int, entering: int, u: np.ndarray) -> None:
        piv = u[r]
        row = self.Binv[r] / piv
        nz = np.flatnonzero(u)  # pivot columns are usually sparse
        self.Binv[nz] -= u[nz, None] * row
        self.Binv[r] = row
        xr = self.xB[r] / piv
        self.xB -= u * xr
        self.xB[r] = xr
        self.basis[r] = entering
        self.pivots += 1
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self._refactor()

    def _reduced_profits(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Profits of structurals (c - yG) and of slacks (-y)."""
        return self.c - y @ self.G, -y

    # -- algorithms ------------------------------------------------------------

    def solve(self, max_pivots: int | None = None) -> None:
        if max_pivots is None:
            max_pivots = 50 * (self.m + self.n)
        self.pivots = 0
        if np.any(self.xB < -FEAS_TOL):
            y = self._multipliers()
            dS, dL = self._reduced_profits(y)
            if max(dS.max(initial=0.0), dL.max(initial=0.0)) > self.tol:
                # neither primal nor dual feasible: restart from the slack basis
                self.basis = -(np.arange(self.m) + 1)
                self._refactor()
            else:
                self._dual_simplex(max_pivots)
        self._primal_simplex(max_pivots)

    def _bland_after(self) -> int:
        return 3 * (self.m + self.n)

    def _primal_simplex(self, max_pivots: int) -> None:
        tol = self.tol
        while True:
            if self.pivots >= max_pivots:
                raise NumericFailure(f"primal simplex exceeded {max_pivots} pivots")
            y = self._multipliers()
            dS, dL = self._reduced_profits(y)
            in_basis = np.zeros(self.n, dtype=bool)
            in_basis[self.basis[self.basis >= 0]] = True
            dS = np.where(in_basis, -np.inf, dS)
            slack_basic = np.zeros(self.m, dtype=bool)
            slack_basic[-self.basis[self.basis < 0] - 1] = True
            dL = np.where(slack_basic, -np.inf, dL)
            if self.pivots < self._bland_after():
                js = int(np.argmax(dS)) if self.n else -1
                ls = int(np.argmax(dL)) if self.m else -1
                best_s = dS[js] if self.n else -np.inf
                best_l = dL[ls] if self.m else -np.inf
                if max(best_s, best_l) <= tol:
                    return
                entering = js if best_s >= best_l else -(ls + 1)
            else:
                cand = np.flatnonzero(dS > tol)
                if len(cand):
                    entering = int(cand[0])
                else:
                    cand = np.flatnonzero(dL > tol)
                    if not len(cand):
                        return
                    entering = -(int(cand[0]) + 1)
            u = self.Binv @ self._column(entering)
            pos = u > PIVOT_TOL
            if not pos.any():
                raise InfeasibleError("dual form is unbounded: some demanded type is uncovered")
            ratios = np.full(self.m, np.inf)
            ratios[pos] = np.maximum(self.xB[pos], 0.0) / u[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + 1e-12)
            # Bland: smallest variable index leaves (structurals before slacks)
            r = int(ties[np.argmin([self._order(self.basis[i]) for i in ties])])
            self._pivot(r, entering, u)

    def _dual_simplex(self, max_pivots: int) -> None:
        while True:
            if self.pivots >= max_pivots:
                raise NumericFailure(f"dual simplex exceeded {max_pivots} pivots")
            infeasible = np.flatnonzero(self.xB < -FEAS_TOL)
            if not len(infeasible):
                return
            if self.pivots < self._bland_after():
                r = int(infeasible[np.argmin(self.xB[infeasible])])
            else:
                r = int(infeasible[np.argmin([self._order(self.basis[i]) for i in infeasible])])
            y = self._multipliers()
            dS, dL = self._reduced_profits(y)
            alphaS = self.Binv[r] @ self.G
            alphaL = self.Binv[r].copy()
            in_basis = np.zeros(self.n, dtype=bool)
            in_basis[self.basis[self.basis >= 0]] = True
            slack_basic = np.zeros(self.m, dtype=bool)
            slack_basic[-self.basis[self.basis < 0] - 1] = True
            candS = (~in_basis) & (alphaS < -PIVOT_TOL)
            candL = (~slack_basic) & (alphaL < -PIVOT_TOL)
            if not candS.any() and not candL.any():
                raise LpError("dual simplex found the dual form infeasible")
            ratS = np.full(self.n, np.inf)
            ratS[candS] = np.minimum(dS[candS], 0.0) / alphaS[candS]
            ratL = np.full(self.m, np.inf)
            ratL[candL] = np.minimum(dL[candL], 0.0) / alphaL[candL]
            best = min(ratS.min(initial=np.inf), ratL.min(initial=np.inf))
            ties = [int(j) for j in np.flatnonzero(ratS <= best + 1e-12)]
            ties += [-(int(k) + 1) for k in np.flatnonzero(ratL <= best + 1e-12)]
            entering = min(ties, key=self._order)
            u = self.Binv @ self._column(entering)
            self._pivot(r, entering, u)

    def _order(self, var: int) -> int:
        return var if var >= 0 else self.n + (-var - 1)

    # -- results -----------------------------------------------------------------

    def primal(self) -> np.ndarray:
        """Dual-form variable values ``x``."""
        return np.maximum(self._x_structural(), 0.0)

    def multipliers(self) -> np.ndarray:
        """Row multipliers ``y >= 0`` (the master LP's primal values)."""
        return np.maximum(self._multipliers(), 0.0)

    def objective(self) -> float:
        return float(self.c @ self._x_structural())


@dataclass(frozen=True)
class RmpLp:
    columns: np.ndarray  # (H, T) pattern counts
    demands: np.ndarray  # (T,)

    def __post_init__(self):
        cols = np.array(self.columns, dtype=float, ndmin=2)
        q = np.asarray(self.demands, dtype=float).reshape(-1)
        if cols.size == 0:
            cols = cols.reshape(0, len(q))
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "demands", q)
        if cols.shape[1] != len(q):
            raise ValueError("columns and demands disagree on the number of types")
        if np.any(q < 0):
            raise ValueError("demands must be non-negative")

    @property
    def costs(self) -> np.ndarray:
        return np.ones(len(self.columns))

    def uncovered(self) -> np.ndarray:
        covered = self.columns.sum(axis=0) > 0 if len(self.columns) else np.zeros(len(self.demands), bool)
        return np.flatnonzero((self.demands > 0) & ~covered)


@dataclass
class LpResult:
    primal: np.ndarray
    duals: np.ndarray
    objective: float
    tolerance: float
    pivots: int = 0
    solver: DualFormSimplex | None = None

    def reduced_costs(self, columns: np.ndarray) -> np.ndarray:
        return 1.0 - np.asarray(columns, dtype=float) @ self.duals


def solve_rmp_lp(problem: RmpLp, warm_start: LpResult | None = None) -> LpResult:
    """Solve the master LP; ``warm_start`` may come from a solve on a prefix of the columns."""
    missing = problem.uncovered()
    if len(missing):
        raise InfeasibleError(f"types {missing.tolist()} have positive demand but no covering column")
    tol = default_tolerance(problem.demands)
    H = len(problem.columns)
    solver = None
    if warm_start is not None and warm_start.solver is not None:
        prev = warm_start.solver
        if prev.n == len(problem.demands) and prev.m <= H and np.array_equal(prev.c, problem.demands) \
                and np.array_equal(prev.G, problem.columns[:prev.m]):
            solver = prev.copy()
            solver.tol = tol
            solver.add_rows(problem.columns[prev.m:])
    if solver is None:
        solver = DualFormSimplex(problem.columns, problem.demands, tol=tol)
    T = len(problem.demands)
    solver.solve(max_pivots=50 * (T + H))
    duals = solver.primal()
    z = solver.multipliers()
    return LpResult(primal=z, duals=duals, objective=float(problem.demands @ duals),
                    tolerance=tol, pivots=solver.pivots, solver=solver)
