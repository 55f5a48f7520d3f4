"""Linear programs and a small branch-and-bound integer mode.

Problems are stored row-wise in COO blocks so that level-assignment models
with hundreds of thousands of subset rows can be assembled with numpy.
Two LP back ends are provided:

``"highs"``
    scipy's HiGHS interface, used for the large models built by the
    optimizer.
``"simplex"``
    a dense two-phase primal simplex with Bland's rule, for small problems
    and cross-checking.

Both are deterministic for identical input.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

FEAS_TOL = 1e-6
OPT_TOL = 1e-6
INT_TOL = 1e-6

LE, EQ, GE = "<=", "=", ">="
_SENSE_CODE = {LE: -1, EQ: 0, GE: 1, "<": -1, "==": 0, ">": 1}


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    RESOURCE_LIMIT = "resource_limit"


class NumericalError(RuntimeError):
    """The solver returned a point that violates the feasibility tolerance."""


class LinearProgram:
    """``minimize c.x  s.t.  rows, lb <= x <= ub``."""

    def __init__(self):
        self.names: list[str] = []
        self._index: dict[str, int] = {}
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._obj: dict[int, float] = {}
        # finished COO blocks: (row, col, val, sense, rhs) with local row ids
        self._blocks: list[tuple[np.ndarray, ...]] = []
        self._pending: list[tuple[list, list, list, list, list]] = []
        self._prow = ([], [], [], [], [])
        self._nrows = 0
        self._lazy: list[tuple[int, int]] = []  # [start, stop) row ranges

    # building -----------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self.names)

    @property
    def num_rows(self) -> int:
        return self._nrows

    def add_variable(self, name: str, lb: float = 0.0, ub: float = math.inf) -> int:
        if name in self._index:
            raise ValueError(f"variable {name!r} already declared")
        self._index[name] = len(self.names)
        self.names.append(name)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        return len(self.names) - 1

    def var(self, name: str) -> int:
        return self._index[name]

    def _col(self, key) -> int:
        if isinstance(key, str):
            return self._index[key]
        key = int(key)
        if not 0 <= key < len(self.names):
            raise KeyError(f"unknown variable index {key}")
        return key

    def set_bounds(self, key, lb: float | None = None, ub: float | None = None):
        j = self._col(key)
        if lb is not None:
            self._lb[j] = float(lb)
        if ub is not None:
            self._ub[j] = float(ub)

    def set_objective(self, coeffs: dict):
        self._obj = {}
        for k, v in coeffs.items():
            j = self._col(k)
            self._obj[j] = self._obj.get(j, 0.0) + float(v)

    def add_constraint(self, coeffs: dict, sense: str, rhs: float):
        if not math.isfinite(rhs):
            raise ValueError("constraint right-hand side must be finite")
        code = _SENSE_CODE[sense]
        r, c, v, s, b = self._prow
        row = self._nrows
        for k, val in coeffs.items():
            r.append(row)
            c.append(self._col(k))
            v.append(float(val))
        s.append(code)
        b.append(float(rhs))
        self._nrows += 1

    def add_constraints(self, rows, cols, vals, senses, rhs, lazy: bool = False):
        """Bulk add; ``rows`` are 0-based ids local to this call.

        Lazy rows are part of the model but the solver may leave them out
        until a candidate optimum violates them."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
        rhs = np.asarray(rhs, dtype=float)
        senses = np.asarray([_SENSE_CODE[x] for x in senses] if len(senses) and
                            isinstance(senses[0], str) else senses, dtype=np.int8)
        if senses.ndim == 0:
            senses = np.full(len(rhs), senses, dtype=np.int8)
        if len(cols) and (cols.min() < 0 or cols.max() >= self.num_vars):
            raise KeyError("constraint references an undeclared variable")
        if not np.all(np.isfinite(rhs)):
            raise ValueError("constraint right-hand side must be finite")
        self._flush()
        self._blocks.append((rows + self._nrows, cols, vals, senses, rhs))
        if lazy and len(rhs):
            self._lazy.append((self._nrows, self._nrows + len(rhs)))
        self._nrows += len(rhs)

    def lazy_mask(self) -> np.ndarray:
        mask = np.zeros(self._nrows, dtype=bool)
        for a, b in self._lazy:
            mask[a:b] = True
        return mask

    def _flush(self):
        r, c, v, s, b = self._prow
        if s:
            self._blocks.append((np.asarray(r, dtype=np.int64), np.asarray(c, dtype=np.int64),
                                 np.asarray(v, dtype=float), np.asarray(s, dtype=np.int8),
                                 np.asarray(b, dtype=float)))
            self._prow = ([], [], [], [], [])

    # views --------------------------------------------------------------

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.asarray(self._lb, dtype=float), np.asarray(self._ub, dtype=float)

    def objective(self) -> np.ndarray:
        c = np.zeros(self.num_vars)
        for j, v in self._obj.items():
            c[j] = v
        return c

    def matrix(self) -> tuple[sp.csr_matrix, np.ndarray, np.ndarray]:
        """(A, sense codes, rhs) with sense -1 for <=, 0 for =, +1 for >=."""
        self._flush()
        if self._blocks:
            r = np.concatenate([b[0] for b in self._blocks])
            c = np.concatenate([b[1] for b in self._blocks])
            v = np.concatenate([b[2] for b in self._blocks])
            s = np.concatenate([b[3] for b in self._blocks])
            b = np.concatenate([b[4] for b in self._blocks])
        else:
            r = c = np.zeros(0, dtype=np.int64)
            v = b = np.zeros(0)
            s = np.zeros(0, dtype=np.int8)
        A = sp.csr_matrix((v, (r, c)), shape=(self._nrows, self.num_vars))
        return A, s, b

    def max_violation(self, x: np.ndarray, lb=None, ub=None) -> float:
        A, s, b = self.matrix()
        if lb is None:
            lb, ub = self.bounds()
        ax = A @ x if A.shape[0] else np.zeros(0)
        viol = [0.0]
        if len(b):
            diff = ax - b
            viol.append(float(np.max(np.where(s < 0, diff, 0.0), initial=0.0)))
            viol.append(float(np.max(np.where(s > 0, -diff, 0.0), initial=0.0)))
            viol.append(float(np.max(np.where(s == 0, np.abs(diff), 0.0), initial=0.0)))
        viol.append(float(np.max(lb - x, initial=0.0)))
        viol.append(float(np.max(x - ub, initial=0.0)))
        return max(viol)

    def to_lp_text(self) -> str:
        """CPLEX-style LP text for cross-checking with external solvers."""

        def term(coef, name, first):
            sign = "-" if coef < 0 else ("" if first else "+")
            mag = abs(coef)
            body = name if mag == 1 else f"{mag:g} {name}"
            return f"{sign} {body}".strip() if first else f"{sign} {body}"

        lines = ["\\ generated by aqfp_bsopt", "Minimize"]
        obj = [term(v, self.names[j], k == 0) for k, (j, v) in enumerate(sorted(self._obj.items()))]
        lines.append(" obj: " + (" ".join(obj) if obj else "0"))
        lines.append("Subject To")
        A, s, b = self.matrix()
        A = A.tocsr()
        op = {-1: "<=", 0: "=", 1: ">="}
        for i in range(A.shape[0]):
            lo, hi = A.indptr[i], A.indptr[i + 1]
            terms = [term(A.data[k], self.names[A.indices[k]], n == 0)
                     for n, k in enumerate(range(lo, hi))]
            lines.append(f" r{i}: {' '.join(terms) if terms else '0 ' + self.names[0]} "
                         f"{op[int(s[i])]} {b[i]:g}")
        lines.append("Bounds")
        for j, name in enumerate(self.names):
            lo, hi = self._lb[j], self._ub[j]
            lo_s = "-inf" if lo == -math.inf else f"{lo:g}"
            hi_s = "+inf" if hi == math.inf else f"{hi:g}"
            lines.append(f" {lo_s} <= {name} <= {hi_s}")
        lines.append("End")
        return "\n".join(lines) + "\n"


@dataclass
class LpSolution:
    status: Status
    values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    objective_value: float = math.nan
    names: list[str] = field(default_factory=list, repr=False)
    nodes: int = 0

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict[str, float]:
        return {n: float(v) for n, v in zip(self.names, self.values)}

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


# --------------------------------------------------------------------------
# dense simplex


def _simplex_core(T: np.ndarray, basis: list[int], ncols: int, eps: float = 1e-9,
                  max_iter: int = 100000) -> str:
    """Minimize the objective held in the last row of tableau ``T`` (reduced
    costs, with -z in the corner). Bland's rule: entering column is the
    lowest-index negative reduced cost among the first ``ncols`` columns;
    leaving row is the minimum ratio, ties by lowest basic variable index."""
    m = T.shape[0] - 1
    for _ in range(max_iter):
        cost = T[-1, :ncols]
        neg = np.nonzero(cost < -eps)[0]
        if len(neg) == 0:
            return "optimal"
        e = int(neg[0])
        col = T[:m, e]
        pos = np.nonzero(col > eps)[0]
        if len(pos) == 0:
            return "unbounded"
        ratios = T[pos, -1] / col[pos]
        best = ratios.min()
        cand = pos[ratios <= best + eps * max(1.0, abs(best))]
        r = int(min(cand, key=lambda i: basis[i]))
        T[r] /= T[r, e]
        for i in range(T.shape[0]):
            if i != r and T[i, e] != 0.0:
                T[i] -= T[i, e] * T[r]
        basis[r] = e
    raise NumericalError("simplex iteration limit reached")


def _solve_dense(c, A, s, b, lb, ub) -> tuple[Status, np.ndarray, float]:
    n = len(c)
    # substitute x = shift + sign * y (free variables split into y+ - y-)
    cols = []  # (orig var, sign)
    shift = np.zeros(n)
    extra_rows = []  # (col, ub) rows y <= ub
    for j in range(n):
        lo, hi = lb[j], ub[j]
        if lo > hi + FEAS_TOL:
            return Status.INFEASIBLE, np.zeros(n), math.nan
        if math.isfinite(lo):
            shift[j] = lo
            cols.append((j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            shift[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    ny = len(cols)
    M = np.zeros((A.shape[0], ny))
    cy = np.zeros(ny)
    for k, (j, sg) in enumerate(cols):
        M[:, k] = A[:, j] * sg
        cy[k] = c[j] * sg
    rhs = b - A @ shift
    senses = list(s)
    rows = [M[i] for i in range(M.shape[0])]
    for k, cap in extra_rows:
        row = np.zeros(ny)
        row[k] = 1.0
        rows.append(row)
        rhs = np.append(rhs, cap)
        senses.append(-1)
    m = len(rows)
    Ay = np.array(rows).reshape(m, ny)
    # slacks
    nslack = sum(1 for x in senses if x != 0)
    width = ny + nslack + m
    T = np.zeros((m + 1, width + 1))
    basis = []
    k = ny
    art = []
    for i in range(m):
        row = Ay[i].copy()
        sl = np.zeros(nslack)
        if senses[i] != 0:
            sl[k - ny] = 1.0 if senses[i] < 0 else -1.0
            slack_col = k
            k += 1
        else:
            slack_col = None
        r = rhs[i]
        if r < 0:
            row, sl, r = -row, -sl, -r
        T[i, :ny] = row
        T[i, ny:ny + nslack] = sl
        T[i, -1] = r
        if slack_col is not None and T[i, slack_col] > 0:
            basis.append(slack_col)
        else:
            a = ny + nslack + i
            T[i, a] = 1.0
            basis.append(a)
            art.append(a)
    # phase 1
    if art:
        T[-1, :] = 0.0
        for a in art:
            T[-1, a] = 1.0
        for i, bv in enumerate(basis):
            if bv in art:
                T[-1] -= T[i]
        _simplex_core(T, basis, width)
        if -T[-1, -1] > 1e-7 * max(1.0, np.abs(rhs).max(initial=0.0)):
            return Status.INFEASIBLE, np.zeros(n), math.nan
        # drive artificials out of the basis
        keep_rows = []
        for i in range(m):
            if basis[i] >= ny + nslack:
                nz = np.nonzero(np.abs(T[i, :ny + nslack]) > 1e-9)[0]
                if len(nz):
                    e = int(nz[0])
                    T[i] /= T[i, e]
                    for r2 in range(m + 1):
                        if r2 != i and T[r2, e] != 0.0:
                            T[r2] -= T[r2, e] * T[i]
                    basis[i] = e
                    keep_rows.append(i)
            else:
                keep_rows.append(i)
        T = np.vstack([T[keep_rows], T[-1:]])
        basis = [basis[i] for i in keep_rows]
        T = np.hstack([T[:, :ny + nslack], T[:, -1:]])
        m = len(basis)
    else:
        T = np.hstack([T[:, :ny + nslack], T[:, -1:]])
    width = ny + nslack
    # phase 2
    T[-1, :] = 0.0
    T[-1, :ny] = cy
    for i, bv in enumerate(basis):
        if T[-1, bv] != 0.0:
            T[-1] -= T[-1, bv] * T[i]
    status = _simplex_core(T, basis, width)
    if status == "unbounded":
        return Status.UNBOUNDED, np.zeros(n), math.nan
    y = np.zeros(width)
    for i, bv in enumerate(basis):
        y[bv] = T[i, -1]
    x = shift.copy()
    for k2, (j, sg) in enumerate(cols):
        x[j] += sg * y[k2]
    return Status.OPTIMAL, x, float(c @ x)


def _solve_highs(c, A, s, b, lb, ub) -> tuple[Status, np.ndarray, float]:
    ub_rows = s != 0
    A_ub = A[ub_rows]
    b_ub = b[ub_rows]
    flip = s[ub_rows] > 0
    if flip.any():
        D = sp.diags(np.where(flip, -1.0, 1.0))
        A_ub = D @ A_ub
        b_ub = np.where(flip, -b_ub, b_ub)
    eq = s == 0
    kwargs = {}
    if A_ub.shape[0]:
        kwargs.update(A_ub=A_ub, b_ub=b_ub)
    if eq.any():
        kwargs.update(A_eq=A[eq], b_eq=b[eq])
    bounds = np.column_stack([np.where(np.isfinite(lb), lb, -np.inf),
                              np.where(np.isfinite(ub), ub, np.inf)])
    res = linprog(c, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-9,
                           "dual_feasibility_tolerance": 1e-9}, **kwargs)
    if res.status == 2:
        return Status.INFEASIBLE, np.zeros(len(c)), math.nan
    if res.status == 3:
        return Status.UNBOUNDED, np.zeros(len(c)), math.nan
    if res.status != 0:
        raise NumericalError(f"HiGHS failed: {res.message}")
    return Status.OPTIMAL, np.asarray(res.x, dtype=float), float(res.fun)


LAZY_BATCH = 20000


def _violation(A, s, b, x) -> np.ndarray:
    diff = A @ x - b
    return np.where(s < 0, diff, np.where(s > 0, -diff, np.abs(diff)))


def solve_lp(p: LinearProgram, method: str = "auto", lb=None, ub=None) -> LpSolution:
    """Solve the LP relaxation of ``p``. ``lb``/``ub`` override the declared
    bounds (used by branch-and-bound). ``method`` is ``"simplex"``,
    ``"highs"`` or ``"auto"`` (dense simplex for tiny problems).

    Lazy rows are handled by row generation: solve without them, add the
    most violated ones (at most ``LAZY_BATCH`` per round) and repeat until
    none is violated, which yields an optimum of the full model."""
    if p.num_vars == 0:
        raise ValueError("linear program has no variables")
    c = p.objective()
    A, s, b = p.matrix()
    if lb is None:
        lb, ub = p.bounds()
    if method == "auto":
        method = "simplex" if p.num_vars * max(1, p.num_rows) <= 2500 else "highs"
    if method not in ("simplex", "highs"):
        raise ValueError(f"unknown LP method {method!r}")

    def backend(A_, s_, b_):
        if method == "simplex":
            return _solve_dense(c, A_.toarray(), s_, b_, lb, ub)
        return _solve_highs(c, A_, s_, b_, lb, ub)

    lazy = p.lazy_mask()
    if lazy.any():
        active = ~lazy
        pending = np.nonzero(lazy)[0]
        A_lazy = A[pending]
        while True:
            status, x, obj = backend(A[active], s[active], b[active])
            if status is Status.UNBOUNDED:
                status, x, obj = backend(A, s, b)
                break
            if status is not Status.OPTIMAL:
                break
            viol = _violation(A_lazy, s[pending], b[pending], x)
            bad = np.nonzero(viol > FEAS_TOL * 0.1)[0]
            if not len(bad):
                break
            bad = bad[np.argsort(-viol[bad], kind="stable")[:LAZY_BATCH]]
            active[pending[bad]] = True
            keep = np.ones(len(pending), dtype=bool)
            keep[bad] = False
            pending, A_lazy = pending[keep], A_lazy[keep]
    else:
        status, x, obj = backend(A, s, b)
    if status is Status.OPTIMAL:
        viol = p.max_violation(x, lb, ub)
        if viol > FEAS_TOL:
            raise NumericalError(f"LP solution violates constraints by {viol:.3g}")
    return LpSolution(status, x, obj, list(p.names))


def solve_ilp_small(p: LinearProgram, integer_vars, node_limit: int = 10000,
                    method: str = "auto", incumbent: np.ndarray | None = None) -> LpSolution:
    """Best-first branch-and-bound over :func:`solve_lp` relaxations.

    Branches on the lowest-index fractional integer variable. When every
    objective coefficient on an integer variable is integral and continuous
    variables carry no cost, bounds are rounded up before pruning. An
    optional feasible ``incumbent`` seeds the search.
    """
    ints = sorted(p._col(k) for k in integer_vars)
    c = p.objective()
    cont = np.ones(p.num_vars, dtype=bool)
    cont[ints] = False
    integral_obj = (np.all(np.abs(c[cont]) < 1e-12)
                    and np.all(np.abs(c[ints] - np.round(c[ints])) < 1e-12))
    lb0, ub0 = p.bounds()
    lb0 = lb0.copy()
    ub0 = ub0.copy()
    lb0[ints] = np.ceil(lb0[ints] - INT_TOL)
    ub0[ints] = np.floor(ub0[ints] + INT_TOL)

    best_x, best_obj = None, math.inf
    if incumbent is not None:
        x = np.asarray(incumbent, dtype=float)
        if (p.max_violation(x, lb0, ub0) <= FEAS_TOL
                and np.all(np.abs(x[ints] - np.round(x[ints])) <= INT_TOL)):
            best_x, best_obj = x, float(c @ x)

    def bound_key(z):
        return math.ceil(z - 1e-6) if integral_obj and math.isfinite(z) else z

    def prune(z):
        return bound_key(z) >= best_obj - (0.5 if integral_obj else OPT_TOL * max(1.0, abs(best_obj)))

    seq = 0
    heap = [(-math.inf, seq, lb0, ub0)]
    nodes = 0
    while heap:
        z_parent, _, lb, ub = heapq.heappop(heap)
        if best_x is not None and prune(z_parent):
            continue
        if nodes >= node_limit:
            return LpSolution(Status.RESOURCE_LIMIT,
                              best_x if best_x is not None else np.zeros(p.num_vars),
                              best_obj, list(p.names), nodes)
        nodes += 1
        if np.any(lb > ub + FEAS_TOL):
            continue
        sol = solve_lp(p, method=method, lb=lb, ub=ub)
        if sol.status is Status.UNBOUNDED:
            return LpSolution(Status.UNBOUNDED, sol.values, -math.inf, list(p.names), nodes)
        if sol.status is not Status.OPTIMAL:
            continue
        if best_x is not None and prune(sol.objective_value):
            continue
        x = sol.values
        frac = [j for j in ints if abs(x[j] - round(x[j])) > INT_TOL]
        if not frac:
            xi = x.copy()
            xi[ints] = np.round(xi[ints])
            obj = float(c @ xi)
            if obj < best_obj - 1e-9:
                best_x, best_obj = xi, obj
            continue
        j = frac[0]
        v = x[j]
        for lo_side in (True, False):
            nlb, nub = lb.copy(), ub.copy()
            if lo_side:
                nub[j] = math.floor(v)
            else:
                nlb[j] = math.ceil(v)
            seq += 1
            heapq.heappush(heap, (bound_key(sol.objective_value), seq, nlb, nub))
    if best_x is None:
        return LpSolution(Status.INFEASIBLE, np.zeros(p.num_vars), math.nan, list(p.names), nodes)
    return LpSolution(Status.OPTIMAL, best_x, best_obj, list(p.names), nodes)
