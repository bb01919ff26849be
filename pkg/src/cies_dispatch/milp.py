"""Small mixed-integer linear programming layer.

A builder object accumulates variables, rows and a linear objective, then
hands the matrices to a backend.  The default backend is the
branch-and-bound solver bundled with scipy (HiGHS); a pure-Python
LP-based branch-and-bound is kept alongside as an independent cross-check
for small models.  Models can be exported to LP text and re-imported.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np
from scipy import optimize, sparse

__all__ = [
    "MilpModel",
    "MilpSolution",
    "HighsBackend",
    "BranchBoundBackend",
    "SolverError",
    "InfeasibleError",
    "solve",
    "import_lp",
    "diagnose_infeasibility",
]

CONTINUOUS = "continuous"
BINARY = "binary"
INTEGER = "integer"

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_LIMIT = "limit"

_SENSES = ("<=", ">=", "=")
_MAX_ROW_COEF = 1e7


class SolverError(RuntimeError):
    """Backend failed in a way the caller cannot recover from."""


class InfeasibleError(SolverError):
    """Model proved infeasible; carries the suspect row names when known."""

    def __init__(self, message: str, rows: list[str] | None = None):
        super().__init__(message)
        self.rows = rows or []


@dataclass
class MilpSolution:
    """Assignment returned by a backend, already verified against the model."""

    status: str
    objective: float
    values: dict[str, float]
    gap: float = 0.0
    nodes: int = 0

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    def get(self, name: str, default: float = 0.0) -> float:
        return self.values.get(name, default)


class MilpModel:
    """Incrementally built minimization model with named rows and columns."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.var_names: list[str] = []
        self.var_lb: list[float] = []
        self.var_ub: list[float] = []
        self.var_kind: list[str] = []
        self.rows: list[tuple[str, dict[int, float], str, float]] = []
        self.obj: dict[int, float] = {}
        self.obj_const = 0.0
        self._name_index: dict[str, int] = {}

    # ------------------------------------------------------------ building

    def add_var(
        self,
        name: str,
        lb: float = 0.0,
        ub: float = math.inf,
        kind: str = CONTINUOUS,
    ) -> int:
        if kind not in (CONTINUOUS, BINARY, INTEGER):
            raise ValueError(f"unknown variable kind {kind!r}")
        if name in self._name_index:
            raise ValueError(f"duplicate variable name {name!r}")
        if kind == BINARY:
            lb, ub = max(0.0, lb), min(1.0, ub)
        if lb > ub:
            raise ValueError(f"empty bound range for {name!r}: [{lb}, {ub}]")
        idx = len(self.var_names)
        self.var_names.append(name)
        self.var_lb.append(float(lb))
        self.var_ub.append(float(ub))
        self.var_kind.append(kind)
        self._name_index[name] = idx
        return idx

    def add_binary(self, name: str) -> int:
        return self.add_var(name, 0.0, 1.0, BINARY)

    def add_constr(
        self,
        name: str,
        coefs: Mapping[int, float] | Iterable[tuple[int, float]],
        sense: str,
        rhs: float,
    ) -> int:
        if sense not in _SENSES:
            raise ValueError(f"unknown sense {sense!r}")
        row: dict[int, float] = {}
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        for idx, c in items:
            if not 0 <= idx < len(self.var_names):
                raise ValueError(f"row {name!r} references unknown column {idx}")
            if c != 0.0:
                row[idx] = row.get(idx, 0.0) + float(c)
        rhs = float(rhs)
        if row:
            top = max(abs(c) for c in row.values())
            if top > _MAX_ROW_COEF:  # keep HiGHS numerics in range
                scale = top / _MAX_ROW_COEF
                row = {i: c / scale for i, c in row.items()}
                rhs /= scale
        self.rows.append((name, row, sense, rhs))
        return len(self.rows) - 1

    def set_objective(
        self,
        coefs: Mapping[int, float] | Iterable[tuple[int, float]],
        constant: float = 0.0,
    ) -> None:
        items = coefs.items() if isinstance(coefs, Mapping) else coefs
        self.obj = {}
        for idx, c in items:
            if not 0 <= idx < len(self.var_names):
                raise ValueError(f"objective references unknown column {idx}")
            if c != 0.0:
                self.obj[idx] = self.obj.get(idx, 0.0) + float(c)
        self.obj_const = float(constant)

    def add_objective_term(self, idx: int, coef: float) -> None:
        if coef != 0.0:
            self.obj[idx] = self.obj.get(idx, 0.0) + float(coef)

    # ------------------------------------------------------------ inspection

    @property
    def num_vars(self) -> int:
        return len(self.var_names)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    def index_of(self, name: str) -> int:
        return self._name_index[name]

    def integer_columns(self) -> list[int]:
        return [i for i, k in enumerate(self.var_kind) if k != CONTINUOUS]

    def objective_value(self, x: np.ndarray) -> float:
        return self.obj_const + sum(c * x[i] for i, c in self.obj.items())

    def max_violation(self, x: np.ndarray) -> float:
        """Worst constraint/bound violation, scaled by max(1, |rhs|)."""
        worst = 0.0
        for i in range(self.num_vars):
            span = max(1.0, abs(self.var_lb[i]), abs(self.var_ub[i]) if math.isfinite(self.var_ub[i]) else 1.0)
            worst = max(worst, (self.var_lb[i] - x[i]) / span, (x[i] - self.var_ub[i]) / span)
        for _, row, sense, rhs in self.rows:
            lhs = sum(c * x[i] for i, c in row.items())
            scale = max(1.0, abs(rhs))
            if sense == "<=":
                worst = max(worst, (lhs - rhs) / scale)
            elif sense == ">=":
                worst = max(worst, (rhs - lhs) / scale)
            else:
                worst = max(worst, abs(lhs - rhs) / scale)
        return worst

    # ------------------------------------------------------------ matrices

    def _matrices(self):
        n = self.num_vars
        c = np.zeros(n)
        for i, v in self.obj.items():
            c[i] = v
        data, rows_ix, cols_ix, lo, hi = [], [], [], [], []
        for r, (_, row, sense, rhs) in enumerate(self.rows):
            for i, v in row.items():
                rows_ix.append(r)
                cols_ix.append(i)
                data.append(v)
            if sense == "<=":
                lo.append(-np.inf)
                hi.append(rhs)
            elif sense == ">=":
                lo.append(rhs)
                hi.append(np.inf)
            else:
                lo.append(rhs)
                hi.append(rhs)
        a = sparse.csr_matrix(
            (data, (rows_ix, cols_ix)), shape=(len(self.rows), n)
        )
        return c, a, np.array(lo), np.array(hi)

    # ------------------------------------------------------------ export

    def export_lp(self) -> str:
        """Serialize to LP text (CPLEX dialect, deterministic order)."""
        names = [_lp_name(n) for n in self.var_names]
        out = [f"\\ {self.name}", "Minimize"]
        terms = [_lp_term(self.obj.get(i, 0.0), names[i]) for i in sorted(self.obj)]
        if self.obj_const:
            terms.append(_lp_term(self.obj_const, ""))
        out.append(" obj: " + (_join_terms(terms) if terms else "0 " + (names[0] if names else "x")))
        out.append("Subject To")
        for rname, row, sense, rhs in self.rows:
            body = _join_terms([_lp_term(row[i], names[i]) for i in sorted(row)])
            if not row:
                body = "0 " + (names[0] if names else "x")
            op = {"<=": "<=", ">=": ">=", "=": "="}[sense]
            out.append(f" {_lp_name(rname)}: {body} {op} {_num(rhs)}")
        out.append("Bounds")
        for i, n in enumerate(names):
            lb, ub = self.var_lb[i], self.var_ub[i]
            hi = "+inf" if math.isinf(ub) else _num(ub)
            lo = "-inf" if math.isinf(lb) else _num(lb)
            out.append(f" {lo} <= {n} <= {hi}")
        bins = [names[i] for i, k in enumerate(self.var_kind) if k == BINARY]
        gens = [names[i] for i, k in enumerate(self.var_kind) if k == INTEGER]
        if bins:
            out.append("Binaries")
            out.append(" " + " ".join(bins))
        if gens:
            out.append("Generals")
            out.append(" " + " ".join(gens))
        out.append("End")
        return "\n".join(out) + "\n"


def _lp_name(raw: str) -> str:
    name = re.sub(r"[^A-Za-z0-9_]", "_", raw)
    if not name or name[0].isdigit() or name[0] in ".eE":
        name = "v_" + name
    return name


def _num(x: float) -> str:
    return format(x, ".12g")


def _lp_term(coef: float, name: str) -> tuple[float, str]:
    return (coef, name)


def _join_terms(terms: list[tuple[float, str]]) -> str:
    parts = []
    for k, (coef, name) in enumerate(terms):
        mag = _num(abs(coef))
        body = f"{mag} {name}".strip()
        if k == 0:
            parts.append(body if coef >= 0 else f"- {body}")
        else:
            parts.append(("+ " if coef >= 0 else "- ") + body)
    return " ".join(parts)


# ---------------------------------------------------------------- import

_TERM_RE = re.compile(r"([+-])?\s*(\d+\.?\d*(?:[eE][+-]?\d+)?)\s*([A-Za-z_][A-Za-z0-9_]*)?")


def _parse_terms(body: str) -> tuple[dict[str, float], float]:
    coefs: dict[str, float] = {}
    const = 0.0
    for sign, mag, name in _TERM_RE.findall(body):
        if not mag:
            continue
        val = float(mag) * (-1.0 if sign == "-" else 1.0)
        if name:
            coefs[name] = coefs.get(name, 0.0) + val
        else:
            const += val
    return coefs, const


def import_lp(text: str) -> MilpModel:
    """Parse LP text produced by :meth:`MilpModel.export_lp`."""
    lines = [ln.rstrip() for ln in text.splitlines()]
    model = MilpModel()
    section = None
    pending: list[tuple[str, dict[str, float], str, float, float]] = []
    obj_coefs: dict[str, float] = {}
    obj_const = 0.0
    bounds: dict[str, tuple[float, float]] = {}
    binaries: set[str] = set()
    generals: set[str] = set()
    order: list[str] = []  # first-seen fallback order
    bounds_order: list[str] = []  # canonical: the Bounds section lists columns in order

    def note(name: str) -> None:
        if name not in bounds:
            bounds[name] = (0.0, math.inf)
            order.append(name)

    for ln in lines:
        stripped = ln.strip()
        if not stripped:
            continue
        if stripped.startswith("\\"):
            model.name = stripped[1:].strip() or model.name
            continue
        low = stripped.lower()
        if low in ("minimize", "subject to", "bounds", "binaries", "generals", "end"):
            section = low
            continue
        if section == "minimize":
            body = stripped.split(":", 1)[1] if ":" in stripped else stripped
            obj_coefs, obj_const = _parse_terms(body)
            for n in obj_coefs:
                note(n)
        elif section == "subject to":
            rname, body = stripped.split(":", 1)
            m = re.search(r"(<=|>=|=)\s*([+-]?\d+\.?\d*(?:[eE][+-]?\d+)?)\s*$", body)
            if not m:
                raise ValueError(f"cannot parse constraint {stripped!r}")
            sense, rhs = m.group(1), float(m.group(2))
            coefs, const = _parse_terms(body[: m.start()])
            for n in coefs:
                note(n)
            pending.append((rname.strip(), coefs, sense, rhs - const, 0.0))
        elif section == "bounds":
            m = re.match(
                r"(-inf|[+-]?\d+\.?\d*(?:[eE][+-]?\d+)?)\s*<=\s*([A-Za-z_][A-Za-z0-9_]*)\s*<=\s*(\+inf|[+-]?\d+\.?\d*(?:[eE][+-]?\d+)?)",
                stripped,
            )
            if not m:
                raise ValueError(f"cannot parse bound {stripped!r}")
            lo = -math.inf if m.group(1) == "-inf" else float(m.group(1))
            hi = math.inf if m.group(3) == "+inf" else float(m.group(3))
            note(m.group(2))
            bounds[m.group(2)] = (lo, hi)
            if m.group(2) not in bounds_order:
                bounds_order.append(m.group(2))
        elif section == "binaries":
            for n in stripped.split():
                note(n)
                binaries.add(n)
        elif section == "generals":
            for n in stripped.split():
                note(n)
                generals.add(n)

    if bounds_order:
        order = bounds_order + [n for n in order if n not in bounds_order]
    for n in order:
        lo, hi = bounds[n]
        kind = BINARY if n in binaries else INTEGER if n in generals else CONTINUOUS
        model.add_var(n, lo, hi, kind)
    for rname, coefs, sense, rhs, _ in pending:
        model.add_constr(
            rname, {model.index_of(n): c for n, c in coefs.items()}, sense, rhs
        )
    model.set_objective(
        {model.index_of(n): c for n, c in obj_coefs.items()}, obj_const
    )
    return model


# ---------------------------------------------------------------- backends


class HighsBackend:
    """Branch-and-bound bundled with scipy (`scipy.optimize.milp`)."""

    name = "highs"

    def solve(
        self,
        model: MilpModel,
        rel_gap: float = 1e-6,
        time_limit: float | None = None,
    ) -> tuple[str, np.ndarray | None, float]:
        c, a, lo, hi = model._matrices()
        integrality = np.zeros(model.num_vars)
        for i in model.integer_columns():
            integrality[i] = 1
        options: dict = {"mip_rel_gap": rel_gap, "presolve": True}
        if time_limit is not None:
            options["time_limit"] = time_limit
        constraints = (
            optimize.LinearConstraint(a, lo, hi) if model.num_rows else ()
        )
        res = optimize.milp(
            c=c,
            constraints=constraints,
            integrality=integrality,
            bounds=optimize.Bounds(np.array(model.var_lb), np.array(model.var_ub)),
            options=options,
        )
        if res.status == 0:
            return STATUS_OPTIMAL, res.x, float(res.fun) + model.obj_const
        if res.status == 1:
            x = getattr(res, "x", None)
            obj = float(res.fun) + model.obj_const if x is not None else math.inf
            return STATUS_LIMIT, x, obj
        if res.status == 2:
            return STATUS_INFEASIBLE, None, math.inf
        raise SolverError(f"backend failure on {model.name!r}: {res.message}")


class BranchBoundBackend:
    """Exact LP-based branch-and-bound for small models.

    Node relaxations are solved with scipy's LP solver; branching,
    bounding and incumbent management are implemented here so the search
    logic is independent of the default backend.  Refuses models with
    more integer columns than ``max_integers``.
    """

    name = "branch-bound"

    def __init__(self, max_integers: int = 25):
        self.max_integers = max_integers

    def solve(
        self,
        model: MilpModel,
        rel_gap: float = 1e-6,
        time_limit: float | None = None,
    ) -> tuple[str, np.ndarray | None, float]:
        int_cols = model.integer_columns()
        if len(int_cols) > self.max_integers:
            raise ValueError(
                f"{model.name!r} has {len(int_cols)} integer columns; "
                f"this backend enumerates at most {self.max_integers}"
            )
        c, a, lo, hi = model._matrices()
        a_ub_rows, b_ub, a_eq_rows, b_eq = [], [], [], []
        dense = a.toarray() if model.num_rows else np.zeros((0, model.num_vars))
        for r in range(model.num_rows):
            if lo[r] == hi[r]:
                a_eq_rows.append(dense[r])
                b_eq.append(lo[r])
            else:
                if math.isfinite(hi[r]):
                    a_ub_rows.append(dense[r])
                    b_ub.append(hi[r])
                if math.isfinite(lo[r]):
                    a_ub_rows.append(-dense[r])
                    b_ub.append(-lo[r])
        a_ub = np.array(a_ub_rows) if a_ub_rows else None
        a_eq = np.array(a_eq_rows) if a_eq_rows else None
        start = time.monotonic()

        def relax(lbs, ubs):
            res = optimize.linprog(
                c,
                A_ub=a_ub,
                b_ub=np.array(b_ub) if b_ub else None,
                A_eq=a_eq,
                b_eq=np.array(b_eq) if b_eq else None,
                bounds=list(zip(lbs, ubs)),
                method="highs",
            )
            if res.status == 2:
                return None, math.inf
            if res.status != 0:
                raise SolverError(f"LP relaxation failed: {res.message}")
            return res.x, float(res.fun)

        best_x, best_obj, nodes = None, math.inf, 0
        stack = [(list(model.var_lb), list(model.var_ub))]
        while stack:
            if time_limit is not None and time.monotonic() - start > time_limit:
                if best_x is None:
                    return STATUS_LIMIT, None, math.inf
                return STATUS_LIMIT, best_x, best_obj + model.obj_const
            lbs, ubs = stack.pop()
            x, obj = relax(lbs, ubs)
            nodes += 1
            if x is None or obj >= best_obj - abs(best_obj) * rel_gap - 1e-12:
                continue
            frac_col, frac_dist = -1, 1e-6
            for i in int_cols:
                dist = abs(x[i] - round(x[i]))
                if dist > frac_dist:
                    frac_col, frac_dist = i, dist
            if frac_col < 0:
                best_x = np.array([round(x[i]) if i in int_cols else x[i] for i in range(len(x))], dtype=float)
                best_obj = obj
                continue
            down_ub = list(ubs)
            down_ub[frac_col] = math.floor(x[frac_col])
            up_lb = list(lbs)
            up_lb[frac_col] = math.ceil(x[frac_col])
            stack.append((lbs, down_ub))
            stack.append((up_lb, ubs))
        if best_x is None:
            return STATUS_INFEASIBLE, None, math.inf
        return STATUS_OPTIMAL, best_x, best_obj + model.obj_const


# ---------------------------------------------------------------- driver


def solve(
    model: MilpModel,
    backend=None,
    rel_gap: float = 1e-6,
    time_limit: float | None = None,
    feas_tol: float = 1e-6,
) -> MilpSolution:
    """Solve a model and verify the returned point against every row.

    Raises :class:`InfeasibleError` on proven infeasibility and
    :class:`SolverError` if a claimed-optimal point violates the model by
    more than ``feas_tol`` (scaled).
    """
    backend = backend or HighsBackend()
    status, x, obj = backend.solve(model, rel_gap=rel_gap, time_limit=time_limit)
    if status == STATUS_INFEASIBLE:
        raise InfeasibleError(f"{model.name!r} is infeasible")
    if x is None:
        raise SolverError(
            f"{model.name!r}: solver limit reached with no incumbent solution"
        )
    viol = model.max_violation(x)
    if status == STATUS_OPTIMAL and viol > feas_tol:
        raise SolverError(
            f"{model.name!r}: claimed optimum violates constraints by {viol:.2e}"
        )
    values = {model.var_names[i]: float(x[i]) for i in range(model.num_vars)}
    return MilpSolution(status, float(obj), values)


def diagnose_infeasibility(model: MilpModel) -> list[str]:
    """Names of rows that an elastic relaxation must stretch to restore
    feasibility (integrality relaxed)."""
    elastic = MilpModel(model.name + "-elastic")
    for i, name in enumerate(model.var_names):
        elastic.add_var(name, model.var_lb[i], model.var_ub[i], CONTINUOUS)
    obj: dict[int, float] = {}
    slack_of: dict[int, str] = {}
    for rname, row, sense, rhs in model.rows:
        coefs = dict(row)
        if sense in ("<=", "="):
            s = elastic.add_var(f"__slack_dn[{rname}]", 0.0, math.inf)
            coefs[s] = -1.0
            obj[s] = 1.0
            slack_of[s] = rname
        if sense in (">=", "="):
            s = elastic.add_var(f"__slack_up[{rname}]", 0.0, math.inf)
            coefs[s] = 1.0
            obj[s] = 1.0
            slack_of[s] = rname
        elastic.add_constr(rname, coefs, sense, rhs)
    elastic.set_objective(obj)
    sol = solve(elastic)
    bad = []
    for s, rname in slack_of.items():
        if sol.values[elastic.var_names[s]] > 1e-6 and rname not in bad:
            bad.append(rname)
    return bad
