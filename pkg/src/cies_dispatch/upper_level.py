"""Community-side dispatch: a chance-constrained MILP minimized each round.

One electric bus couples grid imports (split into priced buckets), the
expected renewable output (split across load, boiler, storage, the EV
station and a surplus slack), battery storage and the station's committed
scheme.  A delivered-heat bus couples the electric boiler, heat storage
and interruptible heat demand.  Reserve adequacy against renewable
shortfall is the probabilistic piece: one binary per output state and
period says whether procured reserve covers that state's shortfall, and
the covered probability mass must reach the confidence level.

Reserve can be bought from the grid, the battery, or the charging
station.  The station's share is a request variable bounded by its
plugged-in discharge headroom; the station decides in its own solve how
much of the request it actually commits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from cies_dispatch.demand_response import FlexEnvelope, LoadProfile
from cies_dispatch.milp import BINARY, MilpModel, MilpSolution, SolverError, solve
from cies_dispatch.pricing import PriceSignal, TouTariff
from cies_dispatch.probseq import ProbSeq

__all__ = [
    "StorageParams",
    "BoilerParams",
    "CiesAssets",
    "EvScheme",
    "UpperSolution",
    "build_chance_constraint",
    "build_upper",
    "binding_big_m_rows",
    "solve_upper",
    "extract_reserve_request",
]


@dataclass(frozen=True)
class StorageParams:
    """Generic storage: capacity window, power caps, efficiencies."""

    c_min_kwh: float
    c_max_kwh: float
    c_init_kwh: float
    p_ch_max_kw: float
    p_dc_max_kw: float
    eta_ch: float
    eta_dc: float
    depreciation: float = 0.0

    def __post_init__(self) -> None:
        if not 0 <= self.c_min_kwh <= self.c_init_kwh <= self.c_max_kwh:
            raise ValueError("capacity window must satisfy min <= init <= max")
        if self.p_ch_max_kw < 0 or self.p_dc_max_kw < 0:
            raise ValueError("power caps must be non-negative")
        if not 0 < self.eta_ch <= 1 or not 0 < self.eta_dc <= 1:
            raise ValueError("efficiencies must lie in (0, 1]")


@dataclass(frozen=True)
class BoilerParams:
    """Electric boiler bank converting bus power to delivered heat."""

    count: int
    p_heat_max_kw: float
    efficiency: float

    def __post_init__(self) -> None:
        if self.count < 0 or self.p_heat_max_kw < 0:
            raise ValueError("boiler sizing must be non-negative")
        if not 0 < self.efficiency <= 1:
            raise ValueError("conversion efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class CiesAssets:
    """Everything the community level owns or prices."""

    grid_p_max_kw: float
    reserve_price_grid: float
    reserve_price_ess: float
    reserve_price_ev: float
    ess: StorageParams
    hsd: StorageParams
    boiler: BoilerParams
    comp_electric: float
    comp_heat: float
    dt_hours: float = 1.0

    def __post_init__(self) -> None:
        if self.grid_p_max_kw <= 0:
            raise ValueError("grid interconnection cap must be positive")
        if min(self.reserve_price_grid, self.reserve_price_ess, self.reserve_price_ev) < 0:
            raise ValueError("reserve prices must be non-negative")
        if self.comp_electric < 0 or self.comp_heat < 0:
            raise ValueError("compensation prices must be non-negative")
        if self.dt_hours <= 0:
            raise ValueError("period length must be positive")


@dataclass(frozen=True)
class EvScheme:
    """Station commitment the community dispatches around.

    ``rg_buy_kw`` is None for the seed scheme (the split between grid and
    community renewables does not exist yet and the community model
    allocates it); from the second round on the lower level's split is
    fixed data here.  ``reserve_kw`` is the reserve the station committed
    in its last solve, kept for settlement records; the community prices
    a fresh request each round rather than reusing it.
    """

    charge_kw: tuple[float, ...]
    discharge_kw: tuple[float, ...]
    reserve_kw: tuple[float, ...]
    grid_buy_kw: tuple[float, ...] | None = None
    rg_buy_kw: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        n = len(self.charge_kw)
        for name in ("discharge_kw", "reserve_kw"):
            if len(getattr(self, name)) != n:
                raise ValueError("scheme arrays differ in length")
        if (self.grid_buy_kw is None) != (self.rg_buy_kw is None):
            raise ValueError("purchase split must give both parts or neither")
        if self.rg_buy_kw is not None:
            if len(self.rg_buy_kw) != n or len(self.grid_buy_kw) != n:
                raise ValueError("scheme arrays differ in length")
            for c, g, r in zip(self.charge_kw, self.grid_buy_kw, self.rg_buy_kw):
                if abs(c - g - r) > 1e-6:
                    raise ValueError("purchase split does not add up to charging")
        if any(v < -1e-9 for arr in (self.charge_kw, self.discharge_kw, self.reserve_kw) for v in arr):
            raise ValueError("scheme powers must be non-negative")

    @property
    def horizon(self) -> int:
        return len(self.charge_kw)

    @classmethod
    def disordered(cls, profile_kw) -> "EvScheme":
        """Plug-on-arrival seed: pure charging, no discharge, no reserve."""
        n = len(profile_kw)
        return cls(
            charge_kw=tuple(float(v) for v in profile_kw),
            discharge_kw=(0.0,) * n,
            reserve_kw=(0.0,) * n,
        )


@dataclass
class UpperSolution:
    """Community schedule with its cost and reserve bookkeeping."""

    f1: float
    tsl_kw: np.ndarray
    eil_kw: np.ndarray
    hil_kw: np.ndarray
    grid_tsl_kw: np.ndarray
    grid_gl_kw: np.ndarray
    grid_hl_kw: np.ndarray
    grid_ess_kw: np.ndarray
    rg_load_kw: np.ndarray
    rg_hl_kw: np.ndarray
    rg_ess_kw: np.ndarray
    rg_ev_kw: np.ndarray
    surplus_kw: np.ndarray
    ess_ch_kw: np.ndarray
    ess_dc_kw: np.ndarray
    ess_kwh: np.ndarray
    hsd_ch_kw: np.ndarray
    hsd_dc_kw: np.ndarray
    hsd_kwh: np.ndarray
    boiler_elec_kw: np.ndarray
    boiler_heat_kw: np.ndarray
    r_grid_kw: np.ndarray
    r_ess_kw: np.ndarray
    r_ev_kw: np.ndarray
    status: str = "optimal"

    @property
    def horizon(self) -> int:
        return self.tsl_kw.size

    @property
    def grid_total_kw(self) -> np.ndarray:
        return self.grid_tsl_kw + self.grid_gl_kw + self.grid_hl_kw + self.grid_ess_kw

    @property
    def cl_cap_kw(self) -> np.ndarray:
        """Renewable energy on offer to the station next round."""
        return self.surplus_kw + self.rg_ev_kw

    @property
    def deficit_el_kw(self) -> np.ndarray:
        """Grid power bought for the electric load after self-supply."""
        return self.grid_tsl_kw + self.grid_gl_kw

    @property
    def deficit_hl_kw(self) -> np.ndarray:
        """Grid power bought for the boiler after self-supply."""
        return self.grid_hl_kw


def _big_m(seq: ProbSeq, assets: CiesAssets, r_ev_cap: float) -> float:
    mean = seq.expectation()
    spread = max(mean, seq.n_states * seq.step_q - mean)
    return (
        spread
        + assets.grid_p_max_kw
        + assets.ess.p_dc_max_kw
        + r_ev_cap
        + 1.0
    )


def build_chance_constraint(
    model: MilpModel,
    period: int,
    seq: ProbSeq,
    reserve: dict[int, float],
    alpha: float,
    tau: float,
) -> list[int]:
    """Add the coverage machinery for one period; returns the binary columns.

    ``reserve`` maps columns to coefficients for the period's procured
    reserve (all terms non-negative).  For every output state u a binary
    marks whether that reserve covers the shortfall ``E - u*q``; a forcing
    pair pins the binary to the event, a tight row gives the integer hull
    of the covered branch, a monotone chain orders the binaries, and the
    coverage row requires the marked states to carry probability at least
    alpha.  ``tau`` must exceed every achievable gap between reserve and
    shortfall, both signs.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    if tau <= 0:
        raise ValueError("forcing constant must be positive")
    mean = seq.expectation()
    w_cols: list[int] = []
    for u in range(seq.probs.size):
        w = model.add_binary(f"w[{period},{u}]")
        w_cols.append(w)
        shortfall = mean - u * seq.step_q
        # Forcing pair: reserve strictly above the shortfall pushes w to 1,
        # reserve below pushes it to 0.
        row = dict(reserve)
        row[w] = -tau
        model.add_constr(f"cc_force_up[{period},{u}]", row, "<=", shortfall)
        model.add_constr(f"cc_force_dn[{period},{u}]", dict(row), ">=", shortfall - tau)
        if shortfall > 0:
            # Integer hull of the covered branch; tightens the relaxation.
            tight = dict(reserve)
            tight[w] = -shortfall
            model.add_constr(f"cc_tight[{period},{u}]", tight, ">=", 0.0)
        if u > 0:
            model.add_constr(
                f"cc_mono[{period},{u}]",
                {w_cols[u - 1]: 1.0, w: -1.0},
                "<=",
                0.0,
            )
    model.add_constr(
        f"cc_cover[{period}]",
        {w: float(p) for w, p in zip(w_cols, seq.probs)},
        ">=",
        alpha,
    )
    return w_cols


def build_upper(
    assets: CiesAssets,
    loads: LoadProfile,
    envelope: FlexEnvelope,
    tariff: TouTariff,
    price: PriceSignal,
    seqs: list[ProbSeq],
    scheme: EvScheme,
    alpha: float,
    ev_reserve_cap_kw=None,
) -> MilpModel:
    """Assemble the community MILP for one round.

    ``price`` is the station-facing signal under which the committed
    scheme was transacted (the TOU signal for the seed round).

    ``ev_reserve_cap_kw`` bounds the reserve the community may request
    from the station per period (its discharge headroom, scaled by how
    much of the fleet is plugged in).  None means no station reserve is
    on offer; the request columns are then pinned at zero.
    """
    horizon = loads.horizon
    if ev_reserve_cap_kw is None:
        ev_reserve_cap_kw = [0.0] * horizon
    for name, n in (
        ("envelope", envelope.horizon),
        ("tariff", tariff.horizon),
        ("price", price.horizon),
        ("sequences", len(seqs)),
        ("scheme", scheme.horizon),
        ("reserve caps", len(ev_reserve_cap_kw)),
    ):
        if n != horizon:
            raise ValueError(f"{name} horizon {n} != loads horizon {horizon}")
    if any(c < 0 for c in ev_reserve_cap_kw):
        raise ValueError("station reserve caps must be non-negative")

    dt = assets.dt_hours
    m = MilpModel("community-dispatch")
    obj: dict[int, float] = {}
    const = 0.0

    split_fixed = scheme.rg_buy_kw is not None
    e_rgs = [seq.expectation() for seq in seqs]

    # --- column blocks, one pass per period
    col = {}
    for t in range(horizon):
        col[("tsl", t)] = m.add_var(
            f"tsl[{t}]", envelope.shift_min_kw[t], envelope.shift_max_kw[t]
        )
        col[("eil", t)] = m.add_var(f"eil[{t}]", 0.0, envelope.eil_max_kw[t])
        col[("hil", t)] = m.add_var(f"hil[{t}]", 0.0, envelope.hil_max_kw[t])
        for bucket in ("grid_tsl", "grid_gl", "grid_hl", "grid_ess"):
            col[(bucket, t)] = m.add_var(f"{bucket}[{t}]")
        for bucket in ("rg_load", "rg_hl", "rg_ess"):
            col[(bucket, t)] = m.add_var(f"{bucket}[{t}]")
        col[("surplus", t)] = m.add_var(f"surplus[{t}]")
        if split_fixed:
            col[("rg_ev", t)] = None  # constant scheme.rg_buy_kw[t]
        else:
            col[("rg_ev", t)] = m.add_var(f"rg_ev[{t}]", 0.0, scheme.charge_kw[t])
        col[("ess_ch", t)] = m.add_var(f"ess_ch[{t}]", 0.0, assets.ess.p_ch_max_kw)
        col[("ess_dc", t)] = m.add_var(f"ess_dc[{t}]", 0.0, assets.ess.p_dc_max_kw)
        col[("ess_c", t)] = m.add_var(
            f"ess_c[{t}]", assets.ess.c_min_kwh, assets.ess.c_max_kwh
        )
        col[("hsd_ch", t)] = m.add_var(f"hsd_ch[{t}]", 0.0, assets.hsd.p_ch_max_kw)
        col[("hsd_dc", t)] = m.add_var(f"hsd_dc[{t}]", 0.0, assets.hsd.p_dc_max_kw)
        col[("hsd_c", t)] = m.add_var(
            f"hsd_c[{t}]", assets.hsd.c_min_kwh, assets.hsd.c_max_kwh
        )
        boiler_elec_cap = (
            assets.boiler.count * assets.boiler.p_heat_max_kw / assets.boiler.efficiency
        )
        col[("dhp", t)] = m.add_var(f"dhp[{t}]", 0.0, boiler_elec_cap)
        col[("r_grid", t)] = m.add_var(f"r_grid[{t}]", 0.0, assets.grid_p_max_kw)
        col[("r_ess", t)] = m.add_var(f"r_ess[{t}]", 0.0, assets.ess.p_dc_max_kw)
        col[("r_ev", t)] = m.add_var(f"r_ev[{t}]", 0.0, float(ev_reserve_cap_kw[t]))

    # --- rows
    for t in range(horizon):
        rg_ev_coef = {} if split_fixed else {col[("rg_ev", t)]: 1.0}
        rg_ev_const = scheme.rg_buy_kw[t] if split_fixed else 0.0

        # Electric bus: grid buckets + renewable shares + storage and station
        # discharge serve the post-response load, the boiler and the slack.
        m.add_constr(
            f"bus_elec[{t}]",
            {
                col[("grid_tsl", t)]: 1.0,
                col[("grid_gl", t)]: 1.0,
                col[("grid_hl", t)]: 1.0,
                col[("rg_load", t)]: 1.0,
                col[("rg_hl", t)]: 1.0,
                col[("ess_dc", t)]: 1.0,
                col[("tsl", t)]: -1.0,
                col[("eil", t)]: 1.0,
                col[("dhp", t)]: -1.0,
            },
            "=",
            loads.fixed_kw[t] - scheme.discharge_kw[t],
        )
        # Storage charging node keeps its sourcing explicit.
        m.add_constr(
            f"bus_ess[{t}]",
            {
                col[("grid_ess", t)]: 1.0,
                col[("rg_ess", t)]: 1.0,
                col[("ess_ch", t)]: -1.0,
            },
            "=",
            0.0,
        )
        # Renewable expectation splits across its sinks plus surplus.
        row = {
            col[("rg_load", t)]: 1.0,
            col[("rg_hl", t)]: 1.0,
            col[("rg_ess", t)]: 1.0,
            col[("surplus", t)]: 1.0,
        }
        row.update(rg_ev_coef)
        m.add_constr(f"rg_split[{t}]", row, "=", e_rgs[t] - rg_ev_const)

        # Interconnection cap shared with the station's grid purchases.
        relay_const = scheme.charge_kw[t] - rg_ev_const
        cap_row = {
            col[("grid_tsl", t)]: 1.0,
            col[("grid_gl", t)]: 1.0,
            col[("grid_hl", t)]: 1.0,
            col[("grid_ess", t)]: 1.0,
            col[("r_grid", t)]: 1.0,
        }
        if not split_fixed:
            cap_row[col[("rg_ev", t)]] = -1.0
        m.add_constr(
            f"grid_cap[{t}]", cap_row, "<=", assets.grid_p_max_kw - relay_const
        )

        # Delivered heat bus.
        m.add_constr(
            f"bus_heat[{t}]",
            {
                col[("dhp", t)]: assets.boiler.efficiency,
                col[("hsd_dc", t)]: 1.0,
                col[("hsd_ch", t)]: -1.0,
                col[("hil", t)]: 1.0,
            },
            "=",
            loads.heat_kw[t],
        )

        # Storage dynamics (end-of-period capacities, cyclic boundary).
        for tag, params in (("ess", assets.ess), ("hsd", assets.hsd)):
            prev = {} if t == 0 else {col[(f"{tag}_c", t - 1)]: -1.0}
            rhs = params.c_init_kwh if t == 0 else 0.0
            row = {
                col[(f"{tag}_c", t)]: 1.0,
                col[(f"{tag}_ch", t)]: -params.eta_ch * dt,
                col[(f"{tag}_dc", t)]: dt / params.eta_dc,
            }
            row.update(prev)
            m.add_constr(f"{tag}_dyn[{t}]", row, "=", rhs)

        # Spinning reserve from the battery: bounded by energy above the
        # floor at the start of the period and by unused discharge headroom.
        energy_row = {col[("r_ess", t)]: 1.0}
        if t == 0:
            energy_rhs = assets.ess.eta_dc * (assets.ess.c_init_kwh - assets.ess.c_min_kwh) / dt
        else:
            energy_row[col[("ess_c", t - 1)]] = -assets.ess.eta_dc / dt
            energy_rhs = -assets.ess.eta_dc * assets.ess.c_min_kwh / dt
        m.add_constr(f"r_ess_energy[{t}]", energy_row, "<=", energy_rhs)
        m.add_constr(
            f"r_ess_power[{t}]",
            {col[("r_ess", t)]: 1.0, col[("ess_dc", t)]: 1.0},
            "<=",
            assets.ess.p_dc_max_kw,
        )

        # Reserve adequacy against the renewable shortfall distribution.
        # The station's share is a decision here: the community requests
        # what is cheapest, and the station commits up to the request in
        # its own solve.
        build_chance_constraint(
            m,
            t,
            seqs[t],
            {col[("r_grid", t)]: 1.0, col[("r_ess", t)]: 1.0, col[("r_ev", t)]: 1.0},
            alpha,
            _big_m(seqs[t], assets, float(ev_reserve_cap_kw[t])),
        )

        # Every kilowatt bought this period is re-offered to the station
        # as deficit, and the station sells energy into that offer before
        # it sells reserve (energy pays an order of magnitude more).  So
        # reserve booked on top of this period's own purchases would never
        # be delivered: cap the request by the headroom the offer leaves,
        # r_ev <= cap - purchases, collapsing to zero once purchases use
        # up the cap.
        cap_t = float(ev_reserve_cap_kw[t])
        if cap_t > 0.0:
            spent = m.add_binary(f"ev_res_spent[{t}]")
            m.add_constr(
                f"r_ev_headroom[{t}]",
                {
                    col[("r_ev", t)]: 1.0,
                    col[("grid_tsl", t)]: 1.0,
                    col[("grid_gl", t)]: 1.0,
                    col[("grid_hl", t)]: 1.0,
                    spent: -assets.grid_p_max_kw,
                },
                "<=",
                cap_t,
            )
            m.add_constr(
                f"r_ev_choked[{t}]",
                {col[("r_ev", t)]: 1.0, spent: cap_t},
                "<=",
                cap_t,
            )

        # --- objective terms
        for bucket in ("grid_tsl", "grid_gl", "grid_hl", "grid_ess"):
            obj[col[(bucket, t)]] = obj.get(col[(bucket, t)], 0.0) + tariff.price[t] * dt
        obj[col[("r_grid", t)]] = assets.reserve_price_grid * dt
        obj[col[("r_ess", t)]] = assets.reserve_price_ess * dt
        obj[col[("r_ev", t)]] = assets.reserve_price_ev * dt
        obj[col[("ess_ch", t)]] = (
            obj.get(col[("ess_ch", t)], 0.0) + assets.ess.depreciation * dt
        )
        obj[col[("eil", t)]] = obj.get(col[("eil", t)], 0.0) + assets.comp_electric * dt
        obj[col[("hil", t)]] = assets.comp_heat * dt
        const += price.omega_rt[t] * scheme.discharge_kw[t] * dt
        if split_fixed:
            const -= price.omega_rt[t] * scheme.rg_buy_kw[t] * dt
        else:
            obj[col[("rg_ev", t)]] = -price.omega_rt[t] * dt

    # Cyclic storage boundary.
    for tag, params in (("ess", assets.ess), ("hsd", assets.hsd)):
        m.add_constr(
            f"{tag}_cycle",
            {col[(f"{tag}_c", horizon - 1)]: 1.0},
            "=",
            params.c_init_kwh,
        )
    # Daily shift conservation.
    m.add_constr(
        "tsl_balance", {col[("tsl", t)]: 1.0 for t in range(horizon)}, "=", 0.0
    )

    m.set_objective(obj, constant=const)
    return m


def _series(sol: MilpSolution, name: str, horizon: int) -> np.ndarray:
    return np.array([sol.values[f"{name}[{t}]"] for t in range(horizon)])


def binding_big_m_rows(model: MilpModel, sol: MilpSolution, tol: float = 1e-6) -> list[str]:
    """Names of forcing rows whose relaxed side is binding.

    The forcing constant must dominate every achievable reserve level; a
    relaxed row sitting on its bound means it is clipping the optimum
    instead of vanishing, so the constant was chosen too small.
    """
    x = np.array([sol.values[n] for n in model.var_names])
    flagged = []
    for name, row, sense, rhs in model.rows:
        if not name.startswith("cc_force_"):
            continue
        w_cols = [i for i in row if model.var_kind[i] == BINARY]
        if len(w_cols) != 1:
            continue
        w_val = x[w_cols[0]]
        relaxed = (name.startswith("cc_force_up") and w_val > 0.5) or (
            name.startswith("cc_force_dn") and w_val < 0.5
        )
        if not relaxed:
            continue
        lhs = sum(c * x[i] for i, c in row.items())
        if abs(lhs - rhs) <= tol * max(1.0, abs(rhs)):
            flagged.append(name)
    return flagged


def solve_upper(
    model: MilpModel,
    assets: CiesAssets,
    scheme: EvScheme,
    horizon: int,
    backend=None,
    rel_gap: float = 1e-6,
    time_limit: float | None = None,
) -> UpperSolution:
    """Solve the community model and unpack the schedule."""
    sol = solve(model, backend=backend, rel_gap=rel_gap, time_limit=time_limit)
    clipped = binding_big_m_rows(model, sol)
    if clipped:
        raise SolverError(
            "forcing constant too small, rows binding on the relaxed side: "
            + ", ".join(clipped[:5])
        )
    split_fixed = scheme.rg_buy_kw is not None
    rg_ev = (
        np.array(scheme.rg_buy_kw, dtype=float)
        if split_fixed
        else _series(sol, "rg_ev", horizon)
    )
    boiler_elec = _series(sol, "dhp", horizon)
    return UpperSolution(
        f1=sol.objective,
        tsl_kw=_series(sol, "tsl", horizon),
        eil_kw=_series(sol, "eil", horizon),
        hil_kw=_series(sol, "hil", horizon),
        grid_tsl_kw=_series(sol, "grid_tsl", horizon),
        grid_gl_kw=_series(sol, "grid_gl", horizon),
        grid_hl_kw=_series(sol, "grid_hl", horizon),
        grid_ess_kw=_series(sol, "grid_ess", horizon),
        rg_load_kw=_series(sol, "rg_load", horizon),
        rg_hl_kw=_series(sol, "rg_hl", horizon),
        rg_ess_kw=_series(sol, "rg_ess", horizon),
        rg_ev_kw=rg_ev,
        surplus_kw=_series(sol, "surplus", horizon),
        ess_ch_kw=_series(sol, "ess_ch", horizon),
        ess_dc_kw=_series(sol, "ess_dc", horizon),
        ess_kwh=_series(sol, "ess_c", horizon),
        hsd_ch_kw=_series(sol, "hsd_ch", horizon),
        hsd_dc_kw=_series(sol, "hsd_dc", horizon),
        hsd_kwh=_series(sol, "hsd_c", horizon),
        boiler_elec_kw=boiler_elec,
        boiler_heat_kw=boiler_elec * assets.boiler.efficiency,
        r_grid_kw=_series(sol, "r_grid", horizon),
        r_ess_kw=_series(sol, "r_ess", horizon),
        r_ev_kw=_series(sol, "r_ev", horizon),
        status=sol.status,
    )


def extract_reserve_request(
    solution: UpperSolution, seqs: list[ProbSeq], alpha: float
) -> np.ndarray:
    """Reserve the community still wants from the station: the confidence
    quantile minus what grid and battery already provide, floored at zero.

    With positive reserve prices this equals the solved request columns;
    the recomputation keeps the handoff honest when a zero price leaves
    the request degenerate.
    """
    out = np.zeros(solution.horizon)
    for t, seq in enumerate(seqs):
        need = seq.reserve_quantile(alpha)
        out[t] = max(0.0, need - solution.r_grid_kw[t] - solution.r_ess_kw[t])
    return out
