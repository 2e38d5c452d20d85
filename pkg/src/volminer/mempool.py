"""Fee-band mempool model: weight accumulation per sat/vByte band,
regression fitting of time-fee and weight-time curves, base-fee
extraction, and greedy block packing under the 1 vMB weight limit.

The pool is a handful of fee bands; each band's pending transaction
weight grows over time according to a fitted function of elapsed
minutes.  A block takes up to 1,000,000 vBytes starting from the highest
band; the lowest band (the base band) never runs dry, which is exactly
the definition of the base fee: a fee level backed by at least 1 vMB of
transactions at all times.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

BLOCK_WEIGHT_LIMIT = 1_000_000  # vBytes
SAT_PER_BTC = 1e8

GROWTH_KINDS = ("linear", "quadratic", "cubic", "log")


@dataclass(frozen=True)
class GrowthFunction:
    """Cumulative arriving weight (vBytes) as a function of elapsed
    minutes.  Polynomial coefficients are ascending; the log kind is
    a*ln(t+b)+c."""

    kind: str
    coeffs: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in GROWTH_KINDS:
            raise ValueError(f"unknown growth kind {self.kind!r}")
        degree = {"linear": 2, "quadratic": 3, "cubic": 4, "log": 3}[self.kind]
        if len(self.coeffs) != degree:
            raise ValueError(f"{self.kind} growth needs {degree} coefficients")
        if self.kind == "log" and self.coeffs[1] <= 0:
            raise ValueError("log growth needs b > 0")

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"elapsed time must be non-negative, got {t}")
        if self.kind == "log":
            a, b, c = self.coeffs
            return a * math.log(t + b) + c
        return sum(c * t ** k for k, c in enumerate(self.coeffs))


@dataclass(frozen=True)
class FeeBandModel:
    """Ascending fee bands (sat/vByte) with one growth function each."""

    bands: tuple[float, ...]
    growth: tuple[GrowthFunction, ...]
    base_band_unlimited: bool = True

    def __post_init__(self):
        if not self.bands:
            raise ValueError("need at least one fee band")
        if any(b <= 0 for b in self.bands):
            raise ValueError("band fees must be positive")
        if any(x >= y for x, y in zip(self.bands, self.bands[1:])):
            raise ValueError("band fees must be strictly ascending")
        if len(self.growth) != len(self.bands):
            raise ValueError("one growth function per band required")

    @property
    def base_fee(self) -> float:
        return self.bands[0]


@dataclass(frozen=True)
class PoolState:
    """Per-band pending weight (vBytes) at a given clock (minutes)."""

    weights: tuple[float, ...]
    clock: float = 0.0

    def __post_init__(self):
        if any(w < 0 for w in self.weights):
            raise ValueError("band weights must be non-negative")


@dataclass(frozen=True)
class BlockRecord:
    height: int
    timestamp: float
    generation_time: float  # minutes
    total_fee: float        # BTC
    parent_generation_time: float | None = None

    def __post_init__(self):
        if self.generation_time < 0:
            raise ValueError("generation time must be non-negative")
        if self.total_fee < 0:
            raise ValueError("fee must be non-negative")


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def fit_linear(blocks: list[BlockRecord]) -> tuple[float, float, float]:
    """Least-squares fee(t) = fee0 + r_fee*t; returns (fee0, r_fee, R^2)."""
    t = np.array([b.generation_time for b in blocks], dtype=float)
    y = np.array([b.total_fee for b in blocks], dtype=float)
    if len(set(t.tolist())) < 2:
        raise ValueError("need at least 2 distinct generation times")
    A = np.column_stack([np.ones_like(t), t])
    (fee0, r_fee), *_ = np.linalg.lstsq(A, y, rcond=None)
    return float(fee0), float(r_fee), _r_squared(y, A @ [fee0, r_fee])


def fit_log(blocks: list[BlockRecord]) -> tuple[float, float, float, float]:
    """Least-squares fee(t) = a*ln(t+b)+c; returns (a, b, c, R^2).

    Deterministic: fixed initialization from the linear fit, b kept
    positive by the solver bounds.
    """
    t = np.array([b.generation_time for b in blocks], dtype=float)
    y = np.array([b.total_fee for b in blocks], dtype=float)
    if len(blocks) < 3:
        raise ValueError("need at least 3 points")

    def residuals(params):
        a, b, c = params
        return a * np.log(t + b) + c - y

    fee0, r_fee, _ = fit_linear(blocks)
    x0 = [max(abs(r_fee) * 10.0, 1e-3), 1.0, fee0]
    sol = least_squares(residuals, x0, bounds=([-np.inf, 1e-9, -np.inf], np.inf))
    if not sol.success:
        raise RuntimeError(f"log fit did not converge (residual {sol.cost:.3e})")
    a, b, c = (float(v) for v in sol.x)
    return a, b, c, _r_squared(y, a * np.log(t + b) + c)


def fit_bivariate(blocks: list[BlockRecord]) -> tuple[float, float, float, float, bool]:
    """OLS plane fee = c0 + c1*own_gen_time + c2*parent_gen_time.

    Returns (c0, c1, c2, R^2, own_time_dominates) where the flag marks
    c1 > c2: a block's own generation time predicting its fee better
    than its parent's.
    """
    if any(b.parent_generation_time is None for b in blocks):
        raise ValueError("parent generation times required for the bivariate fit")
    if len(blocks) < 3:
        raise ValueError("need at least 3 points")
    t1 = np.array([b.generation_time for b in blocks], dtype=float)
    t2 = np.array([b.parent_generation_time for b in blocks], dtype=float)
    y = np.array([b.total_fee for b in blocks], dtype=float)
    A = np.column_stack([np.ones_like(t1), t1, t2])
    if np.linalg.matrix_rank(A) < 3:
        raise ValueError("design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    c0, c1, c2 = (float(v) for v in coef)
    return c0, c1, c2, _r_squared(y, A @ coef), c1 > c2


def fit_growth(times: list[float], weights: list[float]) -> GrowthFunction:
    """Best cumulative weight-time function by R^2 among the supported
    families."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(weights, dtype=float)
    if len(t) < 3:
        raise ValueError("need at least 3 points")
    candidates: list[tuple[float, GrowthFunction]] = []
    for kind, degree in (("linear", 1), ("quadratic", 2), ("cubic", 3)):
        if len(t) <= degree:
            continue
        coeffs = np.polynomial.polynomial.polyfit(t, y, degree)
        fn = GrowthFunction(kind, tuple(float(c) for c in coeffs))
        candidates.append((_r_squared(y, np.array([fn(v) for v in t])), fn))
    try:
        records = [BlockRecord(0, 0.0, float(tv), float(max(yv, 0.0)))
                   for tv, yv in zip(t, y)]
        a, b, c, r2 = fit_log(records)
        candidates.append((r2, GrowthFunction("log", (a, b, c))))
    except (RuntimeError, ValueError):
        pass
    return max(candidates, key=lambda pair: pair[0])[1]


def advance_pool(pool: PoolState, model: FeeBandModel, dt: float) -> PoolState:
    """Accrue dt minutes of arriving weight into every band."""
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    if len(pool.weights) != len(model.bands):
        raise ValueError("pool and model band counts differ")
    grown = tuple(
        w + g(pool.clock + dt) - g(pool.clock)
        for w, g in zip(pool.weights, model.growth)
    )
    return PoolState(weights=grown, clock=pool.clock + dt)


def pack_block(
    pool: PoolState,
    model: FeeBandModel,
    fee_cap: float | None = None,
    weight_limit: int = BLOCK_WEIGHT_LIMIT,
) -> tuple[float, dict[float, int], PoolState]:
    """Greedy highest-band-first fill.

    Returns (block fee in BTC, weight taken per band fee, remaining
    pool).  With fee_cap set, per band only as much weight is taken as
    keeps the total fee within the cap (undercut packing); the block may
    then be underweight.  The base band is bottomless when the model
    says so.
    """
    if fee_cap is not None and fee_cap < 0:
        raise ValueError(f"fee cap must be non-negative, got {fee_cap}")
    room = weight_limit
    fee_sat = 0.0
    taken: dict[float, int] = {}
    new_weights = list(pool.weights)
    for j in range(len(model.bands) - 1, -1, -1):
        if room <= 0:
            break
        rate = model.bands[j]
        avail = math.inf if (j == 0 and model.base_band_unlimited) else new_weights[j]
        take = min(avail, room)
        if fee_cap is not None:
            budget_sat = fee_cap * SAT_PER_BTC - fee_sat
            take = min(take, budget_sat / rate)
        take = int(take)
        if take <= 0:
            continue
        fee_sat += rate * take
        taken[rate] = take
        room -= take
        if not (j == 0 and model.base_band_unlimited):
            new_weights[j] -= take
    return fee_sat / SAT_PER_BTC, taken, replace(pool, weights=tuple(new_weights))


def extract_base_fee(snapshots: list[list[tuple[float, float]]]) -> float:
    """Largest fee level with at least 1 vMB of weight at or above it in
    every snapshot.

    Each snapshot is a list of (band fee sat/vByte, weight vBytes).
    Falls back to the smallest observed band fee when no level clears
    the bar in all snapshots.
    """
    if not snapshots or any(not snap for snap in snapshots):
        raise ValueError("need at least one nonempty snapshot")
    candidates = sorted({fee for snap in snapshots for fee, _ in snap}, reverse=True)

    def qualifies(level: float) -> bool:
        return all(
            sum(wt for fee, wt in snap if fee >= level) >= BLOCK_WEIGHT_LIMIT
            for snap in snapshots
        )

    for level in candidates:
        if qualifies(level):
            return level
    return candidates[-1]


def model_to_dict(model: FeeBandModel) -> dict:
    return {
        "bands": [
            {"fee": fee, "growth": {"kind": g.kind, "coeffs": list(g.coeffs)}}
            for fee, g in zip(model.bands, model.growth)
        ],
        "base_band_unlimited": model.base_band_unlimited,
    }


def model_from_dict(d: dict) -> FeeBandModel:
    bands = d.get("bands")
    if not bands:
        raise ValueError("band model needs a nonempty 'bands' list")
    return FeeBandModel(
        bands=tuple(float(b["fee"]) for b in bands),
        growth=tuple(
            GrowthFunction(b["growth"]["kind"], tuple(float(c) for c in b["growth"]["coeffs"]))
            for b in bands
        ),
        base_band_unlimited=bool(d.get("base_band_unlimited", True)),
    )


def load_band_model(path: str) -> FeeBandModel:
    with open(path) as f:
        return model_from_dict(json.load(f))


def save_band_model(model: FeeBandModel, path: str):
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f, indent=2)
        f.write("\n")


CSV_HEADER = ["height", "timestamp", "generation_time", "total_fee", "parent_generation_time"]


def load_block_records(path: str) -> list[BlockRecord]:
    """Read BlockRecord rows from CSV (header row required)."""
    records = []
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = set(CSV_HEADER[:4]) - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"CSV missing columns: {sorted(missing)}")
        for row in reader:
            parent = row.get("parent_generation_time") or None
            records.append(BlockRecord(
                height=int(row["height"]),
                timestamp=float(row["timestamp"]),
                generation_time=float(row["generation_time"]),
                total_fee=float(row["total_fee"]),
                parent_generation_time=float(parent) if parent is not None else None,
            ))
    if not records:
        raise ValueError(f"no block records in {path}")
    return records


def save_block_records(records: list[BlockRecord], path: str):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([r.height, r.timestamp, r.generation_time, r.total_fee,
                             "" if r.parent_generation_time is None else r.parent_generation_time])


def load_snapshots(path: str) -> list[list[tuple[float, float]]]:
    """Read snapshot series from JSON: [{"t": minutes, "bands":
    [{"band": sat/vByte, "weight": vBytes}, ...]}, ...]."""
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, list) or not raw:
        raise ValueError("snapshot file must hold a nonempty list")
    return [
        [(float(b["band"]), float(b["weight"])) for b in entry["bands"]]
        for entry in raw
    ]
