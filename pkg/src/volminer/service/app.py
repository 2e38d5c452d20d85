"""HTTP front for the lightweight operations.

Closed-form strategy evaluation and thresholds, mempool curve fitting,
base-fee extraction, and environment sessions are cheap enough to serve
per request.  The exact MDP solves (minutes of CPU each) stay out of the
service on purpose; run those through the command line.
"""

from __future__ import annotations

import threading
import uuid

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from volminer import __version__
from volminer import closed_form
from volminer.mempool import (
    BlockRecord,
    extract_base_fee,
    fit_bivariate,
    fit_linear,
    fit_log,
)
from volminer.simenv.protocol import EnvSession

app = FastAPI(title="volminer", version=__version__)


class HealthResponse(BaseModel):
    status: str
    version: str


@app.get("/health", response_model=HealthResponse)
def health() -> dict:
    return {"status": "ok", "version": __version__}


# -- closed-form strategies -------------------------------------------


class StrategyEvalRequest(BaseModel):
    strategy: str = Field(description="one of pi1w, pi1np, pi2np")
    alpha: float
    g: float = 0.5
    p: float = 0.001
    fee_boost: float = 3.2


class StrategyEvalResponse(BaseModel):
    strategy: str
    n_honest: float
    n_adv: float
    reward_adv: float
    profit: float
    honest_profit: float
    percentage_increase: float
    stationary: dict[str, float]


class StrategyThresholdRequest(BaseModel):
    strategy: str
    g: float = 0.5
    p: float = 0.001
    fee_boost: float = 3.2
    epsilon: float = 1e-6
    tol: float = 1e-5


class ThresholdResponse(BaseModel):
    alpha_star: float
    found: bool
    evaluations: int


@app.post("/closed-form/eval", response_model=StrategyEvalResponse)
def closed_form_eval(req: StrategyEvalRequest) -> dict:
    try:
        ev = closed_form.evaluate(req.strategy, req.alpha, req.g, req.p, req.fee_boost)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    honest = closed_form.honest_profit(req.alpha, req.p, req.fee_boost)
    return {
        "strategy": req.strategy,
        "n_honest": ev.n_honest,
        "n_adv": ev.n_adv,
        "reward_adv": ev.reward_adv,
        "profit": ev.profit,
        "honest_profit": honest,
        "percentage_increase": (ev.profit / honest - 1.0) * 100.0,
        "stationary": ev.stationary,
    }


@app.post("/closed-form/threshold", response_model=ThresholdResponse)
def closed_form_threshold(req: StrategyThresholdRequest) -> dict:
    try:
        res = closed_form.strategy_threshold(
            req.strategy, req.g, req.p, req.fee_boost,
            epsilon=req.epsilon, tol=req.tol)
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    return {"alpha_star": res.alpha_star, "found": res.found,
            "evaluations": res.evaluations}


# -- mempool fitting ---------------------------------------------------


class BlockRow(BaseModel):
    generation_time: float
    total_fee: float
    height: int = 0
    timestamp: float = 0.0
    parent_generation_time: float | None = None


class FitRequest(BaseModel):
    blocks: list[BlockRow]
    family: str = Field(default="linear",
                        description="linear, log, or bivariate")


class FitResponse(BaseModel):
    family: str
    coefficients: dict[str, float]
    r_squared: float
    own_time_dominates: bool | None = None


@app.post("/mempool/fit", response_model=FitResponse)
def mempool_fit(req: FitRequest) -> dict:
    records = [BlockRecord(b.height, b.timestamp, b.generation_time,
                           b.total_fee, b.parent_generation_time)
               for b in req.blocks]
    try:
        if req.family == "linear":
            fee0, r_fee, r2 = fit_linear(records)
            return {"family": "linear",
                    "coefficients": {"fee0": fee0, "r_fee": r_fee},
                    "r_squared": r2}
        if req.family == "log":
            a, b, c, r2 = fit_log(records)
            return {"family": "log",
                    "coefficients": {"a": a, "b": b, "c": c},
                    "r_squared": r2}
        if req.family == "bivariate":
            c0, c1, c2, r2, own = fit_bivariate(records)
            return {"family": "bivariate",
                    "coefficients": {"c0": c0, "c1": c1, "c2": c2},
                    "r_squared": r2, "own_time_dominates": own}
    except (ValueError, RuntimeError) as exc:
        raise HTTPException(status_code=422, detail=str(exc))
    raise HTTPException(status_code=422, detail=f"unknown fit family {req.family!r}")


class BandWeight(BaseModel):
    band: float
    weight: float


class BaseFeeRequest(BaseModel):
    snapshots: list[list[BandWeight]]


class BaseFeeResponse(BaseModel):
    base_fee: float


@app.post("/mempool/base-fee", response_model=BaseFeeResponse)
def mempool_base_fee(req: BaseFeeRequest) -> dict:
    snaps = [[(b.band, b.weight) for b in snap] for snap in req.snapshots]
    try:
        return {"base_fee": extract_base_fee(snaps)}
    except ValueError as exc:
        raise HTTPException(status_code=422, detail=str(exc))


# -- environment sessions ----------------------------------------------

_sessions: dict[str, EnvSession] = {}
_sessions_lock = threading.Lock()


class SessionResponse(BaseModel):
    session_id: str


@app.post("/env/sessions", response_model=SessionResponse)
def create_session() -> dict:
    session_id = uuid.uuid4().hex
    with _sessions_lock:
        _sessions[session_id] = EnvSession()
    return {"session_id": session_id}


@app.post("/env/sessions/{session_id}")
def session_message(session_id: str, message: dict) -> dict:
    with _sessions_lock:
        session = _sessions.get(session_id)
    if session is None:
        raise HTTPException(status_code=404, detail="unknown session")
    # The body is a wire-protocol message; error replies come back as
    # ordinary payloads so the session survives bad input.
    return session.handle(message)


@app.delete("/env/sessions/{session_id}")
def close_session(session_id: str) -> dict:
    with _sessions_lock:
        if _sessions.pop(session_id, None) is None:
            raise HTTPException(status_code=404, detail="unknown session")
    return {"closed": session_id}
