"""Batch front door: thresholds, strategy evaluation, mempool fitting,
Monte-Carlo simulation, environment serving, and figure-shaped CSV
tables.

Every file-producing command writes a sidecar manifest next to its
output (command, config echo, seeds, input digests) so any number in a
CSV can be regenerated exactly.
"""

from __future__ import annotations

import dataclasses
import csv as csv_mod
import functools
import hashlib
import json
import math
import sys
import urllib.request

import click
import numpy as np

from volminer import __version__, closed_form, simplified, werlman
from volminer.core import MiningConfig, time_averaged_profit
from volminer.mempool import (
    extract_base_fee,
    fit_bivariate,
    fit_linear,
    fit_log,
    load_band_model,
    load_block_records,
    load_snapshots,
)
from volminer.simenv import (
    PRE_DAM,
    MiningSimEnv,
    RewardSpec,
    honest_agent,
    serve_stdio,
    serve_tcp,
    undercut_agent,
)
from volminer.werlman import WerlmanParams

F_GRID = (0.26, 0.45, 0.74, 1.14, 1.58, 3.2)


def _fail_cleanly(fn):
    """Invalid configuration exits 1 with a structured message; click
    handles usage errors (exit 2) itself."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, RuntimeError, OSError) as exc:
            click.echo(json.dumps({"error": str(exc)}), err=True)
            sys.exit(1)

    return wrapper


def _digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out: str, config: dict, seeds: list[int] | None = None,
                    inputs: list[str] | None = None):
    manifest = {
        "command": sys.argv,
        "config": config,
        "seeds": seeds or [],
        "version": __version__,
        "inputs": {p: _digest(p) for p in (inputs or [])},
        "outputs": [out],
    }
    with open(out + ".manifest.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")


def _emit(payload: dict, out: str | None, config: dict,
          seeds: list[int] | None = None, inputs: list[str] | None = None):
    text = json.dumps(payload, indent=2)
    if out:
        with open(out, "w") as f:
            f.write(text + "\n")
        _write_manifest(out, config, seeds, inputs)
    click.echo(text)


def _post(server: str, path: str, payload: dict) -> dict:
    req = urllib.request.Request(
        server.rstrip("/") + path,
        data=json.dumps(payload).encode("utf-8"),
        headers={"Content-Type": "application/json"},
    )
    with urllib.request.urlopen(req) as resp:
        return json.load(resp)


@click.group()
@click.version_option(__version__)
def main():
    """Mining-strategy analysis under volatile block rewards."""


# -- whale-transaction environments -------------------------------------


@main.group(name="werlman")
def werlman_group():
    """Exact solves of the whale-transaction fork-race environments."""


@werlman_group.command("threshold")
@click.option("--variant", type=click.Choice(["original", "non_predictable", "both"]),
              default="both", show_default=True)
@click.option("--fee-boost", "-F", "fee_boost", type=float, default=3.2, show_default=True)
@click.option("--whale-prob", "-p", "whale_prob", type=float, default=0.001, show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--epsilon", type=float, default=1e-6, show_default=True)
@click.option("--tol", type=float, default=1e-4, show_default=True)
@click.option("--max-fork", type=int, default=8, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def werlman_threshold_cmd(variant, fee_boost, whale_prob, gamma, epsilon, tol,
                          max_fork, out):
    """Security threshold of one or both environment variants."""
    config = MiningConfig(alpha=0.1, gamma=gamma, max_fork_len=max_fork)
    variants = [variant] if variant != "both" else ["original", "non_predictable"]
    results = {}
    for v in variants:
        params = WerlmanParams(fee_boost=fee_boost, whale_prob=whale_prob, variant=v)
        res = werlman.werlman_threshold(params, config, epsilon=epsilon, tol=tol)
        results[v] = {"alpha_star": res.alpha_star, "found": res.found,
                      "evaluations": res.evaluations}
    payload = {"fee_boost": fee_boost, "whale_prob": whale_prob, "gamma": gamma,
               "thresholds": results}
    _emit(payload, out, payload)


# -- closed-form strategies ----------------------------------------------


@main.group(name="closed-form")
def closed_form_group():
    """Analytic evaluation of the fixed deviant strategies."""


@closed_form_group.command("eval")
@click.option("--strategy", type=click.Choice(list(closed_form.STRATEGY_IDS)), required=True)
@click.option("--alpha", type=float, required=True)
@click.option("--g", type=float, default=0.5, show_default=True)
@click.option("--p", type=float, default=0.001, show_default=True)
@click.option("--F", "fee_boost", type=float, default=3.2, show_default=True)
@click.option("--server", default=None, help="base URL of a running service")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def closed_form_eval(strategy, alpha, g, p, fee_boost, server, out):
    """Stationary averages and profit of one strategy."""
    config = {"strategy": strategy, "alpha": alpha, "g": g, "p": p,
              "fee_boost": fee_boost}
    if server:
        payload = _post(server, "/closed-form/eval", config)
    else:
        ev = closed_form.evaluate(strategy, alpha, g, p, fee_boost)
        honest = closed_form.honest_profit(alpha, p, fee_boost)
        payload = {
            "strategy": strategy,
            "n_honest": ev.n_honest, "n_adv": ev.n_adv,
            "reward_adv": ev.reward_adv, "profit": ev.profit,
            "honest_profit": honest,
            "percentage_increase": (ev.profit / honest - 1.0) * 100.0,
            "stationary": ev.stationary,
        }
    _emit(payload, out, config)


@closed_form_group.command("threshold")
@click.option("--strategy", type=click.Choice(list(closed_form.STRATEGY_IDS)), required=True)
@click.option("--g", type=float, default=0.5, show_default=True)
@click.option("--p", type=float, default=0.001, show_default=True)
@click.option("--F", "fee_boost", type=float, default=3.2, show_default=True)
@click.option("--epsilon", type=float, default=1e-6, show_default=True)
@click.option("--server", default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def closed_form_threshold_cmd(strategy, g, p, fee_boost, epsilon, server, out):
    """Least mining share at which the strategy beats honest mining."""
    config = {"strategy": strategy, "g": g, "p": p, "fee_boost": fee_boost,
              "epsilon": epsilon}
    if server:
        payload = _post(server, "/closed-form/threshold", config)
    else:
        res = closed_form.strategy_threshold(strategy, g, p, fee_boost, epsilon=epsilon)
        payload = {"alpha_star": res.alpha_star, "found": res.found,
                   "evaluations": res.evaluations}
    _emit(payload, out, config)


# -- simplified volatile model --------------------------------------------


def _schedule_from_options(schedule_file, calibrate_p, m, fee_boost, lambda_rate, fee0):
    if schedule_file:
        with open(schedule_file) as f:
            return simplified.TimeFeeSchedule.from_json(f.read())
    if calibrate_p is None:
        raise ValueError("give either --schedule or --calibrate-p")
    return simplified.calibrate_to_werlman(calibrate_p, lambda_rate, m, fee_boost,
                                           fee0=fee0)


_schedule_options = [
    click.option("--schedule", "schedule_file", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="time-fee schedule JSON"),
    click.option("--calibrate-p", type=float, default=None,
                 help="whale probability for calibration"),
    click.option("--M", "m", type=int, default=2, show_default=True),
    click.option("--F", "fee_boost", type=float, default=3.2, show_default=True),
    click.option("--lambda", "lambda_rate", type=float, default=0.1, show_default=True),
    click.option("--fee0", type=float, default=1.0, show_default=True),
]


def _with_options(options):
    def wrap(fn):
        for option in reversed(options):
            fn = option(fn)
        return fn
    return wrap


@main.group(name="simplified")
def simplified_group():
    """Time-bucketed fee model solves (pre- or post-adjustment)."""


@simplified_group.command("solve")
@click.option("--objective", type=click.Choice([simplified.PRE_DAM, simplified.POST_DAM]),
              default=simplified.POST_DAM, show_default=True)
@click.option("--alpha", type=float, required=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--protocol-reward", type=float, default=0.0, show_default=True)
@click.option("--max-fork", type=int, default=5, show_default=True)
@_with_options(_schedule_options)
@click.option("--policy-out", type=click.Path(dir_okay=False), default=None,
              help="per-state optimal action CSV")
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def simplified_solve(objective, alpha, gamma, protocol_reward, max_fork,
                     schedule_file, calibrate_p, m, fee_boost, lambda_rate, fee0,
                     policy_out, out):
    """Optimal profit and policy under the chosen objective."""
    schedule = _schedule_from_options(schedule_file, calibrate_p, m, fee_boost,
                                      lambda_rate, fee0)
    config = MiningConfig(alpha=alpha, gamma=gamma, protocol_reward=protocol_reward,
                          lambda_rate=schedule.lambda_rate, max_fork_len=max_fork)
    if objective == simplified.PRE_DAM:
        res, mdp = simplified.solve_predam(schedule, config)
    else:
        res, mdp = simplified.solve_postdam(schedule, config)
    honest = simplified.honest_profit(schedule, config)
    echo = {"objective": objective, "alpha": alpha, "gamma": gamma,
            "protocol_reward": protocol_reward, "max_fork": max_fork,
            "schedule": json.loads(schedule.to_json())}
    payload = {
        "profit": res.rho,
        "honest_profit": honest,
        "gain": res.rho - honest,
        "percentage_increase": (res.rho / honest - 1.0) * 100.0,
        "states": mdp.n_states,
        "schedule": json.loads(schedule.to_json()),
    }
    if policy_out:
        with open(policy_out, "w", newline="") as f:
            writer = csv_mod.writer(f)
            writer.writerow(["state", "action"])
            for idx, act in enumerate(res.policy):
                writer.writerow([idx, mdp.actions[act].name])
        _write_manifest(policy_out, echo)
        payload["policy_csv"] = policy_out
    _emit(payload, out, echo)


@simplified_group.command("threshold")
@click.option("--objective", type=click.Choice([simplified.PRE_DAM, simplified.POST_DAM]),
              default=simplified.POST_DAM, show_default=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--protocol-reward", type=float, default=0.0, show_default=True)
@click.option("--max-fork", type=int, default=5, show_default=True)
@click.option("--epsilon", type=float, default=1e-6, show_default=True)
@click.option("--tol", type=float, default=1e-4, show_default=True)
@_with_options(_schedule_options)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def simplified_threshold_cmd(objective, gamma, protocol_reward, max_fork, epsilon,
                             tol, schedule_file, calibrate_p, m, fee_boost,
                             lambda_rate, fee0, out):
    """Security threshold under the chosen objective."""
    schedule = _schedule_from_options(schedule_file, calibrate_p, m, fee_boost,
                                      lambda_rate, fee0)
    config = MiningConfig(alpha=0.1, gamma=gamma, protocol_reward=protocol_reward,
                          lambda_rate=schedule.lambda_rate, max_fork_len=max_fork)
    res = simplified.simplified_threshold(schedule, config, objective=objective,
                                          epsilon=epsilon, tol=tol)
    echo = {"objective": objective, "gamma": gamma,
            "protocol_reward": protocol_reward, "max_fork": max_fork,
            "epsilon": epsilon, "schedule": json.loads(schedule.to_json())}
    payload = {"alpha_star": res.alpha_star, "found": res.found,
               "evaluations": res.evaluations}
    _emit(payload, out, echo)


# -- mempool --------------------------------------------------------------


@main.group(name="mempool")
def mempool_group():
    """Fee-curve fitting and base-fee extraction."""


@mempool_group.command("fit")
@click.option("--blocks", type=click.Path(exists=True, dir_okay=False), required=True,
              help="block records CSV")
@click.option("--family", type=click.Choice(["linear", "log", "bivariate", "auto"]),
              default="auto", show_default=True)
@click.option("--server", default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def mempool_fit(blocks, family, server, out):
    """Fit a time-fee equation to observed blocks."""
    records = load_block_records(blocks)
    config = {"blocks": blocks, "family": family}

    def one(fam: str) -> dict:
        if server:
            rows = [dataclasses.asdict(r) for r in records]
            return _post(server, "/mempool/fit", {"blocks": rows, "family": fam})
        if fam == "linear":
            fee0, r_fee, r2 = fit_linear(records)
            return {"family": "linear", "coefficients": {"fee0": fee0, "r_fee": r_fee},
                    "r_squared": r2}
        if fam == "log":
            a, b, c, r2 = fit_log(records)
            return {"family": "log", "coefficients": {"a": a, "b": b, "c": c},
                    "r_squared": r2}
        c0, c1, c2, r2, own = fit_bivariate(records)
        return {"family": "bivariate",
                "coefficients": {"c0": c0, "c1": c1, "c2": c2},
                "r_squared": r2, "own_time_dominates": own}

    if family == "auto":
        fits = []
        for fam in ("linear", "log"):
            try:
                fits.append(one(fam))
            except (ValueError, RuntimeError):
                pass
        if not fits:
            raise ValueError("no fit family converged")
        payload = max(fits, key=lambda d: d["r_squared"])
    else:
        payload = one(family)
    _emit(payload, out, config, inputs=[blocks])


@mempool_group.command("base-fee")
@click.option("--snapshots", type=click.Path(exists=True, dir_okay=False), required=True,
              help="snapshot series JSON")
@click.option("--server", default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def mempool_base_fee(snapshots, server, out):
    """Largest fee level backed by a full block at all times."""
    snaps = load_snapshots(snapshots)
    if server:
        body = {"snapshots": [[{"band": b, "weight": w} for b, w in snap]
                              for snap in snaps]}
        payload = _post(server, "/mempool/base-fee", body)
    else:
        payload = {"base_fee": extract_base_fee(snaps)}
    _emit(payload, out, {"snapshots": snapshots}, inputs=[snapshots])


# -- Monte-Carlo simulation ------------------------------------------------


def _positive_steps(ctx, param, value):
    if value <= 0:
        raise click.BadParameter("steps must be positive")
    return value


def _env_rollout(model_path, config, agent, steps, seed):
    model = load_band_model(model_path)
    env = MiningSimEnv(config, model, RewardSpec(PRE_DAM, r_norm=1.0), seed=seed)
    env.reset()
    infos = []
    for _ in range(steps):
        _, info, _ = env.step(agent(env.state))
        infos.append(info)
    profit = time_averaged_profit(infos, normalization=1.0 / config.lambda_rate)
    return profit, env


@main.group(name="simulate")
def simulate_group():
    """Monte-Carlo rollouts of baseline agents and solved policies."""


_sim_options = [
    click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False),
                 required=True, help="fee-band model JSON"),
    click.option("--steps", type=int, required=True, callback=_positive_steps),
    click.option("--alpha", type=float, default=1 / 3, show_default=True),
    click.option("--gamma", type=float, default=0.5, show_default=True),
    click.option("--petty-ratio", type=float, default=0.0, show_default=True),
    click.option("--delta", "delta_btc", type=float, default=0.0, show_default=True),
    click.option("--protocol-reward", type=float, default=0.0, show_default=True),
    click.option("--lambda", "lambda_rate", type=float, default=0.1, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
    click.option("--out", type=click.Path(dir_okay=False), default=None),
]


@simulate_group.command("honest")
@_with_options(_sim_options)
@_fail_cleanly
def simulate_honest(model_path, steps, alpha, gamma, petty_ratio, delta_btc,
                    protocol_reward, lambda_rate, seed, out):
    """Honest-strategy rollout: profit per block interval."""
    config = MiningConfig(alpha=alpha, gamma=gamma, petty_ratio=petty_ratio,
                          delta_btc=delta_btc, protocol_reward=protocol_reward,
                          lambda_rate=lambda_rate)
    profit, env = _env_rollout(model_path, config, honest_agent, steps, seed)
    echo = {"model": model_path, "steps": steps, "alpha": alpha, "gamma": gamma,
            "petty_ratio": petty_ratio, "delta_btc": delta_btc,
            "protocol_reward": protocol_reward, "lambda_rate": lambda_rate}
    payload = {"profit": profit,
               "mined_share": env.mined_adversarial / env.mined_total}
    _emit(payload, out, echo, seeds=[seed], inputs=[model_path])


@simulate_group.command("undercut")
@_with_options(_sim_options)
@click.option("--duration", type=float, default=10.0, show_default=True,
              help="undercut countdown, minutes")
@_fail_cleanly
def simulate_undercut(model_path, steps, alpha, gamma, petty_ratio, delta_btc,
                      protocol_reward, lambda_rate, seed, out, duration):
    """Undercutting rollout plus honest baseline and percentage increase."""
    config = MiningConfig(alpha=alpha, gamma=gamma, petty_ratio=petty_ratio,
                          delta_btc=delta_btc, protocol_reward=protocol_reward,
                          lambda_rate=lambda_rate)
    attack, env = _env_rollout(model_path, config,
                               lambda s: undercut_agent(s, duration), steps, seed)
    honest, _ = _env_rollout(model_path, config, honest_agent, steps, seed)
    echo = {"model": model_path, "steps": steps, "alpha": alpha, "gamma": gamma,
            "petty_ratio": petty_ratio, "delta_btc": delta_btc,
            "protocol_reward": protocol_reward, "lambda_rate": lambda_rate,
            "duration": duration}
    payload = {"profit": attack, "honest_profit": honest,
               "percentage_increase": (attack / honest - 1.0) * 100.0,
               "mined_share": env.mined_adversarial / env.mined_total}
    _emit(payload, out, echo, seeds=[seed], inputs=[model_path])


@simulate_group.command("policy")
@click.option("--system", type=click.Choice(["werlman", "simplified"]), required=True)
@click.option("--variant", type=click.Choice(["original", "non_predictable"]),
              default="non_predictable", show_default=True)
@click.option("--objective", type=click.Choice([simplified.PRE_DAM, simplified.POST_DAM]),
              default=simplified.POST_DAM, show_default=True)
@click.option("--alpha", type=float, required=True)
@click.option("--gamma", type=float, default=0.5, show_default=True)
@click.option("--protocol-reward", type=float, default=0.0, show_default=True)
@click.option("--F", "fee_boost", type=float, default=3.2, show_default=True)
@click.option("--whale-prob", "-p", "whale_prob", type=float, default=0.001, show_default=True)
@click.option("--M", "m", type=int, default=2, show_default=True)
@click.option("--lambda", "lambda_rate", type=float, default=0.1, show_default=True)
@click.option("--max-fork", type=int, default=None, help="defaults per system")
@click.option("--steps", type=int, default=1_000_000, show_default=True,
              callback=_positive_steps)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
@_fail_cleanly
def simulate_policy(system, variant, objective, alpha, gamma, protocol_reward,
                    fee_boost, whale_prob, m, lambda_rate, max_fork, steps,
                    seed, out):
    """Solve exactly, then Monte-Carlo the optimal policy as a check."""
    echo = {"system": system, "variant": variant, "objective": objective,
            "alpha": alpha, "gamma": gamma, "protocol_reward": protocol_reward,
            "fee_boost": fee_boost, "whale_prob": whale_prob, "M": m,
            "lambda_rate": lambda_rate, "steps": steps}
    if system == "werlman":
        fork = 8 if max_fork is None else max_fork
        config = MiningConfig(alpha=alpha, gamma=gamma, max_fork_len=fork)
        params = WerlmanParams(fee_boost=fee_boost, whale_prob=whale_prob,
                               variant=variant)
        res, mdp = werlman.solve(params, config)
        mc, stderr = werlman.rollout(mdp, res.policy, steps, seed=seed)
        honest = werlman.honest_profit(params, alpha)
    else:
        fork = 5 if max_fork is None else max_fork
        schedule = simplified.calibrate_to_werlman(whale_prob, lambda_rate, m, fee_boost)
        config = MiningConfig(alpha=alpha, gamma=gamma,
                              protocol_reward=protocol_reward,
                              lambda_rate=lambda_rate, max_fork_len=fork)
        if objective == simplified.PRE_DAM:
            res, mdp = simplified.solve_predam(schedule, config)
        else:
            res, mdp = simplified.solve_postdam(schedule, config)
        mc, stderr = simplified.rollout(mdp, res.policy, schedule, config, steps,
                                        seed=seed)
        honest = simplified.honest_profit(schedule, config)
    payload = {"exact_profit": res.rho, "mc_profit": mc, "mc_stderr": stderr,
               "honest_profit": honest,
               "z": (mc - res.rho) / stderr if stderr > 0 else math.nan}
    _emit(payload, out, echo, seeds=[seed])


# -- environment server ------------------------------------------------------


@main.group(name="env")
def env_group():
    """Environment session serving."""


@env_group.command("serve")
@click.option("--stdio", is_flag=True, help="serve one session over stdin/stdout")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=7677, show_default=True)
@_fail_cleanly
def env_serve(stdio, host, port):
    """Serve the newline-delimited JSON environment protocol."""
    if stdio:
        serve_stdio()
        return
    server = serve_tcp(host, port)
    click.echo(json.dumps({"listening": server.address}), err=True)
    server.serve_forever()


# -- figure-shaped reports ----------------------------------------------------


@main.group(name="report")
def report_group():
    """CSV tables shaped like the headline figures."""


@report_group.command("figure")
@click.argument("which", type=click.Choice(["fig2", "fig3", "fig5"]))
@click.option("--p", type=float, default=0.001, show_default=True)
@click.option("--g", type=float, default=0.5, show_default=True)
@click.option("--F", "f_values", type=float, multiple=True,
              help="fee-boost grid (defaults to the headline six)")
@click.option("--max-fork", type=int, default=8, show_default=True)
@click.option("--M-low", "m_low", type=int, default=2, show_default=True)
@click.option("--M-high", "m_high", type=int, default=30, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_fail_cleanly
def report_figure(which, p, g, f_values, max_fork, m_low, m_high, out):
    """Threshold-vs-fee-boost tables."""
    grid = tuple(f_values) if f_values else F_GRID
    config = MiningConfig(alpha=0.1, gamma=g, max_fork_len=max_fork)
    rows = []
    if which in ("fig2", "fig3"):
        header = ["F", "thr_orig", "thr_nonpred"]
        if which == "fig3":
            header += ["thr_pi1w", "thr_pi1np", "thr_pi2np"]
        for F in grid:
            row = [F]
            for variant in ("original", "non_predictable"):
                params = WerlmanParams(fee_boost=F, whale_prob=p, variant=variant)
                row.append(werlman.werlman_threshold(params, config).alpha_star)
            if which == "fig3":
                for sid in closed_form.STRATEGY_IDS:
                    row.append(closed_form.strategy_threshold(sid, g, p, F).alpha_star)
            rows.append(row)
    else:
        header = ["F", f"thr_m{m_low}", f"thr_m{m_high}"]
        fork_config = MiningConfig(alpha=0.1, gamma=g, max_fork_len=5)
        for F in grid:
            row = [F]
            for m in (m_low, m_high):
                schedule = simplified.calibrate_to_werlman(p, 0.1, m, F)
                row.append(simplified.simplified_threshold(
                    schedule, fork_config).alpha_star)
            rows.append(row)
    with open(out, "w", newline="") as fh:
        writer = csv_mod.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    _write_manifest(out, {"figure": which, "p": p, "g": g, "F": list(grid),
                          "max_fork": max_fork, "M_low": m_low, "M_high": m_high})
    click.echo(json.dumps({"rows": len(rows), "out": out}))


if __name__ == "__main__":
    main()
