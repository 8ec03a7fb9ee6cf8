"""Command-line experiment harness.

Subcommands:
  train        train one policy network, write history.csv + checkpoint
  sweep-power  retrain per (budget, scheme) point, write sweep_power.csv
  sweep-rho    train one network per scheme, evaluate on a rho grid
  mc-validate  asymptote-vs-Monte-Carlo outage report, write mc_report.csv
  oracle       grid-search baseline, write oracle.csv
  selftest     run the built-in invariant battery

Configuration is a flat key=value text file; command-line flags override it,
and the environment variable HARQPOWER_SEED overrides any configured seed
(but not an explicit --seed).  Every run writes a manifest.txt of the fully
resolved configuration; feeding a manifest back through --config reproduces
the run's CSV outputs byte for byte.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .analytics import asymptotic_outage, evaluate
from .gcn import LayerSpec, save_checkpoint
from .montecarlo import estimate_outage, estimate_outage_conditional
from .oracle import ComplexityGuard, GridInfeasible, GridSpec, grid_search
from .training import (HISTORY_FIELDS, TrainConfig, TrainingDiverged,
                       evaluate_policy, train)
from .types import (ChannelParams, LinkConfig, PowerPolicy, Scheme,
                    dbw_to_watts)

SEED_ENV_VAR = "HARQPOWER_SEED"
SCHEME_ORDER = ("type1", "cc", "ir")

# audit slack applied when reporting a *learned* policy as feasible: the
# dual ascent settles on the constraint boundary, so exact comparisons flip
# on harmless residual oscillation
OUTAGE_AUDIT_SLACK = 1.05
POWER_AUDIT_SLACK = 1.01


class ConfigError(ValueError):
    pass


CONFIG_SCHEMA = {
    "scheme": str, "rounds": int, "delta": int, "rho": float, "rate": float,
    "payload_bits": float, "bandwidth_hz": float, "outage_target": float,
    "power_budget_dbw": float, "epochs": int, "dataset_size": int,
    "batch_size": int, "lr_weights": float, "lr_lambda": float,
    "lr_upsilon": float, "seed": int, "trials": int, "threads": int,
    "power_dbw": float, "estimator": str, "points": int, "rho_points": int,
    "budget_lo_dbw": float, "budget_hi_dbw": float,
}

DEFAULTS = {
    "scheme": "ir", "rounds": 3, "delta": 1, "rho": 0.5, "rate": 2.0,
    "payload_bits": 1e6, "bandwidth_hz": 1e7, "outage_target": 1e-2,
    "power_budget_dbw": 15.0, "epochs": 500, "dataset_size": 1000,
    "batch_size": 50, "lr_weights": 5e-4, "lr_lambda": 1e-3,
    "lr_upsilon": 5e-5, "seed": 4, "trials": 1_000_000, "threads": 1,
    "power_dbw": 30.0, "estimator": "conditional", "points": 40,
    "rho_points": 15, "budget_lo_dbw": 12.0, "budget_hi_dbw": 18.0,
}


def read_config(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(lines, 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, _, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if key == "command":
            continue  # informational echo in manifests
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = CONFIG_SCHEMA[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """defaults < config file < HARQPOWER_SEED < explicit flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(read_config(args.config))
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            cfg["seed"] = int(env_seed)
        except ValueError:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env_seed!r}")
    for key in CONFIG_SCHEMA:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    if cfg["scheme"] not in SCHEME_ORDER:
        raise ConfigError(f"unknown scheme {cfg['scheme']!r}")
    if cfg["estimator"] not in ("direct", "conditional"):
        raise ConfigError(f"unknown estimator {cfg['estimator']!r}")
    return cfg


def _channel(cfg: dict, rho=None) -> ChannelParams:
    try:
        return ChannelParams(rho=cfg["rho"] if rho is None else rho,
                             delta=cfg["delta"],
                             xi_sq=(1.0,) * cfg["rounds"])
    except ValueError as exc:
        raise ConfigError(str(exc))


def _link(cfg: dict, budget_dbw=None) -> LinkConfig:
    try:
        return LinkConfig(rate=cfg["rate"], payload_bits=cfg["payload_bits"],
                          bandwidth_hz=cfg["bandwidth_hz"],
                          outage_target=cfg["outage_target"],
                          power_budget_dbw=cfg["power_budget_dbw"]
                          if budget_dbw is None else budget_dbw)
    except ValueError as exc:
        raise ConfigError(str(exc))


def _train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(epochs=cfg["epochs"], dataset_size=cfg["dataset_size"],
                           batch_size=cfg["batch_size"],
                           lr_weights=cfg["lr_weights"],
                           lr_lambda=cfg["lr_lambda"],
                           lr_upsilon=cfg["lr_upsilon"], seed=cfg["seed"])
    except ValueError as exc:
        raise ConfigError(str(exc))


def fmt(x) -> str:
    return "%.5e" % float(x)


def write_csv(path: str, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def write_manifest(out_dir: str, command: str, cfg: dict) -> None:
    lines = [f"command = {command}"]
    for key in sorted(cfg):
        lines.append(f"{key} = {cfg[key]}")
    with open(os.path.join(out_dir, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _audited_feasible(report, link: LinkConfig) -> bool:
    return (report.outage_profile[-1] <= OUTAGE_AUDIT_SLACK * link.outage_target
            and report.average_power_w <= POWER_AUDIT_SLACK * link.power_budget_w)


def cmd_train(cfg: dict, out_dir: str) -> int:
    scheme = Scheme.from_name(cfg["scheme"])
    link = _link(cfg)
    proto = _channel(cfg, rho=0.0)
    result = train(scheme, link, proto, _train_config(cfg))
    rows = [(str(r[0]),) + tuple(fmt(v) for v in r[1:]) for r in result.history]
    write_csv(os.path.join(out_dir, "history.csv"),
              ("iter", "mean_tau_s", "mean_log_pout", "mean_pavg_w",
               "lambda", "upsilon"), rows)
    save_checkpoint(os.path.join(out_dir, f"checkpoint_{scheme.value}.txt"),
                    result.weights)
    write_manifest(out_dir, "train", cfg)
    _, rep = evaluate_policy(result.weights, _channel(cfg), link, scheme)
    print(f"trained {scheme.value}: iterations={len(result.history)} "
          f"tau={fmt(rep.latency_s)} pout_K={fmt(rep.outage_profile[-1])} "
          f"pavg={fmt(rep.average_power_w)} "
          f"feasible={int(_audited_feasible(rep, link))}")
    return 0


def cmd_sweep_power(cfg: dict, out_dir: str) -> int:
    budgets = np.arange(cfg["budget_lo_dbw"], cfg["budget_hi_dbw"] + 0.5, 1.0)
    rows = []
    for budget in budgets:
        link = _link(cfg, budget_dbw=float(budget))
        for name in SCHEME_ORDER:
            scheme = Scheme.from_name(name)
            result = train(scheme, link, _channel(cfg, rho=0.0),
                           _train_config(cfg))
            _, rep = evaluate_policy(result.weights, _channel(cfg), link, scheme)
            ok = _audited_feasible(rep, link)
            rows.append((fmt(budget), name, fmt(rep.latency_s),
                         fmt(rep.outage_profile[-1]),
                         fmt(rep.average_power_w), str(int(ok))))
            print(f"budget={budget:g} dBW {name}: tau={fmt(rep.latency_s)} "
                  f"pout_K={fmt(rep.outage_profile[-1])} feasible={int(ok)}")
    write_csv(os.path.join(out_dir, "sweep_power.csv"),
              ("pbar_dbw", "scheme", "tau_s", "pout_K", "pavg_w", "feasible"),
              rows)
    write_manifest(out_dir, "sweep-power", cfg)
    return 0


def cmd_sweep_rho(cfg: dict, out_dir: str) -> int:
    link = _link(cfg)
    rho_grid = np.linspace(0.0, 0.98, cfg["rho_points"])
    rows = []
    for name in SCHEME_ORDER:
        scheme = Scheme.from_name(name)
        result = train(scheme, link, _channel(cfg, rho=0.0), _train_config(cfg))
        save_checkpoint(os.path.join(out_dir, f"checkpoint_{name}.txt"),
                        result.weights)
        for rho in rho_grid:
            _, rep = evaluate_policy(result.weights, _channel(cfg, rho=float(rho)),
                                     link, scheme)
            rows.append((fmt(rho), name, fmt(rep.latency_s),
                         fmt(rep.outage_profile[-1])))
        print(f"swept rho for {name}: {len(rho_grid)} points")
    write_csv(os.path.join(out_dir, "sweep_rho.csv"),
              ("rho", "scheme", "tau_s", "pout_K"), rows)
    write_manifest(out_dir, "sweep-rho", cfg)
    return 0


def cmd_mc_validate(cfg: dict, out_dir: str) -> int:
    channel = _channel(cfg)
    power_w = dbw_to_watts(cfg["power_dbw"])
    policy = PowerPolicy((power_w,) * cfg["rounds"])
    estimator = (estimate_outage_conditional if cfg["estimator"] == "conditional"
                 else estimate_outage)
    rows = []
    for name in SCHEME_ORDER:
        scheme = Scheme.from_name(name)
        for k in range(1, cfg["rounds"] + 1):
            analytic, _ = asymptotic_outage(scheme, k, policy, channel,
                                            cfg["rate"])
            est = estimator(scheme, k, policy, channel, cfg["rate"],
                            trials=cfg["trials"], seed=cfg["seed"],
                            workers=cfg["threads"])
            ratio = est.mean / analytic
            rows.append((name, str(k), fmt(analytic), fmt(est.mean),
                         fmt(est.stderr), fmt(ratio)))
            print(f"{name} k={k}: analytic={fmt(analytic)} "
                  f"mc={fmt(est.mean)} ratio={fmt(ratio)}")
    write_csv(os.path.join(out_dir, "mc_report.csv"),
              ("scheme", "k", "analytic", "mc_mean", "mc_stderr", "ratio"),
              rows)
    write_manifest(out_dir, "mc-validate", cfg)
    return 0


def cmd_oracle(cfg: dict, out_dir: str) -> int:
    scheme = Scheme.from_name(cfg["scheme"])
    link = _link(cfg)
    channel = _channel(cfg)
    grid = GridSpec(points_per_axis=cfg["points"],
                    p_max_w=dbw_to_watts(link.power_budget_dbw + 3.0))
    result = grid_search(channel, scheme, link, grid)
    header = ("scheme", "tau_s", "pout_K", "pavg_w") + tuple(
        f"p{j + 1}_w" for j in range(cfg["rounds"]))
    row = (scheme.value, fmt(result.latency_s), fmt(result.outage_k),
           fmt(result.average_power_w)) + tuple(fmt(p) for p in
                                                result.policy.powers)
    write_csv(os.path.join(out_dir, "oracle.csv"), header, [row])
    write_manifest(out_dir, "oracle", cfg)
    print(f"oracle {scheme.value}: tau={fmt(result.latency_s)} "
          f"powers={[round(p, 4) for p in result.policy.powers]}")
    return 0


def cmd_selftest(cfg: dict, out_dir: str) -> int:
    from .selftest import run_selftest
    results = run_selftest()
    failed = 0
    for name, ok, detail in results:
        line = f"{'PASS' if ok else 'FAIL'} {name}"
        if detail:
            line += f": {detail}"
        print(line)
        failed += 0 if ok else 1
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return 1 if failed else 0


COMMANDS = {
    "train": cmd_train,
    "sweep-power": cmd_sweep_power,
    "sweep-rho": cmd_sweep_rho,
    "mc-validate": cmd_mc_validate,
    "oracle": cmd_oracle,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="harqpower",
                                     description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *keys):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int)
        for key in keys:
            flag = "--" + key.replace("_", "-")
            if key == "scheme":
                p.add_argument(flag, choices=SCHEME_ORDER)
            elif key == "estimator":
                p.add_argument(flag, choices=("direct", "conditional"))
            else:
                p.add_argument(flag, type=CONFIG_SCHEMA[key])

    common(sub.add_parser("train", help="train one policy network"),
           "scheme", "epochs", "power_budget_dbw", "rounds", "rate",
           "outage_target", "dataset_size", "batch_size")
    common(sub.add_parser("sweep-power", help="latency/outage vs power budget"),
           "epochs", "rho", "budget_lo_dbw", "budget_hi_dbw", "rounds",
           "dataset_size", "batch_size")
    common(sub.add_parser("sweep-rho", help="latency/outage vs correlation"),
           "epochs", "rho_points", "power_budget_dbw", "rounds",
           "dataset_size", "batch_size")
    common(sub.add_parser("mc-validate", help="Monte-Carlo vs asymptote report"),
           "trials", "threads", "rho", "power_dbw", "estimator", "rounds",
           "rate")
    common(sub.add_parser("oracle", help="grid-search baseline"),
           "scheme", "points", "rho", "power_budget_dbw", "rounds",
           "outage_target")
    common(sub.add_parser("selftest", help="run built-in invariant checks"))
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out_dir = args.out
    try:
        os.makedirs(out_dir, exist_ok=True)
        return COMMANDS[args.command](cfg, out_dir)
    except ConfigError as exc:
        # parameter combinations only validated at object construction time,
        # e.g. a batch size larger than the dataset
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (GridInfeasible, TrainingDiverged, ComplexityGuard) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
