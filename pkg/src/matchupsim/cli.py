"""Command-line interface: ``matchupsim {ingest,fit,simulate,evaluate,bet}``.

Options resolve as flags, then a flat ``key = value`` config file given with
``--config``, then built-in defaults.  Every output carries a provenance
header with the tool version, the resolved options and SHA-256 digests of
the inputs, and no timestamps, so identical runs give identical bytes.

Exit codes: 0 success, 1 domain or validation failure, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .evaluation import (
    bet_ledger,
    evaluate_model,
    plot_data_csv,
    read_odds_csv,
    roi_confidence,
    roi_report,
    roi_table_csv,
    RoiRow,
)
from .events import InsufficientDataError, SchemaError, read_event_log, serialize_event_log, skip_comments
from .gamesim import TOURNAMENT, GameSpec, Roster, decision_log_csv, simulate_many
from .inference import FitConfig, fit_variant
from .baserunning import read_steal_csv
from .manager import ManagerConfig, make_policy
from .model import VARIANTS, MatchupModel
from .outcome_model import ParameterError

log = logging.getLogger("matchupsim")

OK, FAILED, USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad invocation or unreadable input (exit code 2)."""


class DomainError(Exception):
    """Valid invocation, unusable content (exit code 1)."""


# ---------------------------------------------------------------------------
# options
# ---------------------------------------------------------------------------

# name -> (type, default); None default means "required unless in the config file"
OPTIONS = {
    "ingest": {"input": (str, None), "output": (str, ""), "report": (str, "")},
    "fit": {
        "variant": (str, None),
        "data": (str, None),
        "steals": (str, ""),
        "seed": (int, None),
        "output": (str, None),
        "steps": (int, 5000),
        "burn_in": (int, 2000),
        "chains": (int, 4),
        "min_pa": (int, 100),
        "order_pseudo_count": (float, 100.0),
        "min_opportunities": (int, 200),
        "groups": (int, 5),
        "cell_pseudo_count": (float, 5.0),
    },
    "simulate": {
        "spec": (str, None),
        "n": (int, 1000),
        "seed": (int, None),
        "workers": (int, 1),
        "output": (str, ""),
        "decision_logs": (str, ""),
        "policy": (str, ""),
        "mode": (str, ""),
        "pitcher_cap": (int, 0),
        "rollouts": (int, 2000),
        "tie_epsilon": (float, 0.005),
        "evaluator": (str, "rollout"),
    },
    "evaluate": {"model": (str, None), "data": (str, None), "truth": (str, ""), "output": (str, "")},
    "bet": {
        "odds": (str, None),
        "predictions": (str, None),
        "cushions": (str, "0,0.015,0.03,0.045,0.06,0.075,0.09,0.095"),
        "stake": (float, 1000.0),
        "mc_samples": (int, 10000),
        "seed": (int, 0),
        "output": (str, ""),
        "plot_data": (str, ""),
        "plot_cushion": (float, 0.03),
    },
}

HELP = {
    "ingest": "validate a plate-appearance CSV",
    "fit": "fit a matchup model",
    "simulate": "simulate games from a game spec",
    "evaluate": "score models on validation data",
    "bet": "backtest betting against moneylines",
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matchupsim", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"matchupsim {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd, help=HELP[cmd])
        sp.add_argument("--config", help="flat key = value file supplying defaults for the options below")
        for name, (typ, default) in opts.items():
            flag = "--" + name.replace("_", "-")
            kw = {"type": typ, "default": None, "dest": name}
            if name == "model":
                kw = {"action": "append", "default": None, "dest": name}
            suffix = " (required)" if default is None else f" (default: {default})" if default != "" else ""
            sp.add_argument(flag, help=name.replace("_", " ") + suffix, **kw)
    return p


def read_config_file(path: str) -> dict[str, str]:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    try:
        cp.read_string("[run]\n" + text)
    except configparser.Error as exc:
        raise UsageError(f"malformed config file {path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in cp["run"].items()}


def resolve(cmd: str, args: argparse.Namespace) -> dict:
    """Flags > config file > defaults; raises for missing required options."""
    opts = OPTIONS[cmd]
    file_vals = read_config_file(args.config) if args.config else {}
    unknown = sorted(set(file_vals) - set(opts))
    if unknown:
        raise UsageError(f"unknown option(s) in config file: {', '.join(unknown)}")
    out = {}
    for name, (typ, default) in opts.items():
        v = getattr(args, name)
        if v is None and name in file_vals:
            raw = file_vals[name]
            try:
                v = [s.strip() for s in raw.split(",")] if name == "model" else typ(raw)
            except ValueError:
                raise UsageError(f"config option {name}: cannot parse {raw!r}") from None
        if v is None:
            if default is None:
                raise UsageError(f"missing required option --{name.replace('_', '-')}")
            v = default
        out[name] = v
    return out


# ---------------------------------------------------------------------------
# provenance
# ---------------------------------------------------------------------------


def digest(path) -> str:
    return "sha256:" + hashlib.sha256(Path(path).read_bytes()).hexdigest()


def provenance(cmd: str, config: dict, inputs: dict[str, str]) -> dict:
    return {
        "tool": "matchupsim",
        "version": __version__,
        "command": cmd,
        "config": {k: config[k] for k in sorted(config)},
        "inputs": {k: digest(v) for k, v in sorted(inputs.items()) if v},
    }


def csv_header(prov: dict) -> str:
    lines = [f"# matchupsim {prov['version']} {prov['command']}"]
    lines.append("# config: " + json.dumps(prov["config"], sort_keys=True))
    for k, v in prov["inputs"].items():
        lines.append(f"# input {k}: {v}")
    return "\n".join(lines) + "\n"


def write_text(path: str, text: str) -> None:
    if not path or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from None


def _need_file(path: str, flag: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file {path}")
    return p


def _load_records(path: str, flag: str):
    _need_file(path, flag)
    try:
        result = read_event_log(path)
    except SchemaError as exc:
        raise UsageError(f"{flag} {path}: {exc}") from None
    if result.errors:
        shown = "; ".join(str(e) for e in result.errors[:10])
        raise DomainError(f"{path}: {len(result.errors)} invalid row(s): {shown}")
    return result.records


def _load_model(path: str, flag: str) -> MatchupModel:
    _need_file(path, flag)
    try:
        return MatchupModel.load(path)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"{flag} {path}: not a model file ({exc})") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_ingest(cfg: dict) -> int:
    path = _need_file(cfg["input"], "--input")
    try:
        result = read_event_log(path)
    except SchemaError as exc:
        raise UsageError(f"{path}: {exc}") from None
    prov = provenance("ingest", cfg, {"input": cfg["input"]})
    report = {
        "provenance": prov,
        "records": len(result.records),
        "rejected": len(result.errors),
        "errors": [{"row": e.row, "reason": e.reason} for e in result.errors],
    }
    text = json.dumps(report, indent=1, sort_keys=True) + "\n"
    if cfg["report"]:
        write_text(cfg["report"], text)
    else:
        print(f"{len(result.records)} records accepted, {len(result.errors)} rejected")
        for e in result.errors:
            print(f"  {e}")
    if cfg["output"]:
        write_text(cfg["output"], csv_header(prov) + serialize_event_log(result.records).decode())
    return OK if result.ok else FAILED


def cmd_fit(cfg: dict) -> int:
    variant = cfg["variant"].upper()
    if variant not in VARIANTS:
        raise UsageError(f"--variant must be one of {', '.join(VARIANTS)}")
    if variant == "BR" and not cfg["steals"]:
        raise UsageError("variant BR needs steal counts: pass --steals FILE (batter_id,opportunities,steals)")
    records = _load_records(cfg["data"], "--data")
    steals = None
    if cfg["steals"]:
        _need_file(cfg["steals"], "--steals")
        try:
            steals = read_steal_csv(cfg["steals"])
        except SchemaError as exc:
            raise UsageError(f"--steals {cfg['steals']}: {exc}") from None
    fc = FitConfig(
        seed=cfg["seed"],
        steps=cfg["steps"],
        burn_in=cfg["burn_in"],
        min_pa=cfg["min_pa"],
        chains=cfg["chains"],
        order_pseudo_count=cfg["order_pseudo_count"],
        min_opportunities=cfg["min_opportunities"],
        group_count=cfg["groups"],
        cell_pseudo_count=cfg["cell_pseudo_count"],
    )
    model = fit_variant(variant, records, fc, steals=steals if variant == "BR" else None)
    model.provenance = provenance("fit", cfg, {"data": cfg["data"], "steals": cfg["steals"]})
    write_text(cfg["output"], model.to_json())
    log.info("wrote %s model to %s", variant, cfg["output"])
    return OK


def _load_roster(obj, base: Path) -> Roster:
    if isinstance(obj, str):
        p = base / obj
        if not p.is_file():
            raise UsageError(f"roster file not found: {p}")
        obj = json.loads(p.read_text())
    try:
        return Roster.from_dict(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"invalid roster: {exc}") from None


def load_game_spec(path: str, cfg: dict) -> tuple[GameSpec, dict[str, str]]:
    """Read a game-spec JSON; model and roster paths are relative to it."""
    spec_path = _need_file(path, "--spec")
    base = spec_path.parent
    try:
        raw = json.loads(spec_path.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from None
    inputs = {"spec": path}
    models = {}
    # check every path before loading anything
    for side in ("home", "away"):
        mp = raw.get(f"model_{side}")
        if not mp:
            raise UsageError(f"game spec lacks model_{side}")
        if not (base / mp).is_file():
            raise UsageError(f"model file not found: {base / mp}")
    for side in ("home", "away"):
        mp = str(base / raw[f"model_{side}"])
        models[side] = _load_model(mp, f"model_{side}")
        inputs[f"model_{side}"] = mp
    manager = ManagerConfig(
        rollouts=cfg["rollouts"],
        tie_epsilon=cfg["tie_epsilon"],
        seed=cfg["seed"],
        evaluator=cfg["evaluator"],
    )
    policies = {}
    for side in ("home", "away"):
        name = cfg["policy"] or raw.get(f"policy_{side}", "passive")
        try:
            policies[side] = make_policy(name, models[side], manager)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    cap = cfg["pitcher_cap"] or raw.get("pitcher_cap") or None
    spec = GameSpec(
        home=_load_roster(raw["home"], base),
        away=_load_roster(raw["away"], base),
        model_home=models["home"],
        model_away=models["away"],
        policy_home=policies["home"],
        policy_away=policies["away"],
        mode=cfg["mode"] or raw.get("mode", TOURNAMENT),
        pitcher_cap=cap,
    )
    return spec, inputs


def cmd_simulate(cfg: dict) -> int:
    if cfg["n"] < 1:
        raise UsageError("--n must be at least 1")
    spec, inputs = load_game_spec(cfg["spec"], cfg)
    keep = bool(cfg["decision_logs"])
    result = simulate_many(cfg["n"], spec, cfg["seed"], workers=cfg["workers"], keep_logs=keep)
    prov = provenance("simulate", {k: v for k, v in cfg.items() if k != "workers"}, inputs)
    write_text(cfg["output"], csv_header(prov) + result.summary_csv())
    if keep:
        out = Path(cfg["decision_logs"])
        out.mkdir(parents=True, exist_ok=True)
        for i, records in sorted(result.decisions.items()):
            (out / f"game_{i:06d}.csv").write_text(csv_header(prov) + decision_log_csv(records))
    log.info("home %d, away %d of %d", result.home_wins, result.away_wins, result.n)
    return OK


def cmd_evaluate(cfg: dict) -> int:
    records = _load_records(cfg["data"], "--data")
    paths = cfg["model"] if isinstance(cfg["model"], list) else [cfg["model"]]
    models = {p: _load_model(p, "--model") for p in paths}
    truth = _load_model(cfg["truth"], "--truth") if cfg["truth"] else None
    inputs = {"data": cfg["data"], "truth": cfg["truth"]}
    inputs.update({f"model:{p}": p for p in paths})
    reports = {p: evaluate_model(m, records, truth).to_dict() for p, m in models.items()}
    doc = {"provenance": provenance("evaluate", cfg, inputs), "reports": reports}
    write_text(cfg["output"], json.dumps(doc, indent=1, sort_keys=True) + "\n")
    return OK


def read_predictions(path: str) -> dict[str, float]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(skip_comments(fh))
        if reader.fieldnames is None or not {"game_id", "model_home_prob"} <= set(reader.fieldnames):
            raise UsageError(f"{path}: predictions need columns game_id,model_home_prob")
        out = {}
        for row in reader:
            p = float(row["model_home_prob"])
            if not 0.0 <= p <= 1.0:
                raise DomainError(f"{path}: probability out of range for game {row['game_id']}")
            out[row["game_id"]] = p
    return out


def cmd_bet(cfg: dict) -> int:
    odds_path = _need_file(cfg["odds"], "--odds")
    _need_file(cfg["predictions"], "--predictions")
    try:
        odds = read_odds_csv(odds_path.read_text())
    except SchemaError as exc:
        raise UsageError(f"--odds {odds_path}: {exc}") from None
    if not odds:
        raise DomainError(f"{odds_path}: empty input, no games to bet")
    preds = read_predictions(cfg["predictions"])
    missing = [g.game_id for g in odds if g.game_id not in preds]
    if missing:
        raise DomainError(f"no model probability for game(s): {', '.join(missing[:5])}")
    probs = [preds[g.game_id] for g in odds]
    try:
        cushions = [float(c) for c in str(cfg["cushions"]).split(",") if c.strip()]
    except ValueError:
        raise UsageError(f"--cushions: cannot parse {cfg['cushions']!r}") from None
    rows = roi_report(probs, odds, cushions, cfg["stake"])
    intervals = roi_confidence(probs, odds, cushions, cfg["mc_samples"], cfg["seed"], cfg["stake"])
    rows = [
        RoiRow(r.cushion, r.bets, r.staked, r.profit, r.roi, lo, hi) for r, (_, lo, hi) in zip(rows, intervals)
    ]
    prov = provenance("bet", cfg, {"odds": cfg["odds"], "predictions": cfg["predictions"]})
    write_text(cfg["output"], csv_header(prov) + roi_table_csv(rows))
    if cfg["plot_data"]:
        ledger = bet_ledger(probs, odds, cfg["plot_cushion"], cfg["stake"])
        write_text(cfg["plot_data"], csv_header(prov) + plot_data_csv(ledger))
    return OK


COMMANDS = {
    "ingest": cmd_ingest,
    "fit": cmd_fit,
    "simulate": cmd_simulate,
    "evaluate": cmd_evaluate,
    "bet": cmd_bet,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"matchupsim {args.command}: {exc}", file=sys.stderr)
        return USAGE
    except OSError as exc:
        print(f"matchupsim {args.command}: {exc}", file=sys.stderr)
        return USAGE
    except (DomainError, InsufficientDataError, ParameterError, ValueError) as exc:
        print(f"matchupsim {args.command}: {exc}", file=sys.stderr)
        return FAILED


if __name__ == "__main__":
    sys.exit(main())
