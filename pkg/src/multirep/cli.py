"""Single entry point: bounds evaluation, network building and checking,
recognition runs, learning runs, and Monte Carlo sweeps.

Driven by a JSON config file plus `--set dotted.path=value` overrides; every
JSON output embeds the resolved config and a version string so results are
self-describing.  Exit codes: 0 success, 1 assertion or bound failure,
2 config error.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import numpy as np

from . import __version__
from . import bounds as bnd
from . import experiments as exp
from . import learning as lrn
from .bounds import CommonParams, ConnectivityParams
from .hierarchy import HierarchyParams, build_hierarchy
from .recognition import PresentationSchedule, run_ff, run_lateral, verdict
from .representation import (
    ReprSpec,
    build_high,
    build_lateral,
    build_low,
    check_class_assumption,
    check_low_connectivity,
)


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config handling
# ---------------------------------------------------------------------------

_SECTIONS = {
    "hierarchy": {"k", "l_max", "n"},
    "common": {"m", "q", "zeta", "r1", "r2"},
    "connectivity": {"a", "a1", "a2", "m1", "m2"},
    "representation": {"kind", "edge_mode", "p_prime", "seed", "max_attempts"},
    "learning": {
        "algorithm", "p_prime", "b", "b1", "t_steps", "rho", "w0",
        "clamp_eta", "hebb_beta", "seed", "use_oja", "n_slots",
    },
    "experiment": {
        "target_level", "target_index", "scope", "b_generator", "trials",
        "base_seed", "horizon", "sweep", "batch_size", "threads", "source",
    },
    "output": {"csv", "json"},
}


def _validate_keys(cfg: dict) -> None:
    for section, body in cfg.items():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown config section {section!r}")
        if not isinstance(body, dict):
            raise ConfigError(f"section {section!r} must be an object")
        unknown = set(body) - _SECTIONS[section]
        if unknown:
            raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")


def load_config(path: str | None, overrides: list[str]) -> dict:
    cfg: dict = {}
    if path:
        try:
            with open(path) as f:
                cfg = json.load(f)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"config is not valid JSON: {e}")
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        dotted, raw = item.split("=", 1)
        parts = dotted.split(".")
        if len(parts) != 2:
            raise ConfigError(f"override path must be section.key, got {dotted!r}")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        cfg.setdefault(parts[0], {})[parts[1]] = value
    _validate_keys(cfg)
    return cfg


def _require(cfg: dict, section: str, keys: list[str]):
    body = cfg.get(section)
    if body is None:
        raise ConfigError(f"missing config section {section!r}")
    missing = [k for k in keys if k not in body]
    if missing:
        raise ConfigError(f"section {section!r} missing keys: {missing}")
    return body


def _hierarchy_params(cfg: dict) -> HierarchyParams:
    body = _require(cfg, "hierarchy", ["k", "l_max"])
    k, l_max = body["k"], body["l_max"]
    n = body.get("n", k ** (l_max + 1))
    try:
        return HierarchyParams(k=k, l_max=l_max, n=n)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e))


def _common_params(cfg: dict, hp: HierarchyParams) -> CommonParams:
    body = _require(cfg, "common", ["m", "q", "zeta", "r1", "r2"])
    try:
        return CommonParams(k=hp.k, l_max=hp.l_max, **body)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e))


def _conn_params(cfg: dict) -> ConnectivityParams | None:
    body = cfg.get("connectivity")
    if body is None:
        return None
    try:
        return ConnectivityParams(**body)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e))


def _repr_spec(cfg: dict) -> ReprSpec:
    body = _require(cfg, "representation", ["kind"])
    try:
        return ReprSpec(**body)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e))


def _learn_config(cfg: dict) -> lrn.LearnConfig:
    body = _require(cfg, "learning", ["algorithm"])
    try:
        return lrn.LearnConfig(**body)
    except (ValueError, TypeError) as e:
        raise ConfigError(str(e))


def version_string() -> str:
    try:
        desc = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5,
            cwd=os.path.dirname(os.path.abspath(__file__)),
        ).stdout.strip()
    except Exception:
        desc = ""
    return f"multirep {__version__}" + (f" ({desc})" if desc else "")


def _emit(payload: dict, cfg: dict) -> None:
    doc = {"version": version_string(), "config": cfg, "result": payload}
    json.dump(doc, sys.stdout, indent=1, default=str)
    sys.stdout.write("\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def _build_from_config(cfg: dict):
    hp = _hierarchy_params(cfg)
    h = build_hierarchy(hp)
    cp = _common_params(cfg, hp)
    spec = _repr_spec(cfg)
    conn = _conn_params(cfg)
    ex = cfg.get("experiment", {})
    target_level = ex.get("target_level", hp.l_max)
    target = h.concepts_at(target_level)[ex.get("target_index", 0)]
    scope = ex.get("scope", "subtree")
    if spec.kind == "high_ff":
        net = build_high(h, cp, target=target, scope=scope)
    elif spec.kind == "low_ff":
        if conn is None:
            raise ConfigError("low_ff needs a connectivity section")
        net = build_low(h, cp, conn, spec, target=target, scope=scope)
    else:
        if conn is None:
            raise ConfigError("lateral needs a connectivity section")
        net = build_lateral(h, cp, conn, spec, target=target, scope=scope)
    return h, cp, conn, net, target


def cmd_bounds(args, cfg: dict) -> int:
    hp = _hierarchy_params(cfg)
    cp = _common_params(cfg, hp)
    conn = _conn_params(cfg)
    kind = cfg.get("representation", {}).get("kind", "high_ff")
    try:
        report = bnd.bounds_report(kind, cp, conn, paper_style=args.paper_style)
    except ValueError as e:
        raise ConfigError(str(e))
    _emit(report.to_json(), cfg)
    sys.stderr.write(report.table() + "\n")
    return 0


def cmd_build(args, cfg: dict) -> int:
    h, cp, conn, net, target = _build_from_config(cfg)
    payload = {
        "hierarchy": h.adjacency_json(),
        "network": net.summary_json(),
        "target": target,
    }
    if args.dump_bitmap:
        net.export_incidence(args.dump_bitmap)
        payload["bitmap"] = args.dump_bitmap
    _emit(payload, cfg)
    return 0


def cmd_check(args, cfg: dict) -> int:
    _, _, conn, net, _ = _build_from_config(cfg)
    reports = {}
    ok = True
    if net.kind == "lateral":
        rep = check_class_assumption(net)
        reports["class_assumption"] = rep.to_json()
        ok &= rep.ok
    if conn is not None:
        rep = check_low_connectivity(net, conn.a)
        reports["low_connectivity"] = rep.to_json()
        ok &= rep.ok if net.kind != "lateral" else True
    reports["ok"] = ok
    _emit(reports, cfg)
    return 0 if ok else 1


def cmd_recognize(args, cfg: dict) -> int:
    from .experiments import sample_failures, _generate_B

    h, cp, conn, net, target = _build_from_config(cfg)
    ex = cfg.get("experiment", {})
    rng = np.random.default_rng(ex.get("base_seed", 0))
    mask = sample_failures(net, cp.q, rng)
    B = _generate_B(h, cp, ex.get("b_generator", "full-leaves"), target)
    if net.kind == "lateral":
        schedule = PresentationSchedule(B, "continuous", ex.get("horizon"))
        outcome = run_lateral(net, schedule, mask, target)
    else:
        schedule = PresentationSchedule(B, "once-at-0", ex.get("horizon"))
        outcome = run_ff(net, schedule, mask, target)
    payload = outcome.to_json()
    payload["verdict"] = verdict(outcome)
    payload["B"] = sorted(B)
    _emit(payload, cfg)
    return 0


def cmd_learn(args, cfg: dict) -> int:
    hp = _hierarchy_params(cfg)
    h = build_hierarchy(hp)
    cp = _common_params(cfg, hp)
    conn = _conn_params(cfg)
    lc = _learn_config(cfg)
    ex = cfg.get("experiment", {})
    target_level = ex.get("target_level", hp.l_max)
    target = h.concepts_at(target_level)[ex.get("target_index", 0)]
    try:
        net, report = lrn.learn(h, cp, conn, lc, target)
    except lrn.StarvationError as e:
        sys.stderr.write(f"learning failed: {e}\n")
        return 1
    payload = report.to_json()
    if args.dump_network:
        with open(args.dump_network, "w") as f:
            json.dump(net.summary_json(), f, indent=1)
        payload["network_dump"] = args.dump_network
    _emit(payload, cfg)
    return 0 if report.success else 1


def cmd_montecarlo(args, cfg: dict) -> int:
    hp = _hierarchy_params(cfg)
    cp = _common_params(cfg, hp)
    conn = _conn_params(cfg)
    spec = _repr_spec(cfg)
    ex = cfg.get("experiment", {})
    learn_cfg = None
    if ex.get("source") == "learning":
        learn_cfg = _learn_config(cfg)
    try:
        config = exp.ExperimentConfig(
            hierarchy=hp,
            common=cp,
            repr_spec=spec,
            conn=conn,
            learn_config=learn_cfg,
            target_level=ex.get("target_level"),
            target_index=ex.get("target_index", 0),
            scope=ex.get("scope", "subtree"),
            b_generator=ex.get("b_generator", "minimal-r2"),
            trials=ex.get("trials", 1000),
            base_seed=ex.get("base_seed", 0),
            horizon=ex.get("horizon"),
            sweep=ex.get("sweep", {}),
            batch_size=ex.get("batch_size", exp.DEFAULT_BATCH),
            threads=args.threads or ex.get("threads") or os.cpu_count() or 1,
        )
    except ValueError as e:
        raise ConfigError(str(e))
    stats = exp.run_trials(config)
    csv_text, doc = exp.summarize(stats)
    csv_path = args.csv or cfg.get("output", {}).get("csv")
    if csv_path:
        with open(csv_path, "w") as f:
            f.write(csv_text)
    else:
        sys.stderr.write(csv_text)
    _emit(doc, cfg)
    ok = doc["all_bounds_satisfied"] and doc["total_violations"] == 0
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multirep", description=__doc__)
    parser.add_argument("--config", "-c", help="JSON config file")
    parser.add_argument(
        "--set", dest="overrides", action="append", default=[],
        metavar="SECTION.KEY=VALUE", help="override a config value",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bounds", help="evaluate thresholds, epsilon and delta bounds")
    p.add_argument("--paper-style", action="store_true", help="simplified tree-size coefficients")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("build", help="build a network and dump its summary")
    p.add_argument("--dump-bitmap", help="write full incidence bitmaps to this path")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("check", help="build and run the structural checkers")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("recognize", help="run one recognition trial")
    p.set_defaults(func=cmd_recognize)

    p = sub.add_parser("learn", help="run a learning procedure")
    p.add_argument("--dump-network", help="write the learned network summary JSON here")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("montecarlo", help="run a fault-injection sweep")
    p.add_argument("--csv", help="CSV output path")
    p.add_argument("--threads", type=int, default=None, help="trial batches run in this many threads")
    p.set_defaults(func=cmd_montecarlo)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        return args.func(args, cfg)
    except ConfigError as e:
        sys.stderr.write(f"config error: {e}\n")
        return 2
    except (ValueError, KeyError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
