"""Command-line front end.

Every command prints a JSON report (figures may be CSV) whose ``config`` holds
the full effective configuration; passing that report back with ``--config``
reruns the command identically. Flags override config-file values, and
``NONLINFO_SEED`` supplies the seed when neither does.

Exit codes: 0 success, 1 property violation, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings

import numpy as np

from nonlinfo import coding, figures, measures, sampling, verify
from nonlinfo.families import (
    EnumeratedChannel,
    EnumeratedFamily,
    FamilyError,
    IntervalBernoulli,
    IntervalBSC,
    IntervalCategorical,
    channel_from_dict,
    family_from_dict,
)
from nonlinfo.optimize import InfeasibleDistortion, OptimizerConfig
from nonlinfo.report import dumps, make_report


class ConfigError(ValueError):
    pass


# option name -> (flag, type, default, help)
OPTIONS = {
    "family": ("--family", str, "interval-bernoulli",
               "interval-bernoulli | singleton | enumerated | interval-categorical"),
    "p": ("--p", float, None, "interval center (family, or channel when the family is not an interval)"),
    "eps": ("--eps", float, None, "interval radius, or the coding tolerance for simulate commands"),
    "family_eps": ("--family-eps", float, None, "family interval radius"),
    "lo": ("--lo", float, None, "lower end of the family interval"),
    "hi": ("--hi", float, None, "upper end of the family interval"),
    "probs": ("--probs", str, None, "member probabilities: 'a,b' or 'a,b;c,d' for several members"),
    "lower": ("--lower", str, None, "per-symbol lower bounds 'l1,l2,...'"),
    "upper": ("--upper", str, None, "per-symbol upper bounds 'u1,u2,...'"),
    "family_file": ("--family-file", str, None, "family JSON document"),
    "channel": ("--channel", str, "bsc", "bsc | identity | enumerated"),
    "channel_p": ("--channel-p", float, None, "BSC crossover center"),
    "channel_eps": ("--channel-eps", float, None, "BSC crossover radius"),
    "channel_probs": ("--channel-probs", str, None, "matrices 'a,b;c,d' separated by '|'"),
    "channel_size": ("--channel-size", int, 2, "identity channel size"),
    "channel_file": ("--channel-file", str, None, "channel JSON document"),
    "grid_points": ("--grid-points", int, 2001, "parameter grid size"),
    "refine_tol": ("--refine-tol", float, 1e-10, "golden-section tolerance"),
    "ba_tol": ("--ba-tol", float, 1e-9, "Blahut-Arimoto bracket tolerance"),
    "ba_max_iter": ("--ba-max-iter", int, 10000, "Blahut-Arimoto iteration cap"),
    "pe": ("--pe", str, None, "error probabilities 'a,b,...' (or 'lo,hi' with --interval)"),
    "interval": ("--interval", bool, False, "treat --pe as an interval"),
    "alphabet_size": ("--alphabet-size", int, None, "alphabet size for the Fano bound"),
    "distortion": ("--distortion", str, "hamming", "'hamming' or a matrix 'a,b;c,d'"),
    "d_grid": ("--d-grid", str, "0,0.05,0.1,0.15,0.2,0.25,0.3", "distortion levels"),
    "n": ("--n", int, None, "block length"),
    "mu": ("--mu", float, None, "cluster target for the min criterion"),
    "criterion": ("--criterion", str, "min", "min | max"),
    "theta_grid": ("--theta-grid", int, 101, "source parameter grid for error evaluation"),
    "lambda_grid": ("--lambda-grid", int, 101, "channel parameter grid for decoding and errors"),
    "M": ("--M", int, 2, "message count"),
    "r_prime": ("--r-prime", float, None, "threshold rate"),
    "trials": ("--trials", int, 100000, "Monte-Carlo trials"),
    "method": ("--method", str, "monte-carlo", "monte-carlo | enumeration"),
    "shards": ("--shards", int, 8, "Monte-Carlo shards (fixed substreams)"),
    "threads": ("--threads", int, None, "worker threads for the shards (does not change results)"),
    "D": ("--D", float, None, "distortion level"),
    "rs": ("--rs", float, None, "code rate R_s"),
    "seed": ("--seed", int, None, "64-bit seed (default: NONLINFO_SEED or 0)"),
    "policy": ("--policy", str, "per_block_uniform",
               "per_symbol_uniform | per_block_extremes | per_block_uniform | drift | fixed"),
    "block_len": ("--block-len", int, 500, "policy block length"),
    "period": ("--period", int, 1000, "drift period"),
    "theta": ("--theta", float, None, "fixed policy parameter"),
    "length": ("--length", int, 10000, "sample length"),
    "input": ("--input", str, None, "samples file, one value per line"),
    "n_block": ("--n-block", int, None, "block size"),
    "m_blocks": ("--m-blocks", int, None, "block count"),
    "f": ("--f", str, None, "function values per symbol 'v1,v2,...'"),
    "b": ("--b", float, None, "target value for the running mean"),
    "target": ("--target", str, None, "lower | mid | upper (instead of --b)"),
    "n_max": ("--n-max", int, 100000, "path length"),
    "burn_in": ("--burn-in", int, 1000, "first n considered for the closest approach"),
    "eps_list": ("--eps-list", str, None, "interval radii 'e1,e2,...'"),
    "p_step": ("--p-step", float, 0.01, "p-grid step"),
    "cases": ("--cases", int, None, "random cases"),
    "suite_name": ("--suite", str, None, "coding suite selector (only 'ordering')"),
    "format": ("--format", str, "json", "output format"),
    "output": ("--output", str, None, "write to this file instead of stdout"),
}

FAMILY = ["family", "p", "eps", "family_eps", "lo", "hi", "probs", "lower", "upper", "family_file"]
CHANNEL = ["channel", "channel_p", "channel_eps", "channel_probs", "channel_size", "channel_file"]
OPT = ["grid_points", "refine_tol", "ba_tol", "ba_max_iter"]
SIM_FAMILY = [o for o in FAMILY if o not in ("p", "eps")] + ["p"]

COMMANDS = {
    "measure": (["kind"], FAMILY + CHANNEL + OPT + ["pe", "interval", "alphabet_size"]),
    "bound source-rate": ([], FAMILY),
    "bound channel-rate": ([], CHANNEL + ["p", "eps"] + OPT),
    "rd-curve": ([], FAMILY + OPT + ["distortion", "d_grid"]),
    "simulate source-coding": ([], SIM_FAMILY + ["n", "eps", "mu", "criterion", "theta_grid"]),
    "simulate channel": ([], CHANNEL + OPT + ["p", "M", "n", "r_prime", "trials", "seed", "lambda_grid",
                                              "method", "shards", "threads"]),
    "simulate rate-distortion": ([], SIM_FAMILY + OPT + ["distortion", "D", "rs", "n", "eps", "r_prime", "seed",
                                                         "theta_grid"]),
    "sample": ([], FAMILY + ["policy", "block_len", "period", "theta", "length", "seed", "format"]),
    "estimate max-mean": ([], ["input", "n_block", "m_blocks"]),
    "lln": ([], FAMILY + ["f", "b", "target", "n_max", "seed", "burn_in"]),
    "fig": (["which"], ["eps_list", "p_step", "seed", "length", "block_len", "format", "grid_points", "refine_tol",
                        "ba_tol", "ba_max_iter"]),
    "verify": (["suite"], ["cases", "seed", "suite_name"]),
}

POSITIONAL = {
    "kind": ["entropy", "joint", "conditional", "mutual", "fano"],
    "which": ["2", "3", "4", "6", "7", "8"],
    "suite": list(verify.SUITES),
}

COMMAND_DEFAULTS = {
    "fig": {"format": "csv", "length": None, "block_len": None},
    "simulate source-coding": {"n": 12, "eps": 0.1},
    "simulate channel": {"n": 10, "r_prime": 0.3},
    "simulate rate-distortion": {"n": 11, "eps": 0.05},
    "sample": {"format": "text"},
}


# ------------------------------------------------------------------ parsing


def _add_options(parser, names):
    for name in names:
        flag, typ, _, help_ = OPTIONS[name]
        flags = [flag, "-o"] if name == "output" else [flag]
        if typ is bool:
            parser.add_argument(*flags, dest=name, action="store_true", help=help_)
        else:
            parser.add_argument(*flags, dest=name, type=typ, help=help_)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonlinfo", description=__doc__.splitlines()[0],
                                     argument_default=argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="cmd", required=True)
    groups: dict[str, argparse._SubParsersAction] = {}
    for command, (positionals, names) in COMMANDS.items():
        head, *rest = command.split(" ", 1)
        if rest:
            if head not in groups:
                gp = sub.add_parser(head, argument_default=argparse.SUPPRESS)
                groups[head] = gp.add_subparsers(dest="subcmd", required=True)
            p = groups[head].add_parser(rest[0], argument_default=argparse.SUPPRESS)
        else:
            p = sub.add_parser(head, argument_default=argparse.SUPPRESS)
        for pos in positionals:
            # validated in effective_config so a config file may supply it
            p.add_argument(pos, nargs="?", default=None, metavar="{" + ",".join(POSITIONAL[pos]) + "}")
        p.add_argument("--config", dest="config_file", help="JSON config or a previous report")
        _add_options(p, [n for n in names if n != "output"] + ["output"])
        p.set_defaults(command=command)
    return parser


def effective_config(ns: argparse.Namespace) -> dict:
    command = ns.command
    positionals, names = COMMANDS[command]
    allowed = set(positionals) | set(names) | {"output"}
    cfg = {n: OPTIONS[n][2] for n in names}
    cfg.update(COMMAND_DEFAULTS.get(command, {}))
    given = {k: v for k, v in vars(ns).items()
             if k not in ("cmd", "subcmd", "command", "config_file") and not (k in positionals and v is None)}
    if getattr(ns, "config_file", None):
        try:
            with open(ns.config_file) as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {ns.config_file}: {e}") from None
        if "config" in doc and "schema_version" in doc:
            doc = doc["config"]
        if not isinstance(doc, dict):
            raise ConfigError("config file must hold a JSON object")
        doc = dict(doc)
        if doc.pop("command", command) != command:
            raise ConfigError(f"config is for another command, not {command!r}")
        unknown = set(doc) - allowed
        if unknown:
            raise ConfigError(f"unknown config field(s) for {command}: {sorted(unknown)}")
        cfg.update(doc)
    cfg.update(given)
    if "seed" in names and cfg.get("seed") is None:
        env = os.environ.get("NONLINFO_SEED")
        try:
            cfg["seed"] = int(env) if env else 0
        except ValueError:
            raise ConfigError(f"NONLINFO_SEED must be an integer, got {env!r}") from None
    for pos in positionals:
        if cfg.get(pos) is None:
            raise ConfigError(f"missing {pos}")
        if cfg[pos] not in POSITIONAL[pos]:
            raise ConfigError(f"{pos} must be one of {POSITIONAL[pos]}")
    cfg.pop("output", None)
    return {"command": command, **dict(sorted(cfg.items()))}


# --------------------------------------------------------------- resolution


def _floats(v, what) -> list[float]:
    if v is None:
        raise ConfigError(f"missing {what}")
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    try:
        return [float(x) for x in str(v).split(",") if x.strip()]
    except ValueError:
        raise ConfigError(f"{what}: expected comma-separated numbers, got {v!r}") from None


def _matrix(v, what) -> list[list[float]]:
    if isinstance(v, (list, tuple)):
        return [[float(x) for x in row] for row in v]
    return [_floats(row, what) for row in str(v).split(";")]


def resolve_family(cfg: dict):
    if cfg.get("family_file"):
        with open(cfg["family_file"]) as fh:
            return family_from_dict(json.load(fh))
    kind = cfg.get("family", "interval-bernoulli")
    radius = cfg.get("family_eps")
    if radius is None and not cfg["command"].startswith("simulate"):
        radius = cfg.get("eps")
    if kind == "interval-bernoulli":
        if cfg.get("lo") is not None or cfg.get("hi") is not None:
            if cfg.get("lo") is None or cfg.get("hi") is None:
                raise ConfigError("--lo and --hi must be given together")
            return IntervalBernoulli.from_bounds(cfg["lo"], cfg["hi"])
        if cfg.get("p") is None:
            return IntervalBernoulli.from_bounds(1 / 3, 1 / 2)
        return IntervalBernoulli(cfg["p"], radius or 0.0)
    if kind == "singleton":
        return EnumeratedFamily.singleton(_floats(cfg.get("probs"), "--probs"))
    if kind == "enumerated":
        return EnumeratedFamily(_matrix(cfg.get("probs"), "--probs"))
    if kind == "interval-categorical":
        return IntervalCategorical(_floats(cfg.get("lower"), "--lower"), _floats(cfg.get("upper"), "--upper"))
    raise ConfigError(f"unknown family {kind!r}")


def resolve_channel(cfg: dict):
    if cfg.get("channel_file"):
        with open(cfg["channel_file"]) as fh:
            return channel_from_dict(json.load(fh))
    kind = cfg.get("channel", "bsc")
    family_uses_p = cfg.get("family") == "interval-bernoulli" and "family" in COMMANDS[cfg["command"]][1]
    p = cfg.get("channel_p")
    if p is None and not family_uses_p:
        p = cfg.get("p")
    radius = cfg.get("channel_eps")
    if radius is None and not family_uses_p and not cfg["command"].startswith("simulate"):
        radius = cfg.get("eps")
    if kind == "bsc":
        if p is None:
            raise ConfigError("BSC channel needs --channel-p (or --p)")
        return IntervalBSC(p, radius or 0.0)
    if kind == "identity":
        return EnumeratedChannel.singleton(np.eye(cfg.get("channel_size") or 2))
    if kind == "enumerated":
        text = cfg.get("channel_probs")
        if text is None:
            raise ConfigError("enumerated channel needs --channel-probs")
        mats = text if isinstance(text, list) else [_matrix(m, "--channel-probs") for m in str(text).split("|")]
        return EnumeratedChannel(mats)
    raise ConfigError(f"unknown channel {kind!r}")


def resolve_distortion(cfg: dict, size: int) -> np.ndarray:
    d = cfg.get("distortion", "hamming")
    if d == "hamming":
        return 1.0 - np.eye(size)
    return np.array(_matrix(d, "--distortion"))


def optimizer(cfg: dict) -> OptimizerConfig:
    return OptimizerConfig(
        grid_points=cfg.get("grid_points", 2001),
        refine_tol=cfg.get("refine_tol", 1e-10),
        ba_tol=cfg.get("ba_tol", 1e-9),
        ba_max_iter=cfg.get("ba_max_iter", 10000),
        seed=cfg.get("seed") or 0,
    )


def _require(cfg, *names):
    for n in names:
        if cfg.get(n) is None:
            raise ConfigError(f"missing {OPTIONS[n][0]}")


# ----------------------------------------------------------------- commands


def cmd_measure(cfg):
    kind = cfg["kind"]
    if kind == "fano":
        _require(cfg, "pe", "alphabet_size")
        value = measures.fano_bound(_floats(cfg["pe"], "--pe"), cfg["alphabet_size"], bool(cfg.get("interval")))
        return {"value_bits": value, "witness": None, "tolerance": 1e-12}
    fam = resolve_family(cfg)
    opt = optimizer(cfg)
    if kind == "entropy":
        return measures.nonlinear_entropy(fam, opt).to_dict()
    ch = resolve_channel(cfg)
    fn = {
        "joint": measures.nonlinear_joint_entropy,
        "conditional": measures.nonlinear_conditional_entropy,
        "mutual": measures.nonlinear_mutual_information,
    }[kind]
    return fn(fam, ch, opt).to_dict()


def cmd_bound_source(cfg):
    fam = resolve_family(cfg)
    return {"value_bits": coding.source_cluster_rate(fam), "family": fam.to_dict()}


def cmd_bound_channel(cfg):
    ch = resolve_channel(cfg)
    r = coding.channel_rate_bound(ch, optimizer(cfg))
    return {**r.to_dict(), "channel": ch.to_dict()}


def cmd_rd_curve(cfg):
    fam = resolve_family(cfg)
    d = resolve_distortion(cfg, len(fam.alphabet))
    pts = coding.rate_distortion_curve(fam, d, _floats(cfg["d_grid"], "--d-grid"), optimizer(cfg))
    return {"points": [p.to_dict() for p in pts]}


def cmd_sim_source(cfg):
    fam = resolve_family(cfg)
    _require(cfg, "n", "eps")
    r = coding.simulate_source_coding(fam, cfg["n"], cfg["eps"], cfg["criterion"], cfg.get("mu"),
                                      cfg["theta_grid"])
    return r.to_dict()


def cmd_sim_channel(cfg):
    ch = resolve_channel(cfg)
    _require(cfg, "n", "r_prime")
    r = coding.simulate_channel_coding(ch, cfg["M"], cfg["n"], cfg["r_prime"], cfg["trials"], cfg["seed"],
                                       cfg["lambda_grid"], cfg["method"], shards=cfg["shards"], threads=cfg.get("threads"),
                                       config=optimizer(cfg))
    return r.to_dict()


def cmd_sim_rd(cfg):
    fam = resolve_family(cfg)
    _require(cfg, "D", "rs", "n")
    d = resolve_distortion(cfg, len(fam.alphabet))
    r = coding.simulate_rate_distortion(fam, d, cfg["D"], cfg["rs"], cfg["n"], cfg["seed"], cfg["eps"],
                                        cfg.get("r_prime"), cfg["theta_grid"], config=optimizer(cfg))
    return r.to_dict()


def _policy(cfg):
    kind = cfg["policy"]
    if kind == "fixed":
        _require(cfg, "theta")
        return sampling.Fixed(cfg["theta"])
    if kind in ("per_block_uniform", "per_block_extremes"):
        return sampling.policy_from_dict({"kind": kind, "block_len": cfg["block_len"]})
    if kind == "drift":
        return sampling.Drift(cfg["period"])
    if kind == "per_symbol_uniform":
        return sampling.PerSymbolUniform()
    raise ConfigError(f"unknown policy {kind!r}")


def cmd_sample(cfg):
    fam = resolve_family(cfg)
    s = sampling.sample_source(fam, _policy(cfg), cfg["length"], cfg["seed"])
    fmt = cfg["format"]
    if fmt == "text":
        return sampling.to_text(s.symbols, fam.alphabet)
    if fmt == "u8":
        return sampling.to_u8(s.symbols)
    if fmt == "json":
        return {"symbols": s.symbols.tolist(), "thetas": s.thetas.tolist()}
    raise ConfigError("sample --format must be text, u8 or json")


def cmd_max_mean(cfg):
    _require(cfg, "input", "n_block", "m_blocks")
    x = np.loadtxt(cfg["input"], ndmin=1)
    upper, lower = sampling.max_mean_estimate(x, cfg["n_block"], cfg["m_blocks"])
    return {"upper_est": upper, "lower_est": lower}


def cmd_lln(cfg):
    fam = resolve_family(cfg)
    f = _floats(cfg.get("f"), "--f")
    from nonlinfo.families import conjugate_expectation

    lower, upper = conjugate_expectation(fam, f), fam.upper(f)
    if cfg.get("b") is not None:
        b = cfg["b"]
    else:
        b = {"lower": lower, "upper": upper, "mid": (lower + upper) / 2}.get(cfg.get("target") or "mid")
        if b is None:
            raise ConfigError("--target must be lower, mid or upper")
    r = sampling.lln_experiment(fam, f, b, cfg["n_max"], cfg["seed"], burn_in=cfg["burn_in"])
    return {**r.to_dict(), "trajectory_n": r.trajectory_n, "trajectory": r.trajectory}


def cmd_fig(cfg):
    which = cfg["which"]
    fn = figures.FIGURES[which]
    kwargs = {}
    if cfg.get("eps_list") is not None and which in ("2", "4", "6"):
        kwargs["eps_list"] = _floats(cfg["eps_list"], "--eps-list")
    if which in ("2", "4", "6"):
        kwargs["step"] = cfg["p_step"]
    if which == "6":
        kwargs["config"] = optimizer(cfg)
    if which in ("3", "7", "8"):
        kwargs["seed"] = cfg["seed"]
        if cfg.get("length") is not None:
            kwargs["length"] = cfg["length"]
    if which in ("3", "7") and cfg.get("block_len") is not None:
        kwargs["block_len"] = cfg["block_len"]
    data = fn(**kwargs)
    if cfg["format"] == "csv":
        return data.to_csv()
    if cfg["format"] == "json":
        return data.to_dict()
    raise ConfigError("fig --format must be csv or json")


def cmd_verify(cfg):
    suite = cfg["suite"]
    if cfg.get("suite_name") not in (None, "ordering"):
        raise ConfigError("--suite only accepts 'ordering'")
    cases = cfg.get("cases")
    if cases is None:
        cases = 1000 if suite == "theorems" else 200
    if cases < 1:
        raise ConfigError("--cases must be at least 1")
    return verify.SUITES[suite](cases=cases, seed=cfg["seed"]).to_dict()


HANDLERS = {
    "measure": cmd_measure,
    "bound source-rate": cmd_bound_source,
    "bound channel-rate": cmd_bound_channel,
    "rd-curve": cmd_rd_curve,
    "simulate source-coding": cmd_sim_source,
    "simulate channel": cmd_sim_channel,
    "simulate rate-distortion": cmd_sim_rd,
    "sample": cmd_sample,
    "estimate max-mean": cmd_max_mean,
    "lln": cmd_lln,
    "fig": cmd_fig,
    "verify": cmd_verify,
}


def _emit(payload, output: str | None):
    if isinstance(payload, bytes):
        if not output:
            sys.stdout.buffer.write(payload)
            return
        with open(output, "wb") as fh:
            fh.write(payload)
        return
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(payload)
    else:
        sys.stdout.write(payload)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    output = getattr(ns, "output", None)
    try:
        cfg = effective_config(ns)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            result = HANDLERS[cfg["command"]](cfg)
        for w in caught:
            print(f"warning: {w.message}", file=sys.stderr)
    except (ConfigError, FamilyError, InfeasibleDistortion, coding.EmptyCodeSet, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if isinstance(result, (str, bytes)):
        _emit(result, output)
        return 0
    _emit(dumps(make_report(cfg["command"], cfg, result)), output)
    if cfg["command"] == "verify" and not result["passed"]:
        return 1
    return 0


def main() -> None:
    try:
        code = run()
        sys.stdout.flush()
    except BrokenPipeError:
        # downstream closed early (e.g. piped into head)
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 0
    sys.exit(code)


if __name__ == "__main__":
    main()
