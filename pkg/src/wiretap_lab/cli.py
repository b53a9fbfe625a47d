"""Command-line entry point: ``wiretap-lab {capacity,sweep,simulate,verify}``.

Every real number written by a command uses fixed 6-decimal formatting
(bound reports use 6-digit scientific notation, since tails reach 1e-60).
All randomness derives from ``--seed`` through :func:`trial_seed`, so the
output does not depend on ``--workers`` or ``WIRETAP_LAB_THREADS``.

Exit status: 0 on success, 3 when a verified bound fails, otherwise the
``code`` of the raised :class:`WiretapLabError` (2 for usage errors).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .adversary import mu_from_alpha
from .binning import BinningConfig, make_instance, per_subset_leakage, slepian_wolf_error, tv_key_uniformity
from .bounds import SUITES, VerifyParams, run_verify_suite
from .capacity import OptimizerConfig, WiretapModel, optimize_capacity, secrecy_costs, sweep_alpha
from .errors import ValidationError, WiretapLabError
from .finite_prob import Channel, Distribution
from .modelfile import ModelFile, parse_model
from .parallel import ordered_map, trial_seed, worker_count

BOUND_FAILURE_EXIT = 3

DEFAULTS = {
    "model": None,
    "alpha": None,
    "alphas": "0:1:0.25",
    "n": None,
    "rs": None,
    "rts": None,
    "mu": None,
    "trials": None,
    "restarts": 8,
    "grid_step": 0.05,
    "seed": 0,
    "out": None,
    "suite": "all",
    "gamma": None,
    "eps2": 0.1,
    "workers": None,
}

SIMULATE_DEFAULTS = {"n": 6, "rs": 0.2, "rts": 0.2, "trials": 100}
VERIFY_DEFAULT_TRIALS = 500


def default_model() -> ModelFile:
    """BSC(0.1) main, BSC(0.3) wiretapper, alpha 0.25; used when ``--model`` is omitted."""
    return ModelFile(WiretapModel(Channel.bsc(0.1), Channel.bsc(0.3), 0.25))


def f6(x: float) -> str:
    s = f"{x:.6f}"
    return "0.000000" if s == "-0.000000" else s


def parse_alphas(text: str) -> list:
    """``A0:A1:STEP`` inclusive of both ends (within float fuzz)."""
    try:
        a0, a1, step = (float(t) for t in text.split(":"))
    except ValueError:
        raise ValidationError(f"--alphas expects A0:A1:STEP, got {text!r}") from None
    if step <= 0 or a1 < a0:
        raise ValidationError("--alphas needs STEP > 0 and A1 >= A0")
    count = int(np.floor((a1 - a0) / step + 1e-9)) + 1
    return [min(1.0, round(a0 + i * step, 12)) for i in range(count)]


def _add_common(p: argparse.ArgumentParser, names) -> None:
    help_text = {
        "model": "model file (see wiretap_lab.modelfile)",
        "alpha": "tapped fraction; overrides the model file",
        "alphas": "sweep grid A0:A1:STEP",
        "n": "blocklength",
        "rs": "key rate R_s (bits per symbol)",
        "rts": "public-message rate (bits per symbol)",
        "mu": "number of tapped positions",
        "trials": "number of seeded trials",
        "restarts": "optimizer restarts",
        "grid_step": "coarse grid step for the optimizer",
        "seed": "master seed (64-bit)",
        "out": "output file (default stdout)",
        "suite": "bound suite",
        "gamma": "threshold in bits for lemma1/lemma2",
        "eps2": "slack of the gamma presets",
        "workers": "worker threads (capped by WIRETAP_LAB_THREADS)",
    }
    types = {
        "alpha": float, "n": int, "rs": float, "rts": float, "mu": int, "trials": int,
        "restarts": int, "grid_step": float, "seed": int, "gamma": float, "eps2": float, "workers": int,
    }
    for name in names:
        flag = "--" + name.replace("_", "-")
        kwargs = {"dest": name, "default": None, "help": help_text[name]}
        if name in types:
            kwargs["type"] = types[name]
        if name == "suite":
            kwargs["choices"] = SUITES + ("all",)
        p.add_argument(flag, **kwargs)
    p.add_argument("--config", default=None, help="JSON file of option values (flags take precedence)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wiretap-lab", description="Wiretap-channel capacity and key-agreement lab.")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_common(sub.add_parser("capacity", help="secrecy capacity at one alpha"),
                ["model", "alpha", "restarts", "grid_step", "seed", "out", "workers"])
    _add_common(sub.add_parser("sweep", help="capacity over an alpha grid, as CSV"),
                ["model", "alphas", "restarts", "grid_step", "seed", "out", "workers"])
    _add_common(sub.add_parser("simulate", help="exact random-binning simulation, as CSV"),
                ["model", "alpha", "n", "rs", "rts", "mu", "trials", "seed", "out", "workers"])
    _add_common(sub.add_parser("verify", help="numerical bound checks"),
                ["model", "alpha", "suite", "n", "rs", "rts", "mu", "trials", "gamma", "eps2", "seed", "out", "workers"])
    return parser


def resolve(args: argparse.Namespace) -> dict:
    """CLI flags over config-file values over defaults."""
    opts = {k: v for k, v in vars(args).items() if k not in ("config", "command")}
    config = {}
    if args.config:
        try:
            config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValidationError(f"config file {args.config!r} not found") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {args.config!r}: {exc}") from None
        if not isinstance(config, dict):
            raise ValidationError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
        unknown = sorted(set(config) - set(opts))
        if unknown:
            raise ValidationError(f"config keys not valid for {args.command}: {', '.join(unknown)}")
    out = {}
    for key, value in opts.items():
        if value is not None:
            out[key] = value
        elif config.get(key) is not None:
            out[key] = config[key]
        else:
            out[key] = DEFAULTS.get(key)
    return out


def _load(opts: dict) -> ModelFile:
    mf = parse_model(opts["model"]) if opts.get("model") else default_model()
    if opts.get("alpha") is not None:
        mf = ModelFile(mf.model.with_alpha(float(opts["alpha"])), mf.source, mf.path, True)
    return mf


def _workers(opts: dict) -> int:
    requested = opts.get("workers") or os.cpu_count() or 1
    return worker_count(int(requested))


def _optimizer(opts: dict) -> OptimizerConfig:
    return OptimizerConfig(
        restarts=int(opts["restarts"]), grid_step=float(opts["grid_step"]), seed=int(opts["seed"]), workers=_workers(opts)
    )


def cmd_capacity(opts: dict) -> tuple:
    model = _load(opts).model
    res = optimize_capacity(model, _optimizer(opts))
    tap, noisy = secrecy_costs(res.argmax, model)
    d = res.diagnostics
    lines = [
        f"capacity_bits {f6(res.value)}",
        f"objective_bits {f6(res.objective)}",
        f"alpha {f6(model.alpha)}",
        f"cost_tap_bits {f6(tap)}",
        f"cost_noisy_bits {f6(noisy)}",
        f"grid_value_bits {f6(d.grid_value)}",
        f"restarts_used {d.restarts_used}",
        f"best_restart {d.best_restart}",
        f"iterations {d.iterations}",
        f"converged {str(d.converged).lower()}",
        f"phases_agree {str(d.phases_agree).lower()}",
    ]
    for u, row in enumerate(res.argmax.p_ux.table):
        lines.append(f"p_ux[{u}] " + " ".join(f6(v) for v in row))
    return "\n".join(lines) + "\n", 0


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def cmd_sweep(opts: dict) -> tuple:
    model = _load(opts).model
    points = sweep_alpha(model, parse_alphas(str(opts["alphas"])), _optimizer(opts))
    rows = [
        [f6(p.alpha), f6(p.result.value), f6(p.cost_tap), f6(p.cost_noisy), p.result.diagnostics.restarts_used]
        for p in points
    ]
    return _csv(["alpha", "capacity_bits", "cost_tap_bits", "cost_noisy_bits", "restarts_used"], rows), 0


def _get(opts: dict, key: str, fallback):
    return fallback if opts.get(key) is None else opts[key]


def cmd_simulate(opts: dict) -> tuple:
    mf = _load(opts)
    model = mf.model
    source = mf.source or Distribution.uniform(model.x_size)
    n = int(_get(opts, "n", SIMULATE_DEFAULTS["n"]))
    cfg = BinningConfig(n, float(_get(opts, "rs", SIMULATE_DEFAULTS["rs"])), float(_get(opts, "rts", SIMULATE_DEFAULTS["rts"])))
    mu = int(opts["mu"]) if opts.get("mu") is not None else mu_from_alpha(model.alpha, n)
    trials = int(_get(opts, "trials", SIMULATE_DEFAULTS["trials"]))
    master = int(opts["seed"])

    def one(t):
        seed = trial_seed(master, t)
        inst = make_instance(source, model.main, model.wtp, cfg, seed)
        leaks = per_subset_leakage(inst, mu)
        return seed, tv_key_uniformity(inst), slepian_wolf_error(inst), leaks

    rows = []
    for seed, tv, sw, leaks in ordered_map(one, range(trials), _workers(opts)):
        worst = max(d for _, d in leaks)
        for S, d in leaks:
            rows.append([seed, f6(tv), f6(sw), S.format(), f6(d), f6(worst)])
    header = ["seed", "tv_key", "sw_error", "subset", "leakage_bits", "max_leakage_bits"]
    return _csv(header, rows), 0


def cmd_verify(opts: dict) -> tuple:
    mf = _load(opts)
    prm = VerifyParams(
        n=opts.get("n"),
        rate_key=opts.get("rs"),
        rate_public=opts.get("rts"),
        mu=opts.get("mu"),
        gamma=opts.get("gamma"),
        eps2=float(opts["eps2"]),
        trials=int(_get(opts, "trials", VERIFY_DEFAULT_TRIALS)),
        seed=int(opts["seed"]),
        workers=_workers(opts),
    )
    reports = run_verify_suite(str(opts["suite"]), mf.model, mf.source, prm)
    text = "".join(r.line() + "\n" for r in reports)
    failed = sum(r.failed for r in reports)
    return text, BOUND_FAILURE_EXIT if failed else 0


COMMANDS = {"capacity": cmd_capacity, "sweep": cmd_sweep, "simulate": cmd_simulate, "verify": cmd_verify}


def run(argv: Optional[list] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = resolve(args)
        text, status = COMMANDS[args.command](opts)
    except WiretapLabError as exc:
        print(f"wiretap-lab {args.command}: error: {exc}", file=stderr)
        return exc.code
    except (TypeError, ValueError) as exc:
        # malformed config-file values reach the numeric conversions
        print(f"wiretap-lab {args.command}: error: {exc}", file=stderr)
        return ValidationError.code
    if opts.get("out"):
        Path(opts["out"]).write_text(text, encoding="utf-8")
    else:
        stdout.write(text)
    if status == BOUND_FAILURE_EXIT:
        print(f"wiretap-lab {args.command}: at least one bound failed", file=stderr)
    return status


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
