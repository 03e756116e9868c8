"""Command-line interface.

Subcommands: ``compute``, ``optimize``, ``compare``, ``sweep`` and
``scaling``.  JSON output uses shortest round-trip floats; CSV output uses
12 significant digits.  Exit codes: 0 success, 2 bad configuration,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

from . import strategies as st
from .errors import ContractError, NumericError
from .fisher import precision_from_qfi, qfi_bound, qfi_exact
from .optimizer import DEFAULT_MAX_ITER, DEFAULT_TOLERANCE, optimize
from .scaling import differential_scaling, precision_curve, transmissivity_curve
from .states import STATE_KINDS, InputState, LossModel, preset_state

log = logging.getLogger("lossyphase")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# Hard defaults, applied after flags and --config.
DEFAULTS = {
    "format": None,
    "output": None,
    "loss": "both",
    "state": "noon",
    "exact": True,
    "tolerance": DEFAULT_TOLERANCE,
    "max_iter": DEFAULT_MAX_ITER,
    "window": 4,
    "strategy": "optimal",
    "n_min": 1,
    "steps": 20,
    "refine": True,
}


class ConfigError(ContractError):
    pass


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".12g")


def _json_float(value):
    v = float(value)
    return v if np.isfinite(v) else None


def _parse_weights(text: str) -> dict[int, float] | list[float]:
    items = [t.strip() for t in text.split(",") if t.strip()]
    if not items:
        raise ConfigError("empty weight list")
    try:
        if all(":" in t for t in items):
            return {int(k): float(v) for k, v in (t.split(":", 1) for t in items)}
        return [float(t) for t in items]
    except ValueError as exc:
        raise ConfigError(f"cannot parse weights {text!r}: {exc}") from None


def _split(text, convert):
    if isinstance(text, (list, tuple)):
        return [convert(t) for t in text]
    try:
        return [convert(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def resolve_loss(cfg) -> LossModel:
    """``--loss both|one`` with ``--eta`` sets both arms; explicit
    ``--eta-a``/``--eta-b`` override the shorthand.
    """
    mode = st.loss_mode(cfg["loss"])
    eta = cfg.get("eta")
    eta_a, eta_b = cfg.get("eta_a"), cfg.get("eta_b")
    if eta is not None:
        eta = float(eta)
        base_a, base_b = (eta, eta) if mode == "both" else (eta, 1.0)
    else:
        base_a, base_b = None, None
    eta_a = base_a if eta_a is None else float(eta_a)
    eta_b = base_b if eta_b is None else float(eta_b)
    if eta_a is None:
        raise ConfigError("give --eta (with --loss) or --eta-a/--eta-b")
    if eta_b is None:
        eta_b = eta_a if mode == "both" else 1.0
    return LossModel(eta_a, eta_b)


def resolve_state(cfg) -> InputState:
    n = _require_n(cfg)
    kind = cfg["state"]
    if kind == "custom":
        weights = cfg.get("weights")
        if weights is None:
            raise ConfigError("--state custom needs --weights")
        if isinstance(weights, str):
            weights = _parse_weights(weights)
        if isinstance(weights, dict):
            dense = np.zeros(n + 1)
            for k, v in weights.items():
                k = int(k)
                if not 0 <= k <= n:
                    raise ConfigError(f"weight index {k} outside [0, {n}]")
                dense[k] = float(v)
            weights = dense
        return InputState(n, weights)
    params = {key: cfg[key] for key in ("m", "p", "k") if cfg.get(key) is not None}
    return preset_state(kind, n, **params)


def _require_n(cfg) -> int:
    n = cfg.get("n")
    if n is None:
        raise ConfigError("--n is required")
    try:
        n = int(n)
    except (TypeError, ValueError):
        raise ConfigError(f"--n must be an integer, got {n!r}") from None
    if n < 1:
        raise ConfigError(f"--n must be >= 1, got {n}")
    return n


def _emit_object(payload: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(payload, indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    keys = list(payload)
    writer.writerow(keys)
    cells = []
    for key in keys:
        v = payload[key]
        if isinstance(v, (dict, list)):
            cells.append(json.dumps(v))
        elif isinstance(v, float):
            cells.append(_fmt(v))
        elif v is None:
            cells.append("")
        else:
            cells.append(str(v))
    writer.writerow(cells)
    return buf.getvalue()


def _gap_percent(bound: float, exact: float | None):
    if exact is None or bound <= 0.0:
        return None
    return 100.0 * (bound - exact) / bound


def cmd_compute(cfg) -> str:
    state = resolve_state(cfg)
    loss = resolve_loss(cfg)
    bound = qfi_bound(state, loss)
    exact = qfi_exact(state, loss) if cfg["exact"] else None
    payload = {
        "n": state.n,
        "eta_a": loss.eta_a,
        "eta_b": loss.eta_b,
        "state": {"kind": cfg["state"], "weights": [float(x) for x in state.weights]},
        "fq_bound": bound.value,
        "fq_exact": None if exact is None else exact.value,
        "precision_bound": _json_float(bound.precision),
        "precision_exact": None if exact is None else _json_float(exact.precision),
        "gap_percent": _gap_percent(bound.value, None if exact is None else exact.value),
    }
    return _emit_object(payload, cfg["format"] or "json")


def cmd_optimize(cfg) -> str:
    n = _require_n(cfg)
    loss = resolve_loss(cfg)
    report = optimize(n, loss, float(cfg["tolerance"]), int(cfg["max_iter"]))
    if not report.converged:
        log.warning("optimizer did not converge: residual %.3g after %d iterations",
                    report.residual, report.iterations)
    if report.refined_exact is not None:
        fq_exact = report.refined_exact.value
    else:
        # lossless arm b: the bound is the exact value
        fq_exact = report.qfi.value
    payload = {
        "n": n,
        "eta_a": loss.eta_a,
        "eta_b": loss.eta_b,
        "weights": {str(k): x for k, x in report.optimum.support(1e-9).items()},
        "weights_full": [float(x) for x in report.optimum.weights],
        "fq": report.qfi.value,
        "precision": _json_float(report.qfi.precision),
        "fq_exact": fq_exact,
        "precision_exact": None if fq_exact is None else _json_float(precision_from_qfi(fq_exact)),
        "gap_percent": _gap_percent(report.qfi.value, fq_exact),
        "iterations": report.iterations,
        "converged": report.converged,
        "residual": report.residual,
    }
    return _emit_object(payload, cfg["format"] or "json")


def _strategy_list(cfg, default):
    raw = cfg.get("strategies") or default
    return _split(raw, str.strip)


def cmd_compare(cfg) -> str:
    n = _require_n(cfg)
    mode = st.loss_mode(cfg["loss"])
    if cfg.get("eta") is None:
        raise ConfigError("--eta is required")
    eta = float(cfg["eta"])
    default = [k for k in st.STRATEGY_KINDS
               if not (k == "unbalanced-noon" and mode == "both") and not (k == "twin-fock" and n % 2)]
    kinds = _strategy_list(cfg, default)
    curve = precision_curve(kinds, [n], eta, mode, float(cfg["tolerance"]), int(cfg["max_iter"]),
                            refine=bool(cfg["refine"]))
    row = curve.rows[0]
    if (cfg["format"] or "json") == "json":
        payload = {"n": n, "eta": eta, "loss": mode,
                   "precision": {k: _json_float(v) for k, v in row.values.items()}}
        if row.optimal_exact is not None:
            payload["optimal_exact"] = row.optimal_exact
        if row.flags:
            payload["flags"] = list(row.flags)
        return json.dumps(payload, indent=2) + "\n"
    lines = ["strategy,precision"] + [f"{k},{_fmt(v)}" for k, v in row.values.items()]
    return "\n".join(lines) + "\n"


def _curve_csv(curve, axis_name):
    lines = [",".join([axis_name, *curve.strategies])]
    for row in curve.rows:
        x = row.n if curve.axis == "n" else row.abscissa
        lines.append(",".join([_fmt(x), *(_fmt(row.values[k]) for k in curve.strategies)]))
    return "\n".join(lines) + "\n"


def cmd_sweep(cfg) -> str:
    axis = cfg.get("axis")
    if axis not in ("n", "eta"):
        raise ConfigError("--axis must be 'n' or 'eta'")
    start, stop = cfg.get("from"), cfg.get("to")
    if start is None or stop is None:
        raise ConfigError("--from and --to are required")
    mode = st.loss_mode(cfg["loss"])
    kinds = _strategy_list(cfg, ["optimal", "noon", "chopping", "sil", "heisenberg"])
    common = dict(loss_mode=mode, tolerance=float(cfg["tolerance"]), max_iter=int(cfg["max_iter"]),
                  refine=bool(cfg["refine"]), jobs=cfg["jobs"])
    if axis == "n":
        if cfg.get("eta") is None:
            raise ConfigError("--eta is required for an n sweep")
        lo, hi = int(start), int(stop)
        if hi < lo:
            raise ConfigError("--to must not be below --from")
        curve = precision_curve(kinds, range(lo, hi + 1), float(cfg["eta"]), **common)
    else:
        n = _require_n(cfg)
        steps = int(cfg["steps"])
        if steps < 1:
            raise ConfigError("--steps must be >= 1")
        etas = np.linspace(float(start), float(stop), steps) if steps > 1 else [float(start)]
        curve = transmissivity_curve(kinds, etas, n, **common)
    for row in curve.rows:
        for flag in row.flags:
            log.warning("%s=%s: %s", axis, _fmt(row.abscissa), flag)
    if (cfg["format"] or "csv") == "json":
        payload = {
            "axis": axis,
            "loss": mode,
            "strategies": list(curve.strategies),
            "rows": [{axis: (row.n if axis == "n" else row.abscissa),
                      **{k: _json_float(v) for k, v in row.values.items()}} for row in curve.rows],
        }
        return json.dumps(payload, indent=2) + "\n"
    return _curve_csv(curve, axis)


def cmd_scaling(cfg) -> str:
    if cfg.get("eta") is None:
        raise ConfigError("--eta is required (comma-separated list allowed)")
    etas = _split(cfg["eta"], float)
    if cfg.get("n_max") is None:
        raise ConfigError("--n-max is required")
    n_max, n_min, window = int(cfg["n_max"]), int(cfg["n_min"]), int(cfg["window"])
    mode = st.loss_mode(cfg["loss"])
    rows = []
    for eta in etas:
        curve = precision_curve([cfg["strategy"]], range(max(1, n_min - window), n_max + 1), eta, mode,
                                float(cfg["tolerance"]), int(cfg["max_iter"]), refine=False, jobs=cfg["jobs"])
        for r in differential_scaling(curve, cfg["strategy"], window).rows:
            if r.n >= n_min:
                rows.append((r.n, eta, r.s))
    if (cfg["format"] or "csv") == "json":
        payload = {"loss": mode, "window": window, "strategy": cfg["strategy"],
                   "rows": [{"n": n, "eta": eta, "s": s} for n, eta, s in rows]}
        return json.dumps(payload, indent=2) + "\n"
    lines = ["n,eta,s"] + [f"{n},{_fmt(eta)},{_fmt(s)}" for n, eta, s in rows]
    return "\n".join(lines) + "\n"


COMMANDS = {
    "compute": cmd_compute,
    "optimize": cmd_optimize,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "scaling": cmd_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    common = argparse.ArgumentParser(add_help=False, argument_default=S)
    common.add_argument("--config", help="JSON file with the same keys as the flags (flags win)")
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--output", "-o", help="write here instead of standard output")
    common.add_argument("--loss", help="both | one")
    common.add_argument("--eta", help="transmissivity (list allowed for scaling)")
    common.add_argument("--tolerance", type=float)
    common.add_argument("--max-iter", type=int, dest="max_iter")
    common.add_argument("--jobs", type=int, help="worker processes (default: $QFI_JOBS or CPU count)")
    common.add_argument("--verbose", "-v", action="store_true")

    parser = argparse.ArgumentParser(prog="lossyphase", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", parents=[common], argument_default=S,
                       help="Fisher information of a given state")
    p.add_argument("--n", type=int)
    p.add_argument("--eta-a", type=float, dest="eta_a")
    p.add_argument("--eta-b", type=float, dest="eta_b")
    p.add_argument("--state", choices=[*STATE_KINDS, "custom"])
    p.add_argument("--weights", help="x_0,...,x_N or k:x_k pairs")
    p.add_argument("--m", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--k", type=int)
    p.add_argument("--exact", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("optimize", parents=[common], argument_default=S,
                       help="optimal state for given photon number and losses")
    p.add_argument("--n", type=int)
    p.add_argument("--eta-a", type=float, dest="eta_a")
    p.add_argument("--eta-b", type=float, dest="eta_b")

    p = sub.add_parser("compare", parents=[common], argument_default=S,
                       help="precision of several strategies at one point")
    p.add_argument("--n", type=int)
    p.add_argument("--strategies")
    p.add_argument("--refine", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("sweep", parents=[common], argument_default=S,
                       help="precision curves over n or eta")
    p.add_argument("--axis", choices=["n", "eta"])
    p.add_argument("--from", dest="from", type=float)
    p.add_argument("--to", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--n", type=int)
    p.add_argument("--strategies")
    p.add_argument("--refine", action=argparse.BooleanOptionalAction)

    p = sub.add_parser("scaling", parents=[common], argument_default=S,
                       help="differential scaling exponent S(N)")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--n-min", type=int, dest="n_min")
    p.add_argument("--window", type=int)
    p.add_argument("--strategy")
    return parser


def _default_jobs() -> int:
    env = os.environ.get("QFI_JOBS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"QFI_JOBS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = {}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        cfg.update({k.replace("-", "_"): v for k, v in loaded.items()})
    cfg.update({k: v for k, v in vars(args).items() if k != "config"})
    for key, value in DEFAULTS.items():
        cfg.setdefault(key, value)
    if cfg.get("jobs") is None:
        cfg["jobs"] = _default_jobs()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = resolve_config(args)
        text = COMMANDS[args.command](cfg)
    # LinAlgError subclasses ValueError, so it must be caught first
    except (NumericError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"lossyphase {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ContractError, ValueError, TypeError) as exc:
        print(f"lossyphase {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    output = cfg.get("output")
    if output:
        with open(output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
