"""Command-line surface: analyze, simulate, sweep, reproduce.

Emits JSON reports for single-point commands and plot-ready CSV for grids.
Numbers are serialized with shortest round-trip repr (17 significant digits
when needed) so emitted files parse back to the exact doubles.

Exit codes: 0 success, 2 parse/validation error, 3 numeric/convergence
error, 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .analytic import (
    SystemParams,
    eventual_outage_poisson_exact,
    outage_bound,
    required_initial_energy,
    solve_adjustment_coefficient,
    asymptotic_outage,
    stationary_outage,
    tilted_ladder_mean_poisson,
    utilization,
)
from .distributions import parse_distribution_spec
from .errors import (
    ConvergenceError,
    DomainError,
    GridError,
    ParseError,
    PreconditionError,
)
from .simulate import estimate_eventual_outage

__all__ = [
    "SweepSpec",
    "ResultRow",
    "CSV_HEADER",
    "parse_distribution_spec",
    "run_analyze",
    "run_simulate",
    "run_sweep",
    "rows_to_csv",
    "run_reproduce",
    "main",
]

CSV_HEADER = "dist,rho,u0,r_star,psi_exact,psi_bound,psi_mc,ci_lo,ci_hi,trials,horizon,seed"

DEFAULT_TRIALS = 50_000
DEFAULT_HORIZON = 1000.0
DEFAULT_SEED = 1

_REPRODUCE_U0 = [float(u) for u in range(0, 41, 2)]
_REPRODUCE_RHO = [1.1, 1.2, 1.3]
_FIGURES = {
    2: (["exp:mean=1.0"], _REPRODUCE_RHO),
    3: (["det:mean=1.0"], _REPRODUCE_RHO),
    4: (["unif:mean=1.0"], _REPRODUCE_RHO),
    5: (["exp:mean=1.0", "det:mean=1.0", "unif:mean=1.0"], [1.1]),
}


@dataclass(frozen=True)
class SweepSpec:
    """A (dist, rho, u0) grid plus the shared Monte-Carlo protocol."""

    u0_grid: list[float]
    rho_list: list[float]
    dist_list: list[str]
    p: float = 1.0
    trials: int = DEFAULT_TRIALS
    horizon: float = DEFAULT_HORIZON
    seed: int = DEFAULT_SEED
    workers: int | None = None
    ci_method: str = "normal"

    def __post_init__(self) -> None:
        if not self.u0_grid or not self.rho_list or not self.dist_list:
            raise ValueError("sweep grids must be nonempty")
        if any(not rho > 0.0 for rho in self.rho_list):
            raise ValueError(f"every rho must be positive, got {self.rho_list}")
        if self.trials < 0:
            raise ValueError(f"trials must be >= 0, got {self.trials}")


@dataclass(frozen=True)
class ResultRow:
    """One sweep grid point; column order is the CSV contract."""

    dist: str
    rho: float
    u0: float
    r_star: float | None
    psi_exact: float
    psi_bound: float | None
    psi_mc: float | None
    ci_lo: float | None
    ci_hi: float | None
    trials: int
    horizon: float
    seed: int


def _fmt(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def rows_to_csv(rows: list[ResultRow]) -> str:
    lines = [CSV_HEADER]
    for r in rows:
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    r.dist,
                    r.rho,
                    r.u0,
                    r.r_star,
                    r.psi_exact,
                    r.psi_bound,
                    r.psi_mc,
                    r.ci_lo,
                    r.ci_hi,
                    r.trials,
                    r.horizon,
                    r.seed,
                )
            )
        )
    return "\n".join(lines) + "\n"


def run_analyze(params: SystemParams) -> dict:
    """Single-point analytic report as a JSON-ready dict.

    For rho > 1: adjustment coefficient, exact / bound / asymptotic outage
    probabilities, and the initial energy required for outage targets
    0.1, 0.01, 0.001.  For rho <= 1 the eventual outage is certain; the
    rho < 1 report adds the stationary empty fraction and outage-duration
    quantiles.
    """
    verdict = utilization(params)
    report: dict = {
        "params": {
            "lam": params.lam,
            "packet": params.packet.spec_string(),
            "p": params.p,
            "u0": params.u0,
        },
        "rho": verdict.rho,
        "verdict": verdict.status.value,
    }
    if verdict.rho > 1.0:
        adj = solve_adjustment_coefficient(params)
        r = adj.r_star
        theta = 1.0 - r * params.p / params.lam
        report["adjustment_coefficient"] = {
            "r_star": r,
            "method": adj.method.value,
            "iterations": adj.iterations,
            "residual": adj.residual,
        }
        report["psi_exact"] = eventual_outage_poisson_exact(params, r)
        report["psi_bound"] = outage_bound(r, params.u0)
        report["psi_asymptotic"] = asymptotic_outage(
            theta, r, tilted_ladder_mean_poisson(params, r), params.u0
        )
        report["required_u0"] = {
            str(eps): required_initial_energy(r, eps) for eps in (0.1, 0.01, 0.001)
        }
    else:
        report["psi_exact"] = 1.0
        if verdict.rho < 1.0:
            report["stationary_outage"] = stationary_outage(params)
            report["outage_duration_quantiles"] = {
                str(q): -math.log(1.0 - q) / params.lam for q in (0.5, 0.9, 0.99)
            }
    return report


def run_simulate(
    params: SystemParams,
    trials: int,
    horizon: float,
    seed: int,
    workers: int | None = None,
    ci_method: str = "normal",
) -> dict:
    """Monte-Carlo outage estimate for one parameter point, as a dict."""
    est = estimate_eventual_outage(
        params, horizon, trials, seed, workers=workers, ci_method=ci_method
    )
    report = {
        "params": {
            "lam": params.lam,
            "packet": params.packet.spec_string(),
            "p": params.p,
            "u0": params.u0,
        },
        "rho": params.rho,
        "psi_mc": est.estimate,
        "stderr": est.stderr,
        "ci95": [est.ci95_lo, est.ci95_hi],
        "trials": est.trials,
        "horizon": est.horizon,
        "seed": est.seed,
    }
    if params.rho > 1.0:
        r = solve_adjustment_coefficient(params).r_star
        report["psi_exact"] = eventual_outage_poisson_exact(params, r)
        report["psi_bound"] = outage_bound(r, params.u0)
    else:
        report["psi_exact"] = 1.0
    return report


def run_sweep(spec: SweepSpec) -> list[ResultRow]:
    """One ResultRow per (dist, rho, u0) point; aborts naming a failed point.

    The arrival rate is derived per point as ``lam = rho * p / mean`` so
    the sweep holds consumption and mean packet size fixed.  Points with
    ``rho <= 1`` carry the certain value ``psi_exact = 1`` and empty
    adjustment-coefficient columns.  ``trials = 0`` skips Monte-Carlo and
    leaves those columns empty.
    """
    rows: list[ResultRow] = []
    for dist_text in spec.dist_list:
        packet = parse_distribution_spec(dist_text)
        for rho in spec.rho_list:
            lam = rho * spec.p / packet.mean
            for u0 in spec.u0_grid:
                point = f"(dist={dist_text}, rho={rho}, u0={u0})"
                try:
                    params = SystemParams(lam, packet, spec.p, u0)
                    if rho > 1.0:
                        r_star = solve_adjustment_coefficient(params).r_star
                        psi_exact = eventual_outage_poisson_exact(params, r_star)
                        psi_bound = outage_bound(r_star, u0)
                    else:
                        r_star = None
                        psi_exact = 1.0
                        psi_bound = None
                    if spec.trials > 0:
                        est = estimate_eventual_outage(
                            params,
                            spec.horizon,
                            spec.trials,
                            spec.seed,
                            workers=spec.workers,
                            ci_method=spec.ci_method,
                        )
                        psi_mc, ci_lo, ci_hi = est.estimate, est.ci95_lo, est.ci95_hi
                    else:
                        psi_mc = ci_lo = ci_hi = None
                except Exception as exc:
                    raise type(exc)(f"grid point {point} failed: {exc}") from exc
                rows.append(
                    ResultRow(
                        dist=packet.spec_string(),
                        rho=float(rho),
                        u0=float(u0),
                        r_star=r_star,
                        psi_exact=psi_exact,
                        psi_bound=psi_bound,
                        psi_mc=psi_mc,
                        ci_lo=ci_lo,
                        ci_hi=ci_hi,
                        trials=spec.trials,
                        horizon=spec.horizon,
                        seed=spec.seed,
                    )
                )
    return rows


def run_reproduce(
    figure: int,
    out_dir: str | Path,
    trials: int = DEFAULT_TRIALS,
    horizon: float = DEFAULT_HORIZON,
    seed: int = DEFAULT_SEED,
    workers: int | None = None,
) -> dict[str, Path]:
    """Emit the CSV and JSON manifest for one reference figure.

    Figures 2-4 sweep u0 over 0..40 (step 2) at rho in {1.1, 1.2, 1.3} for
    the exponential, deterministic and uniform families respectively;
    figure 5 compares the three families at rho = 1.1.  Output bytes are a
    pure function of (figure, trials, horizon, seed).
    """
    if figure not in _FIGURES:
        raise ValueError(f"figure must be one of {sorted(_FIGURES)}, got {figure!r}")
    dists, rhos = _FIGURES[figure]
    spec = SweepSpec(
        u0_grid=list(_REPRODUCE_U0),
        rho_list=list(rhos),
        dist_list=list(dists),
        p=1.0,
        trials=trials,
        horizon=horizon,
        seed=seed,
        workers=workers,
    )
    rows = run_sweep(spec)
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"figure{figure}.csv"
        csv_path.write_bytes(rows_to_csv(rows).encode("utf-8"))
        manifest = {
            "figure": figure,
            "params": {
                "p": 1.0,
                "dists": dists,
                "trials": trials,
                "horizon": horizon,
            },
            "grids": {"u0": spec.u0_grid, "rho": spec.rho_list},
            "seed": seed,
            "tool_version": __version__,
        }
        manifest_path = out / f"figure{figure}.manifest.json"
        manifest_path.write_bytes(
            (json.dumps(manifest, indent=2, sort_keys=True) + "\n").encode("utf-8")
        )
    except OSError as exc:
        raise OSError(f"cannot write figure output under {out}: {exc}") from exc
    return {"csv": csv_path, "manifest": manifest_path}


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hsc",
        description="Self-sustainability and energy-outage analysis for "
        "harvest-store-consume systems.",
    )
    parser.add_argument("--version", action="version", version=f"hsc {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(sp: argparse.ArgumentParser, with_system: bool) -> None:
        if with_system:
            sp.add_argument("--lam", type=float, help="packet arrival rate")
            sp.add_argument(
                "--packet", help="packet-size law, e.g. exp:mean=1.0 (exp|det|unif)"
            )
            sp.add_argument("--p", type=float, help="consumption rate (default 1.0)")
            sp.add_argument("--u0", type=float, help="initial energy (default 0.0)")
        sp.add_argument("--trials", type=int, help=f"Monte-Carlo trials (default {DEFAULT_TRIALS})")
        sp.add_argument("--horizon", type=float, help=f"simulated-time horizon (default {DEFAULT_HORIZON})")
        sp.add_argument("--seed", type=int, help=f"master seed (default {DEFAULT_SEED})")
        sp.add_argument("--workers", type=int, help="worker processes for trials")
        sp.add_argument("--ci", choices=["normal", "wilson"], help="CI method (default normal)")
        sp.add_argument("--out", help="output file (directory for reproduce)")
        sp.add_argument("--config", help="JSON file with the same keys as the flags")

    sp = sub.add_parser("analyze", help="closed-form report for one parameter point")
    add_common(sp, with_system=True)

    sp = sub.add_parser("simulate", help="Monte-Carlo outage estimate for one point")
    add_common(sp, with_system=True)

    sp = sub.add_parser("sweep", help="CSV sweep over (dist, rho, u0) grids")
    sp.add_argument("--dist", help="comma-separated packet laws (default exp:mean=1.0)")
    sp.add_argument("--rho", help="comma-separated utilizations (default 1.1,1.2,1.3)")
    sp.add_argument(
        "--u0-grid", dest="u0_grid", help="start:step:stop or comma list (default 0:2:40)"
    )
    sp.add_argument("--p", type=float, help="consumption rate (default 1.0)")
    add_common(sp, with_system=False)

    sp = sub.add_parser("reproduce", help="emit a reference figure CSV + manifest")
    sp.add_argument("--figure", type=int, help="figure number: 2, 3, 4 or 5")
    add_common(sp, with_system=False)
    return parser


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        cfg = json.load(fh)
    if not isinstance(cfg, dict):
        raise ValueError(f"config {path} must hold a JSON object")
    return cfg


class _Options:
    """Flag values merged over config-file values merged over defaults."""

    def __init__(self, args: argparse.Namespace, config: dict):
        self._args = args
        self._config = config

    def get(self, key: str, default=None, required: bool = False):
        value = getattr(self._args, key, None)
        if value is None:
            value = self._config.get(key, None)
        if value is None:
            value = default
        if value is None and required:
            raise ValueError(f"missing required option --{key.replace('_', '-')}")
        return value


def _parse_float_list(text: str, what: str) -> list[float]:
    try:
        values = [float(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise ParseError(f"bad {what} list {text!r}") from None
    if not values:
        raise ParseError(f"empty {what} list {text!r}")
    return values


def _parse_u0_grid(value) -> list[float]:
    if isinstance(value, (list, tuple)):
        return [float(v) for v in value]
    text = str(value)
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ParseError(f"grid {text!r} must be start:step:stop")
        try:
            start, step, stop = (float(tok) for tok in parts)
        except ValueError:
            raise ParseError(f"grid {text!r} has non-numeric parts") from None
        if step <= 0 or stop < start:
            raise ParseError(f"grid {text!r} must have step > 0 and stop >= start")
        count = round((stop - start) / step)
        if abs(start + count * step - stop) > 1e-9:
            raise ParseError(f"step does not tile [{start}, {stop}] in grid {text!r}")
        return [start + k * step for k in range(count + 1)]
    return _parse_float_list(text, "u0 grid")


def _system_params(opt: _Options) -> SystemParams:
    lam = float(opt.get("lam", required=True))
    packet = parse_distribution_spec(str(opt.get("packet", required=True)))
    p = float(opt.get("p", 1.0))
    u0 = float(opt.get("u0", 0.0))
    return SystemParams(lam=lam, packet=packet, p=p, u0=u0)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _dispatch(args: argparse.Namespace) -> int:
    opt = _Options(args, _load_config(getattr(args, "config", None)))
    out = opt.get("out")
    if args.command == "analyze":
        report = run_analyze(_system_params(opt))
        _emit(json.dumps(report, indent=2) + "\n", out)
        return 0
    if args.command == "simulate":
        report = run_simulate(
            _system_params(opt),
            trials=int(opt.get("trials", DEFAULT_TRIALS)),
            horizon=float(opt.get("horizon", DEFAULT_HORIZON)),
            seed=int(opt.get("seed", DEFAULT_SEED)),
            workers=opt.get("workers"),
            ci_method=str(opt.get("ci", "normal")),
        )
        _emit(json.dumps(report, indent=2) + "\n", out)
        return 0
    if args.command == "sweep":
        spec = SweepSpec(
            u0_grid=_parse_u0_grid(opt.get("u0_grid", "0:2:40")),
            rho_list=_parse_float_list(str(opt.get("rho", "1.1,1.2,1.3")), "rho"),
            dist_list=[
                tok.strip()
                for tok in str(opt.get("dist", "exp:mean=1.0")).split(",")
                if tok.strip()
            ],
            p=float(opt.get("p", 1.0)),
            trials=int(opt.get("trials", DEFAULT_TRIALS)),
            horizon=float(opt.get("horizon", DEFAULT_HORIZON)),
            seed=int(opt.get("seed", DEFAULT_SEED)),
            workers=opt.get("workers"),
            ci_method=str(opt.get("ci", "normal")),
        )
        _emit(rows_to_csv(run_sweep(spec)), out)
        return 0
    if args.command == "reproduce":
        figure = opt.get("figure", required=True)
        paths = run_reproduce(
            int(figure),
            out_dir=out if out is not None else ".",
            trials=int(opt.get("trials", DEFAULT_TRIALS)),
            horizon=float(opt.get("horizon", DEFAULT_HORIZON)),
            seed=int(opt.get("seed", DEFAULT_SEED)),
            workers=opt.get("workers"),
        )
        sys.stdout.write(f"{paths['csv']}\n{paths['manifest']}\n")
        return 0
    raise ValueError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, 0 on --help/--version
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (DomainError, PreconditionError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
