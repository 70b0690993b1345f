"""Command-line front end.

``todashape <partfun|limitshape|verify|sample|prepotential> --config cfg.json [--out path]``

Exit codes: 0 ok, 2 configuration error, 3 numeric overflow, 4 admissibility
violation, 5 solver non-convergence.
"""
from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from typing import Any, Callable

import click
import numpy as np

from .curve import InvalidCutError, NonConvergenceError, solve_curve
from .model import ModelParams, Theory, WeightOverflowError, partition_sum

EXIT_CONFIG = 2
EXIT_OVERFLOW = 3
EXIT_ADMISSIBILITY = 4
EXIT_NONCONVERGENCE = 5

VERIFY_TARGETS = ("rh", "gse", "lax", "prepotential")

DEFAULT_CUTOFFS = {"partition_sum": 12, "K": 0, "n_grid": 256, "n_quad": 128, "contour_nodes": 512}
DEFAULT_SAMPLER = {"xi": 1e4, "n_samples": 200, "seed": 0}
DEFAULT_TOLERANCES = {
    "rh_interior": 1e-8,
    "rh_jump": 1e-8,
    "rh_asymptotic": 1e-4,
    "rh_periodicity": 1e-10,
    "gse": 1e-10,
    "w_to_m": 1e-11,
    "lax": 1e-5,
    "density_vs_contour": 1e-6,
    "contour_vs_fd": 1e-4,
    "contour_radius": 1e-9,
    "contour_imag": 1e-10,
    "hessian": 1e-4,
    "limit_shape_sup": 0.05,
}
TOP_LEVEL_KEYS = {"theory", "lambda0", "R", "s", "t", "hbar", "cutoffs", "sampler", "tolerances"}


class ConfigError(ValueError):
    """The configuration file is malformed or violates a model invariant."""


@dataclass(frozen=True)
class RunConfig:
    theory: Theory
    lambda0: float = 1.0
    R: float = 1.0
    s: float = 0.0
    t: tuple[float, ...] = ()
    hbar: float = 1.0
    cutoffs: dict = field(default_factory=lambda: dict(DEFAULT_CUTOFFS))
    sampler: dict = field(default_factory=lambda: dict(DEFAULT_SAMPLER))
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    @property
    def couplings(self) -> tuple[float, ...]:
        """``t`` padded with zeros to the ``K`` cutoff."""
        K = self.cutoffs["K"]
        return tuple(self.t) + (0.0,) * max(0, K - len(self.t))


def _number(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{name} must be finite")
    return float(value)


def _integer(value: Any, name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _section(raw: Any, defaults: dict, name: str, check: Callable[[str, Any], Any]) -> dict:
    if raw is None:
        return dict(defaults)
    if not isinstance(raw, dict):
        raise ConfigError(f"{name} must be an object")
    unknown = set(raw) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in {name}: {sorted(unknown)}")
    out = dict(defaults)
    for key, value in raw.items():
        out[key] = check(f"{name}.{key}", value)
    return out


def parse_config(raw: Any) -> RunConfig:
    """Validate a decoded JSON object; every problem raises :class:`ConfigError`."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(raw) - TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "theory" not in raw:
        raise ConfigError("theory is required")
    theory_name = str(raw["theory"]).upper()
    if theory_name not in ("4D", "5D"):
        raise ConfigError(f"theory must be '4d' or '5d', got {raw['theory']!r}")
    theory = Theory(theory_name)
    lambda0 = _number(raw.get("lambda0", 1.0), "lambda0")
    R = _number(raw.get("R", 1.0), "R")
    s = _number(raw.get("s", 0.0), "s")
    hbar = _number(raw.get("hbar", 1.0), "hbar")
    t_raw = raw.get("t", [])
    if not isinstance(t_raw, list):
        raise ConfigError("t must be an array of numbers")
    t = tuple(_number(v, f"t[{i}]") for i, v in enumerate(t_raw))
    if lambda0 <= 0 or hbar <= 0:
        raise ConfigError("lambda0 and hbar must be positive")
    if theory is Theory.FIVE_D:
        if R <= 0:
            raise ConfigError("R must be positive")
        if R * lambda0 >= 1:
            raise ConfigError(f"5D requires R*lambda0 < 1 (so that 0 < Q < 1), got R*lambda0 = {R * lambda0:.17g}")

    def cutoff(name, v):
        return _integer(v, name, 1 if not name.endswith(("partition_sum", "K")) else 0)

    def sampler_value(name, v):
        if name.endswith("xi"):
            x = _number(v, name)
            if x <= 0:
                raise ConfigError(f"{name} must be positive")
            return x
        return _integer(v, name)

    def tolerance(name, v):
        x = _number(v, name)
        if x < 0:
            raise ConfigError(f"{name} must be nonnegative")
        return x

    cutoffs = _section(raw.get("cutoffs"), DEFAULT_CUTOFFS, "cutoffs", cutoff)
    if cutoffs["n_grid"] < 16:
        raise ConfigError("cutoffs.n_grid must be at least 16")
    if cutoffs["contour_nodes"] < 64:
        raise ConfigError("cutoffs.contour_nodes must be at least 64")
    if cutoffs["K"] and len(t) > cutoffs["K"]:
        raise ConfigError(f"t has {len(t)} entries but cutoffs.K = {cutoffs['K']}")
    sampler = _section(raw.get("sampler"), DEFAULT_SAMPLER, "sampler", sampler_value)
    tolerances = _section(raw.get("tolerances"), DEFAULT_TOLERANCES, "tolerances", tolerance)
    return RunConfig(theory, lambda0, R, s, t, hbar, cutoffs, sampler, tolerances)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(raw)


# ----------------------------------------------------------------------------
# output


def _plain(value: Any) -> Any:
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return value


def dumps(value: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits; NaN and infinities become null."""
    value = _plain(value)
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if value is None or isinstance(value, bool):
        return json.dumps(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return format(value, ".17g") if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{inner}{json.dumps(str(k), ensure_ascii=False)}: {dumps(v, indent, _level + 1)}"
                 for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner}{dumps(v, indent, _level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def write_atomic(path: str, text: str) -> None:
    """Write through a temporary file in the target directory and rename it into place."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".todashape-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


# ----------------------------------------------------------------------------
# commands


def run_partfun(cfg: RunConfig) -> dict:
    if cfg.s != int(cfg.s):
        raise ConfigError(f"partfun needs an integer charge s, got {cfg.s}")
    try:
        params = ModelParams(cfg.theory, cfg.hbar, cfg.lambda0, cfg.R, int(cfg.s), cfg.couplings)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    result = partition_sum(params, cfg.cutoffs["partition_sum"])
    return {"Z": result.Z, "last_shell": result.last_shell, "cutoff": result.cutoff}


def _curve(cfg: RunConfig):
    return solve_curve(cfg.theory, cfg.s, cfg.couplings, cfg.lambda0, cfg.R)


def run_limitshape(cfg: RunConfig) -> str:
    from .limitshape import density_profile

    return density_profile(_curve(cfg), cfg.cutoffs["n_grid"]).to_csv()


def _verify_rh(curve, tol: dict) -> tuple[dict, bool]:
    from .limitshape import verify_rh

    rep = verify_rh(curve)
    ok = rep.passes(tol["rh_interior"], tol["rh_jump"], tol["rh_asymptotic"], tol["rh_periodicity"])
    body = {
        "max_interior_residual": rep.max_interior_residual,
        "max_jump_residual": rep.max_jump_residual,
        "asymptotic_residuals": rep.asymptotic_residuals,
        "periodicity_residual": rep.periodicity_residual,
        "n_interior": rep.n_interior,
        "n_exterior": rep.n_exterior,
    }
    return body, ok


def _verify_gse(curve, tol: dict) -> tuple[dict, bool]:
    from .dtoda import verify_identification

    rep = verify_identification(curve)
    ok = (rep.eq1_residual <= tol["gse"] and rep.eq2_residual <= tol["gse"]
          and rep.m_vs_n_sqrt_p <= tol["w_to_m"] and rep.w_to_m_residual <= tol["w_to_m"])
    return rep.to_json(), ok


def _verify_lax(cfg: RunConfig, tol: dict) -> tuple[dict, bool]:
    from .dtoda import lax_flow_residual

    res = {f"k={k}": lax_flow_residual(k, cfg.s, cfg.couplings, cfg.lambda0, cfg.theory, cfg.R) for k in (1, 2)}
    return res, all(v <= tol["lax"] for v in res.values())


def _prepotential_reports(curve, cfg: RunConfig) -> dict:
    from .prepotential import default_contour, derivative_report, hessian_symmetry

    contour = default_contour(curve, cfg.cutoffs["contour_nodes"])
    ks = range(1, max(2, len(cfg.couplings)) + 1)
    reports = [derivative_report(k, curve, contour, cfg.cutoffs["n_quad"]).to_json() for k in ks]
    return {"reports": reports, "hessian_symmetry_1_2": hessian_symmetry(curve, 1, 2, contour=contour)}


def _prepotential_ok(body: dict, tol: dict) -> bool:
    ok = body["hessian_symmetry_1_2"] <= tol["hessian"]
    for rep in body["reports"]:
        ok = ok and all(rep["spreads"][key] <= tol[key] for key in
                        ("density_vs_contour", "contour_vs_fd", "contour_radius", "contour_imag"))
    return ok


def run_verify(cfg: RunConfig, targets: tuple[str, ...], beta_shift: float = 0.0) -> tuple[dict, bool]:
    if not targets:
        raise ConfigError("verify needs at least one target")
    bad = [t for t in targets if t not in VERIFY_TARGETS]
    if bad:
        raise ConfigError(f"unknown verify targets {bad}; choose from {list(VERIFY_TARGETS)}")
    curve = _curve(cfg)
    if beta_shift:
        curve = replace(curve, beta=curve.beta + beta_shift)
    tol = cfg.tolerances
    report: dict = {"curve": curve.to_json(), "results": {}}
    all_ok = True
    for target in dict.fromkeys(targets):
        if target == "rh":
            body, ok = _verify_rh(curve, tol)
        elif target == "gse":
            body, ok = _verify_gse(curve, tol)
        elif target == "lax":
            body, ok = _verify_lax(cfg, tol)
        else:
            body = _prepotential_reports(curve, cfg)
            ok = _prepotential_ok(body, tol)
        report["results"][target] = {"pass": ok, **body}
        all_ok = all_ok and ok
    report["pass"] = all_ok
    return report, all_ok


def run_sample(cfg: RunConfig) -> tuple[str, dict]:
    from .sampler import arcsine_comparison, batch_summary_csv, sample_batch

    if cfg.theory is not Theory.FOUR_D:
        raise ConfigError("sampling is available for the 4D theory only")
    if any(cfg.t):
        raise ConfigError("sampling needs t = 0")
    if cfg.s != int(cfg.s):
        raise ConfigError(f"sample needs an integer charge s, got {cfg.s}")
    sp = cfg.sampler
    batch = sample_batch(sp["xi"], sp["n_samples"], sp["seed"], cfg.lambda0)
    comparison = arcsine_comparison(batch, cfg.lambda0, int(cfg.s))
    summary = {
        "xi": sp["xi"],
        "n_samples": sp["n_samples"],
        "seed": sp["seed"],
        "hbar": batch.hbar,
        "batch_sup_dist": comparison.batch_sup_dist,
        "mean_sup_dist": comparison.mean_sup_dist,
        "mean_l2_dist": comparison.mean_l2_dist,
        "pass": comparison.batch_sup_dist <= cfg.tolerances["limit_shape_sup"],
    }
    return batch_summary_csv(batch, comparison), summary


def run_prepotential(cfg: RunConfig) -> dict:
    return _prepotential_reports(_curve(cfg), cfg)


# ----------------------------------------------------------------------------
# click wiring


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _guarded(action: Callable[[], None]) -> None:
    from .limitshape import AdmissibilityViolation

    try:
        action()
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))
    except (WeightOverflowError, OverflowError) as exc:
        _fail(EXIT_OVERFLOW, str(exc))
    except AdmissibilityViolation as exc:
        _fail(EXIT_ADMISSIBILITY, str(exc))
    except (NonConvergenceError, InvalidCutError) as exc:
        _fail(EXIT_NONCONVERGENCE, str(exc))


config_option = click.option("--config", "config_path", required=True, type=click.Path(dir_okay=False),
                             help="JSON run configuration.")
out_option = click.option("--out", "out", type=click.Path(dir_okay=False), default=None,
                          help="Output file; standard output when omitted.")


@click.group()
def main() -> None:
    """Limit shapes, curves and dispersionless Toda checks for random partitions."""


@main.command()
@config_option
@out_option
def partfun(config_path: str, out: str | None) -> None:
    """Truncated partition function as JSON."""
    _guarded(lambda: emit(dumps(run_partfun(load_config(config_path))) + "\n", out))


@main.command()
@config_option
@out_option
def limitshape(config_path: str, out: str | None) -> None:
    """Limit-shape density as CSV with columns u,rho."""
    _guarded(lambda: emit(run_limitshape(load_config(config_path)), out))


@main.command()
@config_option
@out_option
@click.option("--targets", default="rh,gse,lax,prepotential", show_default=True,
              help="Comma-separated subset of rh, gse, lax, prepotential.")
@click.option("--beta-shift", type=float, default=0.0, hidden=True,
              help="Shift the solved beta before checking (sensitivity probe).")
def verify(config_path: str, out: str | None, targets: str, beta_shift: float) -> None:
    """Residual report; exit 0 only if every residual is within tolerance."""
    passed = []

    def action():
        cfg = load_config(config_path)
        names = tuple(x.strip() for x in targets.split(",") if x.strip())
        report, ok = run_verify(cfg, names, beta_shift)
        emit(dumps(report) + "\n", out)
        passed.append(ok)

    _guarded(action)
    if not passed[0]:
        sys.exit(1)


@main.command()
@config_option
@out_option
def sample(config_path: str, out: str | None) -> None:
    """Plancherel sample batch: per-sample CSV and a JSON summary on standard error."""

    def action():
        csv_text, summary = run_sample(load_config(config_path))
        emit(csv_text, out)
        click.echo(dumps(summary), err=True)

    _guarded(action)


@main.command()
@config_option
@out_option
def prepotential(config_path: str, out: str | None) -> None:
    """Three-route coupling derivatives of the critical energy as JSON."""
    _guarded(lambda: emit(dumps(run_prepotential(load_config(config_path))) + "\n", out))


if __name__ == "__main__":  # pragma: no cover
    main()
