"""Command-line driver: ``netsynth build | verify | study | demo``.

Configs are TOML, validated before any computation. Exit codes: 0 success,
1 mathematical failure, 2 usage or configuration error. Every file written
embeds the sha256 of the effective config and the tool version; nothing
time-dependent is written, so identical configs give identical bytes.
"""

from __future__ import annotations

import ast
import csv
import hashlib
import io
import json
import math
import sys
from pathlib import Path
from typing import Literal

import click
import numpy as np
import tomli
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError, model_validator

from . import __version__
from .activations import BUILTINS, ActivationSpec
from .constructor import (ActivationError, ConstructionReport, ConstructionRequest, SingularDirectionsError,
                          barycentric_diagnostic, construct)
from .grids import Box, GridSpec
from .intervals import ScaleSchedule
from .minimax import ConvergenceError, DegreeCapError, approx_growth_diagnostic, schedule_walk
from .monomials import MultiPoly
from .network import FormatError, forward, from_json, to_json
from .verify import density_trial, random_feature_study, sup_error, write_trials_csv

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    pass


# ------------------------------------------------------------------------------ configs

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class TargetConfig(_Strict):
    """One output coordinate: monomial terms {"e1,e2": coeff} or an expression in x1..xn."""

    terms: dict[str, float] | None = None
    expr: str | None = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.terms is None) == (self.expr is None):
            raise ValueError("give exactly one of 'terms' or 'expr'")
        return self


class BuildConfig(_Strict):
    pipeline: Literal["poly", "continuous", "random-features"]
    eps: PositiveFloat
    domain: list[tuple[float, float]] = Field(min_length=1)
    anchor: list[float] | None = None
    sigma: str = "tanh"
    sigma_table: list[tuple[float, float]] | None = None
    targets: list[TargetConfig] = Field(min_length=1)
    degree: int | None = Field(default=None, ge=2)
    small_output_weights: PositiveFloat | None = None
    large_input_norms: PositiveFloat | None = None
    random_radius: PositiveFloat = 1.0
    schedule: Literal["auto", "expanding", "contracting"] = "auto"
    max_k: int = Field(default=40, ge=0)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    grid_res: int | None = Field(default=None, ge=2)
    tolerance: PositiveFloat | None = None

    @model_validator(mode="after")
    def _consistent(self):
        if self.sigma == "table":
            if not self.sigma_table or len(self.sigma_table) < 2:
                raise ValueError("sigma = 'table' needs sigma_table with at least 2 rows")
        elif self.sigma not in BUILTINS:
            raise ValueError(f"unknown sigma {self.sigma!r}; choose from {sorted(BUILTINS)} or 'table'")
        elif self.sigma_table is not None:
            raise ValueError("sigma_table is only allowed with sigma = 'table'")
        if any(lo > hi for lo, hi in self.domain):
            raise ValueError("domain needs lo <= hi on every axis")
        if self.anchor is not None and len(self.anchor) != len(self.domain):
            raise ValueError("anchor dimension does not match the domain")
        if self.pipeline == "poly" and any(t.terms is None for t in self.targets):
            raise ValueError("the poly pipeline needs every target given as 'terms'")
        n = len(self.domain)
        for t in self.targets:
            for key in t.terms or {}:
                _parse_exponent(key, n)
        if self.pipeline == "random-features" and (self.small_output_weights or self.large_input_norms):
            raise ValueError("weight constraints are not available with the random-features pipeline")
        return self


class StudyConfig(_Strict):
    kind: Literal["density", "random_features", "barycentric", "alternation", "growth"]
    seeds: list[int] = Field(default=[0], min_length=1)
    n: int | None = Field(default=None, ge=1)
    d: int | None = Field(default=None, ge=1)
    draws: int = Field(default=1000, ge=1)
    tol: PositiveFloat = 1e-10
    sigma: str = "tanh"
    schedule: Literal["auto", "expanding", "contracting"] = "auto"
    k_min: int = 0
    k_max: int = 8
    gamma: PositiveFloat = 0.5
    build: BuildConfig | None = None

    @model_validator(mode="after")
    def _needs(self):
        if self.k_max < self.k_min:
            raise ValueError("k_max must be at least k_min")
        if self.kind == "density" and (self.n is None or self.d is None):
            raise ValueError("density study needs n and d")
        if self.kind in ("alternation", "growth"):
            if self.d is None:
                raise ValueError(f"{self.kind} study needs d")
            if self.sigma not in BUILTINS:
                raise ValueError(f"unknown sigma {self.sigma!r}")
        if self.kind == "random_features":
            if self.build is None or self.build.pipeline != "random-features":
                raise ValueError("random_features study needs a [build] table with pipeline = 'random-features'")
            if len(self.seeds) < 30:
                raise ValueError("random_features study needs at least 30 seeds")
        if self.kind == "barycentric" and (self.build is None or self.build.pipeline != "poly"):
            raise ValueError("barycentric study needs a [build] table with pipeline = 'poly'")
        return self


def _parse_exponent(key: str, n: int) -> tuple[int, ...]:
    try:
        alpha = tuple(int(v) for v in key.split(","))
    except ValueError:
        raise ValueError(f"exponent key {key!r} must be comma-separated integers") from None
    if len(alpha) != n or min(alpha) < 0:
        raise ValueError(f"exponent key {key!r} must have {n} non-negative entries")
    return alpha


def load_config(path, model, overrides: dict | None = None):
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"config is not valid TOML: {exc}") from exc
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    try:
        return model.model_validate(raw)
    except ValidationError as exc:
        lines = [f"  {'.'.join(map(str, e['loc'])) or '<root>'}: {e['msg']}" for e in exc.errors()]
        raise ConfigError("invalid config:\n" + "\n".join(lines)) from exc


def config_hash(cfg: BaseModel) -> str:
    canon = json.dumps(cfg.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ------------------------------------------------------------------------ expressions

_SAFE_FUNCS = {name: getattr(np, name) for name in
               ("sin", "cos", "tan", "exp", "log", "sqrt", "abs", "tanh", "sinh", "cosh", "arctan",
                "maximum", "minimum", "sign", "floor", "ceil")}
_SAFE_CONSTS = {"pi": math.pi, "e": math.e}
_ALLOWED = (ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Load, ast.Constant,
            ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd, ast.Mod)


def compile_expression(expr: str, n: int):
    """Vectorised f(x) for x of shape (P, n), using only arithmetic, numpy maths and x1..xn."""
    try:
        tree = ast.parse(expr, mode="eval")
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse expression {expr!r}: {exc.msg}") from exc
    names = {f"x{i + 1}" for i in range(n)}
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED):
            raise ConfigError(f"expression {expr!r} uses a disallowed construct ({type(node).__name__})")
        if isinstance(node, ast.Name) and node.id not in names | _SAFE_FUNCS.keys() | _SAFE_CONSTS.keys():
            raise ConfigError(f"expression {expr!r} uses unknown name {node.id!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _SAFE_FUNCS):
            raise ConfigError(f"expression {expr!r} calls something other than a numpy function")
    code = compile(tree, "<target>", "eval")

    def f(x):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        env = {"__builtins__": {}, **_SAFE_FUNCS, **_SAFE_CONSTS}
        env.update({f"x{i + 1}": x[:, i] for i in range(n)})
        return np.broadcast_to(np.asarray(eval(code, env), dtype=float), (len(x),)).copy()

    return f


# -------------------------------------------------------------------------- requests

def sigma_from(cfg: BuildConfig) -> ActivationSpec:
    if cfg.sigma == "table":
        ys, vs = zip(*cfg.sigma_table)
        try:
            return ActivationSpec.from_table(np.array(ys), np.array(vs))
        except ValueError as exc:
            raise ConfigError(f"sigma_table: {exc}") from exc
    return ActivationSpec(cfg.sigma)


def box_from(cfg: BuildConfig) -> Box:
    lo, hi = zip(*cfg.domain)
    return Box(lo, hi, cfg.anchor)


def target_from(cfg: BuildConfig):
    """List of MultiPoly when every target is polynomial, else one vector-valued callable."""
    n = len(cfg.domain)
    if all(t.terms is not None for t in cfg.targets):
        return [MultiPoly.from_terms(n, {_parse_exponent(k, n): v for k, v in t.terms.items()})
                for t in cfg.targets]
    fns = []
    for t in cfg.targets:
        if t.expr is not None:
            fns.append(compile_expression(t.expr, n))
        else:
            p = MultiPoly.from_terms(n, {_parse_exponent(k, n): v for k, v in t.terms.items()})
            fns.append(lambda x, p=p: np.asarray(p(np.atleast_2d(x)), dtype=float).reshape(-1))
    return lambda x: np.column_stack([g(x) for g in fns])


def request_from(cfg: BuildConfig) -> ConstructionRequest:
    target = target_from(cfg)
    if cfg.pipeline == "continuous" and not callable(target):
        polys = target
        target = lambda x: np.column_stack([np.asarray(p(np.atleast_2d(x))).reshape(-1) for p in polys])  # noqa: E731
    frozen = (cfg.random_radius, cfg.seed) if cfg.pipeline == "random-features" else None
    try:
        return ConstructionRequest(
            target=target, domain=box_from(cfg), sigma=sigma_from(cfg), eps=cfg.eps, degree=cfg.degree,
            small_output_weights=cfg.small_output_weights, large_input_norms=cfg.large_input_norms,
            frozen_random_first_layer=frozen, schedule=cfg.schedule, max_k=cfg.max_k, seed=cfg.seed,
            verify_resolution=cfg.grid_res)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------------------- output

def _header(digest: str) -> list[str]:
    return [f"config_sha256={digest}", f"version={__version__}"]


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (list, tuple, np.ndarray)):
        return ";".join(_fmt(x) for x in np.ravel(np.asarray(v, dtype=object)))
    return "" if v is None else str(v)


def write_csv(path: Path, header_lines, columns, rows) -> None:
    buf = io.StringIO(newline="")
    for line in header_lines:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.write_text(buf.getvalue())


REPORT_FIELDS = ("status", "message", "units", "active_units", "degree", "eps", "certified_error", "grid_error",
                 "slack", "verification_resolution", "scale_index_used", "scale", "interval", "crossing",
                 "alternation_ratio", "minimax_error", "direction_radius", "direction_source",
                 "vandermonde_condition", "solve_condition", "solve_residual", "coefficient_norm",
                 "coefficient_sum", "zero_sum_ok", "error_bound", "bound_ok", "jittered", "schedule", "seed")


def report_rows(rep: ConstructionReport) -> list[tuple[str, object]]:
    rows = [(k, getattr(rep, k)) for k in REPORT_FIELDS]
    rows += [(f"audit.{k}", v) for k, v in rep.constraint_audit.items()]
    if rep.d_eps is not None:
        rows.append(("d_eps", rep.d_eps.d))
        rows += [(f"d_eps.omega[{d}]", w) for d, _, w in rep.d_eps.table]
    if rep.surrogate:
        rows += [(f"surrogate.{k}", v) for k, v in rep.surrogate.items()]
    return rows


def _out_dir(out) -> Path:
    p = Path(out)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _fail_usage(msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(EXIT_USAGE)


# ---------------------------------------------------------------------------- commands

_common = [
    click.option("--config", "config_path", type=click.Path(dir_okay=False), help="TOML config file."),
    click.option("--seed", type=click.IntRange(0, 2 ** 64 - 1), default=None, help="Override the seed."),
    click.option("--out", default="out", show_default=True, type=click.Path(file_okay=False),
                 help="Output directory."),
    click.option("--grid-res", type=click.IntRange(min=2), default=None, help="Verification points per axis."),
    click.option("--max-k", type=click.IntRange(min=0), default=None, help="Scale-escalation cap."),
]


def common_options(fn):
    for opt in reversed(_common):
        fn = opt(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="netsynth")
def main():
    """Build and check single-hidden-layer networks with certified uniform error."""


@main.command()
@common_options
def build(config_path, seed, out, grid_res, max_k):
    """Construct a network from a build config."""
    if not config_path:
        _fail_usage("--config is required")
    try:
        cfg = load_config(config_path, BuildConfig, {"seed": seed, "grid_res": grid_res, "max_k": max_k})
        req = request_from(cfg)
    except ConfigError as exc:
        _fail_usage(str(exc))
    digest = config_hash(cfg)
    outdir = _out_dir(out)
    try:
        rep = construct(req)
    except ActivationError as exc:
        click.echo(f"failure: {exc}")
        sys.exit(EXIT_FAIL)
    except SingularDirectionsError as exc:
        click.echo(f"failure: {exc}")
        if exc.report is None:
            sys.exit(EXIT_FAIL)
        rep = exc.report
    except (DegreeCapError, ConvergenceError) as exc:
        click.echo(f"failure: {exc}")
        sys.exit(EXIT_FAIL)
    meta = {"config_sha256": digest, "version": __version__, "status": rep.status, "eps": cfg.eps,
            "verification_resolution": list(rep.verification_resolution),
            "grid_error": [float(v) for v in rep.grid_error]}
    if rep.weights is not None:
        (outdir / "network.json").write_text(to_json(rep.weights, req.sigma, meta) + "\n")
    write_csv(outdir / "report.csv", _header(digest), ("field", "value"), report_rows(rep))
    summary = rep.summary() + f"\nconfig sha256: {digest}\nversion: {__version__}\n"
    (outdir / "summary.txt").write_text(summary)
    click.echo(summary, nl=False)
    sys.exit(EXIT_OK if rep.success else EXIT_FAIL)


@main.command()
@click.argument("network", type=click.Path(dir_okay=False))
@common_options
def verify(network, config_path, seed, out, grid_res, max_k):
    """Recompute the uniform error of NETWORK against the target in --config."""
    if not config_path:
        _fail_usage("--config is required")
    try:
        cfg = load_config(config_path, BuildConfig, {"grid_res": grid_res})
        target = target_from(cfg)
        box = box_from(cfg)
        text = Path(network).read_text()
        W, sigma, meta = from_json(text)
    except ConfigError as exc:
        _fail_usage(str(exc))
    except FormatError as exc:
        _fail_usage(str(exc))
    except OSError as exc:
        _fail_usage(f"cannot read network: {exc}")
    if sigma is None:
        sigma = sigma_from(cfg)
    if W.n != box.n:
        _fail_usage(f"network input dimension {W.n} does not match the domain dimension {box.n}")
    f = target if callable(target) else (
        lambda x: np.column_stack([np.asarray(p(np.atleast_2d(x))).reshape(-1) for p in target]))
    if cfg.grid_res is not None:
        res = (cfg.grid_res,) * box.n
    elif meta.get("verification_resolution"):
        res = tuple(int(r) for r in meta["verification_resolution"])
    else:
        res = (201,) * box.n
    if box.is_point:
        res = (1,) * box.n
    grid = GridSpec(box, res) if not box.is_point else None
    g = lambda x: forward(W, sigma, np.atleast_2d(x))  # noqa: E731
    if grid is None:
        x = np.array([box.anchor])
        per = np.abs(np.asarray(f(x), float).reshape(1, -1) - g(x))[0]
    else:
        per = np.array([sup_error(lambda x, t=t: np.asarray(f(x), float).reshape(len(x), -1)[:, t],
                                  lambda x, t=t: g(x)[:, t], grid) for t in range(W.m)])
    tol = cfg.tolerance or cfg.eps
    digest = config_hash(cfg)
    outdir = _out_dir(out)
    rows = [(t, float(e), tol, bool(e < tol)) for t, e in enumerate(per)]
    write_csv(outdir / "verify.csv", _header(digest) + [f"network_sha256={hashlib.sha256(text.encode()).hexdigest()}",
                                                       f"resolution={'x'.join(map(str, res))}"],
              ("output", "sup_error", "tolerance", "passes"), rows)
    ok = all(r[3] for r in rows)
    click.echo(f"{'verified' if ok else 'NOT verified'}: sup error "
               + ", ".join(f"{e:.6e}" for e in per) + f" on {'x'.join(map(str, res))} grid (tolerance {tol:g})")
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


@main.command()
@common_options
def study(config_path, seed, out, grid_res, max_k):
    """Run a trial study or diagnostic sweep and write one CSV table."""
    if not config_path:
        _fail_usage("--config is required")
    try:
        cfg = load_config(config_path, StudyConfig)
        if seed is not None:
            cfg = cfg.model_copy(update={"seeds": list(range(seed, seed + len(cfg.seeds)))})
        if cfg.build is not None and (grid_res is not None or max_k is not None):
            upd = {k: v for k, v in (("grid_res", grid_res), ("max_k", max_k)) if v is not None}
            cfg = cfg.model_copy(update={"build": cfg.build.model_copy(update=upd)})
        cfg = StudyConfig.model_validate(cfg.model_dump())
    except (ConfigError, ValidationError) as exc:
        _fail_usage(str(exc))
    digest = config_hash(cfg)
    outdir = _out_dir(out)
    header = _header(digest) + [f"study={cfg.kind}"]
    path = outdir / f"study_{cfg.kind}.csv"
    try:
        ok = _STUDIES[cfg.kind](cfg, path, header)
    except ConfigError as exc:
        _fail_usage(str(exc))
    click.echo(f"wrote {path}")
    sys.exit(EXIT_OK if ok else EXIT_FAIL)


def _study_density(cfg: StudyConfig, path, header) -> bool:
    rows = []
    for s in cfg.seeds:
        t = density_trial(cfg.n, cfg.d, cfg.draws, s, tol=cfg.tol)
        rows.append((s, cfg.n, cfg.d, t.trials, t.successes, t.singular, t.fraction))
    write_csv(path, header, ("seed", "n", "d", "draws", "successes", "singular", "fraction"), rows)
    for r in rows:
        click.echo(f"seed {r[0]}: {r[4]}/{r[3]} nonsingular")
    return True


def _study_random_features(cfg: StudyConfig, path, header) -> bool:
    summary = random_feature_study(request_from(cfg.build), cfg.seeds)
    write_trials_csv(summary, path, eps=cfg.build.eps, header_lines=header)
    click.echo(f"{summary.successes}/{summary.trials} successes, {summary.singular} singular draws")
    return True


def _study_barycentric(cfg: StudyConfig, path, header) -> bool:
    try:
        rep = construct(request_from(cfg.build))
    except (ActivationError, DegreeCapError) as exc:
        click.echo(f"failure: {exc}")
        return False
    if rep.weights is None or "unit_directions" not in rep.context:
        click.echo(f"failure: base construction did not succeed ({rep.message})")
        return False
    rows = barycentric_diagnostic(rep, range(cfg.k_min, cfg.k_max + 1))
    cols = ("k", "spread", "spread_zero", "gap", "min_height", "bound", "bound_ok", "note")
    write_csv(path, header, cols, [tuple(getattr(r, c) for c in cols) for r in rows])
    for r in rows:
        click.echo(f"k={r.k}: spread {r.spread:.4g}, gap {r.gap:.4g}, bound {r.bound:.4g}")
    return True


def _schedule_for(cfg: StudyConfig) -> ScaleSchedule:
    return ScaleSchedule("contracting" if cfg.schedule in ("auto", "contracting") else "expanding")


def _study_alternation(cfg: StudyConfig, path, header) -> bool:
    sigma = ActivationSpec(cfg.sigma)
    rows = schedule_walk(sigma, _schedule_for(cfg), cfg.d, range(cfg.k_min, cfg.k_max + 1))
    write_csv(path, header, ("k", "lo", "hi", "error", "ratio", "crossing", "passes"),
              [(r.k, r.interval.lo, r.interval.hi, r.error, r.ratio, r.crossing, r.passes) for r in rows])
    for r in rows:
        click.echo(f"k={r.k}: E={r.error:.4g}, ratio {r.ratio:.4f}")
    return True


def _study_growth(cfg: StudyConfig, path, header) -> bool:
    sigma = ActivationSpec(cfg.sigma)
    rows = approx_growth_diagnostic(sigma, _schedule_for(cfg), cfg.d, cfg.gamma, range(cfg.k_min, cfg.k_max + 1))
    write_csv(path, header, ("k", "error", "normalised_error"), rows)
    for k, e, r in rows:
        click.echo(f"k={k}: E={e:.4g}, E/lambda^(1+gamma)={r:.4g}")
    return True


_STUDIES = {"density": _study_density, "random_features": _study_random_features,
            "barycentric": _study_barycentric, "alternation": _study_alternation, "growth": _study_growth}


@main.command()
@click.option("--out", default="out", show_default=True, type=click.Path(file_okay=False))
@click.option("--criteria", default=None, help="Comma-separated criterion numbers (default: all).")
def demo(out, criteria):
    """Run the acceptance scenarios and print one line per criterion."""
    from .scenarios import CRITERIA, run_all

    try:
        nums = sorted({int(v) for v in criteria.split(",")}) if criteria else None
    except ValueError:
        _fail_usage("--criteria must be comma-separated integers")
    if nums and not set(nums) <= CRITERIA.keys():
        _fail_usage(f"unknown criteria {sorted(set(nums) - CRITERIA.keys())}")
    results = run_all(nums)
    for r in results:
        click.echo(r.line())
    write_csv(_out_dir(out) / "demo.csv", [f"version={__version__}"], ("criterion", "title", "passed", "detail"),
              [(r.number, r.title, r.passed, r.detail) for r in results])
    sys.exit(EXIT_OK if all(r.passed for r in results) else EXIT_FAIL)


if __name__ == "__main__":  # pragma: no cover
    main()
