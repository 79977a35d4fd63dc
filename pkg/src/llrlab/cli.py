"""Command-line front end.

    llr-lab <command> [--config FILE] [--seed N] [--out DIR] [--no-svg]
            [--key value]...

Commands: density, roc, normal-deviate, learning-curve, variance-study,
simulate.  Any config key can be overridden with --key value (dotted
section prefixes like problem.mu1 are accepted).

Config files are line based: `key = value`, `#` comments, optional
`[problem]` / `[experiment]` / `[output]` section headers, matrices as
nested bracketed rows `[[1,.2],[.2,1]]`, lists comma separated.

Exit codes: 0 success, 2 configuration error, 3 numerical error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import ast
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import llrdist, mcharness, rocauc, svgplot
from .bayesllr import CLASS1, CLASS2, TwoClassProblem, llr_scores
from .csvio import csv_text, fmt17
from .errors import ConfigError, LlrLabError
from .gaussmodel import GaussianParams, SeededRng, mvn_sample
from .smallmat import std_normal_quantile_array

COMMANDS = ("density", "roc", "normal-deviate", "learning-curve", "variance-study", "simulate")

DEFAULT_SEED = 2
SEED_ENV_VAR = "LLR_LAB_SEED"

_SECTIONS = ("problem", "experiment", "output")

#: key -> (section, parser, default)
_SCHEMA = {
    "command": ("output", "str", None),
    "mu1": ("problem", "vector", (2.0, 2.0)),
    "sigma1": ("problem", "matrix", ((1.0, 0.2), (0.2, 1.0))),
    "mu2": ("problem", "vector", (1.0, 1.0)),
    "sigma2": ("problem", "matrix", ((0.3, 0.1), (0.1, 0.3))),
    "prior1": ("problem", "float", 0.5),
    "prior2": ("problem", "float", 0.5),
    "costs": ("problem", "matrix", ((0.0, 1.0), (1.0, 0.0))),
    "dims": ("experiment", "int_list", (3, 7, 11)),
    "train_sizes": ("experiment", "int_list", (20, 50, 100, 500, 2000)),
    "n_trials": ("experiment", "int", 100),
    "test_size": ("experiment", "int", 1000),
    "delta_sq": ("experiment", "float", 0.8),
    "base_seed": ("experiment", "int", DEFAULT_SEED),
    "sim_size": ("experiment", "int", 10000),
    "h_points": ("experiment", "int", 801),
    "out_dir": ("output", "str", "."),
    "emit_svg": ("output", "bool", True),
    "emit_csv": ("output", "bool", True),
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved run description."""

    command: str
    problem: TwoClassProblem
    experiment: mcharness.ExperimentConfig
    sim_size: int
    h_points: int
    out_dir: Path
    emit_svg: bool
    emit_csv: bool
    explicit: frozenset


def _parse_value(key: str, kind: str, raw: str, line: int | None):
    raw = raw.strip()
    try:
        if kind == "str":
            return raw
        if kind == "bool":
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(f"expected a boolean, got {raw!r}")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "int_list":
            parts = raw.strip("[]").split(",")
            return tuple(int(p.strip()) for p in parts if p.strip())
        if kind == "vector":
            parts = raw.strip("[]").split(",")
            return tuple(float(p.strip()) for p in parts if p.strip())
        if kind == "matrix":
            value = ast.literal_eval(raw)
            arr = np.asarray(value, dtype=float)
            if arr.ndim != 2:
                raise ValueError("expected nested bracketed rows like [[1,.2],[.2,1]]")
            return tuple(map(tuple, arr.tolist()))
    except ConfigError:
        raise
    except (ValueError, SyntaxError, TypeError) as err:
        raise ConfigError(f"could not parse {key} = {raw!r}: {err}", line=line) from err
    raise ConfigError(f"unhandled value kind {kind!r} for key {key}", line=line)


def _canonical_key(key: str, line: int | None) -> str:
    key = key.strip()
    section = None
    if "." in key:
        section, _, bare = key.partition(".")
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section {section!r} in key {key!r}", line=line)
        key = bare.strip()
    if key not in _SCHEMA:
        raise ConfigError(f"unknown key {key!r}", line=line)
    if section is not None and _SCHEMA[key][0] != section:
        raise ConfigError(f"key {key!r} belongs to [{_SCHEMA[key][0]}], not [{section}]", line=line)
    return key


def parse_config(text: str, overrides=()) -> RunConfig:
    """Build a RunConfig from file text plus (key, value) override pairs.

    Overrides win over file values; anything not mentioned falls back to the
    documented defaults (counter-example problem parameters, delta_sq = 0.8,
    100 trials, 1000 testers per class).
    """
    values = {}
    lines_of = {}
    section = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1].strip()
            if section not in _SECTIONS:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, _, raw_value = line.partition("=")
        key = _canonical_key(key, lineno)
        kind = _SCHEMA[key][1]
        values[key] = _parse_value(key, kind, raw_value, lineno)
        lines_of[key] = lineno

    for key, raw_value in overrides:
        key = _canonical_key(key, None)
        values[key] = _parse_value(key, _SCHEMA[key][1], str(raw_value), None)
        lines_of.pop(key, None)

    explicit = frozenset(values)
    for key, (_, _, default) in _SCHEMA.items():
        values.setdefault(key, default)

    command = values["command"]
    if command is None:
        raise ConfigError("no command given")
    if command not in COMMANDS:
        raise ConfigError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")

    def _build(factory, keys):
        try:
            return factory()
        except (LlrLabError, ValueError) as err:
            where = [f"{k} (line {lines_of[k]})" for k in keys if k in lines_of]
            suffix = f" [from {', '.join(where)}]" if where else ""
            raise ConfigError(f"{err}{suffix}") from err

    problem = _build(
        lambda: TwoClassProblem(
            class1=GaussianParams(np.array(values["mu1"]), np.array(values["sigma1"])),
            class2=GaussianParams(np.array(values["mu2"]), np.array(values["sigma2"])),
            prior1=values["prior1"],
            prior2=values["prior2"],
            costs=values["costs"],
        ),
        ("mu1", "sigma1", "mu2", "sigma2", "prior1", "prior2", "costs"),
    )

    dims = values["dims"]
    if command == "variance-study" and "dims" not in explicit:
        dims = (11,)
    experiment = _build(
        lambda: mcharness.ExperimentConfig(
            dims=dims,
            train_sizes=values["train_sizes"],
            n_trials=values["n_trials"],
            test_size=values["test_size"],
            target_delta_sq=values["delta_sq"],
            base_seed=values["base_seed"],
        ),
        ("dims", "train_sizes", "n_trials", "test_size", "delta_sq", "base_seed"),
    )

    if int(values["sim_size"]) < 1 or int(values["h_points"]) < 8:
        raise ConfigError("sim_size must be >= 1 and h_points >= 8")

    return RunConfig(
        command=command,
        problem=problem,
        experiment=experiment,
        sim_size=int(values["sim_size"]),
        h_points=int(values["h_points"]),
        out_dir=Path(values["out_dir"]),
        emit_svg=bool(values["emit_svg"]),
        emit_csv=bool(values["emit_csv"]),
        explicit=explicit,
    )


# ---------------------------------------------------------------------------
# Command implementations (each returns {filename: text})
# ---------------------------------------------------------------------------


def _simulated_scores(config: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    rng = SeededRng(config.experiment.base_seed)
    x1 = mvn_sample(config.problem.class1, config.sim_size, rng.derive(CLASS1))
    x2 = mvn_sample(config.problem.class2, config.sim_size, rng.derive(CLASS2))
    return llr_scores(x1, config.problem), llr_scores(x2, config.problem)


def _cmd_density(config: RunConfig) -> dict:
    s1, s2 = _simulated_scores(config)
    grid_h = llrdist.default_h_grid(config.problem, n_points=config.h_points)
    lo_needed = float(min(s1.min(), s2.min()))
    hi_needed = float(max(s1.max(), s2.max()))
    if lo_needed <= grid_h[0]:
        grid_h = np.concatenate([[lo_needed - 1e-9], grid_h])
    if hi_needed >= grid_h[-1]:
        grid_h = np.concatenate([grid_h, [hi_needed + 1e-9]])
    g1 = llrdist.marginal_density(grid_h, CLASS1, config.problem)
    g2 = llrdist.marginal_density(grid_h, CLASS2, config.problem)
    out = {}
    if config.emit_csv:
        out["density_w1.csv"] = g1.to_csv()
        out["density_w2.csv"] = g2.to_csv()
    if config.emit_svg:
        series = []
        for grid, scores, name in ((g1, s1, "analytic f(h|1)"), (g2, s2, "analytic f(h|2)")):
            series.append(svgplot.Series(name=name, x=tuple(grid.h_values), y=tuple(grid.density)))
            _, hist = llrdist.histogram_vs_analytic(scores, grid)
            series.append(
                svgplot.Series(
                    name=name.replace("analytic", "simulated"),
                    x=tuple(hist.bin_edges),
                    y=tuple(hist.densities) + (0.0,),
                    step=True,
                )
            )
        spec = svgplot.PlotSpec(
            kind="density-overlay",
            title="Score densities: analytic vs simulated",
            x_label="score h (nats)",
            y_label="density",
            series=tuple(series),
        )
        out["density.svg"] = svgplot.render_svg(spec)
    return out


def _cmd_roc(config: RunConfig) -> dict:
    s1, s2 = _simulated_scores(config)
    curve = rocauc.empirical_roc(rocauc.ScoreSet(s1, s2))
    out = {}
    if config.emit_csv:
        out["roc.csv"] = curve.to_csv()
    if config.emit_svg:
        spec = svgplot.PlotSpec(
            kind="roc",
            title=f"Empirical ROC (AUC = {rocauc.trapezoid_auc(curve):.4f})",
            x_label="false positive fraction",
            y_label="true positive fraction",
            series=(
                svgplot.Series(name="ROC", x=tuple(curve.fpf), y=tuple(curve.tpf)),
                svgplot.Series(name="chance", x=(0.0, 1.0), y=(0.0, 1.0)),
            ),
        )
        out["roc.svg"] = svgplot.render_svg(spec)
    return out


def _cmd_normal_deviate(config: RunConfig) -> dict:
    s1, s2 = _simulated_scores(config)
    curve = rocauc.empirical_roc(rocauc.ScoreSet(s1, s2))
    fit = rocauc.normal_deviate_fit(curve)
    mask = (curve.fpf > 0) & (curve.fpf < 1) & (curve.tpf > 0) & (curve.tpf < 1)
    zx = std_normal_quantile_array(curve.fpf[mask])
    zy = std_normal_quantile_array(curve.tpf[mask])
    out = {}
    if config.emit_csv:
        out["deviate_points.csv"] = csv_text(
            ("z_fpf", "z_tpf"), [(fmt17(a), fmt17(b)) for a, b in zip(zx, zy)]
        )
        out["binormal_fit.csv"] = csv_text(
            ("a", "b", "residual"), [(fmt17(fit.a), fmt17(fit.b), fmt17(fit.residual))]
        )
    if config.emit_svg:
        line_y = (fit.a + fit.b * zx[0], fit.a + fit.b * zx[-1])
        spec = svgplot.PlotSpec(
            kind="deviate-line",
            title=f"Normal-deviate plot (a={fit.a:.3f}, b={fit.b:.3f}, rms={fit.residual:.4f})",
            x_label="normal deviate of FPF",
            y_label="normal deviate of TPF",
            series=(
                svgplot.Series(name="deviate points", x=tuple(zx), y=tuple(zy)),
                svgplot.Series(name="least-squares line", x=(zx[0], zx[-1]), y=line_y),
            ),
        )
        out["deviate.svg"] = svgplot.render_svg(spec)
    return out


def _curve_files(summary: mcharness.CurveSummary, config: RunConfig, stem: str, variance: bool) -> dict:
    out = {}
    if config.emit_csv:
        out[f"{stem}.csv"] = summary.to_csv()
    if config.emit_svg:
        series = []
        if variance:
            p = config.experiment.dims[0]
            rows = [r for r in summary.rows if r.p == p]
            series.append(
                svgplot.Series(
                    name=f"var true AUC, p={p}",
                    x=tuple(float(r.n) for r in rows),
                    y=tuple(r.var_auc_true for r in rows),
                )
            )
            title = "AUC variance vs training size"
            x_label, y_label = "training size per class", "variance of true AUC"
        else:
            for p in config.experiment.dims:
                rows = [r for r in summary.rows if r.p == p]
                xs = tuple(1.0 / r.n for r in rows)
                series.append(
                    svgplot.Series(
                        name=f"ts p={p}", x=xs, y=tuple(r.mean_auc_true for r in rows)
                    )
                )
                series.append(
                    svgplot.Series(
                        name=f"tr p={p}", x=xs, y=tuple(r.mean_auc_apparent for r in rows)
                    )
                )
            title = "Mean AUC vs 1/n"
            x_label, y_label = "1 / training size", "mean AUC"
        spec = svgplot.PlotSpec(
            kind="variance" if variance else "learning-curve",
            title=title,
            x_label=x_label,
            y_label=y_label,
            series=tuple(series),
        )
        out[f"{stem}.svg"] = svgplot.render_svg(spec)
    return out


def _cmd_learning_curve(config: RunConfig) -> dict:
    summary = mcharness.learning_curve(config.experiment)
    return _curve_files(summary, config, "learning_curve", variance=False)


def _cmd_variance_study(config: RunConfig) -> dict:
    summary = mcharness.variance_study(config.experiment)
    return _curve_files(summary, config, "variance_study", variance=True)


def _cmd_simulate(config: RunConfig) -> dict:
    s1, s2 = _simulated_scores(config)
    rows = [("1", fmt17(v)) for v in s1] + [("2", fmt17(v)) for v in s2]
    return {"scores.csv": csv_text(("label", "score"), rows)}


_RUNNERS = {
    "density": _cmd_density,
    "roc": _cmd_roc,
    "normal-deviate": _cmd_normal_deviate,
    "learning-curve": _cmd_learning_curve,
    "variance-study": _cmd_variance_study,
    "simulate": _cmd_simulate,
}


def run_command(config: RunConfig) -> list[Path]:
    """Execute the configured command and write its output files.

    Files are materialized only after the command finishes; if any write
    fails, already-written files from this run are removed.
    """
    files = _RUNNERS[config.command](config)
    config.out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    try:
        for name, text in files.items():
            path = config.out_dir / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
    except OSError:
        for path in written:
            try:
                path.unlink()
            except OSError:
                pass
        raise
    return written


def _split_overrides(extras: list[str]) -> list[tuple[str, str]]:
    pairs = []
    i = 0
    while i < len(extras):
        token = extras[i]
        if not token.startswith("--") or len(token) == 2:
            raise ConfigError(f"unexpected argument {token!r} (overrides look like --key value)")
        key = token[2:]
        if "=" in key:
            key, _, value = key.partition("=")
            i += 1
        else:
            if i + 1 >= len(extras):
                raise ConfigError(f"override --{key} is missing a value")
            value = extras[i + 1]
            i += 2
        pairs.append((key, value))
    return pairs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="llr-lab",
        description="Two-class Gaussian score-distribution and AUC laboratory.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", type=Path, default=None, help="config file path")
    parser.add_argument("--seed", type=int, default=None, help="base seed (else $LLR_LAB_SEED)")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--no-svg", action="store_true", help="skip SVG output")
    args, extras = parser.parse_known_args(argv)

    try:
        text = ""
        if args.config is not None:
            text = args.config.read_text(encoding="utf-8")
        overrides = [("command", args.command)]
        seed = args.seed
        if seed is None and os.environ.get(SEED_ENV_VAR):
            try:
                seed = int(os.environ[SEED_ENV_VAR])
            except ValueError as err:
                raise ConfigError(f"{SEED_ENV_VAR} must be an integer") from err
        if seed is not None:
            overrides.append(("base_seed", str(seed)))
        if args.out is not None:
            overrides.append(("out_dir", str(args.out)))
        if args.no_svg:
            overrides.append(("emit_svg", "false"))
        overrides.extend(_split_overrides(extras))
        config = parse_config(text, overrides)
    except ConfigError as err:
        print(f"llr-lab: config error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"llr-lab: i/o error: {err}", file=sys.stderr)
        return 4

    try:
        written = run_command(config)
    except ConfigError as err:
        print(f"llr-lab: config error: {err}", file=sys.stderr)
        return 2
    except LlrLabError as err:
        print(f"llr-lab: {config.command} failed: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"llr-lab: i/o error: {err}", file=sys.stderr)
        return 4
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
