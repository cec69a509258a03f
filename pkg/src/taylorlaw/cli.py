"""Command-line front end with deterministic machine-readable reports.

Subcommands cover the whole pipeline: ``fit-taylor`` and ``classify`` run
parse -> optional row normalization -> pair extraction -> power-law fit ->
critical density -> slope-test classification on an abundance CSV;
``pacd`` computes the critical density either from explicit parameters or
from a fitted file; ``fit-dispersion`` fits the distance-decay model per
species of a location table; ``simulate``, ``pcf`` and ``experiment``
drive the point-pattern generators.

Reports are printed to standard output as JSON (default) or as flat
``field,value`` CSV. All floats are rendered at 12 significant digits and
dict order is fixed, so identical configuration and inputs produce
byte-identical bytes. Exit status is 0 on success, 1 on usage or
configuration errors, and 2 on data, domain, or I/O errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._fmt import sig12
from .dispersion import fit_dispersion
from .errors import DataError, TaylorLawError, UsageError
from .extraction import SCHEME_TAGS, MVSeries, Scheme, extract_pairs
from .fitting import (
    Classification,
    PacdResult,
    PowerLawFit,
    classify,
    fit_log_ols,
    fit_nls,
    pacd,
    pacd_from_params,
)
from .pointprocess import (
    EXPERIMENT_KINDS,
    estimate_pcf,
    fit_pcf,
    simulate_hardcore,
    simulate_poisson,
    simulate_thomas,
    taylor_experiment,
)
from .svgplot import emit_svg_plot
from .tables import (
    AbundanceTable,
    _is_comment,
    parse_cross_sectional,
    parse_location,
    parse_longitudinal,
)

COMMANDS = (
    "fit-taylor",
    "pacd",
    "classify",
    "fit-dispersion",
    "simulate",
    "pcf",
    "experiment",
)
METHODS = ("log_ols", "nls")
OUTPUT_FORMATS = ("json", "csv")
GENERATOR_KINDS = ("poisson", "thomas", "hardcore")

DEFAULT_LEVELS = {
    "poisson_sweep": (25.0, 50.0, 100.0, 200.0, 400.0, 800.0),
    "thomas_cluster_sweep": (2.0, 4.0, 8.0, 16.0, 32.0),
    "hardcore_sweep": (100.0, 200.0, 400.0, 800.0),
}

_TABLE_COMMANDS = ("fit-taylor", "classify")
_PLOT_COMMANDS = ("fit-taylor", "classify", "experiment")


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one CLI invocation."""

    command: str
    input_path: str | None = None
    scheme_tag: str | None = None
    subject: str | None = None
    method: str = "log_ols"
    alpha: float = 0.05
    min_pairs: int = 3
    normalize: bool = False
    seed: int = 0
    output_format: str = "json"
    plot_path: str | None = None
    a: float | None = None
    b: float | None = None
    kind: str | None = None
    levels: tuple[float, ...] | None = None
    reps: int = 10
    q: int = 16
    intensity: float = 100.0
    parent_intensity: float = 20.0
    mean_offspring: float = 10.0
    sigma: float = 0.02
    proposal_intensity: float = 200.0
    hardcore_radius: float = 0.02
    bin_width: float = 0.02
    r_max: float = 0.25
    c_low: float = 0.0
    c_high: float = 5.0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.method not in METHODS:
            raise UsageError(f"unknown method {self.method!r}")
        if not 0.0 < self.alpha < 1.0:
            raise UsageError("alpha must lie in (0, 1)")
        if self.min_pairs < 1:
            raise UsageError("min-pairs must be at least 1")
        if not (isinstance(self.seed, int) and 0 <= self.seed < 2**64):
            raise UsageError("seed must be an unsigned 64-bit integer")
        if self.output_format not in OUTPUT_FORMATS:
            raise UsageError(f"unknown output format {self.output_format!r}")
        if self.plot_path is not None:
            if not self.plot_path.endswith(".svg"):
                raise UsageError("plot path must end in .svg")
            if self.command not in _PLOT_COMMANDS:
                raise UsageError(f"{self.command} does not produce a plot")
            if self.subject == "all":
                raise UsageError("plotting is only available for single fits")
        if self.command in _TABLE_COMMANDS:
            if not self.input_path:
                raise UsageError(f"{self.command} requires --input")
            if not self.scheme_tag:
                raise UsageError(f"{self.command} requires --scheme")
        if self.command == "pacd":
            direct = self.a is not None or self.b is not None
            if direct and (self.a is None or self.b is None):
                raise UsageError("pacd needs both --a and --b")
            if not direct and not (self.input_path and self.scheme_tag):
                raise UsageError("pacd needs --a/--b or --input with --scheme")
        if self.command == "fit-dispersion" and not self.input_path:
            raise UsageError("fit-dispersion requires --input")
        if self.command in ("simulate", "pcf"):
            if self.kind not in GENERATOR_KINDS:
                raise UsageError(
                    f"simulation kind must be one of {', '.join(GENERATOR_KINDS)}"
                )
        if self.command == "experiment":
            if self.kind not in EXPERIMENT_KINDS:
                raise UsageError(
                    f"experiment kind must be one of {', '.join(EXPERIMENT_KINDS)}"
                )
            if self.reps < 1:
                raise UsageError("reps must be at least 1")
            if self.q < 1:
                raise UsageError("q must be at least 1")
        if self.scheme_tag is not None and self.scheme_tag not in SCHEME_TAGS:
            raise UsageError(f"unknown scheme {self.scheme_tag!r}")


@dataclass(frozen=True)
class FitReport:
    """Everything one fit produces: parameters, critical density, call.

    ``classification`` is None when the slope test is undefined for this
    fit (for example a zero slope standard error on exact data), with the
    explanation in ``classification_error``.
    """

    scheme: Scheme | None
    fit: PowerLawFit
    pacd: PacdResult
    classification: Classification | None
    classification_error: str
    dropped_pair_labels: tuple[str, ...]


def build_fit_report(
    series: MVSeries,
    scheme: Scheme | None,
    method: str = "log_ols",
    alpha: float = 0.05,
    min_pairs: int = 3,
) -> FitReport:
    """Fit ``series`` and derive critical density and classification."""
    if method == "log_ols":
        fit = fit_log_ols(series, min_pairs=min_pairs)
        dropped = [
            p.label for p in series.pairs if not (p.mean > 0 and p.variance > 0)
        ]
    else:
        fit = fit_nls(series)
        dropped = [p.label for p in series.pairs if not p.mean > 0]
    crossover = pacd(fit)
    try:
        call: Classification | None = classify(fit, alpha)
        call_error = ""
    except TaylorLawError as exc:
        call = None
        call_error = str(exc)
    return FitReport(scheme, fit, crossover, call, call_error, tuple(dropped))


def _scheme_dict(scheme: Scheme | None):
    if scheme is None:
        return None
    return {"tag": scheme.tag, "subject": scheme.subject}


def _fit_dict(fit: PowerLawFit) -> dict:
    return {
        "a": fit.a,
        "b": fit.b,
        "se_ln_a": fit.se_ln_a,
        "se_b": fit.se_b,
        "r_squared": fit.r_squared,
        "n_used": fit.n_used,
        "n_dropped": fit.n_dropped,
        "method": fit.method,
        "rss_log": fit.rss_log,
        "rss_raw": fit.rss_raw,
        "converged": fit.converged,
    }


def _pacd_dict(res: PacdResult) -> dict:
    return {"m0": res.m0, "defined": res.defined, "reason": res.reason}


def _classification_dict(report: FitReport) -> dict:
    if report.classification is None:
        return {"error": report.classification_error}
    c = report.classification
    return {
        "pattern": c.pattern,
        "t_statistic": c.t_statistic,
        "p_value": c.p_value,
        "alpha": c.alpha,
        "dof": c.dof,
    }


def _report_dict(report: FitReport) -> dict:
    return {
        "scheme": _scheme_dict(report.scheme),
        "fit": _fit_dict(report.fit),
        "pacd": _pacd_dict(report.pacd),
        "classification": _classification_dict(report),
        "dropped_pair_labels": list(report.dropped_pair_labels),
    }


def _pairs_list(series: MVSeries) -> list:
    return [
        {"label": p.label, "mean": p.mean, "variance": p.variance}
        for p in series.pairs
    ]


def _json_scalar(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return sig12(value) if math.isfinite(value) else "null"
    if isinstance(value, str):
        return json.dumps(value)
    raise TypeError(f"unsupported report value {value!r}")


def _render_json(value, level: int = 0) -> str:
    pad = "  " * level
    inner = "  " * (level + 1)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [
            f"{inner}{json.dumps(str(k))}: {_render_json(v, level + 1)}"
            for k, v in value.items()
        ]
        return "{\n" + ",\n".join(items) + f"\n{pad}}}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        items = [f"{inner}{_render_json(v, level + 1)}" for v in value]
        return "[\n" + ",\n".join(items) + f"\n{pad}]"
    return _json_scalar(value)


def _csv_scalar(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return sig12(value) if math.isfinite(value) else "nan"
    return str(value)


def _flatten(value, prefix: str, rows: list) -> None:
    if isinstance(value, dict):
        if not value:
            rows.append((prefix, ""))
        for k, v in value.items():
            _flatten(v, f"{prefix}.{k}" if prefix else str(k), rows)
    elif isinstance(value, (list, tuple)):
        if not value:
            rows.append((prefix, ""))
        for i, v in enumerate(value):
            _flatten(v, f"{prefix}[{i}]", rows)
    else:
        rows.append((prefix, _csv_scalar(value)))


def render_report(value, output_format: str) -> str:
    """Render a report structure as JSON or flat field,value CSV."""
    if output_format == "json":
        return _render_json(value) + "\n"
    rows: list[tuple[str, str]] = []
    _flatten(value, "", rows)
    out = ["field,value"]
    for field, cell in rows:
        if any(ch in cell for ch in ',"\n\r'):
            cell = '"' + cell.replace('"', '""') + '"'
        out.append(f"{field},{cell}")
    return "\n".join(out) + "\n"


def _load_table(path: str) -> AbundanceTable:
    """Read an abundance CSV, choosing the layout by its header row."""
    text = Path(path).read_text(encoding="utf-8")
    header = None
    for line in text.splitlines():
        if line.strip() and not _is_comment(line):
            header = next(csv.reader([line]))
            break
    if header is not None and len(header) > 1 and header[1].strip() == "time":
        return parse_longitudinal(text)
    return parse_cross_sectional(text)


def _normalize_table(table: AbundanceTable) -> AbundanceTable:
    """Divide every observation row by its row sum."""
    sums = table.counts.sum(axis=1)
    for r, total in enumerate(sums):
        if total == 0:
            where = table.subject_ids[r]
            if table.times is not None:
                where = f"{where}@{table.times[r]}"
            raise DataError(f"cannot normalize: row {where!r} sums to zero")
    return AbundanceTable(
        table.subject_ids,
        table.species_ids,
        table.counts / sums[:, None],
        times=table.times,
    )


def _run_table_fit(config: RunConfig) -> dict:
    table = _load_table(config.input_path)
    if config.normalize:
        table = _normalize_table(table)
    value = {"command": config.command, "normalize": config.normalize}
    per_subject = config.scheme_tag in ("per_subject_time", "per_subject_species")
    if per_subject and config.subject == "all":
        reports = []
        failures = 0
        for subject in table.subjects():
            scheme = Scheme(config.scheme_tag, subject)
            try:
                series = extract_pairs(table, scheme)
                report = build_fit_report(
                    series, scheme, config.method, config.alpha, config.min_pairs
                )
                reports.append(_report_dict(report))
            except TaylorLawError as exc:
                failures += 1
                reports.append({"scheme": _scheme_dict(scheme), "error": str(exc)})
        if reports and failures == len(reports):
            raise DataError(
                f"no subject could be fitted; first error: {reports[0]['error']}"
            )
        value["reports"] = reports
        return value
    scheme = Scheme(config.scheme_tag, config.subject)
    series = extract_pairs(table, scheme)
    report = build_fit_report(
        series, scheme, config.method, config.alpha, config.min_pairs
    )
    if config.plot_path:
        emit_svg_plot(series, report.fit, config.plot_path)
    value["report"] = _report_dict(report)
    return value


def _run_pacd(config: RunConfig) -> dict:
    if config.a is not None:
        res = pacd_from_params(config.a, config.b)
        return {
            "command": "pacd",
            "a": config.a,
            "b": config.b,
            "pacd": _pacd_dict(res),
        }
    value = _run_table_fit(config)
    value["command"] = "pacd"
    return value


def _run_dispersion(config: RunConfig) -> dict:
    text = Path(config.input_path).read_text(encoding="utf-8")
    table = parse_location(text)
    xs = list(table.distances)
    fits = {}
    failures = 0
    for i, species in enumerate(table.species_ids):
        ns = [float(x) for x in table.counts[i, :]]
        try:
            f = fit_dispersion(xs, ns, (config.c_low, config.c_high))
            fits[species] = {
                "a": f.a,
                "b": f.b,
                "c": f.c,
                "d": f.d,
                "rss_log": f.rss_log,
                "n_used": f.n_used,
                "profile_flat": f.profile_flat,
            }
        except TaylorLawError as exc:
            failures += 1
            fits[species] = {"error": str(exc)}
    if fits and failures == len(fits):
        first = next(iter(fits.values()))["error"]
        raise DataError(f"no species could be fitted; first error: {first}")
    return {
        "command": "fit-dispersion",
        "locations": list(table.location_labels),
        "distances": xs,
        "fits": fits,
    }


def _make_pattern(config: RunConfig):
    if config.kind == "poisson":
        return simulate_poisson(config.intensity, config.seed)
    if config.kind == "thomas":
        return simulate_thomas(
            config.parent_intensity,
            config.mean_offspring,
            config.sigma,
            config.seed,
        )
    return simulate_hardcore(
        config.proposal_intensity, config.hardcore_radius, config.seed
    )


def _run_simulate(config: RunConfig) -> dict:
    pattern = _make_pattern(config)
    return {
        "command": "simulate",
        "generator": pattern.generator,
        "seed": config.seed,
        "n": pattern.n,
        "points": [[float(x), float(y)] for x, y in pattern.points],
    }


def _run_pcf(config: RunConfig) -> dict:
    pattern = _make_pattern(config)
    est = estimate_pcf(pattern, config.bin_width, config.r_max)
    fits = {}
    for form in ("paper_form", "xi_form"):
        try:
            f = fit_pcf(est, form)
            fits[form] = {
                "r0": f.r0,
                "s": f.s,
                "form": f.form,
                "r_squared": f.r_squared,
                "n_used": f.n_used,
            }
        except TaylorLawError as exc:
            fits[form] = {"error": str(exc)}
    return {
        "command": "pcf",
        "generator": pattern.generator,
        "seed": config.seed,
        "n_points": est.n_points,
        "bin_width": est.bin_width,
        "estimate": {
            "radii": [float(r) for r in est.radii],
            "g": [float(v) for v in est.g],
        },
        "fits": fits,
    }


def _run_experiment(config: RunConfig) -> dict:
    levels = config.levels or DEFAULT_LEVELS[config.kind]
    series = taylor_experiment(
        config.kind,
        list(levels),
        config.reps,
        config.q,
        config.seed,
        parent_intensity=config.parent_intensity,
        sigma=config.sigma,
        hardcore_radius=config.hardcore_radius,
    )
    report = build_fit_report(
        series, None, config.method, config.alpha, config.min_pairs
    )
    if config.plot_path:
        emit_svg_plot(series, report.fit, config.plot_path)
    return {
        "command": "experiment",
        "kind": config.kind,
        "levels": [float(x) for x in levels],
        "reps": config.reps,
        "q": config.q,
        "seed": config.seed,
        "pairs": _pairs_list(series),
        "report": _report_dict(report),
    }


def _execute(config: RunConfig) -> str:
    if config.command in _TABLE_COMMANDS:
        value = _run_table_fit(config)
    elif config.command == "pacd":
        value = _run_pacd(config)
    elif config.command == "fit-dispersion":
        value = _run_dispersion(config)
    elif config.command == "simulate":
        value = _run_simulate(config)
    elif config.command == "pcf":
        value = _run_pcf(config)
    else:
        value = _run_experiment(config)
    return render_report(value, config.output_format)


def run(config: RunConfig) -> int:
    """Execute a validated configuration; returns the process exit status."""
    try:
        output = _execute(config)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(output)
    return 0


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; this toolkit reserves 2
    # for data errors, so usage problems must exit 1 instead.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _levels_arg(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(token) for token in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"levels must be comma-separated numbers, got {text!r}"
        )
    return values


def _add_fit_flags(sub: argparse.ArgumentParser, with_plot: bool = True) -> None:
    sub.add_argument("--input", required=True, help="abundance CSV to analyze")
    sub.add_argument(
        "--scheme", required=True, choices=SCHEME_TAGS, help="extraction scheme"
    )
    sub.add_argument(
        "--subject",
        help="subject for per-subject schemes; 'all' fits every subject",
    )
    sub.add_argument("--method", choices=METHODS, default="log_ols")
    sub.add_argument("--alpha", type=float, default=0.05)
    sub.add_argument("--min-pairs", type=int, default=3, dest="min_pairs")
    sub.add_argument("--normalize", action="store_true")
    sub.add_argument("--format", choices=OUTPUT_FORMATS, default="json")
    if with_plot:
        sub.add_argument("--plot", dest="plot", help="write a log-log SVG here")


def _add_generator_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--kind", required=True, choices=GENERATOR_KINDS)
    sub.add_argument("--intensity", type=float, default=100.0)
    sub.add_argument("--parent-intensity", type=float, default=20.0)
    sub.add_argument("--mean-offspring", type=float, default=10.0)
    sub.add_argument("--sigma", type=float, default=0.02)
    sub.add_argument("--proposal-intensity", type=float, default=200.0)
    sub.add_argument("--hardcore-radius", type=float, default=0.02)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--format", choices=OUTPUT_FORMATS, default="json")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="taylorlaw",
        description="Mean-variance power laws, critical densities, and "
        "point-pattern experiments for abundance tables.",
    )
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    _add_fit_flags(subs.add_parser("fit-taylor", help="fit V = a*M^b to a table"))
    _add_fit_flags(subs.add_parser("classify", help="fit and run the slope test"))

    p = subs.add_parser("pacd", help="aggregation critical density")
    p.add_argument("--a", type=float, help="power-law coefficient")
    p.add_argument("--b", type=float, help="power-law exponent")
    p.add_argument("--input", help="abundance CSV to fit first")
    p.add_argument("--scheme", choices=SCHEME_TAGS)
    p.add_argument("--subject")
    p.add_argument("--method", choices=METHODS, default="log_ols")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--min-pairs", type=int, default=3, dest="min_pairs")
    p.add_argument("--normalize", action="store_true")
    p.add_argument("--format", choices=OUTPUT_FORMATS, default="json")

    p = subs.add_parser("fit-dispersion", help="distance-decay fits per species")
    p.add_argument("--input", required=True, help="location CSV to analyze")
    p.add_argument("--c-low", type=float, default=0.0, dest="c_low")
    p.add_argument("--c-high", type=float, default=5.0, dest="c_high")
    p.add_argument("--format", choices=OUTPUT_FORMATS, default="json")

    _add_generator_flags(subs.add_parser("simulate", help="draw a point pattern"))

    p = subs.add_parser("pcf", help="pair correlation of a simulated pattern")
    _add_generator_flags(p)
    p.add_argument("--bin-width", type=float, default=0.02)
    p.add_argument("--r-max", type=float, default=0.25, dest="r_max")

    p = subs.add_parser("experiment", help="sweep a generator, pool counts, fit")
    p.add_argument("--kind", required=True, choices=EXPERIMENT_KINDS)
    p.add_argument("--levels", type=_levels_arg, help="comma-separated levels")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--q", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--parent-intensity", type=float, default=20.0)
    p.add_argument("--sigma", type=float, default=0.02)
    p.add_argument("--hardcore-radius", type=float, default=0.02)
    p.add_argument("--method", choices=METHODS, default="log_ols")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--format", choices=OUTPUT_FORMATS, default="json")
    p.add_argument("--plot", dest="plot", help="write a log-log SVG here")

    return parser


def _config_from_args(ns: argparse.Namespace) -> RunConfig:
    fields = {"command": ns.command}
    mapping = {
        "input": "input_path",
        "scheme": "scheme_tag",
        "subject": "subject",
        "method": "method",
        "alpha": "alpha",
        "min_pairs": "min_pairs",
        "normalize": "normalize",
        "seed": "seed",
        "format": "output_format",
        "plot": "plot_path",
        "a": "a",
        "b": "b",
        "kind": "kind",
        "levels": "levels",
        "reps": "reps",
        "q": "q",
        "intensity": "intensity",
        "parent_intensity": "parent_intensity",
        "mean_offspring": "mean_offspring",
        "sigma": "sigma",
        "proposal_intensity": "proposal_intensity",
        "hardcore_radius": "hardcore_radius",
        "bin_width": "bin_width",
        "r_max": "r_max",
        "c_low": "c_low",
        "c_high": "c_high",
    }
    for arg_name, field in mapping.items():
        if hasattr(ns, arg_name) and getattr(ns, arg_name) is not None:
            fields[field] = getattr(ns, arg_name)
    return RunConfig(**fields)


def main(argv=None) -> int:
    """Console entry point; returns the exit status."""
    ns = build_parser().parse_args(argv)
    try:
        config = _config_from_args(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return run(config)
