"""Command-line front end: configuration parsing, dataset I/O, workflows.

Four commands cover the user workflows:

* ``size``     -- minimal sample size for a target power; ``--grid`` sweeps
  the effect and availability averages from the config's ``grid`` block and
  renders the results as an aligned table;
* ``power``    -- analytic power at a fixed sample size, optionally with a
  Monte Carlo estimate side by side (``--mc``);
* ``analyze``  -- run the proximal-effect test on a CSV dataset;
* ``simulate`` -- Monte Carlo rejection rates for a generative scenario;
  ``--export`` writes every replicate's dataset as CSV and ``--paper-table``
  runs one of the bundled preset grids.

Configuration is a single JSON document per run.  It validates completely
before any computation starts, unknown keys are errors, and every message
carries the offending field path.  Machine output (JSON) goes to standard
output; human-readable tables and notes go to standard error.  Exit codes:
0 success, 2 configuration/validation error, 3 numeric failure.

Dataset CSV format (bit-exact round trip): header
``subject,t,avail,action,prob,outcome``, one row per subject per decision
time, decimals serialized with 17 significant digits, and the outcome field
literally empty when avail=0.
"""

import functools
import hashlib
import json
import math
import os
import sys

import click
import numpy as np

from .design import (
    AVAILABILITY_KINDS,
    EffectPath,
    TrialDesign,
    build_quadratic_features,
    elicit_quadratic_effect,
    make_availability,
)
from .estimator import GRAM_KINDS, hypothesis_test
from .exceptions import ConfigError, NumericError
from .samplesize import SizingInputs, noncentrality, solve_sample_size
from .samplesize import power as analytic_power
from .simulate import (
    ERROR_FAMILIES,
    SCENARIOS,
    VARIANCE_TRENDS,
    ErrorProcess,
    GenerativeModel,
    calibrate_sigma_star,
    generate_dataset,
    monte_carlo,
    shaped_effect,
)

__all__ = [
    "DATASET_HEADER",
    "PAPER_TABLES",
    "load_config",
    "main",
    "read_dataset",
    "write_dataset",
]

DATASET_HEADER = "subject,t,avail,action,prob,outcome"
PAPER_TABLES = ("typeI-6wk", "power-hetero")
EFFECT_FORMS = ("quadratic", "shaped")

_MISSING = object()


# ---------------------------------------------------------------------
# configuration document
# ---------------------------------------------------------------------


def load_config(path):
    """Load one JSON configuration document (the root must be an object)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(
                    f"config is not valid JSON (line {exc.lineno}, column "
                    f"{exc.colno}): {exc.msg}"
                ) from None
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("configuration root must be a JSON object")
    return data


def _range_text(low, high, open_low, open_high):
    if low is None and high is None:
        return ""
    if high is None:
        return f" {'>' if open_low else '>='} {low:g}"
    if low is None:
        return f" {'<' if open_high else '<='} {high:g}"
    return f" in {'(' if open_low else '['}{low:g}, {high:g}{')' if open_high else ']'}"


def _check_number(label, value, low, high, open_low, open_high):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{label} must be a number, got {value!r}")
    v = float(value)
    lo_ok = low is None or (v > low if open_low else v >= low)
    hi_ok = high is None or (v < high if open_high else v <= high)
    if not (math.isfinite(v) and lo_ok and hi_ok):
        raise ConfigError(
            f"{label} must be a number{_range_text(low, high, open_low, open_high)}"
            f", got {value!r}"
        )
    return v


class _Section:
    """One object of the configuration document, addressed by dotted path.

    Every accessor marks its key as consumed; ``finish`` then rejects
    whatever remains, so misspelled keys can never pass silently.
    """

    def __init__(self, data, path=""):
        if not isinstance(data, dict):
            raise ConfigError(f"{path or 'configuration root'} must be a JSON object")
        self._data = data
        self._path = path
        self._used = set()

    def _label(self, key):
        return f"{self._path}.{key}" if self._path else key

    def _fetch(self, key, default):
        self._used.add(key)
        if key in self._data:
            return True, self._data[key]
        if default is _MISSING:
            raise ConfigError(f"missing required configuration key {self._label(key)!r}")
        return False, default

    def section(self, key, *, required=True):
        present, value = self._fetch(key, _MISSING if required else None)
        if not present:
            return None
        return _Section(value, self._label(key))

    def number(self, key, default=_MISSING, *, low=None, high=None,
               open_low=False, open_high=False):
        present, value = self._fetch(key, default)
        if not present:
            return value
        return _check_number(self._label(key), value, low, high, open_low, open_high)

    def integer(self, key, default=_MISSING, *, low=None, high=None):
        present, value = self._fetch(key, default)
        if not present:
            return value
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{self._label(key)} must be an integer, got {value!r}")
        lo_ok = low is None or value >= low
        hi_ok = high is None or value <= high
        if not (lo_ok and hi_ok):
            raise ConfigError(
                f"{self._label(key)} must be an integer"
                f"{_range_text(low, high, False, False)}, got {value!r}"
            )
        return value

    def boolean(self, key, default=_MISSING):
        present, value = self._fetch(key, default)
        if not present:
            return value
        if not isinstance(value, bool):
            raise ConfigError(f"{self._label(key)} must be true or false, got {value!r}")
        return value

    def string(self, key, default=_MISSING, *, choices=None):
        present, value = self._fetch(key, default)
        if not present:
            return value
        if not isinstance(value, str):
            raise ConfigError(f"{self._label(key)} must be a string, got {value!r}")
        if choices is not None and value not in choices:
            raise ConfigError(
                f"{self._label(key)} must be one of {', '.join(choices)}; got {value!r}"
            )
        return value

    def number_list(self, key, default=_MISSING, *, low=None, high=None,
                    open_low=False, open_high=False):
        present, value = self._fetch(key, default)
        if not present:
            return value
        if not isinstance(value, list) or not value:
            raise ConfigError(
                f"{self._label(key)} must be a non-empty array of numbers, got {value!r}"
            )
        return [
            _check_number(f"{self._label(key)}[{i}]", item, low, high, open_low, open_high)
            for i, item in enumerate(value)
        ]

    def number_or_list(self, key, default=_MISSING, *, low=None, high=None,
                       open_low=False, open_high=False):
        present, value = self._fetch(key, default)
        if not present:
            return value
        if isinstance(value, list):
            return np.asarray(
                [
                    _check_number(f"{self._label(key)}[{i}]", item,
                                  low, high, open_low, open_high)
                    for i, item in enumerate(value)
                ]
            )
        return _check_number(self._label(key), value, low, high, open_low, open_high)

    def finish(self):
        unknown = sorted(set(self._data) - self._used)
        if unknown:
            names = ", ".join(repr(self._label(k)) for k in unknown)
            raise ConfigError(f"unknown configuration key(s): {names}")


# ---------------------------------------------------------------------
# block parsers and builders
# ---------------------------------------------------------------------


def _parse_design(cfg):
    sec = cfg.section("design")
    days = sec.integer("days", low=1)
    per_day = sec.integer("decisions_per_day", low=1)
    rho = sec.number_or_list("rho", low=0.0, high=1.0, open_low=True, open_high=True)
    sec.finish()
    return TrialDesign(days=days, decisions_per_day=per_day, rho=rho)


def _availability_params(cfg):
    sec = cfg.section("availability")
    params = {
        "kind": sec.string("kind", choices=AVAILABILITY_KINDS),
        "average": sec.number("average", low=0.0, high=1.0, open_low=True),
        "amplitude": sec.number("amplitude", None),
        "break_day": sec.integer("break_day", None, low=1),
    }
    sec.finish()
    return params


def _build_availability(params, design, average=None):
    return make_availability(
        params["kind"],
        params["average"] if average is None else average,
        design,
        amplitude=params["amplitude"],
        break_day=params["break_day"],
    )


def _effect_params(cfg):
    sec = cfg.section("effect")
    form = sec.string("form", choices=EFFECT_FORMS)
    if form == "quadratic":
        params = {
            "form": form,
            "initial": sec.number("initial", 0.0),
            "average": sec.number("average"),
            "max_day": sec.integer("max_day", low=1),
        }
    else:
        params = {
            "form": form,
            "average": sec.number("average"),
            "max_day": sec.integer("max_day", low=1),
            "plateau_fraction": sec.number("plateau_fraction", low=0.0, high=1.0),
        }
    sec.finish()
    return params


def _build_effect(params, design, average=None):
    avg = params["average"] if average is None else average
    if params["form"] == "quadratic":
        return elicit_quadratic_effect(params["initial"], avg, params["max_day"], design)
    return shaped_effect(design, avg, params["max_day"], params["plateau_fraction"])


def _parse_errors(cfg):
    sec = cfg.section("errors", required=False)
    if sec is None:
        return ErrorProcess("iid-normal")
    family = sec.string("family", choices=ERROR_FAMILIES)
    phi = sec.number("phi", _MISSING if family in ("ar1", "ar5") else 0.0)
    sec.finish()
    return ErrorProcess(family, phi)


def _scenario_spec(cfg, *, required):
    sec = cfg.section("scenario", required=required)
    if sec is None:
        return {"name": "working-true"}
    name = sec.string("name", choices=SCENARIOS)
    spec = {"name": name}
    if name == "weekend-mean":
        spec["theta"] = sec.number("theta")
    elif name == "heteroscedastic":
        spec["variance_ratio"] = sec.number("variance_ratio", low=0.0, open_low=True)
        spec["variance_trend"] = sec.string("variance_trend", choices=VARIANCE_TRENDS)
    elif name == "availability-feedback":
        spec["eta"] = sec.number("eta")
    elif name == "treatment-feedback":
        for key in ("eta1", "eta2", "gamma1", "gamma2"):
            spec[key] = sec.number(key)
        spec["calibration_reps"] = sec.integer("calibration_reps", 10_000, low=1)
    sec.finish()
    return spec


def _instantiate_model(spec, design, effect, tau, errors, *, seed):
    name = spec["name"]
    if name == "working-true":
        return GenerativeModel.working_true(design, effect, tau, errors)
    if name == "weekend-mean":
        return GenerativeModel.weekend_mean(design, effect, tau, errors, theta=spec["theta"])
    if name == "nonquadratic-effect":
        return GenerativeModel.nonquadratic_effect(design, effect, tau, errors)
    if name == "heteroscedastic":
        return GenerativeModel.heteroscedastic(
            design, effect, tau, errors,
            variance_ratio=spec["variance_ratio"],
            variance_trend=spec["variance_trend"],
        )
    if name == "availability-feedback":
        return GenerativeModel.availability_feedback(design, effect, tau, errors, eta=spec["eta"])
    model = GenerativeModel.treatment_feedback(
        design, effect, tau, errors,
        eta1=spec["eta1"], eta2=spec["eta2"],
        gamma1=spec["gamma1"], gamma2=spec["gamma2"],
    )
    return calibrate_sigma_star(model, reps=spec["calibration_reps"], seed=seed)


# ---------------------------------------------------------------------
# dataset CSV I/O
# ---------------------------------------------------------------------


def write_dataset(dataset, path):
    """Write subject records as CSV in the bit-exact round-trip format."""
    lines = [DATASET_HEADER]
    for subject, rec in enumerate(dataset):
        for t in range(rec.T):
            outcome = format(rec.outcome[t], ".17g") if rec.avail[t] == 1 else ""
            lines.append(
                f"{subject},{t + 1},{rec.avail[t]},{rec.action[t]},"
                f"{format(rec.prob[t], '.17g')},{outcome}"
            )
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_int(text, label):
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{label} must be an integer, got {text!r}") from None


def _parse_float(text, label):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{label} must be a number, got {text!r}") from None


def read_dataset(path):
    """Read a dataset CSV back into subject records.

    Subjects must appear as contiguous blocks numbered from 0, decision
    times must run 1..T within each block, and every block must have the
    same length.  All violations are reported with the offending line
    number.
    """
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read dataset: {exc}") from None
    if not lines or lines[0] != DATASET_HEADER:
        raise ConfigError(f"line 1: dataset header must be exactly {DATASET_HEADER!r}")

    rows = []
    for line_no, line in enumerate(lines[1:], start=2):
        fields = line.split(",")
        if len(fields) != 6:
            raise ConfigError(
                f"line {line_no}: expected 6 comma-separated fields, got {len(fields)}"
            )
        subject = _parse_int(fields[0], f"line {line_no}: subject")
        t = _parse_int(fields[1], f"line {line_no}: t")
        if fields[2] not in ("0", "1"):
            raise ConfigError(f"line {line_no}: avail must be 0 or 1, got {fields[2]!r}")
        if fields[3] not in ("0", "1"):
            raise ConfigError(f"line {line_no}: action must be 0 or 1, got {fields[3]!r}")
        avail = int(fields[2])
        action = int(fields[3])
        prob = _parse_float(fields[4], f"line {line_no}: prob")
        if not (0.0 < prob < 1.0):
            raise ConfigError(
                f"line {line_no}: randomization probability must lie in (0, 1), "
                f"got {fields[4]}"
            )
        if avail == 0:
            if fields[5] != "":
                raise ConfigError(
                    f"line {line_no}: outcome must be empty when avail is 0, "
                    f"got {fields[5]!r}"
                )
            outcome = math.nan
        else:
            outcome = _parse_float(fields[5], f"line {line_no}: outcome")
            if not math.isfinite(outcome):
                raise ConfigError(
                    f"line {line_no}: outcome must be a finite number, got {fields[5]!r}"
                )
        rows.append((line_no, subject, t, avail, action, prob, outcome))

    if not rows:
        raise ConfigError("dataset has no data rows")

    from .estimator import SubjectRecord

    records = []
    block = None  # [subject, avail, action, prob, outcome, first_line]

    def close(block, line_no):
        record = SubjectRecord(
            avail=np.asarray(block[1], dtype=np.int8),
            action=np.asarray(block[2], dtype=np.int8),
            prob=np.asarray(block[3]),
            outcome=np.asarray(block[4]),
        )
        if records and record.T != records[0].T:
            raise ConfigError(
                f"line {line_no}: subject {block[0]} has {record.T} rows but "
                f"subject 0 has {records[0].T}"
            )
        records.append(record)

    for line_no, subject, t, avail, action, prob, outcome in rows:
        if block is None or subject != block[0]:
            if block is not None:
                close(block, line_no)
            if subject != len(records):
                raise ConfigError(
                    f"line {line_no}: subject ids must be contiguous from 0 "
                    f"(expected {len(records)}, got {subject})"
                )
            block = [subject, [], [], [], [], line_no]
        expected_t = len(block[1]) + 1
        if t != expected_t:
            raise ConfigError(
                f"line {line_no}: expected decision time {expected_t} for "
                f"subject {subject}, got {t}"
            )
        block[1].append(avail)
        block[2].append(action)
        block[3].append(prob)
        block[4].append(outcome)
    close(block, rows[-1][0])
    return records


# ---------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------


def _emit(payload):
    click.echo(json.dumps(payload, indent=2, sort_keys=True))


def _digest(command, config, flags):
    canon = json.dumps(
        {"command": command, "config": config, "flags": flags},
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _axis(value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return str(value)
    return f"{value:g}"


def _render_table(corner, col_values, row_values, cells):
    head = [corner] + [_axis(v) for v in col_values]
    body = [[_axis(rv)] + [str(c) for c in row] for rv, row in zip(row_values, cells)]
    widths = [max(len(line[j]) for line in [head] + body) for j in range(len(head))]
    return "\n".join(
        "  ".join(s.rjust(w) for s, w in zip(line, widths)) for line in [head] + body
    )


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ConfigError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(2)
        except NumericError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(3)

    return wrapper


# ---------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------


@click.group()
def main():
    """Sizing, power, analysis and simulation for micro-randomized trials."""


@main.command("size")
@click.argument("config_file", type=click.Path())
@click.option("--grid", is_flag=True,
              help="Sweep the config's grid block (effect x availability averages).")
@_guarded
def size_command(config_file, grid):
    """Solve for the minimal sample size meeting the power target."""
    raw = load_config(config_file)
    cfg = _Section(raw)
    design = _parse_design(cfg)
    features = build_quadratic_features(design)
    avail_params = _availability_params(cfg)
    effect_params = _effect_params(cfg)
    alpha0 = cfg.number("alpha0", low=0.0, high=0.5, open_low=True, open_high=True)
    target = cfg.number("power", low=0.0, high=1.0, open_low=True, open_high=True)
    grid_sec = cfg.section("grid", required=False)
    effect_axis = avail_axis = None
    if grid_sec is not None:
        effect_axis = grid_sec.number_list("effect_averages")
        avail_axis = grid_sec.number_list(
            "availability_averages", low=0.0, high=1.0, open_low=True
        )
        grid_sec.finish()
    cfg.finish()
    digest = _digest("size", raw, {"grid": bool(grid)})

    def solve(effect_average=None, avail_average=None):
        average = effect_params["average"] if effect_average is None else effect_average
        if average == 0.0:
            raise ConfigError(
                "no solution: null effect (a zero average standardized effect "
                "can never reach the power target)"
            )
        return solve_sample_size(
            SizingInputs(
                design=design,
                features=features,
                tau=_build_availability(avail_params, design, avail_average),
                effect=_build_effect(effect_params, design, effect_average),
                alpha0=alpha0,
                power_target=target,
            )
        )

    if grid:
        if effect_axis is None:
            raise ConfigError(
                "--grid requires a 'grid' block with effect_averages and "
                "availability_averages"
            )
        results = [
            [solve(effect_average=d, avail_average=a) for a in avail_axis]
            for d in effect_axis
        ]
        click.echo(
            _render_table(
                "effect avg \\ avail avg",
                avail_axis,
                effect_axis,
                [[r.n for r in row] for row in results],
            ),
            err=True,
        )
        _emit(
            {
                "alpha0": alpha0,
                "power_target": target,
                "effect_averages": effect_axis,
                "availability_averages": avail_axis,
                "n": [[r.n for r in row] for row in results],
                "achieved_power": [[r.achieved_power for r in row] for row in results],
                "power_at_n_minus_1": [
                    [r.power_at_n_minus_1 for r in row] for row in results
                ],
                "config_digest": digest,
            }
        )
    else:
        result = solve()
        click.echo(
            f"minimal sample size n = {result.n} "
            f"(power {result.achieved_power:.4f}; at n-1: "
            f"{result.power_at_n_minus_1:.4f})",
            err=True,
        )
        payload = result.to_dict()
        payload["config_digest"] = digest
        _emit(payload)


@main.command("power")
@click.argument("config_file", type=click.Path())
@click.option("--mc", is_flag=True, help="Add a Monte Carlo estimate next to the analytic value.")
@click.option("--reps", type=int, default=None, help="Replicates for --mc (overrides config).")
@click.option("--seed", type=int, default=None, help="Seed for --mc (overrides config).")
@click.option("--threads", type=int, default=None, help="Worker processes for --mc.")
@_guarded
def power_command(config_file, mc, reps, seed, threads):
    """Analytic power at a fixed sample size."""
    raw = load_config(config_file)
    cfg = _Section(raw)
    design = _parse_design(cfg)
    features = build_quadratic_features(design)
    avail_params = _availability_params(cfg)
    effect_params = _effect_params(cfg)
    alpha0 = cfg.number("alpha0", low=0.0, high=0.5, open_low=True, open_high=True)
    n = cfg.integer("n", low=1)
    target = cfg.number("power", 0.8, low=0.0, high=1.0, open_low=True, open_high=True)
    errors = _parse_errors(cfg)
    spec = _scenario_spec(cfg, required=False)
    config_reps = cfg.integer("reps", 1000, low=1)
    config_seed = cfg.integer("seed", 0, low=0)
    adjusted = cfg.boolean("adjusted", True)
    gram = cfg.string("gram", "summed", choices=GRAM_KINDS)
    cfg.finish()
    reps = reps if reps is not None else config_reps
    seed = seed if seed is not None else config_seed

    tau = _build_availability(avail_params, design)
    effect = _build_effect(effect_params, design)
    inputs = SizingInputs(
        design=design, features=features, tau=tau, effect=effect,
        alpha0=alpha0, power_target=target,
    )
    value = analytic_power(n, inputs)
    payload = {
        "n": n,
        "alpha0": alpha0,
        "noncentrality": noncentrality(n, effect, inputs.q_matrix),
        "analytic_power": value,
        "config_digest": _digest(
            "power", raw, {"mc": mc, "reps": reps if mc else None,
                           "seed": seed if mc else None}
        ),
    }
    if mc:
        model = _instantiate_model(spec, design, effect, tau, errors, seed=seed)
        report = monte_carlo(
            model, n, reps, alpha0, adjusted, seed=seed, gram=gram, threads=threads
        )
        payload["monte_carlo"] = report.to_dict()
        click.echo(
            f"analytic power {value:.4f}; simulated rate {report.rate:.4f} "
            f"(95% CI {report.ci_low:.4f}-{report.ci_high:.4f}, "
            f"{report.replicates}/{report.requested} replicates)",
            err=True,
        )
    else:
        click.echo(f"analytic power at n = {n}: {value:.4f}", err=True)
    _emit(payload)


@main.command("analyze")
@click.argument("dataset_file", type=click.Path())
@click.argument("config_file", type=click.Path())
@_guarded
def analyze_command(dataset_file, config_file):
    """Test for a proximal treatment effect in a CSV dataset."""
    raw = load_config(config_file)
    cfg = _Section(raw)
    design = _parse_design(cfg)
    alpha0 = cfg.number("alpha0", low=0.0, high=0.5, open_low=True, open_high=True)
    adjusted = cfg.boolean("adjusted", True)
    gram = cfg.string("gram", "summed", choices=GRAM_KINDS)
    cfg.finish()

    dataset = read_dataset(dataset_file)
    result = hypothesis_test(
        dataset, build_quadratic_features(design), alpha0, adjusted, gram=gram
    )
    click.echo(
        f"n = {result.n}; statistic {result.statistic:.6g} vs critical "
        f"{result.critical_value:.6g}; p = {result.p_value:.4g}; "
        f"reject = {result.reject}",
        err=True,
    )
    payload = result.to_dict()
    payload["config_digest"] = _digest("analyze", raw, {})
    _emit(payload)


def _run_paper_table(name, *, reps, seed, threads):
    design = TrialDesign(days=42, decisions_per_day=5, rho=0.4)
    errors = ErrorProcess("iid-normal")
    if name == "typeI-6wk":
        effect = EffectPath.quadratic(np.zeros(3), design)
        row_label, row_values = "scenario", ["null-6wk"]
        col_label, col_values = "availability average", [0.5, 0.7]
        reports = [
            [
                monte_carlo(
                    GenerativeModel.working_true(
                        design, effect,
                        make_availability("constant", avg, design), errors,
                    ),
                    42, reps, 0.05, seed=seed, threads=threads,
                )
                for avg in col_values
            ]
        ]
    elif name == "power-hetero":
        effect = elicit_quadratic_effect(0.0, 0.10, 29, design)
        tau = make_availability("constant", 0.5, design)
        row_label, row_values = "variance ratio", [1.2, 1.0, 0.8]
        col_label, col_values = "variance trend", ["constant", "increasing", "decreasing"]
        reports = [
            [
                monte_carlo(
                    GenerativeModel.heteroscedastic(
                        design, effect, tau, errors,
                        variance_ratio=ratio, variance_trend=trend,
                    ),
                    42, reps, 0.05, seed=seed, threads=threads,
                )
                for trend in col_values
            ]
            for ratio in row_values
        ]
    else:
        raise ConfigError(
            f"unknown table id {name!r}; expected one of {', '.join(PAPER_TABLES)}"
        )
    payload = {
        "table": name,
        "n": 42,
        "alpha0": 0.05,
        "reps": reps,
        "seed": seed,
        "row_label": row_label,
        "row_values": row_values,
        "col_label": col_label,
        "col_values": col_values,
        "rates": [[r.rate for r in row] for row in reports],
        "reports": [[r.to_dict() for r in row] for row in reports],
        "config_digest": _digest(
            "simulate", {"paper_table": name}, {"reps": reps, "seed": seed}
        ),
    }
    table = _render_table(
        f"{row_label} \\ {col_label}",
        col_values,
        row_values,
        [[f"{r.rate:.3f}" for r in row] for row in reports],
    )
    return payload, table


def _export_replicates(model, n, reps, seed, directory):
    os.makedirs(directory, exist_ok=True)
    width = max(4, len(str(reps - 1)))
    written = 0
    skipped = 0
    for replicate in range(reps):
        try:
            data = generate_dataset(model, n, seed=seed, replicate=replicate)
        except NumericError:
            skipped += 1
            continue
        write_dataset(data, os.path.join(directory, f"replicate-{replicate:0{width}d}.csv"))
        written += 1
    note = f"wrote {written} replicate dataset(s) to {directory}"
    if skipped:
        note += f" ({skipped} skipped: generation failed)"
    click.echo(note, err=True)


@main.command("simulate")
@click.argument("config_file", type=click.Path(), required=False)
@click.option("--reps", type=int, default=None, help="Replicates (overrides config).")
@click.option("--seed", type=int, default=None, help="Seed (overrides config).")
@click.option("--threads", type=int, default=None, help="Worker processes.")
@click.option("--export", "export_dir", type=click.Path(), default=None,
              help="Write each replicate's dataset as CSV into this directory.")
@click.option("--paper-table", "paper_table", type=str, default=None,
              help=f"Run a bundled preset grid ({', '.join(PAPER_TABLES)}).")
@_guarded
def simulate_command(config_file, reps, seed, threads, export_dir, paper_table):
    """Estimate the rejection rate of a generative scenario by Monte Carlo."""
    if paper_table is not None:
        if config_file is not None:
            raise ConfigError(
                "--paper-table presets are self-contained; do not pass a config file"
            )
        payload, table = _run_paper_table(
            paper_table,
            reps=reps if reps is not None else 1000,
            seed=seed if seed is not None else 0,
            threads=threads,
        )
        click.echo(table, err=True)
        _emit(payload)
        return
    if config_file is None:
        raise ConfigError("missing CONFIG_FILE argument (or use --paper-table)")

    raw = load_config(config_file)
    cfg = _Section(raw)
    design = _parse_design(cfg)
    avail_params = _availability_params(cfg)
    effect_params = _effect_params(cfg)
    errors = _parse_errors(cfg)
    spec = _scenario_spec(cfg, required=True)
    n = cfg.integer("n", low=1)
    alpha0 = cfg.number("alpha0", low=0.0, high=0.5, open_low=True, open_high=True)
    config_reps = cfg.integer("reps", 1000, low=1)
    config_seed = cfg.integer("seed", 0, low=0)
    adjusted = cfg.boolean("adjusted", True)
    gram = cfg.string("gram", "summed", choices=GRAM_KINDS)
    cfg.finish()
    reps = reps if reps is not None else config_reps
    seed = seed if seed is not None else config_seed

    tau = _build_availability(avail_params, design)
    effect = _build_effect(effect_params, design)
    model = _instantiate_model(spec, design, effect, tau, errors, seed=seed)
    report = monte_carlo(
        model, n, reps, alpha0, adjusted, seed=seed, gram=gram, threads=threads
    )
    if export_dir is not None:
        _export_replicates(model, n, reps, seed, export_dir)
    click.echo(
        f"rejection rate {report.rate:.4f} "
        f"(95% CI {report.ci_low:.4f}-{report.ci_high:.4f}) from "
        f"{report.replicates}/{report.requested} replicates"
        + (f"; {report.failures} failed" if report.failures else ""),
        err=True,
    )
    _emit(report.to_dict())


if __name__ == "__main__":
    main()
