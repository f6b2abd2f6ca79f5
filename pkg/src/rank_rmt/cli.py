"""Command-line interface: ``rank-rmt test | theory | contour-check | simulate``.

Exit codes: 0 success, 1 contour-check failure, 2 domain error (for example
``p >= n`` for a log-determinant test), 3 ties under the strict policy,
4 unparseable input, 5 any other numerical failure.
"""

from __future__ import annotations

import contextlib
import dataclasses
import csv
import json
import os
import sys

import click
import numpy as np

from . import mp_theory
from .contour import log_function, lss_asymptotics, power_function
from .errors import DomainError, ParseError, RankRmtError, TieError
from .harness import PRESETS, RESULT_SCHEMA, config_from_dict, preset, run_experiment, write_csv, write_json
from .independence import ANALYTIC_TESTS, TestId, mc_calibrate_many, run_tests
from .mp_theory import clt_closed_form, mp_log_centering, mp_moment

EXIT_CHECK_FAILED = 1
EXIT_DOMAIN = 2
EXIT_TIES = 3
EXIT_PARSE = 4
EXIT_NUMERIC = 5


def _fail(code: int, msg: str):
    click.echo(f"error: {msg}", err=True)
    sys.exit(code)


@contextlib.contextmanager
def _errors_to_exit():
    try:
        yield
    except TieError as exc:
        _fail(EXIT_TIES, str(exc))
    except ParseError as exc:
        _fail(EXIT_PARSE, str(exc))
    except DomainError as exc:
        _fail(EXIT_DOMAIN, str(exc))
    except RankRmtError as exc:
        _fail(EXIT_NUMERIC, str(exc))


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get("RANK_RMT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            _fail(EXIT_PARSE, f"RANK_RMT_THREADS must be an integer, got {env!r}")
    return 1


def read_matrix_csv(path: str, header: bool = False) -> np.ndarray:
    """Read a numeric CSV into an ``n x p`` array, naming the first bad cell."""
    rows = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            for i, row in enumerate(reader, start=1):
                if header and i == 1:
                    continue
                if not row or all(not c.strip() for c in row):
                    continue
                vals = []
                for j, cell in enumerate(row, start=1):
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        raise ParseError(f"non-numeric cell {cell!r} at row {i}, column {j}") from None
                rows.append(vals)
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ParseError(f"{path} contains no data")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ParseError(f"ragged CSV: row lengths {sorted(widths)}")
    return np.array(rows)


def _parse_tests(spec: str) -> list[TestId]:
    try:
        return [TestId(t.strip().lower()) for t in spec.split(",") if t.strip()]
    except ValueError as exc:
        raise click.BadParameter(f"{exc}; choose from {', '.join(t.value for t in TestId)}") from exc


def _parse_floats(spec: str) -> list[float]:
    try:
        return [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc)) from exc


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(package_name="artifact")
def main():
    """Rank correlation matrices in high dimension: theory, tests and simulations."""


# ---------------------------------------------------------------------------


@main.command("test")
@click.argument("input_csv", type=click.Path(dir_okay=False))
@click.option("--tests", "tests_spec", default=",".join(t.value for t in ANALYTIC_TESTS), show_default=True, help="Comma-separated test ids.")
@click.option("--alpha", default=0.05, show_default=True, type=float)
@click.option("--tie-policy", type=click.Choice(["strict", "random_break"]), default="strict", show_default=True)
@click.option("--header", is_flag=True, help="Skip the first line of the CSV.")
@click.option("--seed", default=0, show_default=True, type=int, help="Seed for tie breaking and Monte Carlo calibration.")
@click.option("--mc-reps", default=500, show_default=True, type=int, help="Null replications for non-analytic tests.")
@click.option("--out", type=click.Path(dir_okay=False), help="Write JSON here instead of stdout.")
def cmd_test(input_csv, tests_spec, alpha, tie_policy, header, seed, mc_reps, out):
    """Test independence of the columns of INPUT_CSV (rows are observations)."""
    tests = _parse_tests(tests_spec)
    with _errors_to_exit():
        x = read_matrix_csv(input_csv, header)
        n, p = x.shape
        mc = [t for t in tests if t not in ANALYTIC_TESTS]
        crit = mc_calibrate_many(mc, n, p, "normal", mc_reps, seed, alpha) if mc else None
        reports = run_tests(x, tests, alpha, tie_policy, seed, crit, mc_reps if mc else None, seed if mc else None)
    text = json.dumps([r.to_dict() for r in reports], indent=2)
    _emit(text, out)


def _emit(text: str, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text + ("" if text.endswith("\n") else "\n"))
    else:
        click.echo(text)


# ---------------------------------------------------------------------------


@main.command("theory")
@click.option("--family", type=click.Choice(["log", "power"]), required=True)
@click.option("--y", "y", type=float, required=True, help="Aspect ratio p/n.")
@click.option("--variant", type=click.Choice(["classical", "improved"]), default="classical", show_default=True)
@click.option("--k", type=int, default=2, show_default=True, help="Power for --family power.")
def cmd_theory(family, y, variant, k):
    """Closed-form asymptotic mean and variance, with the centering term per dimension."""
    with _errors_to_exit():
        m = clt_closed_form(family, y, variant, k=k if family == "power" else None)
        centering = mp_log_centering(y) if family == "log" else mp_moment(y, k)
    click.echo(
        json.dumps(
            {
                "family": m.family,
                "variant": m.variant.value,
                "y": m.y,
                "mean": m.mean,
                "variance": m.variance,
                "sd": m.sd,
                "centering_per_dim": centering,
            },
            indent=2,
        )
    )


# ---------------------------------------------------------------------------


@contextlib.contextmanager
def _flipped_branch():
    """Swap sbar for the other root of its quadratic (negative control)."""
    original = mp_theory.stieltjes_sbar

    def wrong(y0, z):
        z = np.asarray(z, dtype=complex)
        return 1.0 / (z * original(y0, z))

    mp_theory.stieltjes_sbar = wrong
    try:
        yield
    finally:
        mp_theory.stieltjes_sbar = original


def contour_cases(y_grid, k_max):
    for y in y_grid:
        for variant in ("classical", "improved"):
            if y < 1:
                yield f"log y={y:g} {variant}", log_function(), ("log", y, variant, None)
            for k in range(2, k_max + 1):
                yield f"x^{k} y={y:g} {variant}", power_function(k), ("power", y, variant, k)
            yield f"x y={y:g} {variant} (degenerate)", power_function(1), (None, y, variant, None)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def run_contour_check(y_grid, k_max, tol):
    """Yield ``(name, ok, detail)`` per case."""
    for name, f, closed in contour_cases(y_grid, k_max):
        family, y, variant, k = closed
        try:
            got = lss_asymptotics(f, y, variant)
        except RankRmtError as exc:
            yield name, False, f"{type(exc).__name__}: {exc}"
            continue
        if family is None:
            ok = abs(got.mean) < tol and abs(got.variance) < tol
            yield name, ok, f"mean={got.mean:.3e} var={got.variance:.3e}"
            continue
        ref = clt_closed_form(family, y, variant, k=k)
        em, ev = _rel(got.mean, ref.mean), _rel(got.variance, ref.variance)
        yield name, em <= tol and ev <= tol, f"mean {got.mean:.10g} vs {ref.mean:.10g} (rel {em:.1e}); var {got.variance:.10g} vs {ref.variance:.10g} (rel {ev:.1e})"


@main.command("contour-check")
@click.option("--y-grid", default="0.2,0.5,0.8,2", show_default=True)
@click.option("--k-max", default=6, show_default=True, type=int)
@click.option("--tol", default=1e-6, show_default=True, type=float)
@click.option("--break-branch", is_flag=True, hidden=True)
def cmd_contour_check(y_grid, k_max, tol, break_branch):
    """Compare contour-integral moments with the closed forms."""
    ys = _parse_floats(y_grid)
    failures = 0
    ctx = _flipped_branch() if break_branch else contextlib.nullcontext()
    with ctx:
        for name, ok, detail in run_contour_check(ys, k_max, tol):
            failures += not ok
            click.echo(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    click.echo(f"{failures} failure(s)", err=True)
    sys.exit(EXIT_CHECK_FAILED if failures else 0)


# ---------------------------------------------------------------------------


@main.command("simulate")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="JSON file with one config object or a list.")
@click.option("--preset", "preset_name", type=click.Choice(PRESETS))
@click.option("--out", type=click.Path(dir_okay=False), help="Output file (stdout if omitted).")
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default=None, help="Defaults to the --out extension, else csv.")
@click.option("--threads", type=int, default=None, help="Worker threads (env RANK_RMT_THREADS).")
@click.option("--seed", type=int, default=None, help="Master seed (overrides the config).")
@click.option("--reps", type=int, default=None, help="Replications per cell (overrides).")
@click.option("--no-timing", is_flag=True, help="Report seconds as 0 so outputs are byte-reproducible.")
@click.option("--schema", is_flag=True, help="Print the JSON result schema and exit.")
def cmd_simulate(config_path, preset_name, out, fmt, threads, seed, reps, no_timing, schema):
    """Reproduce size/power tables from a preset or a config file."""
    if schema:
        click.echo(json.dumps(RESULT_SCHEMA, indent=2))
        return
    if bool(config_path) == bool(preset_name):
        raise click.UsageError("give exactly one of --config or --preset")
    nthreads = _threads(threads)
    with _errors_to_exit():
        if preset_name:
            configs = preset(preset_name, reps=reps, master_seed=seed or 0)
        else:
            try:
                with open(config_path) as fh:
                    raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{config_path}: {exc}") from exc
            raw = raw if isinstance(raw, list) else [raw]
            configs = []
            for d in raw:
                d = dict(d)
                if seed is not None:
                    d["master_seed"] = seed
                if reps is not None:
                    d["reps"] = reps
                configs.append(config_from_dict(d))
        results = []
        for cfg in configs:
            res = run_experiment(cfg, parallelism=nthreads)
            results.append(dataclasses.replace(res, seconds=0.0) if no_timing else res)
            click.echo(f"{cfg.experiment_id}: {res.seconds:.1f}s", err=True)
    fmt = fmt or ("json" if out and out.endswith(".json") else "csv")
    text = write_json(results) if fmt == "json" else write_csv(results)
    _emit(text, out)


if __name__ == "__main__":  # pragma: no cover
    main()
