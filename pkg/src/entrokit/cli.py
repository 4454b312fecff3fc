"""Command-line surface: ingestion, analysis subcommands, CSV/JSON output.

Every output embeds the full run configuration (seed included) so results
are reproducible from the artifact alone. CSV bodies are deterministic for
identical configurations; numeric cells carry 17 significant digits.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import dependence, draws, hmm, regress, simulate
from .apen import DEFAULT_M, DEFAULT_R_FRACTION, DEFAULT_WINDOW, apen_rolling
from .entropy import (
    GRASSBERGER,
    NAIVE,
    block_histogram,
    conditional_block_entropy,
    entropy_from_histogram,
)

TRANSFORMS = ("none", "log-return", "square")


@dataclass(frozen=True)
class TimeSeries:
    """Timestamp-aligned scalar series, sorted and duplicate-free."""

    timestamps: Tuple[datetime, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if len(self.timestamps) != values.size:
            raise ValueError("timestamps and values must have equal length")
        object.__setattr__(self, "values", values)


def _parse_timestamp(raw: str) -> datetime:
    try:
        return datetime.fromisoformat(raw.strip())
    except ValueError:
        raise ValueError(f"cannot parse timestamp {raw.strip()!r}") from None


def _read_rows(path: str):
    """Yield (line_number, cells) for data lines, skipping comments."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (row[0].lstrip().startswith("#")):
                continue
            yield lineno, [cell.strip() for cell in row]


def ingest_series(path: str, column: Optional[str] = None,
                  transform: str = "none") -> TimeSeries:
    """Read a (timestamp, value) series from CSV, sorted by timestamp.

    The value column is picked by header name when given, otherwise the
    second column is used. A leading header row is detected by failing to
    parse as data. Duplicate timestamps are rejected by name, parse errors
    carry the line number, and the optional transforms are log-return
    (consecutive differences of log prices, one row shorter) and square.
    """
    if transform not in TRANSFORMS:
        raise ValueError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")
    records = []
    value_idx = 1
    header_seen = False
    for lineno, cells in _read_rows(path):
        if len(cells) < 2:
            raise ValueError(f"{path} line {lineno}: expected at least two columns")
        try:
            ts = _parse_timestamp(cells[0])
            val = float(cells[value_idx])
        except ValueError as exc:
            if not header_seen and not records:
                # an unparseable first row is the header
                header_seen = True
                if column is not None:
                    if column not in cells:
                        raise ValueError(
                            f"{path}: column {column!r} not in header {cells}") from None
                    value_idx = cells.index(column)
                continue
            raise ValueError(f"{path} line {lineno}: {exc}") from None
        records.append((ts, val))
    if column is not None and not header_seen:
        raise ValueError(f"{path}: --column requires a header row")
    if not records:
        raise ValueError(f"{path}: no data rows found")
    records.sort(key=lambda r: r[0])
    for (t_prev, _), (t_next, _) in zip(records, records[1:]):
        if t_prev == t_next:
            raise ValueError(f"{path}: duplicate timestamp {t_prev.isoformat()}")

    stamps = tuple(r[0] for r in records)
    values = np.array([r[1] for r in records])
    if transform == "log-return":
        if np.any(values <= 0.0):
            raise ValueError("log-return transform requires positive prices")
        values = np.diff(np.log(values))
        stamps = stamps[1:]
    elif transform == "square":
        values = values ** 2
    return TimeSeries(timestamps=stamps, values=values)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _config_lines(args: argparse.Namespace) -> List[str]:
    skip = {"func"}
    items = sorted((k, v) for k, v in vars(args).items() if k not in skip)
    return [f"{key}={value}" for key, value in items]


def _write_csv(path: Optional[str], columns: Sequence[str],
               rows: Sequence[Dict], config: Sequence[str]):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        for line in config:
            out.write(f"# {line}\n")
        writer = csv.writer(out)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row.get(c)) for c in columns])
    finally:
        if path:
            out.close()


def _write_json(path: Optional[str], payload: Dict):
    out = open(path, "w") if path else sys.stdout
    try:
        json.dump(payload, out, sort_keys=True, indent=2)
        out.write("\n")
    finally:
        if path:
            out.close()


def _emit(args, columns: Sequence[str], rows: Sequence[Dict],
          extra: Optional[Dict] = None):
    config = _config_lines(args)
    if args.format == "json":
        payload = {"config": dict(item.split("=", 1) for item in config),
                   "rows": list(rows)}
        if extra:
            payload.update(extra)
        _write_json(args.out, payload)
        return
    _write_csv(args.out, columns, rows, config)
    if extra and "states" in extra:
        stem, ext = os.path.splitext(args.out)
        state_cols = extra["states_columns"]
        _write_csv(f"{stem}-states{ext or '.csv'}", state_cols, extra["states"], config)


def _parse_q1_list(raw: str) -> List[float]:
    return [float(part) for part in raw.split(",") if part]


def _parse_lag_range(raw: str) -> List[int]:
    lo, sep, hi = raw.partition(":")
    if not sep:
        return [int(lo)]
    start, stop = int(lo), int(hi)
    if stop < start:
        raise ValueError(f"invalid lag range {raw!r}")
    return list(range(start, stop + 1))


def _cmd_entropy(args) -> int:
    series = ingest_series(args.input, args.column, args.transform)
    rows = []
    for q1 in _parse_q1_list(args.q1):
        symbols = draws.discretize_by_draw(series.values, q1)
        h1 = block_histogram(symbols, 1)
        counts = np.bincount(symbols.symbols, minlength=3)
        rows.append({
            "q1": q1,
            "n_obs": int(symbols.symbols.size),
            "n_down_symbols": int(counts[0]),
            "n_neutral_symbols": int(counts[1]),
            "n_up_symbols": int(counts[2]),
            "h_naive_bits": entropy_from_histogram(h1, NAIVE).bits,
            "h_grassberger_bits": entropy_from_histogram(h1, GRASSBERGER).bits,
            "h_cond_m1_bits": conditional_block_entropy(symbols, 1),
        })
    columns = list(rows[0].keys())
    _emit(args, columns, rows)
    return 0


def _cmd_mi(args) -> int:
    x = ingest_series(args.input, args.column, args.transform)
    y = ingest_series(args.input2, args.column, args.transform)
    sx = draws.discretize_by_draw(x.values, args.q1)
    sy = draws.discretize_by_draw(y.values, args.q1)
    rows = []
    for lag in _parse_lag_range(args.lag_range):
        mi = dependence.mutual_information(sx, sy, lag)
        mean, stderr, q99 = dependence.mi_noise_floor(
            sx, sy, lag, n_shuffles=args.shuffles, seed=args.seed)
        rows.append({
            "lag": lag,
            "mi_bits": mi.bits,
            "shuffle_mean": mean,
            "shuffle_stderr": stderr,
            "shuffle_q99": q99,
        })
    _emit(args, list(rows[0].keys()), rows)
    return 0


def _cmd_te(args) -> int:
    x = ingest_series(args.input, args.column, args.transform)
    y = ingest_series(args.input2, args.column, args.transform)
    sx = draws.discretize_by_draw(x.values, args.q1)
    sy = draws.discretize_by_draw(y.values, args.q1)
    rows = []
    for m in range(1, args.m + 1):
        for l in range(1, args.l + 1):
            res = dependence.effective_transfer_entropy(
                sx, sy, m=m, l=l, n_shuffles=args.shuffles, seed=args.seed)
            rows.append({
                "m": m,
                "l": l,
                "te_bits": res.te_bits,
                "shuffle_mean": res.shuffle_mean,
                "shuffle_stderr": res.shuffle_stderr,
                "effective_te_bits": res.effective_te_bits,
                "rea_fraction": res.rea_fraction,
            })
    _emit(args, list(rows[0].keys()), rows)
    return 0


def _cmd_draws(args) -> int:
    series = ingest_series(args.input, args.column, args.transform)
    detected = draws.detect_draws(series.values)
    stats = draws.draw_statistics(detected)
    rows = []
    for sign, n, mean_mag, sd_mag, mean_len, sd_len, var_len, extreme in (
        (draws.DOWN, stats.n_down, stats.e_d, stats.sd_d, stats.e_len_d,
         stats.sd_len_d, stats.var_len_d, stats.max_drawdown),
        (draws.UP, stats.n_up, stats.e_u, stats.sd_u, stats.e_len_u,
         stats.sd_len_u, stats.var_len_u, stats.max_drawup),
    ):
        mags = [abs(d.magnitude) for d in detected if d.sign == sign]
        fit = draws.fit_stretched_exponential(mags) if len(mags) >= 50 else None
        rows.append({
            "sign": sign,
            "n_draws": n,
            "n_flat": stats.n_flat,
            "mean_magnitude": mean_mag,
            "sd_magnitude": sd_mag,
            "mean_length": mean_len,
            "sd_length": sd_len,
            "var_length": var_len,
            "max_magnitude": extreme.magnitude,
            "max_length": extreme.length,
            "chi": fit.chi if fit else None,
            "z": fit.z if fit else None,
            "chi_stderr": fit.chi_stderr if fit else None,
            "z_stderr": fit.z_stderr if fit else None,
            "loglik": fit.loglik if fit else None,
        })
    _emit(args, list(rows[0].keys()), rows)
    return 0


def _cmd_apen(args) -> int:
    series = ingest_series(args.input, args.column, args.transform)
    results = apen_rolling(series.values, args.window, args.m, args.r_fraction)
    offset = args.window - 1
    rows = [{
        "end_time": series.timestamps[offset + i].isoformat(),
        "apen_bits": res.bits,
        "r_abs": res.params.r,
    } for i, res in enumerate(results)]
    _emit(args, ["end_time", "apen_bits", "r_abs"], rows)
    return 0


def _cmd_hmm(args) -> int:
    if args.out is None and args.format == "csv":
        raise ValueError("hmm writes two tables; --out is required for csv output")
    series = ingest_series(args.input, args.column, args.transform)
    model, trace = hmm.fit_em(series.values, n_states=args.states, seed=args.seed)
    decoded = hmm.decode(model, series.values)
    report = hmm.state_report(model, decoded.states)
    n = model.n_states
    rows = []
    for i in range(n):
        row = {
            "state": i,
            "mu": float(model.means[i]),
            "sigma": float(model.sigmas[i]),
            "initial_prob": float(model.initial[i]),
            "stationary_prob": float(report.stationary[i]),
            "expected_duration": float(report.expected_durations[i]),
            "empirical_frequency": float(report.empirical_frequencies[i]),
        }
        for j in range(n):
            row[f"trans_to_{j}"] = float(model.transition.p[i, j])
        row.update({
            "loglik": decoded.loglik,
            "em_iterations": len(trace),
            "entropy_bits": report.entropy_bits,
            "entropy_rate_bits": report.entropy_rate_bits,
            "empirical_entropy_bits": report.empirical_entropy_bits,
            "empirical_cond_entropy_bits": report.empirical_conditional_entropy_bits,
        })
        rows.append(row)
    state_cols = ["time", "state"] + [f"p_state_{j}" for j in range(n)]
    state_rows = []
    for t, ts in enumerate(series.timestamps):
        srow = {"time": ts.isoformat(), "state": int(decoded.states[t])}
        for j in range(n):
            srow[f"p_state_{j}"] = float(decoded.smoothed[t, j])
        state_rows.append(srow)
    _emit(args, list(rows[0].keys()), rows,
          extra={"states": state_rows, "states_columns": state_cols})
    return 0


def _cmd_simulate(args) -> int:
    rows = simulate.figure_suite(args.suite, seed=args.seed)
    _emit(args, list(rows[0].keys()), rows)
    return 0


def _read_factor_table(path: str) -> Dict:
    """Factor CSV: date, mkt[, smb[, hml]]; missing factors count as zero."""
    table = {}
    header_seen = False
    for lineno, cells in _read_rows(path):
        try:
            date = _parse_timestamp(cells[0])
            values = [float(c) for c in cells[1:4]]
        except (ValueError, IndexError) as exc:
            if not header_seen and not table:
                header_seen = True
                continue
            raise ValueError(f"{path} line {lineno}: {exc}") from None
        values += [0.0] * (3 - len(values))
        table[date] = tuple(values)
    if not table:
        raise ValueError(f"{path}: no factor rows found")
    return table


def _read_z_table(path: str) -> Dict:
    table = {}
    header_seen = False
    for lineno, cells in _read_rows(path):
        try:
            table[_parse_timestamp(cells[0])] = float(cells[1])
        except (ValueError, IndexError) as exc:
            if not header_seen and not table:
                header_seen = True
                continue
            raise ValueError(f"{path} line {lineno}: {exc}") from None
    if not table:
        raise ValueError(f"{path}: no conditioning rows found")
    return table


def _cmd_regress(args) -> int:
    entities, dates, rets = [], [], []
    header_seen = False
    for lineno, cells in _read_rows(args.input):
        if len(cells) < 3:
            raise ValueError(f"{args.input} line {lineno}: expected entity, date, return")
        try:
            date = _parse_timestamp(cells[1])
            ret = float(cells[2])
        except ValueError as exc:
            if not header_seen and not entities:
                header_seen = True
                continue
            raise ValueError(f"{args.input} line {lineno}: {exc}") from None
        entities.append(cells[0])
        dates.append(date)
        rets.append(ret)
    if not entities:
        raise ValueError(f"{args.input}: no panel rows found")

    conditioning = {}
    for spec in args.z or []:
        name, sep, z_path = spec.partition("=")
        if not sep:
            raise ValueError(f"--z expects NAME=PATH, got {spec!r}")
        conditioning[name] = _read_z_table(z_path)
    panel = regress.Panel(entities, dates, rets,
                          _read_factor_table(args.factors), conditioning)

    rows = []
    for model_name in args.model.split(","):
        fit = regress.fit_model(panel, model_name.strip(),
                                prelagged=args.prelagged)
        for j, name in enumerate(fit.columns):
            rows.append({
                "model": model_name.strip(),
                "column": name,
                "coefficient": float(fit.coefficients[j]),
                "stderr": float(fit.stderrs[j]),
                "t_stat": float(fit.t_stats[j]),
                "p_value": float(fit.p_values[j]),
                "r2": fit.r2,
                "adj_r2": fit.adj_r2,
                "f_stat": fit.f_stat,
                "f_dof_num": fit.f_dof[0],
                "f_dof_den": fit.f_dof[1],
                "f_pvalue": fit.f_pvalue,
                "n_obs": fit.n_obs,
            })
    _emit(args, list(rows[0].keys()), rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entrokit",
        description="Information-theoretic analysis of financial return series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, input_required=True):
        if input_required:
            p.add_argument("--input", required=True, help="input CSV path")
            p.add_argument("--column", default=None, help="value column name")
            p.add_argument("--transform", choices=TRANSFORMS, default="none")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("entropy", help="symbol entropies over a q1 grid")
    common(p)
    p.add_argument("--q1", default="0.05,0.1,0.15,0.2,0.25",
                   help="comma-separated draw quantiles")
    p.set_defaults(func=_cmd_entropy)

    p = sub.add_parser("mi", help="mutual information over a lag grid")
    common(p)
    p.add_argument("--input2", required=True, help="second series CSV path")
    p.add_argument("--q1", type=float, default=0.05)
    p.add_argument("--lag-range", default="0:5", dest="lag_range")
    p.add_argument("--shuffles", type=int, default=100)
    p.set_defaults(func=_cmd_mi)

    p = sub.add_parser("te", help="effective transfer entropy grids (source: --input2)")
    common(p)
    p.add_argument("--input2", required=True, help="source series CSV path")
    p.add_argument("--q1", type=float, default=0.05)
    p.add_argument("--m", type=int, default=1, help="max own-history depth")
    p.add_argument("--l", type=int, default=1, help="max source-history depth")
    p.add_argument("--shuffles", type=int, default=100)
    p.set_defaults(func=_cmd_te)

    p = sub.add_parser("draws", help="draw statistics and stretched-exponential fits")
    common(p)
    p.set_defaults(func=_cmd_draws)

    p = sub.add_parser("apen", help="rolling approximate entropy trace")
    common(p)
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--m", type=int, default=DEFAULT_M)
    p.add_argument("--r-fraction", type=float, default=DEFAULT_R_FRACTION,
                   dest="r_fraction")
    p.set_defaults(func=_cmd_apen)

    p = sub.add_parser("hmm", help="fit a Gaussian-emission HMM and decode states")
    common(p)
    p.add_argument("--states", type=int, default=2)
    p.set_defaults(func=_cmd_hmm)

    p = sub.add_parser("simulate", help="deterministic figure suites")
    common(p, input_required=False)
    p.add_argument("--suite", required=True, choices=simulate.suite_names())
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("regress", help="pooled-OLS conditional factor models")
    common(p, input_required=False)
    p.add_argument("--input", required=True, help="panel CSV: entity, date, return")
    p.add_argument("--factors", required=True, help="factor CSV: date, mkt[, smb[, hml]]")
    p.add_argument("--z", action="append", default=[],
                   help="conditioning series as NAME=PATH (repeatable)")
    p.add_argument("--model", default=regress.CAPM,
                   help=f"comma-separated model names from {regress.MODELS}")
    p.add_argument("--prelagged", action="store_true",
                   help="conditioning series are already lagged")
    p.set_defaults(func=_cmd_regress)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
