"""Command-line interface: ``nsscurve fit | price | curve``."""
from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .curves import CurveParams, ModelKind, forward_rate, spot_rate
from .ingest import RowError, SchemaError, load_observations, write_exclusions
from .objective import ObjectiveSpec
from .optim import OPTIMIZERS, ObjectiveProblem, make_optimizer, multistart
from .pricing import BondSpec, MaturedInstrumentError, build_schedule, price

logger = logging.getLogger("nsscurve")

EXIT_OK, EXIT_OPTIMIZER, EXIT_INPUT = 0, 1, 2
CONFIG_BLOCKS = ("ga", "aco", "pso", "sa", "bfgs", "data")
DATA_KEYS = ("weight_cap", "face", "spread_floor", "basis")
TIMING_FIELDS = ("wall_time", "average_time", "total_time")
COMPARISON_COLUMNS = ("optimizer", "comparison", "objective_value", "mean_value", "min_value",
                      "coefficient_of_variation", "goodness_of_fit", "average_time",
                      "n_starts", "n_failed", "status")
BOND_COLUMNS = ("instrument_id", "issue_date", "maturity_date", "coupon_rate", "periodicity")


class InputError(Exception):
    """Bad user input; reported on stderr with exit code 2."""


def strip_timing(obj):
    """Copy of a report dict without wall-clock fields, for reproducibility checks."""
    if isinstance(obj, dict):
        return {k: strip_timing(v) for k, v in obj.items() if k not in TIMING_FIELDS}
    if isinstance(obj, list):
        return [strip_timing(v) for v in obj]
    return obj


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return "nan" if math.isnan(value) else repr(value)
    return str(value)


def _date(text: str) -> dt.date:
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid date {text!r}; expected YYYY-MM-DD") from None


def _require_file(path: Path) -> Path:
    if not path.is_file():
        raise InputError(f"file not found: {path}")
    return path


def _read_json(path: Path) -> dict:
    _require_file(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    return data


def load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    config = _read_json(path)
    unknown = set(config) - set(CONFIG_BLOCKS)
    if unknown:
        raise InputError(f"{path}: unknown config block(s) {sorted(unknown)}")
    bad = set(config.get("data", {})) - set(DATA_KEYS)
    if bad:
        raise InputError(f"{path}: unknown data key(s) {sorted(bad)}")
    return config


def load_params(path: Path) -> CurveParams:
    try:
        return CurveParams.from_dict(_read_json(path))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"{path}: invalid curve parameters ({exc})") from None


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def parse_grid(text: str) -> np.ndarray:
    """``"start:stop:step"`` to an inclusive tenor grid."""
    try:
        start, stop, step = (float(part) for part in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"grid must look like start:stop:step, got {text!r}") from None
    if not (step > 0 and stop >= start >= 0) or not all(map(math.isfinite, (start, stop, step))):
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}: need 0 <= start <= stop and step > 0")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def curve_rows(params: CurveParams, tenors: np.ndarray):
    spots = np.atleast_1d(spot_rate(params, tenors))
    fwds = np.atleast_1d(forward_rate(params, tenors))
    return [(float(t), float(s), float(f)) for t, s, f in zip(tenors, spots, fwds)]


def cmd_fit(args) -> int:
    out = Path(args.out)
    ops_path = _require_file(Path(args.operations))
    offers_path = _require_file(Path(args.offers))
    config = load_config(Path(args.config) if args.config else None)
    names = [n.strip() for n in args.optimizer.split(",") if n.strip()]
    unknown = [n for n in names if n not in OPTIMIZERS]
    if unknown or not names:
        raise InputError(f"unknown optimizer(s) {unknown}; choose from {sorted(OPTIMIZERS)}")
    if args.starts < 1:
        raise InputError("--starts must be at least 1")
    kind = ModelKind.parse(args.model)
    data = dict(config.get("data", {}))
    if args.weight_cap is not None:
        data["weight_cap"] = args.weight_cap
    try:
        optimizers = [make_optimizer(n, config.get(n)) for n in names]
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad optimizer configuration: {exc}") from None

    out.mkdir(parents=True, exist_ok=True)
    observations, exclusions = load_observations(ops_path, offers_path, args.valuation_date, **data)
    write_exclusions(exclusions, out / "exclusions.jsonl")
    if len(observations) < kind.dimension + 1:
        raise InputError(f"only {len(observations)} usable bonds after exclusions; "
                         f"{kind.value} needs at least {kind.dimension + 1} (see {out / 'exclusions.jsonl'})")
    problem = ObjectiveProblem.from_spec(ObjectiveSpec(tuple(observations), kind))

    reports, failures = [], []
    for opt in optimizers:
        try:
            report = multistart(opt, problem, args.starts, args.seed, args.jobs)
        except RuntimeError as exc:
            logger.error("%s", exc)
            failures.append(opt)
            continue
        reports.append(report)
        body = report.to_dict()
        body["model"] = kind.value
        body["valuation_date"] = args.valuation_date.isoformat()
        (out / f"report_{opt.name}.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")

    rows = []
    for report in sorted(reports, key=lambda r: (r.comparison_value, r.optimizer)):
        s = report.summary()
        rows.append([s[c] if c in s else "ok" for c in COMPARISON_COLUMNS])
    for opt in failures:
        rows.append([opt.name, opt.comparison] + [None] * (len(COMPARISON_COLUMNS) - 5)
                    + [args.starts, args.starts, "failed"])
    _write_csv(out / "comparison.csv", COMPARISON_COLUMNS, rows)

    if not reports:
        logger.error("every optimizer failed")
        return EXIT_OPTIMIZER
    best = min((r.best_run for r in reports), key=lambda run: run.best_value)
    (out / "best_params.json").write_text(json.dumps(best.params.to_dict(), indent=2) + "\n")
    grid = np.round(0.05 * np.arange(1, 401), 12)
    _write_csv(out / "curve_samples.csv", ("tenor_years", "spot_rate", "forward_rate"),
               curve_rows(best.params, grid))
    return EXIT_OK


def read_bonds(path: Path) -> list[BondSpec]:
    _require_file(path)
    bonds = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in BOND_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise InputError(f"{path}: missing column(s) {missing}")
        for i, row in enumerate(reader, start=2):
            try:
                nxt = (row.get("next_coupon_date") or "").strip()
                bonds.append(BondSpec(
                    id=row["instrument_id"], issue_date=dt.date.fromisoformat(row["issue_date"]),
                    maturity_date=dt.date.fromisoformat(row["maturity_date"]),
                    coupon_rate=float(row["coupon_rate"] or 0), periodicity=int(row["periodicity"] or 0),
                    face=float(row.get("face") or 100.0),
                    next_coupon_date=dt.date.fromisoformat(nxt) if nxt else None))
            except (ValueError, TypeError) as exc:
                raise InputError(f"{path}, row {i}: {exc}") from None
    return bonds


def cmd_price(args) -> int:
    params = load_params(Path(args.params))
    rows = []
    for bond in read_bonds(Path(args.bonds)):
        try:
            schedule = build_schedule(bond, args.valuation_date)
        except MaturedInstrumentError:
            logger.warning("skipping %s: matured on %s", bond.id, bond.maturity_date)
            continue
        rows.append((bond.id, price(schedule, params)))
    _emit(args.out, ("instrument_id", "dirty_price"), rows)
    return EXIT_OK


def cmd_curve(args) -> int:
    params = load_params(Path(args.params))
    _emit(args.out, ("tenor_years", "spot_rate", "forward_rate"), curve_rows(params, args.grid))
    return EXIT_OK


def _emit(out, header, rows) -> None:
    if out:
        _write_csv(Path(out), header, rows)
        return
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsscurve", description="Fit Nelson-Siegel / Svensson yield curves.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="multistart fit of one model with one or more optimizers")
    fit.add_argument("--model", required=True, choices=[k.value for k in ModelKind])
    fit.add_argument("--optimizer", required=True, help="comma-separated list, e.g. pso,sa,bfgs")
    fit.add_argument("--starts", type=int, default=10)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--valuation-date", type=_date, required=True)
    fit.add_argument("--operations", required=True, help="closed operations CSV")
    fit.add_argument("--offers", required=True, help="offers CSV")
    fit.add_argument("--config", help="JSON with ga/aco/pso/sa/bfgs/data blocks")
    fit.add_argument("--out", required=True, help="output directory")
    fit.add_argument("--weight-cap", type=float, help="maximum share of total weight per bond")
    fit.add_argument("--jobs", type=int, default=None, help="parallel runs (results do not depend on it)")
    fit.set_defaults(func=cmd_fit)

    pr = sub.add_parser("price", help="model dirty prices for a bonds CSV")
    pr.add_argument("--params", required=True)
    pr.add_argument("--bonds", required=True)
    pr.add_argument("--valuation-date", type=_date, required=True)
    pr.add_argument("--out", help="output CSV (default: stdout)")
    pr.set_defaults(func=cmd_price)

    cu = sub.add_parser("curve", help="spot and forward rates on a tenor grid")
    cu.add_argument("--params", required=True)
    cu.add_argument("--grid", type=parse_grid, default=parse_grid("0.05:20:0.05"),
                    help="start:stop:step in years, stop included")
    cu.add_argument("--out", help="output CSV (default: stdout)")
    cu.set_defaults(func=cmd_curve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, SchemaError, RowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
