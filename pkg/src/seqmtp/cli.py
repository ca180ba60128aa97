"""Command-line interface over the library.

Subcommands: ``corr`` (complete correlation structure), ``bounds``
(boundary table over the closed family), ``test`` (closed testing of
observed results), ``consonance`` (shortcut eligibility check),
``simulate`` (operating characteristics), ``mvn`` (rectangle
probability).  Exit codes: 0 success, 1 validation/input error,
2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from .boundaries import BoundaryTable, SubsetAnalysisBounds, check_consonance, full_table
from .closure import run_trial, shortcut_available
from .correlation import corr_from_overlap
from .design import DesignError, load_design, mask_of, validate
from .mvn import MvnProblem, mvn_cdf
from .simulate import Scenario, simulate

__all__ = ["main"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


class _CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def _round(x: float, precision: int) -> float:
    # round-half-even, which is Python's native rounding
    return round(float(x), precision)


def _fmt(x, precision: int) -> str:
    if x is None:
        return "-"
    return f"{_round(x, precision):.{precision}f}"


def _emit_table(header, rows, fmt: str, out):
    if fmt == "csv":
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    elif fmt == "markdown":
        out.write("| " + " | ".join(header) + " |\n")
        out.write("|" + "|".join("---" for _ in header) + "|\n")
        for row in rows:
            out.write("| " + " | ".join(str(c) for c in row) + " |\n")
    else:
        out.write(json.dumps([dict(zip(header, row)) for row in rows],
                             indent=2) + "\n")


def _load_design_checked(path):
    if not os.path.exists(path):
        raise _CliError(f"io: design file not found: {path}")
    try:
        spec = load_design(path)
    except DesignError as exc:
        raise _CliError(f"schema: {exc}")
    except OSError as exc:
        raise _CliError(f"io: {exc}")
    problems = validate(spec)
    if problems:
        raise _CliError("validation:\n" + "\n".join(str(v) for v in problems))
    return spec


def _subset_label(spec, members) -> str:
    return "&".join(spec.hypothesis_names[i - 1] for i in members)


# ---------------------------------------------------------------------------
# subcommands

def _cmd_corr(args) -> int:
    spec = _load_design_checked(args.design)
    corr = corr_from_overlap(spec.events)
    labels = corr.labels()
    header = ["statistic"] + labels
    rows = [[labels[r]] + [_fmt(corr.matrix[r, c], args.precision)
                           for c in range(len(labels))]
            for r in range(len(labels))]
    _emit_table(header, rows, args.format, sys.stdout)
    return EXIT_OK


def _parse_subsets(arg, m):
    if not arg:
        return None
    out = []
    for token in arg.split(";"):
        members = [int(x) for x in token.split(",") if x.strip()]
        if any(not 1 <= i <= m for i in members):
            raise _CliError(f"validation: subset {token!r} outside 1..{m}")
        out.append(mask_of(members))
    return out


def _table_rows(spec, table: BoundaryTable, precision: int):
    rows = []
    for mask in table.subsets():
        for k in range(1, table.n_analyses + 1):
            e = table.at(mask, k)
            row = [_subset_label(spec, e.members), k]
            for i in range(1, spec.m + 1):
                row.append(_fmt(e.comparator.get(i), precision))
            row.append(_fmt(e.inflation, 3))
            for i in range(1, spec.m + 1):
                row.append(_fmt(e.p_bounds.get(i), precision))
            rows.append(row)
    return rows


def _cmd_bounds(args) -> int:
    spec = _load_design_checked(args.design)
    subsets = _parse_subsets(args.subset, spec.m)
    try:
        table = full_table(spec, subsets=subsets)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        raise _CliError(f"numerical: {exc}", EXIT_NUMERICAL)
    if args.format == "json":
        doc = {
            "hypotheses": list(spec.hypothesis_names),
            "analyses": table.n_analyses,
            "entries": [
                {"subset": list(table.at(mask, k).members), "analysis": k,
                 "bounds": {str(i): table.at(mask, k).p_bounds[i]
                            for i in table.at(mask, k).members},
                 "bonferroni": {str(i): table.at(mask, k).comparator[i]
                                for i in table.at(mask, k).members},
                 "inflation": table.at(mask, k).inflation}
                for mask in table.subsets()
                for k in range(1, table.n_analyses + 1)],
        }
        sys.stdout.write(json.dumps(doc, indent=2) + "\n")
        return EXIT_OK
    header = (["intersection", "analysis"]
              + [f"bonf_{h}" for h in spec.hypothesis_names]
              + ["inflation"]
              + [f"bound_{h}" for h in spec.hypothesis_names])
    _emit_table(header, _table_rows(spec, table, args.precision),
                args.format, sys.stdout)
    return EXIT_OK


def _read_results(path, spec):
    """Observed-results CSV with header hypothesis,analysis,p (or z)."""
    if not os.path.exists(path):
        raise _CliError(f"io: results file not found: {path}")
    name_to_idx = {name: i + 1 for i, name in enumerate(spec.hypothesis_names)}
    for i in range(1, spec.m + 1):
        name_to_idx.setdefault(str(i), i)
    p_by_analysis = [dict() for _ in range(spec.n_analyses)]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        fields = [f.strip().lower() for f in (reader.fieldnames or [])]
        if "p" in fields:
            col, is_z = "p", False
        elif "z" in fields:
            col, is_z = "z", True
        else:
            raise _CliError("schema: results file needs a 'p' or 'z' column")
        for row in reader:
            row = {k.strip().lower(): v for k, v in row.items()}
            hyp = row["hypothesis"].strip()
            if hyp not in name_to_idx:
                raise _CliError(f"validation: unknown hypothesis {hyp!r}")
            k = int(row["analysis"])
            if not 1 <= k <= spec.n_analyses:
                raise _CliError(f"validation: analysis {k} outside design")
            val = float(row[col])
            if is_z:
                from scipy.special import ndtr
                val = float(1.0 - ndtr(val))
            p_by_analysis[k - 1][name_to_idx[hyp]] = val
    return p_by_analysis


def _table_from_json(doc, spec) -> BoundaryTable:
    table = BoundaryTable(spec.m, int(doc["analyses"]))
    for e in doc["entries"]:
        members = tuple(int(i) for i in e["subset"])
        table.entries[(mask_of(members), int(e["analysis"]))] = \
            SubsetAnalysisBounds(
                members=members,
                p_bounds={int(i): float(v) for i, v in e["bounds"].items()},
                comparator={int(i): float(v)
                            for i, v in e.get("bonferroni", {}).items()},
                alpha_target=0.0, inflation=float(e.get("inflation", 1.0)))
    return table


def _cmd_test(args) -> int:
    spec = _load_design_checked(args.design)
    p_by_analysis = _read_results(args.results, spec)
    if args.bounds:
        try:
            with open(args.bounds) as fh:
                table = _table_from_json(json.load(fh), spec)
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise _CliError(f"schema: cannot read bounds file: {exc}")
    else:
        try:
            table = full_table(spec)
        except (RuntimeError, np.linalg.LinAlgError) as exc:
            raise _CliError(f"numerical: {exc}", EXIT_NUMERICAL)
    state = run_trial(table, p_by_analysis)
    header = ["hypothesis", "rejected", "analysis"]
    rows = [[spec.hypothesis_names[i - 1],
             "yes" if i in state.elementary else "no",
             state.rejected_at.get(i, "-")]
            for i in range(1, spec.m + 1)]
    _emit_table(header, rows, args.format, sys.stdout)
    return EXIT_OK


def _cmd_consonance(args) -> int:
    spec = _load_design_checked(args.design)
    try:
        table = full_table(spec)
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        raise _CliError(f"numerical: {exc}", EXIT_NUMERICAL)
    violations = check_consonance(table)
    if not violations:
        sys.stdout.write("consonant: sequential shortcut available\n")
        return EXIT_OK
    header = ["superset", "subset", "hypothesis", "analysis",
              "superset_bound", "subset_bound"]
    rows = [[_subset_label(spec, v.superset), _subset_label(spec, v.subset),
             spec.hypothesis_names[v.hypothesis - 1], v.analysis,
             _fmt(v.superset_bound, args.precision),
             _fmt(v.subset_bound, args.precision)]
            for v in violations]
    _emit_table(header, rows, args.format, sys.stdout)
    return EXIT_VALIDATION


def _read_scenario(path) -> Scenario:
    if not os.path.exists(path):
        raise _CliError(f"io: scenario file not found: {path}")
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise _CliError(f"schema: scenario file is not valid JSON: {exc}")
    allowed = {"hazard_ratios", "prevalences", "control_hazard",
               "enroll_duration", "n_subjects", "interim_events",
               "final_events", "n_replications", "seed"}
    unknown = set(doc) - allowed
    if unknown:
        raise _CliError(f"schema: unknown scenario keys: {sorted(unknown)}")
    try:
        scn = Scenario(
            hazard_ratios=tuple(float(x) for x in doc["hazard_ratios"]),
            prevalences=tuple(float(x) for x in doc["prevalences"]),
            **{k: doc[k] for k in allowed - {"hazard_ratios", "prevalences"}
               if k in doc})
    except (KeyError, TypeError, ValueError) as exc:
        raise _CliError(f"schema: bad scenario: {exc}")
    problems = scn.validate()
    if problems:
        raise _CliError("validation: " + "; ".join(problems))
    return scn


def _cmd_simulate(args) -> int:
    scn = _read_scenario(args.scenario)
    spec = _load_design_checked(args.design)
    if args.reps:
        scn = Scenario(**{**scn.__dict__, "n_replications": args.reps})
    if args.seed is not None:
        scn = Scenario(**{**scn.__dict__, "seed": args.seed})
    threads = args.threads or int(os.environ.get("SEQMTP_THREADS", "1"))
    try:
        res = simulate(scn, spec, stratified=args.stratified, threads=threads)
    except ValueError as exc:
        raise _CliError(f"validation: {exc}")
    p = args.precision
    header = ["method"] + [f"rej_{h}" for h in spec.hypothesis_names] + \
             ["rej_any"] + [f"se_{h}" for h in spec.hypothesis_names] + ["se_any"]
    rows = []
    for label, r in (("Bonferroni", res.bonferroni), ("Parametric", res.parametric)):
        rows.append([label]
                    + [_fmt(r.rej[i], p) for i in (1, 2, 3)]
                    + [_fmt(r.rej_any, p)]
                    + [_fmt(r.se[i], p) for i in (1, 2, 3)]
                    + [_fmt(r.se_any, p)])
    _emit_table(header, rows, args.format, sys.stdout)
    return EXIT_OK


def _cmd_mvn(args) -> int:
    upper = [float(x) for x in args.upper.split(",")]
    d = len(upper)
    if args.corr:
        if not os.path.exists(args.corr):
            raise _CliError(f"io: correlation file not found: {args.corr}")
        mat = np.loadtxt(args.corr, delimiter=",", ndmin=2)
    elif args.rho is not None:
        mat = np.full((d, d), args.rho)
        np.fill_diagonal(mat, 1.0)
    else:
        mat = np.eye(d)
    if mat.shape != (d, d):
        raise _CliError(
            f"validation: correlation is {mat.shape}, expected {(d, d)}")
    try:
        res = mvn_cdf(MvnProblem(
            upper=np.asarray(upper), correlation=mat,
            abs_tol=args.abs_tol, seed=args.seed))
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise _CliError(f"numerical: {exc}", EXIT_NUMERICAL)
    doc = {"probability": _round(res.probability, args.precision),
           "error_estimate": res.error_estimate,
           "converged": res.converged,
           "evaluations": res.evaluations}
    sys.stdout.write(json.dumps(doc, indent=2) + "\n")
    return EXIT_OK if res.converged else EXIT_NUMERICAL


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="seqmtp",
        description="Correlation-exploiting group-sequential multiple testing")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, design=True):
        if design:
            p.add_argument("--design", required=True, help="design JSON file")
        p.add_argument("--format", choices=("csv", "json", "markdown"),
                       default="csv")
        p.add_argument("--precision", type=int, default=4)

    p = sub.add_parser("corr", help="complete correlation structure")
    common(p)

    p = sub.add_parser("bounds", help="boundary table for the closed family")
    common(p)
    p.add_argument("--subset", default="",
                   help="restrict to subsets, e.g. '1,2,3;1,2'")

    p = sub.add_parser("test", help="closed testing of observed results")
    common(p)
    p.add_argument("--results", required=True,
                   help="CSV with header hypothesis,analysis,p (or z)")
    p.add_argument("--bounds", default="",
                   help="bounds JSON from a prior `bounds --format json` run")

    p = sub.add_parser("consonance", help="check the sequential shortcut")
    common(p)

    p = sub.add_parser("simulate", help="operating characteristics")
    common(p)
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--reps", type=int, default=0)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=0,
                   help="worker processes (default SEQMTP_THREADS or 1)")
    p.add_argument("--stratified", action="store_true",
                   help="stratify the logrank test by biomarker cell")

    p = sub.add_parser("mvn", help="multivariate normal rectangle probability")
    common(p, design=False)
    p.add_argument("--upper", required=True, help="comma-separated limits")
    p.add_argument("--corr", default="", help="correlation matrix CSV")
    p.add_argument("--rho", type=float, default=None,
                   help="equicorrelation instead of a matrix file")
    p.add_argument("--abs-tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=20260826)
    return ap


_COMMANDS = {"corr": _cmd_corr, "bounds": _cmd_bounds, "test": _cmd_test,
             "consonance": _cmd_consonance, "simulate": _cmd_simulate,
             "mvn": _cmd_mvn}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    if not 1 <= args.precision <= 12:
        print("validation: precision must be in [1, 12]", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args)
    except _CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
