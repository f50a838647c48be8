"""Command-line harness: verification suite and seeded experiments.

Every experiment writes a delimited report (CSV by default) plus a rendered
figure next to it, all under the output directory; a JSON config file can
preset any flag, with explicit flags winning.  All randomness flows from the
single seed, so reruns are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
from typing import Optional

from . import plotting
from .fourier_cube import envelope, f_from_conditional, level_weights
from .fourier_omega import (
    REPORT_CSV_HEADER,
    hypercontractivity_report,
    level_d_report,
    level_span_function,
    matchings_of_size,
)
from .globalness import (
    OmegaSubset,
    Rectangle,
    decompose,
    decomposition_potential_sides,
    decomposition_trace_records,
    rectangle_is_global,
)
from .matchings import EMPTY_RESTRICTION, EnumerationCapError, space
from .protocol import (
    advantage,
    classify_leaves,
    no_mass,
    random_tree,
    refine,
    trace_advantage,
    trace_csv_rows,
    verify_global_trace,
    yes_mass_pair,
)
from .reports import CHECK_CSV_HEADER, write_rows
from .streaming import GAP_CSV_HEADER, KEEP_CROSSING, KEEP_POSITIVE, gap_experiment
from .verify import run_verification_suite

DEFAULTS = {
    "verify": {"n": 6, "m": 2, "K": 2, "tolerance": 1e-12},
    "gap": {"n": 16, "m": 4, "K": 8, "trials": 200, "convention": KEEP_CROSSING},
    "decay": {"n": 8, "m": 2, "density": 0.5},
    "leveld": {"n": 10, "m": 1, "d": 1, "density": 0.5},
    "hyper": {"n": 10, "m": 1, "d": 1, "q": 2, "r": 2.0},
    "discrepancy": {"n": 4, "m": 1, "K": 2, "trials": 50},
    "decompose": {"n": 6, "m": 2, "density": 0.5},
    "refine": {"n": 4, "m": 1, "K": 2, "depth": 3},
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dihplab",
        description="Exact-identity checks and experiments on the "
        "hidden-partition communication game.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--seed", type=int, default=None, help="root seed (default 1)")
        p.add_argument("--out", type=str, default=None, help="output directory")
        p.add_argument("--format", choices=("csv", "jsonl"), default=None)
        p.add_argument("--cap", type=int, default=None, help="enumeration cap")
        p.add_argument("--config", type=str, default=None, help="JSON config file")
        p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p = sub.add_parser("verify", help="run the exact-identity suite")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--tolerance", type=float, default=None)

    p = sub.add_parser("gap", help="planted vs uniform cut-value experiment")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument(
        "--convention", choices=(KEEP_CROSSING, KEEP_POSITIVE), default=None
    )

    p = sub.add_parser("decay", help="coefficient decay of a random conditional")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--density", type=float, default=None)

    p = sub.add_parser("leveld", help="projected level-d inequality report")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--density", type=float, default=None)

    p = sub.add_parser("hyper", help="derivative-based moment inequality report")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--q", type=int, default=None)
    p.add_argument("--r", type=float, default=None)

    p = sub.add_parser("discrepancy", help="yes/no masses of random rectangles")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)

    p = sub.add_parser("decompose", help="trace one greedy decomposition")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--density", type=float, default=None)

    p = sub.add_parser("refine", help="refine a random tree into a global protocol")
    common(p)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--K", type=int, default=None)
    p.add_argument("--depth", type=int, default=None)

    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge flag values over config-file values over built-in defaults."""
    merged = dict(DEFAULTS.get(args.command, {}))
    merged.update({"seed": 1, "out": "reports", "format": "csv"})
    if args.config:
        with open(args.config) as fh:
            file_cfg = json.load(fh)
        if not isinstance(file_cfg, dict):
            raise SystemExit("config file must hold a JSON object")
        merged.update(file_cfg)
    for key, value in vars(args).items():
        if key in ("command", "config", "no_plot"):
            continue
        if value is not None:
            merged[key] = value
    merged["plot"] = not args.no_plot
    _validate(args.command, merged)
    return merged


def _validate(command: str, cfg: dict) -> None:
    checks = {
        "n": lambda v: v >= 2,
        "m": lambda v: v >= 0,
        "K": lambda v: v >= 1,
        "trials": lambda v: v >= 1,
        "depth": lambda v: v >= 0,
        "density": lambda v: 0 < v <= 1,
        "d": lambda v: v >= 0,
        "q": lambda v: v >= 1,
        "r": lambda v: v > 0,
        "seed": lambda v: True,
        "tolerance": lambda v: v >= 0,
        "cap": lambda v: v >= 1,
    }
    for key, rule in checks.items():
        if key in cfg and cfg[key] is not None and not rule(cfg[key]):
            raise SystemExit(f"invalid value for --{key}: {cfg[key]!r}")
    if "n" in cfg and "m" in cfg and 2 * cfg["m"] > cfg["n"]:
        raise SystemExit(f"invalid shape: need 2m <= n, got n={cfg['n']} m={cfg['m']}")


def _make_space(cfg: dict):
    if cfg.get("cap"):
        return space(cfg["n"], cfg["m"], cfg["cap"])
    return space(cfg["n"], cfg["m"])


def _out_base(cfg: dict, name: str) -> str:
    os.makedirs(cfg["out"], exist_ok=True)
    return os.path.join(cfg["out"], name)


def _random_subset(sp, rng: random.Random, density: float) -> OmegaSubset:
    size = max(1, round(density * sp.count))
    members = frozenset(rng.sample(sorted(sp.all_indices()), size))
    return OmegaSubset(sp, EMPTY_RESTRICTION, members)


def cmd_verify(cfg: dict) -> int:
    report = run_verification_suite(
        cfg["n"], cfg["m"], cfg["K"], cfg["seed"], cfg["tolerance"]
    )
    report.print_lines()
    print(report.summary())
    base = _out_base(cfg, "verify")
    write_rows(base, CHECK_CSV_HEADER, (r.as_csv_row() for r in report.records), cfg["format"])
    return 0 if report.ok else 1


def cmd_gap(cfg: dict) -> int:
    rng = random.Random(cfg["seed"])
    rep = gap_experiment(
        cfg["n"], cfg["m"], cfg["K"], cfg["trials"], cfg["convention"], rng
    )
    rows = [r.as_csv_row() for r in rep.rows]
    base = _out_base(cfg, "gap")
    path = write_rows(base, GAP_CSV_HEADER, rows, cfg["format"])
    if cfg["plot"]:
        plotting.plot_gap(rows, base + ".png")
    print(
        f"wrote {path}: mean planted ratio {rep.mean_ratio('yes'):.4f}, "
        f"mean uniform ratio {rep.mean_ratio('no'):.4f}, "
        f"separation {rep.separation:.4f}"
    )
    return 0


DECAY_CSV_HEADER = ("d", "weight", "envelope", "pass")


def cmd_decay(cfg: dict) -> int:
    import math

    rng = random.Random(cfg["seed"])
    sp = _make_space(cfg)
    A = _random_subset(sp, rng, cfg["density"])
    f = f_from_conditional(A)
    weights = level_weights(f)
    w = math.log2(sp.count / A.size) if A.size < sp.count else 0.0
    w_half = max(w / 2, 1e-9)
    rows = []
    for d in range(0, sp.n // 2 + 1):
        weight = float(weights[0]) if d == 0 else float(weights[2 * d])
        bound = 0.0 if d == 0 else (2.0**-d) * envelope(sp.n, d, w_half)
        rows.append((d, weight, bound, weight <= bound + 1e-12))
    base = _out_base(cfg, "decay")
    path = write_rows(base, DECAY_CSV_HEADER, rows, cfg["format"])
    if cfg["plot"]:
        plotting.plot_decay(rows, base + ".png")
    holds = sum(1 for r in rows if r[3])
    print(f"wrote {path}: {holds}/{len(rows)} levels within the envelope (report-only)")
    return 0


def cmd_leveld(cfg: dict) -> int:
    rng = random.Random(cfg["seed"])
    sp = _make_space(cfg)
    A = _random_subset(sp, rng, cfg["density"])
    rows = [level_d_report(A, d).as_csv_row() for d in range(0, cfg["d"] + 1)]
    base = _out_base(cfg, "leveld")
    path = write_rows(base, REPORT_CSV_HEADER, rows, cfg["format"])
    if cfg["plot"]:
        plotting.plot_inequality(rows, base + ".png", "Projected level-d inequality")
    print(f"wrote {path} (report-only)")
    return 0


def cmd_hyper(cfg: dict) -> int:
    rng = random.Random(cfg["seed"])
    sp = _make_space(cfg)
    coeffs = {
        S: rng.uniform(-1, 1)
        for S in matchings_of_size(sp.ground.vertices, cfg["d"])
    }
    f = level_span_function(sp, coeffs)
    rows = [
        hypercontractivity_report(f, cfg["d"], q, cfg["r"]).as_csv_row()
        for q in range(1, cfg["q"] + 1)
    ]
    base = _out_base(cfg, "hyper")
    path = write_rows(base, REPORT_CSV_HEADER, rows, cfg["format"])
    if cfg["plot"]:
        plotting.plot_inequality(rows, base + ".png", "Derivative-based moment bound")
    print(f"wrote {path} (report-only)")
    return 0


DISCREPANCY_CSV_HEADER = (
    "rect",
    "mass_no",
    "mass_yes",
    "mass_yes_direct",
    "abs_gap",
    "is_global",
)


def cmd_discrepancy(cfg: dict) -> int:
    rng = random.Random(cfg["seed"])
    sp = _make_space(cfg)
    rows = []
    for t in range(cfg["trials"]):
        factors = []
        for _ in range(cfg["K"]):
            size = rng.randrange(1, sp.count + 1)
            members = frozenset(rng.sample(sorted(sp.all_indices()), size))
            factors.append(OmegaSubset(sp, EMPTY_RESTRICTION, members))
        R = Rectangle(tuple(factors))
        formula, direct = yes_mass_pair(R)
        mass = no_mass(R)
        rows.append(
            (
                t,
                float(mass),
                float(formula),
                float(direct),
                abs(float(formula - mass)),
                rectangle_is_global(R),
            )
        )
        if formula != direct:
            raise SystemExit(f"rectangle {t}: formula and direct masses differ")
    base = _out_base(cfg, "discrepancy")
    path = write_rows(base, DISCREPANCY_CSV_HEADER, rows, cfg["format"])
    if cfg["plot"]:
        plotting.plot_discrepancy(rows, base + ".png")
    print(f"wrote {path}: {len(rows)} rectangles, formula == direct on all")
    return 0


def cmd_decompose(cfg: dict) -> int:
    rng = random.Random(cfg["seed"])
    sp = _make_space(cfg)
    A = _random_subset(sp, rng, cfg["density"])
    pieces = decompose(A)
    records = list(decomposition_trace_records(A, pieces))
    base = _out_base(cfg, "decompose")
    path = base + ".jsonl"
    with open(path, "w") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")
    if cfg["plot"]:
        plotting.plot_decompose(records, base + ".png")
    lhs, rhs = decomposition_potential_sides(A, pieces)
    print(
        f"wrote {path}: {len(pieces)} pieces, weighted potential "
        f"{lhs:.4f} <= {rhs:.4f}"
    )
    return 0


REFINE_CSV_HEADER = ("round", "rectangle", "zeta_size", "potential", "mass_no", "mass_yes")


def cmd_refine(cfg: dict) -> int:
    rng = random.Random(cfg["seed"])
    sp = _make_space(cfg)
    pi = random_tree(sp, cfg["K"], cfg["depth"], rng)
    trace = refine(pi)
    rows = list(trace_csv_rows(trace))
    base = _out_base(cfg, "refine")
    path = write_rows(base, REFINE_CSV_HEADER, rows, cfg["format"])
    if cfg["plot"]:
        plotting.plot_refine(rows, base + ".png")
    rep = verify_global_trace(trace)
    adv_before = advantage(pi)
    adv_after = trace_advantage(trace)
    buckets = classify_leaves(trace)
    print(
        f"wrote {path}: advantage {float(adv_before):.6f} -> "
        f"{float(adv_after):.6f}, trace "
        f"{'valid' if rep.ok else 'INVALID'}, max round growth "
        f"{rep.max_round_growth:.4f}"
    )
    print(
        "leaf mass by bucket: high-potential "
        f"{buckets['mass_high_potential']:.4f}, tangled "
        f"{buckets['mass_tangled']:.4f}, clean {buckets['mass_clean']:.4f}"
    )
    return 0 if rep.ok and adv_after >= adv_before else 1


COMMANDS = {
    "verify": cmd_verify,
    "gap": cmd_gap,
    "decay": cmd_decay,
    "leveld": cmd_leveld,
    "hyper": cmd_hyper,
    "discrepancy": cmd_discrepancy,
    "decompose": cmd_decompose,
    "refine": cmd_refine,
}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg = resolve_config(args)
    try:
        return COMMANDS[args.command](cfg)
    except EnumerationCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
