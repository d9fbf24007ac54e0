"""Command line front end.

Every run writes ``manifest.json`` into ``--out`` together with its reports.
Exit codes: 0 all checks pass, 2 a mathematical check failed, 3 a resource
budget was hit, 4 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
EXIT_PASS, EXIT_FAIL, EXIT_RESOURCE, EXIT_USAGE = 0, 2, 3, 4

log = logging.getLogger("sp4verify")


class UsageError(ValueError):
    pass


class ResourceError(RuntimeError):
    pass


@dataclass
class RunManifest:
    subcommand: str
    parameters: dict
    seeds: dict = field(default_factory=dict)
    budgets: dict = field(default_factory=dict)
    output_directory: str = ""
    cache_directory: str | None = None
    wall_clock_seconds: float = 0.0
    passed: bool = False
    exit_code: int = EXIT_PASS
    checks: dict = field(default_factory=dict)
    files: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    def write(self, out: Path) -> Path:
        path = out / "manifest.json"
        payload = asdict(self)
        payload["python"] = platform.python_version()
        path.write_text(json.dumps(payload, indent=1, sort_keys=True, default=_jsonable) + "\n")
        return path


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, (set, tuple, np.ndarray)):
        return list(x)
    if isinstance(x, Path):
        return str(x)
    return str(x)


def write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps({"schema_version": SCHEMA_VERSION, **obj}, indent=1, sort_keys=True,
                               default=_jsonable) + "\n")
    return path


# ---------------------------------------------------------------------------
# hecke
# ---------------------------------------------------------------------------

def cmd_hecke(args, man: RunManifest, out: Path) -> None:
    from .hecke import algebra, identities
    from .hecke.cache import TableCache
    from .hecke.cosets import BudgetExceeded, is_prime

    p, rmax = args.p, args.r
    if not is_prime(p):
        raise UsageError(f"p = {p} is not prime")
    if rmax < 0:
        raise UsageError("r must be non-negative")
    cache = None if args.no_cache else TableCache(args.cache_dir)
    man.cache_directory = None if cache is None else str(cache.directory)
    man.budgets["candidates"] = args.budget
    man.seeds["homomorphism"] = args.seed
    algebra.set_store(algebra.TableStore(budget=args.budget, cache=cache))

    report: dict = {"p": p, "rmax": rmax}
    try:
        degrees = {}
        for r in range(rmax + 1):
            degrees[str(r)] = len(algebra.STORE.full(p, r)) if r else 1
        report["coset_counts"] = degrees
        if rmax >= 1:
            man.checks["degree T(p)"] = degrees["1"] == p ** 3 + p ** 2 + p + 1
        checks = identities.verify_identity_suite(p, rmax)
        report["identities"] = [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in checks]
        for c in checks:
            man.checks[c.name] = c.passed
        if args.table1:
            rows = identities.table_rows(p, rmax, recursion=not args.no_recursion)
            report["table1"] = [{"row": f"T^({t.r})_(0,{t.b})", "matches_reference": t.matches_reference,
                                 "matches_recursion": t.matches_recursion, "mismatches": t.mismatches(),
                                 "image": str(t.computed)} for t in rows]
            for t in rows:
                man.checks[f"table1 T^({t.r})_(0,{t.b}) reference"] = t.matches_reference
                man.checks[f"table1 T^({t.r})_(0,{t.b}) recursion"] = t.matches_recursion
        if rmax >= 2 and args.samples:
            rng = np.random.default_rng(args.seed)
            hom = identities.check_homomorphism(p, identities.random_pairs(p, args.samples, rmax, rng))
            report["homomorphism"] = {"name": hom.name, "passed": hom.passed, "detail": hom.detail}
            man.checks[hom.name] = hom.passed
    except BudgetExceeded as exc:
        raise ResourceError(str(exc)) from exc
    man.files.append(write_json(out / "hecke_report.json", report).name)


# ---------------------------------------------------------------------------
# spherical
# ---------------------------------------------------------------------------

WALL_DIRECTIONS = ((1.0, 0.0), (1.0, 1.0))


def cmd_spherical(args, man: RunManifest, out: Path) -> None:
    from .spherical import scans
    from .spherical.testfunction import (
        IM_BOUND,
        TestFunctionSpec,
        check_big,
        check_positivity,
        decay_order,
    )

    if args.lambda_max < 0 or args.lambda_step <= 0:
        raise UsageError("need lambda-max >= 0 and lambda-step > 0")
    man.seeds.update(c_grid=args.seed, validation=args.seed, test_function=args.seed)
    summary: dict = {}

    rows = scans.c_function_grid(args.c_points, seed=args.seed)
    worst = max(r[4] for r in rows)
    man.files.append(scans.write_csv(out / "c_function.csv", scans.C_HEADER, rows).name)
    wall = scans.wall_values()
    summary["c_function"] = {"points": len(rows), "max_rel_diff": worst, "max_wall_value": wall}
    man.checks["c-function product vs closed form <= 1e-10"] = worst <= 1e-10
    man.checks["closed c-function vanishes on walls"] = wall == 0.0

    dirs = WALL_DIRECTIONS if args.walls_only else scans.LAMBDA_DIRECTIONS
    scan = scans.decay_scan(args.lambda_max, args.lambda_step, dirs, refine=args.refine,
                            check_refine=args.refine * 4 / 3, validation=args.validation, seed=args.seed)
    man.files.append(scan.write(out / "decay_scan.csv").name)
    summary["decay_scan"] = scan.as_dict()
    man.checks["s <= 1 + 1e-6 at H = 0"] = scan.h0_max <= 1 + 1e-6
    man.checks["C_emp stable to 1% between rules"] = scan.stability <= 0.01
    if args.validation and args.lambda_max > 0:
        man.checks["off-grid s <= 1.5 C_emp"] = scan.validation_max <= 1.5 * scan.c_emp
    if not math.isnan(scan.far_slope):
        man.checks["far-region slope <= -0.45"] = scan.far_slope <= -0.45

    if not args.skip_test_function:
        base = TestFunctionSpec(tuple(args.mu), M=args.M)
        rng = np.random.default_rng(args.seed)
        pos = check_positivity(base, rng)

        def factory(mu):
            return TestFunctionSpec(mu, M=base.M, eps=base.eps, c_psi=base.c_psi)

        big = check_big(factory, np.linspace(0, 80, 17), np.linspace(-IM_BOUND, IM_BOUND, 21))
        orders = [decay_order(base, d) for d in ((1.0, 0.3), (1.0, 1.0), (1.0, 0.0))]
        summary["test_function"] = {"M": base.M, "eps": base.eps, "c_psi": base.c_psi,
                                    "positivity": pos.as_dict(), "big": big.as_dict(),
                                    "decay_orders": orders}
        man.checks["test function positivity"] = pos.passed
        man.checks["test function >= 1 on the three families"] = big.passed
        man.checks[f"decay order >= M/2 = {base.M // 2}"] = min(orders) >= base.M / 2

    for i in range(args.phase_probes):
        probe = scans.PhaseProbe.random(np.random.default_rng(args.seed + i))
        rep = scans.phase_probe(probe, seed=args.seed + i)
        summary.setdefault("phase_probes", []).append(rep.as_dict())
        man.checks[f"phase probe {i}"] = rep.passed
    if args.phase_probes:
        man.files.append(write_json(out / "phase_probe.json", {"probes": summary.pop("phase_probes")}).name)
    man.files.append(write_json(out / "spherical_report.json", summary).name)


# ---------------------------------------------------------------------------
# count
# ---------------------------------------------------------------------------

def parse_m_range(text: str) -> tuple[int, ...]:
    """``"a..b"`` (inclusive), ``"a..b:odd"`` or a comma separated list."""
    text = text.strip()
    odd = text.endswith(":odd")
    if odd:
        text = text[:-4]
    try:
        if ".." in text:
            a, b = (int(t) for t in text.split(".."))
            values = tuple(range(a, b + 1))
        else:
            values = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise UsageError(f"cannot parse m-range {text!r}") from exc
    if odd:
        values = tuple(m for m in values if m % 2)
    if not values:
        raise UsageError("empty m-range")
    if min(values) < 1:
        raise UsageError("m must be positive")
    return values


def _context(args):
    from .counting.enumerate import CountingContext
    from .symplectic import exp_cartan, random_k, random_n

    if args.g is None:
        return CountingContext.identity(), "identity"
    if args.g.startswith("random:"):
        seed = int(args.g.split(":", 1)[1])
        rng = np.random.default_rng(seed)
        g = random_k(rng) @ exp_cartan((0.12, 0.05)) @ random_n(rng, 0.15)
        return CountingContext(g), args.g
    try:
        g = np.array(json.loads(args.g), dtype=float)
    except (json.JSONDecodeError, ValueError) as exc:
        raise UsageError("--g must be a JSON 4x4 matrix or random:SEED") from exc
    if g.shape != (4, 4):
        raise UsageError("--g must be 4x4")
    try:
        return CountingContext(g), "matrix"
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_count(args, man: RunManifest, out: Path) -> None:
    from .counting.diophantine import four_square_count
    from .counting.enumerate import COUNT_HEADER, ScanConfig, naive_S, prop1_scan
    from .spherical.scans import write_csv

    m_values = parse_m_range(args.m)
    ctx, label = _context(args)
    try:
        config = ScanConfig(m_values, tuple(args.delta), budget=args.budget)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    man.budgets["enumeration"] = args.budget
    man.parameters["g"] = label
    is_identity = label == "identity"
    report = prop1_scan(ctx, config, lower_bound=four_square_count if is_identity else None)
    man.files.append(write_csv(out / "count.csv", COUNT_HEADER, report.rows).name)
    summary = report.as_dict()
    hits = [r for r in report.rows if r[4]]
    if hits:
        summary["budget_hits"] = [(r[0], r[1]) for r in hits]
    if report.lower_bound_ok is not None:
        man.checks["count >= 8 sigma(m) for odd m"] = report.lower_bound_ok
    man.checks["counts decrease with delta"] = report.monotone

    oracle = []
    for m in m_values:
        if m > args.oracle_max:
            continue
        for d in config.deltas:
            res = report.results.get((m, d))
            if res is None:
                continue
            same = res.keys() == naive_S(ctx, d, m).keys()
            oracle.append({"m": m, "delta": d, "count": len(res), "equal": same})
            man.checks[f"oracle m={m} delta={d}"] = same
    summary["oracle"] = oracle
    man.files.append(write_json(out / "count_report.json", summary).name)
    if hits:
        raise ResourceError(f"enumeration budget hit for {len(hits)} (m, delta) pairs")


# ---------------------------------------------------------------------------
# exponent
# ---------------------------------------------------------------------------

def cmd_exponent(args, man: RunManifest, out: Path) -> None:
    from .exponent import exponent_report

    if not (args.eta > 0 and args.B > 0):
        raise UsageError("eta and B must be positive")
    rep = exponent_report(args.eta, args.B)
    for line in rep.lines():
        print(line)
    man.checks["exponent < 2"] = rep.exponent < 2
    man.files.append(write_json(out / "exponent.json", rep.as_dict()).name)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sp4verify", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, name):
        sp.add_argument("--out", type=Path, default=Path("runs") / name, help="report directory")

    h = sub.add_parser("hecke", help="coset tables, Hecke identities and Satake images")
    common(h, "hecke")
    h.add_argument("-p", type=int, required=True)
    h.add_argument("-r", type=int, default=4, help="largest degree of coset tables")
    h.add_argument("--table1", action="store_true", help="compare Satake images with the reference table")
    h.add_argument("--no-recursion", action="store_true", help="skip the recursive second route for images")
    h.add_argument("--samples", type=int, default=10, help="random pairs for the homomorphism check")
    h.add_argument("--seed", type=int, default=0)
    h.add_argument("--budget", type=int, default=5_000_000, help="candidate budget for coset enumeration")
    h.add_argument("--cache-dir", type=Path, default=None)
    h.add_argument("--no-cache", action="store_true")

    s = sub.add_parser("spherical", help="spherical-function bounds, c-function and test function")
    common(s, "spherical")
    s.add_argument("--lambda-max", type=float, default=60.0)
    s.add_argument("--lambda-step", type=float, default=5.0)
    s.add_argument("--walls-only", action="store_true", help="only the wall directions of lambda")
    s.add_argument("--refine", type=float, default=1.0, help="quadrature nodes per unit phase")
    s.add_argument("--validation", type=int, default=12, help="random off-grid points")
    s.add_argument("--c-points", type=int, default=1000)
    s.add_argument("--mu", type=float, nargs=2, default=(6.0, 2.0))
    s.add_argument("-M", type=int, default=8, help="power of the sinc profile")
    s.add_argument("--skip-test-function", action="store_true")
    s.add_argument("--phase-probes", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("count", help="matrices near a conjugated lattice point")
    common(c, "count")
    grp = c.add_mutually_exclusive_group()
    grp.add_argument("--id", action="store_true", help="g = identity (default)")
    grp.add_argument("--g", help="JSON 4x4 matrix or random:SEED")
    c.add_argument("--m", default="1..30", help="a..b, a..b:odd or a comma list")
    c.add_argument("--delta", type=float, nargs="+", default=[1e-3])
    c.add_argument("--oracle-max", type=int, default=8)
    c.add_argument("--budget", type=int, default=2_000_000)

    e = sub.add_parser("exponent", help="exponent bookkeeping for the sup-norm bound")
    common(e, "exponent")
    e.add_argument("--eta", type=float, required=True)
    e.add_argument("-B", type=float, required=True)
    return parser


COMMANDS = {"hecke": cmd_hecke, "spherical": cmd_spherical, "count": cmd_count, "exponent": cmd_exponent}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out: Path = args.out
    out.mkdir(parents=True, exist_ok=True)
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
              if k not in ("command", "out", "verbose")}
    man = RunManifest(args.command, params, output_directory=str(out.resolve()))
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args, man, out)
        man.passed = all(man.checks.values())
        man.exit_code = EXIT_PASS if man.passed else EXIT_FAIL
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        man.exit_code = EXIT_USAGE
    except (ResourceError, MemoryError) as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        man.exit_code = EXIT_RESOURCE
    man.wall_clock_seconds = round(time.perf_counter() - start, 3)
    man.write(out)
    failed = [k for k, v in man.checks.items() if not v]
    for k in failed:
        print(f"FAIL {k}", file=sys.stderr)
    print(f"{args.command}: {len(man.checks) - len(failed)}/{len(man.checks)} checks passed, "
          f"exit {man.exit_code}, manifest {out / 'manifest.json'}")
    return man.exit_code


if __name__ == "__main__":
    sys.exit(main())
