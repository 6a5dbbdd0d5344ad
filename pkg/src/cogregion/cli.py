"""Command-line front end.

Every command writes data only (CSV frontiers, JSON reports). Exit codes:
0 success, 1 validation or verification failure, 2 inapplicable bound.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .core import RateRegion, hausdorff, pareto_frontier, write_region_csv
from .gaussian import DpcParams, GaussianChannel, costa_lambda
from .inner import SCHEMES, InnerBoundSpec, SuperpositionParams, joint_bounds, joint_corners, superposition_bounds, trace_frontier
from .outer import InapplicableBound, outer_contains, strong_condition_holds, trace_outer_frontier

log = logging.getLogger("cogregion")

EXIT_OK, EXIT_FAIL, EXIT_INAPPLICABLE = 0, 1, 2


class CliError(Exception):
    def __init__(self, msg: str, code: int = EXIT_FAIL):
        super().__init__(msg)
        self.code = code


def _load_channel(path) -> GaussianChannel:
    try:
        return GaussianChannel.from_json(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"bad channel file {path}: {exc}") from None


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _inner(ch: GaussianChannel, scheme: str, grid: int) -> RateRegion:
    if scheme == "bc":
        ch = ch.replace(p2=0.0)
    return trace_frontier(InnerBoundSpec(scheme, ch, grid=grid))


# ---------------------------------------------------------------------------
# commands


def cmd_inner(args) -> int:
    ch = _load_channel(args.channel)
    region = _inner(ch, args.scheme, args.grid)
    write_region_csv(region, args.out)
    print(f"{args.scheme}: {len(region.frontier)} vertices, "
          f"R1 max {region.r1_intercept:.6f}, R2 max {region.r2_intercept:.6f} -> {args.out}")
    return EXIT_OK


def cmd_outer(args) -> int:
    ch = _load_channel(args.channel)
    region = trace_outer_frontier(ch, args.steps)
    write_region_csv(region, args.out)
    print(f"strong outer: {len(region.frontier)} vertices, R1 max {region.r1_intercept:.6f}, "
          f"R2 max {region.r2_intercept:.6f} -> {args.out}")
    return EXIT_OK


def cmd_compare(args) -> int:
    ch = _load_channel(args.channel)
    out = _out_dir(args)
    curves = {"joint": _inner(ch, "joint", args.grid), "bc": _inner(ch, "bc", args.grid)}
    if ch.p2 > 0:
        curves["superposition"] = _inner(ch, "superposition", args.grid)
    for name, region in curves.items():
        write_region_csv(region, out / f"{name}.csv")
    if not strong_condition_holds(ch):
        log.warning("b^2 < 1: strong-interference outer bound omitted")
        return EXIT_OK
    outer = trace_outer_frontier(ch, args.steps)
    write_region_csv(outer, out / "outer.csv")
    ok = True
    for name in ("joint", "superposition"):
        if name not in curves:
            continue
        cmp = outer_contains(ch, curves[name], args.tol)
        ok &= cmp.subset_holds
        print(f"{name} inside outer: {cmp.subset_holds} (max violation {cmp.max_violation:.3g} bits)")
    return EXIT_OK if ok else EXIT_FAIL


def sweep_regions(ch: GaussianChannel, param: str, values, grid: int) -> dict[float, RateRegion]:
    return {v: _inner(ch.replace(**{param: v}), "joint", grid) for v in values}


def cmd_sweep(args) -> int:
    ch = _load_channel(args.channel)
    out = _out_dir(args)
    values = [float(v) for v in args.values]
    regions = sweep_regions(ch, args.param, values, args.grid)
    report = []
    for v, region in regions.items():
        write_region_csv(region, out / f"joint_{args.param}_{v:g}.csv")
        row = {args.param: v, "r1_intercept": region.r1_intercept, "r2_intercept": region.r2_intercept}
        if args.param == "p2":
            bc = _inner(ch, "bc", args.grid)
            row["hausdorff_to_bc"] = hausdorff(region, bc)
        report.append(row)
        print("  ".join(f"{k}={val:.6f}" for k, val in row.items()))
    if args.param == "p2":
        write_region_csv(_inner(ch, "bc", args.grid), out / "bc.csv")
    _write_json(out / "sweep.json", report)
    return EXIT_OK


def fme_check(samples: int, seed: int) -> dict:
    """Largest per-vertex gap between projected split systems and the eliminated forms."""
    from .fme import joint_system, project_to_r1r2, superposition_system
    from .inner import superposition_corners

    rng = np.random.default_rng(seed)
    worst = {"joint": 0.0, "superposition": 0.0}
    counts = {"joint": 0, "joint_infeasible": 0, "superposition": 0}
    while counts["joint"] + counts["joint_infeasible"] < samples:
        ch = GaussianChannel.from_squared_gains(*rng.uniform(0.1, 3.0, 2), *rng.uniform(0.5, 10.0, 2))
        lam = 1.5 * costa_lambda(ch)
        p = DpcParams(rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95), rng.uniform(0, lam), rng.uniform(0, lam))
        bd = joint_bounds(ch, p)
        proj = project_to_r1r2(joint_system(bd.private, bd.r1, bd.r2_side, bd.r2_sum))
        if proj.is_empty or not bd.feasible:
            if proj.is_empty != (not bd.feasible):
                worst["joint"] = float("inf")
            counts["joint_infeasible"] += 1
        else:
            counts["joint"] += 1
            worst["joint"] = max(worst["joint"], _vertex_gap(proj, pareto_frontier(joint_corners(ch, p))))

        sp = SuperpositionParams(rng.uniform(0, 1), rng.uniform(0, 1))
        sb = superposition_bounds(ch, sp)
        proj = project_to_r1r2(superposition_system(sb.private, sb.r1, sb.sum_rx1, sb.common))
        counts["superposition"] += 1
        worst["superposition"] = max(worst["superposition"],
                                     _vertex_gap(proj, pareto_frontier(superposition_corners(ch, sp))))
    return {"max_deviation": worst, "counts": counts}


def _vertex_gap(a: RateRegion, b: RateRegion) -> float:
    if len(a.frontier) != len(b.frontier):
        return max(hausdorff(a, b), 1.0)
    return float(np.max(np.abs(a.as_array() - b.as_array())))


def cmd_fme_verify(args) -> int:
    res = fme_check(args.samples, args.seed)
    for name, gap in res["max_deviation"].items():
        print(f"{name}: max vertex deviation {gap:.3g} bits")
    ok = all(g <= args.tol for g in res["max_deviation"].values())
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify_dmc(args) -> int:
    from .dmc import Dmc
    from .verify import dmc_battery

    if args.samples < 1:
        raise CliError("samples must be >= 1")
    dmc = None
    if args.dmc:
        try:
            dmc = Dmc.from_json(args.dmc)
        except (OSError, ValueError) as exc:
            raise CliError(f"bad DMC file {args.dmc}: {exc}") from None
    report = dmc_battery(seed=args.seed, samples=args.samples, dmc=dmc, tol=args.tol)
    out = _out_dir(args)
    _write_json(out / "verify_dmc.json", report)
    for name, res in report["checks"].items():
        status = "PASS" if res["passed"] else ("FAIL" if res["hard"] else "WARN")
        print(f"{status} {name} ({'hard' if res['hard'] else 'soft'}): {res['detail']}")
    return EXIT_OK if report["hard_failures"] == 0 else EXIT_FAIL


def cmd_lemma1(args) -> int:
    from .dmc import lemma1_search, lemma1_terms

    rng = np.random.default_rng(args.seed)
    if args.setup:
        cfg = json.loads(Path(args.setup).read_text())
        p_s, channel = np.asarray(cfg["p_s"], float), np.asarray(cfg["channel"], float)
    else:
        p_s = rng.dirichlet(np.ones(2))
        channel = rng.dirichlet(np.ones(2), size=(2, 2))
    rs = args.rs if args.rs is not None else 0.0
    rate, best = lemma1_search(p_s, channel, rs, card_u=args.card_u, levels=args.levels)
    terms = lemma1_terms(best)
    result = {"rs": rs, "rate": rate, "terms": terms,
              "p_s": p_s.tolist(), "channel": channel.tolist(),
              "p_u_given_s": best.p_u_given_s.tolist(), "f": best.f.tolist()}
    print(f"Rs = {rs:.6f}: best rate {rate:.9f} bits (H(S) = {terms['h_s']:.6f})")
    if args.out:
        _write_json(_out_dir(args) / "lemma1.json", result)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=1e-6, help="comparison tolerance in bits")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="cogregion", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("inner", parents=[common], help="trace an achievable region")
    s.add_argument("--scheme", choices=SCHEMES, default="joint")
    s.add_argument("--channel", required=True)
    s.add_argument("--grid", type=int, default=25)
    s.add_argument("--out", required=True, help="CSV file")
    s.set_defaults(func=cmd_inner)

    s = sub.add_parser("outer", parents=[common], help="strong-interference outer bound")
    s.add_argument("--channel", required=True)
    s.add_argument("--steps", type=int, default=129)
    s.add_argument("--out", required=True, help="CSV file")
    s.set_defaults(func=cmd_outer)

    s = sub.add_parser("compare", parents=[common], help="inner curves, BC baseline and outer bound")
    s.add_argument("--channel", required=True)
    s.add_argument("--grid", type=int, default=25)
    s.add_argument("--steps", type=int, default=129)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", parents=[common], help="joint region over a range of powers")
    s.add_argument("--channel", required=True)
    s.add_argument("--param", choices=("p1", "p2"), default="p2")
    s.add_argument("--values", nargs="+", required=True)
    s.add_argument("--grid", type=int, default=17)
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("fme-verify", parents=[common], help="check the eliminated region forms")
    s.add_argument("--samples", type=int, default=50)
    s.set_defaults(func=cmd_fme_verify, tol=1e-9)

    s = sub.add_parser("verify-dmc", parents=[common], help="discrete-channel invariant battery")
    s.add_argument("--samples", type=int, default=20)
    s.add_argument("--dmc", help="DMC JSON file (default: random channels)")
    s.add_argument("--out", default=".", help="output directory")
    s.set_defaults(func=cmd_verify_dmc)

    s = sub.add_parser("lemma1", parents=[common], help="binning against a codebook")
    s.add_argument("--setup", help='JSON {"p_s": [...], "channel": [[[p(y|x,s)]]]}')
    s.add_argument("--rs", type=float)
    s.add_argument("--card-u", type=int, default=2)
    s.add_argument("--levels", type=int, default=17)
    s.add_argument("--out")
    s.set_defaults(func=cmd_lemma1)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InapplicableBound as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
