"""Command-line entry point: ``python -m lwpir <command> ...``.

Every command writes its outputs plus ``manifest.json`` (argument echo,
library versions, seeds) into ``--out``.
"""
from __future__ import annotations

import argparse
import json
import platform
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .asymptotic import asymptotic_curve, symmetric_family_solve
from .compressors import (
    CompressorSpec,
    catalog,
    catalog_json,
    kv_average_distortion,
    kv_wpir_lc_curve,
    sa_search,
    two_file_pool,
)
from .lp_core import curves_to_csv, scheme_from_solution, tradeoff_sweep
from .ratedist import RateDistortionCurve, TradeoffCurve, pwl_approximate, uniform_grid
from .response_enum import (
    DEFAULT_CAP,
    EnumerationCapError,
    canonical_partitions,
    equivalence_reduce,
    partition_responses,
    streaming_vertex_pool,
    vertex_filter,
)
from .schemes import (
    Scheme,
    block_split,
    evaluate,
    file_subset_compose,
    reencode_joint,
    simulate,
    symmetrize,
    time_share,
)
from .source_coding import ResponseFunction, ml_reconstruct


def parse_number(text, exact):
    v = Fraction(text)
    return v if exact else float(v)


def parse_grid(text, exact):
    """``start:stop:count`` or a comma list; values may be fractions."""
    if ":" in text:
        a, b, n = text.split(":")
        a, b, n = Fraction(a), Fraction(b), int(n)
        if n < 2:
            raise argparse.ArgumentTypeError("grid needs at least two points")
        vals = [a + (b - a) * i / (n - 1) for i in range(n)]
    else:
        vals = [Fraction(v) for v in text.split(",") if v.strip()]
    return vals if exact else [float(v) for v in vals]


def _versions():
    import numba
    import numpy
    import scipy

    return {
        "lwpir": __version__, "python": platform.python_version(),
        "numpy": numpy.__version__, "scipy": scipy.__version__, "numba": numba.__version__,
    }


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    return v


def write_manifest(out, args, outputs, seeds=None):
    cfg = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k != "func"}
    manifest = {"command": args.command, "config": cfg, "versions": _versions(), "seeds": seeds or {},
                "outputs": sorted(outputs)}
    path = Path(out) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_pool(spec, M, beta, symmetry="none"):
    """Response pool from 'enumerate', 'catalog' or a JSON file of responses."""
    if spec == "enumerate":
        n = 2 ** (M * beta)
        if n > DEFAULT_CAP:
            raise EnumerationCapError(
                f"exhaustive enumeration for M*beta = {M * beta} is out of reach; "
                "use --pool catalog, a saved pool file, or the enumerate-pool command"
            )
        if symmetry == "full":
            cands = equivalence_reduce(
                (ml_reconstruct(b, 2, M, beta) for b in canonical_partitions(2, M, beta)), "full", M
            )
            # file-permuted images carry no partition, so rebuild them by relabeling
            pts = [c.c for c in cands]
            idx = vertex_filter(pts)
            return [_materialize(cands[i], M, beta) for i in idx]
        cands = equivalence_reduce(partition_responses(2, M, beta))
        idx = vertex_filter([c.c for c in cands])
        return [cands[i].source for i in idx]
    if spec == "catalog":
        if (M, beta) == (2, 2):
            return two_file_pool()
        if (M, beta) == (1, 4):
            return [c.response for c in catalog(1)]
        raise ValueError("the catalog covers M=2, beta=2 and M=1, beta=4")
    data = json.loads(Path(spec).read_text())
    return [ResponseFunction.from_json(o) for o in data]


def _materialize(cand, M, beta):
    from .schemes import permute_files, single_query_scheme

    src = cand.source
    if isinstance(src, tuple) and src[0] == "file-permuted":
        _, perm, rf = src
        return permute_files(single_query_scheme(rf), perm).responses[0]
    return src


def cmd_tradeoff_exact(args):
    out = _outdir(args)
    pool = load_pool(args.pool, args.files, args.beta, args.symmetry)
    exact = args.exact_rational
    grid = parse_grid(args.distortion_grid, exact)
    curves, outputs = [], ["curve.csv"]
    (out / "schemes").mkdir(exist_ok=True)
    for Ltxt in args.leakage:
        L = parse_number(Ltxt, exact)
        curve, sols = tradeoff_sweep(pool, args.files, L, grid, exact=exact or None, label=f"L={Ltxt}",
                                     return_solutions=True)
        curves.append(curve)
        for i, sol in enumerate(sols):
            if not sol.ok:
                continue
            name = f"schemes/L{_slug(Ltxt)}_D{i:03d}.json"
            (out / name).write_text(scheme_from_solution(pool, sol).dumps() + "\n")
            outputs.append(name)
    (out / "curve.csv").write_text(curves_to_csv(curves))
    write_manifest(out, args, outputs)
    return curves


def _slug(text):
    return str(text).replace("/", "_")


def _curve_from_arg(text):
    if text == "binary":
        return RateDistortionCurve.binary()
    if text.startswith("kary:"):
        return RateDistortionCurve.kary(int(text[5:]))
    raise ValueError("curve must be 'binary' or 'kary:K'")


def cmd_tradeoff_asymptotic(args):
    out = _outdir(args)
    curve = _curve_from_arg(args.curve)
    pw, err = pwl_approximate(curve, uniform_grid(curve, args.grid_points))
    grid = parse_grid(args.distortion_grid, False)
    curves, params = [], {}
    for Ltxt in args.leakage:
        L = float(Fraction(Ltxt))
        method = {"auto": "auto", "symmetric": "symmetric-family", "profile": "profile-lp"}[args.method]
        c, p = asymptotic_curve(args.files, pw if method != "auto" else curve, L, grid, method=method,
                                label=f"L={Ltxt}")
        curves.append(c)
        params[Ltxt] = p
    (out / "curve.csv").write_text(curves_to_csv(curves))
    (out / "parameters.json").write_text(json.dumps({"pwl_error_bound": err, "solutions": params}, indent=1) + "\n")
    write_manifest(out, args, ["curve.csv", "parameters.json"])
    return curves


def load_compressors(spec):
    if spec == "catalog":
        return catalog(1)
    return [CompressorSpec.from_json(o) for o in json.loads(Path(spec).read_text())]


def cmd_tradeoff_compressors(args):
    """Subset-request schemes built from per-file compressors."""
    from .figures import sa_pool_curve

    out = _outdir(args)
    pw = sa_pool_curve(load_compressors(args.pool))
    grid = parse_grid(args.distortion_grid, False)
    curves = []
    for Ltxt in args.leakage:
        L = float(Fraction(Ltxt))
        pts = []
        for D in grid:
            sol = symmetric_family_solve(args.files, pw, L, D)
            if sol.ok:
                pts.append((D, sol.rate))
        curves.append(TradeoffCurve(tuple(pts), L, f"L={Ltxt}"))
    (out / "curve.csv").write_text(curves_to_csv(curves))
    write_manifest(out, args, ["curve.csv"])
    return curves


def cmd_compressor_search(args):
    """One search per rate; finished rates are kept in the output as a checkpoint."""
    out = _outdir(args)
    path = out / "compressors.json"
    done = {}
    if path.exists():
        for o in json.loads(path.read_text()):
            c = CompressorSpec.from_json(o)
            done[(c.beta_in, c.rate)] = c
    seeds = {}
    for Rtxt in args.rate:
        R = Fraction(Rtxt)
        seeds[Rtxt] = args.seed
        if (args.beta, R) in done:
            continue
        res = sa_search(args.beta, R, iterations=args.iters, restarts=args.restarts, seed=args.seed)
        done[(args.beta, R)] = res.spec
        path.write_text(catalog_json(sorted(done.values(), key=lambda c: (c.beta_in, c.rate))) + "\n")
    if not path.exists():
        path.write_text(catalog_json(sorted(done.values(), key=lambda c: (c.beta_in, c.rate))) + "\n")
    write_manifest(out, args, ["compressors.json"], seeds)
    return list(done.values())


def cmd_kv_bound(args):
    out = _outdir(args)
    rates = parse_grid(args.rate, False)
    lines = ["beta,rate,distortion"]
    for b in args.beta:
        for r in rates:
            lines.append(f"{b},{r:.12g},{kv_average_distortion(b, r):.12g}")
    outputs = ["kv.csv"]
    (out / "kv.csv").write_text("\n".join(lines) + "\n")
    if args.files:
        curves = kv_wpir_lc_curve(args.files, args.beta[0], args.subset or [args.files], rates)
        (out / "kv_curves.csv").write_text(curves_to_csv(list(curves.values())))
        outputs.append("kv_curves.csv")
    write_manifest(out, args, outputs)


def _load_scheme(path):
    return Scheme.loads(Path(path).read_text())


def _report_lines(rep):
    d = rep.as_dict()
    return json.dumps(d, indent=1)


def cmd_scheme_eval(args):
    rep = evaluate(_load_scheme(args.scheme))
    text = _report_lines(rep)
    print(text)
    if args.out:
        out = _outdir(args)
        (out / "eval.json").write_text(text + "\n")
        write_manifest(out, args, ["eval.json"])
    return rep


def cmd_scheme_simulate(args):
    rep = simulate(_load_scheme(args.scheme), args.trials, seed=args.seed)
    text = _report_lines(rep)
    print(text)
    if args.out:
        out = _outdir(args)
        (out / "simulate.json").write_text(text + "\n")
        write_manifest(out, args, ["simulate.json"], {"simulate": args.seed})
    return rep


def cmd_scheme_compose(args):
    schemes = [_load_scheme(p) for p in args.schemes]
    if args.how == "block":
        s = block_split(schemes[0], args.t)
        if args.reencode:
            s = reencode_joint(s, cap=None if args.no_cap else 2 ** 20)
    elif args.how == "subset":
        s = file_subset_compose(schemes[0], args.groups, num_files=args.files, pad=args.pad)
    elif args.how == "timeshare":
        w = [Fraction(x) for x in args.weights]
        s = time_share(schemes, w)
    else:
        s = symmetrize(schemes[0])
    rep = evaluate(s)
    out = _outdir(args)
    (out / "scheme.json").write_text(s.dumps() + "\n")
    (out / "eval.json").write_text(_report_lines(rep) + "\n")
    write_manifest(out, args, ["scheme.json", "eval.json"])
    print(f"R={float(rep.rate):.2f} D={float(rep.distortion):.4f} L={float(rep.leakage):.4f}")
    return s, rep


def cmd_enumerate_pool(args):
    """Symmetry-reduced enumeration with streaming vertex filtering."""
    out = _outdir(args)
    M, beta = args.files, args.beta
    n = 2 ** (M * beta)
    gen = (ml_reconstruct(b, 2, M, beta) for b in canonical_partitions(2, M, beta, cap=max(n, DEFAULT_CAP)))
    survivors = streaming_vertex_pool(gen, batch=args.batch)
    pool = [_materialize(c, M, beta) for c in survivors]
    (out / "pool.json").write_text(json.dumps([r.to_json() for r in pool]) + "\n")
    write_manifest(out, args, ["pool.json"])
    return pool


def cmd_figure(args):
    from .figures import fig1, fig2

    out = _outdir(args)
    if args.which == "fig1":
        curves = fig1(K=args.alphabet, s=args.grid_points)
        (out / "fig1.csv").write_text(curves_to_csv(list(curves.values())))
        write_manifest(out, args, ["fig1.csv"])
        return curves
    if not args.pool and not args.search_iters:
        raise SystemExit("fig2 needs --pool FILE (compressor-search output) or --search-iters N")
    if args.pool:
        specs = load_compressors(args.pool)
    else:
        specs = [sa_search(args.beta, Fraction(k, args.beta), iterations=args.search_iters,
                           restarts=1, seed=args.seed + k).spec for k in range(args.beta + 1)]
    grid = parse_grid(args.distortion_grid, True)
    curves = fig2(grid, specs, M=args.files, beta=args.beta)
    (out / "fig2.csv").write_text(curves_to_csv([c for c in curves.values()]))
    write_manifest(out, args, ["fig2.csv"], {"search": args.seed})
    return curves


def build_parser():
    p = argparse.ArgumentParser(prog="lwpir", description="Rate, distortion and leakage tradeoffs for lossy weakly-private retrieval.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, grid_default="0:1/2:9"):
        sp.add_argument("--files", type=int, default=2)
        sp.add_argument("--beta", type=int, default=1)
        sp.add_argument("--leakage", nargs="+", default=["1/2"])
        sp.add_argument("--distortion-grid", default=grid_default)
        sp.add_argument("--out", default="out")

    sp = sub.add_parser("tradeoff-exact", help="LP over a response pool")
    common(sp)
    sp.add_argument("--pool", default="enumerate", help="enumerate | catalog | pool JSON file")
    sp.add_argument("--symmetry", choices=["none", "full"], default="none")
    sp.add_argument("--exact-rational", action="store_true")
    sp.set_defaults(func=cmd_tradeoff_exact)

    sp = sub.add_parser("tradeoff-asymptotic", help="infinite file length optimum")
    common(sp)
    sp.add_argument("--curve", default="binary", help="binary | kary:K")
    sp.add_argument("--method", choices=["auto", "symmetric", "profile"], default="auto")
    sp.add_argument("--grid-points", type=int, default=201)
    sp.set_defaults(func=cmd_tradeoff_asymptotic)

    sp = sub.add_parser("tradeoff-compressors", help="subset requests with per-file compressors")
    common(sp)
    sp.add_argument("--pool", default="catalog", help="catalog | compressor JSON file")
    sp.set_defaults(func=cmd_tradeoff_compressors)

    sp = sub.add_parser("compressor-search", help="simulated annealing over balanced maps")
    sp.add_argument("--beta", type=int, required=True)
    sp.add_argument("--rate", nargs="+", required=True)
    sp.add_argument("--iters", type=int, default=200_000)
    sp.add_argument("--restarts", type=int, default=32)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_compressor_search)

    sp = sub.add_parser("kv-bound", help="random-coding average distortion")
    sp.add_argument("--beta", type=int, nargs="+", required=True)
    sp.add_argument("--rate", default="0:1:50")
    sp.add_argument("--files", type=int, default=0)
    sp.add_argument("--subset", type=int, nargs="*")
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_kv_bound)

    sp = sub.add_parser("scheme-eval", help="exact evaluation of a scheme JSON")
    sp.add_argument("scheme")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scheme_eval)

    sp = sub.add_parser("scheme-simulate", help="Monte Carlo evaluation of a scheme JSON")
    sp.add_argument("scheme")
    sp.add_argument("--trials", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_scheme_simulate)

    sp = sub.add_parser("scheme-compose", help="build a scheme from smaller ones")
    sp.add_argument("how", choices=["block", "subset", "timeshare", "symmetrize"])
    sp.add_argument("schemes", nargs="+")
    sp.add_argument("--t", type=int, default=1)
    sp.add_argument("--reencode", action="store_true")
    sp.add_argument("--no-cap", action="store_true")
    sp.add_argument("--groups", type=int, default=1)
    sp.add_argument("--files", type=int)
    sp.add_argument("--pad", action="store_true")
    sp.add_argument("--weights", nargs="*", default=[])
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_scheme_compose)

    sp = sub.add_parser("enumerate-pool", help="long job: symmetry-reduced vertex pool")
    sp.add_argument("--files", type=int, default=2)
    sp.add_argument("--beta", type=int, default=1)
    sp.add_argument("--batch", type=int, default=2000)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_enumerate_pool)

    sp = sub.add_parser("figure", help="curve data for the comparison plots")
    sp.add_argument("which", choices=["fig1", "fig2"])
    sp.add_argument("--alphabet", type=int, default=64)
    sp.add_argument("--grid-points", type=int, default=201)
    sp.add_argument("--files", type=int, default=16)
    sp.add_argument("--beta", type=int, default=20)
    sp.add_argument("--distortion-grid", default="0:1/2:33")
    sp.add_argument("--pool")
    sp.add_argument("--search-iters", type=int, default=0)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="out")
    sp.set_defaults(func=cmd_figure)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except (EnumerationCapError, ValueError, OverflowError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
