"""Experiment orchestration: config ingestion, dispatch, report emission.

Usage: ``dilatest <command> --config <file> [--out <file>] [--format json|csv]
[--threads N]`` with commands norm, ap, xclass, dilate, maximal, equiv.

Reports are emitted with sorted keys and floats rounded to 12 significant
digits, so identical (config, seed) pairs produce byte-identical artifacts;
wall-clock time is printed to stderr only, never serialized. Exit status is
0 on PASS, 1 on FAIL, 2 on INCONCLUSIVE or a configuration error.
"""

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field

from . import fixtures, regression
from .dilation import summarize_dilation, verify_theorem
from .dyadic import GridFunction
from .errors import ConfigError, DilatestError
from .lp_fourier import build_phi, fourier_norm
from .maximal import fs_inequality_ratio, weighted_maximal_ratio
from .norms import SpaceParams, diff_norm, star_norm
from .weights import (
    WeightSequence,
    XClassParams,
    a1_constant,
    ap_constant,
    spec_from_dict,
    spec_to_dict,
    weight_grid,
    xclass_check,
)

COMMANDS = ("norm", "ap", "xclass", "dilate", "maximal", "equiv")
EXIT_CODE = {"PASS": 0, "FAIL": 1, "INCONCLUSIVE": 2, "DIVERGENT": 1}


def _number(value, where):
    """Floats are accepted as numbers or the string 'inf'."""
    if isinstance(value, str):
        if value.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ConfigError(f"{where}: expected a number or 'inf', got {value!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{where}: expected a number, got {value!r}")
    return float(value)


@dataclass
class RunConfig:
    command: str
    halfwidth: float = 8.0
    resolution: int = 4096
    dim: int = 1
    space: SpaceParams = None
    weights: object = None
    fixture: str = "gaussian"
    lambda_list: list = field(default_factory=lambda: [2.0, 4.0, 8.0])
    depth: int = 6
    norm: str = "diff"
    seed: int = 0
    families: int = 20
    family_size: int = 6
    sigma: float = 0.5
    bounds: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def parse_config(data: dict, command: str) -> RunConfig:
    """Validate a config mapping; error messages carry the offending field."""
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "command" in data and data["command"] != command:
        raise ConfigError(
            f"config.command = {data['command']!r} does not match the "
            f"invoked subcommand {command!r}"
        )
    grid = data.get("grid", {})
    halfwidth = _number(grid.get("L", 8.0), "grid.L")
    if halfwidth <= 0 or abs(math.log2(halfwidth) - round(math.log2(halfwidth))) > 1e-12:
        raise ConfigError("grid.L must be a positive power of two (cube alignment)")
    resolution = grid.get("N", 4096)
    if not isinstance(resolution, int) or resolution < 32 or resolution & (resolution - 1):
        raise ConfigError("grid.N must be a power of two >= 32")
    dim = grid.get("dim", 1)
    if dim not in (1, 2):
        raise ConfigError("grid.dim must be 1 or 2")

    s = data.get("space", {})
    k_cap = int(math.floor(math.log2(resolution / (2 * halfwidth)))) - 2
    k_max = s.get("K_max", max(1, min(6, k_cap)))
    try:
        space = SpaceParams(
            kind=s.get("kind", "B"),
            p=_number(s.get("p", 2.0), "space.p"),
            q=_number(s.get("q", 2.0), "space.q"),
            M=int(s.get("M", 2)),
            alpha=tuple(
                _number(a, "space.alpha") for a in s.get("alpha", (1.0, 1.0))
            ),
            theta=_number(s.get("theta", 1.0), "space.theta"),
            sigma2=(
                _number(s["sigma2"], "space.sigma2") if "sigma2" in s else None
            ),
            k_max=int(k_max),
        )
    except DilatestError as exc:
        raise ConfigError(f"space: {exc}") from exc
    if space.k_max > k_cap:
        raise ConfigError(
            f"space.K_max = {space.k_max} exceeds the resolution cap {k_cap} "
            f"for grid (L={halfwidth}, N={resolution})"
        )

    try:
        weights = spec_from_dict(data.get("weights", {"kind": "constant", "value": 1.0}))
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"weights: {exc}") from exc

    fixture_name = data.get("fixture", "gaussian")
    if fixture_name not in fixtures.fixture_names():
        raise ConfigError(
            f"fixture: unknown {fixture_name!r}; choose from {fixtures.fixture_names()}"
        )
    lam_list = [
        _number(v, "lambda_list") for v in data.get("lambda_list", [2.0, 4.0, 8.0])
    ]
    if any(v < 1.0 for v in lam_list):
        raise ConfigError("lambda_list: dilation factors must be >= 1")
    norm = data.get("norm", "diff")
    if norm not in ("diff", "star"):
        raise ConfigError("norm must be 'diff' or 'star'")

    return RunConfig(
        command=command,
        halfwidth=halfwidth,
        resolution=resolution,
        dim=dim,
        space=space,
        weights=weights,
        fixture=fixture_name,
        lambda_list=lam_list,
        depth=int(data.get("depth", 6)),
        norm=norm,
        seed=int(data.get("seed", 0)),
        families=int(data.get("families", 20)),
        family_size=int(data.get("family_size", 6)),
        sigma=_number(data.get("sigma", 0.5), "sigma"),
        bounds=data.get("bounds", {}),
        raw=data,
    )


def _weight_sequence(cfg: RunConfig) -> WeightSequence:
    return WeightSequence.from_spec(
        cfg.weights,
        cfg.space.p,
        cfg.space.k_max,
        cfg.dim,
        cfg.halfwidth,
        cfg.resolution,
    )


def _fixture(cfg: RunConfig) -> GridFunction:
    return fixtures.fixture(cfg.fixture, cfg.dim, cfg.halfwidth, cfg.resolution)


# -- command handlers -----------------------------------------------------------


def _run_norm(cfg, threads=1):
    f = _fixture(cfg)
    t = _weight_sequence(cfg)
    ru = build_phi(cfg.space.k_max, cfg.dim, cfg.halfwidth, cfg.resolution)
    dv, dinfo = diff_norm(f, t, cfg.space, details=True)
    sv, sinfo = star_norm(f, t, cfg.space, details=True)
    fv = fourier_norm(f, t, cfg.space, ru)
    finite = all(math.isfinite(v) for v in (dv, sv, fv))
    verdict = "PASS" if finite and dinfo["reliable"] and sinfo["reliable"] else "FAIL"
    rows = [
        {"norm": "diff", "value": dv, "boundary_mass": dinfo["boundary_mass"]},
        {"norm": "star", "value": sv, "boundary_mass": sinfo["boundary_mass"]},
        {"norm": "fourier", "value": fv, "boundary_mass": 0.0},
    ]
    return {"rows": rows}, {"overall": verdict}


def _run_ap(cfg, threads=1):
    gamma = weight_grid(cfg.weights, 0, cfg.dim, cfg.halfwidth, cfg.resolution)
    if cfg.space.p == 1.0:
        rep = a1_constant(gamma, cfg.depth)
    else:
        rep = ap_constant(gamma, cfg.space.p, cfg.depth)
    rows = [{"N": n, "constant": c, "verdict": rep.verdict} for n, c in rep.trace]
    results = {
        "rows": rows,
        "constant": rep.constant,
        "argmax_level": rep.argmax_cube.level,
        "argmax_index": list(rep.argmax_cube.index),
        "argmax_shift": rep.argmax_shift,
        "levels_scanned": list(rep.levels_scanned),
    }
    return results, {"overall": rep.verdict}


def _run_xclass(cfg, threads=1):
    t = _weight_sequence(cfg)
    sp = cfg.space
    params = XClassParams(
        alpha1=sp.alpha[0], alpha2=sp.alpha[1], sigma1=sp.sigma1,
        sigma2=sp.sigma2, p=sp.p,
    )
    c1, c2, rep = xclass_check(t, params, cfg.depth)
    rows = [{"depth": d, "C1": a, "C2": b} for d, a, b in rep.trace]
    results = {
        "rows": rows,
        "C1": c1,
        "C2": c2,
        "order_violation": rep.order_violation,
    }
    return results, {"overall": rep.verdict}


def _run_dilate(cfg, threads=1):
    f = _fixture(cfg)
    t = _weight_sequence(cfg)
    reports = verify_theorem(
        f, t, cfg.space, cfg.lambda_list, norm=cfg.norm, depth=cfg.depth,
        threads=threads,
    )
    summary = summarize_dilation(reports)
    rows = []
    for r in reports:
        sob = "DIVERGENT" if (r.sobolev and r.sobolev.divergent) else (
            r.sobolev.value if r.sobolev else None
        )
        rows.append(
            {
                "lambda": r.lam,
                "i": r.i,
                "H": r.H,
                "norm_before": r.norm_before,
                "norm_after": r.norm_after,
                "bound_rhs_shape": r.bound_rhs_shape,
                "observed_c": r.observed_c,
                "clipped_fraction": r.clipped_fraction,
                "sobolev_sup": sob,
            }
        )
    results = {
        "rows": rows,
        "spread": summary["spread"],
        "slope": summary["slope"],
        "median_c": summary["median_c"],
    }
    return results, {"overall": summary["verdict"]}


def _run_maximal(cfg, threads=1):
    t = _weight_sequence(cfg)
    sp = cfg.space
    rows = []
    for j in range(cfg.families):
        seed = cfg.seed + j
        fam = fixtures.random_indicator_family(
            seed, cfg.family_size, cfg.dim, cfg.halfwidth, cfg.resolution
        )
        fs_ratio = fs_inequality_ratio(fam, sp.p, sp.q, cfg.sigma)
        smooth = [
            fixtures.random_smooth(
                1000 + 10 * seed + i, cfg.dim, cfg.halfwidth, cfg.resolution
            )
            for i in range(max(2, cfg.family_size // 2))
        ]
        theta = sp.theta if sp.theta > 1.0 else 1.5
        wm_ratio = weighted_maximal_ratio(smooth, t, sp.p, sp.q, theta, depth=4)
        rows.append({"seed": seed, "fs_ratio": fs_ratio, "weighted_ratio": wm_ratio})
    fs_bound = float(cfg.bounds.get("fs", regression.FS_RATIO_BOUND))
    wm_bound = float(cfg.bounds.get("weighted", regression.WEIGHTED_RATIO_BOUND))
    fs_max = max(r["fs_ratio"] for r in rows)
    wm_max = max(r["weighted_ratio"] for r in rows)
    verdict = "PASS" if fs_max <= fs_bound and wm_max <= wm_bound else "FAIL"
    results = {
        "rows": rows,
        "fs_max": fs_max,
        "weighted_max": wm_max,
        "fs_bound": fs_bound,
        "weighted_bound": wm_bound,
    }
    return results, {"overall": verdict}


def _run_equiv(cfg, threads=1):
    t = _weight_sequence(cfg)
    ru = build_phi(cfg.space.k_max, cfg.dim, cfg.halfwidth, cfg.resolution)
    rows = []
    for name in fixtures.EQUIVALENCE_FAMILY:
        f = fixtures.fixture(name, cfg.dim, cfg.halfwidth, cfg.resolution)
        d = diff_norm(f, t, cfg.space)
        s = star_norm(f, t, cfg.space)
        fo = fourier_norm(f, t, cfg.space, ru)
        rows.append(
            {
                "fixture": name,
                "diff": d,
                "star": s,
                "fourier": fo,
                "star_diff_ratio": s / d if d > 0 else math.inf,
                "fourier_diff_ratio": fo / d if d > 0 else math.inf,
            }
        )
    sd_lo, sd_hi = cfg.bounds.get("star_diff", regression.STAR_DIFF_BRACKET)
    fd_lo, fd_hi = cfg.bounds.get("fourier_diff", regression.FOURIER_DIFF_BRACKET)
    ok = all(
        sd_lo <= r["star_diff_ratio"] <= sd_hi
        and fd_lo <= r["fourier_diff_ratio"] <= fd_hi
        for r in rows
    )
    results = {
        "rows": rows,
        "star_diff_bracket": [sd_lo, sd_hi],
        "fourier_diff_bracket": [fd_lo, fd_hi],
    }
    return results, {"overall": "PASS" if ok else "FAIL"}


_HANDLERS = {
    "norm": _run_norm,
    "ap": _run_ap,
    "xclass": _run_xclass,
    "dilate": _run_dilate,
    "maximal": _run_maximal,
    "equiv": _run_equiv,
}


def run(cfg: RunConfig, threads=1) -> dict:
    """Dispatch one command; deterministic given (config, seed)."""
    started = time.monotonic()
    handler = _HANDLERS[cfg.command]
    results, verdicts = handler(cfg, threads)
    elapsed = time.monotonic() - started
    report = {
        "config": {
            "command": cfg.command,
            "grid": {"L": cfg.halfwidth, "N": cfg.resolution, "dim": cfg.dim},
            "space": {
                "kind": cfg.space.kind,
                "p": cfg.space.p,
                "q": cfg.space.q,
                "M": cfg.space.M,
                "alpha": list(cfg.space.alpha),
                "theta": cfg.space.theta,
                "sigma2": cfg.space.sigma2,
                "K_max": cfg.space.k_max,
            },
            "weights": spec_to_dict(cfg.weights),
            "fixture": cfg.fixture,
            "lambda_list": cfg.lambda_list,
            "depth": cfg.depth,
            "norm": cfg.norm,
            "seed": cfg.seed,
        },
        "results": results,
        "verdicts": verdicts,
        "meta": {
            "L": cfg.halfwidth,
            "N": cfg.resolution,
            "dim": cfg.dim,
            "K_max": cfg.space.k_max,
            "depth": cfg.depth,
            "seed": cfg.seed,
            "threads": threads,
        },
    }
    # wall clock goes to the console only: emitted artifacts must be
    # byte-identical across reruns of the same (config, seed)
    report["wall_clock_s"] = elapsed
    return report


# -- emission --------------------------------------------------------------------


def _round_floats(obj):
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return float(f"{obj:.12g}")
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    return obj


def render(report: dict, fmt: str) -> str:
    """Serialize a report: stable JSON, or CSV with one row per sweep entry."""
    body = {k: v for k, v in report.items() if k != "wall_clock_s"}
    if fmt == "json":
        return json.dumps(_round_floats(body), indent=2, sort_keys=True) + "\n"
    if fmt != "csv":
        raise ConfigError(f"unknown format {fmt!r}")
    rows = report["results"].get("rows", [])
    buf = io.StringIO()
    if rows:
        fieldnames = list(rows[0].keys())
        writer = csv.DictWriter(buf, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            out = {}
            for key, val in row.items():
                val = _round_floats(val)
                out[key] = f"{val:.12g}" if isinstance(val, float) else val
            writer.writerow(out)
    return buf.getvalue()


def emit(report: dict, fmt: str, path) -> None:
    data = render(report, fmt)
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(data)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="dilatest",
        description="Weighted smoothness-space diagnostics and dilation checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="JSON config file")
        cmd.add_argument("--out", default=None, help="artifact path (default: stdout)")
        cmd.add_argument("--format", default="json", choices=("json", "csv"))
        cmd.add_argument("--threads", type=int, default=1)
    args = parser.parse_args(argv)

    try:
        with open(args.config, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        cfg = parse_config(data, args.command)
        report = run(cfg, threads=args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DilatestError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2

    try:
        if args.out:
            emit(report, args.format, args.out)
        else:
            sys.stdout.write(render(report, args.format))
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    print(f"wall clock: {report['wall_clock_s']:.3f} s", file=sys.stderr)
    verdict = report["verdicts"]["overall"]
    print(f"verdict: {verdict}", file=sys.stderr)
    return EXIT_CODE.get(verdict, 2)


if __name__ == "__main__":
    sys.exit(main())
