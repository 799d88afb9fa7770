"""Batch front-end: price single options or strike/maturity grids from JSON
configuration, emit CSV and gnuplot-ready surfaces, and run the built-in
demonstrations (payoff-decay benchmark, spherical divergence scan).

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import mc_oracle, pricer
from .errors import ConfigError, FourvalError
from .models import ModelSpec, fix_drift, model_from_dict
from .payoffs import PayoffSpec, decay_estimate
from .pricer import PriceRequest, price, price_strike_grid
from .quadrature import QuadConfig, pinsky_cap_scan, pinsky_spherical_demo

CSV_BASE_HEADER = ["maturity", "strike", "price", "mode", "converged"]


# ---------------------------------------------------------------------------
# configuration parsing
# ---------------------------------------------------------------------------

def payoff_from_dict(doc: dict) -> PayoffSpec:
    doc = dict(doc)
    kind = doc.pop("kind", None)
    if kind is None:
        raise ConfigError("payoff document lacks a 'kind' field")
    try:
        if kind == "Product":
            return PayoffSpec.product([payoff_from_dict(f) for f in doc["factors"]])
        fields = {}
        for key in ("K", "B", "B_low", "B_high"):
            if key in doc:
                fields[key] = float(doc[key])
        if "d" in doc:
            fields["d"] = int(doc["d"])
        return PayoffSpec(kind, **fields)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad payoff document: {exc}") from exc


@dataclass
class GridJob:
    model: ModelSpec
    payoff_kind: str
    strikes: list
    maturities: list
    spot: np.ndarray
    rate: float = 0.0
    dividend: float = 0.0
    damping: Optional[np.ndarray] = None
    quad: QuadConfig = field(default_factory=QuadConfig)
    output: Optional[str] = None
    plot_output: Optional[str] = None
    oracle: bool = False
    mc: mc_oracle.McConfig = field(default_factory=mc_oracle.McConfig)
    use_cache: bool = True

    def __post_init__(self):
        if not self.strikes or not self.maturities:
            raise ConfigError("strikes and maturities must be nonempty")
        if min(self.strikes) <= 0 or min(self.maturities) <= 0:
            raise ConfigError("strikes and maturities must be positive")
        self.spot = np.atleast_1d(np.asarray(self.spot, dtype=float))


def _job_from_doc(doc: dict, args=None) -> GridJob:
    try:
        model_doc = doc["model"]
        if isinstance(model_doc, str):
            with open(model_doc) as fh:
                model_doc = json.load(fh)
        rate = float(doc.get("rate", 0.0))
        dividend = float(doc.get("dividend", 0.0))
        model = model_from_dict(model_doc, rate, dividend)
        payoff = doc["payoff"]
        kind = payoff["kind"] if isinstance(payoff, dict) else str(payoff)
        quad_doc = dict(doc.get("quad", {}))
        if args is not None:
            if getattr(args, "quad_tol", None) is not None:
                quad_doc["abs_tol"] = args.quad_tol
            if getattr(args, "quad_max_nodes", None) is not None:
                quad_doc["max_nodes"] = args.quad_max_nodes
            if getattr(args, "cap_initial", None) is not None:
                quad_doc["cap_initial"] = args.cap_initial
            if getattr(args, "cap_max_doublings", None) is not None:
                quad_doc["cap_max_doublings"] = args.cap_max_doublings
        quad_cfg = QuadConfig(**quad_doc)
        mc_cfg = mc_oracle.McConfig(**doc.get("mc", {}))
        damping = doc.get("damping")
        job = GridJob(
            model=model,
            payoff_kind=kind,
            strikes=[float(k) for k in doc["strikes"]],
            maturities=[float(t) for t in doc["maturities"]],
            spot=doc["spot"],
            rate=rate,
            dividend=dividend,
            damping=None if damping is None else np.atleast_1d(np.asarray(damping, float)),
            quad=quad_cfg,
            output=doc.get("output"),
            plot_output=doc.get("plot_output"),
            oracle=bool(doc.get("oracle", False)),
            mc=mc_cfg,
            use_cache=bool(doc.get("use_cache", True)),
        )
    except FourvalError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad grid job document: {exc}") from exc
    if args is not None:
        if getattr(args, "out", None):
            job.output = args.out
        if getattr(args, "oracle", False):
            job.oracle = True
        if getattr(args, "no_cache", False):
            job.use_cache = False
    return job


# ---------------------------------------------------------------------------
# grid runs
# ---------------------------------------------------------------------------

def run_grid(job: GridJob):
    """Rows (maturity-major) of the strike/maturity grid.

    For each maturity the characteristic-function values on the quadrature
    node set are computed once and shared across strikes.  Returns
    (header, rows, any_failed); every row ends with an error column, empty on
    success.
    """
    header = list(CSV_BASE_HEADER)
    if job.oracle:
        header += ["mc_mean", "mc_stderr"]
    header += ["damping", "error"]
    d = job.model.dimension
    mc_draws = None
    if job.oracle:
        mc_draws = mc_oracle.simulate_terminal_multi(job.model, job.maturities, job.mc)
    rows = []
    any_failed = False
    for T in job.maturities:
        try:
            cells = price_strike_grid(job.model, job.payoff_kind, job.strikes, T,
                                      job.spot, job.rate, job.dividend,
                                      damping=job.damping, cfg=job.quad,
                                      use_cache=job.use_cache)
            cell_err = [""] * len(cells)
        except FourvalError as exc:
            cells = [None] * len(job.strikes)
            cell_err = [f"{type(exc).__name__}: {exc}"] * len(job.strikes)
        for k, cell, err in zip(job.strikes, cells, cell_err):
            if cell is None:
                row = [f"{T:.10g}", f"{k:.10g}", "", "error", "false"]
                any_failed = True
            else:
                res = cell.result
                row = [f"{T:.10g}", f"{k:.10g}", f"{res.value:.10f}",
                       res.mode, "true" if res.converged else "false"]
                if not res.converged:
                    any_failed = True
            if job.oracle:
                if cell is None:
                    row += ["", ""]
                else:
                    est = _oracle_cell(job, mc_draws[float(T)], k, T)
                    row += [f"{est.mean:.8f}", f"{est.std_error:.3e}"]
            if cell is None:
                row.append("")
            else:
                row.append(";".join(f"{r:.6g}" for r in cell.result.damping_used))
            row.append(err)
            rows.append(row)
    return header, rows, any_failed


def _oracle_cell(job: GridJob, draws: np.ndarray, strike: float, T: float):
    spec = pricer.payoff_for_strike(job.payoff_kind, strike, job.model.dimension)
    x = draws + np.log(job.spot)[None, :]
    from .payoffs import payoff_eval
    vals = payoff_eval(spec, x if spec.dimension > 1 else x[:, 0])
    vals = math.exp(-job.rate * T) * vals
    return mc_oracle._pair_estimate(vals, job.mc.antithetic)


def write_csv(path: str, header, rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def emit_plot_data(csv_path: str, out_path: str) -> None:
    """Convert a grid CSV into whitespace-separated (T, K, price) blocks,
    one block per maturity, suitable for gnuplot surface plots."""
    with open(csv_path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    if not lines:
        raise ConfigError(f"empty CSV {csv_path}")
    header = lines[0].split(",")
    try:
        it, ik, ip = (header.index(c) for c in ("maturity", "strike", "price"))
    except ValueError as exc:
        raise ConfigError(f"CSV {csv_path} lacks grid columns: {exc}") from exc
    blocks: dict = {}
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) <= ip or parts[ip] == "":
            raise ConfigError(f"CSV row lacks a price: {ln!r}")
        blocks.setdefault(parts[it], []).append((parts[ik], parts[ip]))
    with open(out_path, "w") as fh:
        fh.write("# maturity strike price\n")
        first = True
        for t, entries in blocks.items():
            if not first:
                fh.write("\n")
            first = False
            for k, p in entries:
                fh.write(f"{t} {k} {p}\n")


def parse_plot_data(path: str):
    """Round-trip reader for emit_plot_data output."""
    grid = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#"):
                continue
            t, k, p = ln.split()
            grid.append((float(t), float(k), float(p)))
    return grid


# ---------------------------------------------------------------------------
# demonstrations
# ---------------------------------------------------------------------------

@dataclass
class DecayBenchReport:
    direct_nodes: int
    split_nodes: int
    direct_seconds: float
    split_seconds: float
    max_split_error: float
    call_decay_exponent: float
    digital_decay_exponent: float
    split_uses_more_nodes: bool


def bench_decay_demo(model: Optional[ModelSpec] = None,
                     spot: float = 100.0) -> DecayBenchReport:
    """Price a strike/maturity grid directly as calls and again as
    asset-or-nothing minus strike times digital; the split's slower transform
    decay costs strictly more quadrature nodes for the same prices."""
    model = model or fix_drift(ModelSpec.brownian(c=0.04))
    strikes = [85.0, 90.0, 92.5, 95.0, 97.5, 100.0, 102.5, 105.0, 107.5, 110.0, 115.0]
    maturities = [0.1 * i for i in range(1, 11)]
    cfg = QuadConfig(abs_tol=1e-8)

    t0 = time.perf_counter()
    direct_nodes = 0
    direct = {}
    for T in maturities:
        for cell in price_strike_grid(model, "Call", strikes, T, spot, cfg=cfg):
            direct[(T, cell.strike)] = cell.result.value
            direct_nodes += cell.nodes_used
    direct_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    split_nodes = 0
    max_err = 0.0
    for T in maturities:
        aon = price_strike_grid(model, "AssetOrNothingCall", strikes, T, spot, cfg=cfg)
        dig = price_strike_grid(model, "DigitalCall", strikes, T, spot, cfg=cfg)
        for ca, cd in zip(aon, dig):
            split_nodes += ca.nodes_used + cd.nodes_used
            split_val = ca.result.value - ca.strike * cd.result.value
            max_err = max(max_err, abs(split_val - direct[(T, ca.strike)]))
    split_seconds = time.perf_counter() - t0

    u_grid = np.geomspace(10.0, 1e4, 200)
    p_call = decay_estimate(PayoffSpec.call(100.0), 1.75, u_grid)
    p_dig = decay_estimate(PayoffSpec.digital_call(100.0), 0.5, u_grid)
    return DecayBenchReport(direct_nodes, split_nodes, direct_seconds,
                            split_seconds, max_err, p_call, p_dig,
                            split_nodes > direct_nodes)


# ---------------------------------------------------------------------------
# argument parsing and command implementations
# ---------------------------------------------------------------------------

def _add_quad_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--quad-tol", type=float, default=None,
                   help="absolute quadrature tolerance")
    p.add_argument("--quad-max-nodes", type=int, default=None)
    p.add_argument("--cap-initial", type=float, default=None)
    p.add_argument("--cap-max-doublings", type=int, default=None)


def _quad_from_args(args) -> QuadConfig:
    kw = {}
    if args.quad_tol is not None:
        kw["abs_tol"] = args.quad_tol
    if args.quad_max_nodes is not None:
        kw["max_nodes"] = args.quad_max_nodes
    if args.cap_initial is not None:
        kw["cap_initial"] = args.cap_initial
    if args.cap_max_doublings is not None:
        kw["cap_max_doublings"] = args.cap_max_doublings
    return QuadConfig(**kw)


def _load_json_arg(text: str):
    text = text.strip()
    if text.startswith("{"):
        return json.loads(text)
    with open(text) as fh:
        return json.load(fh)


def _cmd_price(args) -> int:
    model = model_from_dict(_load_json_arg(args.model), args.rate, args.dividend)
    payoff = payoff_from_dict(_load_json_arg(args.payoff))
    damping = None if args.damping is None else np.asarray(args.damping, float)
    req = PriceRequest(spot=np.asarray(args.spot, float), payoff=payoff, model=model,
                       maturity=args.maturity, rate=args.rate, dividend=args.dividend,
                       damping=damping, quad=_quad_from_args(args))
    res = price(req)
    if res.converged:
        print(f"price     = {res.value:.10f}")
    else:
        band = res.diagnostics.get("oscillation_amplitude", float("nan"))
        print(f"price     = NOT CONVERGED, oscillating in "
              f"[{res.value - band:.6f}, {res.value + band:.6f}]")
    print(f"mode      = {res.mode}")
    print(f"damping   = {np.array2string(res.damping_used, precision=6)}")
    print(f"converged = {res.converged}")
    for key, val in sorted(res.diagnostics.items()):
        print(f"{key} = {val}")
    if args.oracle:
        est = mc_oracle.price_mc(model, payoff, np.asarray(args.spot, float),
                                 args.maturity, args.rate)
        print(f"mc_mean   = {est.mean:.8f}")
        print(f"mc_stderr = {est.std_error:.3e}")
        print(f"mc_ci95   = [{est.ci95[0]:.8f}, {est.ci95[1]:.8f}]")
    return 0


def _cmd_grid(args) -> int:
    job = _job_from_doc(_load_json_arg(args.job), args)
    header, rows, any_failed = run_grid(job)
    if job.output:
        write_csv(job.output, header, rows)
        print(f"wrote {len(rows)} rows to {job.output}")
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(row))
    if job.plot_output:
        if not job.output:
            raise ConfigError("plot output requires a CSV output path")
        emit_plot_data(job.output, job.plot_output)
        print(f"wrote plot data to {job.plot_output}")
    return 3 if any_failed else 0


def _cmd_greeks(args) -> int:
    model = model_from_dict(_load_json_arg(args.model), args.rate, args.dividend)
    payoff = payoff_from_dict(_load_json_arg(args.payoff))
    req = PriceRequest(spot=np.asarray(args.spot, float), payoff=payoff, model=model,
                       maturity=args.maturity, rate=args.rate, dividend=args.dividend,
                       quad=_quad_from_args(args))
    res = price(req)
    print(f"price = {res.value:.10f}")
    print(f"delta = {pricer.delta(req):.10f}")
    print(f"gamma = {pricer.gamma(req):.10f}")
    return 0


def _cmd_bench_decay(args) -> int:
    rep = bench_decay_demo()
    print(f"direct call grid : {rep.direct_nodes} nodes, {rep.direct_seconds:.3f} s")
    print(f"split AoN-K*dig  : {rep.split_nodes} nodes, {rep.split_seconds:.3f} s")
    print(f"node ratio split/direct = {rep.split_nodes / rep.direct_nodes:.2f}")
    print(f"max |call - (AoN - K*digital)| = {rep.max_split_error:.3e}")
    print(f"call transform decay exponent    = {rep.call_decay_exponent:.3f}")
    print(f"digital transform decay exponent = {rep.digital_decay_exponent:.3f}")
    if not rep.split_uses_more_nodes:
        print("UNEXPECTED: split path did not use more nodes")
        return 3
    return 0


def _cmd_pinsky(args) -> int:
    for mult, label in ((0.0, "A = 2*pi*m      "), (0.25, "A = 2*pi*m + pi/2")):
        A = 2.0 * math.pi * args.m + mult * 2.0 * math.pi
        val = pinsky_spherical_demo(A)
        expect = 1.0 - (2.0 / math.pi) * math.sin(A)
        print(f"{label}: capped inversion = {val:.6f}   (1 - (2/pi) sin A = {expect:.6f})")
    scan = pinsky_cap_scan(100.0, 200.0)
    print(f"cap scan over [100, 200]: converged = {scan.converged}, "
          f"oscillation amplitude = {scan.oscillation_amplitude:.4f} "
          f"(4/pi = {4.0 / math.pi:.4f})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fourval",
                                 description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="price a single option")
    p.add_argument("--model", required=True, help="model JSON (inline or path)")
    p.add_argument("--payoff", required=True, help="payoff JSON (inline or path)")
    p.add_argument("--spot", type=float, nargs="+", required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--dividend", type=float, default=0.0)
    p.add_argument("--damping", type=float, nargs="+", default=None)
    p.add_argument("--oracle", action="store_true",
                   help="run the Monte-Carlo oracle alongside")
    _add_quad_flags(p)
    p.set_defaults(func=_cmd_price)

    p = sub.add_parser("grid", help="price a strike/maturity grid from a job file")
    p.add_argument("--job", required=True, help="grid job JSON (inline or path)")
    p.add_argument("--out", default=None, help="CSV output path (overrides job)")
    p.add_argument("--oracle", action="store_true")
    p.add_argument("--no-cache", action="store_true",
                   help="recompute the CF per strike (identical values)")
    _add_quad_flags(p)
    p.set_defaults(func=_cmd_grid)

    p = sub.add_parser("greeks", help="price, delta and gamma of a 1d option")
    p.add_argument("--model", required=True)
    p.add_argument("--payoff", required=True)
    p.add_argument("--spot", type=float, nargs="+", required=True)
    p.add_argument("--maturity", type=float, required=True)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--dividend", type=float, default=0.0)
    _add_quad_flags(p)
    p.set_defaults(func=_cmd_greeks)

    p = sub.add_parser("bench-decay",
                       help="node-count benchmark: direct call vs digital split")
    p.set_defaults(func=_cmd_bench_decay)

    p = sub.add_parser("pinsky-demo",
                       help="spherical capped inversion of the 3d ball indicator")
    p.add_argument("--m", type=int, default=20, help="cap multiplier A = 2*pi*m")
    p.set_defaults(func=_cmd_pinsky)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (FourvalError, OSError, json.JSONDecodeError) as exc:
        kind = type(exc).__name__
        print(f"{kind}: {exc}", file=sys.stderr)
        return 2 if isinstance(exc, (OSError, json.JSONDecodeError)) else 3
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
