"""memchan: command-line front end.

Subcommands compute capacities or run the decay-condition experiments, write
a CSV (or JSON report) plus a companion ``<out>.meta.json`` with the tool
version, a config hash and per-point diagnostics, and optionally render a
figure next to the output.  Exit codes: 0 ok, 1 config error, 2 numeric
failure under --strict.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, conditions, gaussian, ising, markov, mps, report, spin_ed
from .numerics import coherent_info_bits, entropy_rate_estimate, shannon_entropy


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # config/usage problems exit 1 (argparse default of 2 is reserved for
    # numeric failures under --strict)
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def parse_grid(text: str) -> list[float]:
    """Grids are 'start:stop:step' (inclusive, snapped to 12 decimals) or
    comma-separated explicit values."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError as exc:
            raise ConfigError(f"bad grid {text!r}: {exc}") from exc
        if step <= 0.0 or stop < start:
            raise ConfigError(f"grid {text!r} needs step > 0 and stop >= start")
        count = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + k * step, 12) for k in range(count)]
    try:
        values = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"bad grid {text!r}: {exc}") from exc
    if not values:
        raise ConfigError(f"grid {text!r} is empty")
    return values


def parse_int_grid(text: str) -> list[int]:
    values = parse_grid(text)
    ints = [int(round(v)) for v in values]
    if any(abs(i - v) > 1e-9 for i, v in zip(ints, values)):
        raise ConfigError(f"grid {text!r} must contain integers")
    return ints


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"config {path!r}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path!r}: top level must be a JSON object")
    return data


def _require(cfg: dict, fields) -> None:
    missing = [f for f in fields if f not in cfg]
    if missing:
        raise ConfigError(f"config missing field(s): {', '.join(missing)}")


def _complex_entry(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, list) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    raise ConfigError(f"matrix entry {value!r} must be a number or an [re, im] pair")


def mps_spec_from_config(cfg: dict) -> mps.MPSSpec:
    _require(cfg, ["matrices"])
    mats = []
    for mi, mat in enumerate(cfg["matrices"]):
        try:
            mats.append(np.array([[_complex_entry(v) for v in row] for row in mat]))
        except (TypeError, ConfigError) as exc:
            raise ConfigError(f"field 'matrices[{mi}]': {exc}") from exc
    try:
        spec = mps.MPSSpec(matrices=tuple(mats))
    except ValueError as exc:
        raise ConfigError(f"field 'matrices': {exc}") from exc
    for key, expected, actual in (("d", cfg.get("d"), spec.d), ("bond", cfg.get("bond"), spec.bond)):
        if expected is not None and int(expected) != actual:
            raise ConfigError(f"field {key!r} = {expected} does not match matrices ({actual})")
    return spec


def _jobs(args) -> int:
    env = os.environ.get("MEMCHAN_JOBS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"MEMCHAN_JOBS={env!r} is not an integer") from exc
    return max(1, int(getattr(args, "jobs", 1)))


def _map_ordered(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _finish(args, cfg, diagnostics, failures) -> int:
    report.write_metadata(args.out, cfg, diagnostics, __version__)
    if failures:
        for f in failures:
            print(f"warning: {f}", file=sys.stderr)
        if args.strict:
            return 2
    return 0


# --- subcommand handlers ----------------------------------------------------


def _cmd_markov(args) -> int:
    cfg_file = load_config(args.config)
    _require(cfg_file, ["columns"])
    cols = cfg_file["columns"]
    try:
        matrix = np.array(cols, dtype=float).T  # columns stored as arrays of columns
        chain = markov.StochasticMatrix(entries=matrix)
    except ValueError as exc:
        raise ConfigError(f"field 'columns': {exc}") from exc
    cfg = {"subcommand": "markov", "columns": cols}
    diagnostics, failures, rows = [], [], []
    try:
        rep = markov.capacity(chain)
        rows.append((chain.d, rep.entropy_rate_bits, rep.capacity_bits))
        diagnostics.append(
            {
                "stationary": rep.stationary.values.tolist(),
                "column_entropies_bits": rep.column_entropies.tolist(),
            }
        )
    except ValueError as exc:
        failures.append(f"markov capacity failed: {exc}")
        diagnostics.append({"error": str(exc)})
    report.write_csv(args.out, ["d", "entropy_rate_bits", "capacity_bits"], rows)
    return _finish(args, cfg, diagnostics, failures)


def _cmd_ising(args) -> int:
    cfg_file = load_config(args.config)
    _require(cfg_file, ["beta", "J"])
    betas = parse_grid(args.beta_grid) if args.beta_grid else [float(cfg_file["beta"])]
    j = float(cfg_file["J"])
    m = float(cfg_file.get("M", 0.0))
    d = float(cfg_file.get("D", 0.0))
    cfg = {"subcommand": "ising", "config": cfg_file, "beta_grid": args.beta_grid}
    rows, diagnostics, failures = [], [], []
    for beta in betas:
        try:
            params = ising.IsingParams(beta=beta, J=j, M=m, D=d)
            s = ising.entropy_per_site(params)
            rows.append((beta, j, m, d, s, ising.capacity(params)))
        except ValueError as exc:
            failures.append(f"beta={beta}: {exc}")
            diagnostics.append({"beta": beta, "error": str(exc)})
            rows.append((beta, j, m, d, math.nan, math.nan))
    report.write_csv(
        args.out,
        ["beta", "J", "M", "D", "entropy_per_site_nats", "capacity_bits"],
        rows,
    )
    if args.plot and rows:
        xs = [r[0] for r in rows]
        ys = [r[5] for r in rows]
        report.render_curves(args.out, [("capacity", xs, ys)], "beta", "capacity [bits]")
    return _finish(args, cfg, diagnostics, failures)


def _cmd_mps_capacity(args) -> int:
    cfg_file = load_config(args.config)
    spec = mps_spec_from_config(cfg_file)
    n_values = parse_int_grid(args.n_values)
    cfg = {"subcommand": "mps-capacity", "config": cfg_file, "n_values": n_values}
    diagnostics, failures = [], []
    rows, footer = [], []
    try:
        entropies = [(n, shannon_entropy(mps.diag_distribution(spec, n))) for n in n_values]
        fit = entropy_rate_estimate(entropies)
        cap = math.log2(spec.d) - fit.slope
        rows = [(n, s) for n, s in entropies]
        footer = [
            f"entropy_rate_slope_bits={report.format_value(fit.slope)}",
            f"fit_intercept_bits={report.format_value(fit.intercept)}",
            f"fit_max_abs_residual={report.format_value(fit.max_abs_residual)}",
            f"capacity_estimate_bits={report.format_value(cap)}",
        ]
        diagnostics.append({"capacity_estimate_bits": cap, "slope_bits": fit.slope})
    except ValueError as exc:
        failures.append(str(exc))
        diagnostics.append({"error": str(exc)})
    report.write_csv(args.out, ["N", "diag_entropy_bits"], rows, footer)
    if args.plot and rows:
        report.render_curves(
            args.out,
            [("S_N", [r[0] for r in rows], [r[1] for r in rows])],
            "N",
            "diagonal entropy [bits]",
        )
    return _finish(args, cfg, diagnostics, failures)


def _cmd_mps_rank1(args) -> int:
    cfg_file = load_config(args.config)
    cfg = {"subcommand": "mps-rank1", "config": cfg_file}
    diagnostics, failures, rows = [], [], []
    try:
        if "matrices" in cfg_file:
            params = mps.rank1_params(mps_spec_from_config(cfg_file))
        else:
            _require(cfg_file, ["a", "b", "c"])
            params = mps.Rank1Params(
                a=float(cfg_file["a"]), b=float(cfg_file["b"]), c=float(cfg_file["c"])
            )
        rows.append((params.a, params.b, params.c, mps.capacity_rank1(params)))
    except ValueError as exc:
        failures.append(str(exc))
        diagnostics.append({"error": str(exc)})
    report.write_csv(args.out, ["a", "b", "c", "capacity_bits"], rows)
    return _finish(args, cfg, diagnostics, failures)


def _wolf_point(g: float):
    params = mps.rank1_params(mps.wolf_mps(g))
    return (g, params.a, params.b, params.c, mps.capacity_rank1(params))


def _cmd_wolf_sweep(args) -> int:
    g_values = parse_grid(args.g)
    cfg = {"subcommand": "wolf-sweep", "g": g_values}
    rows = _map_ordered(_wolf_point, g_values, _jobs(args))
    report.write_csv(args.out, ["g", "a", "b", "c", "capacity_bits"], rows)
    if args.plot:
        report.render_curves(
            args.out,
            [("capacity", [r[0] for r in rows], [r[4] for r in rows])],
            "g",
            "capacity [bits]",
        )
    return _finish(args, cfg, [], [])


def _qising_point(item):
    n, g, tol, seed = item
    spec = spin_ed.SpinChainSpec(n=n, model=spin_ed.TransverseIsing(g=g), periodic=True)
    try:
        gs = spin_ed.ground_state(spec, tol=tol, seed=seed)
        s_diag = spin_ed.diag_entropy_bits(gs)
        return (
            n,
            g,
            1.0 - s_diag / n,
            s_diag,
            gs.energy,
            gs.gap_estimate,
            gs.degenerate_flag,
            gs.residual,
            gs.converged,
            "",
        )
    except ValueError as exc:
        nan = math.nan
        return (n, g, nan, nan, nan, nan, False, nan, False, str(exc))


def _cmd_qising_sweep(args) -> int:
    n_values = parse_int_grid(args.n)
    g_values = parse_grid(args.g)
    cfg = {
        "subcommand": "qising-sweep",
        "n": n_values,
        "g": g_values,
        "seed": args.seed,
        "tol": args.tol,
    }
    items = [(n, g, args.tol, args.seed) for n in n_values for g in g_values]
    results = _map_ordered(_qising_point, items, _jobs(args))
    rows = [r[:8] for r in results]
    diagnostics, failures = [], []
    for r in results:
        if r[9]:
            failures.append(f"n={r[0]} g={r[1]}: {r[9]}")
            diagnostics.append({"n": r[0], "g": r[1], "error": r[9]})
        elif not r[8]:
            failures.append(f"n={r[0]} g={r[1]}: eigensolver did not converge")
            diagnostics.append({"n": r[0], "g": r[1], "residual": r[7]})
    report.write_csv(args.out, list(spin_ed.SWEEP_CSV_COLUMNS), rows)
    if args.plot:
        curves = []
        for n in n_values:
            pts = [(r[1], r[2]) for r in rows if r[0] == n]
            curves.append((f"n={n}", [p[0] for p in pts], [p[1] for p in pts]))
        report.render_curves(args.out, curves, "g", "capacity [bits per use]")
    return _finish(args, cfg, diagnostics, failures)


def _cmd_gaussian_decay(args) -> int:
    d_values = parse_int_grid(args.d)
    cfg = {
        "subcommand": "gaussian-decay",
        "kappa": args.kappa,
        "L": args.block,
        "d": d_values,
        "n_total": args.n_total,
        "dps": args.dps,
    }
    diagnostics, failures, rows, footer = [], [], [], []
    try:
        result = gaussian.two_block_decay_experiment(
            args.kappa, args.block, d_values, args.n_total, dps=args.dps
        )
        rows = list(result.samples)
        footer = _fit_footer(result)
        diagnostics.append({"degenerate": result.degenerate, "note": result.note})
    except ValueError as exc:
        failures.append(str(exc))
        diagnostics.append({"error": str(exc)})
    report.write_csv(args.out, ["separation", "bound", "mutual_info_nats"], rows, footer)
    if args.plot and rows:
        positive = [(r[0], r[1]) for r in rows if r[1] > 0]
        if positive:
            report.render_curves(
                args.out,
                [("bound", [p[0] for p in positive], [p[1] for p in positive])],
                "separation d",
                "trace-norm bound",
                logy=True,
            )
    return _finish(args, cfg, diagnostics, failures)


def _cmd_gaussian_longshort(args) -> int:
    delta_values = parse_int_grid(args.delta)
    cfg = {
        "subcommand": "gaussian-longshort",
        "kappa": args.kappa,
        "l": args.block,
        "delta": delta_values,
        "n_big": args.n_big,
    }
    diagnostics, failures, rows, footer = [], [], [], []
    try:
        result = gaussian.longshort_covariance_experiment(
            args.kappa, args.block, delta_values, args.n_big
        )
        rows = list(result.samples)
        footer = _fit_footer(result)
        diagnostics.append({"degenerate": result.degenerate, "note": result.note})
    except ValueError as exc:
        failures.append(str(exc))
        diagnostics.append({"error": str(exc)})
    report.write_csv(
        args.out, ["delta", "covariance_diff_opnorm", "entropy_bound_bits"], rows, footer
    )
    if args.plot and rows:
        positive = [(r[0], r[1]) for r in rows if r[1] > 0]
        if positive:
            report.render_curves(
                args.out,
                [("|gamma_short - gamma_long|", [p[0] for p in positive], [p[1] for p in positive])],
                "padding delta",
                "operator-norm difference",
                logy=True,
            )
    return _finish(args, cfg, diagnostics, failures)


def _fit_footer(result) -> list[str]:
    if result.fit is None:
        return [f"fit=degenerate ({result.note})" if result.note else "fit=degenerate"]
    return [
        f"fit_rate={report.format_value(result.fit.rate)}",
        f"fit_log_amplitude={report.format_value(result.fit.log_amplitude)}",
        f"fit_r_squared={report.format_value(result.fit.r_squared)}",
    ]


def _write_condition_reports(args, cfg, reports) -> int:
    payload = {"reports": [r.to_dict() for r in reports]}
    Path(args.out).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", "utf-8")
    report.write_metadata(args.out, cfg, [r.verdict for r in reports], __version__)
    return 0


def _cmd_conditions_mps(args) -> int:
    cfg_file = load_config(args.config)
    spec = mps_spec_from_config(cfg_file)
    l_values = parse_int_grid(args.l_values)
    s_values = parse_int_grid(args.s_values)
    ls_l_values = parse_int_grid(args.ls_l_values)
    cfg = {
        "subcommand": "conditions-mps",
        "config": cfg_file,
        "l_values": l_values,
        "s_values": s_values,
        "v": args.v,
        "ls_l_values": ls_l_values,
        "delta_rule": args.delta_rule,
        "n_big": args.n_big,
        "gap_tol": args.gap_tol,
    }
    decay = conditions.check_decayrepeat_mps(
        spec, l_values=l_values, s_values=s_values, v=args.v, fixed_point_tol=args.gap_tol
    )
    longshort = conditions.check_longshort_mps(
        spec,
        l_values=ls_l_values,
        delta_rule=args.delta_rule,
        N_big=args.n_big,
        fixed_point_tol=args.gap_tol,
    )
    return _write_condition_reports(args, cfg, [decay, longshort])


def _cmd_conditions_gaussian(args) -> int:
    d_values = parse_int_grid(args.d)
    delta_values = parse_int_grid(args.delta)
    cfg = {
        "subcommand": "conditions-gaussian",
        "kappa": args.kappa,
        "L": args.block,
        "d": d_values,
        "n_total": args.n_total,
        "l": args.ls_block,
        "delta": delta_values,
        "n_big": args.n_big,
    }
    try:
        decay, longshort = conditions.check_conditions_gaussian(
            args.kappa,
            L=args.block,
            d_values=d_values,
            n_total=args.n_total,
            l=args.ls_block,
            delta_values=delta_values,
            n_big=args.n_big,
            dps=args.dps,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return _write_condition_reports(args, cfg, [decay, longshort])


def _cmd_hashing(args) -> int:
    n_values = parse_int_grid(args.n)
    cfg = {
        "subcommand": "hashing",
        "d": args.d,
        "n": n_values,
        "entropy_rate_bits": args.entropy_rate_bits,
    }
    rows, diagnostics, failures = [], [], []
    for n in n_values:
        try:
            s_total = args.entropy_rate_bits * n
            rows.append((n, s_total, coherent_info_bits(n, args.d, s_total)))
        except ValueError as exc:
            failures.append(f"n={n}: {exc}")
            diagnostics.append({"n": n, "error": str(exc)})
    report.write_csv(args.out, ["n", "diag_entropy_bits", "coherent_info_bits"], rows)
    if args.plot and rows:
        report.render_curves(
            args.out,
            [("I_n", [r[0] for r in rows], [r[2] for r in rows])],
            "n",
            "coherent information [bits]",
        )
    return _finish(args, cfg, diagnostics, failures)


# --- parser wiring ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="memchan", description=__doc__)
    parser.add_argument("--version", action="version", version=f"memchan-lab {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text)
        p.set_defaults(fn=fn)
        p.add_argument("--out", required=True, help="output CSV/JSON path")
        p.add_argument("--seed", type=int, default=42, help="seed for iterative solvers")
        p.add_argument("--jobs", type=int, default=1, help="worker pool size (MEMCHAN_JOBS overrides)")
        p.add_argument("--strict", action="store_true", help="numeric failures exit 2")
        p.add_argument("--plot", action="store_true", help="render a PNG next to the output")
        return p

    p = add("markov", _cmd_markov, "capacity of a d-state Markov-chain environment")
    p.add_argument("--config", required=True, help="JSON with 'columns': d columns of d reals")

    p = add("ising", _cmd_ising, "capacity of a classical Ising-chain environment")
    p.add_argument("--config", required=True, help="JSON with beta, J and optional M, D")
    p.add_argument("--beta-grid", default=None, help="optional beta grid start:stop:step")

    p = add("mps-capacity", _cmd_mps_capacity, "enumeration-slope capacity of an MPS environment")
    p.add_argument("--config", required=True, help="JSON MPS spec (matrices as [re, im] pairs)")
    p.add_argument("--n-values", default="8:13:1", help="chain lengths for the entropy slope")

    p = add("mps-rank1", _cmd_mps_rank1, "closed-route capacity of a rank-1 MPS environment")
    p.add_argument("--config", required=True, help="JSON MPS spec or {a, b, c}")

    p = add("wolf-sweep", _cmd_wolf_sweep, "capacity across the solvable three-body model family")
    p.add_argument("--g", required=True, help="g grid, e.g. -2:2:0.05")

    p = add("qising-sweep", _cmd_qising_sweep, "exact-diagonalization transverse-field sweep")
    p.add_argument("--n", required=True, help="comma list of chain lengths, e.g. 6,8,10")
    p.add_argument("--g", required=True, help="field grid, e.g. 0.2:1.8:0.05")
    p.add_argument("--tol", type=float, default=1e-10, help="eigensolver residual tolerance")

    p = add("gaussian-decay", _cmd_gaussian_decay, "two-block trace-norm bound vs separation")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--block", type=int, default=4, help="block length L")
    p.add_argument("--d", default="2:12:1", help="separation grid")
    p.add_argument("--n-total", type=int, default=60)
    p.add_argument("--dps", type=int, default=40, help="working precision (decimal digits)")

    p = add("gaussian-longshort", _cmd_gaussian_longshort, "reduced-covariance convergence vs padding")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--block", type=int, default=6, help="block length l")
    p.add_argument("--delta", default="1:10:1", help="padding grid")
    p.add_argument("--n-big", type=int, default=80)

    p = add("conditions-mps", _cmd_conditions_mps, "decay-condition verdicts for an MPS environment")
    p.add_argument("--config", required=True)
    p.add_argument("--l-values", default="2,3")
    p.add_argument("--s-values", default="1:6:1")
    p.add_argument("--v", type=int, default=2)
    p.add_argument("--ls-l-values", default="4,6,9")
    p.add_argument("--delta-rule", choices=["sqrt", "linear_fraction"], default="sqrt")
    p.add_argument("--n-big", type=int, default=40)
    p.add_argument("--gap-tol", type=float, default=1e-6)

    p = add("conditions-gaussian", _cmd_conditions_gaussian, "decay-condition verdicts for a harmonic chain")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--block", type=int, default=4)
    p.add_argument("--d", default="2:12:1")
    p.add_argument("--n-total", type=int, default=60)
    p.add_argument("--ls-block", type=int, default=6)
    p.add_argument("--delta", default="1:10:1")
    p.add_argument("--n-big", type=int, default=80)
    p.add_argument("--dps", type=int, default=40)

    p = add("hashing", _cmd_hashing, "finite-n coherent-information table")
    p.add_argument("--d", type=int, default=2)
    p.add_argument("--n", default="1:20:1")
    p.add_argument("--entropy-rate-bits", type=float, required=True)

    return parser


_GRID_FLAGS = {"--g", "--d", "--delta", "--n", "--beta-grid", "--n-values"}
_NEGATIVE_GRID = re.compile(r"^-\d+(\.\d+)?([:,].*)?$")


def _merge_negative_grids(argv):
    # lets `--g -2:2:0.05` through argparse, which would otherwise read the
    # value as an option string
    merged, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in _GRID_FLAGS and i + 1 < len(argv) and _NEGATIVE_GRID.match(argv[i + 1]):
            merged.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            merged.append(tok)
            i += 1
    return merged


def main(argv=None) -> int:
    parser = build_parser()
    if argv is None:
        argv = sys.argv[1:]
    args = parser.parse_args(_merge_negative_grids([str(a) for a in argv]))
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"memchan: config error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"memchan: error: {exc}", file=sys.stderr)
        return 1


def entry():
    raise SystemExit(main())


if __name__ == "__main__":
    entry()
