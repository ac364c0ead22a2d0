"""Command-line entry point: configure, run, and persist every experiment.

Every run writes its CSV outputs plus a manifest (seed, full parameter
set, content digests).  Re-invoking with the same parameters reproduces
the CSV bodies byte for byte, independent of the worker count.

Exit codes: 0 success, 2 usage (argparse), 3 parameter/validation error,
4 unwritable output path, 5 integrity failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import additive, cramer, symmetry, zeta_random, zeta_reference
from .config import GLOBAL_SCHEMA, SCHEMAS, env_overrides, parse_config_text, validate_config
from .errors import (
    ModelIntegrityError,
    ParameterError,
    SingularFactorError,
    ValidationError,
    ZetalabError,
)
from .manifest import RunManifest, load_manifest, verify_manifest
from .rng import StreamKey

EXIT_OK = 0
EXIT_VALIDATION = 3
EXIT_UNWRITABLE = 4
EXIT_INTEGRITY = 5


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return format(value, ".17g")
    if isinstance(value, (np.floating,)):
        return _fmt(float(value))
    if isinstance(value, (np.integer,)):
        return str(int(value))
    return str(value)


def write_csv(path, fieldnames, rows) -> None:
    """UTF-8, LF, header row, floats at 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(fieldnames)
        for row in rows:
            writer.writerow([_fmt(row[name]) for name in fieldnames])


def _pool_map(fn, cells, threads):
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, cells))
    return [fn(c) for c in cells]


def _json_safe(value):
    if isinstance(value, complex):
        return str(value)
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def _start_manifest(name, cfg) -> RunManifest:
    params = {k: _json_safe(v) for k, v in sorted(cfg.items())}
    return RunManifest(experiment=name, master_seed=cfg["seed"], params=params)


# ---------------------------------------------------------------------------
# Subcommand runners.  Each returns a list of (filename, fieldnames, rows).


def _count_stats_cell(args):
    master, label, r, n_max, checkpoints = args
    ind = cramer.sample_indicators(n_max, StreamKey(master, label, r))
    path = cramer.counting_path(ind, checkpoints)
    return [
        {
            "n": int(path.checkpoints[i]), "pi": int(path.pi[i]),
            "mean": path.mean[i], "var": path.var[i], "lil": path.lil[i],
            "replica": r,
        }
        for i in range(path.checkpoints.size)
    ]


def run_count_stats(cfg, out_dir):
    cells = [
        (cfg["seed"], "cramer", r, cfg["n_max"], tuple(cfg["checkpoints"]))
        for r in range(cfg["replicas"])
    ]
    results = _pool_map(_count_stats_cell, cells, cfg["threads"])
    rows = []
    for cell_rows in results:
        for row in cell_rows:
            row["seed"] = cfg["seed"]
            rows.append(row)
    fields = ["n", "pi", "mean", "var", "lil", "replica", "seed"]
    return [("count_stats.csv", fields, rows)]


def run_sample(cfg, out_dir):
    rows = []
    for r in range(cfg["replicas"]):
        ind = cramer.sample_indicators(cfg["n_max"], StreamKey(cfg["seed"], "cramer", r))
        name = f"indicators_rep{r}.bits"
        ind.save(Path(out_dir) / name)
        rows.append({
            "replica": r, "n_max": cfg["n_max"],
            "popcount": ind.popcount(), "file": name, "seed": cfg["seed"],
        })
    return [("sample.csv", ["replica", "n_max", "popcount", "file", "seed"], rows)]


def run_zeta_grid(cfg, out_dir):
    rows = zeta_random.zeta_grid(
        StreamKey(cfg["seed"], "zeta-grid"), cfg["sigmas"], cfg["ts"],
        cfg["n"], cfg["replicas"], threads=cfg["threads"],
    )
    for row in rows:
        row["seed"] = cfg["seed"]
    fields = ["sigma", "t", "N", "replica", "re_zeta", "im_zeta", "abs_zeta",
              "abs_centered_s1", "var_partial", "tail_bound", "seed"]
    return [("zeta_grid.csv", fields, rows)]


def run_critical_line(cfg, out_dir):
    scan = zeta_random.critical_line_scan(
        StreamKey(cfg["seed"], "critical-line"), cfg["t"], cfg["sigmas"],
        cfg["n_list"], cfg["replicas"], threads=cfg["threads"],
    )
    for row in scan.rows:
        row["seed"] = cfg["seed"]
    fields = ["sigma", "t", "N", "replica", "re_zeta", "im_zeta", "abs_zeta",
              "abs_centered_s1", "var_partial", "tail_bound", "seed"]
    sum_fields = ["sigma", "N", "centered_q25", "centered_q50", "centered_q75",
                  "abs_zeta_q25", "abs_zeta_q50", "abs_zeta_q75"]
    summary_rows = [
        {f: row.get(f, float("nan")) for f in sum_fields} for row in scan.summary
    ]
    return [
        ("critical_line.csv", fields, scan.rows),
        ("critical_line_summary.csv", sum_fields, summary_rows),
    ]


def _additive_cell(args):
    master, label, r, c, alpha, n_lo, n_hi = args
    thin = additive.thin_sequence(c, alpha, n_hi)
    ind = cramer.sample_indicators(n_hi, StreamKey(master, label, r))
    report = additive.representation_scan(ind, thin, n_lo, n_hi)
    rows = []
    ns = np.arange(n_lo, n_hi + 1)
    for i, n in enumerate(ns):
        rows.append({
            "replica": r, "n": int(n), "covered": int(report.covered[i]),
            "witness_i": int(report.witness_i[i]),
            "witness_j": int(report.witness_j[i]),
            "bound_exp": float(report.bound_exp[i]),
            "bound_product": float(report.bound_product[i]),
        })
    n0 = report.first_full_cover
    return rows, {"replica": r, "n0": -1 if n0 is None else int(n0),
                  "failures": int(report.failures.size)}


def run_additive(cfg, out_dir):
    cells = [
        (cfg["seed"], "additive", r, cfg["c"], cfg["alpha"], cfg["n_lo"], cfg["n_hi"])
        for r in range(cfg["replicas"])
    ]
    results = _pool_map(_additive_cell, cells, cfg["threads"])
    rows = []
    summary = []
    for cell_rows, cell_sum in results:
        rows.extend(cell_rows)
        summary.append(cell_sum)
    fields = ["replica", "n", "covered", "witness_i", "witness_j",
              "bound_exp", "bound_product"]
    return [
        ("additive.csv", fields, rows),
        ("additive_summary.csv", ["replica", "n0", "failures"], summary),
    ]


def run_infinitude(cfg, out_dir):
    preset = cfg["preset"]
    if preset == "explicit":
        spec = cfg["xs"]
    elif preset == "powers":
        spec = {"m": cfg["base_m"], "c": cfg["c"], "alpha": cfg["alpha"]}
    else:
        spec = preset
    result = additive.infinitude_experiment(
        spec, cfg["k_terms"], cfg["replicas"], StreamKey(cfg["seed"], "infinitude")
    )
    rows = []
    for r in range(result.counts.shape[0]):
        for k in range(result.counts.shape[1]):
            rows.append({
                "replica": r, "k": k + 1, "ln_x": float(result.log_xs[k]),
                "cum_count": int(result.counts[r, k]),
                "expected_cum": float(result.expected_cum[k]),
                "seed": cfg["seed"],
            })
    fields = ["replica", "k", "ln_x", "cum_count", "expected_cum", "seed"]
    return [("infinitude.csv", fields, rows)]


def run_symmetry(cfg, out_dir):
    params = symmetry.BlockParams(
        beta=cfg["beta"], n_blocks=cfg["n_blocks"],
        k_rule=cfg["k_rule"], k0=cfg["k0"],
    )
    key = StreamKey(cfg["seed"], "symmetry")
    s = cfg["s"]
    block_rows = []
    sum_rows = []
    for block in symmetry.iter_blocks(params, key):
        check = symmetry.block_first_sum(block, s)
        scale = block.k * float(block.B) ** 3 / float(block.C) ** (3 + s.real)
        sum_rows.append({
            "n": block.n, "A": block.A, "B": block.B, "C": block.C,
            "k": block.k, "exact_re": check.exact.real,
            "exact_im": check.exact.imag,
            "predicted_re": check.predicted.real,
            "predicted_im": check.predicted.imag,
            "residual": check.residual, "third_order_scale": scale,
        })
        block_rows.append({
            "n": block.n, "A": block.A, "B": block.B, "C": block.C,
            "k": block.k,
            "xi": ";".join(str(int(x)) for x in block.xi),
        })
    clt_params = symmetry.BlockParams(
        beta=cfg["beta"], n_blocks=1, k_rule=cfg["k_rule"], k0=cfg["k0"])
    clt_block = symmetry._make_block(cfg["clt_block"], 1, clt_params, key)
    clt = symmetry.clt_fluctuation_check(clt_block, cfg["replicas"], key)
    clt_rows = [{
        "block_n": cfg["clt_block"], "k": clt_block.k,
        "replicas": cfg["replicas"], "mean": clt.mean,
        "variance": clt.variance, "skew": clt.skew,
        "warning": clt.warning or "",
    }]
    return [
        ("symmetry_first_sum.csv",
         ["n", "A", "B", "C", "k", "exact_re", "exact_im", "predicted_re",
          "predicted_im", "residual", "third_order_scale"], sum_rows),
        ("symmetry_blocks.csv", ["n", "A", "B", "C", "k", "xi"], block_rows),
        ("symmetry_clt.csv",
         ["block_n", "k", "replicas", "mean", "variance", "skew", "warning"],
         clt_rows),
    ]


def run_region_scan(cfg, out_dir):
    result = symmetry.convergence_region_scan(
        cfg["betas"], cfg["eps"], cfg["n_blocks"], cfg["replicas"],
        StreamKey(cfg["seed"], "region-scan"), k_rule=cfg["k_rule"],
        k0=cfg["k0"], threads=cfg["threads"],
    )
    for row in result.rows:
        row["seed"] = cfg["seed"]
    fields = ["beta", "eps", "replica", "n_blocks", "checkpoint",
              "abs_partial", "converged", "seed"]
    heat = [
        {"beta": beta, "eps": eps, "converged_fraction": frac}
        for (beta, eps), frac in sorted(result.converged.items())
    ]
    return [
        ("region_scan.csv", fields, result.rows),
        ("region_heat.csv", ["beta", "eps", "converged_fraction"], heat),
    ]


def run_reference_check(cfg, out_dir):
    tol = cfg["tol"]
    rows = []
    failures = []

    def record(s, method, value, err):
        rows.append({
            "re_s": complex(s).real, "im_s": complex(s).imag, "method": method,
            "re_val": complex(value).real, "im_val": complex(value).imag,
            "err_bound": err,
        })

    z2, err2 = zeta_reference.zeta_via_eta_eval(2.0, tol)
    record(2.0, "eta", z2, err2)
    if abs(z2 - math.pi**2 / 6.0) > 1e-10:
        failures.append(f"zeta(2) off by {abs(z2 - math.pi**2 / 6.0):.3e}")

    z3, err3 = zeta_reference.zeta_via_eta_eval(3.0, tol)
    record(3.0, "eta", z3, err3)
    d3 = zeta_reference.dirichlet_partial(3.0, 10**4) + zeta_reference.dirichlet_tail(3.0, 10**4)
    record(3.0, "dirichlet", d3, 1e-12)
    if abs(z3 - d3) > 1e-10:
        failures.append("zeta(3) eta-vs-dirichlet mismatch")

    table = zeta_reference.build_stieltjes_table(8, cfg["stieltjes_m"])
    for offset in (0.1, 0.25, -0.2, 0.3j, 0.05 + 0.3j):
        s = 1.0 + offset
        lz = zeta_reference.zeta_laurent(s, table, cfg["laurent_terms"])
        ez, erre = zeta_reference.zeta_via_eta_eval(s, tol)
        record(s, "laurent", lz, float("nan"))
        record(s, "eta", ez, erre)
        if abs(lz - ez) > 1e-5:
            failures.append(f"laurent-vs-eta gap {abs(lz - ez):.2e} at s={s}")

    # phi'_N(s) = 1 - zeta_N(s) term by term; closing the truncation with
    # the analytic Dirichlet tail lets the check target the continued zeta.
    h = 1e-5
    n_phi = 10**6
    for sigma in np.linspace(1.5, 3.0, 10):
        fd = (zeta_reference.phi_partial(sigma + h, n_phi)
              - zeta_reference.phi_partial(sigma - h, n_phi)) / (2 * h)
        fd -= zeta_reference.dirichlet_tail(float(sigma), n_phi)
        target = 1.0 - zeta_reference.zeta_via_eta(float(sigma), tol)
        record(sigma, "dirichlet", fd, float("nan"))
        if abs(fd - target) > 1e-4:
            failures.append(f"phi'(s) != 1 - zeta(s) at sigma={sigma:.3f}")

    fields = ["re_s", "im_s", "method", "re_val", "im_val", "err_bound"]
    if failures:
        raise ModelIntegrityError("; ".join(failures))
    return [("reference_check.csv", fields, rows)]


def run_report(cfg, out_dir):
    source = Path(cfg["from_dir"])
    if not source.exists():
        raise ParameterError(f"run directory {source} does not exist")
    problems = verify_manifest(source)
    if problems:
        raise ModelIntegrityError("; ".join(problems))
    data = load_manifest(source)
    lines = [
        f"experiment: {data['experiment']}",
        f"master_seed: {data['master_seed']}",
        f"outputs verified: {len(data['outputs'])}",
    ]
    experiment = data["experiment"]
    if experiment == "count-stats":
        lines += _report_count_stats(source)
    elif experiment == "region-scan":
        lines += _report_region(source)
    elif experiment == "critical-line":
        lines += _report_critical(source)
    text = "\n".join(lines) + "\n"
    report_path = Path(out_dir) / "report.txt"
    with open(report_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return []


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _report_count_stats(source):
    rows = _read_csv(source / "count_stats.csv")
    by_rep: dict = {}
    for row in rows:
        lil = row["lil"]
        if lil == "nan":
            continue
        by_rep.setdefault(row["replica"], []).append(float(lil))
    total = len(by_rep)
    in_band = sum(1 for vals in by_rep.values() if all(0 < v <= 2.5 for v in vals))
    lines = ["", "LIL band occupancy (ratio in (0, 2.5] at all checkpoints):",
             f"  {in_band}/{total} replicas"]
    return lines


def _report_region(source):
    rows = _read_csv(source / "region_heat.csv")
    lines = ["", "converged fraction by (beta, eps):"]
    eps_vals = sorted({row["eps"] for row in rows}, key=float)
    beta_vals = sorted({row["beta"] for row in rows}, key=float)
    frac = {(row["beta"], row["eps"]): row["converged_fraction"] for row in rows}
    header = "  beta\\eps " + " ".join(f"{float(e):>8.3g}" for e in eps_vals)
    lines.append(header)
    for b in beta_vals:
        cells = " ".join(f"{float(frac[(b, e)]):>8.2f}" for e in eps_vals)
        lines.append(f"  {float(b):>8.3g} {cells}")
    return lines


def _report_critical(source):
    rows = _read_csv(source / "critical_line_summary.csv")
    lines = ["", "centered |S1' - E| quartiles:"]
    for row in rows:
        lines.append(
            f"  sigma={float(row['sigma']):g} N={row['N']}: "
            f"q25={float(row['centered_q25']):.4g} "
            f"q50={float(row['centered_q50']):.4g} "
            f"q75={float(row['centered_q75']):.4g}"
        )
    return lines


RUNNERS = {
    "sample": run_sample,
    "count-stats": run_count_stats,
    "zeta-grid": run_zeta_grid,
    "critical-line": run_critical_line,
    "additive": run_additive,
    "infinitude": run_infinitude,
    "symmetry": run_symmetry,
    "region-scan": run_region_scan,
    "reference-check": run_reference_check,
    "report": run_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zetalab",
        description="Seeded simulation laboratory for random prime models "
                    "and their random zeta functions.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="flat key=value config file")
        for gname, gparam in GLOBAL_SCHEMA.items():
            if gname in schema:
                continue  # subcommand schema owns the flag below
            p.add_argument(f"--{gname.replace('_', '-')}", default=None,
                           help=gparam.help)
        for pname, param in schema.items():
            flag = f"--{pname.replace('_', '-')}"
            if pname == "from_dir":
                flag = "--from"
            p.add_argument(flag, dest=pname, default=None, help=param.help)
    return parser


def _assemble_config(args) -> dict:
    raw: dict = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            raw.update(parse_config_text(fh.read()))
    raw.update(env_overrides())
    merged_names = set(GLOBAL_SCHEMA) | set(SCHEMAS[args.subcommand])
    for name in merged_names:
        value = getattr(args, name, None)
        if value is not None:
            raw[name] = value
    return validate_config(raw, args.subcommand)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _assemble_config(args)
    except ValidationError as exc:
        for violation in exc.violations:
            print(f"config error: {violation}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ParameterError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = Path(cfg["out_dir"])
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        probe = out_dir / ".write_probe"
        probe.write_text("", encoding="utf-8")
        probe.unlink()
    except OSError as exc:
        print(f"output directory not writable: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE

    manifest = _start_manifest(args.subcommand, cfg)
    try:
        outputs = RUNNERS[args.subcommand](cfg, out_dir)
    except (ValidationError, ParameterError) as exc:
        print(f"parameter error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ModelIntegrityError, SingularFactorError) as exc:
        print(f"integrity error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except ZetalabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    for name, fields, rows in outputs:
        path = out_dir / name
        write_csv(path, fields, rows)
        manifest.add_output(path)
    if args.subcommand == "sample":
        for item in sorted(out_dir.glob("indicators_rep*.bits")):
            manifest.add_output(item)
    if args.subcommand != "report":
        manifest.write(out_dir)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
