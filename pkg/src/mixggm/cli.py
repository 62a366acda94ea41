"""Command line front end.

Subcommands: simulate | fit | select-m | evaluate. Exit codes: 0 success,
1 usage error, 2 data error (unreadable or inconsistent inputs), 3 numerical
failure. Every run writes a key=value manifest naming all flags, the seed,
and the package version, so outputs are reproducible bit for bit.

File formats: data as CSV (rows = samples, optional single header row,
17-significant-digit floats), edge lists as TSV with 1-based upper-triangle
indices sorted by q-value then (i, j), reports as key=value text where each
numeric value also carries a rounded human-readable copy in parentheses.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data import check_adjacency, edge_list, validate_data
from .errors import DataError, NumericalError
from .integrate import edge_test
from .metrics import cluster_rates, confusion, match_labels, norm_losses, pr_curve
from .mixture import ic_fit, select_m
from .simulate import SimDesign, banded_precision, simulate_mixture


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def _report_line(key, x) -> str:
    return f"{key}={_fmt(x)} ({float(x):.4g})"


class _Parser(argparse.ArgumentParser):
    # spec for exit codes reserves 2 for data errors, so usage errors exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(s):
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _alpha(s):
    v = float(s)
    if not (0.0 < v < 1.0):
        raise argparse.ArgumentTypeError("must lie in (0, 1)")
    return v


def _default_threads():
    raw = os.environ.get("MIXGGM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


# ---------------------------------------------------------------- file I/O


def read_data_csv(path) -> np.ndarray:
    """Numeric CSV, one sample per row; a single non-numeric first row is
    treated as a header. Errors name the 1-based file row."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    rows = []
    width = None
    start_checked = False
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = [t.strip() for t in line.split(",")]
        try:
            vals = [float(t) for t in parts]
        except ValueError:
            if not start_checked:
                start_checked = True  # header row
                continue
            raise DataError(f"{path}: malformed CSV row {lineno}") from None
        start_checked = True
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise DataError(
                f"{path}: malformed CSV row {lineno}: expected {width} columns, got {len(vals)}"
            )
        rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.asarray(rows, dtype=float)


def write_data_csv(path, arr, header=None):
    arr = np.asarray(arr, dtype=float)
    with open(path, "w") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in arr:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_labels_csv(path) -> np.ndarray:
    raw = read_data_csv(path)
    if raw.shape[1] != 1:
        raise DataError(f"{path}: expected a single label column")
    lab = raw[:, 0]
    if (lab != np.round(lab)).any() or lab.min() < 1:
        raise DataError(f"{path}: labels must be 1-based integers")
    return lab.astype(np.intp) - 1


def write_labels_csv(path, labels):
    with open(path, "w") as fh:
        fh.write("cluster\n")
        for v in np.asarray(labels):
            fh.write(f"{int(v) + 1}\n")


def write_matrix_csv(path, arr):
    with open(path, "w") as fh:
        for row in np.asarray(arr, dtype=float):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_matrix_csv(path) -> np.ndarray:
    m = read_data_csv(path)
    return m


def write_edges_tsv(path, rows, scored):
    """rows: list of (i, j) or (i, j, z, q) with 0-based i < j."""
    with open(path, "w") as fh:
        if scored:
            fh.write("i\tj\tz\tq\n")
            for i, j, z, q in rows:
                fh.write(f"{i + 1}\t{j + 1}\t{_fmt(z)}\t{_fmt(q)}\n")
        else:
            fh.write("i\tj\n")
            for i, j in rows:
                fh.write(f"{i + 1}\t{j + 1}\n")


def read_edges_tsv(path, p) -> np.ndarray:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    adj = np.zeros((p, p), dtype=bool)
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if lineno == 1 and parts[0].strip() == "i":
            continue
        try:
            i, j = int(parts[0]) - 1, int(parts[1]) - 1
        except (ValueError, IndexError):
            raise DataError(f"{path}: malformed TSV row {lineno}") from None
        if not (0 <= i < p and 0 <= j < p) or i == j:
            raise DataError(f"{path}: edge ({i + 1}, {j + 1}) outside 1..{p}")
        adj[i, j] = adj[j, i] = True
    return check_adjacency(adj)


def write_manifest(path, entries: dict):
    with open(path, "w") as fh:
        for k, v in entries.items():
            if isinstance(v, float):
                v = _fmt(v)
            fh.write(f"{k}={v}\n")


def read_manifest(path) -> dict:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as e:
        raise DataError(f"cannot read {path}: {e}") from None
    out = {}
    for line in lines:
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ------------------------------------------------------------- subcommands


def cmd_simulate(args) -> int:
    c = [float(t) for t in str(args.c).split(",")]
    if len(c) == 1:
        c = c * args.M
    design = SimDesign(M=args.M, p=args.p, n_per=args.n_per, m=args.m, c=tuple(c), seed=args.seed)
    sim = simulate_mixture(design)
    out = _outdir(args.out)
    write_data_csv(out / "data.csv", sim.data.values, header=[f"v{j + 1}" for j in range(args.p)])
    write_labels_csv(out / "labels.csv", sim.labels)
    write_edges_tsv(out / "edges.tsv", [tuple(e) for e in edge_list(sim.adjacency)], scored=False)
    write_manifest(
        out / "manifest.txt",
        {
            "command": "simulate",
            "version": __version__,
            "M": design.M,
            "p": design.p,
            "n_per": design.n_per,
            "m": design.m,
            "c": ",".join(_fmt(v) for v in design.c),
            "seed": design.seed,
        },
    )
    return 0


def _fit_manifest(args, fit) -> dict:
    entries = {
        "command": "fit",
        "version": __version__,
        "data": str(args.data),
        "M": args.M,
        "T": args.T,
        "burn_in": args.burn_in,
        "alpha1": args.alpha1,
        "alpha2": args.alpha2,
        "min_cluster": args.min_cluster,
        "seed": args.seed,
        "threads": args.threads,
        "restarts": fit.settings["restarts"],
        "write_sigma": int(args.write_sigma),
    }
    for k, v in fit.diagnostics.items():
        entries[f"diag.{k}"] = v
    return entries


def _write_fit_outputs(out, fit, alpha2, write_sigma):
    adj, qm = edge_test(fit.zbar, alpha2)
    rows = []
    for i, j in edge_list(fit.adjacency):
        rows.append((int(i), int(j), float(fit.zbar[i, j]), float(qm[i, j])))
    rows.sort(key=lambda r: (r[3], r[0], r[1]))
    write_edges_tsv(out / "edges.tsv", rows, scored=True)
    write_matrix_csv(out / "zbar.csv", fit.zbar)
    write_labels_csv(out / "clusters.csv", fit.assignment)

    params = fit.params
    lines = []
    for k in range(params.M):
        lines.append(_report_line(f"pi.{k + 1}", params.pi[k]))
    for k in range(params.M):
        for j in range(params.p):
            lines.append(_report_line(f"mu.{k + 1}.{j + 1}", params.mu[k, j]))
    n_edges = edge_list(fit.adjacency).shape[0]
    for k in range(params.M):
        prec_nnz = 2 * n_edges + params.p
        lines.append(f"sigma.{k + 1}.precision_nonzero={prec_nnz}")
        lines.append(_report_line(f"sigma.{k + 1}.diag_mean", np.diag(params.sigma[k]).mean()))
    lines.append(f"edges={n_edges}")
    lines.append(_report_line("bic", fit.bic))
    (out / "params.txt").write_text("\n".join(lines) + "\n")

    if write_sigma:
        for k in range(params.M):
            write_matrix_csv(out / f"sigma_{k + 1}.csv", params.sigma[k])


def cmd_fit(args) -> int:
    X = validate_data(read_data_csv(args.data))
    fit = ic_fit(
        X,
        args.M,
        T=args.T,
        burn_in=args.burn_in,
        alpha1=args.alpha1,
        alpha2=args.alpha2,
        min_cluster=args.min_cluster,
        seed=args.seed,
        threads=args.threads,
        restarts=1 if args.restarts is None else args.restarts,
    )
    out = _outdir(args.out)
    _write_fit_outputs(out, fit, args.alpha2, args.write_sigma)
    write_manifest(out / "manifest.txt", _fit_manifest(args, fit))
    return 0


def cmd_select_m(args) -> int:
    X = validate_data(read_data_csv(args.data))
    m_values = [int(t) for t in str(args.m_values).split(",")]
    sel = select_m(
        X,
        m_values=m_values,
        seed=args.seed,
        T=args.T,
        burn_in=args.burn_in,
        alpha1=args.alpha1,
        alpha2=args.alpha2,
        min_cluster=args.min_cluster,
        threads=args.threads,
        restarts=2 if args.restarts is None else args.restarts,
    )
    out = _outdir(args.out)
    with open(out / "bic.tsv", "w") as fh:
        fh.write("M\tbic\tdf\tloglik\n")
        for row in sel.table:
            fh.write(f"{row['M']}\t{_fmt(row['bic'])}\t{row['df']}\t{_fmt(row['loglik'])}\n")
    write_manifest(
        out / "manifest.txt",
        {
            "command": "select-m",
            "version": __version__,
            "data": str(args.data),
            "m_values": ",".join(str(m) for m in m_values),
            "T": args.T,
            "burn_in": args.burn_in,
            "alpha1": args.alpha1,
            "alpha2": args.alpha2,
            "min_cluster": args.min_cluster,
            "seed": args.seed,
            "threads": args.threads,
            "restarts": 2 if args.restarts is None else args.restarts,
            "selected_m": sel.best_m,
        },
    )
    print(f"selected M = {sel.best_m}")
    return 0


def cmd_evaluate(args) -> int:
    est = Path(args.est)
    truth = Path(args.truth)
    zbar = read_matrix_csv(est / "zbar.csv")
    if zbar.ndim != 2 or zbar.shape[0] != zbar.shape[1]:
        raise DataError("zbar.csv must be a square matrix")
    p = zbar.shape[0]
    truth_adj = read_edges_tsv(truth / "edges.tsv", p)
    est_adj = read_edges_tsv(est / "edges.tsv", p)
    tau_hat = read_labels_csv(est / "clusters.csv")
    tau_true = read_labels_csv(truth / "labels.csv")
    if tau_hat.shape != tau_true.shape:
        raise DataError("estimated and true label files disagree in length")
    M = int(max(tau_hat.max(), tau_true.max())) + 1

    points, auc = pr_curve(zbar, truth_adj)
    tp, fp, fn, tn = confusion(est_adj, truth_adj)
    fsr, nsr = cluster_rates(tau_hat, tau_true, M)

    sl = fl = kl = None
    sigma_files = sorted(est.glob("sigma_*.csv"))
    t_manifest = read_manifest(truth / "manifest.txt") if (truth / "manifest.txt").exists() else {}
    if sigma_files and "c" in t_manifest:
        cs = [float(t) for t in t_manifest["c"].split(",")]
        if len(sigma_files) != len(cs):
            raise DataError("sigma file count does not match the truth design")
        sigma_hat = [read_matrix_csv(f) for f in sigma_files]
        for S in sigma_hat:
            if S.shape != (p, p):
                raise DataError("sigma CSV dimension mismatch")
        sigma_true = [np.linalg.inv(banded_precision(p, c)) for c in cs]
        perm = match_labels(tau_hat, tau_true, M)
        ordered = [None] * len(cs)
        for k in range(len(cs)):
            ordered[perm[k]] = sigma_hat[k]
        sl, fl, kl = norm_losses(ordered, sigma_true)

    out = _outdir(args.out)
    lines = [
        _report_line("auc", auc),
        f"tp={tp}",
        f"fp={fp}",
        f"fn={fn}",
        f"tn={tn}",
        _report_line("fsr", fsr),
        _report_line("nsr", nsr),
    ]
    if sl is not None:
        lines += [_report_line("sl", sl), _report_line("fl", fl), _report_line("kl", kl)]
    (out / "report.txt").write_text("\n".join(lines) + "\n")
    with open(out / "pr_points.csv", "w") as fh:
        fh.write("recall,precision\n")
        for r, q in points:
            fh.write(f"{_fmt(r)},{_fmt(q)}\n")
    write_manifest(
        out / "manifest.txt",
        {
            "command": "evaluate",
            "version": __version__,
            "est": str(args.est),
            "truth": str(args.truth),
        },
    )
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> _Parser:
    parser = _Parser(prog="mixggm", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    sim = sub.add_parser("simulate", parents=[], help="draw a benchmark mixture sample")
    sim.add_argument("--M", type=_positive_int, default=3, help="number of components")
    sim.add_argument("--p", type=_positive_int, default=100, help="dimension")
    sim.add_argument("--n-per", dest="n_per", type=_positive_int, default=100)
    sim.add_argument("--m", type=float, default=0.5, help="mean offset")
    sim.add_argument("--c", type=str, default="0.5", help="band strength(s), comma separated")
    sim.add_argument("--seed", type=_nonneg_int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    def fit_like(cmd):
        cmd.add_argument("--data", required=True)
        cmd.add_argument("--T", type=_positive_int, default=20)
        cmd.add_argument("--burn-in", dest="burn_in", type=_nonneg_int, default=10)
        cmd.add_argument("--alpha1", type=_alpha, default=0.2)
        cmd.add_argument("--alpha2", type=_alpha, default=0.05)
        cmd.add_argument("--min-cluster", dest="min_cluster", type=_positive_int, default=10)
        cmd.add_argument("--seed", type=_nonneg_int, default=0)
        cmd.add_argument("--threads", type=_positive_int, default=_default_threads())
        cmd.add_argument("--restarts", type=_positive_int, default=None,
                         help="independent chains per fit (default: 1 for fit, 2 for select-m)")
        cmd.add_argument("--out", required=True)

    fit = sub.add_parser("fit", help="fit a mixture of sparse graphical models")
    fit.add_argument("--M", type=_positive_int, required=True)
    fit_like(fit)
    fit.add_argument("--write-sigma", action="store_true", help="also write sigma_k.csv files")
    fit.set_defaults(func=cmd_fit)

    sel = sub.add_parser("select-m", help="choose the component count by BIC")
    sel.add_argument("--m-values", dest="m_values", default="1,2,3,4,5")
    fit_like(sel)
    sel.set_defaults(func=cmd_select_m)

    ev = sub.add_parser("evaluate", help="score a fit against a simulated truth")
    ev.add_argument("--est", required=True, help="fit output directory")
    ev.add_argument("--truth", required=True, help="simulate output directory")
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_evaluate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    try:
        return args.func(args)
    except DataError as e:
        print(f"mixggm: data error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"mixggm: i/o error: {e}", file=sys.stderr)
        return 2
    except NumericalError as e:
        print(f"mixggm: numerical failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
