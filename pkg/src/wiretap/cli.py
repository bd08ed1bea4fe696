"""Command-line front end: solve, sweep, kkt-check and plot.

Exit codes: 0 ok, 1 usage, 2 data or numerical failure, 3 not converged,
4 KKT check failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from wiretap.kkt import validate, xi_profile
from wiretap.model import ChannelPair, SymmetricInput, input_variance, log_output_pdf, output_mixture
from wiretap.numerics import DomainError, NumericalError, log_gaussian_pdf
from wiretap.solver import SolverConfig, SolverError, solve, sweep

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOT_CONVERGED, EXIT_KKT = 0, 1, 2, 3, 4
PDF_POINTS = 2001
PDF_REACH = 8.0

SWEEP_COLUMNS = ["A", "capacity_nats", "mi_legit", "mi_eve", "gaussian_mi_eve", "support_size",
                 "card_lower_bound", "converged", "near_transition"]

log = logging.getLogger("wiretap")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v:.12g}"


def _json_ready(obj):
    if isinstance(obj, dict):
        return {k: _json_ready(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_ready(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return None if not math.isfinite(v) else float(f"{v:.12g}")
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_json_ready(payload), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(header)
        for row in rows:
            out.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    if not path.is_file():
        raise UsageError(f"missing input file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"empty file: {path}")
    return rows[0], rows[1:]


def _config(args) -> SolverConfig:
    values = {}
    if args.config:
        try:
            values = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(values, dict):
            raise UsageError("config file must hold a flat JSON object")
    if args.epsilon is not None:
        values["epsilon"] = args.epsilon
    if args.early_exit:
        values["early_exit"] = True
    return SolverConfig.from_flat(values)


def _channel(args) -> ChannelPair:
    return ChannelPair(args.sigma1, args.sigma2)


def _outdir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def pdf_grid(amplitude: float, ch: ChannelPair) -> np.ndarray:
    reach = amplitude + PDF_REACH * max(ch.sigma1, ch.sigma2)
    return np.linspace(-reach, reach, PDF_POINTS)


def output_pdf_rows(inp: SymmetricInput, ch: ChannelPair):
    y = pdf_grid(inp.amplitude, ch)
    p1 = np.exp(log_output_pdf(output_mixture(inp, ch.sigma1), y))
    p2 = np.exp(log_output_pdf(output_mixture(inp, ch.sigma2), y))
    pg = np.exp(log_gaussian_pdf(y, 0.0, math.sqrt(input_variance(inp) + ch.sigma2**2)))
    return zip(y, p1, p2, pg)


def cmd_solve(args) -> int:
    ch = _channel(args)
    cfg = _config(args)
    out = _outdir(args.out)
    rep = solve(ch, args.amplitude, cfg)
    write_json(out / "solution.json", rep.to_dict())
    if rep.kkt is not None:
        xs, vals = rep.kkt.profile_x, rep.kkt.profile_xi
    else:
        xs, vals = xi_profile(rep.input, ch, cfg.grid_step_for(ch.sigma1, args.amplitude), cfg.quad)
    write_csv(out / "xi_profile.csv", ["x", "xi_nats"], zip(xs, vals))
    pts, probs = rep.input.full_support()
    write_csv(out / "input_pmf.csv", ["x", "probability"], zip(pts, probs))
    write_csv(out / "output_pdf.csv", ["y", "pdf_legitimate", "pdf_eavesdropper", "pdf_gaussian_match"],
              output_pdf_rows(rep.input, ch))
    log.info("A=%g capacity=%.10g nats, support size %d, converged=%s",
             rep.amplitude, rep.capacity, rep.full_support_size, rep.converged)
    print(f"capacity_nats={fmt(rep.capacity)} support_size={rep.full_support_size} converged={fmt(rep.converged)}")
    return EXIT_OK if rep.converged else EXIT_NOT_CONVERGED


def amplitude_grid(a_from: float, a_to: float, a_step: float) -> list[float]:
    if a_step <= 0 or a_from <= 0 or a_to < a_from:
        raise UsageError("need 0 < a-from <= a-to and a-step > 0")
    count = int(math.floor((a_to - a_from) / a_step + 1e-9)) + 1
    return [round(a_from + k * a_step, 12) for k in range(count)]


def cmd_sweep(args) -> int:
    ch = _channel(args)
    cfg = _config(args)
    out = _outdir(args.out)
    amps = amplitude_grid(args.a_from, args.a_to, args.a_step)
    reports = sweep(ch, amps, cfg)
    write_csv(out / "sweep.csv", SWEEP_COLUMNS, (
        [r.amplitude, r.capacity, r.mi_legit, r.mi_eve, r.gaussian_mi_eve, r.full_support_size,
         r.card_lower_bound, r.converged, r.near_transition] for r in reports))
    write_csv(out / "support.csv", ["A", "half_point", "weight"], (
        [r.amplitude, x, w] for r in reports if r.error is None
        for x, w in zip(r.input.half_points, r.input.half_weights)))
    write_csv(out / "gaps.csv", ["A", "gap_rank", "gap_value"], (
        [r.amplitude, k + 1, g] for r in reports if r.error is None for k, g in enumerate(r.gaps)))
    failed = [r.amplitude for r in reports if r.error is not None]
    stalled = [r.amplitude for r in reports if r.error is None and not r.converged]
    print(f"amplitudes={len(reports)} failed={len(failed)} not_converged={len(stalled)}")
    if failed:
        return EXIT_DATA
    return EXIT_NOT_CONVERGED if stalled else EXIT_OK


def load_pmf(path: Path, amplitude: float | None) -> SymmetricInput:
    header, rows = read_csv(path)
    if header[:2] != ["x", "probability"]:
        raise UsageError(f"{path}: expected columns x, probability")
    try:
        pts = [float(r[0]) for r in rows]
        probs = [float(r[1]) for r in rows]
    except (ValueError, IndexError) as exc:
        raise DomainError(f"{path}: malformed row ({exc})") from exc
    return SymmetricInput.from_full(pts, probs, amplitude=amplitude)


def cmd_kkt_check(args) -> int:
    ch = _channel(args)
    cfg = _config(args)
    inp = load_pmf(Path(args.pmf), args.amplitude)
    rep = validate(inp, ch, cfg.epsilon, cfg.grid_step_for(ch.sigma1, inp.amplitude), cfg.quad)
    out = _outdir(args.out)
    payload = rep.to_dict()
    payload.update(amplitude=inp.amplitude, sigma1=ch.sigma1, sigma2=ch.sigma2,
                   half_points=inp.half_points.tolist(), half_weights=inp.half_weights.tolist())
    write_json(out / "kkt.json", payload)
    print(f"valid={fmt(rep.valid)} capacity_proxy={fmt(rep.capacity_proxy)} "
          f"max_profile_violation={fmt(rep.max_profile_violation)} candidate_x={fmt(rep.candidate_x)}")
    return EXIT_OK if rep.valid else EXIT_KKT


def _columns(path: Path) -> dict[str, np.ndarray]:
    header, rows = read_csv(path)
    if not rows:
        raise UsageError(f"no data rows in {path}")
    cols = list(zip(*rows))
    parse = lambda s: {"true": 1.0, "false": 0.0}.get(s, None)
    out = {}
    for name, col in zip(header, cols):
        out[name] = np.array([parse(v) if parse(v) is not None else float(v) for v in col])
    return out


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams.update({"svg.hashsalt": "wiretap", "svg.fonttype": "none", "figure.figsize": (6.4, 4.0)})
    return plt


def _save(plt, fig, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_sweep(indir: Path, outdir: Path) -> list[Path]:
    plt = _pyplot()
    sw = _columns(indir / "sweep.csv")
    sup = _columns(indir / "support.csv")
    made = []

    fig, ax = plt.subplots()
    ax.scatter(sup["A"], sup["half_point"], s=4, color="k")
    ax.set(xlabel="A", ylabel="nonnegative support points")
    made.append(outdir / "support.svg")
    _save(plt, fig, made[-1])

    fig, ax = plt.subplots()
    ax.scatter(sup["A"], sup["half_point"] / sup["A"], s=4, color="k")
    ax.set(xlabel="A", ylabel="support / A", ylim=(-0.02, 1.02))
    made.append(outdir / "support_normalized.svg")
    _save(plt, fig, made[-1])

    fig, ax = plt.subplots()
    ax.step(sw["A"], sw["support_size"], where="post", color="k")
    ax.set(xlabel="A", ylabel="support size")
    made.append(outdir / "support_size.svg")
    _save(plt, fig, made[-1])

    gaps_path = indir / "gaps.csv"
    if gaps_path.is_file():
        gp = _columns(gaps_path)
        fig, ax = plt.subplots()
        for rank in np.unique(gp["gap_rank"]):
            sel = gp["gap_rank"] == rank
            ax.plot(gp["A"][sel], gp["gap_value"][sel], ".", ms=3, label=f"gap {int(rank)}")
        ax.set(xlabel="A", ylabel="distance between adjacent points")
        ax.legend(fontsize="small")
        made.append(outdir / "gaps.svg")
        _save(plt, fig, made[-1])

    fig, ax = plt.subplots()
    ax.plot(sw["A"], sw["capacity_nats"], color="k")
    ax.set(xlabel="A", ylabel="secrecy capacity (nats)")
    made.append(outdir / "capacity.svg")
    _save(plt, fig, made[-1])

    fig, ax = plt.subplots()
    ax.plot(sw["A"], sw["mi_legit"], label="I(X;Y1)")
    ax.plot(sw["A"], sw["mi_eve"], label="I(X;Y2)")
    ax.plot(sw["A"], sw["gaussian_mi_eve"], "--", label="Gaussian input, eavesdropper")
    ax.set(xlabel="A", ylabel="nats")
    ax.legend(fontsize="small")
    made.append(outdir / "mutual_information.svg")
    _save(plt, fig, made[-1])
    return made


def plot_solution(indir: Path, outdir: Path) -> list[Path]:
    plt = _pyplot()
    sol = json.loads((indir / "solution.json").read_text(encoding="utf-8"))
    pdf = _columns(indir / "output_pdf.csv")
    pmf = _columns(indir / "input_pmf.csv")
    a, s2 = sol["amplitude"], sol["sigma2"]
    fig, ax = plt.subplots()
    ax.plot(pdf["y"], pdf["pdf_legitimate"], label="legitimate output")
    ax.plot(pdf["y"], pdf["pdf_eavesdropper"], label="eavesdropper output")
    ax.plot(pdf["y"], pdf["pdf_gaussian_match"], "--", label="matched Gaussian")
    ax.stem(pmf["x"], pmf["probability"], linefmt="k-", markerfmt="ko", basefmt=" ", label="input pmf")
    ax.set(xlabel="y", xlim=(-a - 3 * s2, a + 3 * s2), title=f"A = {fmt(a)}")
    ax.legend(fontsize="small")
    path = outdir / "output_pdf.svg"
    _save(plt, fig, path)
    return [path]


def cmd_plot(args) -> int:
    indir = Path(args.input)
    if not indir.is_dir():
        raise UsageError(f"missing input directory: {indir}")
    outdir = _outdir(args.out)
    made = []
    if (indir / "sweep.csv").is_file():
        made += plot_sweep(indir, outdir)
    if (indir / "solution.json").is_file():
        made += plot_solution(indir, outdir)
    if not made:
        raise UsageError(f"missing input file: {indir / 'sweep.csv'} or {indir / 'solution.json'}")
    for p in made:
        print(p)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="wiretap", description="Secrecy capacity of the amplitude-constrained Gaussian wiretap channel.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def channel_args(p):
        p.add_argument("--sigma1", type=float, required=True, help="legitimate noise std. dev.")
        p.add_argument("--sigma2", type=float, required=True, help="eavesdropper noise std. dev.")
        p.add_argument("--epsilon", type=float, default=None, help="KKT tolerance in nats")
        p.add_argument("--config", default=None, help="flat JSON file of solver settings")
        p.add_argument("--early-exit", action="store_true", help="stop inner loops once stationary")

    p = sub.add_parser("solve", help="solve one amplitude")
    channel_args(p)
    p.add_argument("-A", "--amplitude", type=float, required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="warm-started sweep over amplitudes")
    channel_args(p)
    p.add_argument("--a-from", type=float, required=True)
    p.add_argument("--a-to", type=float, required=True)
    p.add_argument("--a-step", type=float, required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kkt-check", help="validate a symmetric pmf file")
    channel_args(p)
    p.add_argument("--pmf", required=True, help="CSV with columns x, probability")
    p.add_argument("-A", "--amplitude", type=float, default=None, help="peak constraint (default: largest |x|)")
    p.add_argument("-o", "--out", default=".")
    p.set_defaults(func=cmd_kkt_check)

    p = sub.add_parser("plot", help="SVG figures from a solve or sweep directory")
    p.add_argument("-i", "--input", required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"wiretap: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DomainError, SolverError, NumericalError) as exc:
        print(f"wiretap: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
