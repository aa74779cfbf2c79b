"""Command-line front end: property checks, scaling benchmarks, matrix dumps.

Exit codes: 0 all good, 1 a property failed, 2 usage error (bad flags or spec
string), 3 I/O error.  CSV output uses LF line endings and a mandatory header
row; with a fixed seed and flags the bytes are identical across runs except
for the wall_ns column.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from .attention import lrpe_linear_attention, vanilla_attention
from .encoding import EncodingSpec, parse_spec, render_spec
from .numerics import Rng, random_mat
from .verify import (
    PropertyReport,
    check_anchor_independence,
    check_canonical_forms,
    check_decomposability,
    check_gradients,
    check_linear_vs_oracle,
    check_permutation_lemmas,
    check_unitarity,
)

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3

DEFAULT_LINEAR_SIZES = (1024, 2048, 4096, 8192, 16384)
DEFAULT_VANILLA_SIZES = (256, 512, 1024, 2048, 4096)

CHECK_HEADER = ("name", "max_error", "tolerance", "passed", "cases")
BENCH_HEADER = ("encoding", "p_matrix", "n", "d", "trial", "wall_ns")
DUMP_HEADER = ("s", "i", "j", "re", "im")


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class CliConfig:
    subcommand: str
    spec: str
    n: int = 32
    d: int = 32
    trials: int = 3
    seed: int = 0
    causal: bool = False
    out: str | None = None
    format: str = "csv"
    sizes: tuple[int, ...] | None = None
    attention: str = "linear"


@dataclass(frozen=True)
class BenchRow:
    encoding: str
    p_matrix: str
    n: int
    d: int
    trial: str
    wall_ns: float


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    slope: float
    r2: float

    @classmethod
    def from_csv(cls, text: str) -> "BenchReport":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if tuple(header) != BENCH_HEADER:
            raise ValueError(f"unexpected bench CSV header {header}")
        rows = []
        slope = float("nan")
        for rec in reader:
            row = BenchRow(rec[0], rec[1], int(rec[2]), int(rec[3]), rec[4], float(rec[5]))
            rows.append(row)
            if row.trial == "slope":
                slope = row.wall_ns
        return cls(rows=tuple(rows), slope=slope, r2=float("nan"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lrpe", description=__doc__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="encoding spec string, e.g. orthogonal:householder:a:16:q=0:seed=7")
        p.add_argument("--n", type=int, default=32)
        p.add_argument("--d", type=int, default=32)
        p.add_argument("--trials", type=int, default=3)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--causal", action="store_true")
        p.add_argument("--out", default=None)
        p.add_argument("--format", choices=("csv", "json"), default="csv")

    p_check = sub.add_parser("check", help="run the property suite for one spec")
    common(p_check)
    p_bench = sub.add_parser("bench", help="time attention across sizes and fit the log-log slope")
    common(p_bench)
    p_bench.add_argument("--sizes", default=None, help="comma-separated sequence lengths")
    p_bench.add_argument("--attention", choices=("linear", "vanilla"), default="linear")
    p_dump = sub.add_parser("dump", help="write dense W_s matrices for inspection")
    common(p_dump)
    return parser


def parse_args(argv) -> CliConfig:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        raise UsageError("bad command line") from exc
    sizes = None
    if getattr(ns, "sizes", None):
        try:
            sizes = tuple(int(part) for part in ns.sizes.split(","))
        except ValueError:
            raise UsageError(f"bad --sizes value {ns.sizes!r}") from None
    return CliConfig(
        subcommand=ns.subcommand,
        spec=ns.spec,
        n=ns.n,
        d=ns.d,
        trials=ns.trials,
        seed=ns.seed,
        causal=ns.causal,
        out=ns.out,
        format=ns.format,
        sizes=sizes,
        attention=getattr(ns, "attention", "linear"),
    )


def _write_text(cfg: CliConfig, text: str):
    if cfg.out is None:
        sys.stdout.write(text)
        return
    try:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise IOError(f"cannot write {cfg.out}: {exc}") from exc


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _reports_for(spec: EncodingSpec, cfg: CliConfig) -> list[PropertyReport]:
    reports = [
        check_unitarity(spec, s_max=64),
        check_decomposability(spec, s_max=32),
        check_anchor_independence(spec, r_max=16, anchor_max=16),
        check_canonical_forms(d=8, draws=100, seed=cfg.seed, rope_spec=spec),
        check_linear_vs_oracle(spec, n=min(cfg.n, 64), seed=cfg.seed),
    ]
    if spec.lambda_family == "permutation":
        reports.append(check_permutation_lemmas(spec))
    if spec.theta is not None:
        reports.append(check_gradients(spec, draws=50, seed=cfg.seed))
    return reports


def run_check(cfg: CliConfig) -> int:
    spec = parse_spec(cfg.spec)
    reports = _reports_for(spec, cfg)
    for rep in reports:
        status = "PASS" if rep.passed else "FAIL"
        print(
            f"{status} {rep.name}: max_error={rep.max_error:.3e} "
            f"tolerance={rep.tolerance:.1e} cases={rep.cases}"
        )
    if cfg.out is not None or cfg.format == "json":
        if cfg.format == "json":
            text = json.dumps({"spec": render_spec(spec), "reports": [asdict(r) for r in reports]}, indent=2) + "\n"
        else:
            text = _csv_text(
                CHECK_HEADER,
                [(r.name, repr(r.max_error), repr(r.tolerance), r.passed, r.cases) for r in reports],
            )
        _write_text(cfg, text)
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROPERTY_FAILURE


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------

def _bench_inputs(n: int, d: int, seed: int):
    rng = Rng(seed ^ n)
    return random_mat(rng, n, d), random_mat(rng, n, d), random_mat(rng, n, d)


def run_bench(cfg: CliConfig) -> int:
    spec = parse_spec(cfg.spec) if cfg.attention == "linear" else None
    if spec is not None and spec.d != cfg.d:
        raise UsageError(f"spec dimension {spec.d} does not match --d {cfg.d}")
    sizes = cfg.sizes or (DEFAULT_LINEAR_SIZES if cfg.attention == "linear" else DEFAULT_VANILLA_SIZES)
    if len(sizes) < 4 or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise UsageError("--sizes needs at least 4 strictly increasing values")
    encoding = spec.lambda_family if spec is not None else "vanilla"
    p_matrix = spec.p_family if spec is not None else "none"

    rows: list[BenchRow] = []
    best_times = []
    for n in sizes:
        q, k, v = _bench_inputs(n, cfg.d, cfg.seed)

        def work():
            if cfg.attention == "linear":
                lrpe_linear_attention(q, k, v, spec, causal=cfg.causal)
            else:
                vanilla_attention(q, k, v, causal=cfg.causal)

        work()  # warmup
        best = None
        for trial in range(cfg.trials):
            start = time.perf_counter_ns()
            work()
            wall = time.perf_counter_ns() - start
            rows.append(BenchRow(encoding, p_matrix, n, cfg.d, str(trial), float(wall)))
            best = wall if best is None else min(best, wall)
        best_times.append(best)

    logn = np.log(np.asarray(sizes, dtype=np.float64))
    logt = np.log(np.asarray(best_times, dtype=np.float64))
    slope, intercept = np.polyfit(logn, logt, 1)
    fitted = slope * logn + intercept
    ss_tot = float(np.sum((logt - logt.mean()) ** 2))
    r2 = 1.0 - float(np.sum((logt - fitted) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    rows.append(BenchRow(encoding, p_matrix, 0, cfg.d, "slope", float(slope)))

    print(f"{cfg.attention} slope={slope:.3f} r2={r2:.3f} sizes={','.join(map(str, sizes))}")
    if cfg.format == "json":
        payload = {
            "rows": [asdict(r) for r in rows],
            "slope": float(slope),
            "r2": r2,
        }
        _write_text(cfg, json.dumps(payload, indent=2) + "\n")
    else:
        csv_rows = [
            (r.encoding, r.p_matrix, r.n, r.d, r.trial,
             repr(r.wall_ns) if r.trial == "slope" else str(int(r.wall_ns)))
            for r in rows
        ]
        _write_text(cfg, _csv_text(BENCH_HEADER, csv_rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# dump
# ---------------------------------------------------------------------------

def run_dump(cfg: CliConfig) -> int:
    spec = parse_spec(cfg.spec)
    if cfg.n > 256:
        raise UsageError("dump is dense; --n must be <= 256")
    from .encoding import PositionTransform

    transform = PositionTransform(spec)
    if cfg.format == "json":
        mats = []
        for s in range(cfg.n):
            w = np.asarray(transform.materialize(s))
            mats.append({"s": s, "re": w.real.tolist(), "im": w.imag.tolist()})
        _write_text(cfg, json.dumps({"spec": render_spec(spec), "matrices": mats}, indent=2) + "\n")
        return EXIT_OK
    rows = []
    for s in range(cfg.n):
        w = np.asarray(transform.materialize(s))
        for i in range(spec.d):
            for j in range(spec.d):
                rows.append((s, i, j, repr(float(w[i, j].real)), repr(float(w[i, j].imag))))
    _write_text(cfg, _csv_text(DUMP_HEADER, rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_args(argv)
        if cfg.subcommand == "check":
            return run_check(cfg)
        if cfg.subcommand == "bench":
            return run_bench(cfg)
        return run_dump(cfg)
    except (UsageError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except IOError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
