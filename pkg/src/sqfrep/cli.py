"""Command-line surface: identity suites, counting, singular-series
evaluation, and estimator experiments, with versioned CSV/JSON output.

Output contract: rows are data only (no timestamps, no timings; those go
to stderr), so a fixed configuration reproduces byte-identical output.
CSV carries a `# <schema> v1 columns=name:type,...` comment; the JSON
form is an array of objects with the same field names, and the two
round-trip losslessly (floats are emitted via repr).
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
from dataclasses import dataclass

import numpy as np

from sqfrep.arith import CapacityError, build_sieve, factorize
from sqfrep.counting import (
    count_representations,
    segmented_prime_sieve,
    segmented_squarefree_sieve,
)
from sqfrep.estimator import (
    EXACT_MODE,
    PAPER_MODE,
    bessel_defect,
    build_moduli_set,
    compute_weights,
    estimate_inner,
    global_inner,
    lambda_progression_function,
    per_q_breakdown,
    squarefree_mirror_function,
)
from sqfrep.localmodel import ProgressionContext
from sqfrep.series import (
    DEFAULT_PRIME_CUTOFF,
    singular_series,
    singular_series_eulerform,
)
from sqfrep.verify import DEFAULT_SEED, SUITES

EXIT_OK = 0
EXIT_VERIFY = 1
EXIT_USAGE = 2
EXIT_CAPACITY = 3

# build_sieve above this limit would dwarf any reasonable request; larger
# targets fail with a capacity error inside the counting layer instead
MAX_SIEVE_LIMIT = 1 << 26


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob a run depends on, in one place.

    Identical configs (seed and thread count included) must produce
    byte-identical CSV/JSON; timings never enter the rows.  Tolerances
    are data here, not constants in code.
    """

    targets: tuple[int, ...] = ()
    q_max: int = 12
    q: int | None = None
    a: int | None = None
    qprime: int = 1
    aprime: int = 0
    p_cutoff: int = DEFAULT_PRIME_CUTOFF
    q1_bound: int = 8
    q2_bound: int = 2
    weight_mode: str = EXACT_MODE
    padding_constant: float = 1e4
    padding_exponent: float = 0.1
    out_format: str = "csv"
    out_path: str | None = None
    threads: int = 1
    seed: int = DEFAULT_SEED
    compare_tolerance: float = 0.05
    estimate_tolerance: float = 0.15
    per_q: bool = False

    def __post_init__(self) -> None:
        for name, value in (
            ("q_max", self.q_max),
            ("qprime", self.qprime),
            ("q1", self.q1_bound),
            ("q2", self.q2_bound),
            ("threads", self.threads),
        ):
            if value < 1:
                raise ValueError(f"--{name} must be positive")
        if any(n < 1 for n in self.targets):
            raise ValueError("--n must be positive")
        if self.p_cutoff < 2:
            raise ValueError("--p-cutoff must be at least 2")
        if self.q is not None and self.q < 1:
            raise ValueError("--q must be positive")
        if self.weight_mode not in (EXACT_MODE, PAPER_MODE):
            raise ValueError(f"unknown weight mode {self.weight_mode!r}")
        if self.out_format not in ("csv", "json"):
            raise ValueError(f"unknown format {self.out_format!r}")
        if self.compare_tolerance <= 0 or self.estimate_tolerance <= 0:
            raise ValueError("tolerances must be positive")


SCHEMAS: dict[str, list[tuple[str, str]]] = {
    "sqfrep-compare": [
        ("N", "int"),
        ("q", "int"),
        ("a", "int"),
        ("weighted", "float"),
        ("series", "float"),
        ("ratio", "float"),
        ("tail_bound", "float"),
        ("vanished", "bool"),
    ],
    "sqfrep-count": [
        ("N", "int"),
        ("q", "int"),
        ("a", "int"),
        ("weighted", "float"),
        ("unweighted", "int"),
        ("lambda_weighted", "float"),
    ],
    "sqfrep-series": [
        ("N", "int"),
        ("a", "int"),
        ("q", "int"),
        ("p_cutoff", "int"),
        ("rudimentary_value", "float"),
        ("rudimentary_tail", "float"),
        ("euler_value", "float"),
        ("euler_tail", "float"),
        ("delta", "float"),
        ("vanished", "bool"),
    ],
    "sqfrep-estimate": [
        ("N", "int"),
        ("q1_bound", "int"),
        ("q2_bound", "int"),
        ("qprime", "int"),
        ("aprime", "int"),
        ("direct", "float"),
        ("estimate", "float"),
        ("series_times_n", "float"),
        ("defect_f", "float"),
        ("defect_g", "float"),
        ("rel_error_direct", "float"),
        ("rel_error_series", "float"),
    ],
    "sqfrep-estimate-per-q": [
        ("N", "int"),
        ("q", "int"),
        ("exceptional", "bool"),
        ("degenerate", "bool"),
        ("eta_norm_sq", "float"),
        ("kappa_norm_sq", "float"),
        ("m_phi", "float"),
        ("m_psi", "float"),
        ("f_phi", "float"),
        ("phi_g", "float"),
        ("f_psi", "float"),
        ("psi_g", "float"),
        ("contribution", "float"),
        ("predicted_f_phi", "float"),
        ("predicted_phi_g", "float"),
        ("predicted_f_psi", "float"),
        ("predicted_psi_g", "float"),
    ],
    "sqfrep-selftest": [
        ("lo", "int"),
        ("hi", "int"),
        ("squarefree_mismatches", "int"),
        ("prime_mismatches", "int"),
        ("ok", "bool"),
    ],
}


def _encode_cell(value, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "float":
        return repr(float(value))
    return str(int(value))


def encode_csv(schema: str, rows: list[dict]) -> str:
    cols = SCHEMAS[schema]
    lines = [
        f"# {schema} v1 columns=" + ",".join(f"{n}:{t}" for n, t in cols),
        ",".join(n for n, _ in cols),
    ]
    for row in rows:
        lines.append(",".join(_encode_cell(row[n], t) for n, t in cols))
    return "\n".join(lines) + "\n"


def encode_json(schema: str, rows: list[dict]) -> str:
    cols = SCHEMAS[schema]
    shaped = [
        {
            n: bool(r[n]) if t == "bool" else float(r[n]) if t == "float" else int(r[n])
            for n, t in cols
        }
        for r in rows
    ]
    return json.dumps(shaped, indent=2) + "\n"


def parse_csv(text: str) -> tuple[str, list[dict]]:
    """Inverse of encode_csv, driven by the schema comment."""
    lines = text.strip().split("\n")
    header = lines[0]
    if not header.startswith("# ") or " columns=" not in header:
        raise ValueError("missing schema header comment")
    schema = header[2:].split(" ", 1)[0]
    cols = [
        tuple(part.split(":")) for part in header.split("columns=", 1)[1].split(",")
    ]
    rows = []
    for line in lines[2:]:
        cells = line.split(",")
        row = {}
        for (name, kind), cell in zip(cols, cells):
            if kind == "bool":
                row[name] = cell == "true"
            elif kind == "float":
                row[name] = float(cell)
            else:
                row[name] = int(cell)
        rows.append(row)
    return schema, rows


def _emit(schema: str, rows: list[dict], cfg: ExperimentConfig) -> None:
    text = (
        encode_csv(schema, rows)
        if cfg.out_format == "csv"
        else encode_json(schema, rows)
    )
    if cfg.out_path:
        with open(cfg.out_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _tables_for(max_target: int):
    limit = max(20_000, math.isqrt(max(max_target, 1)) + 1)
    return build_sieve(min(limit, MAX_SIEVE_LIMIT))


# ---------------------------------------------------------------------------
# subcommands


def cmd_verify(args) -> int:
    suites = list(SUITES) if args.suite == "all" else [args.suite]
    tables = build_sieve(20_000)
    results = []
    for name in suites:
        kwargs = {}
        if name == "arith":
            if args.q_max:
                kwargs["r_bound"] = args.q_max
        elif name == "local":
            if args.q_max:
                kwargs["q_bound"] = args.q_max
                kwargs["product_q_bound"] = min(args.q_max, 200)
                kwargs["pair_bound"] = min(args.q_max, 200)
            if args.qprime:
                kwargs["qprime_bound"] = args.qprime
            kwargs["seed"] = args.seed
        else:
            if args.q1:
                kwargs["q1_bound"] = args.q1
            if args.q2:
                kwargs["q2_bound"] = args.q2
            if args.n:
                kwargs["length_bound"] = args.n[0]
            kwargs["seed"] = args.seed
        results.extend(SUITES[name](tables, **kwargs))
    failures = 0
    for r in results:
        if r.passed:
            print(f"PASS {r.name} cases={r.cases}")
        else:
            failures += 1
            print(
                f"FAIL {r.name} cases={r.cases} failures={r.failures}"
                f" counterexample: {r.counterexample}"
            )
        print(f"  {r.name}: {r.elapsed:.2f}s", file=sys.stderr)
    return EXIT_VERIFY if failures else EXIT_OK


def cmd_compare(cfg: ExperimentConfig) -> int:
    tables = _tables_for(max(cfg.targets))
    rows = []
    consistent = True
    for n in cfg.targets:
        fn = factorize(n, tables)
        q_values = [cfg.q] if cfg.q is not None else list(range(1, cfg.q_max + 1))
        for q in q_values:
            fq = factorize(q, tables)
            residues = (
                [cfg.a % q]
                if cfg.a is not None
                else [a for a in range(q) if math.gcd(a, q) == 1]
            )
            for a in residues:
                sv = singular_series(fn, a, fq, cfg.p_cutoff)
                res = count_representations(n, a, q, tables, cfg.threads)
                print(
                    f"count N={n} q={q} a={a}: {res.elapsed:.3f}s",
                    file=sys.stderr,
                )
                if sv.vanished:
                    ratio = 0.0
                    if res.weighted != 0.0 or res.unweighted != 0:
                        consistent = False
                        print(
                            f"obstructed class (N={n}, q={q}, a={a}) has "
                            f"nonzero count {res.unweighted}",
                            file=sys.stderr,
                        )
                else:
                    ratio = res.weighted / (sv.value * n)
                rows.append(
                    {
                        "N": n,
                        "q": q,
                        "a": a,
                        "weighted": res.weighted,
                        "series": sv.value,
                        "ratio": ratio,
                        "tail_bound": sv.tail_bound,
                        "vanished": sv.vanished,
                    }
                )
    _emit("sqfrep-compare", rows, cfg)
    errors = [abs(r["ratio"] - 1.0) for r in rows if not r["vanished"]]
    if errors:
        med = statistics.median(errors)
        print(
            f"median |ratio-1| = {med:.4f} over {len(errors)} classes "
            f"(tolerance {cfg.compare_tolerance})",
            file=sys.stderr,
        )
        if med > cfg.compare_tolerance:
            return EXIT_VERIFY
    return EXIT_OK if consistent else EXIT_VERIFY


def cmd_estimate(cfg: ExperimentConfig) -> int:
    tables = _tables_for(max(cfg.targets))
    fqp = factorize(cfg.qprime, tables)
    rows = []
    per_q_rows = []
    breached = False
    for n in cfg.targets:
        ctx = ProgressionContext(n, cfg.aprime, cfg.qprime)
        f = lambda_progression_function(ctx, tables)
        g = squarefree_mirror_function(n, tables)
        ms = build_moduli_set(cfg.q1_bound, cfg.q2_bound, ctx, tables)
        if cfg.weight_mode == EXACT_MODE:
            w = compute_weights(ms, tables)
        else:
            w = compute_weights(
                ms,
                tables,
                mode=PAPER_MODE,
                padding_constant=cfg.padding_constant,
                padding_exponent=cfg.padding_exponent,
            )
        direct = float(global_inner(f, g))
        approx = float(estimate_inner(f, g, ms, w, tables))
        sv = singular_series(factorize(n, tables), cfg.aprime, fqp, cfg.p_cutoff)
        series_n = sv.value * n
        defect_f = float(bessel_defect(f, ms, w, tables))
        defect_g = float(bessel_defect(g, ms, w, tables))
        rel_direct = abs(approx / direct - 1.0) if direct else math.inf
        rel_series = abs(approx / series_n - 1.0) if series_n else math.inf
        rows.append(
            {
                "N": n,
                "q1_bound": cfg.q1_bound,
                "q2_bound": cfg.q2_bound,
                "qprime": cfg.qprime,
                "aprime": cfg.aprime,
                "direct": direct,
                "estimate": approx,
                "series_times_n": series_n,
                "defect_f": defect_f,
                "defect_g": defect_g,
                "rel_error_direct": rel_direct,
                "rel_error_series": rel_series,
            }
        )
        if cfg.weight_mode == EXACT_MODE and (defect_f < 0 or defect_g < 0):
            breached = True
            print(f"negative defect at N={n}", file=sys.stderr)
        if rel_direct > cfg.estimate_tolerance or rel_series > cfg.estimate_tolerance:
            breached = True
            print(
                f"N={n}: estimate off by {rel_direct:.3f} (direct) / "
                f"{rel_series:.3f} (series), tolerance {cfg.estimate_tolerance}",
                file=sys.stderr,
            )
        if cfg.per_q:
            for row in per_q_breakdown(f, g, ms, w, tables):
                per_q_rows.append({"N": n, **row})
    if cfg.per_q:
        _emit("sqfrep-estimate-per-q", per_q_rows, cfg)
        for row in rows:
            print(
                f"N={row['N']}: direct={row['direct']!r} "
                f"estimate={row['estimate']!r}",
                file=sys.stderr,
            )
    else:
        _emit("sqfrep-estimate", rows, cfg)
    return EXIT_VERIFY if breached else EXIT_OK


def cmd_series(cfg: ExperimentConfig) -> int:
    tables = _tables_for(max(cfg.targets))
    fq = factorize(cfg.q or 1, tables)
    a = cfg.a if cfg.a is not None else 0
    rows = []
    for n in cfg.targets:
        fn = factorize(n, tables)
        rud = singular_series(fn, a, fq, cfg.p_cutoff)
        eul = singular_series_eulerform(fn, a, fq, cfg.p_cutoff)
        rows.append(
            {
                "N": n,
                "a": a % fq.value,
                "q": fq.value,
                "p_cutoff": cfg.p_cutoff,
                "rudimentary_value": rud.value,
                "rudimentary_tail": rud.tail_bound,
                "euler_value": eul.value,
                "euler_tail": eul.tail_bound,
                "delta": abs(rud.value - eul.value),
                "vanished": rud.vanished,
            }
        )
    _emit("sqfrep-series", rows, cfg)
    return EXIT_OK


def cmd_count(cfg: ExperimentConfig) -> int:
    tables = _tables_for(max(cfg.targets))
    q = cfg.q or 1
    a = cfg.a if cfg.a is not None else 0
    rows = []
    for n in cfg.targets:
        res = count_representations(n, a, q, tables, cfg.threads)
        print(f"count N={n}: {res.elapsed:.3f}s", file=sys.stderr)
        rows.append(
            {
                "N": n,
                "q": q,
                "a": a % q,
                "weighted": res.weighted,
                "unweighted": res.unweighted,
                "lambda_weighted": res.lambda_weighted,
            }
        )
    _emit("sqfrep-count", rows, cfg)
    return EXIT_OK


def cmd_sieve_selftest(cfg: ExperimentConfig) -> int:
    tables = build_sieve(20_000)
    top = tables.limit**2
    width = 4096
    rng = np.random.default_rng(cfg.seed)
    starts = [0, top - width]
    starts += sorted(int(x) for x in rng.integers(1, top - width, size=6))
    rows = []
    ok_all = True
    for lo in starts:
        hi = lo + width
        sf = segmented_squarefree_sieve(lo, hi, tables)
        pr = segmented_prime_sieve(lo, hi, tables)
        sf_bad = 0
        pr_bad = 0
        for off in range(width):
            n = lo + off
            if n < 2:
                want_sf = n == 1
                want_pr = False
            else:
                f = factorize(n, tables)
                want_sf = f.is_squarefree
                want_pr = f.factors == ((n, 1),)
            sf_bad += bool(sf[off]) != want_sf
            pr_bad += bool(pr[off]) != want_pr
        ok = sf_bad == 0 and pr_bad == 0
        ok_all = ok_all and ok
        rows.append(
            {
                "lo": lo,
                "hi": hi,
                "squarefree_mismatches": sf_bad,
                "prime_mismatches": pr_bad,
                "ok": ok,
            }
        )
    _emit("sqfrep-selftest", rows, cfg)
    return EXIT_OK if ok_all else EXIT_VERIFY


# ---------------------------------------------------------------------------
# wiring


def _add_output_flags(sub, default_format: str = "csv") -> None:
    sub.add_argument("--format", choices=["csv", "json"], default=default_format)
    sub.add_argument("--out", default=None, help="write to a file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sqfrep",
        description=(
            "Count N = p + square-free with p in a progression, evaluate the "
            "matching singular series, and run the exact verification suites."
        ),
    )
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="run exact identity suites")
    v.add_argument("suite", choices=[*SUITES, "all"])
    v.add_argument("--q-max", type=int, default=None,
                   help="primary sweep bound (r for arith, q for local)")
    v.add_argument("--qprime", type=int, default=None)
    v.add_argument("--q1", type=int, default=None)
    v.add_argument("--q2", type=int, default=None)
    v.add_argument("--n", action="append", type=int, default=None,
                   help="lift length for the estimator suite")
    v.add_argument("--seed", type=int, default=DEFAULT_SEED)

    c = sub.add_parser(
        "compare", help="count vs singular-series prediction per progression"
    )
    c.add_argument("--n", action="append", type=int, required=True)
    c.add_argument("--q-max", type=int, default=12)
    c.add_argument("--q", type=int, default=None, help="single modulus")
    c.add_argument("--a", type=int, default=None, help="single residue class")
    c.add_argument("--p-cutoff", type=int, default=DEFAULT_PRIME_CUTOFF)
    c.add_argument("--threads", type=int, default=1)
    c.add_argument("--tolerance", type=float, default=0.05,
                   help="gate on the median |ratio - 1| (default 0.05)")
    _add_output_flags(c)

    e = sub.add_parser("estimate", help="bilinear estimator experiment")
    e.add_argument("--n", action="append", type=int, required=True)
    e.add_argument("--qprime", type=int, default=1)
    e.add_argument("--aprime", type=int, default=0)
    e.add_argument("--q1", type=int, default=8)
    e.add_argument("--q2", type=int, default=2)
    e.add_argument("--weights", choices=["exact", "paper"], default="exact")
    e.add_argument("--padding-constant", type=float, default=1e4,
                   help="paper-form additive padding scale (default 1e4)")
    e.add_argument("--padding-exponent", type=float, default=0.1,
                   help="paper-form padding exponent of N (default 0.1)")
    e.add_argument("--p-cutoff", type=int, default=DEFAULT_PRIME_CUTOFF)
    e.add_argument("--tolerance", type=float, default=0.15,
                   help="gate on both relative errors (default 0.15)")
    e.add_argument("--per-q", action="store_true",
                   help="emit the per-modulus breakdown table instead")
    _add_output_flags(e)

    s = sub.add_parser("series", help="both singular-series forms")
    s.add_argument("--n", action="append", type=int, required=True)
    s.add_argument("--q", type=int, default=1)
    s.add_argument("--a", type=int, default=0)
    s.add_argument("--p-cutoff", type=int, default=DEFAULT_PRIME_CUTOFF)
    _add_output_flags(s, default_format="json")

    n = sub.add_parser("count", help="representation counts by segmented sieve")
    n.add_argument("--n", action="append", type=int, required=True)
    n.add_argument("--q", type=int, default=1)
    n.add_argument("--a", type=int, default=0)
    n.add_argument("--threads", type=int, default=1)
    _add_output_flags(n)

    t = sub.add_parser(
        "sieve-selftest", help="segmented sieves vs direct factorization"
    )
    t.add_argument("--seed", type=int, default=DEFAULT_SEED)
    _add_output_flags(t)
    return p


_WEIGHT_MODES = {"exact": EXACT_MODE, "paper": PAPER_MODE}


def _config_from(args) -> ExperimentConfig:
    return ExperimentConfig(
        targets=tuple(args.n) if getattr(args, "n", None) else (),
        q_max=getattr(args, "q_max", 12) or 12,
        q=getattr(args, "q", None),
        a=getattr(args, "a", None),
        qprime=getattr(args, "qprime", 1) or 1,
        aprime=getattr(args, "aprime", 0) or 0,
        p_cutoff=getattr(args, "p_cutoff", DEFAULT_PRIME_CUTOFF),
        q1_bound=getattr(args, "q1", 8) or 8,
        q2_bound=getattr(args, "q2", 2) or 2,
        weight_mode=_WEIGHT_MODES[getattr(args, "weights", "exact")],
        padding_constant=getattr(args, "padding_constant", 1e4),
        padding_exponent=getattr(args, "padding_exponent", 0.1),
        out_format=getattr(args, "format", "csv"),
        out_path=getattr(args, "out", None),
        threads=getattr(args, "threads", 1),
        seed=getattr(args, "seed", DEFAULT_SEED),
        compare_tolerance=(
            getattr(args, "tolerance", 0.05)
            if args.command == "compare"
            else 0.05
        ),
        estimate_tolerance=(
            getattr(args, "tolerance", 0.15)
            if args.command == "estimate"
            else 0.15
        ),
        per_q=getattr(args, "per_q", False),
    )


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        if args.command == "verify":
            return cmd_verify(args)
        cfg = _config_from(args)
        if args.command == "compare":
            return cmd_compare(cfg)
        if args.command == "estimate":
            return cmd_estimate(cfg)
        if args.command == "series":
            return cmd_series(cfg)
        if args.command == "count":
            return cmd_count(cfg)
        return cmd_sieve_selftest(cfg)
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except ValueError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
