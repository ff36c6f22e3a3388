"""Command-line front end.

Commands: exact, sample, compare, bench, kalai. Exit status is 0 on success,
1 when a verification threshold fails and 2 on bad usage or input.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__, grover, numtheory, shor, suite, tractable
from .distribution import ExactDistribution
from .errors import OracleCapExceeded
from .gates import parse_gates, random_clifford, random_ht, width
from .oracle import (
    GateList,
    GroverShortened,
    InverseTransformSampler,
    ShorPeriod,
    ShorSuperposedN,
    simulate,
)
from .rng import RandomSource
from .stats import ALPHA, tvd

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

SEED_HELP = (
    "64-bit seed. Chunk i of the output is drawn from sub-stream i, seeded by "
    "splitmix64 expansion of (seed XOR i * 0x9E3779B97F4A7C15), so runs with "
    "any --workers value are byte-identical. A random seed is generated and "
    "recorded in the output header when omitted."
)

CIRCUITS = ("shor", "shor-superposed", "grover", "grover-oracle", "ht", "clifford", "coset", "gatelist")


class UsageError(Exception):
    pass


# -- circuit plumbing ----------------------------------------------------------


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) is None]
    if missing:
        raise UsageError(f"--circuit {args.circuit} needs {' '.join(missing)}")


def _load_gates(args):
    if getattr(args, "random", None) is not None:
        design = RandomSource(args.seed if args.seed is not None else 0, 1 << 40).numpy()
        n = args.random
        if args.circuit == "ht":
            return n, random_ht(n, args.depth, design)
        return n, random_clifford(n, args.depth, design)
    _need(args, "file")
    with open(args.file) as fh:
        gates = parse_gates(fh.read())
    n = args.n if args.n is not None else max(1, width(gates))
    return n, gates


def _period(args):
    _need(args, "a", "N", "nx")
    if not 1 <= args.a < args.N:
        raise UsageError("need 1 <= a < N")
    return numtheory.period_structure(args.a, args.N)


def _grover_target(args):
    _need(args, "n", "t")
    if args.truth_table:
        with open(args.truth_table) as fh:
            box = grover.load_truth_table(fh.read(), args.n)
        if box.table is not None:
            return box.check_unique(), box
        return None, box
    x0 = 1 if args.x0 is None else args.x0
    return x0, grover.BlackBox.from_x0(args.n, x0)


def _coset_spec(args):
    _need(args, "orders", "generators", "shift")
    orders = tuple(int(v) for v in args.orders.split(","))
    gens = tuple(
        tuple(int(v) % d for v, d in zip(g.split(","), orders)) for g in args.generators.split(";") if g
    )
    shift = tuple(int(v) % d for v, d in zip(args.shift.split(","), orders))
    return tractable.AbelianGroupSpec(orders, gens, shift)


def exact_distribution(args) -> ExactDistribution:
    method = args.method
    c = args.circuit
    if c == "shor":
        period = _period(args)
        if method == "oracle":
            return simulate(ShorPeriod(args.a, args.N, args.nx, args.nf))
        return shor.exact_joint(period, args.nx, args.nf or ShorPeriod(args.a, args.N, args.nx).n_f)
    if c == "shor-superposed":
        _need(args, "a", "nN", "nx")
        if method == "oracle":
            return simulate(ShorSuperposedN(args.a, args.nN, args.nx, args.nf))
        return shor.exact_superposed_joint(args.a, args.nN, args.nx, args.nf)
    if c in ("grover", "grover-oracle"):
        x0, _ = _grover_target(args)
        if method == "oracle":
            return simulate(GroverShortened(args.n, args.t, x0=x0))
        if c == "grover-oracle":
            return grover.oracle_sampler_distribution(args.n, args.t, x0)
        return grover.two_point_distribution(args.n, args.t, x0)
    if c in ("ht", "clifford", "gatelist"):
        n, gates = _load_gates(args)
        if method == "oracle" or c == "gatelist":
            return simulate(GateList(n, gates))
        if c == "ht":
            return tractable.ht_distribution(gates, n)
        return tractable.clifford_distribution(gates, n)
    if c == "coset":
        spec = _coset_spec(args)
        members = tractable.coset_elements(spec)
        bits = max(1, (spec.size - 1).bit_length())
        probs = np.zeros(1 << bits)
        for m in members:
            probs[spec.index(m)] = 1.0 / len(members)
        return ExactDistribution(bits, probs)
    raise UsageError(f"unknown circuit {c}")


def _compact_input(args) -> dict:
    """The small input actually handed to the sampler."""
    c = args.circuit
    if c == "shor":
        p = _period(args)
        return {"a": args.a, "N": args.N, "n_x": args.nx, "r": p.period, "x_min": p.preperiod}
    if c == "shor-superposed":
        # draws with N <= a use a mod N
        return {"a": args.a, "n_N": args.nN, "n_x": args.nx, "a_reduced_when_N_le": args.a}
    if c == "grover":
        x0, _ = _grover_target(args)
        return {"n": args.n, "t": args.t, "x0": x0}
    if c == "grover-oracle":
        _, box = _grover_target(args)
        return {"n": args.n, "t": args.t, "f": args.truth_table or "x0=%d" % (1 if args.x0 is None else args.x0),
                "draws": grover.attempt_count(args.n, args.t)}
    if c in ("ht", "clifford", "gatelist"):
        n, gates = _load_gates(args)
        return {"n": n, "gates": len(gates)}
    if c == "coset":
        spec = _coset_spec(args)
        return {"orders": list(spec.orders), "K": [list(g) for g in spec.generators], "x": list(spec.shift)}
    raise UsageError(f"unknown circuit {c}")


def _sample_chunk(args, size: int, stream: int) -> np.ndarray:
    """``size`` records as a 2-D int64 array, drawn from sub-stream ``stream``."""
    gen = RandomSource(args.seed, stream).numpy()
    c = args.circuit
    if c == "shor":
        xt, fv = shor.sample_shor_batch(_period(args), args.nx, size, gen)
        return np.stack([xt, fv], axis=1)
    if c == "shor-superposed":
        ns, xt, fv, _ = shor.sample_superposed_n_batch(args.a, args.nN, args.nx, size, gen)
        return np.stack([ns, xt, fv], axis=1)
    if c == "grover":
        x0, _ = _grover_target(args)
        return grover.sample_with_x0_batch(x0, args.n, args.t, size, gen)[:, None]
    if c == "grover-oracle":
        _, box = _grover_target(args)
        return grover.sample_with_oracle_batch(box, args.n, args.t, size, gen)[:, None]
    if c == "ht":
        n, gates = _load_gates(args)
        return tractable.ht_sample_batch(gates, size, gen, n)[:, None]
    if c == "clifford":
        n, gates = _load_gates(args)
        return tractable.clifford_sample_batch(gates, size, gen, n)[:, None]
    if c == "coset":
        return tractable.coset_sample_batch(_coset_spec(args), size, gen)
    if c == "gatelist":
        n, gates = _load_gates(args)
        return InverseTransformSampler(simulate(GateList(n, gates))).sample_batch(size, gen)[:, None]
    raise UsageError(f"unknown circuit {c}")


def _chunk_job(payload):
    args, size, stream = payload
    return _sample_chunk(args, size, stream)


def draw_records(args) -> np.ndarray:
    chunks = [(args, min(args.chunk, args.count - lo), i) for i, lo in enumerate(range(0, args.count, args.chunk))]
    if not chunks:
        return np.zeros((0, 1), dtype=np.int64)
    if args.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(args.workers) as pool:
            parts = list(pool.map(_chunk_job, chunks))
    else:
        parts = [_chunk_job(c) for c in chunks]
    return np.concatenate(parts)


def _record_index(args, records: np.ndarray, dist: ExactDistribution) -> np.ndarray:
    """Map sample records onto outcome indices of ``dist``."""
    c = args.circuit
    if c == "shor":
        n_f = dist.registers[-1][1]
        return (records[:, 0] << n_f) | records[:, 1]
    if c == "shor-superposed":
        n_f = dist.registers[-1][1]
        return ((records[:, 0] - 1) << (args.nx + n_f)) | (records[:, 1] << n_f) | records[:, 2]
    if c == "coset":
        spec = _coset_spec(args)
        return np.array([spec.index(row) for row in records.tolist()], dtype=np.int64)
    return records[:, 0]


# -- output ------------------------------------------------------------------------


def _open_out(path):
    return open(path, "w") if path and path != "-" else sys.stdout


def _header(args, extra: dict) -> dict:
    return {
        "command": args.command,
        "circuit": getattr(args, "circuit", None),
        "seed": args.seed,
        "count": getattr(args, "count", None),
        "input": extra,
        "version": __version__,
    }


def write_records(args, header: dict, records: np.ndarray) -> None:
    out = _open_out(args.out)
    try:
        if args.format == "json":
            json.dump({"header": header, "records": records.tolist()}, out)
            out.write("\n")
        else:
            out.write("# " + json.dumps(header, sort_keys=True) + "\n")
            out.write("".join("\t".join(map(str, row)) + "\n" for row in records.tolist()))
    finally:
        if out is not sys.stdout:
            out.close()


def _emit(args, doc) -> None:
    out = _open_out(getattr(args, "out", None))
    try:
        out.write(doc if isinstance(doc, str) else json.dumps(doc))
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()


# -- commands ------------------------------------------------------------------------


def cmd_exact(args) -> int:
    dist = exact_distribution(args)
    dist.validate(1e-10)
    _emit(args, dist.to_json(sparse=not args.dense))
    return EXIT_OK


def cmd_sample(args) -> int:
    header = _header(args, _compact_input(args))
    write_records(args, header, draw_records(args))
    return EXIT_OK


def cmd_compare(args) -> int:
    if args.suite:
        numbers = [int(v) for v in args.criteria.split(",")] if args.criteria else None
        results = suite.run_suite(args.seed if args.seed is not None else suite.DEFAULT_SEED, numbers)
        for r in results:
            print(r.line())
            for msg in r.failures:
                print(f"    {msg}")
        ok = all(r.passed for r in results)
        print(f"{'PASS' if ok else 'FAIL'}: {sum(r.passed for r in results)}/{len(results)} criteria")
        return EXIT_OK if ok else EXIT_FAIL
    if args.circuit is None:
        raise UsageError("compare needs --circuit or --suite")
    report: dict = {"circuit": getattr(args, "circuit", None), "seed": args.seed, "input": _compact_input(args)}
    ok = True
    c = args.circuit
    if c in ("grover", "grover-oracle") and args.against == "oracle":
        x0, _ = _grover_target(args)
        report["discrepancy"] = grover.oracle_discrepancy(args.n, args.t, x0)
        report["threshold"] = None
        _emit(args, report)
        return EXIT_OK
    if c in ("grover", "grover-oracle"):
        x0, _ = _grover_target(args)
        reference = grover.two_point_distribution(args.n, args.t, x0)
        other = grover.oracle_sampler_distribution(args.n, args.t, x0)
        report["tvd_exact"] = tvd(reference, other)
        ok &= report["tvd_exact"] < 1e-12
    else:
        method = args.method
        args.method = "oracle"
        reference = exact_distribution(args)
        if c not in ("gatelist",):
            args.method = "formula"
            report["tvd_exact"] = tvd(reference, exact_distribution(args))
            ok &= report["tvd_exact"] < 1e-9
        args.method = method
    records = draw_records(args)
    idx = _record_index(args, records, reference)
    gof = suite.gof_or_point(idx, reference)
    report["gof"] = gof.to_dict()
    report["tvd_empirical"] = tvd(np.bincount(idx, minlength=reference.probs.size) / max(1, idx.size), reference)
    ok &= gof.passed(ALPHA)
    report["pass"] = bool(ok)
    _emit(args, report)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args) -> int:
    rows = []
    if args.target == "rho":
        rng = RandomSource(args.seed if args.seed is not None else 0)
        for k in range(4, args.log_q_max + 1):
            q = 1 << k
            for M in sorted({1, 2, q // 2, q - 1}):
                params = shor.RhoParams.create(M, q)
                sampler = shor.RhoSampler(params)
                start = time.perf_counter()
                for _ in range(args.count):
                    sampler.sample(rng)
                us = (time.perf_counter() - start) / args.count * 1e6
                rows.append({"q": q, "M": M, "nu": shor.nu(params), **shor.nu_terms(params),
                             "proposals_per_sample": sampler.mean_proposals, "us_per_sample": us})
    elif args.target == "grover":
        ts = range(1, args.t_max + 1)
        ns = range(args.n_min, args.n_max + 1)
        for t, n0 in grover.smallest_n_with_bound(ts, ns).items():
            rows.append({"t": t, "cap": grover.attempt_cap(t), "max_N": max(grover.attempt_count(n, t) for n in ns),
                         "smallest_n_with_bound": n0})
    elif args.target == "kalai":
        rng = RandomSource(args.seed if args.seed is not None else 0)
        for bits in range(4, args.log_n_max + 1, 4):
            start = time.perf_counter()
            for _ in range(args.count):
                numtheory.kalai_sample(1 << bits, rng)
            rows.append({"n_max": 1 << bits, "us_per_sample": (time.perf_counter() - start) / args.count * 1e6})
    elif args.target == "clifford":
        design = RandomSource(args.seed if args.seed is not None else 0).numpy()
        for n in (4, 8, 16, 32):
            for m in (10, 100, 1000):
                gates = random_clifford(n, m, design)
                start = time.perf_counter()
                tab = tractable.clifford_tableau(gates, n)
                evolve = time.perf_counter() - start
                tab.measure_all()
                rows.append({"n": n, "gates": m, "evolve_ms": evolve * 1e3,
                             "measure_ms": (time.perf_counter() - start - evolve) * 1e3})
    if args.format == "json":
        _emit(args, rows)
    else:
        keys = list(rows[0]) if rows else []
        lines = ["\t".join(keys)] + ["\t".join(_num(r[k]) for k in keys) for r in rows]
        _emit(args, "\n".join(lines))
    return EXIT_OK


def _num(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def cmd_kalai(args) -> int:
    rng = RandomSource(args.seed, 0)
    out = []
    for _ in range(args.count):
        if args.deep:
            d = numtheory.kalai_sample_deep(args.nmax, rng)
            preds = ",".join(f"{p}-1={pred}" for (p, _), pred in zip(d.outer.factors, d.predecessor_factors))
            out.append(f"{d.value}\t{d.outer}\t{preds}")
        else:
            f = numtheory.kalai_sample(args.nmax, rng)
            out.append(f"{f.value}\t{f}")
    header = "# " + json.dumps(_header(args, {"n_max": args.nmax, "deep": args.deep}), sort_keys=True)
    _emit(args, "\n".join([header, *out]))
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def _circuit_args(p, required=True):
    p.add_argument("--circuit", choices=CIRCUITS, required=required)
    p.add_argument("--a", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--nx", type=int)
    p.add_argument("--nN", type=int)
    p.add_argument("--nf", type=int)
    p.add_argument("--n", type=int, help="qubits (grover) or register width for gate files")
    p.add_argument("--t", type=int)
    p.add_argument("--x0", type=int, help="marked item for grover (default 1)")
    p.add_argument("--truth-table", help="file with 'x0=<int>' or a 2^n bit vector, 1 = marked")
    p.add_argument("--file", help="gate list, one gate per line")
    p.add_argument("--random", type=int, metavar="N_QUBITS", help="random ht/clifford circuit instead of --file")
    p.add_argument("--depth", type=int, default=30)
    p.add_argument("--orders", help="coset: cyclic orders, e.g. 4,6")
    p.add_argument("--generators", help="coset: subgroup generators, e.g. '2,0;0,3'")
    p.add_argument("--shift", help="coset: shift x, e.g. 1,1")
    p.add_argument("--method", choices=("oracle", "formula"), default="formula")
    p.add_argument("--seed", type=int, help=SEED_HELP)
    p.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="weaksim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("exact", help="exact outcome distribution as JSON")
    _circuit_args(p)
    p.add_argument("--dense", action="store_true", help="list every outcome, including zeros")
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("sample", help="draw samples", description=SEED_HELP)
    _circuit_args(p)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--chunk", type=int, default=1 << 16, help="records per sub-stream")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("compare", help="sampler vs exact reference")
    _circuit_args(p, required=False)
    p.add_argument("--count", type=int, default=100_000)
    p.add_argument("--chunk", type=int, default=1 << 16)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--against", choices=("oracle", "paper"), default="paper",
                   help="grover only: compare the two samplers' law, or that law against the statevector")
    p.add_argument("--suite", choices=("full",), help="run the acceptance criteria")
    p.add_argument("--criteria", help="comma-separated subset of criteria for --suite")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("bench", help="efficiency and bound measurements")
    p.add_argument("--target", choices=("rho", "grover", "kalai", "clifford"), default="rho")
    p.add_argument("--count", type=int, default=2000)
    p.add_argument("--log-q-max", type=int, default=16)
    p.add_argument("--log-n-max", type=int, default=32)
    p.add_argument("--n-min", type=int, default=8)
    p.add_argument("--n-max", type=int, default=30)
    p.add_argument("--t-max", type=int, default=100)
    p.add_argument("--seed", type=int)
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("kalai", help="random integers with their factorization")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--deep", action="store_true", help="also factor p-1 for each prime p")
    p.add_argument("--seed", type=int, help=SEED_HELP)
    p.add_argument("--out")
    p.set_defaults(func=cmd_kalai)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    needs_seed = args.command in ("sample", "kalai") or (args.command == "compare" and not args.suite)
    if getattr(args, "seed", None) is None and needs_seed:
        args.seed = int.from_bytes(os.urandom(8), "little")
    for name in ("count", "chunk", "workers"):
        if getattr(args, name, 1) is not None and getattr(args, name, 1) < (0 if name == "count" else 1):
            parser.error(f"--{name} out of range")
    try:
        return args.func(args)
    except (UsageError, OracleCapExceeded, ValueError, KeyError, OSError) as exc:
        print(f"weaksim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
