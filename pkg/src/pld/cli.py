"""Command-line front end.

    pld surface    grid of Eve's distortion with a feasibility flag
    pld optimize   closed-form corner next to the exhaustive optimum
    pld iterate    the iterative strategy / alpha / blocklength loop
    pld montecarlo analytic vs simulated distortion
    pld verify     run the oracle checks

Exit status: 0 ok, 1 infeasible scenario, 2 closed-form/oracle mismatch,
3 I/O or configuration error.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys
import warnings
from dataclasses import replace

import numpy as np

from . import oracle
from .config import ConfigError, RunConfig, load_config
from .distortion import Strategy, StrategyProfile, strategy_distortion
from .fbl import blocklength_for, packet_error_probability, q_function
from .optimizer import (
    InfeasibleError,
    adaptive_allocate,
    brute_force_optimum,
    feasible_mask,
    optimal_alpha,
    run_algorithm1,
    theorem1_allocate,
)
from .semantic import SimConfig, simulate_distortion

EXIT_OK, EXIT_INFEASIBLE, EXIT_MISMATCH, EXIT_IO = 0, 1, 2, 3


class OutputError(OSError):
    pass


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, Strategy):
        return x.label
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


@contextlib.contextmanager
def _open_out(path):
    if path is None or path == "-":
        yield sys.stdout
        return
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as e:
        raise OutputError(f"cannot write {path}: {e.strerror}") from None
    with fh:
        yield fh


def _write_csv(path, header, rows):
    with _open_out(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _deterministic(cfg: RunConfig) -> bool:
    # Perception on both sides is the deterministic-decryptor problem with its own bound
    return cfg.eve_strategy is Strategy.PERCEPTION and cfg.bob_strategy is Strategy.PERCEPTION


def _bob_threshold(cfg: RunConfig) -> float:
    return cfg.d_bob_th if _deterministic(cfg) else cfg.d_bob_tilde_th


# ---------------------------------------------------------------------------

def cmd_surface(cfg: RunConfig) -> int:
    s = cfg.scenario()
    n = np.arange(cfg.n_lo, cfg.n_hi + 1)
    n_m, n_k = np.meshgrid(n, n, indexing="ij")
    checks = feasible_mask(s, n_m, n_k, cfg.alpha, cfg.bob_strategy, _bob_threshold(cfg))
    ok = np.logical_and.reduce(list(checks.values()))
    em, ek = s.eve_errors(n_m, n_k)
    d = strategy_distortion(em, ek, cfg.eve_strategy, s.dp)
    rows = (
        (int(n_m[i, j]), int(n_k[i, j]), float(d[i, j]), bool(ok[i, j]))
        for i in range(n.size)
        for j in range(n.size)
    )
    _write_csv(cfg.out, ["n_m", "n_k", "d_eve", "feasible"], rows)
    return EXIT_OK


def _closed_form(cfg: RunConfig, s):
    if _deterministic(cfg):
        return theorem1_allocate(s)
    return adaptive_allocate(cfg.eve_strategy, cfg.bob_strategy, cfg.alpha, s)


def cmd_optimize(cfg: RunConfig) -> int:
    s = cfg.scenario()
    try:
        cf, cf_err = _closed_form(cfg, s), None
    except InfeasibleError as e:
        cf, cf_err = None, e
    bf = brute_force_optimum(s, cfg.eve_strategy, cfg.bob_strategy, cfg.alpha,
                             (1, cfg.n_m_max), _bob_threshold(cfg))

    print(f"alpha={cfg.alpha} eve={cfg.eve_strategy.label} bob={cfg.bob_strategy.label}")
    if cf is None:
        print(f"closed form: infeasible, violated constraint: {cf_err.constraint}")
    else:
        print(f"closed form: (n_m, n_k)=({cf[0].n_m}, {cf[0].n_k}) d_eve={cf[1]!r}")
    if bf is None:
        print("oracle:      infeasible, empty feasible grid")
    else:
        print(f"oracle:      (n_m, n_k)=({bf[0].n_m}, {bf[0].n_k}) d_eve={bf[1]!r}")

    if cf is None and bf is None:
        status = EXIT_INFEASIBLE
    elif cf is None or bf is None:
        status = EXIT_MISMATCH
    else:
        same = cf[0] == bf[0] and abs(cf[1] - bf[1]) <= 1e-9
        status = EXIT_OK if same else EXIT_MISMATCH
    print("match" if status != EXIT_MISMATCH else "MISMATCH")

    if cfg.out is not None:
        row = [cfg.alpha, cfg.eve_strategy, cfg.bob_strategy]
        for res in (cf, bf):
            row += [res[0].n_m, res[0].n_k, res[1]] if res else [None, None, None]
        row.append(status != EXIT_MISMATCH)
        _write_csv(cfg.out, ["alpha", "eve_strategy", "bob_strategy",
                             "closed_n_m", "closed_n_k", "closed_d_eve",
                             "oracle_n_m", "oracle_n_k", "oracle_d_eve", "match"], [row])
    return status


def cmd_iterate(cfg: RunConfig) -> int:
    s = cfg.scenario(cfg.alpha_init)
    trace = run_algorithm1(s, cfg.iterations, cfg.alpha_init)
    rows = []
    for r in trace:
        a = r.allocation
        rows.append([r.t, r.eve_strategy, r.bob_strategy, r.alpha_o,
                     a.n_m if a else None, a.n_k if a else None, r.d_eve, r.d_bob,
                     r.feasible, ";".join(r.violations)])
    _write_csv(cfg.out, ["t", "eve_strategy", "bob_strategy", "alpha_o", "n_m", "n_k",
                         "d_eve", "d_bob", "feasible", "violations"], rows)
    if not trace.completed:
        last = trace.records[-1]
        print(f"iteration {last.t} infeasible: {', '.join(last.violations)}", file=sys.stderr)
        return EXIT_INFEASIBLE
    return EXIT_OK


def cmd_montecarlo(cfg: RunConfig) -> int:
    s = cfg.scenario()
    rows = []
    all_ok = True
    for k, strat in enumerate(Strategy):
        analytic = float(strategy_distortion(cfg.eps_m, cfg.eps_k, strat, s.dp))
        sim = SimConfig(s.dp.cb, cfg.alpha, cfg.eps_m, cfg.eps_k, StrategyProfile.pure(strat),
                        cfg.num_samples, cfg.seed + k)
        mean, se = simulate_distortion(sim)
        ok = oracle.within_sigma(analytic, mean, se)
        all_ok &= ok
        print(f"{strat.label:<10} analytic={analytic:.6f} simulated={mean:.6f} "
              f"stderr={se:.2e} {'pass' if ok else 'FAIL'}")
        rows.append([strat, analytic, mean, se, ok])
    if cfg.out is not None:
        _write_csv(cfg.out, ["strategy", "analytic", "simulated", "stderr", "pass"], rows)
    return EXIT_OK if all_ok else EXIT_MISMATCH


def cmd_verify(cfg: RunConfig) -> int:
    results = []

    xs = np.linspace(-8, 8, 321)
    dev = max(abs(q_function(x) - oracle.q_function_reference(x)) for x in xs)
    results.append(("q_function vs quadrature", dev < 1e-9, f"max dev {dev:.2e}"))

    s = cfg.scenario()
    worst = 0.0
    for ch in (s.bob, s.eve):
        for d in {cfg.d_m, cfg.d_k}:
            for eps in np.linspace(0.001, 0.5, 52)[1:-1]:
                n = blocklength_for(eps, d, ch)
                worst = max(worst, abs(packet_error_probability(n, d, ch) - eps))
    results.append(("blocklength inversion", worst < 1e-6, f"max dev {worst:.2e}"))

    for a in sorted({0.1, cfg.alpha}):
        sa = cfg.scenario(a)
        try:
            cf = theorem1_allocate(sa)
        except InfeasibleError:
            cf = None
        bf = brute_force_optimum(sa, Strategy.PERCEPTION, Strategy.PERCEPTION, a,
                                 (1, cfg.n_m_max), sa.cons.d_bob_th)
        ok = (cf is None and bf is None) or (
            cf is not None and bf is not None and cf[0] == bf[0] and abs(cf[1] - bf[1]) <= 1e-9
        )
        results.append((f"deterministic corner alpha={a}", ok, f"{cf} vs {bf}"))

    bad = []
    for a in (0.1, 0.5, 0.9):
        sa = cfg.scenario(a)
        for e in Strategy:
            for b in Strategy:
                try:
                    cf = adaptive_allocate(e, b, a, sa)
                except InfeasibleError:
                    cf = None
                bf = brute_force_optimum(sa, e, b, a, (1, cfg.n_m_max))
                if (cf is None) != (bf is None) or (cf and cf[0] != bf[0]):
                    bad.append(f"{a}/{e.label}/{b.label}")
    results.append(("adaptive corners", not bad, ", ".join(bad) or "27 cases agree"))

    eps_bob = (1e-3, 1e-3)
    eps_eve = (0.3, 0.6)
    gap = 0.0
    for e in Strategy:
        for b in Strategy:
            a_cf = optimal_alpha(e, b, *eps_bob, s)
            v_cf = strategy_distortion(*eps_eve, e, replace(s.dp, alpha=a_cf))
            a_ls, v_ls = oracle.alpha_oracle(e, b, eps_bob, eps_eve, s)
            if a_ls is not None:
                gap = max(gap, v_ls - v_cf)
    results.append(("alpha line search", gap <= 1e-6, f"max excess {gap:.2e}"))

    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_MISMATCH


COMMANDS = {
    "surface": cmd_surface,
    "optimize": cmd_optimize,
    "iterate": cmd_iterate,
    "montecarlo": cmd_montecarlo,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--alpha", help="ciphering probability")
    common.add_argument("--alpha-init", help="initial ciphering probability (iterate)")
    common.add_argument("--snr-bob-db", help="Bob's channel gain in dB")
    common.add_argument("--snr-eve-db", help="Eve's channel gain in dB")
    common.add_argument("--cardinality", help="codebook size S")
    common.add_argument("--iterations", help="number of iterations T (iterate)")
    common.add_argument("--samples", dest="num_samples", help="Monte-Carlo sample count")
    common.add_argument("--seed", help="RNG seed")
    common.add_argument("--eve-strategy", help="perception|dropping|exclusion")
    common.add_argument("--bob-strategy", help="perception|dropping|exclusion")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any configuration key (repeatable)")
    common.add_argument("--out", help="output CSV path (default: stdout)")

    p = argparse.ArgumentParser(prog="pld", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=fn.__name__.replace("cmd_", ""))
    return p


_OVERRIDE_KEYS = ("alpha", "alpha_init", "snr_bob_db", "snr_eve_db", "cardinality",
                  "iterations", "num_samples", "seed", "eve_strategy", "bob_strategy", "out")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {}
    for item in args.set:
        if "=" not in item:
            print(f"pld: --set expects KEY=VALUE, got {item!r}", file=sys.stderr)
            return EXIT_IO
        k, v = item.split("=", 1)
        overrides[k.strip()] = v.strip()
    for key in _OVERRIDE_KEYS:
        v = getattr(args, key)
        if v is not None:
            overrides[key] = v
    try:
        cfg = load_config(args.config, overrides)
        cfg.scenario()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            status = COMMANDS[args.command](cfg)
        for msg in dict.fromkeys(str(w.message) for w in caught):
            print(f"pld: warning: {msg}", file=sys.stderr)
        return status
    except (ConfigError, OutputError) as e:
        print(f"pld: {e}", file=sys.stderr)
        return EXIT_IO
    except InfeasibleError as e:
        print(f"pld: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
