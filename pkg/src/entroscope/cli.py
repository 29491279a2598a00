"""Command-line driver: ``entroscope <group> <command> [flags]``.

Every run writes a header block (version, seed, config echo) followed by
either a CSV table with a schema line or a human-readable summary; ``--json``
switches to one JSON document. Exit codes: 0 ok, 2 validation error,
3 cap exceeded, 64 usage error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import combine, entropy, fixtures, gausscm, hypotest, polar, recovery
from .numkernel import ValidationError, load_json, matrix_from_json, random_state, state_from_json

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_USAGE = 0, 2, 3, 64
CAP_ERRORS = (hypotest.CapExceeded, polar.CapExceeded)
# flags that change how a run executes but never what it outputs
_NOT_ECHOED = {"out", "json", "threads", "func"}


@dataclass
class Table:
    columns: list  # (name, type) pairs
    rows: list
    summary: dict = field(default_factory=dict)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


# ------------------------------------------------------------ helpers

def _threads(args) -> int:
    if getattr(args, "threads", None):
        return max(1, args.threads)
    env = os.environ.get("ENTROSCOPE_THREADS", "")
    return max(1, int(env)) if env.isdigit() else 1


def _pmap(fn, items, threads: int):
    """Order-preserving map; a process pool when more than one worker is requested."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _nats(text: str) -> float:
    """Threshold in nats; a trailing ``ln2`` multiplies by ln 2 (``0.05ln2``)."""
    t = str(text).strip()
    try:
        return float(t[:-3] or 1.0) * math.log(2) if t.endswith("ln2") else float(t)
    except ValueError as exc:
        raise ValidationError(f"bad threshold {text!r}") from exc


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.12e}"
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def config_echo(args) -> dict:
    return {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in _NOT_ECHOED}


def render(args, result) -> str:
    cfg = config_echo(args)
    if args.json:
        body = {"version": __version__, "seed": args.seed, "config": cfg}
        if isinstance(result, Table):
            body["columns"] = [c for c, _ in result.columns]
            body["rows"] = _jsonable(result.rows)
            body["summary"] = _jsonable(result.summary)
        else:
            body["result"] = _jsonable(result)
        return json.dumps(body, sort_keys=True, indent=1) + "\n"
    head = [f"# entroscope {__version__}", f"# seed: {args.seed}",
            f"# config: {json.dumps(cfg, sort_keys=True)}"]
    if isinstance(result, Table):
        if result.summary:
            head.append(f"# summary: {json.dumps(_jsonable(result.summary), sort_keys=True)}")
        head.append("# schema: " + ",".join(f"{c}:{t}" for c, t in result.columns))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([c for c, _ in result.columns])
        for r in result.rows:
            w.writerow([_fmt(r[c]) for c, _ in result.columns])
        return "\n".join(head) + "\n" + buf.getvalue()
    lines = [f"{k}: {json.dumps(_jsonable(v))}" for k, v in result.items()]
    return "\n".join(head + lines) + "\n"


# ------------------------------------------------------------ entropy

def cmd_entropy_eval(args):
    st = state_from_json(load_json(args.file))
    rho, dims = st.mat, list(st.dims)
    out = {"dims": dims, "von_neumann": entropy.von_neumann(rho)}
    if len(dims) >= 2:
        out["conditional_entropy_0_given_1"] = entropy.conditional_entropy(rho, [0], [1], dims)
        out["mutual_information_0_1"] = entropy.mutual_information(rho, [0], [1], dims)
    if len(dims) >= 3:
        out["cqmi_0_1_given_2"] = entropy.cqmi(rho, [0], [1], [2], dims)
    return out


# ------------------------------------------------------------ hypotest

def _load_pair(path):
    d = load_json(path)
    try:
        return matrix_from_json(d["rho"]), matrix_from_json(d["sigma"])
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{path}: expected objects 'rho' and 'sigma'") from exc


def _parse_povm(text: str):
    kind, _, arg = text.partition(":")
    if kind == "sg":
        return hypotest.noisy_stern_gerlach(float(arg))
    if kind == "covariant":
        return hypotest.covariant_qubit_povm(int(arg or 500))
    if kind == "fixture":
        return fixtures.povm_0402()[0] if arg == "povm_0402" else _bad_fixture(arg)
    if kind == "file":
        d = load_json(arg)
        return hypotest.Povm(tuple(matrix_from_json(e) for e in d["effects"]))
    raise ValidationError(f"unknown POVM spec {text!r}; use sg:r, covariant:N, fixture:NAME or file:PATH")


def _bad_fixture(name):
    raise ValidationError(f"fixture {name!r} is not a POVM")


def cmd_hypo_exponent(args):
    rho, sigma = _load_pair(args.file)
    out = {"stein": hypotest.stein_exponent(rho, sigma).value}
    ch = hypotest.chernoff_exponent(rho, sigma)
    out["chernoff"], out["chernoff_s"] = ch.value, ch.argmin_s
    if args.r is not None:
        out["hoeffding"] = hypotest.hoeffding_exponent(rho, sigma, args.r).value
    out["min_error_prob_single_copy"] = hypotest.min_error_prob(rho, sigma)
    return out


def cmd_hypo_power(args):
    povm = _parse_povm(args.povm)
    res = hypotest.discrimination_power(povm, args.mode, args.r, restarts=args.restarts,
                                        rng=np.random.default_rng(args.seed))
    return {"mode": args.mode, "value": res.value, "orthogonal_witness": res.orthogonal}


def cmd_hypo_finite_n(args):
    if args.fixture != "povm_0402":
        _bad_fixture(args.fixture)
    povm, r0, r1, expected = fixtures.povm_0402()
    n = args.n
    if n < 1:
        raise ValidationError("n must be positive")
    out = {"n": n, "iid": hypotest.finite_n_error(povm, [r0] * n, [r1] * n)["p_err"]}
    if n >= 2:
        out["swapped_last"] = hypotest.finite_n_error(povm, [r0] * (n - 1) + [r1],
                                                      [r1] * (n - 1) + [r0])["p_err"]
    if n == 3:
        out["adaptive"] = hypotest.adaptive_finite_n(povm, fixtures.povm_0402_policy(r0, r1), 3)
        out["expected"] = expected
    return out


# ------------------------------------------------------------ recovery

def _scan_worker(job):
    x, restarts, maxiter = job
    return recovery.counterexample_scan([x], restarts=restarts, maxiter=maxiter)[0]


def cmd_recover_scan(args):
    xs = np.round(np.arange(args.x_min, args.x_max + 0.5 * args.step, args.step), 10)
    rows = _pmap(_scan_worker, [(float(x), args.restarts, args.maxiter) for x in xs], _threads(args))
    cols = [("x", "float"), ("cqmi", "float"), ("d_rec", "float"), ("d_m_rec", "float"),
            ("gap", "float"), ("flag", "bool")]
    return Table(cols, rows, {"flagged": [r["x"] for r in rows if r["flag"]]})


def _chain_worker(job):
    i, seed, restarts = job
    rng = np.random.default_rng(seed)
    rho = random_state(8, rng)
    dims = (2, 2, 2)
    rec = recovery.relative_entropy_of_recovery(rho, dims, restarts=restarts, rng=rng)
    dm = recovery.measured_relative_entropy_of_recovery(rho, dims, rec=rec, rng=rng)
    fo = recovery.fidelity_of_recovery(rho, dims, restarts=restarts, rng=rng, extra_starts=[rec.iso])
    return {"i": i, "cqmi": entropy.cqmi(rho, [0], [1], [2], dims), "d_rec": rec.value,
            "d_m_rec": dm, "neg2lnF": -math.log(max(fo.value, 1e-300)), "gap": rec.gap}


def cmd_recover_chain(args):
    seeds = np.random.SeedSequence(args.seed).spawn(args.n)
    jobs = [(i, int(s.generate_state(1)[0]), args.restarts) for i, s in enumerate(seeds)]
    rows = _pmap(_chain_worker, jobs, _threads(args))
    cols = [("i", "int"), ("cqmi", "float"), ("d_rec", "float"), ("d_m_rec", "float"),
            ("neg2lnF", "float"), ("gap", "float")]
    slack = args.slack
    bad = sum(not (r["cqmi"] >= r["d_m_rec"] - slack and r["d_m_rec"] >= r["neg2lnF"] - slack)
              for r in rows)
    return Table(cols, rows, {"chain_violations": bad, "slack": slack})


# ------------------------------------------------------------ combine

def cmd_combine_scan(args):
    res = combine.random_cq_scan(args.n, dim=args.dim, prior=args.prior, seed=args.seed,
                                 slack=args.slack)
    cols = [("i", "int")] + [(c, "float") for c in combine.SCAN_COLUMNS[1:]]
    return Table(cols, res["rows"], {"violations": res["violations"]})


def cmd_combine_bounds(args):
    h1, h2 = _nats(args.h1), _nats(args.h2)
    out = {"H1": h1, "H2": h2, "max_H": max(h1, h2), "qmgl_two": combine.qmgl_two(h1, h2)}
    out.update({f"conjecture_{k}": v for k, v in combine.conjecture_bounds(h1, h2).items()})
    if abs(h1 - h2) < 1e-15:
        out["qmgl_iid"] = combine.qmgl_iid(h1)
    return out


# ------------------------------------------------------------ polar

def _stats_table(stats):
    cols = [("n", "int"), ("alpha", "float"), ("theta", "float"), ("beta", "float"),
            ("mu", "float"), ("nu", "float")]
    rows = [{"n": s.n, "alpha": s.alpha, "theta": s.theta, "beta": s.beta, "mu": s.mu, "nu": s.nu}
            for s in stats]
    return Table(cols, rows, polar.stats_summary(stats))


def cmd_polar_run(args):
    w = polar.parse_channel(args.channel)
    return _stats_table(polar.polarization_run(w, args.depth, _nats(args.a), _nats(args.b), cap=args.cap))


def cmd_polar_nonstat(args):
    chans = [polar.parse_channel(c) for c in args.channels.split(",") if c]
    if args.repeat > 1:
        chans = chans * args.repeat
    return _stats_table(polar.nonstationary_run(chans, args.depth, _nats(args.a), _nats(args.b),
                                                cap=args.cap))


# ------------------------------------------------------------ gauss

def _load_cov(args):
    if bool(args.file) == bool(args.fixture):
        raise ValidationError("give exactly one of --file or --fixture")
    v = fixtures.gmono8x8() if args.fixture == "gmono8x8" else (
        gausscm.load_cov(args.file) if args.file else _bad_fixture(args.fixture))
    if args.parts:
        parts = gausscm.parse_parts(args.parts)
        v = gausscm.CovMatrix(v.mat, parts, v.unit, check=False)
    return v


def _need(labels, k, op):
    if len(labels) < k:
        raise ValidationError(f"--op {op} needs at least {k} parties")
    return labels


def cmd_gauss_check(args):
    v = _load_cov(args)
    labels = list(v.labels)
    rep = gausscm.is_qcm(v.mat)
    out = {"parts": [list(p) for p in v.parts], "is_qcm": rep.is_qcm,
           "nu_min": rep.symplectic_eigs[0], "symplectic_eigs": rep.symplectic_eigs}
    op = args.op
    if op in ("ssa", "satur", "petz"):
        a, b, c = _need(labels, 3, op)[:3]
        if op == "ssa":
            out["identities"] = gausscm.cmi_identities(v, a, b, c)
            out["ssa_operator"] = gausscm.ssa_operator_check(v, a, b, c)
            out["lower_bound"] = gausscm.cmi_lower_bound(v, a, b, c)
        elif op == "satur":
            out.update(gausscm.saturation_tests(v, a, b, c))
        else:
            rec = gausscm.petz_recovered(v, a, b, c)
            sub = v.sub([a, b, c]).mat
            out["cmi"] = gausscm.logdet_cmi(v, a, b, c)
            out["petz_vs_closed_form"] = float(np.abs(rec - gausscm.v_tilde(v, a, b, c)).max())
            out["rel_ent_to_recovered"] = gausscm.gaussian_rel_ent(sub, rec)
            out["fidelity_to_recovered"] = gausscm.gaussian_fidelity(sub, rec)
    elif op == "steer":
        _need(labels, 2, op)
        out.update(gausscm.steer_monogamy(v, labels[0], labels[1:]))
    elif op == "eof":
        a, b = _need(labels, 2, op)[:2]
        res = gausscm.renyi2_eof_bounds(v, a, b, restarts=args.restarts,
                                        rng=np.random.default_rng(args.seed))
        res.pop("tau")
        out.update(res)
    return out


# ------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="64-bit seed for every sampled quantity")
    common.add_argument("--out", help="write to this path instead of stdout")
    common.add_argument("--json", action="store_true", help="emit one JSON document")
    common.add_argument("--threads", type=int, default=None,
                        help="worker processes (default: ENTROSCOPE_THREADS or 1)")

    p = _Parser(prog="entroscope", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"entroscope {__version__}")
    groups = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def sub(group, name, func, help_):
        s = group.add_parser(name, parents=[common], help=help_)
        s.set_defaults(func=func)
        return s

    g = groups.add_parser("entropy", help="entropic quantities of a state file")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(gs, "eval", cmd_entropy_eval, "entropy, conditional entropy, MI and CQMI")
    s.add_argument("--file", required=True)

    g = groups.add_parser("hypo", help="hypothesis-testing exponents")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(gs, "exponent", cmd_hypo_exponent, "Stein, Chernoff and Hoeffding exponents of a pair")
    s.add_argument("--file", required=True, help='JSON with "rho" and "sigma" matrix objects')
    s.add_argument("--r", type=float, default=None)
    s = sub(gs, "power", cmd_hypo_power, "discrimination power of a POVM")
    s.add_argument("--povm", required=True, help="sg:r | covariant:N | fixture:povm_0402 | file:PATH")
    s.add_argument("--mode", choices=["chernoff", "stein", "hoeffding"], default="chernoff")
    s.add_argument("--r", type=float, default=None)
    s.add_argument("--restarts", type=int, default=32)
    s = sub(gs, "finite-n", cmd_hypo_finite_n, "finite-n error of a fixed POVM")
    s.add_argument("--fixture", default="povm_0402")
    s.add_argument("--n", type=int, default=3)

    g = groups.add_parser("recover", help="recovery maps")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(gs, "scan", cmd_recover_scan, "ccq counterexample family scan")
    s.add_argument("--x-min", type=float, default=1.0)
    s.add_argument("--x-max", type=float, default=9.0)
    s.add_argument("--step", type=float, default=1.0)
    s.add_argument("--restarts", type=int, default=1)
    s.add_argument("--maxiter", type=int, default=5000)
    s = sub(gs, "chain", cmd_recover_chain, "recovery chain on random three-qubit states")
    s.add_argument("--n", type=int, default=20)
    s.add_argument("--restarts", type=int, default=1)
    s.add_argument("--slack", type=float, default=1e-5)

    g = groups.add_parser("combine", help="entropy of combined cq pairs")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(gs, "scan", cmd_combine_scan, "random cq-pair scan against all bounds")
    s.add_argument("--n", type=int, default=1000)
    s.add_argument("--dim", type=int, default=2)
    s.add_argument("--prior", choices=["uniform", "random"], default="uniform")
    s.add_argument("--slack", type=float, default=1e-7)
    s = sub(gs, "bounds", cmd_combine_bounds, "bounds for given entropies (nats, or e.g. 0.3ln2)")
    s.add_argument("--h1", required=True)
    s.add_argument("--h2", required=True)

    g = groups.add_parser("polar", help="polarization of cq channels")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name, func in (("run", cmd_polar_run), ("nonstat", cmd_polar_nonstat)):
        s = sub(gs, name, func, "stationary tree" if name == "run" else "nonstationary pairing")
        if name == "run":
            s.add_argument("--channel", required=True, help="bec:e | bsc:p | pure:a | file:PATH")
        else:
            s.add_argument("--channels", required=True, help="comma-separated channel specs")
            s.add_argument("--repeat", type=int, default=1, help="tile the channel list")
        s.add_argument("--depth", type=int, required=True)
        s.add_argument("--a", default="0.05ln2", help="lower threshold on I (nats or xln2)")
        s.add_argument("--b", default="0.95ln2", help="upper threshold on I")
        s.add_argument("--cap", type=int, default=polar.DEFAULT_CAP)

    g = groups.add_parser("gauss", help="Gaussian covariance-matrix checks")
    gs = g.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    s = sub(gs, "check", cmd_gauss_check, "run one check on a covariance matrix")
    s.add_argument("--file")
    s.add_argument("--fixture")
    s.add_argument("--parts", help="override parts, e.g. A:2,B:1,C:1")
    s.add_argument("--op", choices=["ssa", "satur", "petz", "steer", "eof"], required=True)
    s.add_argument("--restarts", type=int, default=8)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        text = render(args, args.func(args))
    except CAP_ERRORS as exc:
        sys.stderr.write(f"entroscope: cap exceeded: {exc}\n")
        return EXIT_CAP
    except (ValueError, KeyError, IndexError, OSError) as exc:
        sys.stderr.write(f"entroscope: invalid input: {exc}\n")
        return EXIT_VALIDATION
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
