"""Command-line interface.

Every JSON output is ``{"header": ..., "result": ...}`` where the header
records the artifact version, the verb, the fully resolved options and the
seed.  CSV outputs carry the same header as ``#`` comment lines.  Exit
status: 0 on success, 2 on option errors, 1 on numeric non-convergence.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path


from . import __version__
from .analytic import ConvergenceError, as_handle, cauchy_G, conv_G, markov_kernel_density, stieltjes_density
from .cumulants import cumulants_to_doc, free_add_convolve, m2c
from .families import CircleFamilySpec, FamilyError, FamilySpec, family_cumulants, family_moments, family_R, mult_convolve
from .jsonfmt import dumps, fmt_float
from .measures import (
    AtomicMeasure,
    CircleMomentSeq,
    GridDensity,
    MomentSeq,
    grid_to_csv,
    measure_from_doc,
    measure_to_doc,
    moments_of,
)
from .ncpart import catalan, enumerate_nc, moebius_to_top

DEFAULT_ORDER = 8
DEFAULT_GRID_POINTS = 400
DEFAULT_N = 500
DEFAULT_TRIALS = 20


class OptionError(ValueError):
    """Bad user input; reported as a one-line diagnostic with exit status 2."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise OptionError(message)


# -- option helpers ----------------------------------------------------------

def _grid(text):
    try:
        a, b, n = text.split(":")
        a, b, n = float(a), float(b), int(n)
    except ValueError:
        raise OptionError(f"grid must be a:b:n, got {text!r}") from None
    if not (b > a and n >= 2):
        raise OptionError("grid needs a < b and n >= 2")
    return a, b, n


def _coeffs(text):
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise OptionError(f"polynomial coefficients must be comma-separated numbers, got {text!r}") from None


def _load(path):
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise OptionError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise OptionError(f"{path} is not valid JSON: {exc.msg}") from None
    if isinstance(doc, dict) and "result" in doc and "type" not in doc:
        doc = doc["result"]
    try:
        return measure_from_doc(doc)
    except (ValueError, KeyError, TypeError) as exc:
        raise OptionError(f"{path}: {exc}") from None


def _moments(measure, K):
    if isinstance(measure, MomentSeq):
        if measure.K < K:
            raise OptionError(f"moment document has order {measure.K} < {K}")
        return measure.truncate(K)
    if isinstance(measure, FamilySpec):
        return family_moments(measure, K)
    if isinstance(measure, (AtomicMeasure, GridDensity)):
        return moments_of(measure, K)
    raise OptionError(f"no real moments for {type(measure).__name__}")


def _circle(measure, K):
    if isinstance(measure, CircleMomentSeq):
        if measure.K < K:
            raise OptionError(f"circle moment document has order {measure.K} < {K}")
        return CircleMomentSeq(measure.m[:K])
    if isinstance(measure, CircleFamilySpec):
        return measure.moments(K)
    raise OptionError("multiplicative convolution needs circle_moments or circle_atomic documents")


def _eps(args, grid):
    if args.epsilon is None:
        return None
    e = args.epsilon
    return (4 * e, 2 * e, e)


def _default_grid(measure):
    h = as_handle(measure)
    if h.support is None:
        p = measure.params
        lo, hi = p["loc"] - 10 * p["scale"], p["loc"] + 10 * p["scale"]
    else:
        lo, hi = h.support
        pad = 0.05 * (hi - lo) + 0.1
        lo, hi = lo - pad, hi + pad
    return lo, hi, DEFAULT_GRID_POINTS


def _header(args):
    opts = {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "out", "verb")}
    return {"version": __version__, "verb": args.verb, "options": opts, "seed": getattr(args, "seed", None)}


def _emit_json(args, result, **extra):
    doc = {"header": _header(args), "result": result, **extra}
    _write(args, dumps(doc) + "\n")


def _emit_csv(args, body, path=None):
    head = _header(args)
    lines = [f"# version: {head['version']}", f"# verb: {head['verb']}",
             "# options: " + dumps(head["options"], indent=None), "# seed: " + dumps(head["seed"])]
    text = "\n".join(lines) + "\n" + body
    if path is not None:
        Path(path).write_text(text)
    else:
        _write(args, text)


def _write(args, text):
    if getattr(args, "out", None):
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


# -- verbs -------------------------------------------------------------------

def cmd_nc(args):
    n = args.n
    if n < 0:
        raise OptionError("--n must be >= 0")
    if args.count:
        _emit_json(args, {"n": n, "count": catalan(n) if n <= 30 else None})
        return
    if n < 1:
        raise OptionError("listing needs --n >= 1")
    parts = enumerate_nc(n)
    if args.moebius:
        rows = [{"partition": str(p), "moebius": moebius_to_top(p)} for p in parts]
    else:
        rows = [str(p) for p in parts]
    _emit_json(args, {"n": n, "partitions": rows})


def cmd_cumulants(args):
    m = _moments(_load(args.measure), args.order)
    _emit_json(args, cumulants_to_doc(m2c(m, args.route)))


def cmd_convolve(args):
    lhs, rhs = _load(args.lhs), _load(args.rhs)
    K = args.order
    if args.op == "mult":
        out = mult_convolve(_circle(lhs, K), _circle(rhs, K), K)
        _emit_json(args, measure_to_doc(out))
        return
    result = measure_to_doc(free_add_convolve(_moments(lhs, K), _moments(rhs, K)))
    if not args.analytic:
        _emit_json(args, result)
        return
    ha, hb = as_handle(lhs), as_handle(rhs)
    if args.grid is None:
        if ha.support is None or hb.support is None:
            raise OptionError("--grid is required for unbounded measures")
        lo, hi = ha.support[0] + hb.support[0], ha.support[1] + hb.support[1]
        pad = 0.05 * (hi - lo) + 0.1
        grid = (lo - pad, hi + pad, DEFAULT_GRID_POINTS)
    else:
        grid = _grid(args.grid)
    dens = stieltjes_density(lambda z: conv_G(ha, hb, z), grid, _eps(args, grid))
    if args.density_out:
        _emit_csv(args, grid_to_csv(dens), args.density_out)
    _emit_json(args, result, density=measure_to_doc(dens), mass_defect=dens.mass_defect)


def cmd_density(args):
    measure = _load(args.measure)
    grid = _grid(args.grid) if args.grid else _default_grid(measure)
    h = as_handle(measure)
    dens = stieltjes_density(lambda z: cauchy_G(h, z), grid, _eps(args, grid))
    _emit_csv(args, f"# mass_defect: {fmt_float(dens.mass_defect)}\n" + grid_to_csv(dens))


def cmd_family(args):
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise OptionError(f"--params must be a JSON object: {exc.msg}") from None
    spec = FamilySpec(args.name, params)
    result = {"family": measure_to_doc(spec)}
    try:
        result["cumulants"] = cumulants_to_doc(family_cumulants(spec, args.order))
        result["moments"] = measure_to_doc(family_moments(spec, args.order))
    except FamilyError as exc:
        result["moments"] = None
        result["note"] = str(exc)
    pts = [complex(0, -y) for y in (0.05, 0.1, 0.2, 0.5)]
    samples = []
    for z in pts:
        try:
            samples.append({"z": z, "R": complex(family_R(spec, z))})
        except (FamilyError, ValueError) as exc:
            samples.append({"z": z, "R": None, "note": str(exc)})
    result["R_samples"] = samples
    _emit_json(args, result)


def cmd_simulate(args):
    from . import rmt

    if args.seed is None:
        raise OptionError("--seed is required for simulate")
    lhs, rhs = _load(args.lhs), _load(args.rhs)
    for m in (lhs, rhs):
        if not isinstance(m, AtomicMeasure):
            raise OptionError("simulate needs atomic measure documents")
    rng = rmt.Rng(args.seed)
    kw = dict(N=args.N, trials=args.trials, rng=rng)
    if args.experiment == "additive":
        rep = rmt.additive_experiment(lhs, rhs, **kw)
    elif args.experiment == "diagonal":
        rep = rmt.diagonal_experiment(lhs, rhs, **kw)
    elif args.experiment == "word":
        if not args.word:
            raise OptionError("--word is required for the word experiment")
        rep = rmt.word_trace_experiment(args.word, lhs, rhs, **kw)
    else:
        f = _coeffs(args.f) if args.f else [0.0, 1.0]
        g = _coeffs(args.g) if args.g else [0.0, 1.0]
        rep = rmt.kernel_experiment(lhs, rhs, f, g, **kw)
    if args.csv_out:
        _emit_csv(args, rep.to_csv(), args.csv_out)
    _emit_json(args, rep.to_dict())


def cmd_kernel(args):
    lhs, rhs = _load(args.lhs), _load(args.rhs)
    grid = _grid(args.grid)
    dens = markov_kernel_density(lhs, rhs, args.x, grid, _eps(args, grid))
    _emit_csv(args, f"# mass_defect: {fmt_float(dens.mass_defect)}\n" + grid_to_csv(dens))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="freeprob", description="Free probability toolkit")
    p.add_argument("--version", action="version", version=f"freeprob {__version__}")
    sub = p.add_subparsers(dest="verb", parser_class=_Parser, required=True)

    def verb(name, func, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--out", help="write output to this file instead of stdout")
        sp.set_defaults(func=func)
        return sp

    sp = verb("nc", cmd_nc, "non-crossing partitions")
    sp.add_argument("--n", type=int, required=True)
    mode = sp.add_mutually_exclusive_group(required=True)
    mode.add_argument("--list", action="store_true")
    mode.add_argument("--count", action="store_true")
    mode.add_argument("--moebius", action="store_true")

    sp = verb("cumulants", cmd_cumulants, "free cumulants of a measure")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--order", type=int, default=DEFAULT_ORDER)
    sp.add_argument("--route", choices=["a", "b", "moebius"], default="a")

    sp = verb("convolve", cmd_convolve, "free additive or multiplicative convolution")
    sp.add_argument("--op", choices=["add", "mult"], required=True)
    sp.add_argument("--lhs", required=True)
    sp.add_argument("--rhs", required=True)
    sp.add_argument("--order", type=int, default=DEFAULT_ORDER)
    sp.add_argument("--analytic", action="store_true")
    sp.add_argument("--grid")
    sp.add_argument("--epsilon", type=float)
    sp.add_argument("--density-out")

    sp = verb("density", cmd_density, "density by Stieltjes inversion")
    sp.add_argument("--measure", required=True)
    sp.add_argument("--grid")
    sp.add_argument("--epsilon", type=float)

    sp = verb("family", cmd_family, "named families: cumulants, moments, R samples")
    sp.add_argument("--name", required=True)
    sp.add_argument("--params", help="JSON object of parameters")
    sp.add_argument("--order", type=int, default=DEFAULT_ORDER)

    sp = verb("simulate", cmd_simulate, "random-matrix experiments")
    sp.add_argument("--experiment", choices=["additive", "diagonal", "word", "kernel"], required=True)
    sp.add_argument("--N", type=int, default=DEFAULT_N)
    sp.add_argument("--trials", type=int, default=DEFAULT_TRIALS)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--lhs", required=True)
    sp.add_argument("--rhs", required=True)
    sp.add_argument("--word")
    sp.add_argument("--f")
    sp.add_argument("--g")
    sp.add_argument("--csv-out")

    sp = verb("kernel", cmd_kernel, "Markov kernel density k(x, du)")
    sp.add_argument("--lhs", required=True)
    sp.add_argument("--rhs", required=True)
    sp.add_argument("--x", type=float, required=True)
    sp.add_argument("--grid", required=True)
    sp.add_argument("--epsilon", type=float)
    return p


def _order_ok(args):
    order = getattr(args, "order", None)
    if order is not None and order < 1:
        raise OptionError("--order must be >= 1")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        _order_ok(args)
        args.func(args)
    except ConvergenceError as exc:
        sys.stderr.write(f"freeprob: {exc}: {dumps(exc.diagnostic, indent=None)}\n")
        return 1
    except (OptionError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        sys.stderr.write(f"freeprob: error: {msg}\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
