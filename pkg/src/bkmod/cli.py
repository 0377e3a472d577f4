"""Command-line entry point: ``bkmod <group> <command> [options]``.

Reports go to stdout, diagnostics to stderr.  Exit codes: 0 all checks
pass, 1 a checked claim failed, 2 indeterminate at the working precision,
3 input error.  The default seed for randomized suites is read from the
BKMOD_SEED environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import scenarios
from .breuil import (
    check_exact_breuil,
    check_exact_complex,
    check_monodromy,
    check_sdm_axioms,
    from_kisin,
    from_kisin_sequence,
    splice,
    tensor_breuil,
    tensor_fil_probe,
)
from .errors import BKError, InsufficientPrecision
from .fileformat import ModuleFile, parse_module_file, parse_poly, render_module_file, render_s
from .kisin import (
    check_exact_sequence,
    clear_denominator,
    dual,
    height_result,
    hodge_tate_weights,
    tensor,
    twist,
)
from .report import Claim, Report, Verdict
from .series import RingContext

EXIT_INPUT = 3


class InputError(Exception):
    pass


def default_seed() -> int:
    raw = os.environ.get("BKMOD_SEED")
    if raw is None:
        return scenarios.DEFAULT_SEED
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"BKMOD_SEED must be an integer, got {raw!r}")


def _load(path: str) -> ModuleFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}")
    return parse_module_file(text)


def _checks_report(title: str, ctx: RingContext, checks, seed=None, prefix: str = "") -> Report:
    rep = Report(title, seed, ctx.echo())
    prec = f"N={ctx.N}, M={ctx.M}"
    for c in checks.checks:
        rep.add(Claim(prefix + c.name, "check", c.verdict, c.witness, prec))
    return rep


def _exactness_report(title: str, ctx: RingContext, er) -> Report:
    rep = _checks_report(title, ctx, er.underlying, prefix="underlying: ")
    for c in er.fil.checks:
        rep.add(Claim("fil: " + c.name, "check", c.verdict, c.witness, f"N={ctx.N}, M={ctx.M}"))
    return rep


def _module_text(mf: ModuleFile, name: str, module) -> str:
    out = ModuleFile(ctx=mf.ctx)
    out.kisin[name] = module
    return render_module_file(out)


# ---------------------------------------------------------------------------
# handlers; each returns a Report or (text, exit code)


def cmd_ctx_new(args):
    ctx = RingContext.create(args.p, args.N, args.M, parse_poly(args.E))
    return render_module_file(ModuleFile(ctx=ctx)), 0


def cmd_kisin_height(args):
    mf = _load(args.file)
    m = mf.module(args.name)
    res = height_result(m, args.r)
    rep = Report("kisin height", None, mf.ctx.echo())
    witness = {"failing_column": res.failing_column} if res.failing_column is not None else None
    rep.add(Claim(f"{args.name} has height <= {args.r}", "check", res.verdict, witness, f"N={mf.ctx.N}, M={mf.ctx.M}"))
    return rep


def cmd_kisin_weights(args):
    mf = _load(args.file)
    w = hodge_tate_weights(mf.module(args.name))
    return json.dumps({"module": args.name, "weights": w}) + "\n", 0


def cmd_kisin_tensor(args):
    mf = _load(args.file)
    return _module_text(mf, args.out, tensor(mf.module(args.name), mf.module(args.other))), 0


def cmd_kisin_twist(args):
    mf = _load(args.file)
    return _module_text(mf, args.out, twist(mf.module(args.name), args.s)), 0


def cmd_kisin_dual(args):
    mf = _load(args.file)
    d = dual(mf.module(args.name))
    if args.clear:
        d = clear_denominator(d)
    return _module_text(mf, args.out, d), 0


def cmd_seq_check(args):
    mf = _load(args.file)
    names = [args.name] if args.name else sorted(mf.sequences)
    if not names:
        raise InputError("the file declares no sequences")
    rep = Report("sequence check", None, mf.ctx.echo())
    prec = f"N={mf.ctx.N}, M={mf.ctx.M}"
    for n in names:
        res = check_exact_sequence(mf.sequence(n))
        for c in res.checks:
            rep.add(Claim(f"{n}: {c.name}", "check", c.verdict, c.witness, prec))
    return rep


def _breuil(mf: ModuleFile, name: str):
    if name in mf.breuil:
        return mf.breuil[name].module
    raise InputError(f"no breuil record named {name!r}")


def cmd_breuil_from_kisin(args):
    mf = _load(args.file)
    b = from_kisin(mf.module(args.name), args.r)
    data = {
        "source": args.name,
        "r": args.r,
        "rank": b.rank,
        "fil_log_p_size": b.fil_span.log_size,
        "fil_generators": [[render_s(v) for v in g] for g in b.fil_generators],
        "phi_r_values": [[render_s(v) for v in g] for g in b.phi_r_values],
        "phi_r_precision": b.prec,
    }
    return json.dumps(data, indent=2, sort_keys=True) + "\n", 0


def cmd_breuil_axioms(args):
    mf = _load(args.file)
    return _checks_report("breuil axioms", mf.ctx, check_sdm_axioms(_breuil(mf, args.name)))


def cmd_breuil_monodromy(args):
    mf = _load(args.file)
    return _checks_report("breuil monodromy", mf.ctx, check_monodromy(_breuil(mf, args.name)))


def cmd_breuil_exact(args):
    mf = _load(args.file)
    maps = from_kisin_sequence(mf.sequence(args.name), args.r)
    return _exactness_report("breuil exactness", mf.ctx, check_exact_breuil(maps))


def cmd_breuil_tensor(args):
    mf = _load(args.file)
    b1, b2 = _breuil(mf, args.name), _breuil(mf, args.other)
    b = tensor_breuil(b1, b2)
    rep = _checks_report("breuil tensor", mf.ctx, check_sdm_axioms(b), prefix="tensor axioms: ")
    probe = tensor_fil_probe(b1, b2, b)
    prec = f"N={mf.ctx.N}, M={mf.ctx.M}"
    rep.add(Claim("Fil1 (x) Fil2 + Fil S M inside Fil of the tensor", "check", Verdict.of(probe["contained"]),
                  {"equal": probe["equal"]}, prec))
    return rep


def cmd_breuil_splice(args):
    mf = _load(args.file)
    first = from_kisin_sequence(mf.sequence(args.first), args.r)
    second = from_kisin_sequence(mf.sequence(args.second), args.r)
    return _exactness_report("spliced complex", mf.ctx, check_exact_complex(splice(first, second).maps))


def _paper(name):
    def run(args):
        kw = {k: getattr(args, k) for k in ("p", "N", "M") if getattr(args, k, None) is not None}
        if name in ("key-lemma", "heights", "axioms", "exactness"):
            kw["seed"] = args.seed if args.seed is not None else default_seed()
            if args.trials is not None:
                kw["trials"] = args.trials
        if name == "counterexample" and args.mutate:
            kw["mutate"] = True
        if name == "twists" and args.r_max is not None:
            kw["r_max"] = args.r_max
        if name == "exactness" and args.r is not None:
            kw["r"] = args.r
        if name == "exactness" and args.tensor_trials is not None:
            kw["tensor_trials"] = args.tensor_trials
        if name == "heights" and args.offblock:
            kw["offblock"] = args.offblock
        return scenarios.SCENARIOS[name](**kw)
    return run


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="bkmod", description="Finite-precision Kisin and Breuil module checks.")
    top.add_argument("--format", choices=("text", "json"), default="text", help="report rendering")
    top.add_argument("--timings", action="store_true", help="include wall times in reports")
    groups = top.add_subparsers(dest="group", required=True)
    # the same flags are accepted after the leaf command
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default=argparse.SUPPRESS)
    common.add_argument("--timings", action="store_true", default=argparse.SUPPRESS)

    def sub(group, name, func, help_):
        p = group.add_parser(name, help=help_, parents=[common])
        p.set_defaults(func=func)
        return p

    g = groups.add_parser("ctx", help="ring contexts").add_subparsers(dest="cmd", required=True)
    p = sub(g, "new", cmd_ctx_new, "validate a context and print a file header")
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--E", required=True, help="Eisenstein polynomial, e.g. 'u^2 + 3'")

    g = groups.add_parser("kisin", help="Kisin modules").add_subparsers(dest="cmd", required=True)
    p = sub(g, "height", cmd_kisin_height, "check height <= r")
    p.add_argument("--r", type=int, required=True)
    p = sub(g, "weights", cmd_kisin_weights, "Hodge-Tate weights")
    p = sub(g, "tensor", cmd_kisin_tensor, "tensor product")
    p.add_argument("--with", dest="other", required=True)
    p = sub(g, "twist", cmd_kisin_twist, "Breuil-Kisin twist")
    p.add_argument("--s", type=int, required=True)
    p = sub(g, "dual", cmd_kisin_dual, "dual module")
    p.add_argument("--clear", action="store_true", help="clear the denominator")
    for name in ("height", "weights", "tensor", "twist", "dual"):
        sp = g.choices[name]
        sp.add_argument("--file", required=True)
        sp.add_argument("--name", required=True)
        if name in ("tensor", "twist", "dual"):
            sp.add_argument("--out", default="result", help="name of the emitted record")

    g = groups.add_parser("seq", help="sequences of Kisin modules").add_subparsers(dest="cmd", required=True)
    p = sub(g, "check", cmd_seq_check, "exactness of declared sequences")
    p.add_argument("--file", required=True)
    p.add_argument("--name")

    g = groups.add_parser("breuil", help="Breuil modules").add_subparsers(dest="cmd", required=True)
    p = sub(g, "from-kisin", cmd_breuil_from_kisin, "apply the comparison functor")
    p.add_argument("--name", required=True)
    p.add_argument("--r", type=int, required=True)
    for name, func, help_ in (("axioms", cmd_breuil_axioms, "strongly divisible axioms"),
                              ("monodromy", cmd_breuil_monodromy, "monodromy axioms")):
        p = sub(g, name, func, help_)
        p.add_argument("--name", required=True)
    p = sub(g, "exact", cmd_breuil_exact, "exactness of the image of a sequence")
    p.add_argument("--name", required=True)
    p.add_argument("--r", type=int, required=True)
    p = sub(g, "tensor", cmd_breuil_tensor, "tensor product via the Kisin side")
    p.add_argument("--name", required=True)
    p.add_argument("--with", dest="other", required=True)
    p = sub(g, "splice", cmd_breuil_splice, "splice two sequences and check the complex")
    p.add_argument("--first", required=True)
    p.add_argument("--second", required=True)
    p.add_argument("--r", type=int, required=True)
    for sp in g.choices.values():
        sp.add_argument("--file", required=True)

    g = groups.add_parser("paper", help="scenario reproductions").add_subparsers(dest="cmd", required=True)
    for name in scenarios.SCENARIOS:
        p = sub(g, name, _paper(name), f"run the {name} scenario")
        p.add_argument("--p", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--M", type=int)
        if name in ("key-lemma", "heights", "axioms", "exactness"):
            p.add_argument("--trials", type=int)
            p.add_argument("--seed", type=int)
    g.choices["counterexample"].add_argument("--mutate", action="store_true")
    g.choices["twists"].add_argument("--r-max", dest="r_max", type=int)
    g.choices["exactness"].add_argument("--r", type=int)
    g.choices["exactness"].add_argument("--tensor-trials", dest="tensor_trials", type=int)
    g.choices["heights"].add_argument("--offblock", choices=("arbitrary", "compatible"))
    return top


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else 0
    try:
        result = args.func(args)
    except InsufficientPrecision as exc:
        print(f"bkmod: indeterminate at this precision: {exc}", file=sys.stderr)
        return 2
    except (BKError, InputError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"bkmod: error: {type(exc).__name__}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    if isinstance(result, Report):
        text = result.to_json(args.timings) if args.format == "json" else result.to_text(args.timings)
        sys.stdout.write(text)
        return result.exit_code()
    text, code = result
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
