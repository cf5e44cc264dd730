"""Command-line front end.

Morphism files are line oriented::

    # comment
    dom 2
    cod 1
    scalar exact
    split 1 1
    expr x1*x2

Exit codes: 0 success, 1 failed check, 2 parse or validation error,
3 violated precondition (for instance currying a map that is not linear in
its second block).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from cdiff.cdc import (
    Morph,
    ObjectMismatch,
    differentiate,
    find_mismatch,
    from_texts,
    is_linear,
    matrix_morph,
    proj1,
)
from cdiff.checks import MUTATIONS, SUITES, CorpusConfig, run_suite
from cdiff.expr import EqConfig, ExprError, Flavor, NonFiniteError, Scalar, Semiring
from cdiff.linclosed import (
    CurryOfNonlinear,
    gradient,
    hessian,
    jacobian,
    linear_curry,
    matrix_at,
    matrix_of,
    point_of_linear,
    reverse_differentiate,
    transpose,
)
from cdiff.matrix import LinMorph, scalar_to_json

EXIT_OK, EXIT_CHECK, EXIT_PARSE, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(Exception):
    """Bad input: exit code 2."""


class PreconditionError(Exception):
    """Valid input that an operation cannot accept: exit code 3."""

    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class MorphFile:
    morph: Morph
    split: tuple[int, int] | None = None


def _nonneg(word: str, what: str) -> int:
    try:
        v = int(word)
    except ValueError:
        raise UsageError(f"{what} must be a nonnegative integer, got {word!r}") from None
    if v < 0:
        raise UsageError(f"{what} must be a nonnegative integer, got {word!r}")
    return v


def parse_morph_file(text: str, semiring: Semiring | str = Semiring.RAT) -> MorphFile:
    header: dict[str, list[str]] = {}
    exprs: list[str] = []
    for lineno, raw in enumerate(text.split("\n"), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "expr":
            if not rest:
                raise UsageError(f"line {lineno}: empty expression")
            exprs.append(rest)
        elif key in ("dom", "cod", "scalar", "split"):
            if key in header:
                raise UsageError(f"line {lineno}: duplicate '{key}' header")
            if exprs:
                raise UsageError(f"line {lineno}: header '{key}' after expressions")
            header[key] = rest.split()
        else:
            raise UsageError(f"line {lineno}: unknown directive {key!r}")
    for key in ("dom", "cod"):
        if key not in header or len(header[key]) != 1:
            raise UsageError(f"missing or malformed '{key}' header")
    dom = _nonneg(header["dom"][0], "dom")
    cod = _nonneg(header["cod"][0], "cod")
    scalar = header.get("scalar", ["exact"])
    if len(scalar) != 1 or scalar[0] not in ("exact", "float"):
        raise UsageError("scalar must be 'exact' or 'float'")
    split = None
    if "split" in header:
        words = header["split"]
        if len(words) != 2:
            raise UsageError("split needs two integers")
        split = (_nonneg(words[0], "split"), _nonneg(words[1], "split"))
        if sum(split) != dom:
            raise UsageError(f"split {split[0]} {split[1]} does not sum to dom {dom}")
    if len(exprs) != cod:
        raise UsageError(f"cod is {cod} but {len(exprs)} expr lines were given")
    try:
        morph = from_texts(dom, exprs, Flavor(scalar[0]), semiring)
    except (ExprError, ObjectMismatch) as exc:
        raise UsageError(str(exc)) from None
    return MorphFile(morph, split)


def format_morph_file(f: Morph, split: tuple[int, int] | None = None) -> str:
    lines = [f"dom {f.dom}", f"cod {f.cod}", f"scalar {f.flavor.value}"]
    if split is not None:
        lines.append(f"split {split[0]} {split[1]}")
    lines += [f"expr {t}" for t in f.texts()]
    return "\n".join(lines) + "\n"


def parse_scalar(word: str, flavor: Flavor) -> Scalar:
    try:
        q = Fraction(word.strip())
    except (ValueError, ZeroDivisionError):
        raise UsageError(f"not a number: {word!r}") from None
    if flavor is Flavor.FLOAT:
        return float(q)
    return q.numerator if q.denominator == 1 else q


def parse_list(text: str, flavor: Flavor) -> list[Scalar]:
    if not text.strip():
        return []
    return [parse_scalar(w, flavor) for w in text.split(",")]


def parse_split(text: str) -> tuple[int, int]:
    words = text.split(",")
    if len(words) != 2:
        raise UsageError("--split needs two comma-separated integers")
    return _nonneg(words[0], "split"), _nonneg(words[1], "split")


def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"))


# output ------------------------------------------------------------------------------


def _emit_morph(f: Morph, args, split=None) -> str:
    if args.format == "json":
        return _dumps({"dom": f.dom, "cod": f.cod, "scalar": f.flavor.value, "exprs": f.texts()}) + "\n"
    return format_morph_file(f, split)


def _emit_matrix(m: LinMorph, args) -> str:
    if args.format == "text":
        return "".join(" ".join(_text_scalar(v) for v in r) + "\n" for r in m.entries)
    if args.raw:
        return _dumps({"rows": m.rows, "cols": m.cols, "vec": [scalar_to_json(v) for v in m.vec()]}) + "\n"
    return _dumps(m.to_json()) + "\n"


def _emit_values(values: Sequence[Scalar], args) -> str:
    if args.format == "text":
        return " ".join(_text_scalar(v) for v in values) + "\n"
    return _dumps([scalar_to_json(v) for v in values]) + "\n"


def _text_scalar(v) -> str:
    j = scalar_to_json(v)
    return repr(j) if isinstance(j, float) else str(j)


# commands ------------------------------------------------------------------------------


def _load(args) -> MorphFile:
    try:
        if args.file == "-":
            text = sys.stdin.read()
        else:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {args.file}: {exc.strerror}") from None
    return parse_morph_file(text, args.semiring)


def _point(args, f: Morph, dim: int) -> list[Scalar]:
    pt = parse_list(args.at, f.flavor)
    if len(pt) != dim:
        raise UsageError(f"--at needs {dim} values, got {len(pt)}")
    return pt


def _eq_cfg(args) -> EqConfig:
    kw = {}
    if args.samples is not None:
        kw["samples"] = args.samples
    if args.tol is not None:
        kw["tol_abs"] = kw["tol_rel"] = args.tol
    return EqConfig(**kw)


def cmd_eval(args) -> str:
    f = _load(args).morph
    if args.at is None:
        raise UsageError("eval needs --at")
    return _emit_values(f(*_point(args, f, f.dom)), args)


def cmd_deriv(args) -> str:
    f = _load(args).morph
    df = differentiate(f)
    if args.at is not None:
        return _emit_values(df(*_point(args, df, df.dom)), args)
    return _emit_morph(df, args)


def cmd_reverse(args) -> str:
    f = _load(args).morph
    rf = reverse_differentiate(f)
    if args.at is not None:
        return _emit_values(rf(*_point(args, rf, rf.dom)), args)
    return _emit_morph(rf, args)


def cmd_curry(args) -> str:
    mf = _load(args)
    f = mf.morph
    split = parse_split(args.split) if args.split else mf.split
    if split is None:
        raise UsageError("curry needs --split (or a split header)")
    if sum(split) != f.dom:
        raise UsageError(f"split {split} does not sum to dom {f.dom}")
    try:
        g = linear_curry(f, split, cfg=_eq_cfg(args))
    except CurryOfNonlinear as exc:
        raise PreconditionError("map is not linear in its second argument", exc.witness) from None
    if args.at is not None:
        return _emit_matrix(matrix_at(g, f.cod, split[1], _point(args, f, split[0])), args)
    return _emit_morph(g, args)


def cmd_jacobian(args) -> str:
    f = _load(args).morph
    j = jacobian(f)
    if args.at is not None:
        return _emit_matrix(matrix_at(j, f.cod, f.dom, _point(args, f, f.dom)), args)
    return _emit_morph(j, args)


def cmd_gradient(args) -> str:
    f = _load(args).morph
    g = gradient(f)
    if args.at is not None:
        return _emit_matrix(matrix_at(g, f.dom, f.cod, _point(args, f, f.dom)), args)
    return _emit_morph(g, args)


def cmd_hessian(args) -> str:
    f = _load(args).morph
    h = hessian(f)
    if args.at is not None:
        # row index: layout of grad's value in L(B, A); column index: direction in A
        return _emit_matrix(matrix_at(h, f.dom * f.cod, f.dom, _point(args, f, f.dom)), args)
    return _emit_morph(h, args)


def cmd_transpose(args) -> str:
    """Transpose a matrix given as JSON, or the linear map of a morphism file."""
    text = _read_text(args.file)
    if text.lstrip().startswith("{"):
        try:
            obj = json.loads(text)
            fl = Flavor.FLOAT if _has_float(obj) else Flavor.EXACT
            m = LinMorph.from_json(obj, fl)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"bad matrix JSON: {exc}") from None
        tau = transpose(m.cols, m.rows, fl)
        return _emit_matrix(LinMorph.from_vec(m.cols, m.rows, tau(*m.vec())), args)
    f = parse_morph_file(text, args.semiring).morph
    cfg = _eq_cfg(args)
    if not is_linear(f, cfg):
        w = find_mismatch(differentiate(f), f @ _proj1(f), cfg)
        raise PreconditionError("transpose needs a linear map", w)
    m = matrix_of(f)
    tm = LinMorph.from_vec(m.cols, m.rows, (transpose(f.dom, f.cod, f.flavor) @ point_of_linear(f))())
    return _emit_morph(matrix_morph(tm, f.flavor), args)


def _proj1(f: Morph) -> Morph:
    return proj1(f.dom, f.dom, f.flavor)


def _has_float(obj) -> bool:
    values = obj["vec"] if "vec" in obj else [v for r in obj.get("data", []) for v in r]
    return any(isinstance(v, float) for v in values)


def _read_text(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_check(args) -> tuple[str, int]:
    seed = args.seed if args.seed is not None else default_seed()
    cfg = CorpusConfig(count=args.count, seed=seed, flavor=Flavor(args.flavor), semiring=Semiring(args.semiring))
    suites = SUITES if args.suite == "all" else (args.suite,)
    reports = [run_suite(s, cfg, eq=_eq_cfg(args), mutation=args.mutate) for s in suites]
    passed = all(r.passed for r in reports)
    if args.format == "text":
        out = "".join(
            f"{r.suite}: {'pass' if r.passed else 'FAIL'} "
            f"({sum(t['checked'] for t in r.laws.values())} checks"
            + (f"; failing: {', '.join(r.failed_laws())}" if not r.passed else "") + ")\n"
            for r in reports)
    elif len(reports) == 1:
        out = _dumps(reports[0].to_json()) + "\n"
    else:
        out = _dumps({"suite": "all", "seed": seed, "passed": passed,
                      "reports": [r.to_json() for r in reports]}) + "\n"
    return out, EXIT_OK if passed else EXIT_CHECK


def default_seed() -> int:
    env = os.environ.get("CDIFF_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"CDIFF_SEED must be an integer, got {env!r}") from None


COMMANDS = {
    "eval": cmd_eval,
    "deriv": cmd_deriv,
    "reverse": cmd_reverse,
    "curry": cmd_curry,
    "jacobian": cmd_jacobian,
    "gradient": cmd_gradient,
    "hessian": cmd_hessian,
    "transpose": cmd_transpose,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--format", choices=["json", "text"],
                        help="morphisms default to morphism-file text, everything else to JSON")
    common.add_argument("--semiring", choices=["rat", "nat"], default="rat")
    common.add_argument("--tol", type=float, help="absolute and relative tolerance for float equality")
    common.add_argument("--samples", type=int, help="sample count for float equality")

    p = _Parser(prog="cdiff", description="Differential combinators on polynomial and smooth maps.")
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name, parents=[common])
        s.add_argument("file", help="morphism file, or - for stdin")
        s.add_argument("--at", help="comma-separated point, e.g. 3,5 or 1/2,0.25")
        s.add_argument("--split", help="block sizes n1,n2")
        s.add_argument("--raw", action="store_true", help="print matrices as row-major vectors")
    c = sub.add_parser("check", parents=[common])
    c.add_argument("--suite", default="all", choices=["all", *SUITES])
    c.add_argument("--seed", type=int)
    c.add_argument("--count", type=int, default=100)
    c.add_argument("--flavor", choices=["exact", "float"], default="exact")
    c.add_argument("--mutate", choices=sorted(MUTATIONS), help="run against a deliberately broken combinator")
    return p


def main(argv: Sequence[str] | None = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if getattr(args, "samples", None) is not None and args.samples < 1:
            raise UsageError("--samples must be positive")
        if args.cmd == "check":
            out, code = cmd_check(args)
        else:
            out, code = COMMANDS[args.cmd](args), EXIT_OK
    except UsageError as exc:
        print(f"cdiff: error: {exc}", file=stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"cdiff: precondition violated: {exc}", file=stderr)
        if exc.witness is not None:
            print(_dumps({"error": str(exc), "witness": exc.witness}), file=stdout)
        return EXIT_PRECONDITION
    except NonFiniteError as exc:
        print(f"cdiff: evaluation is not finite: {exc}", file=stderr)
        return EXIT_PRECONDITION
    stdout.write(out)
    return code


def main_entry() -> None:
    sys.exit(main())
