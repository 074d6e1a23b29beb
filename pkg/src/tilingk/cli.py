"""Command-line front end.

Every verb reads one JSON document from a path or from standard input
(``-``).  System verbs expect a system definition; the utility verbs
``snf``, ``kernel``, ``eigen`` and ``dimgroup`` also accept an inline
matrix ``{"rows", "cols", "entries"}`` or a bare list of rows.

Exit codes: 0 success, 1 computation error, 2 input or schema error,
3 a verification-ledger entry failed.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

from . import __version__
from .dimgroup import DimGroupError, classify, decompose, generators, limit_group
from .intlin import (
    IntegerMatrix,
    MatrixError,
    integer_eigen_data,
    kernel_basis,
    matrix_from_json,
    matrix_to_json,
    snf,
)
from .ktheory import KTheoryError, boundary_map, chair_pipeline, load_expected
from .subst import (
    DEFAULT_ORDER,
    SchemaViolation,
    SubstitutionSystem,
    SystemError_,
    abelianization_matrix,
    check_border_forcing,
    derive_edge_types,
    derive_vertex_stars,
    is_primitive,
    load_system,
    patch_to_json,
    patch_to_svg,
    supertile,
)

EXIT_OK, EXIT_COMPUTE, EXIT_INPUT, EXIT_LEDGER = 0, 1, 2, 3

VERBS = ("validate", "forcing", "matrices", "eigen", "snf", "kernel", "dimgroup", "boundary", "kgroups", "patch")


class InputError(Exception):
    pass


@dataclass(frozen=True)
class Command:
    verb: str
    input: str
    format: str = "text"
    order: int = DEFAULT_ORDER
    expect: str | None = None
    out: str | None = None
    level: int | None = None
    orientation: str = "horizontal"
    tile: str | None = None


@dataclass
class Result:
    payload: Any
    text: str
    code: int = EXIT_OK


# ---------------------------------------------------------------------------
# input


def _read_json(path: str) -> Any:
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from None


def _is_system(doc: Any) -> bool:
    return isinstance(doc, dict) and "prototiles" in doc


def _system(doc: Any) -> SubstitutionSystem:
    if not _is_system(doc):
        raise InputError("expected a system definition with 'prototiles' and 'rule'")
    try:
        return load_system(doc)
    except SystemError_ as exc:
        raise InputError(str(exc)) from None


def _matrix(doc: Any) -> IntegerMatrix:
    try:
        return matrix_from_json(doc)
    except (MatrixError, TypeError, ValueError) as exc:
        raise InputError(f"bad matrix: {exc}") from None


def _level_matrix(s: SubstitutionSystem, level: int, orientation: str, order: int) -> tuple[IntegerMatrix, list[str]]:
    """Substitution matrix on tiles (2), edges (1) or vertex stars (0)."""
    if level == 2:
        return abelianization_matrix(s), list(s.ids)
    if level == 1:
        edges, m = derive_edge_types(s, orientation, order)
        return m, [e.id for e in edges]
    stars, m = derive_vertex_stars(s, order)
    return m, [v.id for v in stars]


def _matrix_or_system(cmd: Command, doc: Any) -> IntegerMatrix:
    """A matrix given inline, or the transposed level matrix of a system."""
    if _is_system(doc):
        m, _ = _level_matrix(_system(doc), 2 if cmd.level is None else cmd.level, cmd.orientation, cmd.order)
        return m.T
    return _matrix(doc)


def _rows(m: IntegerMatrix) -> str:
    return str(m) if m.rows else "(empty)"


# ---------------------------------------------------------------------------
# verbs


def _validate(cmd: Command, doc: Any) -> Result:
    s = _system(doc)
    payload = {
        "name": s.name,
        "tiles": s.size,
        "rotation_order": s.rotation_order,
        "primitive": is_primitive(s),
    }
    text = f"{s.name}: {s.size} tiles, rotation order {s.rotation_order}, primitive: {payload['primitive']}"
    return Result(payload, text)


def _forcing(cmd: Command, doc: Any) -> Result:
    s = _system(doc)
    rep = check_border_forcing(s, cmd.order)
    payload: dict[str, Any] = {"forces": rep.forces}
    if rep.witness:
        tile, a, b = rep.witness
        payload["witness"] = {"tile": tile, "collars": [a, b]}
    text = "border forcing holds" if rep.forces else f"border forcing fails at tile {rep.witness[0]}"
    return Result(payload, text)


def _matrices(cmd: Command, doc: Any) -> Result:
    s = _system(doc)
    level = 2 if cmd.level is None else cmd.level
    m, basis = _level_matrix(s, level, cmd.orientation, cmd.order)
    payload = matrix_to_json(m)
    payload["basis"] = basis
    return Result(payload, f"basis: {' '.join(basis)}\n{_rows(m)}")


def _eigen(cmd: Command, doc: Any) -> Result:
    a = _matrix_or_system(cmd, doc)
    spectrum = integer_eigen_data(a)
    payload = {
        "char_poly": [str(c) for c in spectrum.char_poly],
        "eigen": [
            {
                "eigenvalue": e.eigenvalue,
                "algebraic": e.algebraic_multiplicity,
                "geometric": e.geometric_multiplicity,
                "eigenlattice": matrix_to_json(e.eigenlattice.basis),
            }
            for e in spectrum
        ],
        "non_integer_part": [str(c) for c in spectrum.residual_factor] if spectrum.has_non_integer_eigenvalues else [],
    }
    lines = [f"lambda = {e.eigenvalue}: algebraic {e.algebraic_multiplicity}, geometric {e.geometric_multiplicity}" for e in spectrum]
    if spectrum.has_non_integer_eigenvalues:
        lines.append(f"non-integer factor of degree {len(spectrum.residual_factor) - 1}")
    return Result(payload, "\n".join(lines))


def _snf(cmd: Command, doc: Any) -> Result:
    a = _matrix(doc)
    d = snf(a)
    payload = {
        "U": matrix_to_json(d.U),
        "D": matrix_to_json(d.D),
        "V": matrix_to_json(d.V),
        "invariant_factors": [str(x) for x in d.invariant_factors],
        "rank": d.rank,
    }
    text = f"invariant factors: {' '.join(map(str, d.invariant_factors)) or '(none)'}\nrank: {d.rank}\nD =\n{_rows(d.D)}"
    return Result(payload, text)


def _kernel(cmd: Command, doc: Any) -> Result:
    a = _matrix(doc)
    k = kernel_basis(a)
    payload = {"rank": k.rank, "basis": matrix_to_json(k.basis)}
    text = f"kernel rank {k.rank}" + (f"\n{k.basis}" if k.rank else "")
    return Result(payload, text)


def _dimgroup(cmd: Command, doc: Any) -> Result:
    model = limit_group(_matrix_or_system(cmd, doc))
    g = classify(model)
    payload: dict[str, Any] = {"group": str(g), "classification": g.to_json(), "reduced_rank": model.reduced_rank}
    if decompose(model).exact:
        payload["generators"] = [[str(x) for x in e.vector] for e in generators(model)]
    return Result(payload, f"{g}\nreduced rank {model.reduced_rank}")


def _boundary(cmd: Command, doc: Any) -> Result:
    s = _system(doc)
    bm = boundary_map(s, 1 if cmd.level is None else cmd.level, cmd.order)
    text = f"level {bm.level}: {' '.join(bm.source_basis)} -> {' '.join(bm.target_basis)}\n{_rows(bm.matrix)}"
    return Result(bm.to_json(), text)


def _kgroups(cmd: Command, doc: Any) -> Result:
    s = _system(doc)
    expected = None
    if cmd.expect is not None:
        expected = load_expected(_read_json(cmd.expect))
    rep = chair_pipeline(s, cmd.order, expected)
    return Result(rep.to_json(), rep.to_text(), EXIT_OK if rep.passed else EXIT_LEDGER)


def _patch(cmd: Command, doc: Any) -> Result:
    s = _system(doc)
    tile = cmd.tile or s.ids[0]
    if tile not in s.ids:
        raise InputError(f"unknown tile {tile!r}")
    p = supertile(s, tile, cmd.order)
    doc = patch_to_json(s, p)
    if cmd.out and cmd.out.endswith(".json"):
        return Result(doc, json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False))
    return Result(doc, patch_to_svg(s, p))


HANDLERS: dict[str, Callable[[Command, Any], Result]] = {
    "validate": _validate,
    "forcing": _forcing,
    "matrices": _matrices,
    "eigen": _eigen,
    "snf": _snf,
    "kernel": _kernel,
    "dimgroup": _dimgroup,
    "boundary": _boundary,
    "kgroups": _kgroups,
    "patch": _patch,
}


def _emit(cmd: Command, res: Result) -> None:
    if cmd.format == "json":
        out = json.dumps(res.payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"
    else:
        out = res.text if res.text.endswith("\n") else res.text + "\n"
    if cmd.out:
        Path(cmd.out).write_text(out, encoding="utf-8")
    else:
        sys.stdout.write(out)


def run(cmd: Command) -> int:
    try:
        doc = _read_json(cmd.input)
        res = HANDLERS[cmd.verb](cmd, doc)
    except (InputError, SchemaViolation) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (KTheoryError, DimGroupError, MatrixError, SystemError_) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    try:
        _emit(cmd, res)
    except OSError as exc:
        print(f"cannot write output: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return res.code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tilingk", description="K-theory of square substitution tilings.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="verb", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("input", help="JSON file, or - for standard input")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--out", help="write output here instead of standard output")
    helps = {
        "validate": "check a system definition",
        "forcing": "test border forcing",
        "matrices": "substitution matrix on tiles, edges or vertex stars",
        "eigen": "integer eigen data",
        "snf": "Smith normal form of a matrix",
        "kernel": "integer kernel basis of a matrix",
        "dimgroup": "classify a stationary direct limit",
        "boundary": "boundary map of a given level",
        "kgroups": "run the full pipeline",
        "patch": "draw a supertile",
    }
    for verb in VERBS:
        sp = sub.add_parser(verb, parents=[common], help=helps[verb])
        if verb == "patch":
            sp.add_argument("--order", type=int, default=3, help="supertile order")
            sp.add_argument("--tile", help="prototile id (default: the first)")
            continue
        sp.add_argument("--order", type=int, default=DEFAULT_ORDER, help="adjacency stabilization bound")
        if verb in ("matrices", "eigen", "dimgroup", "boundary"):
            sp.add_argument("--level", type=int, choices=(0, 1, 2))
            sp.add_argument("--orientation", choices=("horizontal", "vertical"), default="horizontal")
        if verb == "kgroups":
            sp.add_argument("--expect", help="expected-values JSON to compare against")
    return p


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    if ns.order < 1 or (ns.verb != "patch" and ns.order < 2):
        print("input error: --order is too small", file=sys.stderr)
        return EXIT_INPUT
    cmd = Command(
        verb=ns.verb,
        input=ns.input,
        format=ns.format,
        order=ns.order,
        expect=getattr(ns, "expect", None),
        out=ns.out,
        level=getattr(ns, "level", None),
        orientation=getattr(ns, "orientation", "horizontal"),
        tile=getattr(ns, "tile", None),
    )
    return run(cmd)


if __name__ == "__main__":
    sys.exit(main())
