"""Command-line entry point: ``localizable <command> ...``.

Documents flow through files or standard streams (``-``). Exit codes:
0 success, 2 validation failure, 3 verdict NotLocalizable, 4 I/O or schema
error. Tolerances may be overridden with ``LOCALIZABLE_EPS_PROP``,
``LOCALIZABLE_EPS_RANK`` and ``LOCALIZABLE_EPS_SUM``.
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Dict, List, Optional

import numpy as np

from . import io
from .bipartite import MeasurementBasis, Povm, ValidationError
from .error_basis import gen_pauli, gen_weyl_heisenberg, random_me_basis
from .ideal import build_ideal_protocol, ideal_outcomes, ideal_instrument, instrument_distance, protocol_instrument, random_block_spec, simulate_ideal
from .localizability import (
    NotLocalizableError,
    OutOfHypothesisError,
    classify_equal_resource,
    construct_localization,
    effective_povm,
    verify_localization,
)
from .numeric import Tolerance, trace_distance
from .two_qubit import (
    TwoQubitTag,
    bb84_basis,
    build_two_qubit_localization,
    classify_two_qubit,
    computational_basis,
    pbsm_basis,
)

EXIT_OK, EXIT_INVALID, EXIT_NOT_LOCALIZABLE, EXIT_IO = 0, 2, 3, 4

FAMILIES = ("pauli-bell", "weyl-heisenberg-bell", "computational", "bb84", "pbsm", "random-me-basis", "block")


class CliError(Exception):
    def __init__(self, code: int, error: str, message: str, **detail):
        super().__init__(message)
        self.code, self.error, self.detail = code, error, detail


def _read(path: str) -> str:
    try:
        if path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot read {path}: {exc.strerror}") from exc


def _write(path: str, doc: Dict) -> None:
    text = io.dumps(doc) + "\n"
    try:
        if path == "-":
            sys.stdout.write(text)
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
    except OSError as exc:
        raise CliError(EXIT_IO, "io", f"cannot write {path}: {exc.strerror}") from exc


def _load_basis(path: str, tol: Tolerance):
    return io.parse_basis(_read(path), tol)


def _need(value, flag: str, family: str):
    if value is None:
        raise CliError(EXIT_INVALID, "usage", f"family {family} requires {flag}")
    return value


def cmd_generate(args, tol: Tolerance) -> int:
    fam = args.family
    params: Dict = {}
    if fam == "pauli-bell":
        basis = gen_pauli().to_measurement_basis()
    elif fam == "weyl-heisenberg-bell":
        params["d"] = _need(args.d, "--d", fam)
        basis = gen_weyl_heisenberg(args.d).to_measurement_basis()
    elif fam == "computational":
        params["d"] = args.d or 2
        basis = computational_basis(params["d"])
    elif fam == "bb84":
        params.update(orientation=args.orientation, theta=args.theta)
        basis = bb84_basis(args.orientation, args.theta)
    elif fam == "pbsm":
        basis = pbsm_basis()
    elif fam == "random-me-basis":
        params.update(d=_need(args.d, "--d", fam), seed=_need(args.seed, "--seed", fam))
        basis = random_me_basis(args.d, np.random.default_rng(args.seed))
    else:
        params.update(d=_need(args.d, "--d", fam), r_a=_need(args.ra, "--ra", fam),
                      r_b=_need(args.rb, "--rb", fam), seed=_need(args.seed, "--seed", fam))
        _, basis = random_block_spec(args.d, args.ra, args.rb, np.random.default_rng(args.seed))
    _write(args.output, io.emit_basis(basis, {"family": fam, **params}, args.representation))
    return EXIT_OK


def cmd_validate(args, tol: Tolerance) -> int:
    b = _load_basis(args.file, tol)
    if isinstance(b, Povm):
        body = {"valid": True, "povm": True, "outcomes": len(b.elements), "dim": b.dim}
    else:
        body = {"valid": True, "povm": False, "outcomes": len(b), "dim_a": b.dim_a, "dim_b": b.dim_b,
                "schmidt_ranks": b.ranks(tol)}
    _write(args.output, io.report_envelope("validate", tol, body))
    return EXIT_OK


def classify_document(b: MeasurementBasis, mode: str, tol: Tolerance) -> Dict:
    start = time.perf_counter()
    if mode == "two-qubit":
        cls = classify_two_qubit(b, tol)
        body = {"mode": mode, "verdict": cls.as_dict(), "localizable": cls.tag is not TwoQubitTag.NOT_LOCALIZABLE}
    else:
        if b.dim_a != b.dim_b:
            raise CliError(EXIT_INVALID, "validation", "equal-resource mode needs a square basis")
        try:
            verdict = classify_equal_resource(b, tol).as_dict()
        except OutOfHypothesisError as exc:
            verdict = {"localizable": None, "reason": "OutOfHypothesis", "witness": None, "tags": [], "message": str(exc)}
        body = {"mode": mode, "verdict": verdict, "localizable": verdict["localizable"]}
    body["timing_s"] = time.perf_counter() - start
    return body


def cmd_classify(args, tol: Tolerance) -> int:
    b = _load_basis(args.file, tol)
    if isinstance(b, Povm):
        raise CliError(EXIT_INVALID, "validation", "classification needs a rank-1 PVM basis")
    body = classify_document(b, args.mode, tol)
    _write(args.output, io.report_envelope("classify", tol, body))
    return EXIT_NOT_LOCALIZABLE if body["localizable"] is False else EXIT_OK


def synthesize(b: MeasurementBasis, j: int, tol: Tolerance):
    """``(localization, method, j)``; nice Bell bases first, then the two-qubit product cases."""
    try:
        return construct_localization(b, j, tol), "nice-bell", j
    except OutOfHypothesisError:
        if b.dim_a != 2 or b.dim_b != 2:
            raise NotLocalizableError("no maximal-rank element and not a two-qubit basis")
    cls = classify_two_qubit(b, tol)
    if cls.tag is TwoQubitTag.NOT_LOCALIZABLE:
        raise NotLocalizableError(f"two-qubit basis is not localizable: {cls.detail.get('reason')}")
    return build_two_qubit_localization(b, cls, tol), f"two-qubit:{cls.tag.value}", None


def cmd_synthesize(args, tol: Tolerance) -> int:
    b = _load_basis(args.file, tol)
    if isinstance(b, Povm) or b.dim_a != b.dim_b:
        raise CliError(EXIT_INVALID, "validation", "synthesis needs a square rank-1 PVM basis")
    try:
        loc, method, j = synthesize(b, args.j, tol)
    except IndexError as exc:
        raise CliError(EXIT_INVALID, "usage", str(exc)) from exc
    report = verify_localization(b, loc, tol)
    meta = {"residual": report.residual, "tolerance": tol.as_dict()}
    _write(args.output, io.emit_protocol(b, loc, method, j, meta))
    return EXIT_OK


def cmd_simulate(args, tol: Tolerance) -> int:
    basis, loc, method, j = io.parse_protocol(_read(args.file), tol)
    verification = verify_localization(basis, loc, tol)
    body: Dict = {"method": method, "j": j, "verification": verification.as_dict()}
    nice = method == "nice-bell" and j is not None
    if nice and args.exact:
        proto = build_ideal_protocol(basis, j, tol)
        body["instrument_distance"] = instrument_distance(protocol_instrument(proto), ideal_instrument(basis))
    if args.input is not None:
        rho = io.parse_state(_read(args.input))
        if rho.shape != (basis.dim_a * basis.dim_b,) * 2:
            raise CliError(EXIT_INVALID, "validation", "input state dimension does not match the basis")
        ideal_p, ideal_states = ideal_outcomes(basis, rho)
        if nice:
            res = simulate_ideal(build_ideal_protocol(basis, j, tol), rho, seed=args.seed, shots=args.shots, tol=tol)
            probs = res.probabilities
            dev = [trace_distance(a, s) for a, s in zip(ideal_states, res.states) if a is not None and s is not None]
            body["max_state_distance"] = max(dev) if dev else 0.0
            body["branches_per_outcome"] = res.branch_counts
            if args.transcript:
                body["transcript"] = [list(row) for row in res.transcript]
            counts = res.counts
        else:
            probs = np.real(np.einsum("cij,ji->c", effective_povm(loc), rho))
            counts = None
            if args.shots is not None:
                rng = np.random.default_rng(args.seed)
                counts = rng.multinomial(args.shots, np.clip(probs, 0, None) / np.clip(probs, 0, None).sum())
        body["probabilities"] = probs.tolist()
        body["ideal_probabilities"] = ideal_p.tolist()
        body["max_probability_error"] = float(np.abs(probs - ideal_p).max())
        if counts is not None:
            body.update(shots=args.shots, seed=args.seed, counts=np.asarray(counts).tolist())
    _write(args.output, io.report_envelope("simulate", tol, body))
    return EXIT_OK


def _report_one(path: str, tol: Tolerance) -> Dict:
    doc = io.load_json(_read(path))
    kind = doc.get("kind", "basis")
    entry: Dict = {"file": path, "kind": kind}
    if kind == "basis":
        b = io.parse_basis(doc, tol)
        if isinstance(b, Povm):
            entry["outcomes"] = len(b.elements)
            return entry
        entry.update(outcomes=len(b), dim_a=b.dim_a, dim_b=b.dim_b, metadata=doc.get("metadata", {}))
        if b.dim_a == b.dim_b:
            entry["equal_resource"] = classify_document(b, "equal-resource", tol)["verdict"]
        if b.dim_a == b.dim_b == 2:
            entry["two_qubit"] = classify_document(b, "two-qubit", tol)["verdict"]
    elif kind == "protocol":
        basis, loc, method, j = io.parse_protocol(doc, tol)
        entry.update(method=method, j=j, residual=verify_localization(basis, loc, tol).residual)
    else:
        entry["summary"] = {k: v for k, v in doc.items() if k not in ("transcript",)}
    return entry


def _render_text(entries: List[Dict], tol: Tolerance) -> str:
    lines = [f"format_version {io.FORMAT_VERSION}  tolerance {json.dumps(tol.as_dict())}"]
    for e in entries:
        if e["kind"] == "basis":
            parts = [f"{e['file']}: basis {e.get('dim_a')}x{e.get('dim_b')}, {e['outcomes']} outcomes"]
            if "equal_resource" in e:
                parts.append(f"equal-resource {e['equal_resource']['reason']}")
            if "two_qubit" in e:
                parts.append(f"two-qubit {e['two_qubit']['tag']}")
            lines.append("; ".join(parts))
        elif e["kind"] == "protocol":
            lines.append(f"{e['file']}: protocol {e['method']} j={e['j']} residual {e['residual']:.3e}")
        else:
            lines.append(f"{e['file']}: {e['kind']} ({e['summary'].get('command', '?')})")
    return "\n".join(lines) + "\n"


def cmd_report(args, tol: Tolerance) -> int:
    entries = [_report_one(p, tol) for p in args.files]
    if args.format == "text":
        sys.stdout.write(_render_text(entries, tol))
    else:
        _write(args.output, io.report_envelope("report", tol, {"entries": entries}))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="localizable", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add_out(p):
        p.add_argument("-o", "--output", default="-", help="output path ('-' for stdout)")

    g = sub.add_parser("generate", help="emit a fixture basis")
    g.add_argument("family", choices=FAMILIES)
    g.add_argument("--d", type=int)
    g.add_argument("--seed", type=int)
    g.add_argument("--ra", type=int)
    g.add_argument("--rb", type=int)
    g.add_argument("--orientation", choices=("L", "R"), default="L")
    g.add_argument("--theta", type=float, default=0.0)
    g.add_argument("--representation", choices=("operators", "vectors"), default="operators")
    add_out(g)
    g.set_defaults(func=cmd_generate)

    v = sub.add_parser("validate", help="check a basis document")
    v.add_argument("file", nargs="?", default="-")
    add_out(v)
    v.set_defaults(func=cmd_validate)

    c = sub.add_parser("classify", help="decide localizability")
    c.add_argument("file", nargs="?", default="-")
    c.add_argument("--mode", choices=("equal-resource", "two-qubit"), default="equal-resource")
    add_out(c)
    c.set_defaults(func=cmd_classify)

    s = sub.add_parser("synthesize", help="build a localization protocol")
    s.add_argument("file", nargs="?", default="-")
    s.add_argument("--j", type=int, default=0, help="resource index (0-based)")
    add_out(s)
    s.set_defaults(func=cmd_synthesize)

    m = sub.add_parser("simulate", help="verify and run a protocol")
    m.add_argument("file", nargs="?", default="-")
    m.add_argument("--input", help="state document")
    m.add_argument("--shots", type=int)
    m.add_argument("--seed", type=int)
    m.add_argument("--exact", action="store_true", help="also compare full instruments")
    m.add_argument("--transcript", action="store_true", help="include per-branch rows")
    add_out(m)
    m.set_defaults(func=cmd_simulate)

    r = sub.add_parser("report", help="summarize documents")
    r.add_argument("files", nargs="+")
    r.add_argument("--format", choices=("json", "text"), default="json")
    add_out(r)
    r.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        tol = Tolerance.from_env()
    except ValueError as exc:
        return _fail(CliError(EXIT_IO, "config", str(exc)))
    if getattr(args, "shots", None) is not None and args.seed is None:
        return _fail(CliError(EXIT_INVALID, "usage", "--shots requires --seed"))
    try:
        return args.func(args, tol)
    except CliError as exc:
        return _fail(exc)
    except io.SchemaError as exc:
        return _fail(CliError(EXIT_IO, "schema", str(exc), path=exc.path))
    except ValidationError as exc:
        return _fail(CliError(EXIT_INVALID, "validation", str(exc), **_jsonable(exc.detail)))
    except NotLocalizableError as exc:
        return _fail(CliError(EXIT_NOT_LOCALIZABLE, "not-localizable", str(exc)))
    except ValueError as exc:
        return _fail(CliError(EXIT_INVALID, "validation", str(exc)))


def _jsonable(detail: Dict) -> Dict:
    return json.loads(json.dumps(detail, default=str))


def _fail(exc: CliError) -> int:
    err = {"format_version": io.FORMAT_VERSION, "kind": "error", "error": exc.error, "message": str(exc)}
    if exc.detail:
        err["detail"] = exc.detail
    sys.stderr.write(json.dumps(err) + "\n")
    return exc.code


if __name__ == "__main__":
    sys.exit(main())
