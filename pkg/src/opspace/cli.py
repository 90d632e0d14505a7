"""Command-line front end: ``opspace <subcommand> [flags]``.

Every numeric input is inline JSON or ``@path`` to a JSON file.  Reports
go to stdout as canonical JSON (sorted keys, 17 significant digits,
rationals as ``"p/q"``) or as a lossy table; diagnostics go to stderr.

Exit codes: 0 success, 1 verify failure, 2 precondition violation,
64 usage error, 65 malformed JSON.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable

import numpy as np

from . import __version__, acceptance, banach, cbnorm, seqlab, subspaces, xspace

EXIT_OK, EXIT_VERIFY, EXIT_PRECONDITION, EXIT_USAGE, EXIT_PARSE = 0, 1, 2, 64, 65

_RATIONAL = re.compile(r"^-?\d+/\d+$")


class UsageError(Exception):
    pass


class ParseError(Exception):
    pass


# ---------------------------------------------------------------- reports


@dataclass
class RunReport:
    command: str
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    certificates: dict = field(default_factory=dict)
    seed: int = 0
    versions: dict = field(default_factory=lambda: {"opspace": __version__})

    def to_dict(self) -> dict:
        return {"command": self.command, "inputs": self.inputs, "outputs": self.outputs,
                "certificates": self.certificates, "seed": self.seed,
                "versions": self.versions}

    @classmethod
    def from_dict(cls, obj: dict) -> "RunReport":
        return cls(obj["command"], obj.get("inputs", {}), obj.get("outputs", {}),
                   obj.get("certificates", {}), obj.get("seed", 0),
                   obj.get("versions", {}))


def _float_text(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    text = format(x, ".17g")
    if not any(c in text for c in ".e"):
        text += ".0"
    return text


def canonical_json(obj: Any) -> str:
    """Deterministic JSON text for plain data, numpy values and fractions."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, Fraction):
        return json.dumps(f"{obj.numerator}/{obj.denominator}")
    if isinstance(obj, (float, np.floating)):
        return _float_text(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return canonical_json([obj.real, obj.imag])
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(f"{json.dumps(k, ensure_ascii=False)}:{canonical_json(v)}"
                              for k, v in items) + "}"
    if isinstance(obj, np.ndarray):
        return canonical_json(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(canonical_json(v) for v in obj) + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _revive(obj):
    if isinstance(obj, str) and _RATIONAL.match(obj):
        p, q = obj.split("/")
        return Fraction(int(p), int(q))
    if isinstance(obj, dict):
        return {k: _revive(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_revive(v) for v in obj]
    return obj


def parse_report(text: str) -> RunReport:
    return RunReport.from_dict(_revive(json.loads(text)))


def _flatten(prefix: str, obj, out: list[str]) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, (list, tuple)) and len(obj) > 8:
        out.append(f"{prefix}: [{len(obj)} items]")
    else:
        text = canonical_json(obj)
        out.append(f"{prefix}: {text if len(text) <= 100 else text[:97] + '...'}")


def emit_report(report: RunReport, fmt: str = "json") -> str:
    if fmt == "json":
        return canonical_json(report.to_dict())
    lines: list[str] = [f"command: {report.command}", f"seed: {report.seed}"]
    _flatten("", report.outputs, lines)
    return "\n".join(lines)


# ---------------------------------------------------------------- inputs


def load_json(text: str | None, flag: str):
    if text is None:
        raise UsageError(f"missing required flag {flag}")
    try:
        if text.startswith("@"):
            with open(text[1:], encoding="utf-8") as fh:
                return json.load(fh)
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{flag}: malformed JSON ({exc})") from None
    except OSError as exc:
        raise ParseError(f"{flag}: cannot read file ({exc})") from None


def _weights(args, flag: str = "alpha") -> xspace.WeightSequence:
    return xspace.WeightSequence.from_json(load_json(getattr(args, flag), f"--{flag}"))


def _genint(args, flag: str) -> seqlab.GenIntSeq:
    return seqlab.GenIntSeq.from_json(load_json(getattr(args, flag), f"--{flag}"))


def _matrix(obj) -> np.ndarray:
    return np.array([[complex(*z) if isinstance(z, list) else complex(z) for z in row]
                     for row in obj], dtype=complex)


def _subspace_frame(args, flag: str = "frame") -> subspaces.SubspaceFrame:
    return subspaces.SubspaceFrame.from_json(load_json(getattr(args, flag), f"--{flag}"))


def _banach_frame(args, frame_flag: str, t_flag: str) -> tuple[banach.BanachFrame, dict]:
    t = getattr(args, t_flag)
    if t is not None:
        return banach.make_Phi(t, args.dim), {t_flag.replace("_", "-"): t, "dim": args.dim}
    obj = load_json(getattr(args, frame_flag), f"--{frame_flag.replace('_', '-')}")
    return banach.BanachFrame.from_json(obj), {frame_flag: obj}


def task_seed(master: int, command: str) -> int:
    digest = hashlib.sha256(f"{master}/{command}".encode()).digest()
    return int.from_bytes(digest[:4], "big")


def _verdict_parts(v: seqlab.EquivVerdict) -> tuple[dict, dict]:
    d = v.to_json()
    certs = {k: d.pop(k) for k in ("witness", "certificate", "certificate_K")}
    return d, certs


# -------------------------------------------------------------- commands


def cmd_norm(args, seed):
    alpha = _weights(args)
    el_obj = load_json(args.element, "--element")
    x = xspace.MatElement.from_json(el_obj)
    out = {"value": xspace.xd_norm(alpha, x), "concrete": xspace.concrete_rep_norm(alpha, x)}
    return {"alpha": alpha.to_json(), "element": el_obj}, out, {}


def cmd_cbnorm(args, seed):
    alpha, beta = _weights(args, "alpha"), _weights(args, "beta")
    depth = args.depth
    inputs = {"alpha": alpha.to_json(), "beta": beta.to_json(), "depth": depth}
    if args.operator is None:
        res = cbnorm.cb_norm_diag_identity(alpha, beta, depth)
    else:
        op = load_json(args.operator, "--operator")
        inputs["operator"] = op
        A = np.diag(alpha.materialize(depth))
        B = np.diag(beta.materialize(depth))
        res = cbnorm.cb_norm_general(A, B, _matrix(op), seed=seed)
    d = res.to_json()
    return inputs, {k: d[k] for k in ("value", "method", "certified", "upper_bound")}, \
        {"witness": d["witness"]}


def cmd_seq_dom(args, seed):
    alpha, beta = _weights(args, "alpha"), _weights(args, "beta")
    v = seqlab.dominates(alpha, beta, args.depth, args.k_max)
    out, certs = _verdict_parts(v)
    return {"alpha": alpha.to_json(), "beta": beta.to_json(), "depth": args.depth,
            "k_max": args.k_max}, out, certs


def cmd_seq_equiv(args, seed):
    alpha, beta = _weights(args, "alpha"), _weights(args, "beta")
    v = seqlab.seq_equivalent(alpha, beta, args.depth, args.k_max)
    out, certs = _verdict_parts(v)
    return {"alpha": alpha.to_json(), "beta": beta.to_json(), "depth": args.depth,
            "k_max": args.k_max}, out, certs


def cmd_star_equiv(args, seed):
    beta, gamma = _genint(args, "beta"), _genint(args, "gamma")
    k_max = 16 if args.k_max is None else args.k_max
    v = seqlab.star_equiv(beta, gamma, args.depth, k_max)
    out, certs = _verdict_parts(v)
    return {"beta": beta.to_json(), "gamma": gamma.to_json(), "depth": args.depth,
            "k_max": k_max}, out, certs


def cmd_reduce_n(args, seed):
    alpha = _weights(args)
    seq = seqlab.n_sequence(alpha.materialize(args.depth))
    return {"alpha": alpha.to_json(), "depth": args.depth}, {"n": seq.to_json()["prefix"]}, {}


def cmd_reduce_y(args, seed):
    beta = _genint(args, "beta")
    base = _weights(args, "alpha")
    angles = seqlab.y_map(beta, base.materialize(args.depth), args.depth)
    out = {"angles": [{"index": i, "sin": s, "cos": c} for i, s, c in angles]}
    return {"beta": beta.to_json(), "alpha": base.to_json(), "depth": args.depth}, out, {}


def cmd_reduce_phi(args, seed):
    point = seqlab.XiPoint.from_json(load_json(args.point, "--point"))
    base = _genint(args, "beta")
    image = seqlab.borel2_phi(point, base, args.depth)
    blocks = seqlab.borel2_blocks(base, args.depth)
    return ({"point": point.to_json(), "beta": base.to_json(), "depth": args.depth},
            {"image": image.to_json()["prefix"]},
            {"p": list(blocks.p), "q": [None if q is None else q for q in blocks.q],
             "open_block": blocks.open_block})


def cmd_b_epsilon(args, seed):
    bits = load_json(args.epsilon, "--epsilon")
    part_obj = load_json(args.partition, "--partition") if args.partition else None
    part = seqlab.partition_from_json(part_obj)
    point = seqlab.b_epsilon([int(b) for b in bits], part, args.depth)
    return ({"epsilon": bits, "partition": part.to_json(), "depth": args.depth},
            {"point": list(point.entries)}, {})


def cmd_subspace_spectrum(args, seed):
    frame = _subspace_frame(args)
    spec = subspaces.restricted_spectrum(frame)
    amb = subspaces.ambient_spectrum(frame)
    return {"frame": frame.to_json()}, {"spectrum": spec.tolist()}, \
        {"ambient_spectrum": amb[:spec.size].tolist()}


def cmd_wielandt(args, seed):
    frame = _subspace_frame(args)
    idx = [int(i) for i in load_json(args.indices, "--indices")]
    r = subspaces.wielandt_check(frame, idx, args.trials, seed)
    return ({"frame": frame.to_json(), "indices": idx, "trials": args.trials},
            {"closed_form": r.closed_form, "best_oracle": r.best_oracle},
            {"singular_chain": r.singular_chain})


def cmd_canonical_basis(args, seed):
    frame = _subspace_frame(args)
    coef = None
    inputs = {"frame": frame.to_json()}
    if args.coefficients:
        obj = load_json(args.coefficients, "--coefficients")
        inputs["coefficients"] = obj
        coef = _matrix(obj)
    r = subspaces.canonical_basis(frame, coef)
    return inputs, {"beta": list(r.beta.prefix), "method": r.method, "note": r.note,
                    "residual": r.residual}, {"T": r.T}


def cmd_subbasis(args, seed):
    frame = _subspace_frame(args)
    r = subspaces.subbasis_embed(frame.ambient, frame)
    return ({"frame": frame.to_json()},
            {"distortion": r.distortion, "forward": r.forward, "backward": r.backward},
            {"pi": list(r.pi), "cutoffs": list(r.cutoffs)})


def cmd_noncomplemented(args, seed):
    alpha, beta = _weights(args, "alpha"), _weights(args, "beta")
    r = subspaces.noncomplemented_bound(alpha, beta, args.k, args.n)
    return ({"alpha": alpha.to_json(), "beta": beta.to_json(), "k": args.k, "n": args.n},
            {"bound": r.value, "divergent": r.divergent}, {"divergence": r.certificate})


def cmd_distortion(args, seed):
    r = subspaces.subsequence_distortion(args.n, args.case)
    return ({"n": args.n, "case": args.case},
            {"bound": r.bound, "target": r.target, "case": r.case},
            {"count": r.count, "ratio_sq": r.ratio_sq})


def cmd_banach_c(args, seed):
    frame, inputs = _banach_frame(args, "frame", "phi_t")
    c, x = banach.c_invariant(frame)
    return inputs, {"c": c}, {"maximizer": x}


def cmd_banach_isometric(args, seed):
    y, in1 = _banach_frame(args, "frame", "phi_t")
    z, in2 = _banach_frame(args, "frame2", "phi_t2")
    tol = banach.ISOMETRY_TOL if args.tol is None else args.tol
    cy, cz = banach.c_invariant(y)[0], banach.c_invariant(z)[0]
    return ({**in1, **in2, "tol": tol}, {"isometric": banach.isometric(y, z, tol)},
            {"c_first": cy, "c_second": cz})


def cmd_verify(args, seed):
    numbers = args.suite or [n for n, _, _ in acceptance.SUITES]
    results = [acceptance.run_suite(n, args.seed) for n in numbers]
    return ({"suites": numbers},
            {"passed": all(r.passed for r in results),
             "suites": [{"number": r.number, "title": r.title, "passed": r.passed,
                         "detail": r.detail} for r in results]}, {})


COMMANDS: dict[str, tuple[Callable, str]] = {
    "norm": (cmd_norm, "matricial norm of an element of M_n(X^d(alpha))"),
    "cbnorm": (cmd_cbnorm, "cb-norm of the formal identity or of an operator"),
    "seq-dom": (cmd_seq_dom, "does alpha dominate beta"),
    "seq-equiv": (cmd_seq_equiv, "equivalence of weight sequences"),
    "star-equiv": (cmd_star_equiv, "relation ~* on generalized-integer sequences"),
    "reduce-n": (cmd_reduce_n, "n-map of a spectrum"),
    "reduce-y": (cmd_reduce_y, "frame angles realizing a generalized-integer sequence"),
    "reduce-phi": (cmd_reduce_phi, "image of a point of Xi under the block map"),
    "b-epsilon": (cmd_b_epsilon, "point of Xi built from a bit sequence"),
    "subspace-spectrum": (cmd_subspace_spectrum, "singular values of A restricted to Y"),
    "wielandt": (cmd_wielandt, "minimax closed form against the chain oracle"),
    "canonical-basis": (cmd_canonical_basis, "canonical basis weights and sign averaging"),
    "subbasis": (cmd_subbasis, "injection into the subbasis schedule"),
    "noncomplemented": (cmd_noncomplemented, "projection-norm lower bound"),
    "distortion": (cmd_distortion, "subsequence distortion lower bound"),
    "banach-c": (cmd_banach_c, "the invariant c(Y)"),
    "banach-isometric": (cmd_banach_isometric, "isometry decision via c(Y)"),
    "verify": (cmd_verify, "run the acceptance suites"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="opspace", description="Operator-space laboratory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=("json", "table"), default="json")
    for name, (_, help_text) in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, parents=[common])
        if name in ("norm", "cbnorm", "seq-dom", "seq-equiv", "reduce-n", "reduce-y",
                    "noncomplemented"):
            p.add_argument("--alpha")
        if name in ("cbnorm", "seq-dom", "seq-equiv", "star-equiv", "reduce-y", "reduce-phi",
                    "noncomplemented"):
            p.add_argument("--beta")
        if name in ("cbnorm", "seq-dom", "seq-equiv", "star-equiv", "reduce-n", "reduce-y",
                    "reduce-phi", "b-epsilon"):
            p.add_argument("--depth", type=int, required=True)
        if name in ("seq-dom", "seq-equiv", "star-equiv"):
            p.add_argument("--k-max", type=int, default=None if name == "star-equiv" else 64)
        if name in ("subspace-spectrum", "wielandt", "canonical-basis", "subbasis",
                    "banach-c", "banach-isometric"):
            p.add_argument("--frame")
        if name in ("banach-c", "banach-isometric"):
            p.add_argument("--phi-t", type=float)
            p.add_argument("--dim", type=int, default=50)
        if name == "norm":
            p.add_argument("--element")
        elif name == "cbnorm":
            p.add_argument("--operator")
        elif name == "star-equiv":
            p.add_argument("--gamma")
        elif name == "reduce-phi":
            p.add_argument("--point")
        elif name == "b-epsilon":
            p.add_argument("--epsilon", required=True)
            p.add_argument("--partition")
        elif name == "wielandt":
            p.add_argument("--indices", required=True)
            p.add_argument("--trials", type=int, default=100)
        elif name == "canonical-basis":
            p.add_argument("--coefficients")
        elif name == "noncomplemented":
            p.add_argument("--k", type=int, default=0)
            p.add_argument("--n", type=int, required=True)
        elif name == "distortion":
            p.add_argument("--n", type=int, required=True)
            p.add_argument("--case", choices=("inside", "outside"))
        elif name == "banach-isometric":
            p.add_argument("--frame2")
            p.add_argument("--phi-t2", type=float)
            p.add_argument("--tol", type=float)
        elif name == "verify":
            p.add_argument("--suite", type=int, action="append",
                           choices=[n for n, _, _ in acceptance.SUITES])
    return parser


def run(argv: list[str]) -> tuple[int, str, str]:
    """Execute one command; returns ``(exit code, stdout text, stderr text)``."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return EXIT_USAGE, "", str(exc)
    except SystemExit as exc:  # --help
        return int(exc.code or 0), "", ""
    fn, _ = COMMANDS[args.command]
    try:
        inputs, outputs, certs = fn(args, task_seed(args.seed, args.command))
    except UsageError as exc:
        return EXIT_USAGE, "", f"opspace {args.command}: {exc}\n"
    except ParseError as exc:
        return EXIT_PARSE, "", f"opspace {args.command}: {exc}\n"
    except (ValueError, IndexError, KeyError, TypeError, ArithmeticError) as exc:
        return EXIT_PRECONDITION, "", f"opspace {args.command}: {type(exc).__name__}: {exc}\n"
    report = RunReport(args.command, inputs, outputs, certs, args.seed)
    code = EXIT_OK
    if args.command == "verify" and not outputs["passed"]:
        code = EXIT_VERIFY
    return code, emit_report(report, args.format) + "\n", ""


def main(argv: list[str] | None = None) -> int:
    code, out, err = run(sys.argv[1:] if argv is None else argv)
    if out:
        sys.stdout.write(out)
    if err:
        sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
