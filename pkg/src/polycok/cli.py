"""Command-line entry point.

Exit codes: 0 pass (or completed, for evidence runs), 1 assertion failure,
2 configuration or parse error, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

from . import enumeration as en
from . import harness, linalg
from .errors import BudgetExceeded
from .linalg import RingMatrix
from .modtypes import (ModuleType, annihilated_by, aut_order, aut_order_bruteforce,
                       parse_partition, theorem_rhs_count)
from .ring import RingParams, parse_poly

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG, EXIT_BUDGET = 0, 1, 2, 3

VERIFY_NAMES = ("theorem-main", "lemma-lee", "lemma-final", "final1-map", "lemma-final3",
                "lemma-r", "geo-identity", "fw-case", "conjecture", "final2", "final4")

_INT_KEYS = {"p", "N", "n", "q", "budget", "workers", "seed", "twists", "pairs", "sample",
             "samples", "max_pairs"}
_LIST_KEYS = {"poly", "G"}


class ConfigError(ValueError):
    pass


@dataclass
class CliConfig:
    p: int = 2
    N: int = 1
    n: int = 1
    poly: List[str] = field(default_factory=lambda: ["0,1"])
    G: List[str] = field(default_factory=lambda: [""])
    q: Optional[int] = None
    fibers: str = "all"
    matrix: Optional[str] = None
    residue: Optional[str] = None
    budget: int = en.DEFAULT_BUDGET
    workers: int = 1
    seed: int = 0
    format: str = "json"
    output: Optional[str] = None
    input: Optional[str] = None
    twists: int = 20
    pairs: int = 10
    sample: int = 5
    samples: int = 40
    max_pairs: int = 512

    def validate(self) -> None:
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.format not in ("json", "csv", "md"):
            raise ConfigError(f"unknown format {self.format!r}")
        if self.n < 1:
            raise ConfigError("n must be >= 1")

    def ring(self, index: int = 0) -> RingParams:
        try:
            return RingParams(self.p, self.N, parse_poly(self.poly[index], self.p, self.N))
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def rings(self) -> list:
        return [self.ring(i) for i in range(len(self.poly))]

    def module(self, index: int = 0) -> ModuleType:
        return parse_partition(self.G[index])

    def modules(self) -> list:
        return [parse_partition(g) for g in self.G]


def read_config_file(path: str) -> dict:
    """``key = value`` lines; ``#`` starts a comment; list keys split on ``;``."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            value = value.strip("\"'")
            if key not in CliConfig.__dataclass_fields__:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            if key in _INT_KEYS:
                try:
                    out[key] = int(value)
                except ValueError as exc:
                    raise ConfigError(f"{path}:{lineno}: {key} must be an integer") from exc
            elif key in _LIST_KEYS:
                out[key] = [v.strip() for v in value.split(";")]
            else:
                out[key] = value
    return out


def build_config(args: argparse.Namespace) -> CliConfig:
    merged = {}
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in CliConfig.__dataclass_fields__:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    cfg = CliConfig(**merged)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# input files


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc


def load_fibers(spec: str):
    """``all`` or a JSON file holding a list of residue matrices mod p."""
    if spec == "all":
        return "all"
    data = _load_json(spec)
    if not isinstance(data, list) or not data:
        raise ConfigError("fiber file must hold a non-empty list of matrices")
    try:
        return [en.FiberSpec.of(rows) for rows in data]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_matrix(path: str, cfg: CliConfig) -> RingMatrix:
    """Integer entries give a matrix over Z/p^{N+1}; coefficient lists a matrix over R."""
    rows = _load_json(path)
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError("matrix file must hold a JSON array of arrays")
    try:
        if isinstance(rows[0][0], list):
            return RingMatrix.from_rows(rows, cfg.ring())
        return RingMatrix.from_rows(rows, RingParams(cfg.p, cfg.N, (0, 1)).base())
    except (ValueError, TypeError, IndexError) as exc:
        raise ConfigError(f"bad matrix: {exc}") from exc


# ---------------------------------------------------------------------------
# commands


def cmd_verify(name: str, cfg: CliConfig) -> harness.ExperimentResult:
    b, w, s = cfg.budget, cfg.workers, cfg.seed
    if name == "fw-case":
        return harness.verify_fw_case(cfg.p, cfg.n, cfg.N, cfg.module(), load_fibers(cfg.fibers), b)
    if name == "conjecture":
        return harness.explore_conjecture(cfg.rings(), cfg.n, cfg.modules(),
                                          load_fibers(cfg.fibers), b)
    params = cfg.ring()
    if name == "theorem-main":
        return harness.verify_theorem_main(params, cfg.n, cfg.module(), load_fibers(cfg.fibers), b, w)
    if name == "lemma-lee":
        return harness.verify_lemma_lee(params, cfg.n, b)
    if name == "lemma-final":
        fibers = None if cfg.fibers == "all" else load_fibers(cfg.fibers)
        H = cfg.module() if cfg.G != [""] else None
        return harness.verify_lemma_final(params, cfg.n, H, cfg.twists, s, fibers, budget=b)
    if name == "final1-map":
        return harness.verify_final1_map(params, cfg.n, cfg.sample, s, b)
    if name == "lemma-final3":
        return harness.verify_lemma_final3(params, cfg.n, cfg.module(), cfg.pairs, s, b)
    if name == "lemma-r":
        zbar = None
        if cfg.residue:
            rows = _load_json(cfg.residue)
            zbar = RingMatrix.from_rows(rows, params.residue_field())
        return harness.verify_lemma_r(params, cfg.n, cfg.module(), zbar, b)
    if name == "geo-identity":
        return harness.verify_geo_identity(params, cfg.n, cfg.module(), b, w)
    if name == "final2":
        return harness.verify_corollary_final2(params, cfg.n, cfg.max_pairs, s, b)
    if name == "final4":
        return harness.verify_corollary_final4(params, cfg.n, cfg.module(), cfg.samples, s, b)
    raise ConfigError(f"unknown experiment {name!r}")  # pragma: no cover


def cmd_snf(cfg: CliConfig) -> harness.ExperimentResult:
    if not cfg.matrix:
        raise ConfigError("snf needs --matrix")
    A = load_matrix(cfg.matrix, cfg)
    res = harness.ExperimentResult("snf", {**A.ring.describe(), "matrix": A.to_int_rows()})
    with harness._Timer(res):
        result = linalg.smith_normal_form(A)
        res.notes["diagonal_exponents"] = list(result.diagonal_exponents)
        res.notes["type"] = list(linalg.cokernel_type(A).parts) if A.n_rows == A.n_cols else None
        res.notes["left"] = result.left.to_int_rows()
        res.notes["right"] = result.right.to_int_rows()
        res.check("left @ A @ right is the Smith form", True, linalg.check_snf(A, result))
    return res


def cmd_distribution(cfg: CliConfig) -> harness.ExperimentResult:
    params = cfg.ring()
    n = cfg.n
    res = harness.ExperimentResult("distribution", {**params.describe(), "n": n})
    with harness._Timer(res):
        rows = harness.distribution_table(params, n, cfg.budget, cfg.workers)
        res.notes["rows"] = rows
        res.check("histogram total", params.modulus ** (n * n), sum(r["count"] for r in rows))
        for r in rows:
            G = ModuleType(tuple(r["G"]))
            if annihilated_by(G, params.N):
                res.check(f"G={list(G.parts)}: count = valid residues x fiber count",
                          r["valid_residues"] * theorem_rhs_count(G, params, n), Fraction(r["count"]))
    return res


def cmd_aut_order(cfg: CliConfig) -> harness.ExperimentResult:
    if cfg.q is None:
        raise ConfigError("aut-order needs --q")
    G = cfg.module()
    res = harness.ExperimentResult("aut-order", {"G": G, "q": cfg.q})
    with harness._Timer(res):
        closed = aut_order(G, cfg.q)
        res.notes["closed_form"] = closed
        try:
            brute = aut_order_bruteforce(G, cfg.q, budget=min(cfg.budget, 4096))
        except BudgetExceeded as exc:
            res.notes["bruteforce"] = f"skipped: {exc}"
        else:
            res.notes["bruteforce"] = brute
            res.check("closed form = brute force", brute, closed)
    return res


# ---------------------------------------------------------------------------
# output


def render(results, fmt: str) -> str:
    if fmt == "json":
        payload = results[0].to_dict() if len(results) == 1 else [r.to_dict() for r in results]
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"
    if fmt == "csv":
        return harness.render_csv(results)
    return harness.render_markdown(results)


def load_report(path: str) -> list:
    data = _load_json(path)
    items = data if isinstance(data, list) else [data]
    try:
        return [harness.ExperimentResult.from_dict(d) for d in items]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"not a report: {exc}") from exc


def _emit(text: str, cfg: CliConfig) -> None:
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="key = value file merged under the flags")
    sp.add_argument("--p", type=int)
    sp.add_argument("--N", type=int)
    sp.add_argument("--n", type=int)
    sp.add_argument("--poly", action="append", help="ascending coefficients, e.g. 1,1,1")
    sp.add_argument("--G", action="append", help="partition, e.g. 2,1,1 ('' is trivial)")
    sp.add_argument("--budget", type=int)
    sp.add_argument("--workers", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--format", choices=("json", "csv", "md"))
    sp.add_argument("--output")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polycok",
                                     description="Exhaustive checks of polynomial cokernel counts.")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="run a named experiment")
    verify.add_argument("experiment", choices=VERIFY_NAMES)
    _add_common(verify)
    verify.add_argument("--fibers", help="'all' or a JSON file of residue matrices")
    verify.add_argument("--twists", type=int, help="sampled twists for lemma-final")
    verify.add_argument("--pairs", type=int, help="matrix pairs for lemma-final3")
    verify.add_argument("--sample", type=int, help="sampled maps for final1-map")
    verify.add_argument("--samples", type=int, help="residues for final4")
    verify.add_argument("--max-pairs", dest="max_pairs", type=int,
                        help="exhaustive limit for final2")
    verify.add_argument("--residue", help="JSON residue matrix over F_q for lemma-r")

    snf = sub.add_parser("snf", help="Smith normal form of a matrix file")
    _add_common(snf)
    snf.add_argument("--matrix")

    dist = sub.add_parser("distribution", help="full-space cokernel histogram")
    _add_common(dist)

    aut = sub.add_parser("aut-order", help="automorphism count of a module type")
    _add_common(aut)
    aut.add_argument("--q", type=int)

    rend = sub.add_parser("render", help="re-render a JSON report")
    _add_common(rend)
    rend.add_argument("--input", required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if args.command == "render":
            results = load_report(cfg.input)
        elif args.command == "verify":
            results = [cmd_verify(args.experiment, cfg)]
        elif args.command == "snf":
            results = [cmd_snf(cfg)]
        elif args.command == "distribution":
            results = [cmd_distribution(cfg)]
        else:
            results = [cmd_aut_order(cfg)]
        _emit(render(results, cfg.format), cfg)
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (ValueError, LookupError, ArithmeticError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "render":
        return EXIT_PASS
    if all(r.evidence for r in results):
        return EXIT_PASS
    return EXIT_PASS if all(r.overall_pass for r in results) else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
