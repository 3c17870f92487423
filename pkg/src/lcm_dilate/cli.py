"""Batch command line interface.

Subcommands
-----------
validate    structural checks of the dynamical system (ideals, lcm rule)
check-cp    complete positivity of the instance's map (Choi blocks)
check-nica  inclusion-exclusion defects over all small subsets up to a depth
dilate      build, verify, and persist the truncated minimal dilation
verify      re-check a persisted dilation against its instance
report      render a persisted report or result as text

Exit codes: 0 all checks passed, 1 a mathematical check failed, 2 bad usage
or unparsable input.  Reports are deterministic for a fixed instance, flags,
and seed; timing fields are excluded from the report hash.
"""

from __future__ import annotations

import argparse
import itertools
import json
import os
import platform
import sys as _sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import __version__
from .algebras import PointModel
from .cpmaps import (
    BaseOperatorMap,
    ContractionFamily,
    build_phi_tilde,
    diagonal_compression_map,
    extend_phi_T,
    is_completely_positive,
    nica_defect,
    state_map,
    transpose_map,
)
from .dilation import Tolerances, covariant_dilate
from .errors import (
    CovarianceError,
    GramNotPositiveError,
    ResourceCapError,
    SchemaError,
    SpecMismatchError,
)
from .persist import result_payload, verify_result
from .semigroup import semigroup_from_json
from .serialize import decode_matrix, load_json, report_hash, sha256_of
from .systems import build_system

REPORT_FORMAT = "lcm-dilate-report-v1"
DEFAULT_MAX_DIM = 4096

PHI_KINDS = ("from_contractions", "base_values", "state", "diagonal", "transpose")
MODEL_KINDS = ("toeplitz_abelian", "toeplitz_free", "boundary_free", "matrix", "stage")


# ---------------------------------------------------------------------------
# instance parsing
# ---------------------------------------------------------------------------


@dataclass
class Instance:
    path: str
    raw: dict
    hash: str
    system_config: dict
    phi_config: dict
    t_mats: list[np.ndarray]
    degree: int
    tolerances: Tolerances
    seed: int


def parse_instance(path: str) -> Instance:
    raw = load_json(path)
    if not isinstance(raw, dict):
        raise SchemaError("instance must be a JSON object", path)

    sys_doc = raw.get("system")
    if not isinstance(sys_doc, dict):
        raise SchemaError("missing 'system' object", "/system")
    sg_doc = sys_doc.get("semigroup")
    if not isinstance(sg_doc, dict) or "kind" not in sg_doc or "rank" not in sg_doc:
        raise SchemaError("semigroup needs 'kind' and 'rank'", "/system/semigroup")
    try:
        sg = semigroup_from_json(sg_doc)
    except SpecMismatchError as exc:
        raise SchemaError(str(exc), "/system/semigroup") from None

    model_doc = sys_doc.get("model", {"kind": "matrix"})
    kind = model_doc.get("kind")
    if kind not in MODEL_KINDS:
        raise SchemaError(f"unknown model tag {kind!r}", "/system/model/kind")

    blocks = sys_doc.get("base", {}).get("blocks", [1])
    if not isinstance(blocks, list) or not all(
        isinstance(b, int) and b >= 1 for b in blocks
    ):
        raise SchemaError("base blocks must be positive integers", "/system/base/blocks")
    dim = sum(blocks)

    config: dict = {
        "semigroup": sg_doc,
        "model": {"kind": kind},
        "base": {"blocks": blocks},
    }
    if "betas" in sys_doc:
        betas = [
            decode_matrix(m, f"/system/betas/{i}")
            for i, m in enumerate(sys_doc["betas"])
        ]
        for i, b in enumerate(betas):
            if b.shape != (dim, dim):
                raise SchemaError(
                    f"beta has shape {b.shape}, expected {(dim, dim)}",
                    f"/system/betas/{i}",
                )
        config["betas"] = betas
    if "alphas" in sys_doc:
        alphas = []
        for i, entry in enumerate(sys_doc["alphas"]):
            if "unitary" in entry:
                alphas.append(
                    {"unitary": decode_matrix(entry["unitary"],
                                              f"/system/alphas/{i}/unitary")}
                )
            elif "linear" in entry:
                alphas.append(
                    {"linear": decode_matrix(entry["linear"],
                                             f"/system/alphas/{i}/linear")}
                )
            else:
                raise SchemaError("alpha entry needs 'unitary' or 'linear'",
                                  f"/system/alphas/{i}")
        config["alphas"] = alphas
    if kind == "stage":
        cod = sys_doc.get("codomain", {}).get("blocks")
        if not cod:
            raise SchemaError("stage systems need codomain blocks",
                              "/system/codomain")
        config["codomain"] = {"blocks": cod}
        images_doc = sys_doc.get("basis_images")
        if not isinstance(images_doc, list):
            raise SchemaError("stage systems need basis_images",
                              "/system/basis_images")
        config["basis_images"] = [
            [decode_matrix(m, f"/system/basis_images/{g}/{i}")
             for i, m in enumerate(gen)]
            for g, gen in enumerate(images_doc)
        ]

    t_doc = raw.get("T")
    t_mats: list[np.ndarray] = []
    if t_doc is not None:
        if not isinstance(t_doc, list) or len(t_doc) != sg.rank:
            raise SchemaError(
                f"need {sg.rank} generator contractions", "/T"
            )
        t_mats = [decode_matrix(m, f"/T/{i}") for i, m in enumerate(t_doc)]
        h = t_mats[0].shape[0]
        for i, m in enumerate(t_mats):
            if m.shape != (h, h):
                raise SchemaError(
                    f"contraction {i} has shape {m.shape}, expected {(h, h)}",
                    f"/T/{i}",
                )

    phi_doc = raw.get("phi", {"kind": "from_contractions"})
    pk = phi_doc.get("kind")
    if pk not in PHI_KINDS:
        raise SchemaError(f"unknown phi kind {pk!r}", "/phi/kind")
    phi_config = {"kind": pk}
    if pk == "state":
        phi_config["rho"] = decode_matrix(phi_doc["rho"], "/phi/rho")
    if pk == "base_values":
        vals = phi_doc.get("values")
        if not isinstance(vals, list):
            raise SchemaError("phi.base_values needs 'values'", "/phi/values")
        phi_config["values"] = [
            decode_matrix(m, f"/phi/values/{i}") for i, m in enumerate(vals)
        ]

    degree = raw.get("depth", 2)
    if not isinstance(degree, int) or degree < 0:
        raise SchemaError("depth must be a natural number", "/depth")

    tol_doc = raw.get("tolerances", {})
    tols = Tolerances(
        psd=float(tol_doc.get("psd", 1e-8)),
        rank=float(tol_doc.get("rank", 1e-10)),
        identity=float(tol_doc.get("identity", 1e-8)),
        covariance=float(tol_doc.get("covariance", 1e-9)),
        corner=float(tol_doc.get("corner", 1e-8)),
    )
    seed = int(raw.get("seed", 0))
    return Instance(
        path=path,
        raw=raw,
        hash=sha256_of(raw),
        system_config=config,
        phi_config=phi_config,
        t_mats=t_mats,
        degree=degree,
        tolerances=tols,
        seed=seed,
    )


def build_pair(instance: Instance, degree: Optional[int] = None):
    """Construct (system, phi, T, extension) for an instance.

    ``extension`` is the acceptance record when phi is derived from the
    contractions (None otherwise); a rejected extension leaves phi = None.
    """
    degree = instance.degree if degree is None else degree
    sys_ = build_system(instance.system_config, validate=False)
    sg = sys_.semigroup
    T = ContractionFamily(sg, instance.t_mats) if instance.t_mats else None

    pk = instance.phi_config["kind"]
    phi = None
    if pk == "from_contractions":
        if T is None:
            raise SchemaError("phi.from_contractions needs T", "/T")
        ext = extend_phi_T(sys_, T, degree)
        return sys_, ext.map, T, ext
    else:
        base = sys_.base
        if pk == "state":
            if T is None:
                raise SchemaError("phi.state needs T to fix the space", "/T")
            phi0 = state_map(base, instance.phi_config["rho"], T.h)
        elif pk == "base_values":
            phi0 = BaseOperatorMap(base, instance.phi_config["values"])
        elif pk == "diagonal":
            phi0 = diagonal_compression_map(base)
        elif pk == "transpose":
            phi0 = transpose_map(base)
        else:  # pragma: no cover
            raise SchemaError(f"unhandled phi kind {pk}", "/phi/kind")
        if not isinstance(sys_.model, PointModel):
            if T is None:
                raise SchemaError("lifting phi needs T", "/T")
            phi = build_phi_tilde(sys_, phi0, T, degree)
        else:
            phi = phi0
    return sys_, phi, T, None


# ---------------------------------------------------------------------------
# report plumbing
# ---------------------------------------------------------------------------


def _check_dict(name, passed, value=None, threshold=None, detail="", wall_ms=None):
    return {
        "name": name,
        "passed": bool(passed),
        "value": None if value is None else float(value),
        "threshold": None if threshold is None else float(threshold),
        "detail": str(detail),
        "wall_ms": wall_ms,
    }


def _records(validation) -> list[dict]:
    out = []
    for c in validation.checks:
        d = c.as_dict()
        d["wall_ms"] = None
        out.append(d)
    return out


def make_report(command: str, instance: Instance, checks: list[dict],
                extra: Optional[dict] = None, wall_ms: float = 0.0) -> dict:
    passed = all(c["passed"] for c in checks)
    doc = {
        "format": REPORT_FORMAT,
        "version": __version__,
        "command": command,
        "instance_path": instance.path,
        "instance_hash": instance.hash,
        "seed": instance.seed,
        "environment": {
            "python": platform.python_version(),
            "numpy": np.__version__,
            "platform": platform.platform(),
        },
        "checks": checks,
        "passed": passed,
        "exit_code": 0 if passed else 1,
        "extra": extra or {},
        "wall_ms": wall_ms,
    }
    doc["report_hash"] = report_hash(doc)
    return doc


def emit_report(report: dict, fmt: str = "text") -> bytes:
    """Render a report; json is canonical (sorted keys), text is one line
    per check."""
    if fmt == "json":
        return (json.dumps(report, sort_keys=True, indent=2) + "\n").encode()
    lines = [
        f"# {report.get('command', 'report')}  "
        f"instance={os.path.basename(str(report.get('instance_path', '?')))}  "
        f"hash={str(report.get('instance_hash', ''))[:12]}"
    ]
    for c in report.get("checks", []):
        flag = "PASS" if c.get("passed") else "FAIL"
        value = c.get("value")
        vtxt = "" if value is None else f"  value={value:.3e}"
        ttxt = (
            "" if c.get("threshold") is None else f"  tol={c['threshold']:.1e}"
        )
        dtxt = f"  [{c['detail']}]" if c.get("detail") else ""
        lines.append(f"{flag}  {c['name']}{vtxt}{ttxt}{dtxt}")
    verdict = "ALL CHECKS PASSED" if report.get("passed") else "FAILURES PRESENT"
    lines.append(f"# {verdict} (exit {report.get('exit_code')})")
    return ("\n".join(lines) + "\n").encode()


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _cmd_validate(instance: Instance, flags: dict) -> dict:
    t0 = time.perf_counter()
    depth = flags.get("depth") or min(instance.degree, 2) or 1
    sys_ = build_system(instance.system_config, validate=False)
    if hasattr(sys_, "basis_images"):          # one inductive stage
        rep = sys_.validate()
    else:
        rep = sys_.validate(depth=max(1, depth))
    checks = _records(rep)
    return make_report("validate", instance, checks,
                       wall_ms=(time.perf_counter() - t0) * 1e3)


def _cmd_check_cp(instance: Instance, flags: dict) -> dict:
    t0 = time.perf_counter()
    depth = flags.get("depth") or instance.degree
    checks: list[dict] = []
    extra: dict = {}
    try:
        sys_, phi, T, ext = build_pair(instance, degree=depth)
    except CovarianceError as exc:
        checks.append(_check_dict("pair.covariant", False, exc.residual,
                                  exc.tol, detail=str(exc)))
        return make_report("check-cp", instance, checks,
                           wall_ms=(time.perf_counter() - t0) * 1e3)
    if ext is not None and not ext.accepted:
        checks.append(_check_dict(
            "phi.extension_accepted", False, ext.min_eigenvalue,
            -instance.tolerances.psd * ext.scale,
            detail=f"violating atoms: {[str(a) for a, _ in ext.violations]}",
        ))
        extra["violations"] = ext.as_dict()["violations"]
    else:
        if ext is not None:
            checks.append(_check_dict("phi.extension_accepted", True, 0.0, None))
        cp = is_completely_positive(phi, rtol=instance.tolerances.psd)
        checks.append(_check_dict(
            "phi.completely_positive", cp.is_cp, cp.min_eigenvalue,
            -instance.tolerances.psd * cp.scale, detail=cp.where,
        ))
        extra["min_eigenvalue"] = cp.min_eigenvalue
    return make_report("check-cp", instance, checks, extra,
                       wall_ms=(time.perf_counter() - t0) * 1e3)


def _cmd_check_nica(instance: Instance, flags: dict) -> dict:
    t0 = time.perf_counter()
    depth = flags.get("depth") or instance.degree
    max_f = flags.get("max_f") or 4
    sys_ = build_system(instance.system_config, validate=False)
    T = ContractionFamily(sys_.semigroup, instance.t_mats)
    sg = sys_.semigroup
    pool = [p for p in sg.enumerate_up_to(depth) if sg.length(p) >= 1]
    worst = np.inf
    witness = None
    scale = 1.0
    count = 0
    for size in range(1, min(max_f, len(pool)) + 1):
        for combo in itertools.combinations(pool, size):
            d = nica_defect(T, combo)
            w = np.linalg.eigvalsh((d + d.conj().T) / 2.0)
            count += 1
            scale = max(scale, float(np.abs(w).max()))
            if w[0] < worst:
                worst, witness = float(w[0]), combo
    if not np.isfinite(worst):
        worst = 0.0
    tol = instance.tolerances.psd
    passed = worst >= -tol * scale
    checks = [_check_dict(
        "nica.defects_psd", passed, worst, -tol * scale,
        detail=f"{count} subsets; worst F = {list(map(list, witness or []))}",
    )]
    extra = {"subsets_checked": count,
             "worst_F": [list(f) for f in (witness or [])]}
    return make_report("check-nica", instance, checks, extra,
                       wall_ms=(time.perf_counter() - t0) * 1e3)


def _cmd_dilate(instance: Instance, flags: dict) -> dict:
    t0 = time.perf_counter()
    degree = flags.get("depth") or instance.degree
    max_dim = flags.get("max_dim") or _default_max_dim()
    checks: list[dict] = []
    extra: dict = {}

    sys_ = build_system(instance.system_config, validate=False)
    sysrep = sys_.validate(depth=1)
    checks.extend(_records(sysrep))
    if not sysrep.passed:
        return make_report("dilate", instance, checks,
                           wall_ms=(time.perf_counter() - t0) * 1e3)

    try:
        sys_, phi, T, ext = build_pair(instance, degree=degree)
    except CovarianceError as exc:
        checks.append(_check_dict("pair.covariant", False, exc.residual,
                                  exc.tol, detail=str(exc)))
        return make_report("dilate", instance, checks,
                           wall_ms=(time.perf_counter() - t0) * 1e3)
    if ext is not None and not ext.accepted:
        checks.append(_check_dict(
            "phi.extension_accepted", False, ext.min_eigenvalue,
            -instance.tolerances.psd * ext.scale,
            detail=f"violating atoms: {[str(a) for a, _ in ext.violations]}",
        ))
        return make_report("dilate", instance, checks,
                           wall_ms=(time.perf_counter() - t0) * 1e3)

    try:
        result = covariant_dilate(
            sys_, phi, T, degree,
            tolerances=instance.tolerances, max_dim=max_dim,
        )
    except GramNotPositiveError as exc:
        checks.append(_check_dict(
            "gram.psd", False, exc.min_eigenvalue,
            -instance.tolerances.psd * exc.scale,
            detail="dilation refused: Gram operator not positive",
        ))
        return make_report("dilate", instance, checks,
                           wall_ms=(time.perf_counter() - t0) * 1e3)
    except CovarianceError as exc:
        checks.append(_check_dict(
            "pair.covariant", False, exc.residual, exc.tol, detail=str(exc),
        ))
        return make_report("dilate", instance, checks,
                           wall_ms=(time.perf_counter() - t0) * 1e3)

    checks.extend(_records(result.report))
    extra.update({
        "rank": result.rank,
        "space_size": result.assembly.size,
        "degree": degree,
        "gram_min_eigenvalue": float(result.eigenvalues[0]),
        "gram_max_eigenvalue": float(result.eigenvalues[-1]),
    })
    out_path = flags.get("output") or instance.path + ".result.json"
    payload = result_payload(result, instance.hash)
    with open(out_path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
    extra["result_path"] = out_path
    return make_report("dilate", instance, checks, extra,
                       wall_ms=(time.perf_counter() - t0) * 1e3)


def _cmd_verify(instance: Instance, flags: dict) -> dict:
    t0 = time.perf_counter()
    result_path = flags.get("result") or instance.path + ".result.json"
    doc = load_json(result_path)
    if doc.get("instance_hash") != instance.hash:
        raise SchemaError(
            "persisted result was produced from a different instance "
            f"(stored hash {str(doc.get('instance_hash'))[:12]}..., "
            f"instance hash {instance.hash[:12]}...)",
            result_path,
        )
    sys_, phi, T, ext = build_pair(
        instance, degree=int(doc.get("degree", instance.degree))
    )
    if phi is None:
        raise SchemaError("instance's map extension is rejected; nothing to verify",
                          instance.path)
    rep = verify_result(doc, sys_, phi, T, tol=instance.tolerances.identity)
    checks = _records(rep)
    extra = {"result_path": result_path, "rank": doc.get("rank")}
    return make_report("verify", instance, checks, extra,
                       wall_ms=(time.perf_counter() - t0) * 1e3)


COMMANDS = {
    "validate": _cmd_validate,
    "check-cp": _cmd_check_cp,
    "check-nica": _cmd_check_nica,
    "dilate": _cmd_dilate,
    "verify": _cmd_verify,
}


def run_command(command: str, instance: Instance, flags: dict) -> dict:
    """Programmatic entry point used by the CLI and tests."""
    if command not in COMMANDS:
        raise SchemaError(f"unknown command {command!r}")
    return COMMANDS[command](instance, flags)


def _default_max_dim() -> int:
    try:
        return int(os.environ.get("LCM_DILATE_MAX_DIM", DEFAULT_MAX_DIM))
    except ValueError:
        return DEFAULT_MAX_DIM


def _job(args):
    command, path, flags = args
    try:
        instance = parse_instance(path)
        updates = {}
        if flags.get("tol_psd") is not None:
            updates["psd"] = flags["tol_psd"]
        if flags.get("tol_rank") is not None:
            updates["rank"] = flags["tol_rank"]
        if updates:
            d = instance.tolerances.as_dict()
            d.update(updates)
            instance.tolerances = Tolerances(**d)
        if flags.get("seed") is not None:
            instance.seed = flags["seed"]
        report = run_command(command, instance, flags)
        return path, report, report["exit_code"]
    except SchemaError as exc:
        return path, {"error": str(exc), "exit_code": 2}, 2
    except (SpecMismatchError, ResourceCapError) as exc:
        return path, {"error": str(exc), "exit_code": 2}, 2


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lcm-dilate",
        description="validate, certify, and dilate covariant contractive pairs",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_instances=True):
        if with_instances:
            p.add_argument("instances", nargs="+", help="instance JSON file(s)")
        p.add_argument("--depth", type=int, default=None,
                       help="override the instance truncation depth")
        p.add_argument("--tol-psd", type=float, default=None)
        p.add_argument("--tol-rank", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--jobs", type=int, default=1,
                       help="run independent instances in parallel")
        p.add_argument("--max-dim", type=int, default=None,
                       help="resource guard on the Gram size "
                            "(env LCM_DILATE_MAX_DIM)")

    common(sub.add_parser("validate", help="structural system checks"))
    common(sub.add_parser("check-cp", help="complete positivity of phi"))
    nica = sub.add_parser("check-nica", help="inclusion-exclusion defects")
    common(nica)
    nica.add_argument("--max-f", type=int, default=4,
                      help="largest subset size to enumerate")
    dil = sub.add_parser("dilate", help="construct and verify the dilation")
    common(dil)
    dil.add_argument("--output", default=None,
                     help="path for the persisted dilation result")
    ver = sub.add_parser("verify", help="re-verify a persisted dilation")
    common(ver)
    ver.add_argument("--result", default=None,
                     help="persisted result path (default <instance>.result.json)")
    rep = sub.add_parser("report", help="render a persisted report or result")
    rep.add_argument("paths", nargs="+")
    rep.add_argument("--format", choices=("text", "json"), default="text")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0

    if args.command == "report":
        code = 0
        for path in args.paths:
            try:
                doc = load_json(path)
            except SchemaError as exc:
                print(f"error: {exc}", file=_sys.stderr)
                return 2
            if doc.get("format") == REPORT_FORMAT:
                _sys.stdout.buffer.write(emit_report(doc, args.format))
                code = max(code, int(doc.get("exit_code", 1)))
            else:
                pseudo = {
                    "command": "result",
                    "instance_path": path,
                    "instance_hash": doc.get("instance_hash", ""),
                    "checks": doc.get("residuals", []),
                    "passed": all(r.get("passed") for r in doc.get("residuals", [])),
                    "exit_code": 0 if all(
                        r.get("passed") for r in doc.get("residuals", [])
                    ) else 1,
                }
                _sys.stdout.buffer.write(emit_report(pseudo, args.format))
                code = max(code, pseudo["exit_code"])
        return code

    flags = {
        "depth": args.depth,
        "max_dim": args.max_dim,
        "output": getattr(args, "output", None),
        "result": getattr(args, "result", None),
        "max_f": getattr(args, "max_f", None),
        "tol_psd": args.tol_psd,
        "tol_rank": args.tol_rank,
        "seed": args.seed,
    }
    jobs = [(args.command, path, flags) for path in args.instances]

    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            outcomes = list(pool.map(_job, jobs))
    else:
        outcomes = [_job(j) for j in jobs]

    code = 0
    for path, report, rc in outcomes:
        if "error" in report:
            print(f"error [{path}]: {report['error']}", file=_sys.stderr)
        else:
            _sys.stdout.buffer.write(emit_report(report, args.format))
        code = max(code, rc)
    return code


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
