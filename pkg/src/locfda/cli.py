"""Command-line front end.

Every subcommand writes its artifacts plus ``manifest.json`` into the output
directory (``--out``, default ``$LOCFDA_OUTPUT_DIR`` or ``./locfda_out``).
Exit codes: 0 success, 1 a validation check failed, 2 usage or parameter
error, 3 input/output error.  Failures also leave ``error.json`` behind.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
import time
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from ._kernels import numba_enabled
from .classification import detect_outliers, fit, posterior_table, predict, predict_proba
from .core import LocFDAError, ObservationMask
from .io import (
    PanelFormatError,
    load_labels,
    load_mask,
    load_panel,
    write_json,
    write_labels,
    write_mask,
    write_panel,
    write_table,
)
from .localization import localization_path, rescaled_width
from .reconstruction import knn_reconstruct
from .simulation import CensoringSpec, GeneratorSpec, censor, derive_seed, generate, specs_to_json

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
COMMANDS = ("simulate", "localize", "reconstruct", "classify", "outliers", "validate")
STOCHASTIC = ("simulate", "validate")


@dataclass
class RunConfig:
    command: str
    inputs: Dict[str, str] = field(default_factory=dict)
    output_dir: str = "locfda_out"
    seed: Optional[int] = None
    params: dict = field(default_factory=dict)
    threads: Optional[int] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise LocFDAError(f"unknown command {self.command!r}")
        if self.command in STOCHASTIC and self.seed is None:
            raise LocFDAError(f"{self.command} needs a seed")
        for role, path in self.inputs.items():
            if not Path(path).is_file():
                raise FileNotFoundError(f"{role} file not found: {path}")


def default_output_dir() -> str:
    return os.environ.get("LOCFDA_OUTPUT_DIR", "locfda_out")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _versions() -> dict:
    import scipy

    out = {"locfda": __version__, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}
    try:
        import numba

        out["numba"] = numba.__version__
    except ImportError:
        out["numba"] = None
    return out


def _set_threads(n: Optional[int]) -> None:
    # kernels are serial; the cap only bounds whatever numba may spawn
    if n is None:
        return
    if n < 1:
        raise LocFDAError("--threads must be at least 1")
    try:
        import numba

    except ImportError:
        return
    with warnings.catch_warnings():
        # the first call may probe threading layers and warn about them
        warnings.simplefilter("ignore")
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _curve(sample, cid: str) -> int:
    try:
        return sample.index_of(cid)
    except (KeyError, ValueError, LocFDAError):
        raise LocFDAError(f"no curve with id {cid!r}") from None


# ---------------------------------------------------------------------------
# subcommands; each returns (exit code, list of written files)
# ---------------------------------------------------------------------------


def _simulate(cfg: RunConfig, out: Path):
    p = cfg.params
    gen = dict(p.get("generator", {}))
    for key in ("kind", "n", "m", "grid_kind", "num_terms", "coeff_dist", "marginal"):
        if p.get(key) is not None:
            gen[key] = p[key]
    gen["seed"] = cfg.seed
    generator = GeneratorSpec.from_dict(gen)
    sample = generate(generator)

    cens_block = dict(p.get("censoring", {}))
    if p.get("censor") is not None:
        cens_block = {} if p["censor"] == "none" else {**cens_block, "kind": p["censor"]}
        if p["censor"] == "none":
            cens_block = None
    if cens_block is not None and p.get("block_fraction") is not None:
        cens_block["block_fraction_mean"] = p["block_fraction"]
    files = [out / "panel.csv", out / "config.json"]
    censoring = None
    if cens_block is not None and (cens_block or "censoring" in p):
        cens_block.setdefault("seed", derive_seed(cfg.seed, 1))
        censoring = CensoringSpec.from_dict(cens_block)
        rows = p.get("censor_rows")
        if rows in (None, "all"):
            rows = None
        elif isinstance(rows, str):
            rows = [int(r) for r in rows.split(",") if r.strip()]
        mask = censor((sample.n, sample.m), censoring, sample.grid, rows)
        write_mask(out / "mask.csv", sample, mask)
        files.append(out / "mask.csv")
    write_panel(out / "panel.csv", sample)
    (out / "config.json").write_text(specs_to_json(generator, censoring) + "\n")
    return EXIT_OK, files


def _require_complete(mask, what):
    if mask is not None and not mask.observed.all():
        raise LocFDAError(f"{what} needs a fully observed panel")


def _localize(cfg: RunConfig, out: Path):
    p = cfg.params
    sample, mask = load_panel(cfg.inputs["panel"])
    _require_complete(mask, "localize")
    if p.get("target") is None or p.get("k") is None:
        raise LocFDAError("localize needs --target and --k")
    target = _curve(sample, p["target"])
    donors = None
    if p.get("donors"):
        donors = [_curve(sample, d.strip()) for d in str(p["donors"]).split(",") if d.strip()]
    path = localization_path(sample, target, int(p["k"]), donors)
    summary = rescaled_width(path)
    factor = 2.0 * summary.n / summary.k
    rows = (
        (t, sample.ids[j], v, w, factor * w)
        for t, j, v, w in zip(sample.grid.points, path.donor_index, path.donor_value, path.width)
    )
    write_table(out / "path.csv", ["t", "donor_id", "donor_value", "width", "rescaled_width"], rows)
    write_json(
        out / "summary.json",
        {
            "target": sample.ids[target],
            "k": summary.k,
            "n": summary.n,
            "l1_mean_width": summary.l1_mean_width,
            "empirical_localization_distance": float(path.width.mean()),
        },
    )
    return EXIT_OK, [out / "path.csv", out / "summary.json"]


def _reconstruct(cfg: RunConfig, out: Path):
    p = cfg.params
    sample, blank_mask = load_panel(cfg.inputs["panel"])
    if "mask" in cfg.inputs:
        if blank_mask is not None:
            raise LocFDAError("give missing cells either as empty panel cells or as a mask file, not both")
        mask = load_mask(cfg.inputs["mask"], sample)
        have_truth = True  # panel still holds the values behind the mask
    elif blank_mask is not None:
        mask, have_truth = blank_mask, False
    else:
        mask, have_truth = ObservationMask.full(sample.n, sample.m), False

    partial = [i for i in range(sample.n) if not mask.observed[i].all()]
    target = p.get("target") or "all"
    targets = partial if target == "all" else [_curve(sample, target)]
    if not targets:
        raise LocFDAError("no partially observed curve to reconstruct")
    rmax = None if p.get("rmax") is None else int(p["rmax"])

    fitted = np.empty((len(targets), sample.m))
    reports = []
    for j, i in enumerate(targets):
        res = knn_reconstruct(
            sample, i, mask, p=int(p.get("p") or 2), r_max=rmax, truth=sample.values[i] if have_truth else None
        )
        fitted[j] = res.completed(sample)
        reports.append(
            {
                "id": sample.ids[i],
                "p": res.p_norm,
                "r": res.r,
                "neighbor_ids": [sample.ids[d] for d in res.neighbor_order[: res.r]],
                "neighbor_distances": res.distances[: res.r].tolist(),
                "weights": res.weights.tolist(),
                "observed_mse": res.observed_mse,
                "missing_mse": res.missing_mse,
                "observed_fraction": float(res.observed.mean()),
            }
        )
    ids = [sample.ids[i] for i in targets]
    write_table(out / "fitted.csv", ["t", *ids], ([t, *fitted[:, r]] for r, t in enumerate(sample.grid.points)))
    write_json(out / "report.json", reports)
    return EXIT_OK, [out / "fitted.csv", out / "report.json"]


def _classify(cfg: RunConfig, out: Path):
    p = cfg.params
    train, tmask = load_panel(cfg.inputs["train"])
    query, qmask = load_panel(cfg.inputs["query"])
    _require_complete(tmask, "classify")
    _require_complete(qmask, "classify")
    if not np.array_equal(train.grid.points, query.grid.points):
        raise LocFDAError("query and training panels must share the time grid")
    labels = load_labels(cfg.inputs["labels"], train)
    model = fit(train, labels, int(p.get("kmax") or 5))
    preds, probs = [], []
    for x in query.values:
        preds.append(predict(model, train, labels, x))
        probs.append(predict_proba(model, train, labels, x))
    write_labels(out / "labels.csv", query.ids, preds)
    header = ["id", *(f"p_{g}" for g in model.groups)]
    write_table(out / "probabilities.csv", header, ([cid, *map(float, pr)] for cid, pr in zip(query.ids, probs)))
    write_json(
        out / "model.json",
        {
            "groups": list(model.groups),
            "priors": model.priors.tolist(),
            "K": model.K,
            "k_max": model.k_max,
            "training_error": model.loo_error.tolist(),
            "trimmed_mean": model.mean.tolist(),
            "trimmed_sd": model.sd.tolist(),
        },
    )
    return EXIT_OK, [out / "labels.csv", out / "probabilities.csv", out / "model.json"]


def _outliers(cfg: RunConfig, out: Path):
    p = cfg.params
    sample, mask = load_panel(cfg.inputs["panel"])
    _require_complete(mask, "outliers")
    rep = detect_outliers(sample, int(p.get("k") or 1), conservative=bool(p.get("conservative")))
    flagged = set(rep.flagged.tolist())
    extreme = set(rep.extreme_flagged.tolist())
    write_table(
        out / "scores.csv",
        ["id", "score", "flagged", "extreme_flagged"],
        ([cid, float(s), int(i in flagged), int(i in extreme)] for i, (cid, s) in enumerate(zip(sample.ids, rep.scores))),
    )
    write_json(
        out / "report.json",
        {
            "k": rep.k,
            "conservative": rep.conservative,
            "q1": rep.q1,
            "q3": rep.q3,
            "iqr": rep.iqr,
            "whisker_default": rep.whisker_default,
            "whisker_extreme": rep.whisker_extreme,
            "flagged": [sample.ids[i] for i in rep.flagged],
            "extreme_flagged": [sample.ids[i] for i in rep.extreme_flagged],
            "outliers": [sample.ids[i] for i in rep.outliers],
            "scores": {cid: float(s) for cid, s in zip(sample.ids, rep.scores)},
        },
    )
    return EXIT_OK, [out / "scores.csv", out / "report.json"]


def _validate(cfg: RunConfig, out: Path):
    from .validation import run_suite

    reports = run_suite(cfg.params.get("suite") or "all", seed=cfg.seed, scale=float(cfg.params.get("scale") or 1.0))
    for r in reports:
        print(r.line())
    payload = [r.to_dict() for r in reports]
    for d in payload:
        d.pop("runtime_seconds", None)  # keeps the report byte-stable; timings go to the manifest
    write_json(out / "validation.json", payload)
    code = EXIT_CHECK if any(not r.passed and not r.skipped for r in reports) else EXIT_OK
    return code, [out / "validation.json"], {r.check_name: r.runtime_seconds for r in reports}


HANDLERS = {
    "simulate": _simulate,
    "localize": _localize,
    "reconstruct": _reconstruct,
    "classify": _classify,
    "outliers": _outliers,
    "validate": _validate,
}


def _error_payload(exc: BaseException, code: int) -> dict:
    return {"error": type(exc).__name__, "message": str(exc), "exit_code": code}


def run(cfg: RunConfig) -> int:
    """Dispatch one command, write its artifacts and a manifest; return the exit code."""
    out = Path(cfg.output_dir)
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat()
    try:
        out.mkdir(parents=True, exist_ok=True)
        _set_threads(cfg.threads)
        result = HANDLERS[cfg.command](cfg, out)
        code, files = result[0], result[1]
        timings = result[2] if len(result) > 2 else None
    except PanelFormatError as exc:
        return _fail(out, exc, EXIT_IO)
    except LocFDAError as exc:
        return _fail(out, exc, EXIT_USAGE)
    except OSError as exc:
        return _fail(out, exc, EXIT_IO)

    manifest = {
        "command": cfg.command,
        "params": cfg.params,
        "seed": cfg.seed,
        "threads": cfg.threads,
        "inputs": {role: {"path": str(pth), "sha256": _sha256(pth)} for role, pth in cfg.inputs.items()},
        "outputs": [f.name for f in files],
        "versions": _versions(),
        "numba_kernels": numba_enabled(),
        "started_at": stamp,
        "wall_time_seconds": time.perf_counter() - started,
        "exit_code": code,
    }
    if timings:
        manifest["check_runtimes_seconds"] = timings
    write_json(out / "manifest.json", manifest)
    return code


def _fail(out: Path, exc: BaseException, code: int) -> int:
    payload = _error_payload(exc, code)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_json(out / "error.json", payload)
    except OSError:
        pass
    print(json.dumps(payload), file=sys.stderr)
    return code


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default: $LOCFDA_OUTPUT_DIR or ./locfda_out)")
    common.add_argument("--seed", type=int, default=None, help="random seed for stochastic commands")
    common.add_argument("--threads", type=int, default=None, help="cap on worker threads")
    common.add_argument("--config", default=None, help="JSON file with a parameter block; flags override it")

    parser = argparse.ArgumentParser(prog="locfda", description="Localization processes for functional data.")
    parser.add_argument("--version", action="version", version=f"locfda {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    s = sub.add_parser("simulate", parents=[common], help="generate a synthetic panel (and mask)")
    s.add_argument("--kind", choices=["harmonic", "fourier", "pointwise_iid"])
    s.add_argument("--n", type=int)
    s.add_argument("--m", type=int)
    s.add_argument("--grid-kind", dest="grid_kind", choices=["equispaced", "iid_uniform_sorted"])
    s.add_argument("--num-terms", dest="num_terms", type=int)
    s.add_argument("--coeff-dist", dest="coeff_dist", help="e.g. 'uniform(-1,1)' or 'normal(0,1)'")
    s.add_argument("--marginal", help="pointwise_iid marginal, e.g. 'uniform01' or 'triangular'")
    s.add_argument("--censor", choices=["none", "two_uniform_interval", "consecutive_block"])
    s.add_argument("--block-fraction", dest="block_fraction", type=float)
    s.add_argument("--censor-rows", dest="censor_rows", help="'all' or comma-separated row indices")

    s = sub.add_parser("localize", parents=[common], help="localization path of one curve")
    s.add_argument("panel")
    s.add_argument("--k", type=int)
    s.add_argument("--target")
    s.add_argument("--donors", help="comma-separated donor ids (default: all other curves)")

    s = sub.add_parser("reconstruct", parents=[common], help="kNN completion of censored curves")
    s.add_argument("panel")
    s.add_argument("--mask", default=None)
    s.add_argument("--p", type=int, choices=[1, 2])
    s.add_argument("--rmax", type=int)
    s.add_argument("--target", help="curve id or 'all' (default)")

    s = sub.add_parser("classify", parents=[common], help="localization classifier")
    s.add_argument("--train", required=True)
    s.add_argument("--labels", required=True)
    s.add_argument("--query", required=True)
    s.add_argument("--kmax", type=int)

    s = sub.add_parser("outliers", parents=[common], help="boxplot outliers of localization distances")
    s.add_argument("panel")
    s.add_argument("--k", type=int)
    s.add_argument("--conservative", action="store_true", default=None)

    s = sub.add_parser("validate", parents=[common], help="Monte Carlo checks of the limit theory")
    s.add_argument("--suite", choices=["pointwise", "global", "clt", "marked", "all"])
    s.add_argument("--scale", type=float, help="multiplier on replicate counts (default 1)")
    return parser


INPUT_ARGS = {
    "localize": ("panel",),
    "reconstruct": ("panel", "mask"),
    "classify": ("train", "labels", "query"),
    "outliers": ("panel",),
}
DEFAULT_SEED = {"simulate": 0, "validate": 0}


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    params = {}
    if ns.config:
        params = json.loads(Path(ns.config).read_text())
        if not isinstance(params, dict):
            raise LocFDAError("--config must hold a JSON object")
    skip = {"command", "out", "seed", "threads", "config", *INPUT_ARGS.get(ns.command, ())}
    for key, value in vars(ns).items():
        if key not in skip and value is not None:
            params[key] = value
    inputs = {role: getattr(ns, role) for role in INPUT_ARGS.get(ns.command, ()) if getattr(ns, role) is not None}
    seed = ns.seed if ns.seed is not None else params.pop("seed", DEFAULT_SEED.get(ns.command))
    params.pop("seed", None)
    return RunConfig(
        command=ns.command,
        inputs=inputs,
        output_dir=ns.out or default_output_dir(),
        seed=seed,
        params=params,
        threads=ns.threads,
    )


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)  # exits 2 with usage on bad syntax
    out = Path(ns.out or default_output_dir())
    try:
        cfg = config_from_args(ns)
    except (FileNotFoundError, json.JSONDecodeError) as exc:
        return _fail(out, exc, EXIT_IO)
    except LocFDAError as exc:
        return _fail(out, exc, EXIT_USAGE)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
