"""Experiment orchestration CLI.

Subcommands: oracle, ground-state, landscape, concentrate, verify, all.
Every run takes a declarative TOML config, writes machine-readable artifacts
(CSV/JSON plus field snapshots) into the output directory, and finishes with
a manifest listing every artifact with a checksum. Identical config and seed
produce bit-identical CSV artifacts.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import platform
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, backend
from .config import ExperimentConfig, load_config
from .errors import (AdmissibilityError, CnlsError, ConfigurationError)
from .landscape import check_interior_min, scan_landscape
from .limit import LimitProblem, default_grid, minimize_nehari
from .epssolver import concentration_series
from .shooting import oracle_state
from .snapshots import export_csv, snapshot_pair, load_pair
from .verify import decay_profile_rows, run_battery

log = logging.getLogger("cnls")


# ---------------------------------------------------------------------------
# artifact plumbing
# ---------------------------------------------------------------------------

class ArtifactSink:
    """Collects artifact paths and writes the closing manifest."""

    def __init__(self, out_dir: Path, subcommand: str, cfg: ExperimentConfig):
        self.out_dir = out_dir
        self.subcommand = subcommand
        self.cfg = cfg
        self.paths: list[Path] = []
        self.runtimes: dict[str, float] = {}
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "cache").mkdir(exist_ok=True)

    def add(self, path: Path) -> Path:
        self.paths.append(Path(path))
        return Path(path)

    def json(self, name: str, payload: dict) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return self.add(path)

    def csv(self, name: str, header: list[str], rows) -> Path:
        path = self.out_dir / name
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_csv_cell(c) for c in row) + "\n")
        return self.add(path)

    def finish(self) -> Path:
        manifest = {
            "subcommand": self.subcommand,
            "config": self.cfg.echo(),
            "versions": {
                "package": __version__,
                "kernel_backend": backend(),
                "python": platform.python_version(),
                "numpy": np.__version__,
            },
            "runtimes_s": self.runtimes,
            "artifacts": [
                {"path": p.name, "bytes": p.stat().st_size,
                 "sha256": _sha256(p)}
                for p in sorted(self.paths, key=lambda q: q.name)
            ],
        }
        path = self.out_dir / "manifest.json"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return path


def _csv_cell(c) -> str:
    if isinstance(c, float):
        return format(c, ".17g")
    return str(c)


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _cache_path(out_dir: Path, kind: str, payload: dict) -> Path:
    key = hashlib.sha256(
        json.dumps({"kind": kind, **payload}, sort_keys=True).encode()
    ).hexdigest()[:24]
    return out_dir / "cache" / f"{kind}_{key}.json"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_oracle(cfg: ExperimentConfig, sink: ArtifactSink,
               coeff: float = 1.0, mu: float = 1.0) -> dict:
    t0 = time.perf_counter()
    cache = _cache_path(sink.out_dir, "oracle",
                        {"coeff": round(coeff, 12), "mu": round(mu, 12)})
    if cache.exists():
        with open(cache, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
        payload["from_cache"] = True
    else:
        payload = oracle_state(coeff, mu)
        with open(cache, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")
        payload["from_cache"] = False
    sink.add(cache)
    sink.json("oracle.json", payload)
    sink.runtimes["oracle"] = time.perf_counter() - t0
    return payload


def cmd_ground_state(cfg: ExperimentConfig, sink: ArtifactSink,
                     a_val: float | None = None,
                     b_val: float | None = None) -> dict:
    t0 = time.perf_counter()
    if a_val is None or b_val is None:
        av, bv = cfg.potentials.evaluate(np.zeros((1, 3)))
        a_val = float(av[0]) if a_val is None else a_val
        b_val = float(bv[0]) if b_val is None else b_val
    grid = default_grid(a_val, b_val, cfg.limit_n, cfg.limit_r_base)
    problem = LimitProblem(a_val, b_val, cfg.couplings, grid)
    gs = minimize_nehari(problem, tol=cfg.solver_tol)
    meta = gs.summary()
    snap = sink.out_dir / "ground_state.fsnap"
    snapshot_pair(snap, gs.fields, meta=meta)
    sink.add(snap)
    export_csv(sink.out_dir / "ground_state.csv", grid,
               {"u": gs.fields.u.values, "v": gs.fields.v.values})
    sink.add(sink.out_dir / "ground_state.csv")
    sink.json("ground_state.json", meta)
    sink.runtimes["ground_state"] = time.perf_counter() - t0
    return meta


def cmd_landscape(cfg: ExperimentConfig, sink: ArtifactSink):
    t0 = time.perf_counter()
    lmap = scan_landscape(cfg.domain, cfg.potentials, cfg.couplings,
                          spacing=cfg.spacing(), grid_n=cfg.landscape_n,
                          workers=cfg.workers, beta0=cfg.beta0)
    verdict = check_interior_min(lmap, cfg.potentials)
    rows = [(p[0], p[1], p[2], a, b, m)
            for p, a, b, m in zip(lmap.points, lmap.a_vals, lmap.b_vals,
                                  lmap.energies)]
    sink.csv("landscape.csv", ["px", "py", "pz", "aP", "bP", "m"], rows)
    sink.json("landscape.json", lmap.summary() | {"verdict": verdict})
    sink.runtimes["landscape"] = time.perf_counter() - t0
    return lmap


class _MinSetShim:
    """Just enough of a landscape map to drive the concentration series,
    reloaded from landscape.json."""

    def __init__(self, payload: dict):
        self.m0 = float(payload["m0"])
        self.minimizing_set = np.asarray(payload["minimizing_set"], dtype=float)
        self.spacing = float(payload["spacing"])

    def nearest_minimizer(self, point):
        d = np.linalg.norm(self.minimizing_set - np.asarray(point), axis=1)
        return self.minimizing_set[int(np.argmin(d))]

    def dist_to_minimizing_set(self, point):
        return float(np.linalg.norm(self.minimizing_set - np.asarray(point),
                                    axis=1).min())


def _load_or_scan_landscape(cfg: ExperimentConfig, sink: ArtifactSink):
    path = sink.out_dir / "landscape.json"
    if path.exists():
        with open(path, "r", encoding="utf-8") as fh:
            return _MinSetShim(json.load(fh))
    return cmd_landscape(cfg, sink)


def cmd_concentrate(cfg: ExperimentConfig, sink: ArtifactSink) -> list[dict]:
    t0 = time.perf_counter()
    lmap = _load_or_scan_landscape(cfg, sink)
    rows = concentration_series(cfg.potentials, cfg.domain, cfg.couplings,
                                cfg.eps_ladder, lmap, h=cfg.eps_h,
                                tol=cfg.solver_tol)
    csv_rows = []
    for row in rows:
        if row["failed"]:
            csv_rows.append((row["eps"], "nan", "nan", "nan", "nan", "nan",
                             "nan", "nan", "nan", "failed"))
            continue
        x = row["x_phys"]
        csv_rows.append((row["eps"], row["level"], x[0], x[1], x[2],
                         row["dist_to_min_set"], row["level_gap"],
                         row["profile_error"], row["peak_value"],
                         row["truncation_fraction"]))
        sol = row["solution"]
        snap = sink.out_dir / f"eps_{row['eps']:.4f}.fsnap"
        snapshot_pair(snap, sol.fields, meta=sol.summary())
        sink.add(snap)
    sink.csv("eps_series.csv",
             ["eps", "level", "xt_x", "xt_y", "xt_z", "dist_to_min_set",
              "level_gap", "profile_error", "peak_value",
              "truncation_fraction"],
             csv_rows)
    sink.json("eps_series.json", {
        "rows": [{k: v for k, v in r.items() if k != "solution"}
                 for r in rows]})
    sink.runtimes["concentrate"] = time.perf_counter() - t0
    return rows


def _reload_solutions(cfg: ExperimentConfig, sink: ArtifactSink):
    """Rebuild ladder solutions from stored snapshots for the battery."""
    from .epssolver import EpsSolution, build_eps_problem

    sols = []
    for path in sorted(sink.out_dir.glob("eps_*.fsnap")):
        pair, meta = load_pair(path)
        eps = float(meta["eps"])
        p = build_eps_problem(cfg.potentials, cfg.domain, cfg.couplings, eps,
                              h=cfg.eps_h)
        if p.grid.n != pair.grid.n:
            raise ConfigurationError(
                f"snapshot {path.name} does not match the configured grids")
        sols.append(EpsSolution(
            fields=pair, level=float(meta["level"]),
            x_eps=np.asarray(meta["x_eps"], dtype=float),
            peak_value=float(meta["peak_value"]),
            peak_floor=float(meta["peak_floor"]),
            truncation_active_fraction=float(meta["truncation_active_fraction"]),
            truncation_max_ratio=float(meta["truncation_max_ratio"]),
            residual=float(meta["residual"]),
            fiber_at_solution=float(meta["fiber_at_solution"]),
            hardy_margin=float(meta["hardy_margin"]),
            penalty_balance_ok=bool(meta["penalty_balance_ok"]),
            problem=p, warnings=list(meta.get("warnings", []))))
    if not sols:
        raise ConfigurationError(
            "no stored ladder solutions found; run `concentrate` first")
    return sols


def cmd_verify(cfg: ExperimentConfig, sink: ArtifactSink,
               solutions=None) -> dict:
    t0 = time.perf_counter()
    if solutions is None:
        solutions = _reload_solutions(cfg, sink)
    report = run_battery(solutions, cfg.domain)
    sink.json("verify_report.json", report)
    smallest = min(solutions, key=lambda s: s.problem.eps)
    from .verify import DecayFit
    band = DecayFit(tier="band_exp", rate=report["band"]["rate"],
                    prefactor=report["band"]["prefactor"],
                    window=tuple(report["band"]["window"]),
                    r_squared=report["band"]["r_squared"],
                    violations=report["band"]["violations"])
    rows = decay_profile_rows(smallest, band, alpha=1.0)
    sink.csv("decay_profile.csv", ["distance", "omega", "envelope"], rows)
    sink.runtimes["verify"] = time.perf_counter() - t0
    return report


def cmd_all(cfg: ExperimentConfig, sink: ArtifactSink) -> dict:
    """Full pipeline in dependency order: the unit oracle feeds the
    landscape, the landscape feeds the concentration ladder, and the ladder
    feeds the decay battery."""
    cmd_oracle(cfg, sink)
    cmd_ground_state(cfg, sink)
    cmd_landscape(cfg, sink)
    rows = cmd_concentrate(cfg, sink)
    sols = [r["solution"] for r in rows if not r["failed"]]
    if not sols:
        raise CnlsError("every ladder entry failed; nothing to verify")
    report = cmd_verify(cfg, sink, solutions=sols)
    return report


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cnls",
        description="Coupled cubic Schrodinger systems: ground states, "
                    "energy landscape, semiclassical concentration, and the "
                    "decay verification battery.")
    ap.add_argument("subcommand",
                    choices=["oracle", "ground-state", "landscape",
                             "concentrate", "verify", "all"])
    ap.add_argument("--config", required=True, help="TOML experiment config")
    ap.add_argument("--out", default=None, help="output directory override")
    ap.add_argument("--workers", type=int, default=None,
                    help="worker pool size override")
    ap.add_argument("--log-level", default="INFO")
    ap.add_argument("--a-val", type=float, default=None,
                    help="frozen first coefficient (ground-state)")
    ap.add_argument("--b-val", type=float, default=None,
                    help="frozen second coefficient (ground-state)")
    ap.add_argument("--coeff", type=float, default=1.0,
                    help="scalar coefficient (oracle)")
    ap.add_argument("--mu", type=float, default=1.0,
                    help="scalar self-interaction (oracle)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level.upper(), logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.out is not None:
            cfg.out_dir = args.out
        env_workers = os.environ.get("CNLS_WORKERS")
        if args.workers is not None:
            cfg.workers = args.workers
        elif env_workers:
            cfg.workers = int(env_workers)
        sink = ArtifactSink(Path(cfg.out_dir), args.subcommand, cfg)
        if args.subcommand == "oracle":
            cmd_oracle(cfg, sink, coeff=args.coeff, mu=args.mu)
        elif args.subcommand == "ground-state":
            cmd_ground_state(cfg, sink, a_val=args.a_val, b_val=args.b_val)
        elif args.subcommand == "landscape":
            cmd_landscape(cfg, sink)
        elif args.subcommand == "concentrate":
            cmd_concentrate(cfg, sink)
        elif args.subcommand == "verify":
            cmd_verify(cfg, sink)
        elif args.subcommand == "all":
            cmd_all(cfg, sink)
        sink.finish()
        return 0
    except (ConfigurationError, AdmissibilityError) as exc:
        _emit_error(exc, code=2)
        return 2
    except CnlsError as exc:
        _emit_error(exc, code=1)
        return 1


def _emit_error(exc: Exception, code: int) -> None:
    payload = {"error": type(exc).__name__, "message": str(exc), "exit": code}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
