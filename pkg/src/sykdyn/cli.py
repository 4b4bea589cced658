"""Command-line front end: every run writes CSVs plus a JSON manifest into a fresh directory.

Exit codes: 0 success, 1 validation failure, 2 bad configuration, 3 resource cap.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import json
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .cumulant import (EIGEN_CSV_HEADER, MAGNITUDE_CSV_HEADER, CumulantEigenvalue, default_source,
                       lambda_analytic, lambda_numeric, magnitude_table, reconstruct_observable,
                       separation_report)
from .cumulant.eigen import CLOSED_FORMS
from .errors import DegenerateSectorError, MissingEigenvalueError, ResourceCapError, SectorError
from .evolution import QuenchParams, disorder_average_dynamics, initial_state, observable_operator, time_grid
from .fock import DEFAULT_ED_CAP, build_sector
from .opsize import growth_profile

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_CAP = 0, 1, 2, 3
COMMANDS = ("ed-quench", "size-dynamics", "cumulant-compare", "validate", "magnitudes")
VALIDATE_TOL = 1e-9
VALIDATE_SIZES = (4, 6, 8)
_OBSERVABLE = re.compile(r"^(R|R2|identity|n\d+)$")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    N: int = 8
    Q: int | None = None
    q: int = 4
    J: float = 1.0
    samples: int = 2000
    master_seed: int = 0
    t_max: float = 3.0
    dt: float = 0.05
    truncation: int = 4
    observable: str = "R"
    initial_state: str = "neel"
    threads: int = 1
    out_dir: str = "runs"
    n_range: tuple = (4, 14)
    mc_max_n: int = 10
    quiet: bool = False

    def __post_init__(self):
        if self.Q is None:
            self.Q = self.N // 2

    def validate(self) -> None:
        """Check preconditions; raise ``ConfigError`` or ``ResourceCapError``."""
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if self.N < 1:
            raise ConfigError("N must be positive")
        if not 0 <= self.Q <= self.N:
            raise ConfigError(f"charge Q={self.Q} outside [0, {self.N}]")
        if self.q < 2 or self.q % 2 or self.q // 2 > self.N:
            raise ConfigError(f"q must be even with 2 <= q <= 2N, got {self.q}")
        if not self.J > 0:
            raise ConfigError("coupling J must be positive")
        if self.samples < 2:
            raise ConfigError("samples must be at least 2")
        if not (self.t_max > 0 and self.dt > 0 and self.dt <= self.t_max):
            raise ConfigError("need 0 < dt <= t_max")
        if self.truncation not in (2, 4, 6):
            raise ConfigError("order must be 2, 4 or 6")
        if not _OBSERVABLE.match(self.observable):
            raise ConfigError(f"unknown observable {self.observable!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        lo, hi = self.n_range
        if lo > hi or lo < 2:
            raise ConfigError(f"bad N range {self.n_range}")
        if self.command in ("ed-quench", "size-dynamics", "cumulant-compare"):
            if self.N > DEFAULT_ED_CAP:
                raise ResourceCapError(f"N={self.N} exceeds the exact-diagonalisation cap N={DEFAULT_ED_CAP}")
            try:
                initial_state(self.initial_state, build_sector(self.N, self.Q))
            except (ValueError, SectorError) as exc:
                raise ConfigError(f"initial state {self.initial_state!r}: {exc}") from exc

    @property
    def times(self) -> np.ndarray:
        return time_grid(self.t_max, self.dt)

    def quench_params(self, observable: str | None = None) -> QuenchParams:
        return QuenchParams(N=self.N, Q=self.Q, q=self.q, J=self.J, samples=self.samples,
                            master_seed=self.master_seed, times=self.times,
                            observable=observable or self.observable,
                            initial_state=self.initial_state, threads=self.threads)

    def manifest(self) -> dict:
        return {"command": self.command, "N": self.N, "Q": self.Q, "q": self.q, "J": self.J,
                "master_seed": self.master_seed, "samples": self.samples, "t_max": self.t_max,
                "dt": self.dt, "truncation": self.truncation, "observable": self.observable,
                "initial_state": self.initial_state, "threads": self.threads,
                "n_range": list(self.n_range), "mc_max_n": self.mc_max_n,
                "code_version": __version__}


# flag name -> RunConfig field; config files may use either spelling
_ALIASES = {"n": "N", "charge": "Q", "coupling": "J", "seed": "master_seed", "tmax": "t_max",
            "order": "truncation", "out": "out_dir", "initial": "initial_state"}
_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}
# keys a manifest carries besides parameters, so a manifest can be fed back as a config
_MANIFEST_ONLY = {"code_version", "files", "notices", "max_abs_coefficient", "max_abs_deviation",
                  "passed", "monotone_decrease", "non_monotone_N"}


def _normalise_keys(d: dict, origin: str) -> dict:
    out = {}
    for k, v in d.items():
        key = _ALIASES.get(k.replace("-", "_"), k.replace("-", "_"))
        if key not in _FIELDS or key == "command":
            raise ConfigError(f"unknown key {k!r} in {origin}")
        out[key] = tuple(v) if key == "n_range" else v
    return out


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sykdyn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="JSON file with run parameters")
        s.add_argument("--n", type=int)
        s.add_argument("--charge", type=int)
        s.add_argument("--q", type=int)
        s.add_argument("--coupling", type=float)
        s.add_argument("--samples", type=int)
        s.add_argument("--seed", type=int)
        s.add_argument("--tmax", type=float)
        s.add_argument("--dt", type=float)
        s.add_argument("--order", type=int)
        s.add_argument("--observable")
        s.add_argument("--initial", help="'neel' or 'fock:<bitmask>'")
        s.add_argument("--threads", type=int)
        s.add_argument("--out")
        s.add_argument("--n-range", type=int, nargs=2, metavar=("NMIN", "NMAX"))
        s.add_argument("--mc-max-n", type=int)
        s.add_argument("--quiet", action="store_true", default=None)
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, overridden by the config file, overridden by explicit flags."""
    values: dict = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        data.pop("command", None)
        for k in _MANIFEST_ONLY:
            data.pop(k, None)
        values.update(_normalise_keys(data, str(args.config)))
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config") and v is not None}
    values.update(_normalise_keys(flags, "flags"))
    try:
        cfg = RunConfig(command=args.command, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    cfg.validate()
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    stamp = _dt.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
    d = Path(cfg.out_dir) / f"{cfg.command}-{stamp}"
    d.mkdir(parents=True, exist_ok=False)
    return d


def _write_manifest(d: Path, cfg: RunConfig, extra: dict | None = None) -> Path:
    m = cfg.manifest()
    m.update(extra or {})
    p = d / "manifest.json"
    p.write_text(json.dumps(m, indent=2, sort_keys=True) + "\n")
    return p


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _progress(cfg):
    if cfg.quiet:
        return None
    done = [0]

    def report(n):
        done[0] += n
        print(f"\r{done[0]}/{cfg.samples} samples", end="", file=sys.stderr, flush=True)
        if done[0] >= cfg.samples:
            print(file=sys.stderr)
    return report


# -- commands -------------------------------------------------------------------------

def cmd_ed_quench(cfg: RunConfig) -> int:
    trace = disorder_average_dynamics(cfg.quench_params(), progress=not cfg.quiet)
    d = _out_dir(cfg)
    trace.to_csv(d / f"trace_{cfg.observable}.csv")
    _write_manifest(d, cfg, {"files": [f"trace_{cfg.observable}.csv"]})
    print(d)
    return EXIT_OK


def cmd_size_dynamics(cfg: RunConfig) -> int:
    prof = growth_profile(cfg.quench_params(), progress=_progress(cfg))
    d = _out_dir(cfg)
    files = [p.name for p in prof.write_csvs(d)]
    _write_manifest(d, cfg, {"files": files,
                             "max_abs_coefficient": {e.slug: float(v) for e, v in
                                                     zip(prof.elements, prof.max_abs)}})
    print(d)
    return EXIT_OK


ORDER6_REL_STDERR = 0.10


def cmd_cumulant_compare(cfg: RunConfig) -> int:
    basis = build_sector(cfg.N, cfg.Q)
    psi0 = initial_state(cfg.initial_state, basis)
    source = default_source(mc_samples=cfg.samples, master_seed=cfg.master_seed, q=cfg.q,
                            threads=cfg.threads)
    d = _out_dir(cfg)
    files, notices, eig_rows = [], [], {}
    for obs in ("R", "R2"):
        trace = disorder_average_dynamics(cfg.quench_params(obs), progress=not cfg.quiet)
        name = f"ed_{obs}.csv"
        trace.to_csv(d / name)
        files.append(name)
        W = observable_operator(obs, basis)
        for K in (2, 4, 6):
            try:
                rec = reconstruct_observable(W, psi0, K, source=source, J=cfg.J)
            except MissingEigenvalueError as exc:
                notices.append(f"{obs} order {K} omitted: {exc}")
                continue
            top = [df.eigenvalues[-1] for _, df in rec.components.values() if df.eigenvalues]
            noisy = [e for e in top if e.method == "monte-carlo" and e.stderr >= ORDER6_REL_STDERR * abs(e.value)]
            if noisy:
                notices.append(f"{obs} order {K}: Monte Carlo eigenvalue stderr >= "
                               f"{ORDER6_REL_STDERR:.0%} of its magnitude; curve written but flagged")
            for _, df in rec.components.values():
                for e in df.eigenvalues:
                    if e.size.m or e.size.n:
                        eig_rows[(e.order, e.size.m, e.size.n)] = e.row()
            name = f"cumulant_{obs}_order{K}.csv"
            rec.to_csv(d / name, trace.times)
            files.append(name)
    _write_rows(d / "eigenvalues.csv", EIGEN_CSV_HEADER, [eig_rows[k] for k in sorted(eig_rows)])
    files.append("eigenvalues.csv")
    _write_manifest(d, cfg, {"files": files, "notices": notices})
    for n in notices:
        print("notice:", n, file=sys.stderr)
    print(d)
    return EXIT_OK


def validation_rows(sizes=VALIDATE_SIZES):
    """Closed form vs enumeration on every admissible ``(N, Q)``; rows plus the max deviation."""
    rows, worst = [], 0.0
    for (order, (m, n)) in sorted(CLOSED_FORMS):
        for N in sizes:
            for Q in range(N + 1):
                try:
                    num = lambda_numeric(order, (m, n), N, Q, "exact-enumeration")
                except DegenerateSectorError:
                    continue
                ana = lambda_analytic(order, (m, n), N, Q)
                dev = abs(ana.value - num.value)
                worst = max(worst, dev)
                rows.append([order, m, n, N, Q, f"{ana.value:.17g}", f"{num.value:.17g}", f"{dev:.3g}"])
    return rows, worst


def cmd_validate(cfg: RunConfig) -> int:
    rows, worst = validation_rows()
    d = _out_dir(cfg)
    header = ["order", "m", "n", "N", "Q", "analytic", "enumeration", "abs_dev"]
    _write_rows(d / "validation.csv", header, rows)
    ok = worst <= VALIDATE_TOL
    _write_manifest(d, cfg, {"files": ["validation.csv"], "max_abs_deviation": worst, "passed": ok})
    for r in rows:
        print(" ".join(map(str, r)))
    print(f"max |analytic - enumeration| = {worst:.3g} over {len(rows)} points: {'PASS' if ok else 'FAIL'}")
    print(d)
    return EXIT_OK if ok else EXIT_VALIDATION


def cmd_magnitudes(cfg: RunConfig) -> int:
    lo, hi = cfg.n_range
    Ns = [N for N in range(lo, hi + 1) if N % 2 == 0]
    notes: list = []
    rows = magnitude_table(Ns, (2, 4, 6), mc_samples=cfg.samples, mc_max_n=cfg.mc_max_n,
                           master_seed=cfg.master_seed, threads=cfg.threads, notes=notes)
    d = _out_dir(cfg)
    _write_rows(d / "magnitudes.csv", MAGNITUDE_CSV_HEADER, [r.row() for r in rows])
    sep = separation_report(rows)
    flagged = [N for N, ok in sep.items() if ok is False]
    _write_manifest(d, cfg, {"files": ["magnitudes.csv"], "notices": notes,
                             "monotone_decrease": {str(k): v for k, v in sep.items()},
                             "non_monotone_N": flagged})
    for r in rows:
        print(" ".join(map(str, r.row())))
    if flagged:
        print(f"magnitudes not decreasing with order at N={flagged}")
    print(d)
    return EXIT_OK


HANDLERS = {"ed-quench": cmd_ed_quench, "size-dynamics": cmd_size_dynamics,
            "cumulant-compare": cmd_cumulant_compare, "validate": cmd_validate,
            "magnitudes": cmd_magnitudes}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        return HANDLERS[cfg.command](cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_CAP


if __name__ == "__main__":
    sys.exit(main())
