"""Command-line entry points: ``sim``, ``fit``, ``report`` and ``score``.

Configuration is an INI file; every key is optional and defaults follow the
full-scale study design. Example::

    [sim]
    scenarios = 1, 4
    seeds = 0, 1, 2
    N = 10
    T = 400
    methods = dsp_mfsv_capm, ewma, dcc
    plot_seed = 0

    [mcmc]
    r = 3
    n_burn = 300
    n_retain = 600
    thin = 2

    [baselines]
    window = 60
    decay = 0.94
    threshold = 0.10
    bootstrap = yes
    bootstrap_B = 200
    bootstrap_block = 20

    [fit]
    panel = returns.csv
    market_column = market
    rf_column = rf
    kind = returns
    aux = vix.csv

Exit codes: 0 success, 1 at least one method failed (the run still
completes), 2 fatal error (bad configuration, unreadable input).
"""
from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from dspcorr import baselines, metrics, model, scenarios
from dspcorr.panel import PanelError, load_aux_csv, load_panel_csv
from dspcorr.score import CorrelationError, score, total_correlation

log = logging.getLogger("dspcorr")

MODEL_METHOD = "dsp_mfsv_capm"
METHODS = (MODEL_METHOD, "mfsv", "ewma", "ledoit_wolf", "dcc", "dcc_t", "adcc", "threshold")

EXIT_OK, EXIT_METHOD_FAILURE, EXIT_FATAL = 0, 1, 2


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class RunConfig:
    """Resolved settings for every subcommand."""

    scenarios: tuple = (1, 2, 3, 4, 5)
    seeds: tuple = tuple(range(100))
    N: int = 30
    T: int = 1000
    methods: tuple = METHODS
    plot_seed: int | None = None
    r: int = 3
    n_burn: int = 1500
    n_retain: int = 3000
    thin: int = 4
    window: int = 60
    decay: float = 0.94
    threshold: float = 0.10
    bootstrap: bool = True
    bootstrap_B: int = 200
    bootstrap_block: int = 20
    panel: str | None = None
    market_column: str = "market"
    rf_column: str | None = None
    rf_file: str | None = None
    rf_const: float | None = None
    kind: str = "returns"
    already_excess: bool = False
    aux: str | None = None
    aux_column: str | None = None
    fit_seed: int = 0
    out: str = "dspcorr-out"
    threads: int = 1

    def __post_init__(self):
        bad = [s for s in self.scenarios if s not in (1, 2, 3, 4, 5)]
        if bad:
            raise ConfigError(f"unknown scenario ids {bad}")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ConfigError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
        if self.N < 3 or self.T < max(self.window, 20):
            raise ConfigError("need N >= 3 and T >= max(window, 20)")
        if min(self.r, self.n_retain, self.thin, self.threads, self.bootstrap_B, self.bootstrap_block) < 1:
            raise ConfigError("r, n_retain, thin, threads, bootstrap_B and bootstrap_block must be positive")
        if self.n_burn < 0:
            raise ConfigError("n_burn must be non-negative")
        if not 0.0 < self.decay <= 1.0:
            raise ConfigError("decay must lie in (0, 1]")
        if self.kind not in ("returns", "prices"):
            raise ConfigError("kind must be 'returns' or 'prices'")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")

    def model_config(self, seed: int) -> model.ModelConfig:
        return model.ModelConfig(r=self.r, n_burn=self.n_burn, n_retain=self.n_retain, thin=self.thin, seed=seed)

    def canonical(self) -> str:
        """Stable text form used for the provenance hash (output location excluded)."""
        d = asdict(self)
        for k in ("out", "threads"):
            d.pop(k)
        return json.dumps(d, sort_keys=True, default=list)

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode("utf-8")).hexdigest()


def _int_list(text: str) -> tuple:
    out = []
    for part in text.replace(";", ",").split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            a, b = part.split("-", 1)
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return tuple(out)


_SECTIONS = {
    "sim": {"scenarios": _int_list, "seeds": _int_list, "N": int, "T": int,
            "methods": lambda s: tuple(m.strip() for m in s.split(",") if m.strip()),
            "plot_seed": int},
    "mcmc": {"r": int, "n_burn": int, "n_retain": int, "thin": int, "seed": int},
    "baselines": {"window": int, "decay": float, "threshold": float, "bootstrap": "bool",
                  "bootstrap_B": int, "bootstrap_block": int},
    "fit": {"panel": str, "market_column": str, "rf_column": str, "rf_file": str, "rf_const": float,
            "kind": str, "already_excess": "bool", "aux": str, "aux_column": str},
    "output": {"out": str, "threads": int},
}


def load_config(path: str | None) -> RunConfig:
    """Parse an INI file into a :class:`RunConfig` (``None`` gives the defaults)."""
    if path is None:
        return RunConfig()
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    kw = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        spec = _SECTIONS[section]
        for key, raw in parser.items(section):
            if key not in spec:
                raise ConfigError(f"{path}: unknown key '{key}' in [{section}]")
            if raw.strip() == "":
                continue
            conv = spec[key]
            try:
                value = parser.getboolean(section, key) if conv == "bool" else conv(raw)
            except ValueError as exc:
                raise ConfigError(f"{path}: bad value for {section}.{key}: {raw!r}") from exc
            kw["fit_seed" if (section, key) == ("mcmc", "seed") else key] = value
    return RunConfig(**kw)


# --------------------------------------------------------------------------- methods

def run_method(method: str, panel, cfg: RunConfig, seed: int):
    """Point score path with interval bounds (NaN where undefined) for one method."""
    if method == MODEL_METHOD:
        draws = model.fit(panel, cfg.model_config(seed))
        summ = draws.summary()
        return summ.mean, summ.hdi_lo, summ.hdi_hi
    if method == "mfsv":
        conf = baselines.MfsvBaselineConfig(r=cfg.r, n_burn=cfg.n_burn, n_retain=cfg.n_retain, thin=cfg.thin,
                                            seed=seed)
        p = baselines.mfsv_baseline(panel, conf)
        return p.score, p.lo, p.hi
    estimators = {
        "ewma": lambda q: baselines.ewma_corr(q, cfg.window, cfg.decay),
        "ledoit_wolf": lambda q: baselines.ledoit_wolf_corr(q, cfg.window),
        "threshold": lambda q: baselines.threshold_corr(q, cfg.window, cfg.threshold),
        "dcc": lambda q: baselines.dcc_fit(q, "gaussian"),
        "dcc_t": lambda q: baselines.dcc_fit(q, "student"),
        "adcc": lambda q: baselines.dcc_fit(q, "asymmetric"),
    }
    est = estimators[method]
    point = est(panel).score
    if not cfg.bootstrap:
        nan = np.full(panel.T, np.nan)
        return point, nan, nan.copy()
    lo, hi, dropped = baselines.block_bootstrap_intervals(panel, lambda q: est(q).score, B=cfg.bootstrap_B,
                                                          block=cfg.bootstrap_block, seed=seed)
    if dropped:
        log.warning("%s: %d bootstrap resamples dropped", method, dropped)
    return point, lo, hi


def _evaluate(method, data, point, lo, hi):
    has_int = np.all(np.isfinite(lo[59:])) and np.all(np.isfinite(hi[59:]))
    return metrics.evaluate(method, point, data.truth_score, data.breaks,
                            lo if has_int else None, hi if has_int else None)


def _sim_cell(args):
    cfg, sid, seed = args
    data = scenarios.generate(sid, seed, N=cfg.N, T=cfg.T)
    reports, paths, failures = [], {}, {}
    for method in cfg.methods:
        try:
            point, lo, hi = run_method(method, data.panel, cfg, seed)
            reports.append(_evaluate(method, data, point, lo, hi))
            paths[method] = (point, lo, hi)
        except (ValueError, np.linalg.LinAlgError, ArithmeticError) as exc:
            failures[method] = f"{type(exc).__name__}: {exc}"
    return sid, seed, data.truth_score, reports, paths, failures


def _fmt(v) -> str:
    return repr(float(v))


def _write_paths(path: Path, truth, paths: dict) -> None:
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["t", "truth"]
        for m in paths:
            header += [f"{m}_mean", f"{m}_lo", f"{m}_hi"]
        w.writerow(header)
        for t in range(len(truth)):
            row = [t + 1, _fmt(truth[t])]
            for point, lo, hi in paths.values():
                row += [_fmt(point[t]), _fmt(lo[t]), _fmt(hi[t])]
            w.writerow(row)


def write_config(cfg: RunConfig, path: Path) -> None:
    """Resolved configuration as JSON (re-read by ``report``)."""
    d = json.loads(cfg.canonical())
    d["config_hash"] = cfg.digest()
    path.write_text(json.dumps(d, indent=2, sort_keys=True), encoding="utf-8")


def cmd_sim(cfg: RunConfig) -> int:
    """Simulate, estimate and score every (scenario, seed, method) cell."""
    if not cfg.methods:
        raise ConfigError("no methods selected")
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "run_config.json")
    cells = [(cfg, sid, seed) for sid in cfg.scenarios for seed in cfg.seeds]
    if cfg.threads > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_sim_cell, cells))
    else:
        results = [_sim_cell(c) for c in cells]
    status = EXIT_OK
    by_scenario: dict[int, list] = {}
    for sid, seed, truth, reports, paths, failures in results:
        cell_dir = out / f"scenario{sid}" / f"seed{seed}"
        cell_dir.mkdir(parents=True, exist_ok=True)
        metrics.write_reports_csv(reports, cell_dir / "metrics.csv", {"scenario": sid, "seed": seed})
        _write_paths(cell_dir / "paths.csv", truth, paths)
        (cell_dir / "failures.json").write_text(json.dumps(failures, indent=2, sort_keys=True), encoding="utf-8")
        for m, msg in failures.items():
            log.error("scenario %d seed %d %s failed: %s", sid, seed, m, msg)
            status = EXIT_METHOD_FAILURE
        by_scenario.setdefault(sid, []).extend(reports)
    for sid, reports in by_scenario.items():
        metrics.write_reports_csv(metrics.average_reports(reports), out / f"scenario{sid}" / "table.csv",
                                  {"scenario": sid})
    return status


def _aligned_aux(dates, aux):
    pos = {d: i for i, d in enumerate(dates)}
    return [(pos[d], d, v) for d, v in zip(aux.dates, aux.values) if d in pos]


def cmd_fit(cfg: RunConfig) -> int:
    """Fit the model to a CSV panel and write draws, the score summary and an optional overlay."""
    if cfg.panel is None:
        raise ConfigError("fit needs [fit] panel = <csv path>")
    try:
        panel = load_panel_csv(cfg.panel, market_column=cfg.market_column, rf_column=cfg.rf_column,
                               rf_file=cfg.rf_file, rf_const=cfg.rf_const, kind=cfg.kind,
                               already_excess=cfg.already_excess)
    except (OSError, PanelError) as exc:
        raise ConfigError(f"{cfg.panel}: {exc}") from exc
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_config(cfg, out / "run_config.json")
    draws = model.fit(panel, cfg.model_config(cfg.fit_seed))
    draws.save(out / "draws.bin")
    summ = draws.summary()
    summ.to_csv(out / "score_summary.csv", panel.dates)
    if cfg.aux is not None:
        try:
            aux = load_aux_csv(cfg.aux, cfg.aux_column)
        except (OSError, PanelError) as exc:
            raise ConfigError(f"{cfg.aux}: {exc}") from exc
        rows = _aligned_aux(panel.dates, aux)
        with (out / "aux_overlay.csv").open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["date", "mean", "lo", "hi", "aux"])
            for i, d, v in rows:
                w.writerow([d, _fmt(summ.mean[i]), _fmt(summ.hdi_lo[i]), _fmt(summ.hdi_hi[i]), _fmt(v)])
    return EXIT_OK


def _json_number(v: float):
    if math.isnan(v):
        return None
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def cmd_report(cfg: RunConfig) -> int:
    """Merge per-scenario tables into ``report.json`` and emit plot data for one seed."""
    out = Path(cfg.out)
    cfg_path = out / "run_config.json"
    if not cfg_path.exists():
        raise ConfigError(f"{out}: no run_config.json; run 'sim' first")
    run = json.loads(cfg_path.read_text(encoding="utf-8"))
    if not run.get("methods"):
        raise ConfigError("run configuration has an empty method set")
    tables = {}
    for sid in run["scenarios"]:
        path = out / f"scenario{sid}" / "table.csv"
        if not path.exists():
            raise ConfigError(f"missing {path}")
        with path.open(encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        tables[str(sid)] = {row["method"]: {c: _json_number(float(row[c])) for c in (*metrics.TABLE_COLUMNS, "mae")}
                            for row in rows}
    seed = cfg.plot_seed if cfg.plot_seed is not None else run["seeds"][0]
    if seed not in run["seeds"]:
        raise ConfigError(f"plot seed {seed} is not among the run's seeds")
    plots = {}
    for sid in run["scenarios"]:
        src = out / f"scenario{sid}" / f"seed{seed}" / "paths.csv"
        if not src.exists():
            raise ConfigError(f"missing {src}")
        dst = out / f"plot_scenario{sid}_seed{seed}.csv"
        dst.write_bytes(src.read_bytes())
        plots[str(sid)] = dst.name
    report = {"config_hash": run["config_hash"], "columns": list(metrics.TABLE_COLUMNS), "tables": tables,
              "plot_seed": seed, "plot_data": plots}
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True), encoding="utf-8")
    return EXIT_OK


def read_matrix_csv(path) -> np.ndarray:
    """Square numeric matrix from CSV; a header row and a label column are skipped if present."""
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows:
        raise ValueError(f"{path}: empty file")

    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    if not all(numeric(c) for c in rows[0]):
        rows = rows[1:]
    if rows and not numeric(rows[0][0]):
        rows = [r[1:] for r in rows]
    try:
        return np.array([[float(c) for c in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cell ({exc})") from exc


def cmd_score(path: str) -> int:
    R = read_matrix_csv(path)
    print(f"score {score(R)!r}")
    print(f"total_correlation {total_correlation(R)!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dspcorr", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("sim", "simulation study"), ("fit", "fit the model to a CSV panel"),
                           ("report", "merge simulation results")):
        s = sub.add_parser(name, help=helptext)
        s.add_argument("--config", help="INI configuration file")
        s.add_argument("--seed", type=int, action="append",
                       help="seed override (repeatable for sim; MCMC seed for fit; plot seed for report)")
        s.add_argument("--out", help="output directory")
        s.add_argument("--threads", type=int, help="worker processes for sim")
        if name == "fit":
            s.add_argument("--panel", help="panel CSV (overrides [fit] panel)")
            s.add_argument("--aux", help="auxiliary series CSV (overrides [fit] aux)")
    s = sub.add_parser("score", help="score of a correlation matrix CSV")
    s.add_argument("matrix")
    return p


def _resolve(args) -> RunConfig:
    cfg = load_config(args.config)
    changes = {}
    if args.out:
        changes["out"] = args.out
    if args.threads:
        changes["threads"] = args.threads
    if args.seed:
        if args.command == "sim":
            changes["seeds"] = tuple(args.seed)
        elif args.command == "fit":
            changes["fit_seed"] = args.seed[0]
        else:
            changes["plot_seed"] = args.seed[0]
    if args.command == "fit":
        if args.panel:
            changes["panel"] = args.panel
        if args.aux:
            changes["aux"] = args.aux
    return replace(cfg, **changes) if changes else cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "score":
            return cmd_score(args.matrix)
        cfg = _resolve(args)
        return {"sim": cmd_sim, "fit": cmd_fit, "report": cmd_report}[args.command](cfg)
    except (ConfigError, CorrelationError, OSError, ValueError) as exc:
        print(f"dspcorr: error: {exc}", file=sys.stderr)
        return EXIT_FATAL


if __name__ == "__main__":
    sys.exit(main())
