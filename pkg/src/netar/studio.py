"""Monte Carlo harness, panel/network file IO and result reporting.

A study is a list of scenarios; each scenario fixes a network (drawn once
from its seed unless redraw_network is set), simulates S panels from its
data-generating model, fits the linear null and applies the configured
linearity test, then tabulates rejection rates per significance level
with their binomial Monte Carlo standard errors.  Replication r of
scenario s draws every random quantity from a stream keyed by
(base_seed, s, r), so results are independent of execution order and of
the worker-pool size.
"""

from __future__ import annotations

import csv
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import __version__ as _version
from . import rng
from .dgp import CopulaSpec, Panel, SimConfig, simulate_count, simulate_gaussian
from .lintest import lm_test
from .model import ModelSpec
from .netgraph import Network, gen_er, gen_sbm, load_edges
from .nuisance import GammaGrid, default_grid, run_profile_test

__all__ = [
    "Scenario",
    "StudyConfig",
    "StudyRow",
    "run_mc_study",
    "load_panel_csv",
    "save_panel_csv",
    "load_network",
    "emit_report",
    "write_raw_draws",
]


@dataclass
class Scenario:
    """One Monte Carlo cell: network, DGP, test method and replication count."""

    name: str
    network: dict                  # {"model": "sbm"|"er", "k": int, "p": float|None}
    n: int
    t: int
    domain: str                    # "count" | "cont"
    dgp_family: str = "linear"     # data-generating family
    theta: tuple = (1.5, 0.4, 0.5)
    theta2: tuple = ()             # nonlinear DGP parameters (power studies)
    copula: dict = field(default_factory=lambda: {"structure": "identity", "rho": 0.0})
    sigma: float = 1.0
    burn_in: int = 300
    init: str = "default"          # continuous panels: see simulate_gaussian
    test: dict = field(default_factory=lambda: {"kind": "chi2"})
    reps: int = 500
    levels: tuple = (0.10, 0.05, 0.01)
    redraw_network: bool = False

    @staticmethod
    def from_dict(d: dict) -> "Scenario":
        known = {f for f in Scenario.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown scenario fields: {sorted(extra)}")
        d = dict(d)
        for key in ("theta", "theta2", "levels"):
            if key in d:
                d[key] = tuple(d[key])
        return Scenario(**d)


@dataclass
class StudyConfig:
    scenarios: list
    base_seed: int = 0

    @staticmethod
    def from_dict(d: dict) -> "StudyConfig":
        return StudyConfig(
            scenarios=[Scenario.from_dict(s) for s in d["scenarios"]],
            base_seed=int(d.get("base_seed", 0)))

    @staticmethod
    def from_json(path) -> "StudyConfig":
        with open(path) as fh:
            return StudyConfig.from_dict(json.load(fh))


@dataclass
class StudyRow:
    scenario: str
    level: float
    rejection_rate: float
    mc_se: float
    reps_used: int
    failures: int
    elapsed: float


def _dgp_spec(sc: Scenario) -> ModelSpec:
    fam = sc.dgp_family
    if fam == "linear":
        return ModelSpec.linear(sc.theta, sc.domain)
    if fam == "drift":
        return ModelSpec.drift(sc.theta, sc.theta2[0], sc.domain)
    if fam == "stnar":
        return ModelSpec.stnar(sc.theta, sc.theta2[0], sc.theta2[1], sc.domain)
    if fam == "tnar":
        return ModelSpec.tnar(sc.theta, sc.theta2[:3], sc.theta2[3], sc.domain)
    raise ValueError(f"unknown DGP family {fam!r}")


def _scenario_network(sc: Scenario, base_seed: int, s_idx: int, rep: int) -> Network:
    tag = rep if sc.redraw_network else 0
    seed = rng.mix_seed(base_seed, s_idx, 0xAE, tag)
    model = sc.network.get("model", "sbm")
    if model == "sbm":
        return gen_sbm(sc.n, int(sc.network.get("k", 2)), seed)
    if model == "er":
        return gen_er(sc.n, sc.network.get("p"), seed)
    raise ValueError(f"unknown network model {model!r}")


def _simulate(sc: Scenario, spec: ModelSpec, net: Network, seed: int) -> Panel:
    if sc.domain == "count":
        cop = CopulaSpec(sc.copula.get("structure", "identity"),
                         float(sc.copula.get("rho", 0.0)))
        cfg = SimConfig(T=sc.t, burn_in=sc.burn_in, seed=seed, init=sc.init)
        return simulate_count(spec, net, cop, cfg)
    cfg = SimConfig(T=sc.t, burn_in=sc.burn_in, seed=seed, sigma=sc.sigma,
                    init=sc.init)
    return simulate_gaussian(spec, net, cfg)


def _grid_for(sc: Scenario, panel: Panel, net: Network) -> Optional[GammaGrid]:
    spec = sc.test.get("grid")
    family = sc.test.get("alt", "stnar")
    if spec is None or spec == "auto":
        return default_grid(family, panel=panel, net=net)
    if isinstance(spec, (list, tuple)):
        return GammaGrid(np.asarray(spec, dtype=float))
    lo, hi, num = spec
    return GammaGrid(np.linspace(float(lo), float(hi), int(num)))


def _run_replication(sc: Scenario, net: Network, base_seed: int, s_idx: int,
                     rep: int):
    """One simulate-fit-test pass; returns (p_value, statistic)."""
    spec = _dgp_spec(sc)
    panel = _simulate(sc, spec, net, rng.mix_seed(base_seed, s_idx, rep))
    kind = sc.test.get("kind", "chi2")
    if kind == "chi2":
        alt = ModelSpec.drift(sc.theta, 0.0, sc.domain)
        res = lm_test(panel, net, alt)
        return res.p_value, res.statistic
    family = sc.test.get("alt", "stnar")
    grid = _grid_for(sc, panel, net)
    if kind == "davies":
        res = run_profile_test(panel, net, family, sc.domain, grid=grid,
                               method="davies")
        return res.davies_p, res.g_sup
    if kind == "bootstrap":
        res = run_profile_test(
            panel, net, family, sc.domain, grid=grid, method="bootstrap",
            agg=sc.test.get("agg", "sup"), reps=int(sc.test.get("J", 499)),
            seed=rng.mix_seed(base_seed, s_idx, rep, 0xB0))
        return res.boot_p, res.g_sup
    raise ValueError(f"unknown test kind {kind!r}")


def _worker(args):
    sc, net, base_seed, s_idx, rep = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return rep, _run_replication(sc, net, base_seed, s_idx, rep), None
    except Exception as exc:  # noqa: BLE001 - failures are tabulated, not fatal
        return rep, None, f"{type(exc).__name__}: {exc}"


def run_mc_study(cfg: StudyConfig, threads: int = 1, collect_stats: bool = True):
    """Run every scenario; returns (rows, raw) where raw maps scenario name
    to the per-replication statistic draws (for QQ-style diagnostics).

    Failed replications are excluded and counted; a scenario aborts if
    more than 1 percent of its replications fail.
    """
    rows: list[StudyRow] = []
    raw: dict[str, np.ndarray] = {}
    for s_idx, sc in enumerate(cfg.scenarios):
        start = time.perf_counter()
        net = None if sc.redraw_network else _scenario_network(sc, cfg.base_seed, s_idx, 0)
        tasks = [(sc, net if net is not None
                  else _scenario_network(sc, cfg.base_seed, s_idx, r),
                  cfg.base_seed, s_idx, r) for r in range(sc.reps)]
        results: dict[int, tuple] = {}
        errors: list[str] = []
        if threads > 1:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                for rep, out, err in pool.map(_worker, tasks, chunksize=4):
                    if err is None:
                        results[rep] = out
                    else:
                        errors.append(err)
        else:
            for task in tasks:
                rep, out, err = _worker(task)
                if err is None:
                    results[rep] = out
                else:
                    errors.append(err)

        if len(errors) > max(1, sc.reps) * 0.01:
            raise RuntimeError(
                f"scenario {sc.name!r}: {len(errors)}/{sc.reps} replications "
                f"failed; first error: {errors[0]}")
        used = sorted(results)
        pvals = np.array([results[r][0] for r in used])
        stats = np.array([results[r][1] for r in used])
        if collect_stats:
            raw[sc.name] = stats
        elapsed = time.perf_counter() - start
        for level in sc.levels:
            rate = float(np.mean(pvals <= level)) if used else float("nan")
            se = float(np.sqrt(rate * (1.0 - rate) / len(used))) if used else float("nan")
            rows.append(StudyRow(sc.name, float(level), rate, se,
                                 len(used), len(errors), elapsed))
    return rows, raw


# file formats ------------------------------------------------------------------

def load_panel_csv(path, domain: str = "cont") -> Panel:
    """Read a panel CSV: header of node labels, one row per time step."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(cell) for cell in row] for row in reader if row]
    values = np.asarray(rows, dtype=float).T
    if values.size == 0:
        raise ValueError(f"{path}: no observations")
    if len(header) != values.shape[0]:
        raise ValueError(f"{path}: header width does not match data width")
    panel = Panel(values, node_labels=list(header))
    if domain == "count" and not panel.is_count():
        raise ValueError(f"{path}: count panel has negative or non-integer cells")
    return panel


def save_panel_csv(panel: Panel, path, counts: Optional[bool] = None) -> None:
    counts = panel.is_count() if counts is None else counts
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(panel.labels())
        for row in panel.values.T:
            writer.writerow([int(v) if counts else repr(float(v)) for v in row])


def load_network(path) -> Network:
    return load_edges(path)


def emit_report(rows, path, fmt: str = "csv", meta: Optional[dict] = None) -> None:
    """Write study rows with stable field order plus reproducibility metadata."""
    header = ["scenario", "level", "rejection_rate", "mc_se", "reps_used",
              "failures", "elapsed"]
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            if meta:
                writer.writerow([f"# {json.dumps(meta, sort_keys=True)}"])
            writer.writerow(header)
            for r in rows:
                writer.writerow([r.scenario, r.level, repr(r.rejection_rate),
                                 repr(r.mc_se), r.reps_used, r.failures,
                                 f"{r.elapsed:.3f}"])
    elif fmt == "json":
        payload = {
            "meta": {**(meta or {}), "tool_version": _version},
            "rows": [{k: getattr(r, k) for k in header} for r in rows],
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=False)
            fh.write("\n")
    else:
        raise ValueError("format must be 'csv' or 'json'")


def write_raw_draws(raw: dict, path) -> None:
    """One (scenario, replication, statistic) row per draw."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["scenario", "rep", "statistic"])
        for name in raw:
            for r, value in enumerate(raw[name]):
                writer.writerow([name, r, repr(float(value))])
