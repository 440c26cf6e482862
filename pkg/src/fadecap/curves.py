"""Figure presets: which quantities are swept, how grid points are seeded and assembled.

Each preset expands into a list of independent tasks.  Tasks are mapped
over a thread pool (the compiled kernel releases the GIL) and their results
are placed by index, so serial and parallel runs produce the same numbers.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import capacity
from .errors import ConfigurationError, FadecapError
from .exact_mi import FAST_BUDGET, QuadratureBudget

__all__ = [
    "FIG1_7_BETAS",
    "FIG15_21_BETAS",
    "CapacityCurve",
    "RunConfig",
    "snr_to_sigma2",
    "parse_snr_grid",
    "build_curves",
    "point_seed",
]

FIG1_7_BETAS = (1.0, 0.9, 0.7, 0.5, 0.3, 0.1, 0.0)
FIG15_21_BETAS = (0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 1.0)
FIG1_7_SERIES = ("optimal-TR", "optimal-R", "gaussian", "psk", "uniform", "amqam")
MODES = ("fig1-7", "fig8-13", "fig14-21", "custom")
THREADS_ENV = "FADECAP_THREADS"
SIG_DIGITS = 9


def snr_to_sigma2(snr_db):
    """sigma2 = 10^(-SNR/10): unit symbol energy makes 1/sigma2 the SNR."""
    return 10.0 ** (-float(snr_db) / 10.0)


def parse_snr_grid(text):
    """'start:stop:step' (stop inclusive) or a comma-separated list, in dB."""
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(round(start + k * step, 10) for k in range(n))
        return tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise ConfigurationError(f"bad SNR grid {text!r}; expected start:stop:step") from exc


def _round(v):
    """Value as printed: 9 significant digits, None for NaN."""
    if v is None or not math.isfinite(v):
        return None
    return float(f"{v:.{SIG_DIGITS}g}")


@dataclass(frozen=True)
class RunConfig:
    """Effective settings of one curve run.

    `threads` and `out` only affect where and how fast results are
    produced, so they are left out of the embedded metadata.
    """

    mode: str = "fig1-7"
    betas: tuple = ()
    K: tuple = ()
    L: tuple = ()
    snr_db: tuple = tuple(float(v) for v in range(0, 21))
    m_max: int = 10
    points: int = 4
    seed: int = 0
    quick: bool = False
    series: tuple = ()
    fmt: str = "csv"
    threads: int = 1
    out: str = "."

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.fmt not in ("csv", "json"):
            raise ConfigurationError("format must be csv or json")
        if any(not 0.0 <= b <= 1.0 for b in self.betas):
            raise ConfigurationError("every beta must lie in [0, 1]")
        if any(int(k) != k or k < 1 for k in self.K + self.L):
            raise ConfigurationError("K and L must be positive integers")
        if self.m_max < 1 or self.points < 2 or self.threads < 1:
            raise ConfigurationError("need mmax >= 1, points >= 2 and threads >= 1")
        if not self.snr_db:
            raise ConfigurationError("empty SNR grid")

    @property
    def outer_nodes(self):
        return 8 if self.quick else 32

    @property
    def family_nodes(self):
        return 24 if self.quick else 32

    @property
    def estimate_nodes(self):
        return 4 if self.quick else 8

    @property
    def shells(self):
        return 32 if self.quick else 64

    @property
    def settings(self):
        return capacity.QUICK_SETTINGS if self.quick else capacity.OptimizerSettings()

    @property
    def budget(self):
        return FAST_BUDGET if self.quick else QuadratureBudget()

    def effective(self):
        s = self.settings
        return {
            "mode": self.mode, "betas": list(self.betas), "K": list(self.K), "L": list(self.L),
            "snr_db": list(self.snr_db), "m_max": self.m_max, "max_points": self.points,
            "seed": self.seed, "quick": self.quick, "series": list(self.series),
            "format": self.fmt,
            "outer_nodes": self.outer_nodes, "estimate_outer_nodes": self.estimate_nodes,
            "family_outer_nodes": self.family_nodes,
            "family_shells": self.shells,
            "quadrature": {"n_x": self.budget.n_x, "n_y": self.budget.n_y,
                           "half_width": self.budget.half_width},
            "optimizer": {"n_starts": s.n_starts, "coarse_maxfev": s.coarse_maxfev,
                          "n_polish": s.n_polish, "polish_maxfev": s.polish_maxfev,
                          "xatol": s.xatol, "fatol": s.fatol, "size_tol": s.size_tol,
                          "coarse_outer_nodes": s.coarse_outer_nodes},
            "residual_tol": capacity.RESIDUAL_TOL,
            "sigma2_rule": "10^(-snr_db/10)",
            "assumptions": {
                "uniform_fading": True,
                "csi_law": "alpha_hat i.i.d. CN(0, (1-beta)/L) per path",
                "beta0_capacity": "closed-form Gaussian average",
            },
        }


@dataclass
class CapacityCurve:
    name: str
    x_axis: list
    series: dict
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for key, vals in self.series.items():
            if len(vals) != len(self.x_axis):
                raise ConfigurationError(f"series {key!r} does not match the x axis")

    def to_csv(self):
        lines = [f"# {k}: {json.dumps(v, sort_keys=True)}" for k, v in self.metadata.items()]
        lines.append(",".join(["snr_db"] + list(self.series)))
        for i, x in enumerate(self.x_axis):
            row = [f"{x:.{SIG_DIGITS}g}"]
            for vals in self.series.values():
                v = _round(vals[i])
                row.append("nan" if v is None else f"{v:.{SIG_DIGITS}g}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_dict(self):
        return {
            "name": self.name,
            "x_axis": [_round(x) for x in self.x_axis],
            "series": {k: [_round(v) for v in vals] for k, vals in self.series.items()},
            "metadata": self.metadata,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n"

    def write(self, directory, fmt):
        os.makedirs(directory, exist_ok=True)
        path = os.path.join(directory, f"{self.name}.{fmt}")
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        return path


def point_seed(seed, *keys):
    """Independent integer seed for one grid point."""
    return int(np.random.SeedSequence([int(seed)] + [int(k) for k in keys]).generate_state(1)[0])


def resolve_threads(flag):
    """Thread count: explicit flag, else FADECAP_THREADS, else 1."""
    if flag is not None:
        return int(flag)
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer") from exc
    return 1


# ---------------------------------------------------------------------------
# Tasks
# ---------------------------------------------------------------------------

def _guard(fn, diagnostics, label):
    try:
        return float(fn())
    except (FadecapError, ArithmeticError, ValueError) as exc:
        diagnostics.append(f"{label}: {type(exc).__name__}: {exc}")
        return math.nan


def _fig1_7_point(cfg, beta, snr, seed, wanted):
    s2 = snr_to_sigma2(snr)
    diag = []
    out = {}
    common = dict(settings=cfg.settings, budget=cfg.budget, seed=seed)
    r_result = {}

    def opt_r():
        res = capacity.capacity_r(beta, s2, cfg.points, cfg.outer_nodes, **common)
        r_result["law"] = res.argmax
        return res.value

    def opt_tr():
        warm = [r_result["law"]] if "law" in r_result else []
        return capacity.capacity_tr(beta, s2, cfg.outer_nodes, max_points=cfg.points,
                                    warm=warm, **common)

    jobs = {
        "optimal-R": opt_r,
        "optimal-TR": opt_tr,
        "gaussian": lambda: capacity.mi_fixed_family("gaussian", beta, s2, n_points=cfg.shells,
                                                     outer_nodes=cfg.family_nodes, budget=cfg.budget),
        "psk": lambda: capacity.mi_fixed_family("psk", beta, s2, outer_nodes=cfg.family_nodes,
                                                budget=cfg.budget),
        "uniform": lambda: capacity.mi_fixed_family("uniform", beta, s2, n_points=cfg.shells,
                                                    outer_nodes=cfg.family_nodes, budget=cfg.budget),
        "amqam": lambda: capacity.mi_fixed_family("amqam", beta, s2, m_max=cfg.m_max,
                                                  outer_nodes=cfg.family_nodes, budget=cfg.budget),
    }
    # optimal-R first so its law can seed the per-node searches
    for name in ("optimal-R", "optimal-TR", "gaussian", "psk", "uniform", "amqam"):
        if name in wanted:
            out[name] = _guard(jobs[name], diag, f"beta={beta} snr={snr} {name}")
    return out, diag


def _closed_form_point(kind, K, L, snr):
    s2 = snr_to_sigma2(snr)
    diag = []
    if kind == "spacetime":
        v = _guard(lambda: capacity.spacetime_capacity(K, L, s2, normalized=True), diag,
                   f"spacetime K={K} L={L} snr={snr}")
    else:
        v = _guard(lambda: capacity.coherent_cdma_capacity(K, L, s2), diag,
                   f"cdma K={K} L={L} snr={snr}")
    return {"value": v}, diag


def _estimate_point(cfg, K, L, beta, snr):
    s2 = snr_to_sigma2(snr)
    diag = []
    v = _guard(lambda: capacity.estimated_capacity(K, L, beta, s2, m_max=cfg.m_max,
                                                   outer_nodes=cfg.estimate_nodes),
               diag, f"estimate K={K} L={L} beta={beta} snr={snr}")
    return {"value": v}, diag


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

def _fig_number(beta, table, first):
    for i, b in enumerate(table):
        if abs(b - beta) < 1e-12:
            return first + i
    return None


def _plan(cfg):
    """List of (figure name, series name, row index, task) and per-figure metadata."""
    plans = []
    figures = {}
    snr = cfg.snr_db
    if cfg.mode in ("fig1-7", "custom"):
        betas = cfg.betas or (FIG1_7_BETAS if cfg.mode == "fig1-7" else (1.0,))
        wanted = cfg.series or FIG1_7_SERIES
        bad = set(wanted) - set(FIG1_7_SERIES)
        if bad:
            raise ConfigurationError(f"unknown series {sorted(bad)}; expected {FIG1_7_SERIES}")
        if cfg.mode == "custom" and (cfg.K not in ((), (1,)) or cfg.L not in ((), (1,))):
            raise ConfigurationError("radial-input series need K = 1 and L = 1")
        for bi, beta in enumerate(betas):
            num = _fig_number(beta, FIG1_7_BETAS, 1) if cfg.mode == "fig1-7" else None
            name = f"fig{num:02d}" if num else f"curve_beta{beta:g}"
            figures[name] = {"beta": beta, "K": 1, "L": 1, "series": list(wanted)}
            for i, x in enumerate(snr):
                seed = point_seed(cfg.seed, 1, bi, i)
                plans.append((name, None, i, ("fig1-7", cfg, beta, x, seed, tuple(wanted))))
    elif cfg.mode == "fig8-13":
        Ks = cfg.K or tuple(range(1, 11))
        Ls = cfg.L or tuple(range(1, 11))
        layouts = [
            ("fig08", "spacetime", [(1, L) for L in Ls], "L"),
            ("fig09", "spacetime", [(K, 1) for K in Ks], "K"),
            ("fig10", "spacetime", [(K, K) for K in Ks], "K=L"),
            ("fig11", "cdma", [(1, L) for L in Ls], "L"),
            ("fig12", "cdma", [(K, 1) for K in Ks], "K"),
            ("fig13", "cdma", [(K, K) for K in Ks], "K=L"),
        ]
        for name, kind, pairs, label in layouts:
            figures[name] = {"beta": 0.0, "kind": kind,
                             "series": [_label(label, K, L) for K, L in pairs]}
            for K, L in pairs:
                for i, x in enumerate(snr):
                    plans.append((name, _label(label, K, L), i, ("closed", kind, K, L, x)))
    elif cfg.mode == "fig14-21":
        Ks = cfg.K or tuple(range(1, 11))
        L = cfg.L[0] if cfg.L else 10
        figures["fig14"] = {"beta": 0.0, "L": L, "kind": "cdma",
                            "series": [f"K={K}" for K in Ks]}
        for K in Ks:
            for i, x in enumerate(snr):
                plans.append(("fig14", f"K={K}", i, ("closed", "cdma", K, L, x)))
        betas = cfg.betas or FIG15_21_BETAS
        for beta in betas:
            num = _fig_number(beta, FIG15_21_BETAS, 15)
            name = f"fig{num:02d}" if num else f"estimate_beta{beta:g}"
            figures[name] = {"beta": beta, "L": L, "kind": "estimate",
                             "series": [f"K={K}" for K in Ks]}
            for K in Ks:
                for i, x in enumerate(snr):
                    plans.append((name, f"K={K}", i, ("estimate", cfg, K, L, beta, x)))
    return plans, figures


def _label(label, K, L):
    return {"K": f"K={K}", "L": f"L={L}", "K=L": f"K=L={K}"}[label]


def _run_task(task):
    kind = task[0]
    if kind == "fig1-7":
        return _fig1_7_point(*task[1:])
    if kind == "closed":
        return _closed_form_point(*task[1:])
    return _estimate_point(*task[1:])


def build_curves(cfg: RunConfig, threads=1):
    """Evaluate every task of the preset and assemble one CapacityCurve per figure."""
    plans, figures = _plan(cfg)
    tasks = [p[3] for p in plans]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_run_task, tasks))
    else:
        results = [_run_task(t) for t in tasks]
    n = len(cfg.snr_db)
    series = {name: {s: [math.nan] * n for s in meta["series"]} for name, meta in figures.items()}
    diagnostics = {name: [] for name in figures}
    for (name, sname, i, _), (values, diag) in zip(plans, results):
        if sname is None:
            for k, v in values.items():
                series[name][k][i] = v
        else:
            series[name][sname][i] = values["value"]
        diagnostics[name].extend(diag)
    curves = []
    for name, meta in figures.items():
        md = {"figure": meta, "config": cfg.effective(), "diagnostics": diagnostics[name]}
        curves.append(CapacityCurve(name, list(cfg.snr_db), series[name], md))
    return curves
