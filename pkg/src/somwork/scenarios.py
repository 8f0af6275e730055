"""
Scenario configuration, presets and the deterministic scenario runner.

A scenario is one SOM instance on one time grid plus a set of requested
outputs. Running it writes one CSV per output and a JSON manifest that
echoes the resolved configuration.
"""
from __future__ import annotations

import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, TaintedTrajectoryError
from .lembas import flux_series
from .measures import (
    breakdown_time,
    integral_quality,
    min_purity_bound,
    relative_deviation,
)
from .models import (
    MAX_CUTOFF,
    ModelKind,
    SystemParams,
    choose_cutoff,
    derived_constants,
    initial_state,
    som_hamiltonian,
)
from .oracles import analytic_purity
from .propagation import TimeGrid, evolve

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

OUTPUTS = ("purity", "fluxes", "quality", "signed_wq", "rwa_deviation", "oracle_checks")

COLUMNS = {
    "purity": ("t", "P_spin", "P_osc"),
    "fluxes": ("t", "w_dot", "q_dot", "u_dot", "r"),
    "quality": ("t0", "t1", "W_abs", "Q_abs", "R", "W_signed_final", "Q_signed_final", "t_star"),
    "signed_wq": ("t", "W_signed", "Q_signed", "R_running"),
    "rwa_deviation": ("t", "P_exact", "P_rwa", "abs_dev", "rel_dev"),
    "oracle_checks": ("t", "P_numeric", "P_analytic", "abs_diff"),
}

LEGEND = {
    "t": "time (hbar = 1)",
    "P_spin": "purity of the reduced spin state",
    "P_osc": "purity of the reduced oscillator state",
    "w_dot": "work flux into the selected subsystem",
    "q_dot": "heat flux into the selected subsystem",
    "u_dot": "rate of change of the local energy tr(H' rho)",
    "r": "|w_dot| / (|w_dot| + |q_dot|); empty where both vanish",
    "t0": "start of the integration window",
    "t1": "end of the integration window",
    "W_abs": "integral of |w_dot| (rectangle rule)",
    "Q_abs": "integral of |q_dot| (rectangle rule)",
    "R": "W_abs / (W_abs + Q_abs)",
    "W_signed": "cumulative integral of w_dot",
    "Q_signed": "cumulative integral of q_dot",
    "W_signed_final": "integral of w_dot over the window",
    "Q_signed_final": "integral of q_dot over the window",
    "R_running": "R(t, t0)",
    "t_star": "first crossing of the minimum z-SOM purity by the RWA oscillator purity",
    "P_exact": "oscillator purity, exact xz-SOM dynamics",
    "P_rwa": "oscillator purity, JCM dynamics",
    "abs_dev": "|P_exact - P_rwa|",
    "rel_dev": "|P_exact - P_rwa| / P_exact",
    "P_numeric": "oscillator purity, exact numerical z-SOM dynamics",
    "P_analytic": "oscillator purity, closed form",
    "abs_diff": "|P_numeric - P_analytic|",
}

#: Environment variable naming the default output directory.
OUTPUT_ENV = "SOMWORK_OUTPUT_DIR"

_SECTIONS = {
    "scenario": {"name", "model", "cutoff", "outputs", "system", "notes"},
    "params": {"omega_s", "omega_o", "lam", "kappa", "mass", "alpha", "c"},
    "grid": {"t0", "t1", "step"},
    "quality": {"t0", "t1"},
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Fully resolved description of one run.

    ``cutoff`` is an integer or ``"auto"``; ``system`` selects the subsystem
    whose work and heat fluxes are reported (0 = spin, 1 = oscillator).
    """

    name: str
    model: ModelKind
    params: SystemParams
    grid: TimeGrid
    cutoff: int | str = "auto"
    outputs: frozenset = frozenset()
    system: int = 0
    window: tuple | None = None
    notes: str = ""

    def __post_init__(self):
        bad = set(self.outputs) - set(OUTPUTS)
        if bad:
            raise ConfigError(f"scenario.outputs: unknown output(s) {sorted(bad)}")
        if not (self.cutoff == "auto" or (isinstance(self.cutoff, int) and 2 <= self.cutoff <= MAX_CUTOFF)):
            raise ConfigError(f"scenario.cutoff: expected 'auto' or an integer in [2, {MAX_CUTOFF}]")
        if self.system not in (0, 1):
            raise ConfigError("scenario.system: expected 'spin' or 'oscillator'")
        if "oracle_checks" in self.outputs and (self.model is not ModelKind.Z_SOM or self.params.kappa):
            raise ConfigError("scenario.outputs: oracle_checks needs the z model with kappa = 0")
        if "rwa_deviation" in self.outputs and self.params.omega_s != self.params.omega_o:
            raise ConfigError("scenario.outputs: rwa_deviation needs omega_s == omega_o")
        if self.model is ModelKind.JCM_RWA and self.params.omega_s != self.params.omega_o:
            raise ConfigError("params: the jcm model needs omega_s == omega_o")
        if self.window is not None:
            t0, t1 = self.window
            if not (self.grid.t0 <= t0 < t1 <= self.grid.t1):
                raise ConfigError("quality: window must lie inside the grid with t0 < t1")

    def as_dict(self):
        out = {
            "scenario": {
                "name": self.name,
                "model": self.model.value,
                "cutoff": self.cutoff,
                "outputs": sorted(self.outputs),
                "system": "spin" if self.system == 0 else "oscillator",
            },
            "params": self.params.as_dict(),
            "grid": {"t0": self.grid.t0, "t1": self.grid.t1, "step": self.grid.step},
        }
        if self.notes:
            out["scenario"]["notes"] = self.notes
        if self.window is not None:
            out["quality"] = {"t0": self.window[0], "t1": self.window[1]}
        return out


def _section(doc, name, required):
    value = doc.get(name)
    if value is None:
        if required:
            raise ConfigError(f"{name}: missing section")
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a table")
    unknown = set(value) - _SECTIONS[name]
    if unknown:
        raise ConfigError(f"{name}.{sorted(unknown)[0]}: unknown key")
    return value


def _number(table, section, key, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"{section}.{key}: missing")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{section}.{key}: expected a number, got {v!r}")
    return float(v)


def config_from_dict(doc):
    """Validate a parsed configuration document into a :class:`ScenarioConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a table")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    sc = _section(doc, "scenario", True)
    pa = _section(doc, "params", True)
    gr = _section(doc, "grid", True)
    qu = _section(doc, "quality", False)

    try:
        model = ModelKind.parse(sc.get("model", "xz"))
    except ValueError as exc:
        raise ConfigError(f"scenario.model: {exc}") from None
    outputs = sc.get("outputs", [])
    if not isinstance(outputs, list) or not all(isinstance(o, str) for o in outputs):
        raise ConfigError("scenario.outputs: expected a list of strings")
    system = sc.get("system", "spin")
    if system not in ("spin", "oscillator"):
        raise ConfigError("scenario.system: expected 'spin' or 'oscillator'")
    cutoff = sc.get("cutoff", "auto")
    if isinstance(cutoff, bool) or not (cutoff == "auto" or isinstance(cutoff, int)):
        raise ConfigError("scenario.cutoff: expected 'auto' or an integer")

    alpha = pa.get("alpha", 0.0)
    if isinstance(alpha, list):
        if len(alpha) != 2 or not all(isinstance(a, (int, float)) for a in alpha):
            raise ConfigError("params.alpha: expected a number or [re, im]")
        alpha = complex(alpha[0], alpha[1])
    elif isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
        raise ConfigError("params.alpha: expected a number or [re, im]")
    defaults = {"omega_s": 1.0, "omega_o": 1.0, "lam": 0.0, "kappa": 0.0, "mass": 1.0, "c": 1.0}
    values = {k: _number(pa, "params", k, v) for k, v in defaults.items()}
    try:
        params = SystemParams(alpha=alpha, **values)
    except ValueError as exc:
        raise ConfigError(f"params: {exc}") from None
    bounds = (_number(gr, "grid", "t0", 0.0), _number(gr, "grid", "t1"), _number(gr, "grid", "step"))
    try:
        grid = TimeGrid(*bounds)
    except ValueError as exc:
        raise ConfigError(f"grid: {exc}") from None
    window = None
    if qu:
        window = (_number(qu, "quality", "t0", grid.t0), _number(qu, "quality", "t1", grid.t1))
    return ScenarioConfig(
        name=str(sc.get("name", "scenario")),
        model=model,
        params=params,
        grid=grid,
        cutoff=cutoff,
        outputs=frozenset(outputs),
        system=0 if system == "spin" else 1,
        window=window,
        notes=str(sc.get("notes", "")),
    )


def load_config(path):
    """Read a TOML scenario file."""
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_dict(doc)


# -- presets ----------------------------------------------------------------

_SQRT2 = math.sqrt(2.0)
_FIG2_NOTE = (
    "The purity figure is drawn for arbitrary g; the preset uses lam = 0.01 and "
    "kappa = sqrt(2) * (1, 10, 100), i.e. |g| = 0.01, 0.1, 1 as in the RWA deviation panels. "
    "JCM purity depends on g only through |g| t."
)


def _preset(name, model, params, t1, step, outputs, notes="", t0=0.0):
    return ScenarioConfig(
        name=name,
        model=ModelKind.parse(model),
        params=SystemParams(**params),
        grid=TimeGrid(t0, t1, step),
        outputs=frozenset(outputs),
        notes=notes,
    )


def _build_presets():
    fig1 = dict(lam=0.1, c=0.7, alpha=0.0)
    fig2 = dict(lam=0.01, alpha=1.0, c=0.7)
    fig3 = dict(lam=-0.01, alpha=1.0, c=0.7)
    case_a = dict(lam=0.1, kappa=0.1, alpha=0.0, c=0.5)
    case_b = dict(lam=0.1, kappa=0.1, alpha=2.0, c=1.0)
    work = ("purity", "fluxes", "quality", "signed_wq")
    return {
        "fig1": [_preset("fig1", "z", fig1, 4 * math.pi, math.pi / 100, ("purity", "oracle_checks", "fluxes"))],
        "fig2": [
            _preset(f"fig2_{tag}", "jcm", dict(fig2, kappa=k * _SQRT2), 200.0, 0.05, ("purity",), _FIG2_NOTE)
            for tag, k in (("g0.01", 1), ("g0.1", 10), ("g1", 100))
        ],
        "fig3a": [_preset("fig3a", "xz", dict(fig3, kappa=_SQRT2), 200.0, 0.05, ("rwa_deviation",))],
        "fig3b": [_preset("fig3b", "xz", dict(fig3, kappa=10 * _SQRT2), 200.0, 0.05, ("rwa_deviation",))],
        "fig3c": [_preset("fig3c", "xz", dict(fig3, kappa=100 * _SQRT2), 200.0, 0.05, ("rwa_deviation",))],
        "fig4a": [_preset("fig4a", "xz", case_a, 200.0, 0.05, ("purity", "rwa_deviation", "quality"))],
        "fig4b": [_preset("fig4b", "xz", case_b, 200.0, 0.05, ("purity", "rwa_deviation", "quality"))],
        "fig5": [
            _preset("fig5_a", "xz", case_a, 200.0, 0.05, work),
            _preset("fig5_b", "xz", case_b, 200.0, 0.05, work),
        ],
        "fig6a": [_preset("fig6a", "xz", case_a, 200.0, 0.05, ("signed_wq", "quality"))],
        "fig6b": [_preset("fig6b", "xz", case_b, 200.0, 0.05, ("signed_wq", "quality"))],
    }


PRESETS = _build_presets()


def preset(name):
    """List of scenario configs (usually one) making up preset ``name``."""
    try:
        return list(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


# -- output -----------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    v = float(value)
    if math.isnan(v):
        return ""
    return f"{v:.11e}"


def _atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_csv(series, columns, path):
    """Write columns of equal length as CSV with 12 significant digits.

    ``series`` is a sequence of column arrays (or scalars for a single
    row); None and NaN become empty cells. The file is replaced atomically.
    """
    series = [np.atleast_1d(np.asarray(s, dtype=object)) for s in series]
    if len(series) != len(columns):
        raise ValueError(f"{len(series)} series for {len(columns)} columns")
    n = len(series[0])
    if any(len(s) != n for s in series):
        raise ValueError("series have different lengths")
    lines = [",".join(columns)]
    for i in range(n):
        lines.append(",".join(_fmt(s[i]) for s in series))
    _atomic_write(path, "\n".join(lines) + "\n")
    return Path(path)


@dataclass
class RunManifest:
    config: dict
    cutoff: int
    files: dict = field(default_factory=dict)
    crosscheck: dict = field(default_factory=dict)
    taint: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    legend: dict = field(default_factory=dict)
    version: str = __version__

    def as_dict(self):
        return {
            "tool": "somwork",
            "version": self.version,
            "config": self.config,
            "cutoff": self.cutoff,
            "files": self.files,
            "crosscheck": self.crosscheck,
            "taint": self.taint,
            "summary": self.summary,
            "legend": self.legend,
        }

    def write(self, path):
        _atomic_write(path, json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


def _clean(v):
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def _resolve_cutoff(cfg):
    if cfg.cutoff != "auto":
        return cfg.cutoff
    return choose_cutoff(cfg.params, cfg.grid.t1, kind=cfg.model)


def _raise_if_tainted(traj, label):
    t = traj.first_tainted_time()
    if t is not None:
        raise TaintedTrajectoryError(
            f"{label}: boundary population exceeds {traj.threshold:g} from t={t:g}; raise the cutoff", t
        )


def _simulate(cfg, cutoff):
    parts = som_hamiltonian(cfg.params, cfg.model, cutoff)
    traj = evolve(initial_state(cfg.params, cutoff), parts.total, cfg.grid)
    rwa = None
    if "rwa_deviation" in cfg.outputs or ("quality" in cfg.outputs and cfg.model is not ModelKind.Z_SOM):
        if cfg.params.omega_s == cfg.params.omega_o:
            if cfg.model is ModelKind.JCM_RWA:
                rwa = traj
            else:
                jcm = som_hamiltonian(cfg.params, ModelKind.JCM_RWA, cutoff).total
                rwa = evolve(initial_state(cfg.params, cutoff), jcm, cfg.grid)
    return parts, traj, rwa


def run_scenario(cfg, out_dir):
    """Run ``cfg`` and write its CSVs and ``<name>.manifest.json`` into ``out_dir``.

    With ``cutoff = "auto"`` the cutoff from :func:`choose_cutoff` is raised
    in steps of 4 while the full-resolution run is tainted.

    Raises
    ------
    TaintedTrajectoryError
        If the trajectory leaks into the Fock boundary (fixed cutoff, or auto
        cutoff exhausted).
    """
    out_dir = Path(out_dir)
    cutoff = _resolve_cutoff(cfg)
    while True:
        parts, traj, rwa = _simulate(cfg, cutoff)
        tainted = [t for t in (traj.first_tainted_time(), rwa.first_tainted_time() if rwa else None) if t is not None]
        if not tainted or cfg.cutoff != "auto" or cutoff + 4 > MAX_CUTOFF:
            break
        cutoff += 4
    _raise_if_tainted(traj, cfg.name)
    if rwa is not None:
        _raise_if_tainted(rwa, f"{cfg.name} (RWA)")

    manifest = RunManifest(config=cfg.as_dict(), cutoff=int(cutoff))
    manifest.taint = {
        "exact_first_tainted_time": traj.first_tainted_time(),
        "rwa_first_tainted_time": rwa.first_tainted_time() if rwa is not None else None,
    }
    times = traj.times
    purities = traj.purities()
    files = {}

    def put(kind, series):
        path = out_dir / f"{cfg.name}_{kind}.csv"
        emit_csv(series, COLUMNS[kind], path)
        files[kind] = path.name
        for col in COLUMNS[kind]:
            manifest.legend[col] = LEGEND[col]

    if "purity" in cfg.outputs:
        put("purity", (times, purities[:, 0], purities[:, 1]))
    if "oracle_checks" in cfg.outputs:
        ana = analytic_purity(cfg.params, times)
        diff = np.abs(purities[:, 1] - ana)
        put("oracle_checks", (times, purities[:, 1], ana, diff))
        manifest.summary["oracle_max_abs_diff"] = float(diff.max())
    if rwa is not None and "rwa_deviation" in cfg.outputs:
        p_exact, p_rwa = purities[:, 1], rwa.purities()[:, 1]
        dev = np.abs(p_exact - p_rwa)
        rel = relative_deviation(p_exact, p_rwa)
        put("rwa_deviation", (times, p_exact, p_rwa, dev, rel))
        manifest.summary["rwa_max_abs_dev"] = float(dev.max())
        manifest.summary["rwa_max_rel_dev"] = float(rel.max())

    t_star = None
    if rwa is not None and cfg.params.omega_s == cfg.params.omega_o:
        bound = min_purity_bound(derived_constants(cfg.params).xi)
        t_star = breakdown_time((times, rwa.purities()[:, 1]), bound)
        manifest.summary["p_min"] = bound
        manifest.summary["t_star"] = t_star
        manifest.summary["t_star_exact"] = breakdown_time((times, purities[:, 1]), bound)

    if {"fluxes", "quality", "signed_wq"} & cfg.outputs:
        h_local = parts.h_spin if cfg.system == 0 else parts.h_osc
        fs = flux_series(traj, parts.total, parts.h_int, h_local, cfg.system)
        manifest.summary["max_balance_residual"] = float(fs.balance_residual.max())
        t0, t1 = cfg.window or (cfg.grid.t0, float(times[-1]))
        report = integral_quality(fs, t0, t1, t_star=t_star)
        if "fluxes" in cfg.outputs:
            r = np.where(np.abs(fs.w_dot) + np.abs(fs.q_dot) > 0,
                         np.abs(fs.w_dot) / np.maximum(np.abs(fs.w_dot) + np.abs(fs.q_dot), 1e-300), np.nan)
            put("fluxes", (times, fs.w_dot, fs.q_dot, fs.u_dot, r))
        if "signed_wq" in cfg.outputs:
            put("signed_wq", (report.times, report.W_signed, report.Q_signed, report.R_running))
        if "quality" in cfg.outputs:
            put(
                "quality",
                (report.t0, report.t1, report.W_abs, report.Q_abs, report.R,
                 report.W_signed[-1], report.Q_signed[-1], t_star),
            )
        manifest.summary.update(R=_clean(report.R), W_abs=report.W_abs, Q_abs=report.Q_abs)
        manifest.crosscheck = {
            "R_rectangle": _clean(report.R),
            "R_trapezoid": _clean(report.R_trapezoid),
            "relative_gap": _clean(report.crosscheck_gap),
        }
    manifest.files = files
    manifest.legend = dict(sorted(manifest.legend.items()))
    manifest.write(out_dir / f"{cfg.name}.manifest.json")
    return manifest


# -- comparison -------------------------------------------------------------

def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.rstrip("\n").split(",") for line in fh if line.strip()]
    data = np.array([[float(c) if c else np.nan for c in row] for row in rows], dtype=float)
    return header, data.reshape(len(rows), len(header))


def _manifest_path(run):
    p = Path(run)
    if p.is_file():
        return p
    found = sorted(p.glob("*.manifest.json"))
    if len(found) != 1:
        raise ConfigError(f"{run}: expected a manifest file or a directory with exactly one manifest")
    return found[0]


def compare_report(run_a, run_b):
    """Text table of max absolute and relative differences between two runs.

    Runs are given by manifest paths (or directories holding one manifest).
    Outputs present in both runs are compared column by column; time-series
    outputs must share the same time column. Relative differences use the
    first run as reference.

    Raises
    ------
    ConfigError
        If the two runs' grids differ.
    """
    ma, mb = _manifest_path(run_a), _manifest_path(run_b)
    fa = json.loads(ma.read_text(encoding="utf-8"))
    fb = json.loads(mb.read_text(encoding="utf-8"))
    lines = [f"compare {ma.name} vs {mb.name}", "output,column,max_abs_diff,max_rel_diff"]
    for kind in sorted(set(fa["files"]) & set(fb["files"])):
        ha, da = _read_csv(ma.parent / fa["files"][kind])
        hb, db = _read_csv(mb.parent / fb["files"][kind])
        if ha != hb:
            raise ConfigError(f"{kind}: column mismatch")
        if da.shape != db.shape or (ha[0] == "t" and not np.allclose(da[:, 0], db[:, 0], rtol=0, atol=1e-9)):
            raise ConfigError(f"{kind}: grid mismatch")
        for j, col in enumerate(ha):
            if col == "t":
                continue
            a, b = da[:, j], db[:, j]
            ok = ~(np.isnan(a) | np.isnan(b))
            if not ok.any():
                lines.append(f"{kind},{col},,")
                continue
            diff = np.abs(a[ok] - b[ok])
            with np.errstate(divide="ignore", invalid="ignore"):
                rel = np.where(diff == 0, 0.0, diff / np.abs(a[ok]))
            lines.append(f"{kind},{col},{_fmt(diff.max())},{_fmt(np.max(rel))}")
    for key in sorted(set(fa.get("summary", {})) & set(fb.get("summary", {}))):
        a, b = fa["summary"][key], fb["summary"][key]
        if isinstance(a, (int, float)) and isinstance(b, (int, float)):
            d = abs(a - b)
            rel = 0.0 if d == 0 else d / abs(a) if a else math.inf
            lines.append(f"summary,{key},{_fmt(d)},{_fmt(rel)}")
    return "\n".join(lines) + "\n"


def default_output_dir():
    return Path(os.environ.get(OUTPUT_ENV, "somwork-out"))
