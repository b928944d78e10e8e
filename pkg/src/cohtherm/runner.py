"""Sweep runner: one coherence CSV per (kT, solver), with a content-addressed cache."""

import hashlib
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .coherence import coherence_of
from .dynamics import max_deviation, propagate_analytic, propagate_ode

log = logging.getLogger(__name__)

MANIFEST = ".cohtherm-cache.json"
CROSSCHECK_TOL = 1e-6
_print_lock = threading.Lock()


@dataclass
class RunReport:
    files: list = field(default_factory=list)
    computed: list = field(default_factory=list)
    cache_hits: list = field(default_factory=list)
    crosscheck: dict = field(default_factory=dict)

    @property
    def crosscheck_ok(self):
        return all(v <= CROSSCHECK_TOL for v in self.crosscheck.values())


def _solvers(config):
    return ("analytic", "ode") if config.solver == "both" else (config.solver,)


def cell_filename(config, kT, solver):
    return f"{config.state.label}_{config.environment}_kT{kT:g}_{solver}.csv"


def cell_key(config, kT, solver):
    scenario = config.scenario(kT)
    payload = {"scenario": scenario.digest, "solver": solver}
    if solver == "ode":
        payload["substeps"] = config.substeps
    text = json.dumps(payload, sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()


def _load_manifest(out_dir):
    path = out_dir / MANIFEST
    if not path.exists():
        return {}
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError):
        log.warning("ignoring unreadable cache manifest %s", path)
        return {}


def _write_text(path, text):
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _announce(progress, message):
    if progress is not None:
        with _print_lock:
            progress(message)


def _states_name(name):
    return name[: -len(".csv")] + "_states.csv"


def _cell_files(config, kT, dump_states):
    """Output file name -> cache key for one kT cell."""
    files = {}
    for solver in _solvers(config):
        name = cell_filename(config, kT, solver)
        files[name] = cell_key(config, kT, solver)
        if dump_states:
            files[_states_name(name)] = files[name]
    return files


def _compute_cell(config, kT, dump_states):
    scenario = config.scenario(kT)
    results = {}
    for solver in _solvers(config):
        if solver == "analytic":
            results[solver] = propagate_analytic(scenario)
        else:
            results[solver] = propagate_ode(scenario, config.substeps)
    deviation = None
    if len(results) == 2:
        deviation = max_deviation(results["analytic"], results["ode"])
    texts = {}
    for solver, traj in results.items():
        name = cell_filename(config, kT, solver)
        texts[name] = coherence_of(traj).to_csv()
        if dump_states:
            texts[_states_name(name)] = traj.to_csv()
    return texts, deviation


def run(config, dump_states=False, progress=None):
    """Execute every (kT, solver) cell of ``config``; returns a RunReport."""
    out_dir = Path(config.output)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = _load_manifest(out_dir) if config.cache else {}
    report = RunReport()

    todo = []
    for kT in config.kT:
        files = _cell_files(config, kT, dump_states)
        hit = config.cache and all(
            manifest.get(name, {}).get("key") == key and (out_dir / name).exists()
            for name, key in files.items()
        )
        if hit:
            report.cache_hits.extend(files)
            _announce(progress, f"cached   kT={kT:g}")
        else:
            todo.append((kT, files))

    def work(item):
        kT, files = item
        texts, deviation = _compute_cell(config, kT, dump_states)
        for name, text in texts.items():
            _write_text(out_dir / name, text)
        _announce(progress, f"computed kT={kT:g}")
        return kT, files, deviation

    with ThreadPoolExecutor(max_workers=config.workers) as pool:
        done = list(pool.map(work, todo))

    for kT, files, deviation in done:
        report.computed.extend(files)
        for name, key in files.items():
            manifest[name] = {"key": key}
        if deviation is not None:
            manifest[cell_filename(config, kT, "ode")]["max_deviation"] = deviation

    for kT in config.kT:
        for solver in _solvers(config):
            report.files.append(out_dir / cell_filename(config, kT, solver))
        entry = manifest.get(cell_filename(config, kT, "ode"), {})
        if config.solver == "both" and "max_deviation" in entry:
            report.crosscheck[f"{kT:g}"] = entry["max_deviation"]

    if config.cache:
        _write_text(out_dir / MANIFEST, json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    if report.crosscheck:
        check = {
            "tolerance": CROSSCHECK_TOL,
            "max_deviation_by_kT": report.crosscheck,
            "ok": report.crosscheck_ok,
        }
        _write_text(
            out_dir / f"crosscheck_{config.state.label}_{config.environment}.json",
            json.dumps(check, indent=2, sort_keys=True) + "\n",
        )
    return report


_TEMPLATE = '''"""Relative entropy of coherence vs time: {title}.

Regenerate the data with `cohtherm preset {preset}`; running this script
writes {preset}.png next to it.
"""
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent
CURVES = [
{curves}]


def load(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))[1:]
    return [float(r[0]) for r in rows], [float(r[1]) for r in rows]


fig, ax = plt.subplots(figsize=(5, 3.6))
for label, name in CURVES:
    t, c = load(HERE / name)
    ax.plot(t, c, label=label)
ax.set_xlabel(r"$\\omega_0 t$")
ax.set_ylabel(r"$C_R(\\rho)$")
ax.set_title({title!r})
ax.legend()
fig.tight_layout()
fig.savefig(HERE / "{preset}.png", dpi=150)
'''

_PRETTY = {
    "ghz": "GHZ",
    "w": "W",
    "wbar": "W-bar",
    "wwbar": "W W-bar",
    "star": "Star",
    "mix-ghz-w": "GHZ-W mixture",
    "werner-ghz": "Werner-GHZ",
    "werner-w": "Werner-W",
}


def emit_plot_script(csv_paths, preset, config=None, out_dir=None):
    """Write ``plot_{preset}.py`` rendering one curve per CSV; returns its path."""
    paths = [Path(p) for p in csv_paths]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise FileNotFoundError(f"missing CSV for plot script: {', '.join(missing)}")
    out_dir = Path(out_dir) if out_dir is not None else (paths[0].parent if paths else Path("."))
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for p in paths:
        kT = p.name.split("_kT")[1].rsplit("_", 1)[0] if "_kT" in p.name else p.stem
        rel = os.path.relpath(p.resolve(), out_dir.resolve())
        lines.append(f"    ({f'kT = {kT}'!r}, {rel!r}),\n")
    if config is not None:
        title = f"{_PRETTY[config.state.name]}"
        if config.state.p is not None:
            title += f", p = {config.state.p:g}"
        title += f", {config.environment} dephasing"
    else:
        title = preset
    script = _TEMPLATE.format(title=title, preset=preset, curves="".join(lines))
    path = out_dir / f"plot_{preset}.py"
    _write_text(path, script)
    return path
