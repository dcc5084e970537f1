"""Command-line experiment runner.

Every command resolves a :class:`SweepSpec` (defaults < ``--config`` JSON <
explicit flags), evaluates one table row per grid point, and writes CSV (or
JSON with ``--format json``). The resolved spec is embedded in the output so
a file can be regenerated byte for byte. ``--workers`` only changes how rows
are scheduled, never their order or content.

Exit codes: 0 success, 2 invalid spec, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from typing import Any, Callable

import numpy as np

from . import dynamics as dyn
from . import geoment, measures
from .qcore import Partition, binary_entropy, reduced_state

log = logging.getLogger("esdkit")

EXIT_INVALID = 2
EXIT_NUMERIC = 3

EXPERIMENTS = ("jc", "ww", "invariant", "hierarchy", "discord", "partition-scan", "age4-surface")


class SpecError(ValueError):
    pass


@dataclass
class SweepSpec:
    experiment: str
    thetas: list[float]
    t_max: float
    steps: int
    seed: int = 0
    J: float = 1.0
    Gamma: float = 1.0
    modes: int = 1000
    bandwidth: float = 40.0
    restarts: int = 32
    ge_tol: float = 1e-10
    ge_max_iter: int = 500
    discord_grid: int = 64
    dnu_max: float = 3.0
    dnu_steps: int = 31
    out: str | None = None
    format: str = "csv"

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise SpecError(f"unknown experiment {self.experiment!r}")
        if not self.thetas:
            raise SpecError("theta list is empty")
        if any(not 0 <= th <= math.pi / 2 + 1e-12 for th in self.thetas):
            raise SpecError("theta values must lie in [0, pi/2]")
        if self.steps < 1:
            raise SpecError("steps must be >= 1")
        if self.t_max < 0 or (self.steps > 1 and self.t_max <= 0):
            raise SpecError("t_max must be positive")
        if self.format not in ("csv", "json"):
            raise SpecError("format must be csv or json")
        if self.modes < 2 or self.bandwidth <= 0 or self.Gamma <= 0 or self.J <= 0:
            raise SpecError("model parameters out of range")
        if self.restarts < 1 or self.discord_grid < 8:
            raise SpecError("optimizer options out of range")
        if self.dnu_steps < 1 or not 0 <= self.dnu_max <= self.bandwidth / self.Gamma:
            raise SpecError("delta_nu grid must lie inside [0, W]")

    def times(self) -> list[float]:
        return np.linspace(0.0, self.t_max, self.steps).tolist()

    def ww_params(self) -> dyn.WWParams:
        return dyn.WWParams(N=self.modes, Gamma=self.Gamma, W=self.bandwidth * self.Gamma)

    def resolved(self) -> dict[str, Any]:
        d = asdict(self)
        d.pop("out")
        return d


_DEFAULTS = {
    "jc": dict(thetas=[math.pi / 4, 2 * math.pi / 5], t_max=math.pi, steps=65),
    "ww": dict(thetas=[math.pi / 4, 2 * math.pi / 5], t_max=5.0, steps=51),
    "invariant": dict(thetas=[k * math.pi / 16 for k in range(9)], t_max=math.pi, steps=65),
    "hierarchy": dict(thetas=[2 * math.pi / 5], t_max=math.pi, steps=17),
    "discord": dict(thetas=[math.pi / 8, math.pi / 4, 2 * math.pi / 5], t_max=math.pi, steps=33),
    "partition-scan": dict(thetas=[2 * math.pi / 5], t_max=0.0, steps=1),
    "age4-surface": dict(thetas=[k * math.pi / 16 for k in range(9)], t_max=math.pi, steps=17),
}

_ANGLE = re.compile(r"^\s*([-+]?\d*\.?\d*(?:e[-+]?\d+)?)\s*\*?\s*(pi)?\s*(?:/\s*(\d*\.?\d+))?\s*$", re.I)


def parse_angle(text: str) -> float:
    """Parse ``0.3``, ``pi/4``, ``2pi/5`` or ``2*pi/5``."""
    m = _ANGLE.match(text)
    if not m or (not m.group(1) and not m.group(2)):
        raise SpecError(f"cannot parse angle {text!r}")
    coef = float(m.group(1)) if m.group(1) not in ("", "+", "-") else (-1.0 if m.group(1) == "-" else 1.0)
    val = coef * (math.pi if m.group(2) else 1.0)
    if m.group(3):
        val /= float(m.group(3))
    return val


def parse_angles(text: str) -> list[float]:
    return [parse_angle(t) for t in text.split(",") if t.strip()]


# ------------------------------------------------------------- row kernels


@lru_cache(maxsize=4)
def _ww_model(params: dyn.WWParams) -> dyn.WWModel:
    return dyn.WWModel(params)


_PAIR_BLOCKS = {
    "A1P1|A2P2": ((0, 1), (2, 3)),
    "A1A2|P1P2": ((0, 2), (1, 3)),
    "A1P2|P1A2": ((0, 3), (1, 2)),
}


def _row_jc(spec: SweepSpec, theta: float, jt: float) -> list:
    psi = dyn.jc_state(theta, jt)
    comp = measures.sigma_components(psi, dyn.ATOMS, dyn.PHOTONS)
    return [theta, jt, max(0.0, comp.q_atoms), max(0.0, comp.q_photons), comp.c4, comp.sigma]


def _row_invariant(spec: SweepSpec, theta: float, jt: float) -> list:
    comp = dyn.invariant_sigma_components(theta, jt)
    s2 = math.sin(2 * theta)
    return [theta, jt, comp.q_atoms, comp.q_photons, comp.c4, comp.sigma, s2, abs(comp.sigma - s2)]


def _row_ww(spec: SweepSpec, theta: float, gt: float) -> list:
    model = _ww_model(spec.ww_params())
    comp = dyn.invariant_sigma_components(theta, gt / spec.Gamma, model)
    return [theta, gt, max(0.0, comp.q_atoms), max(0.0, comp.q_photons), comp.c4, comp.sigma]


def _row_hierarchy(spec: SweepSpec, theta: float, jt: float) -> list:
    psi = dyn.jc_state(theta, jt)
    rep = geoment.hierarchy(psi, geoment.GEOptions(spec.restarts, spec.ge_max_iter, spec.ge_tol, spec.seed))
    rge = [rep.rge[2][Partition(b)] for b in _PAIR_BLOCKS.values()]
    return [theta, jt, rep.age[2], rep.age[3], rep.age[4], *rge, int(not rep.converged)]


def _row_discord(spec: SweepSpec, theta: float, jt: float) -> list:
    psi = dyn.jc_state(theta, jt)
    pairs = measures.discord_pure_bipartition(psi, Partition(_PAIR_BLOCKS["A1P1|A2P2"]))
    aa_pp = measures.discord_pure_bipartition(psi, Partition(_PAIR_BLOCKS["A1A2|P1P2"]))
    opts = measures.DiscordOptions(grid=spec.discord_grid, seed=spec.seed)
    d_aa = measures.discord_two_qubit(reduced_state(psi, dyn.ATOMS), opts)
    return [theta, jt, pairs, aa_pp, d_aa.value, int(not d_aa.converged)]


def _row_age4(spec: SweepSpec, theta: float, jt: float) -> list:
    opts = geoment.GEOptions(spec.restarts, spec.ge_max_iter, spec.ge_tol, spec.seed)
    res = geoment.absolute_ge(dyn.jc_state(theta, jt), 4, opts)
    return [theta, jt, res.energy, int(not res.converged)]


_COLUMNS = {
    "jc": ["theta", "Jt", "C_AA", "C_PP", "C4", "Sigma"],
    "invariant": ["theta", "Jt", "Q_AA", "Q_PP", "C4", "Sigma", "sin2theta", "abs_error"],
    "ww": ["theta", "Gamma_t", "C_AA", "C_PP", "C4", "Sigma"],
    "hierarchy": ["theta", "Jt", "E_AGE2", "E_AGE3", "E_AGE4"]
    + [f"E_RGE({k})" for k in _PAIR_BLOCKS]
    + ["unconverged"],
    "discord": ["theta", "Jt", "Q(A1P1|A2P2)", "Q(A1A2|P1P2)", "D_AA", "unconverged"],
    "age4-surface": ["theta", "Jt", "E_AGE4", "unconverged"],
    "partition-scan": ["theta", "dnu/Gamma", "chi_sq", "C_PP", "Q_PP", "product_form"],
}

_KERNELS: dict[str, Callable[[SweepSpec, float, float], list]] = {
    "jc": _row_jc,
    "invariant": _row_invariant,
    "ww": _row_ww,
    "hierarchy": _row_hierarchy,
    "discord": _row_discord,
    "age4-surface": _row_age4,
}


def _task(args):
    spec, theta, t = args
    return _KERNELS[spec.experiment](spec, theta, t)


def _map(fn, items: list, workers: int) -> list:
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


# ------------------------------------------------------------- experiments


@dataclass
class Table:
    columns: list[str]
    rows: list[list]
    metadata: dict[str, Any] = field(default_factory=dict)


def _ww_metadata(spec: SweepSpec) -> dict[str, Any]:
    model = _ww_model(spec.ww_params())
    meta = {}
    for th in spec.thetas:
        key = f"theta={_fmt(th)}"
        if th <= math.pi / 4 or th >= math.pi / 2:
            meta[key] = {"t_d": "none", "t_b": "none"}
            continue
        meta[key] = {
            "t_d_formula": dyn.esd_death_time(th, spec.Gamma),
            "t_d_numeric": dyn.esd_death_time_numeric(th, model),
            "t_b_formula": dyn.esb_birth_time(th, spec.Gamma),
            "t_b_numeric": dyn.esb_birth_time_numeric(th, model),
        }
    return meta


def _partition_scan(spec: SweepSpec) -> Table:
    p = spec.ww_params()
    model = _ww_model(p)
    grid = np.linspace(0.0, spec.dnu_max, spec.dnu_steps) * spec.Gamma
    rows, meta = [], {}
    for th in spec.thetas:
        scan = dyn.partition_scan(th, model, grid)
        for r in scan:
            rows.append([th, r.delta_nu / spec.Gamma, r.chi_sq, r.c_pp, r.q_pp, r.product_form])
        key = f"theta={_fmt(th)}"
        tr = dyn.scan_transition(scan)
        entry = {"transition_dnu/Gamma": "none" if tr is None else tr / spec.Gamma}
        if math.pi / 4 <= th < math.pi / 2:
            thr = dyn.bandwidth_threshold(th)
            entry["bandwidth_threshold"] = thr
            entry["threshold_dnu/Gamma_at_emission_linewidth"] = thr * dyn.emission_linewidth(p) / spec.Gamma
        meta[key] = entry
    return Table(_COLUMNS["partition-scan"], rows, meta)


def run(spec: SweepSpec, workers: int = 1) -> Table:
    spec.validate()
    if spec.experiment == "partition-scan":
        return _partition_scan(spec)
    items = [(spec, th, t) for th in spec.thetas for t in spec.times()]
    rows = _map(_task, items, workers)
    meta: dict[str, Any] = {}
    if spec.experiment == "ww":
        meta = _ww_metadata(spec)
    elif spec.experiment == "invariant":
        meta = {"max_abs_error": max(r[-1] for r in rows)}
    elif spec.experiment == "discord":
        meta = {f"theta={_fmt(th)}": {"H2(cos^2 theta)": binary_entropy(math.cos(th) ** 2)} for th in spec.thetas}
    elif spec.experiment == "hierarchy":
        meta = {"unconverged_rows": sum(r[-1] for r in rows)}
    return Table(_COLUMNS[spec.experiment], rows, meta)


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (float, np.floating)):
        return float(format(float(x), ".12g"))
    if isinstance(x, (np.integer, np.bool_)):
        return int(x)
    return x


def render(table: Table, spec: SweepSpec) -> str:
    resolved = _jsonable(spec.resolved())
    if spec.format == "json":
        doc = {
            "spec": resolved,
            "metadata": _jsonable(table.metadata),
            "columns": table.columns,
            "rows": _jsonable(table.rows),
        }
        return json.dumps(doc, indent=1, sort_keys=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# esdkit {spec.experiment}\n")
    buf.write("# spec: " + json.dumps(resolved, sort_keys=True) + "\n")
    for k, v in table.metadata.items():
        buf.write(f"# {k}: " + json.dumps(_jsonable(v), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for r in table.rows:
        w.writerow([_fmt(x) for x in r])
    return buf.getvalue()


# ------------------------------------------------------------------- argv


_FLAG_FIELDS = {
    "theta": "thetas",
    "t_max": "t_max",
    "steps": "steps",
    "seed": "seed",
    "out": "out",
    "format": "format",
    "J": "J",
    "gamma": "Gamma",
    "modes": "modes",
    "bandwidth": "bandwidth",
    "restarts": "restarts",
    "discord_grid": "discord_grid",
    "dnu_max": "dnu_max",
    "dnu_steps": "dnu_steps",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esdkit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--theta", type=parse_angles, help="comma-separated angles, e.g. pi/4,2pi/5")
        p.add_argument("--t-max", dest="t_max", type=float, help="Jt (JC) or Gamma*t (WW) upper bound")
        p.add_argument("--steps", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--config", help="JSON file with SweepSpec fields")
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--J", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--modes", type=int)
        p.add_argument("--bandwidth", type=float, help="half-bandwidth W in units of Gamma")
        p.add_argument("--restarts", type=int)
        p.add_argument("--discord-grid", dest="discord_grid", type=int)
        p.add_argument("--dnu-max", dest="dnu_max", type=float, help="in units of Gamma")
        p.add_argument("--dnu-steps", dest="dnu_steps", type=int)
    return parser


def resolve_spec(args: argparse.Namespace) -> SweepSpec:
    fields: dict[str, Any] = dict(_DEFAULTS[args.command])
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config: {exc}") from exc
        if not isinstance(cfg, dict):
            raise SpecError("config must be a JSON object")
        cfg.pop("experiment", None)
        if "thetas" in cfg and isinstance(cfg["thetas"], str):
            cfg["thetas"] = parse_angles(cfg["thetas"])
        unknown = set(cfg) - set(SweepSpec.__dataclass_fields__)
        if unknown:
            raise SpecError(f"unknown config fields: {sorted(unknown)}")
        fields.update(cfg)
    for flag, name in _FLAG_FIELDS.items():
        val = getattr(args, flag, None)
        if val is not None:
            fields[name] = val
    try:
        spec = SweepSpec(experiment=args.command, **fields)
    except TypeError as exc:
        raise SpecError(str(exc)) from exc
    spec.validate()
    return spec


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        spec = resolve_spec(args)
        table = run(spec, workers=max(1, args.workers))
    except SpecError as exc:
        print(f"esdkit: invalid spec: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RuntimeError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"esdkit: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    text = render(table, spec)
    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
