"""Command-line driver: ``gpscatter <command> [--config PATH] [flags]``.

Every command writes ``config.json`` (the effective configuration), a JSON
report and, where meaningful, CSV tables into ``--out``.  Exit status: 0 on
success, 1 when an acceptance tolerance is breached, 2 for invalid input.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import COMMAND_DEFAULTS, ConfigError, ExperimentConfig, load_file
from .grid import Grid, SpectralField, random_field, write_snapshot
from .linear import (
    WrapAroundError,
    block_profile,
    decay_fit,
    decay_fit_oracle,
    envelope_bound,
    permode_oracle,
    propagate_u_linear,
    StationaryPhaseQuery,
    stationary_phase_oracle,
    strichartz_ratio,
)
from .multipliers import (
    Q,
    ZeroModeState,
    apply_array,
    dispersion_values,
    operator_identity_residuals,
    twist_residual,
)
from .normal_form import SmallnessViolated, q_split, w_identity_residual
from .evolve import (
    BlowupGuard,
    HorizonError,
    SolveConfig,
    bilipschitz_probe,
    evolve,
    make_datum,
    scatter_forward,
    wave_operator_approx,
)
from .besov import hs_norm
from .estimates import builtin_cases, first_invalid_sigma, trilinear_suite, verification_lines

CSV_VERSION = 1


class Breach(Exception):
    """An acceptance tolerance was not met."""


# --- output helpers --------------------------------------------------------

def write_csv(path: Path, name: str, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# gpscatter {name} v{CSV_VERSION} columns={','.join(columns)}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(x) for x in r])


def _fmt(x):
    if isinstance(x, float):
        return repr(x)
    return x


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_clean(data), indent=2, sort_keys=True) + "\n")


def _grid(cfg: ExperimentConfig) -> Grid:
    return Grid(int(cfg["grid.d"]), int(cfg["grid.N"]), float(cfg["grid.L"]))


def _solve(cfg: ExperimentConfig) -> SolveConfig:
    return SolveConfig(dt=float(cfg["solve.dt"]), T=float(cfg["solve.T"]), sigma=float(cfg["solve.sigma"]), s=cfg["solve.s"])


def _datum(cfg: ExperimentConfig, grid: Grid, seed: int | None = None) -> SpectralField:
    seed = int(cfg["data.seed"]) if seed is None else seed
    return make_datum(grid, cfg["data.profile"], float(cfg["data.amplitude"]), seed, float(cfg["data.width"]))


def _q(value) -> float:
    return math.inf if value in ("inf", "Infinity", None) else float(value)


# --- commands --------------------------------------------------------------

def identity_suite(grid: Grid, seed: int = 0, trials: int = 10) -> dict[str, float]:
    """Worst residual of each roundoff-level identity over seeded random fields."""
    flat = lambda r: np.exp(-0.1 * r**2)
    half = grid.dealias_mask("1/2")
    out = {"operator": 0.0, "twist": 0.0, "w_identity": 0.0, "q_split": 0.0, "linear_vs_oracle": 0.0}
    for n in range(trials):
        u = random_field(grid, flat, seed + n)
        c = u.coefficients().copy()
        c.flat[0] = 0.0
        u = SpectralField(grid, c, rep="frequency").to_physical()
        out["operator"] = max(out["operator"], *operator_identity_residuals(u))
        cd = random_field(grid, flat, seed + n + 10_000).coefficients().copy()
        cd.flat[0] = 0.0
        ud = SpectralField(grid, cd, rep="frequency").to_physical()
        out["twist"] = max(out["twist"], twist_residual(u, ud))
        w = SpectralField(grid, c * half, rep="frequency").to_physical()
        w = w * (0.1 / float(np.max(np.abs(w.physical()))))
        out["w_identity"] = max(out["w_identity"], w_identity_residual(w))
        u2 = SpectralField(grid, np.ascontiguousarray(w.physical().imag), real=True)
        a, b = q_split(u2)
        f = u2.physical()
        ref = apply_array(Q, grid, f * f)
        scale = max(float(np.max(np.abs(ref))), 1e-300)
        out["q_split"] = max(out["q_split"], float(np.max(np.abs(a.physical() + b.physical() - ref)) / scale))
    u = random_field(grid, flat, seed)
    mean = ZeroModeState(0.3, -0.2)
    ex, m = propagate_u_linear(u, mean, 1.0)
    orc = permode_oracle(u, 1.0, 10_000, mean).physical()
    out["linear_vs_oracle"] = float(np.max(np.abs(ex.physical() + m.value - orc)))
    return out


IDENTITY_TOLERANCES = {"operator": 1e-12, "twist": 1e-11, "w_identity": 1e-10, "q_split": 1e-12, "linear_vs_oracle": 1e-8}


def cmd_verify_identities(cfg: ExperimentConfig, out: Path, args) -> dict:
    grid = _grid(cfg)
    res = identity_suite(grid, int(cfg["data.seed"]))
    scale = float(cfg["tol_scale"])
    rows = [(k, v, IDENTITY_TOLERANCES[k] * scale, v <= IDENTITY_TOLERANCES[k] * scale) for k, v in res.items()]
    write_csv(out / "identities.csv", "identities", ["identity", "residual", "tolerance", "pass"], rows)
    report = {"residuals": res, "tolerances": {k: t * scale for k, t in IDENTITY_TOLERANCES.items()}}
    write_json(out / "identities.json", report)
    failed = [r[0] for r in rows if not r[3]]
    if failed:
        raise Breach(f"identities above tolerance: {', '.join(failed)}")
    return report


def _decay_times(cfg: ExperimentConfig) -> np.ndarray:
    t = cfg["decay.times"]
    return np.logspace(1, 2, 6) if t is None else np.asarray(t, dtype=float)


def cmd_linear_decay(cfg: ExperimentConfig, out: Path, args) -> dict:
    d, R = int(cfg["grid.d"]), float(cfg["decay.R"])
    q = _q(cfg["decay.q"])
    times = _decay_times(cfg)
    if cfg["decay.route"] == "oracle":
        if not math.isinf(q):
            raise ConfigError("the oracle route measures the sup norm only (decay.q = inf)")
        fit = decay_fit_oracle(d, R, times)
    elif cfg["decay.route"] == "grid":
        grid = _grid(cfg)
        phi0 = SpectralField(grid, block_profile(grid.kmag, R).astype(complex), rep="frequency")
        fit = decay_fit(phi0, q, times)
    else:
        raise ConfigError(f"decay.route must be 'oracle' or 'grid', got {cfg['decay.route']!r}")
    env = envelope_bound(d, R, np.asarray(fit.times))
    write_csv(out / "decay.csv", "decay", ["t", "norm", "envelope"], zip(map(float, fit.times), map(float, fit.norms), map(float, env)))
    write_json(out / "fit.json", fit.to_json())
    if abs(fit.exponent - fit.predicted) > 0.1 * float(cfg["tol_scale"]):
        raise Breach(f"fitted exponent {fit.exponent:.4f} vs predicted {fit.predicted:.4f}")
    return fit.to_json()


def cmd_stationary_phase(cfg: ExperimentConfig, out: Path, args) -> dict:
    d, R = int(cfg["grid.d"]), float(cfg["decay.R"])
    rows = []
    for t in _decay_times(cfg):
        _, v, _ = dispersion_values(R)
        x = v * float(t)
        val = stationary_phase_oracle(StationaryPhaseQuery(d, R, x, float(t)))
        rows.append((float(t), x, val.value.real, val.value.imag, abs(val.value), val.error, val.converged, float(envelope_bound(d, R, t))))
    cols = ["t", "x", "re", "im", "abs", "error", "converged", "envelope"]
    write_csv(out / "stationary_phase.csv", "stationary-phase", cols, rows)
    report = {"points": len(rows), "all_converged": all(r[6] for r in rows)}
    write_json(out / "stationary_phase.json", report)
    if not report["all_converged"]:
        raise Breach("oscillatory quadrature did not converge at every point")
    return report


def cmd_strichartz(cfg: ExperimentConfig, out: Path, args) -> dict:
    grid = _grid(cfg)
    d = grid.d
    q = _q(cfg["strichartz.q"])
    p = cfg["strichartz.p"]
    if p is None:
        p = 2.0 / (d / 2 - (0.0 if math.isinf(q) else d / q))
    p = _q(p)
    phi0 = SpectralField(grid, block_profile(grid.kmag, float(cfg["decay.R"])).astype(complex), rep="frequency")
    T = float(cfg["solve.T"])
    rows = [(Tk, strichartz_ratio(phi0, p, q, Tk, float(cfg["solve.dt"]))) for Tk in (T / 4, T / 2, T)]
    write_csv(out / "strichartz.csv", "strichartz", ["T", "ratio"], rows)
    report = {"p": p, "q": q, "ratios": [r[1] for r in rows]}
    write_json(out / "strichartz.json", report)
    return report


def _scatter_ok(c: list[float], scale: float) -> bool:
    if not c or c[0] <= 1e-12:
        return all(x <= 1e-12 for x in c)
    mono = all(c[k + 1] <= c[k] for k in range(len(c) - 1))
    return mono and c[-1] <= 0.2 * scale * c[0]


def cmd_scatter(cfg: ExperimentConfig, out: Path, args) -> dict:
    grid = _grid(cfg)
    sc = _solve(cfg)
    diag = scatter_forward(_datum(cfg, grid), sc)
    rows = [(r["t"], r["sup"], r["v_norm"]) for r in diag.records]
    write_csv(out / "trajectory.csv", "trajectory", ["t", "sup", "v_norm"], rows)
    crow = [(diag.times[k], diag.times[k + 1], diag.cauchy_v[k], diag.cauchy_z[k]) for k in range(len(diag.cauchy_v))]
    write_csv(out / "cauchy.csv", "cauchy", ["t_k", "t_k1", "c_v", "c_z"], crow)
    report = diag.to_json()
    write_json(out / "scatter.json", report)
    if args.snapshots:
        write_snapshot(out / "v_plus.gpsf", diag.v_plus)
        write_snapshot(out / "z_plus.gpsf", diag.z_plus)
    if not _scatter_ok(diag.cauchy_v, float(cfg["tol_scale"])):
        raise Breach(f"Cauchy differences {diag.cauchy_v} are not decaying as required")
    return report


def cmd_evolve(cfg: ExperimentConfig, out: Path, args) -> dict:
    grid = _grid(cfg)
    sc = _solve(cfg)
    u0 = _datum(cfg, grid)
    traj = evolve(u0, sc, identities=True)
    cols = ["t", "sup", "v_norm", "w_residual"]
    write_csv(out / "trajectory.csv", "trajectory", cols, ([r[c] for c in cols] for r in traj.records))
    report = {"steps": len(traj.records) - 1, "guard_breached": traj.guard_breached, "final_sup": traj.records[-1]["sup"]}
    write_json(out / "evolve.json", report)
    if args.snapshots:
        write_snapshot(out / "u0.gpsf", u0)
        write_snapshot(out / "uT.gpsf", SpectralField(grid, traj.final))
    return report


def cmd_wave_operator(cfg: ExperimentConfig, out: Path, args) -> dict:
    grid = _grid(cfg)
    sc = _solve(cfg)
    s = cfg.s
    vp = _datum(cfg, grid).replace(frame="v")
    wo = wave_operator_approx(vp, sc.T, sc)
    back = scatter_forward(wo.u0, sc)
    nv = hs_norm(grid, vp.physical(), sc.sigma, s)
    err = hs_norm(grid, back.z_plus.physical() - vp.physical(), sc.sigma, s) / nv if nv > 0 else 0.0
    report = {**wo.to_json(), "round_trip": err}
    write_json(out / "wave_operator.json", report)
    if args.snapshots:
        write_snapshot(out / "u0.gpsf", wo.u0)
    if err > 0.1 * float(cfg["tol_scale"]):
        raise Breach(f"wave-operator round trip error {err:.3g} exceeds 0.1")
    return report


def cmd_estimates(cfg: ExperimentConfig, out: Path, args) -> dict:
    d = int(cfg["grid.d"])
    sigma = float(cfg["solve.sigma"])
    trials = int(cfg["estimates.trials"])
    if trials <= 0:
        raise ConfigError("estimates.trials must be positive")
    cases = builtin_cases(d, sigma)
    lines = verification_lines(d, sigma)
    rows = []
    for c, _ in cases:
        for a, sl in enumerate(c.slots, 1):
            rows.append((c.name, a, str(sl.p), str(sl.s), str(sl.t)))
    write_csv(out / "cases.csv", "cases", ["case", "slot", "p", "s", "t"], rows)
    validity = {
        c.name: {**rep.to_json(), "line": [i.to_json() for i in lines[c.name]]} for c, rep in cases
    }
    suite = trilinear_suite(_grid(cfg), sigma, trials, int(cfg["data.seed"]))
    write_csv(out / "ratios.csv", "trilinear", ["case", "spread", "max_ratio"], suite.rows())
    first = first_invalid_sigma(d)
    report = {"validity": validity, "first_invalid_sigma_case1": str(first), "max_ratio": {f"{c}@{m}": r for c, m, r in suite.rows()}}
    write_json(out / "estimates.json", report)
    growth = {c: suite.growth(c, 2, 4) for c in {k for k, _ in suite.max_ratio}}
    bad = [c for c, g in growth.items() if not g < 2.0 * float(cfg["tol_scale"])]
    if bad:
        raise Breach(f"ratio growth >= 2 under spread doubling for {bad}")
    return report


def cmd_bilipschitz(cfg: ExperimentConfig, out: Path, args) -> dict:
    grid = _grid(cfg)
    sc = _solve(cfg)
    seed = int(cfg["data.seed"])
    pairs = [(_datum(cfg, grid, seed + 2 * i), _datum(cfg, grid, seed + 2 * i + 1)) for i in range(int(cfg["bilipschitz.pairs"]))]
    stats = bilipschitz_probe(pairs, sc)
    write_json(out / "bilipschitz.json", stats.to_json())
    if stats.ratios and not (0.5 <= stats.min and stats.max <= 2.0):
        raise Breach(f"bi-Lipschitz ratios [{stats.min:.3g}, {stats.max:.3g}] leave [1/2, 2]")
    return stats.to_json()


COMMANDS = {
    "verify-identities": cmd_verify_identities,
    "linear-decay": cmd_linear_decay,
    "stationary-phase": cmd_stationary_phase,
    "strichartz": cmd_strichartz,
    "scatter": cmd_scatter,
    "evolve": cmd_evolve,
    "wave-operator": cmd_wave_operator,
    "estimates": cmd_estimates,
    "bilipschitz": cmd_bilipschitz,
}
assert set(COMMANDS) == set(COMMAND_DEFAULTS)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gpscatter", description="Scattering diagnostics for the Gross-Pitaevskii perturbation equation.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path)
        p.add_argument("--out", type=Path, default=Path("out") / name)
        p.add_argument("--seed", type=int)
        p.add_argument("--d", type=int)
        p.add_argument("--N", type=int)
        p.add_argument("--L", type=float)
        p.add_argument("--sigma", type=float)
        p.add_argument("--s", type=float)
        p.add_argument("--tol-scale", type=float)
        p.add_argument("--snapshots", action="store_true")
    return ap


def _overrides(args) -> dict:
    pairs = {
        "data.seed": args.seed,
        "grid.d": args.d,
        "grid.N": args.N,
        "grid.L": args.L,
        "solve.sigma": args.sigma,
        "solve.s": args.s,
        "tol_scale": args.tol_scale,
    }
    return {k: v for k, v in pairs.items() if v is not None}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        file_values = load_file(args.config) if args.config else {}
        cfg = ExperimentConfig.build(args.command, file_values, _overrides(args), out=str(args.out))
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.dump(out / "config.json")
    try:
        report = COMMANDS[args.command](cfg, out, args)
    except Breach as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, WrapAroundError, HorizonError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BlowupGuard, SmallnessViolated) as exc:
        print(f"FAIL: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(_clean(report), sort_keys=True)[:2000])
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
