"""Command-line front end: eval, sweep, validate and optimize.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 validation z-score above the limit.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace

from . import analytic, montecarlo
from .config import ConfigError, ExperimentConfig, load_config
from .placement import optimize_corridor, write_surface_csv
from .specfun import NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VALIDATE = 0, 2, 3, 4

SWEEP_COLUMNS = ["axis", "value", "scheme", "jamming", "eavesdropper", "sop_analytic", "sop_mc", "mc_std_err"]


def fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return f"{v:.10g}"
    return str(v)


def _apply_axis(ec: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    if axis == "psi":
        return ec.with_system(psi_db=value)
    if axis == "U":
        return ec.with_system(U=int(value))
    if axis == "r_c":
        return ec.with_system(disc_radius=value, eavesdropper_mode="random")
    if axis == "eve_position_index":
        pos = ec.eve_positions[int(value) - 1]
        return ec.with_system(eavesdropper=[pos.x, pos.y, pos.z], eavesdropper_mode="fixed")
    return ec.with_system(**{axis: value})


def _analytic(ec: ExperimentConfig, scheme, jamming):
    q = analytic.SopQuery(scheme, jamming, ec.cfg, ec.scenario, ec.eavesdropper_mode)
    return analytic.evaluate(q, ec.control)


def _mc(ec: ExperimentConfig, threads: int):
    return montecarlo.estimate_all(ec.plan, ec.scenario, ec.cfg, tuple(ec.cases), threads)


def _writer(out):
    return csv.writer(out, lineterminator="\n")


def _emit(text: str, path: str | None):
    if path:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_eval(ec: ExperimentConfig, threads: int = 1, out: str | None = None) -> int:
    rows = []
    mc = _mc(ec, threads) if "mc" in ec.methods else {}
    for scheme, jam in ec.cases:
        if "analytic" in ec.methods:
            r = _analytic(ec, scheme, jam)
            label = "analytic_bound" if ec.eavesdropper_mode == "random" else "analytic"
            rows.append([scheme.value, jam, label, r.definition, r.value, None])
        if "mc" in ec.methods:
            e = mc[(scheme, jam)]
            rows.append([scheme.value, jam, "mc", ec.plan.sop_definition, e.p_hat, e.std_err])
    for r in rows:
        print(f"scheme={r[0]} jamming={fmt(r[1])} method={r[2]} definition={r[3]} "
              f"eavesdropper={ec.eavesdropper_mode} sop={fmt(r[4])}" + (f" std_err={fmt(r[5])}" if r[5] is not None else ""))
    if out:
        buf = io.StringIO()
        w = _writer(buf)
        w.writerow(["scheme", "jamming", "method", "definition", "sop", "std_err"])
        for r in rows:
            w.writerow([fmt(x) for x in r])
        _emit(buf.getvalue(), out)
    return EXIT_OK


def sweep_rows(ec: ExperimentConfig, threads: int = 1):
    axis = ec.sweep["axis"]
    for value in ec.sweep["values"]:
        sub = _apply_axis(ec, axis, value)
        mc = _mc(sub, threads) if "mc" in sub.methods else {}
        for scheme, jam in sub.cases:
            a = None
            if "analytic" in sub.methods:
                try:
                    a = _analytic(sub, scheme, jam).value
                except NumericalError as exc:
                    raise NumericalError(f"sweep {axis}={value} {scheme.value} jamming={jam}: {exc}") from exc
            e = mc.get((scheme, jam))
            yield [axis, value, scheme.value, jam, sub.eavesdropper_mode, a,
                   None if e is None else e.p_hat, None if e is None else e.std_err]


def cmd_sweep(ec: ExperimentConfig, threads: int = 1, out: str | None = None) -> int:
    if ec.sweep is None:
        raise ConfigError(["sweep: required for the sweep command"])
    buf = io.StringIO()
    w = _writer(buf)
    w.writerow(SWEEP_COLUMNS)
    for row in sweep_rows(ec, threads):
        w.writerow([fmt(x) for x in row])
    _emit(buf.getvalue(), out or ec.output)
    return EXIT_OK


def z_score(a: float, p_hat: float, se: float, trials: int) -> float:
    if se == 0.0:
        # p_hat is 0 or 1; fall back to the binomial spread implied by the analytic value
        se = math.sqrt(max(a * (1.0 - a), 1.0 / trials) / trials)
    return abs(a - p_hat) / se


def cmd_validate(ec: ExperimentConfig, threads: int = 1, out: str | None = None) -> int:
    # the analytic expressions target the asymptotic definition, so MC uses it too
    configs = [ec] + [ec.with_system(**o) for o in ec.validate.get("overrides", [])]
    limit = float(ec.validate.get("z_limit", 4.0))
    lines = ["config scheme jamming eavesdropper analytic mc std_err z"]
    max_z = 0.0
    for i, sub in enumerate(configs):
        sub = replace(sub, plan=replace(sub.plan, sop_definition="asymptotic"))
        mc = _mc(sub, threads)
        for scheme, jam in sub.cases:
            try:
                a = _analytic(sub, scheme, jam).value
            except NumericalError as exc:
                raise NumericalError(f"validate config {i} {scheme.value} jamming={jam}: {exc}") from exc
            e = mc[(scheme, jam)]
            z = z_score(a, e.p_hat, e.std_err, e.trials)
            max_z = max(max_z, z)
            lines.append(f"{i} {scheme.value} {fmt(jam)} {sub.eavesdropper_mode} {fmt(a)} {fmt(e.p_hat)} "
                         f"{fmt(e.std_err)} {fmt(z)}")
    lines.append(f"VALIDATE max_z={max_z:.6g}")
    text = "\n".join(lines) + "\n"
    if out:
        _emit(text, out)
    sys.stdout.write(text)
    return EXIT_OK if max_z <= limit else EXIT_VALIDATE


def cmd_optimize(ec: ExperimentConfig, threads: int = 1, out: str | None = None) -> int:
    if ec.scenario.disc is None:
        raise ConfigError(["geometry/disc_radius: required for the optimize command"])
    res = optimize_corridor(ec.placement, ec.scenario, ec.cfg, threads, ec.control)
    write_surface_csv(res, out or ec.output or sys.stdout, with_theta=len(ec.placement.thetas) > 1)
    b = res.best.position
    print(f"BEST x={fmt(b.x)} y={fmt(b.y)} z={fmt(b.z)} theta={fmt(res.best.theta)} sop={fmt(res.best.sop)}")
    for cell, err in res.failures.items():
        print(f"FAILED cell x={fmt(cell[0])} H={fmt(cell[1])} theta={fmt(cell[2])}: {err}", file=sys.stderr)
    return EXIT_OK


COMMANDS = {"eval": cmd_eval, "sweep": cmd_sweep, "validate": cmd_validate, "optimize": cmd_optimize}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="swarm-sop", description="Secrecy outage of a wireless-powered UAV swarm relay")
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="JSON experiment file")
    ap.add_argument("--threads", type=int, default=1, help="worker count (does not change results)")
    ap.add_argument("--seed", type=int, default=None, help="override mc.seed")
    ap.add_argument("--out", default=None, help="output path (CSV or report)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError(["--threads: must be >= 1"])
        ec = load_config(args.config)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError(["--seed: must be >= 0"])
            ec = ec.with_system(seed=args.seed)
        return COMMANDS[args.command](ec, args.threads, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
