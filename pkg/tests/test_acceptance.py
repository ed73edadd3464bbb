"""Acceptance suite: one test per criterion, each printing a single
CRITERION n PASS/FAIL line (also collected in the terminal summary)."""

import json
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from conftest import VERDICTS, baseline_scenario
from swarm_sop import analytic as A
from swarm_sop import cli, montecarlo as M
from swarm_sop import specfun as sf
from swarm_sop.composite import max_gain_dist, sum_gain_dist
from swarm_sop.config import bundled_config_path, from_dict, load_config
from swarm_sop.fading import (ShadowedRicianParams, rayleigh_gain_cdf, sample_rayleigh_gain, sample_sr_gain,
                              sr_cdf_mixture, sr_pdf_mixture)
from swarm_sop.geometry import NodePosition
from swarm_sop.placement import optimize_corridor
from swarm_sop.protocol import Scheme, SystemConfig

sys.path.insert(0, str(Path(__file__).parent))
import mp_refs as R  # noqa: E402

CASES = M.CASES
Z_LIMIT = 4.0


def verdict(n, ok, detail):
    line = f"CRITERION {n} {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    VERDICTS[str(n)] = line
    return ok


def analytic_all(cfg, sc, mode="fixed"):
    return {c: A.evaluate(A.SopQuery(c[0], c[1], cfg, sc, mode)).value for c in CASES}


def z_table(cfg, sc, plan):
    a = analytic_all(cfg, sc, plan.eavesdropper)
    e = M.estimate_all(plan, sc, cfg)
    return {c: (a[c], e[c].p_hat, cli.z_score(a[c], e[c].p_hat, e[c].std_err, e[c].trials)) for c in CASES}


def analytic_config(name):
    raw = json.loads(bundled_config_path(name).read_text())
    raw["methods"] = ["analytic"]
    raw["cases"] = [{"scheme": s.value, "jamming": j} for s, j in CASES]
    return from_dict(raw)


def sweep_table(ec, threads=1):
    """{(scheme, jamming): [(value, analytic, mc), ...]} from the CLI sweep driver."""
    out = {}
    for axis, v, scheme, jam, _, a, p, _ in cli.sweep_rows(ec, threads):
        out.setdefault((Scheme(scheme), jam), []).append((v, a, p))
    return out


# -- 1 ---------------------------------------------------------------------------------


def test_criterion_1_baseline_oracle_equivalence():
    ec = load_config(bundled_config_path("baseline.json"))
    t0 = time.perf_counter()
    tab = z_table(ec.cfg, ec.scenario, ec.plan)
    dt = time.perf_counter() - t0
    worst = max(z for _, _, z in tab.values())
    detail = " ".join(f"{s.value}{int(j)}:a={a:.6f},mc={p:.6f},z={z:.2f}" for (s, j), (a, p, z) in tab.items())
    ok = worst <= Z_LIMIT and dt < 300
    verdict(1, ok, f"max|z|={worst:.3f} runtime={dt:.1f}s trials={ec.plan.trials} {detail}")
    assert ok


# -- 2 ---------------------------------------------------------------------------------


def random_configs(n, seed=2024):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        cfg = SystemConfig.from_db(float(rng.uniform(20, 40)), alpha=float(rng.uniform(0.2, 0.9)),
                                   U=int(rng.integers(1, 6)))
        fad = ShadowedRicianParams(m_S=int(rng.integers(1, 6)))
        sc = baseline_scenario().with_(
            fading=fad,
            swarm=NodePosition(float(rng.uniform(300, 600)), 300.0, float(rng.uniform(60, 120))),
            eavesdropper=NodePosition(float(rng.uniform(300, 700)), float(rng.uniform(200, 600)), 0.0))
        out.append((cfg, sc))
    return out


def test_criterion_2_randomized_oracle_equivalence():
    worst, rows, bad = 0.0, 0, []
    for i, (cfg, sc) in enumerate(random_configs(16)):
        tab = z_table(cfg, sc, M.McPlan(trials=10**6, seed=100 + i))
        for c, (a, p, z) in tab.items():
            rows += 1
            worst = max(worst, z)
            if z > Z_LIMIT:
                bad.append(f"cfg{i}/{c[0].value}{int(c[1])}:z={z:.2f}")
    ok = not bad
    verdict(2, ok, f"configs=16 evaluations={rows} max|z|={worst:.3f}" + (" breaches=" + ",".join(bad) if bad else ""))
    assert ok


# -- 3 ---------------------------------------------------------------------------------


def _specfun_checks(p):
    u4 = p["frac"] * p["b"]
    c3 = p["b"] if p["pole"] else None
    return {
        "Phi1": (sf.phi1(p["u"], p["v"], p["mu"]), R.phi1(p["u"], p["v"], p["mu"])),
        "Phi1neg": (sf.phi1(p["u"] + 0.05, -p["nv"], p["mu"]), R.phi1(p["u"] + 0.05, -p["nv"], p["mu"])),
        "Phi2": (sf.phi2(p["nv"], p["mu"], p["b"]), R.phi2(p["nv"], p["mu"], p["b"])),
        "Theta1": (sf.theta1(p["v"], p["g"], p["mu"], p["a"], p["b"]), R.theta1(p["v"], p["g"], p["mu"], p["a"], p["b"])),
        "Theta2": (sf.theta2(p["v"], p["g"], p["mu"], p["rho"], p["b"]),
                   R.theta2(p["v"], p["g"], p["mu"], p["rho"], p["b"])),
        "Theta3": (sf.theta3(p["v"], p["g"], p["lam"], p["mu"], p["rho"], p["a"], p["b"], p["xi"], exp_pole=c3),
                   R.theta3(p["v"], p["g"], p["lam"], p["mu"], p["rho"], p["a"], p["b"], p["xi"], c3)),
        "Theta4": (sf.theta4(u4, p["v"], p["g"], p["mu"], p["rho"], p["b"]),
                   R.theta4(u4, p["v"], p["g"], p["mu"], p["rho"], p["b"])),
        "Theta5": (sf.theta5(p["u"], p["v"], p["g"], p["mu"], p["a"], p["b"]),
                   R.theta5(p["u"], p["v"], p["g"], p["mu"], p["a"], p["b"])),
        "Theta6": (sf.theta6(p["u"], p["v"], p["g"], p["mu"], p["a"], p["b"]),
                   R.theta6(p["u"], p["v"], p["g"], p["mu"], p["a"], p["b"])),
        "Theta7": (sf.theta7(p["v"], p["g"], p["mu"], p["rho"], p["a"]), R.theta7(p["v"], p["g"], p["mu"], p["rho"], p["a"])),
    }


def test_criterion_3_special_functions():
    fails, worst = [], {}
    sets = R.draws(np.random.default_rng(33), 50)
    for i, p in enumerate(sets):
        for name, (got, ref) in _specfun_checks(p).items():
            ref = float(ref)
            err = abs(float(got) - ref) / max(1e-8 * abs(ref), 1e-12)
            worst[name] = max(worst.get(name, 0.0), err)
            if not R.close(got, ref):
                fails.append(f"{name}#{i}")
    ok = not fails
    summary = " ".join(f"{k}:{v:.2g}" for k, v in worst.items())
    verdict(3, ok, f"sets=50 per function, worst error/tolerance {summary}" + (f" fails={fails}" if fails else ""))
    assert ok


# -- 4 ---------------------------------------------------------------------------------


def ks_pvalue(x, cdf, chunk=100_000):
    """One-sample KS p-value with the model CDF evaluated in chunks."""
    x = np.sort(np.asarray(x))
    n = x.size
    d = 0.0
    for s in range(0, n, chunk):
        f = np.asarray(cdf(x[s:s + chunk]), dtype=float)
        i = np.arange(s + 1, s + f.size + 1)
        d = max(d, float(np.max(i / n - f)), float(np.max(f - (i - 1) / n)))
    return float(stats.kstwo.sf(d, n))


def test_criterion_4_distributions():
    n = 10**6
    p = ShadowedRicianParams()
    norm = [abs(sr_pdf_mixture(ShadowedRicianParams(m_S=m)).integrate_0_to_inf() - 1) for m in range(1, 11)]
    norm += [abs(max_gain_dist(p, U).pdf.integrate_0_to_inf() - 1) for U in range(1, 11)]
    norm += [abs(sum_gain_dist(p, k).pdf.integrate_0_to_inf() - 1) for k in range(1, 10)]
    rng = np.random.default_rng(44)
    g = sample_sr_gain(p, rng, (n, 5))
    pv = {
        "SR": ks_pvalue(g[:, 0], sr_cdf_mixture(p)),
        "SR_m1": ks_pvalue(sample_sr_gain(ShadowedRicianParams(m_S=1), rng, n), sr_cdf_mixture(ShadowedRicianParams(m_S=1))),
        "Rayleigh": ks_pvalue(sample_rayleigh_gain(rng, n), rayleigh_gain_cdf()),
        "max_of_5": ks_pvalue(g.max(axis=1), max_gain_dist(p, 5).cdf),
        "sum_of_4": ks_pvalue(g[:, 1:].sum(axis=1), sum_gain_dist(p, 4).pdf.integrate_0_to),
    }
    ok = max(norm) <= 1e-10 and min(pv.values()) > 1e-3
    verdict(4, ok, f"max normalisation error={max(norm):.2e} KS p-values (n=1e6): "
            + " ".join(f"{k}={v:.3f}" for k, v in pv.items()))
    assert ok


# -- 5 ---------------------------------------------------------------------------------


def test_criterion_5_sweep_shapes():
    res = {}
    U = sweep_table(analytic_config("sweep_U.json"))
    res["a"] = all(all(b[1] < a[1] for a, b in zip(U[c], U[c][1:])) for c in CASES if c[1])

    al = sweep_table(analytic_config("sweep_alpha.json"))
    arg = {c: min(al[c], key=lambda r: r[1])[0] for c in CASES}
    res["b"] = all((0.45 <= arg[c] <= 0.55) if not c[1] else (0.80 <= arg[c] <= 0.90) for c in CASES)

    eta = sweep_table(analytic_config("sweep_eta_eh.json"))
    mrc_ge_sc = all(m[1] >= s[1] for tab in (al, eta, U) if (Scheme.SC, False) in tab
                    for s, m in zip(tab[(Scheme.SC, False)], tab[(Scheme.MRC, False)]))
    # a single UAV has no jammers, so its "with jamming" point is the no-jamming one
    pairs = [(s, m) for tab in (al, eta, U) for s, m in zip(tab[(Scheme.SC, True)], tab[(Scheme.MRC, True)])
             if not (tab is U and s[0] == 1)]
    gap = max(abs(m[1] - s[1]) for s, m in pairs)
    gap_u1 = abs(U[(Scheme.MRC, True)][0][1] - U[(Scheme.SC, True)][0][1])
    res["c"] = mrc_ge_sc and gap < 0.02

    rc_ec = load_config(bundled_config_path("sweep_r_c.json"))
    raw = json.loads(json.dumps(rc_ec.raw))
    raw["cases"] = [{"scheme": "SC", "jamming": True}, {"scheme": "MRC", "jamming": True}]
    rc = sweep_table(from_dict(raw))
    beyond = [(v, a, p) for c in rc for v, a, p in rc[c] if v > 500]
    res["d"] = bool(beyond) and all(a < 0.1 and p < 0.1 for _, a, p in beyond)
    worst_d = max(max(a, p) for _, a, p in beyond)

    ec = load_config(bundled_config_path("baseline.json"))
    best = optimize_corridor(ec.placement, ec.scenario, ec.cfg, 1, ec.control).best
    pos = (best.position.x, best.position.y, best.position.z)
    res["e"] = pos == (300.0, 300.0, 60.0)

    ok = all(res.values())
    verdict(5, ok, " ".join(f"({k})={'ok' if v else 'FAIL'}" for k, v in res.items())
            + f" | alpha argmin SC0={arg[CASES[0]]} SC1={arg[CASES[1]]} MRC0={arg[CASES[2]]} MRC1={arg[CASES[3]]}"
            + f" max jam |MRC-SC|={gap:.2e} (U=1, no jammers: {gap_u1:.4f}) max SOP(r_c>500, jam)={worst_d:.4f} optimum={pos} sop={best.sop:.5f}")
    assert ok


# -- 6 ---------------------------------------------------------------------------------


def test_criterion_6_dominance_properties():
    checks = {"jamming": True, "scheme": True, "C_th": True, "alpha0": True, "U1": True, "mc_per_trial": True}
    for i, (cfg, sc) in enumerate(random_configs(6, seed=66)):
        v = analytic_all(cfg, sc)
        checks["jamming"] &= v[CASES[1]] <= v[CASES[0]] + 1e-9 and v[CASES[3]] <= v[CASES[2]] + 1e-9
        checks["scheme"] &= v[CASES[0]] <= v[CASES[2]] + 1e-9 and v[CASES[1]] <= v[CASES[3]] + 1e-8
        for c in CASES:
            seq = [A.evaluate(A.SopQuery(c[0], c[1], cfg.with_(C_th=t), sc)).value for t in (0.05, 0.1, 0.2)]
            checks["C_th"] &= seq[0] < seq[1] < seq[2]
        z = analytic_all(cfg.with_(alpha=0.0), sc)
        checks["alpha0"] &= all(x == 1.0 for x in z.values())
        one = analytic_all(cfg.with_(U=1), sc)
        checks["U1"] &= abs(one[CASES[0]] - one[CASES[1]]) < 1e-12 and abs(one[CASES[2]] - one[CASES[3]]) < 1e-12
        out = M.simulate_block(M.block_rng(6, i), 50_000, sc, cfg, M.McPlan())
        checks["mc_per_trial"] &= not (np.any(out[CASES[1]] & ~out[CASES[0]]) or np.any(out[CASES[0]] & ~out[CASES[2]])
                                       or np.any(out[CASES[3]] & ~out[CASES[2]]) or np.any(out[CASES[1]] & ~out[CASES[3]]))
    ok = all(checks.values())
    verdict(6, ok, "configs=6 " + " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in checks.items()))
    assert ok


# -- 7 ---------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def jensen_table():
    cfg = SystemConfig()
    rows = {}
    for r_c in (200.0, 300.0, 500.0):
        sc = baseline_scenario(r_c=r_c)
        b = analytic_all(cfg, sc, "random")
        e = M.estimate_all(M.McPlan(trials=10**6, seed=7, eavesdropper="random"), sc, cfg)
        for c in CASES:
            rows[(r_c, c)] = (b[c], e[c].p_hat, e[c].std_err, b[c] <= e[c].p_hat + 3 * e[c].std_err)
    bad = [f"r_c={int(r)}/{c[0].value}{int(c[1])}:bound={b:.4f}>mc={p:.4f}+3se({(b - p) / se:+.1f}se)"
           for (r, c), (b, p, se, ok) in rows.items() if not ok]
    verdict(7, not bad, f"checked={len(rows)} violations={len(bad)} " + " ".join(bad))
    return rows


def test_criterion_7_jensen_bound_with_jamming(jensen_table):
    assert all(ok for (r, c), (*_, ok) in jensen_table.items() if c[1])


@pytest.mark.xfail(strict=True, reason="without jamming the SOP is concave in the eavesdropper distances near "
                   "saturation, so the mean-distance substitution is not a lower bound at r_c = 200 and 300 m")
def test_criterion_7_jensen_bound_without_jamming(jensen_table):
    assert all(ok for (r, c), (*_, ok) in jensen_table.items() if not c[1])


# -- 8 ---------------------------------------------------------------------------------


def test_criterion_8_sweep_determinism(tmp_path):
    outs = {}
    for name in ("sweep_U.json", "sweep_r_c.json"):
        for threads in (1, 3):
            o = tmp_path / f"{name}.{threads}.csv"
            assert cli.main(["sweep", "--config", str(bundled_config_path(name)), "--threads", str(threads),
                             "--out", str(o)]) == 0
            outs[(name, threads)] = o.read_bytes()
    same = {n: outs[(n, 1)] == outs[(n, 3)] for n in ("sweep_U.json", "sweep_r_c.json")}
    ok = all(same.values())
    verdict(8, ok, " ".join(f"{n}: threads 1 vs 3 {'identical' if s else 'DIFFER'} ({len(outs[(n, 1)])} bytes)"
                            for n, s in same.items()))
    assert ok
