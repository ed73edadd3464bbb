import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

from conftest import baseline_scenario
from swarm_sop import analytic as A
from swarm_sop.fading import ShadowedRicianParams
from swarm_sop.geometry import EavesdropperDisc, NodePosition
from swarm_sop.protocol import Scheme, SystemConfig
from swarm_sop.specfun import NumericalError

sys.path.insert(0, str(Path(__file__).parent))
from oracles import DirectSop  # noqa: E402

CASES = [("SC", False), ("SC", True), ("MRC", False), ("MRC", True)]

# [DERIVED] nested scipy quadrature of the outage event (tests/oracles.py),
# tol 1e-11 (1e-10 for MRC with jamming); see tests/frozen_oracles.json
FROZEN = json.loads((Path(__file__).parent / "frozen_oracles.json").read_text())
FROZEN_CFG = {
    "baseline": (SystemConfig(), ShadowedRicianParams()),
    "U2_alpha05": (SystemConfig(U=2, alpha=0.5), ShadowedRicianParams()),
    "U3_alpha04_psi30_m2": (SystemConfig(U=3, alpha=0.4, psi=1e3), ShadowedRicianParams(m_S=2, b=0.4, Omega=0.6)),
}


def sop(scheme, jam, cfg, sc=None, mode="fixed"):
    return A.evaluate(A.SopQuery(scheme, jam, cfg, sc or baseline_scenario(), mode)).value


@pytest.mark.parametrize("key", sorted(FROZEN))
def test_matches_frozen_oracle(key):
    name, scheme, jam = key.split("/")
    cfg, fad = FROZEN_CFG[name]
    jam = jam == "1"
    # the jamming oracle carries an extra nested quadrature and is only good to ~1e-8
    tol = 3e-8 if jam else 1e-10
    assert sop(scheme, jam, cfg, baseline_scenario().with_(fading=fad)) == pytest.approx(FROZEN[key], abs=tol)


def test_baseline_values_regression():
    # frozen outputs of this implementation, guarding against silent drift
    got = [sop(s, j, SystemConfig()) for s, j in CASES]
    np.testing.assert_allclose(got, [0.734303672289115, 0.07096006797234045, 0.768904415077752,
                                     0.07099958141194869], rtol=1e-9)


LIVE = [
    (SystemConfig(U=1, alpha=0.3, psi=1e2), ShadowedRicianParams(m_S=1, b=0.2, Omega=0.5)),
    (SystemConfig(U=4, alpha=0.9, C_th=0.05), ShadowedRicianParams(m_S=3, b=0.3, Omega=1.2)),
    (SystemConfig(U=2, alpha=0.6, psi=1e3, eta_eh=0.5), ShadowedRicianParams()),
    (SystemConfig(U=5, alpha=0.2, psi=1e3), ShadowedRicianParams(m_S=4, b=0.15, Omega=0.1)),
]


@pytest.mark.parametrize("cfg,fad", LIVE)
@pytest.mark.parametrize("scheme", ["SC", "MRC"])
def test_no_jamming_matches_live_oracle(cfg, fad, scheme):
    sc = baseline_scenario().with_(fading=fad, eavesdropper=NodePosition(420, 500, 0))
    ref = DirectSop(sc.links(), cfg, fad, tol=1e-10).sop(scheme, False)
    assert sop(scheme, False, cfg, sc) == pytest.approx(ref, abs=1e-9)


def test_single_uav_jamming_equals_no_jamming():
    cfg = SystemConfig(U=1)
    for scheme in ("SC", "MRC"):
        assert sop(scheme, True, cfg) == pytest.approx(sop(scheme, False, cfg), abs=1e-12)


@pytest.mark.parametrize("U", [2, 3, 5, 8])
def test_jamming_and_scheme_dominance(U):
    cfg = SystemConfig(U=U)
    v = {c: sop(*c, cfg) for c in CASES}
    assert v[("SC", True)] <= v[("SC", False)]
    assert v[("MRC", True)] <= v[("MRC", False)]
    assert v[("SC", False)] <= v[("MRC", False)] + 1e-9
    assert v[("SC", True)] <= v[("MRC", True)] + 1e-8


@pytest.mark.parametrize("scheme,jam", CASES)
def test_increasing_in_target_rate(scheme, jam):
    vals = [sop(scheme, jam, SystemConfig(C_th=c)) for c in (0.02, 0.05, 0.1, 0.2, 0.4)]
    assert all(b > a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("scheme,jam", CASES)
def test_no_harvesting_is_certain_outage(scheme, jam):
    r = A.evaluate(A.SopQuery(scheme, jam, SystemConfig(alpha=0.0), baseline_scenario()))
    assert r.value == 1.0 and r.diagnostics["degenerate"]


@pytest.mark.parametrize("scheme,jam", CASES)
def test_values_are_probabilities(scheme, jam):
    for a in (0.05, 0.5, 0.95):
        for psi in (10.0, 1e6):
            v = sop(scheme, jam, SystemConfig(alpha=a, psi=psi))
            assert 0.0 <= v <= 1.0


def test_result_metadata():
    r = A.sop_mrc_jam(A.SopQuery("MRC", True, SystemConfig(), baseline_scenario()))
    assert (r.method, r.scheme, r.jamming, r.definition, r.std_err) == ("analytic", Scheme.MRC, True, "asymptotic", None)
    assert "raw_value" in r.diagnostics


def test_query_checks():
    sc = baseline_scenario()
    with pytest.raises(ValueError):
        A.sop_sc_jam(A.SopQuery("SC", False, SystemConfig(), sc))
    with pytest.raises(ValueError):
        A.SopQuery("SC", False, SystemConfig(), baseline_scenario(eve=False))
    with pytest.raises(ValueError):
        A.SopQuery("SC", False, SystemConfig(), sc.with_(disc=None), "random")
    with pytest.raises(ValueError):
        A.SopQuery("SC", False, SystemConfig(), sc, "elsewhere")


def test_random_bound_uses_mean_distances():
    sc = baseline_scenario(r_c=300.0)
    r = A.evaluate(A.SopQuery("SC", True, SystemConfig(), sc, "random"))
    assert r.diagnostics["bound"] == "jensen_mean_distance"
    fixed = A.sop_sc_jam(A.SopQuery("SC", True, SystemConfig(), sc),
                         links=sc.links_from_distances(r.diagnostics["R_SE"], r.diagnostics["R_RE"]))
    assert r.value == fixed.value


@pytest.mark.parametrize("scheme,jam", CASES)
def test_tiny_disc_bound_equals_fixed_centre(scheme, jam):
    centre = NodePosition(300, 300, 0)
    sc = baseline_scenario().with_(eavesdropper=centre, disc=EavesdropperDisc(1e-4))
    assert sop(scheme, jam, SystemConfig(), sc, "random") == pytest.approx(sop(scheme, jam, SystemConfig(), sc), abs=1e-9)


def test_overshoot_is_reported():
    with pytest.raises(NumericalError):
        A._clamp(1.01, "SC", False, {})
    with pytest.raises(NumericalError):
        A._clamp(math.nan, "SC", False, {})
    assert A._clamp(1 + 1e-9, "SC", False, {}).value == 1.0
