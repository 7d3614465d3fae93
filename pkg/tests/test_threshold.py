import math

import numpy as np
import pytest

from yamabe_lab.functional import eh_energy
from yamabe_lab.geometry import ProductFamily, product_lambda1, scalar_curvature
from yamabe_lab.threshold import (
    Bracket,
    ScanRecord,
    bracket_maximal_T,
    classify,
    critical_parameter,
    destabilizing_direction,
    scan,
    yamabe_necessary_test,
)


def fam(t, k=2, l=2):
    return ProductFamily.spheres(k, l, t)


def test_necessary_test_examples():
    assert yamabe_necessary_test(fam(1.5)) == "holds"
    assert yamabe_necessary_test(fam(2.0)) == "equality"
    assert yamabe_necessary_test(fam(2.5)) == "violated"
    assert classify(fam(1.0)) == "einstein"
    assert classify(fam(1.5)) == "necessary_holds"


def test_critical_parameter():
    assert critical_parameter(2) == 2
    assert critical_parameter(3) == 1.5
    values = [critical_parameter(k) for k in range(2, 40)]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert all(v > 1 for v in values)
    with pytest.raises(ValueError):
        critical_parameter(1)


@pytest.mark.parametrize("k, l", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_boundary_exactness(k, l):
    crit = critical_parameter(k)
    ts = crit + 1e-3 * np.arange(-200, 201)
    ts = ts[ts >= 1]
    for t in ts:
        label = yamabe_necessary_test(fam(t, k, l))
        if t < crit - 1e-9:
            assert label == "holds"
        elif t > crit + 1e-9:
            assert label == "violated"
        else:
            assert label == "equality"


@pytest.mark.parametrize("k, l", [(2, 2), (3, 2), (3, 3)])
def test_equality_calibration(k, l):
    f = fam(critical_parameter(k), k, l)
    assert abs(product_lambda1(f) - scalar_curvature(f) / (f.n - 1)) <= 1e-12


def test_certificate_t25():
    cert = destabilizing_direction(fam(2.5), tau=0.05)
    E = eh_energy(fam(2.5))
    predicted = abs(-2 * (1 - 6 / 7) * (1 / 3) * E) * 0.05**2
    assert cert.drop > 0
    assert cert.perturbed_energy < cert.energy
    assert cert.predicted_drop == pytest.approx(predicted, rel=1e-12)
    assert cert.relative_error < 0.2
    assert abs(cert.mean_f) <= 1e-12
    assert cert.f_id == "x1"


def test_certificate_requires_violation():
    with pytest.raises(ValueError, match="not violated"):
        destabilizing_direction(fam(2.0))
    with pytest.raises(ValueError):
        destabilizing_direction(fam(1.2))


def test_certificate_reproducible():
    a = destabilizing_direction(fam(2.3))
    b = destabilizing_direction(fam(2.3))
    assert a == b


def test_scan_boundary_k2():
    records = scan(fam(1.0), 1.0, 2.5, 16)
    assert len(records) == 16
    assert records[0].classification == "einstein"
    last_ok = max(r.t for r in records if r.classification != "violated")
    first_bad = min(r.t for r in records if r.classification == "violated")
    assert last_ok <= 2.0 < first_bad
    assert all(r.t < first_bad for r in records if r.classification != "violated")
    for r in records:
        if r.certificate is not None:
            assert r.classification == "violated" and r.certificate.drop > 0


def test_scan_single_point():
    (rec,) = scan(fam(1.0), 1.0, 1.0, 1)
    assert rec.classification == "einstein"


def test_scan_boundary_k3():
    records = scan(fam(1.0, 3, 2), 1.0, 2.0, 21)
    last_ok = max(r.t for r in records if r.classification != "violated")
    first_bad = min(r.t for r in records if r.classification == "violated")
    assert last_ok <= 1.5 < first_bad
    assert first_bad - last_ok <= 0.05 + 1e-12


def test_scan_rejects_bad_ranges():
    with pytest.raises(ValueError):
        scan(fam(1.0), 2.0, 1.5, 4)
    with pytest.raises(ValueError):
        scan(fam(1.0), 0.5, 1.5, 4)


def test_scan_threads_keep_order():
    a = scan(fam(1.0), 1.0, 2.5, 7, threads=3)
    b = scan(fam(1.0), 1.0, 2.5, 7)
    assert [r.row() for r in a] == [r.row() for r in b]


def _synthetic(ts, crit=2.0):
    out = []
    for t in ts:
        E = eh_energy(fam(t))
        est = E if t <= crit + 1e-12 else E - 0.1 * (t - crit)
        out.append(ScanRecord(t, 0.0, 0.0, 0.0, "necessary_holds", E, minimizer_estimate=est))
    return out


def test_bracket_ideal_data():
    br = bracket_maximal_T(_synthetic(np.linspace(1, 2.5, 16)), tol=1e-6)
    assert br.low <= 2.0 < br.high
    assert br.heuristic and not br.degenerate


def test_bracket_degenerate_and_infinite_tol():
    recs = _synthetic(np.linspace(1, 2.5, 4), crit=0.5)
    br = bracket_maximal_T(recs, tol=1e-6)
    assert (br.low, br.high, br.degenerate) == (1.0, 1.0, True)
    br = bracket_maximal_T(recs, tol=math.inf)
    assert (br.low, br.high) == (2.5, 2.5)
    assert isinstance(br, Bracket) and br.heuristic


def test_bracket_needs_estimates():
    with pytest.raises(ValueError):
        bracket_maximal_T(scan(fam(1.0), 1.0, 2.0, 3), tol=1e-6)


@pytest.mark.slow
def test_bracket_from_minimizer_scan():
    records = scan(fam(1.0), 1.0, 2.5, 7, with_minimizer=True, l_max=4, restarts=3)
    br = bracket_maximal_T(records, tol=1e-6 * records[-1].eh_energy)
    # descent is guaranteed past t = 2; before that the minimizer finds nothing in this trial space
    assert 2.0 <= br.high <= 2.25 + 1e-12
