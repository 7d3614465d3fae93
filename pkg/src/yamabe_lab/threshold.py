"""Obstruction test lambda1 >= s/(n-1), t-sweeps, destabilizing certificates and the maximal-T bracket."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import geometry as geo
from .functional import (
    ProductSpace,
    eh_energy,
    expansion_coefficient,
    minimize_quotient,
    perturbation_energy,
)

__all__ = [
    "EQUALITY_TOL",
    "Certificate",
    "ScanRecord",
    "Bracket",
    "yamabe_necessary_test",
    "critical_parameter",
    "classify",
    "destabilizing_direction",
    "scan",
    "bracket_maximal_T",
]

EQUALITY_TOL = 1e-10
EINSTEIN_TOL = 1e-12

HOLDS, EQUALITY, VIOLATED, EINSTEIN = "holds", "equality", "violated", "einstein"
NECESSARY_HOLDS = "necessary_holds"


def yamabe_necessary_test(fam: geo.ProductFamily) -> str:
    """Compare lambda1 with s/(n-1): 'holds', 'equality' or 'violated'."""
    gap = geo.product_lambda1(fam) - geo.scalar_curvature(fam) / (fam.n - 1)
    if abs(gap) <= EQUALITY_TOL:
        return EQUALITY
    return HOLDS if gap > 0 else VIOLATED


def classify(fam: geo.ProductFamily) -> str:
    """Per-t label: einstein, necessary_holds, equality or violated."""
    if abs(fam.t - 1.0) <= EINSTEIN_TOL:
        return EINSTEIN
    verdict = yamabe_necessary_test(fam)
    return NECESSARY_HOLDS if verdict == HOLDS else verdict


def critical_parameter(k: int) -> float:
    """Largest t for which h_t passes the eigenvalue test, k/(k-1)."""
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    return k / (k - 1)


@dataclass(frozen=True)
class Certificate:
    """Measured energy drop along u = 1 + tau f, f = x^1 on the sphere factor."""

    f_id: str
    tau: float
    energy: float
    perturbed_energy: float
    drop: float
    predicted_drop: float
    mean_f: float

    @property
    def relative_error(self) -> float:
        return abs(self.drop - self.predicted_drop) / abs(self.predicted_drop)


def destabilizing_direction(fam: geo.ProductFamily, tau: float = 0.05, space: ProductSpace | None = None) -> Certificate:
    """Exhibit a conformal metric with energy below h_t when the eigenvalue test fails."""
    if yamabe_necessary_test(fam) != VIOLATED:
        raise ValueError(f"t = {fam.t}: eigenvalue test is not violated, no destabilizing direction")
    sp = space if space is not None else ProductSpace(fam, l_max=1)
    f = sp.sphere_coordinate(0)
    base = eh_energy(fam)
    perturbed = perturbation_energy(f, tau)
    return Certificate(
        f_id="x1",
        tau=tau,
        energy=base,
        perturbed_energy=perturbed,
        drop=base - perturbed,
        predicted_drop=-expansion_coefficient(f) * tau**2,
        mean_f=sp.integrate(f.values),
    )


@dataclass
class ScanRecord:
    t: float
    scalar: float
    lambda1: float
    threshold: float
    classification: str
    eh_energy: float
    minimizer_estimate: float | None = None
    certificate: Certificate | None = None

    @property
    def drop(self) -> float | None:
        return None if self.certificate is None else self.certificate.drop

    def row(self) -> dict:
        """Flat row with the CSV/JSON column names."""
        return {
            "t": self.t,
            "s": self.scalar,
            "lambda1": self.lambda1,
            "threshold": self.threshold,
            "classification": self.classification,
            "energy": self.eh_energy,
            "estimate": self.minimizer_estimate,
            "drop": self.drop,
        }

    def to_dict(self) -> dict:
        return asdict(self)


def _scan_point(fam, with_minimizer, minimizer_kwargs) -> ScanRecord:
    s = geo.scalar_curvature(fam)
    label = classify(fam)
    rec = ScanRecord(
        t=fam.t,
        scalar=s,
        lambda1=geo.product_lambda1(fam),
        threshold=s / (fam.n - 1),
        classification=label,
        eh_energy=eh_energy(fam),
    )
    if label == VIOLATED:
        rec.certificate = destabilizing_direction(fam)
    if with_minimizer:
        rec.minimizer_estimate = minimize_quotient(fam, threads=1, **minimizer_kwargs).estimate
    return rec


def scan(
    template: geo.ProductFamily,
    t_min: float,
    t_max: float,
    steps: int,
    with_minimizer: bool = False,
    threads: int | None = None,
    **minimizer_kwargs,
) -> list[ScanRecord]:
    """Records at ``steps`` uniformly spaced t values in [t_min, t_max], in t-order."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if t_min < 1:
        raise ValueError(f"t must be >= 1, got t_min = {t_min}")
    if steps > 1 and not t_min < t_max:
        raise ValueError(f"empty t-range [{t_min}, {t_max}]")
    ts = np.linspace(t_min, t_max, steps) if steps > 1 else np.array([t_min])
    fams = [template.with_t(float(t)) for t in ts]
    if threads is None:
        threads = int(os.environ.get("YAMABE_THREADS", "1") or 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda f: _scan_point(f, with_minimizer, minimizer_kwargs), fams))
    return [_scan_point(f, with_minimizer, minimizer_kwargs) for f in fams]


@dataclass(frozen=True)
class Bracket:
    """Heuristic bracket (low, high) around the largest t at which no descent was found."""

    low: float
    high: float
    degenerate: bool
    heuristic: bool = True


def bracket_maximal_T(records: list[ScanRecord], tol: float) -> Bracket:
    """Bracket the end of the longest prefix of t on which minimizer_estimate >= eh_energy - tol.

    A failed minimizer search is evidence, not proof, that h_t is Yamabe; the
    result is always labelled heuristic.
    """
    if not records:
        raise ValueError("no scan records")
    if any(r.minimizer_estimate is None for r in records):
        raise ValueError("bracket needs minimizer estimates on every record")
    prefix = 0
    for r in records:
        if r.minimizer_estimate >= r.eh_energy - tol:
            prefix += 1
        else:
            break
    if prefix == 0:
        return Bracket(records[0].t, records[0].t, degenerate=True)
    if prefix == len(records):
        return Bracket(records[-1].t, records[-1].t, degenerate=False)
    return Bracket(records[prefix - 1].t, records[prefix].t, degenerate=False)
