import numpy as np
import pytest

from topoflock.certificate import (
    CERTIFIED,
    NOT_CERTIFIED,
    UNCERTIFIABLE,
    certify,
    scaled_velocities,
)
from topoflock.contraction import solve_schedule
from topoflock.errors import DomainError
from topoflock.model import REFERENCE_POSITIONS, Configuration, reference_configuration, velocity_diameter


def test_reference_override_boundary(reference_threshold):
    cert = certify(reference_configuration(reference_threshold), 0.25, 1)
    assert cert.threshold == pytest.approx(0.0351, abs=5e-4)
    assert cert.threshold == solve_schedule(1, (1,)).ratio * 0.25
    assert cert.verdict == CERTIFIED
    assert cert.margin >= 0
    assert cert.hierarchy.layers == ((1,), (0, 2), (3,))
    assert not cert.premise_holds
    assert cert.hierarchy_rho == pytest.approx(0.1)


def test_reference_thirteen_times(reference_threshold):
    cert = certify(reference_configuration(13 * reference_threshold), 0.25, 1)
    assert cert.verdict == NOT_CERTIFIED
    assert cert.margin < 0


def test_reference_override_warnings(reference_threshold):
    cert = certify(reference_configuration(reference_threshold), 0.25, 1)
    text = " ".join(cert.warnings)
    assert "0.25" in text and "0.1" in text
    assert "exceeds the initial velocity diameter" in text


def test_reference_without_override(reference_threshold):
    cert = certify(reference_configuration(reference_threshold))
    assert cert.rho == pytest.approx(0.1)
    assert cert.threshold == pytest.approx(0.01403, abs=1e-5)
    assert cert.verdict == NOT_CERTIFIED
    assert cert.premise_holds
    assert any("documented robustness" in w for w in cert.warnings)


def test_zero_diameter_always_certified():
    c = Configuration(REFERENCE_POSITIONS, np.tile([0.3, 1.0], (4, 1)), 1)
    for rho in (0.0, 0.05, 0.1):
        assert certify(c, rho, 1).verdict == CERTIFIED
    assert certify(c).verdict == CERTIFIED


def test_scaling_law_flips_at_ratio(rng):
    base = reference_configuration(1.0)
    threshold = certify(base, 0.1, 1).threshold
    star = threshold / velocity_diameter(base.velocities)
    cases = ((0.5 * star, CERTIFIED), (star * (1 - 1e-9), CERTIFIED), (star * (1 + 1e-9), NOT_CERTIFIED))
    for lam, verdict in cases:
        c = base.with_velocities(scaled_velocities(base, lam))
        assert velocity_diameter(c.velocities) == pytest.approx(lam, rel=1e-12)
        assert certify(c, 0.1, 1).verdict == verdict


def test_uncertifiable_initial_graph():
    c = Configuration([[0, 0], [1, 0], [100, 0], [101, 0]], np.zeros((4, 2)), 1)
    cert = certify(c)
    assert cert.verdict == UNCERTIFIABLE
    assert not cert.certified


def test_override_root_without_reach():
    # agent 4 influences nobody in the reference graph
    cert = certify(reference_configuration(0.01), 0.05, 3)
    assert cert.verdict == UNCERTIFIABLE


def test_bad_overrides():
    c = reference_configuration(0.01)
    with pytest.raises(DomainError):
        certify(c, -1.0, 1)
    with pytest.raises(DomainError):
        certify(c, 0.1, 9)


def test_single_override_restricts_sweep():
    cert = certify(reference_configuration(0.001), root=0)
    assert cert.root == 0
    assert {c.root for c in cert.candidates} == {0}


def test_certified_iff_within_threshold(rng):
    for _ in range(30):
        x = rng.uniform(-4, 4, size=(6, 2))
        v = rng.normal(scale=rng.uniform(0.001, 0.1), size=(6, 2))
        cert = certify(Configuration(x, v, 2))
        if cert.verdict == UNCERTIFIABLE:
            continue
        assert (cert.verdict == CERTIFIED) == (cert.initial_diameter <= cert.threshold)
        assert cert.threshold == cert.schedule.ratio * cert.rho
