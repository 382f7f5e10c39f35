import math

import numpy as np
import pytest

from drivenspin import (
    DegenerateGap,
    DriveConfig,
    LABELS,
    OnTransition,
    StateLabel,
    aa_phase_closed,
    berry_phase_closed,
    berry_phase_wilson,
    chern_closed,
    chern_lattice,
    circular_distance,
    curvature_closed,
    curvature_numeric,
    fold_phase,
    lattice_flux,
    rotating_sz_expectation,
    wilson_loop_phase,
)
from drivenspin.geometry import _adiabatic_band_states, _rotating_band_states


def anti_phase(b=2.0, theta=0.0, omega=0.0, t_lr=0.0):
    return DriveConfig(b=b, theta=theta, phi_l=0.0, phi_r=-math.pi, omega=omega, t_lr=t_lr)


class TestFolding:
    def test_fold_phase(self):
        assert fold_phase(0.0) == 0.0
        assert fold_phase(math.pi) == math.pi
        assert fold_phase(-math.pi) == math.pi
        assert fold_phase(2 * math.pi) == pytest.approx(0.0, abs=1e-15)
        assert fold_phase(3.5 * math.pi) == pytest.approx(-0.5 * math.pi)

    def test_circular_distance(self):
        assert circular_distance(math.pi - 0.01, -math.pi + 0.01) == pytest.approx(0.02)


class TestWilson:
    def test_in_phase_equator_is_pi(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.7)
        for m2 in (+1, -1):
            got = berry_phase_wilson(cfg, math.pi / 2, StateLabel(+1, m2), n_steps=128)
            assert circular_distance(got, math.pi) < 1e-6

    def test_north_pole_vanishes(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.7)
        for lab in LABELS:
            got = berry_phase_wilson(cfg, 0.0, lab, n_steps=128)
            assert circular_distance(got, 0.0) < 1e-12

    def test_anti_phase_matches_renormalized_form(self):
        # independent evaluation of the anti-phase closed form:
        # pi (m1 (lam m2 - cos) + f) / f with f = sqrt(1 + lam^2 - 2 m2 lam cos)
        cfg = anti_phase(t_lr=1.2)
        theta = 2 * math.pi / 5
        lam, c = cfg.lam, math.cos(theta)
        for m1, m2 in LABELS:
            f = math.sqrt(1 + lam**2 - 2 * m2 * lam * c)
            expected = fold_phase(math.pi * (m1 * (lam * m2 - c) + f) / f)
            got = berry_phase_wilson(cfg, theta, StateLabel(m1, m2), n_steps=256)
            assert circular_distance(got, expected) < 1e-6

    def test_decoupled_sites_degenerate(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.0)
        with pytest.raises(DegenerateGap):
            berry_phase_wilson(cfg, 1.0, StateLabel(1, 1), n_steps=128)

    def test_in_phase_lam1_degenerate(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=1.0)
        with pytest.raises(DegenerateGap):
            berry_phase_wilson(cfg, 1.0, StateLabel(1, 1), n_steps=128)

    def test_rejects_bad_steps(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.7)
        with pytest.raises(ValueError):
            berry_phase_wilson(cfg, 1.0, StateLabel(1, 1), n_steps=32)

    def test_raw_loop_second_order(self):
        # the plain overlap product converges as O(1/n^2)
        cfg = anti_phase(t_lr=0.6, theta=0.9)
        phis = lambda n: 2 * math.pi * np.arange(n) / n
        errs = []
        expected = berry_phase_closed(cfg, 0.9, StateLabel(1, 1))
        for n in (64, 128, 256):
            states, _ = _adiabatic_band_states(cfg, np.array([0.9]), phis(n))
            raw = wilson_loop_phase(states[0, :, :, 0])
            errs.append(circular_distance(raw, expected))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.2)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.2)


class TestBerryClosed:
    def test_lam0_reduces_to_in_phase(self):
        for theta in np.linspace(0.0, math.pi, 7):
            cfg0 = DriveConfig(b=2.0, theta=0.0, t_lr=0.0)
            cfgp = anti_phase(t_lr=0.0)
            for lab in LABELS:
                assert berry_phase_closed(cfgp, theta, lab) == pytest.approx(
                    berry_phase_closed(cfg0, theta, lab), abs=1e-12
                )

    def test_in_phase_tunneling_independent(self):
        for t_lr in (0.0, 0.5, 5.0):
            cfg = DriveConfig(b=2.0, theta=0.0, t_lr=t_lr)
            got = berry_phase_closed(cfg, 0.8, StateLabel(1, 1))
            assert got == berry_phase_closed(
                DriveConfig(b=2.0, theta=0.0), 0.8, StateLabel(1, 1)
            )

    def test_explicit_value(self):
        # lam=0.6, theta=pi/4, band (+1,+1):
        # pi (0.6 - sqrt(2)/2 + f) / f with f = sqrt(1.36 - 1.2 sqrt(2)/2)
        cfg = anti_phase(t_lr=0.6)
        f = math.sqrt(1.36 - 1.2 * math.sqrt(2) / 2)
        expected = fold_phase(math.pi * (0.6 - math.sqrt(2) / 2 + f) / f)
        got = berry_phase_closed(cfg, math.pi / 4, StateLabel(1, 1))
        assert got == pytest.approx(expected, abs=1e-15)

    def test_band_touching_raises(self):
        cfg = anti_phase(t_lr=1.0)
        with pytest.raises(DegenerateGap):
            berry_phase_closed(cfg, 0.0, StateLabel(1, 1))


class TestCyclicPhase:
    def test_mu0_limit(self):
        for theta in np.linspace(0.1, math.pi - 0.1, 5):
            cfg = DriveConfig(b=2.0, theta=theta, omega=0.0, t_lr=0.0)
            for m1, m2 in LABELS:
                got = aa_phase_closed(cfg, StateLabel(m1, m2))
                assert got == pytest.approx(
                    fold_phase(-m1 * math.pi * math.cos(theta)), abs=1e-12
                )

    def test_equator_mu2_value(self):
        # mu = 2 at the equator: m1 * 2 pi / sqrt(5), in phase, any m2
        cfg = DriveConfig(b=2.0, theta=math.pi / 2, omega=4.0, t_lr=0.3)
        for m1, m2 in LABELS:
            got = aa_phase_closed(cfg, StateLabel(m1, m2))
            assert got == pytest.approx(m1 * 2 * math.pi / math.sqrt(5), abs=1e-15)

    def test_matches_sz_expectation(self):
        rng = np.random.default_rng(21)
        for _ in range(12):
            cfg = DriveConfig(
                b=rng.uniform(0.5, 3),
                theta=rng.uniform(0.07, math.pi - 0.07),
                phi_r=-math.pi if rng.integers(2) else 0.0,
                omega=rng.uniform(0, 4),
                t_lr=rng.uniform(0.05, 1.5),
            )
            for lab in LABELS:
                try:
                    closed = aa_phase_closed(cfg, lab)
                except DegenerateGap:
                    continue
                numeric = 2 * math.pi * rotating_sz_expectation(cfg, lab)
                assert circular_distance(closed, fold_phase(numeric)) < 1e-8

    def test_offset_pi_against_loop_phase(self):
        # at omega=0 the cyclic-state phase and the loop phase differ by pi
        for theta in (0.4, 1.9, 2.8):
            for t_lr in (0.0, 0.35, 0.8):
                cfg = anti_phase(theta=theta, t_lr=t_lr)
                for lab in LABELS:
                    aa = aa_phase_closed(cfg, lab)
                    berry = berry_phase_closed(cfg, theta, lab)
                    assert circular_distance(berry - aa, math.pi) < 1e-12


class TestCurvature:
    def test_in_phase_equator(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.7)
        for m1, m2 in LABELS:
            sample = curvature_closed(cfg, math.pi / 2, StateLabel(m1, m2), "adiabatic")
            assert sample.value == pytest.approx(0.5 * m1, abs=1e-15)

    def test_large_tunneling_flattens(self):
        cfg = anti_phase(t_lr=50.0)
        for theta in np.linspace(0.1, math.pi - 0.1, 7):
            sample = curvature_closed(cfg, theta, StateLabel(1, 1), "adiabatic")
            assert abs(sample.value) < 1e-3

    def test_mu0_reduces_to_adiabatic(self):
        cfg = DriveConfig(b=2.0, theta=0.0, omega=0.0, t_lr=0.9)
        for theta in np.linspace(0.0, math.pi, 9):
            for lab in LABELS:
                na = curvature_closed(cfg, theta, lab, "nonadiabatic")
                ad = curvature_closed(cfg, theta, lab, "adiabatic")
                assert na.value == pytest.approx(ad.value, abs=1e-12)

    def test_numeric_matches_closed_in_phase(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.7)
        for m1 in (+1, -1):
            got = curvature_numeric(cfg, math.pi / 2, 0.3, StateLabel(m1, 1), "adiabatic")
            assert got.value == pytest.approx(0.5 * m1, abs=1e-4)

    def test_numeric_pole_vanishes(self):
        cfg = DriveConfig(b=2.0, theta=0.0, t_lr=0.7)
        got = curvature_numeric(cfg, 0.0, 0.0, StateLabel(1, 1), "adiabatic")
        assert abs(got.value) < 1e-6

    def test_numeric_matches_closed_nonadiabatic(self):
        cfg = anti_phase(omega=1.5, t_lr=1.0)
        assert cfg.delta(+1) == 1.75 and cfg.delta(-1) == -0.25
        for lab in LABELS:
            closed = curvature_closed(cfg, math.pi / 3, lab, "nonadiabatic")
            numeric = curvature_numeric(cfg, math.pi / 3, 0.0, lab, "nonadiabatic")
            assert numeric.value == pytest.approx(closed.value, abs=1e-4)

    def test_vanishes_at_poles(self):
        # sin(theta) prefactor; at theta = pi only up to float pi roundoff
        cfg = anti_phase(omega=1.5, t_lr=0.4)
        for theta in (0.0, math.pi):
            for regime in ("adiabatic", "nonadiabatic"):
                for lab in LABELS:
                    assert abs(curvature_closed(cfg, theta, lab, regime).value) < 1e-15

    def test_consistency_with_connection_derivative(self):
        # F = + d<Sz_total>/dtheta with the package orientation
        cfg = anti_phase(omega=1.5, t_lr=1.0)
        eps = 1e-6
        for theta in (0.6, 1.2, 2.3):
            for lab in LABELS:
                up = rotating_sz_expectation(
                    DriveConfig(b=2, theta=theta + eps, phi_r=-math.pi, omega=1.5, t_lr=1.0),
                    lab,
                )
                dn = rotating_sz_expectation(
                    DriveConfig(b=2, theta=theta - eps, phi_r=-math.pi, omega=1.5, t_lr=1.0),
                    lab,
                )
                deriv = (up - dn) / (2 * eps)
                numeric = curvature_numeric(cfg, theta, 0.1, lab, "nonadiabatic")
                assert numeric.value == pytest.approx(deriv, abs=1e-4)


class TestChernLattice:
    def test_in_phase_is_m1(self):
        for t_lr in (0.3, 1.5):
            cfg = DriveConfig(b=2.0, theta=0.0, t_lr=t_lr)
            report = chern_lattice(cfg, 40, 40, "adiabatic")
            for m1, m2 in LABELS:
                assert report.c1[StateLabel(m1, m2)] == m1

    def test_anti_phase_above_transition_trivial(self):
        report = chern_lattice(anti_phase(t_lr=1.2), 40, 40, "adiabatic")
        assert all(c == 0 for c in report.c1.values())

    def test_anti_phase_below_transition(self):
        report = chern_lattice(anti_phase(t_lr=0.45), 40, 40, "adiabatic")
        for m1, m2 in LABELS:
            assert report.c1[StateLabel(m1, m2)] == m1

    def test_transition_detected(self):
        with pytest.raises(DegenerateGap):
            chern_lattice(anti_phase(t_lr=1.0), 40, 40, "adiabatic")

    def test_nonadiabatic_half_topological_point(self):
        report = chern_lattice(anti_phase(omega=1.5, t_lr=1.0), 40, 40, "nonadiabatic")
        for m1, m2 in LABELS:
            assert report.c1[StateLabel(m1, m2)] == (m1 if m2 == -1 else 0)

    def test_band_sum_rule(self):
        for cfg, regime in (
            (DriveConfig(b=2.0, theta=0.0, t_lr=0.8), "adiabatic"),
            (anti_phase(t_lr=0.5), "adiabatic"),
            (anti_phase(omega=1.5, t_lr=1.0), "nonadiabatic"),
            (DriveConfig(b=2.0, theta=0.0, omega=3.0, t_lr=0.4), "nonadiabatic"),
        ):
            assert chern_lattice(cfg, 30, 30, regime).band_sum() == 0

    def test_grid_convergence(self):
        cfg = anti_phase(omega=0.9, t_lr=0.6)
        results = [
            chern_lattice(cfg, n, n, "nonadiabatic").c1 for n in (50, 100, 200)
        ]
        assert results[0] == results[1] == results[2]

    def test_rejects_small_grid(self):
        with pytest.raises(ValueError):
            chern_lattice(anti_phase(t_lr=0.5), 10, 40, "adiabatic")


class TestChernClosed:
    def test_anti_phase_below(self):
        cfg = anti_phase(t_lr=0.6)
        for m1, m2 in LABELS:
            assert chern_closed(cfg, StateLabel(m1, m2), "adiabatic") == m1

    def test_nonadiabatic_fast_drive_trivial(self):
        cfg = DriveConfig(b=2.0, theta=0.0, omega=4.0, t_lr=0.3)
        for lab in LABELS:
            assert chern_closed(cfg, lab, "nonadiabatic") == 0

    def test_on_transition(self):
        with pytest.raises(OnTransition):
            chern_closed(anti_phase(t_lr=1.0), StateLabel(1, 1), "adiabatic")
        with pytest.raises(OnTransition):
            chern_closed(
                DriveConfig(b=2.0, theta=0.0, omega=2.0), StateLabel(1, 1), "nonadiabatic"
            )
        # anti-phase cyclic branch: |Delta_-| = 1 exactly
        cfg = anti_phase(omega=4.0, t_lr=1.0)
        with pytest.raises(OnTransition):
            chern_closed(cfg, StateLabel(1, -1), "nonadiabatic")

    def test_matches_lattice(self):
        rng = np.random.default_rng(22)
        checked = 0
        while checked < 6:
            cfg = DriveConfig(
                b=rng.uniform(0.8, 3.5),
                theta=0.0,
                phi_r=-math.pi if rng.integers(2) else 0.0,
                omega=rng.uniform(0.0, 3.5),
                t_lr=rng.uniform(0.05, 1.6),
            )
            dists = [abs(abs(cfg.delta(m2)) - 1.0) for m2 in (+1, -1)]
            if min(dists) < 0.05 or abs(cfg.mu - 1.0) < 0.05 or abs(cfg.lam - 1.0) < 0.05:
                continue
            report = chern_lattice(cfg, 60, 60, "nonadiabatic")
            for lab in LABELS:
                assert report.c1[lab] == chern_closed(cfg, lab, "nonadiabatic")
            checked += 1


class TestGaugeInvariance:
    def test_discontinuous_loop_rejected(self):
        from drivenspin import NonConverged

        rng = np.random.default_rng(25)
        junk = rng.normal(size=(32, 4)) + 1j * rng.normal(size=(32, 4))
        junk /= np.linalg.norm(junk, axis=1, keepdims=True)
        with pytest.raises(NonConverged):
            wilson_loop_phase(junk)

    def test_wilson_loop_phase(self):
        cfg = anti_phase(t_lr=0.8)
        phis = 2 * math.pi * np.arange(64) / 64
        states, _ = _adiabatic_band_states(cfg, np.array([1.1]), phis)
        loop = states[0, :, :, 0]
        base = wilson_loop_phase(loop)
        rng = np.random.default_rng(23)
        gauged = loop * np.exp(1j * rng.uniform(0, 2 * math.pi, size=(64, 1)))
        assert circular_distance(wilson_loop_phase(gauged), base) < 1e-12

    def test_lattice_flux(self):
        cfg = anti_phase(omega=1.5, t_lr=1.0)
        thetas = np.linspace(0.0, math.pi, 24)
        phis = 2 * math.pi * np.arange(24) / 24
        states, _ = _rotating_band_states(cfg, thetas, phis)
        band = states[:, :, :, 1]
        base = lattice_flux(band)
        rng = np.random.default_rng(24)
        gauged = band * np.exp(1j * rng.uniform(0, 2 * math.pi, size=(24, 24, 1)))
        assert abs(lattice_flux(gauged) - base) < 1e-12

    def test_flux_quantization(self):
        cfg = anti_phase(omega=1.5, t_lr=1.0)
        thetas = np.linspace(0.0, math.pi, 40)
        phis = 2 * math.pi * np.arange(40) / 40
        states, _ = _rotating_band_states(cfg, thetas, phis)
        for band in range(4):
            flux = lattice_flux(states[:, :, :, band])
            assert abs(flux - round(flux)) < 1e-9
