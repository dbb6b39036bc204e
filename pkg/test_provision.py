#!/usr/bin/env python3
"""
Tests for per-cluster provisioning.

Tests:
  1. Rate, activity and transmit power boundaries
  2. Core count against the frame deadline
  3. Feasibility re-check of arbitrary decisions
  4. Closed form, coordinate descent and brute force against each other and
     against the analytic minimizer of the reduced objective
  5. Scheduled PRBs and core counts
  6. Round trips, monotonicity and solver ordering on random instances

Usage:
  python test_provision.py
"""

import math
import os
import sys
import unittest
from dataclasses import replace

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from modules.analytics import KernelVariant, RadioEnv, coverage_approx, coverage_no_noise  # noqa: E402
from modules.power import PowerParams, frame_processing_time, q1  # noqa: E402
from modules.provision import (  # noqa: E402
    ClusterState,
    Constraints,
    brute_force_provision,
    closed_form_provision,
    coordinate_descent_provision,
    coverage_activity_bound,
    evaluate_decision,
    min_activity_factor,
    min_cores,
    min_tx_power,
    per_user_bandwidth,
    per_user_rate,
    scheduled_prbs,
    transmit_power_constant,
)
from src.utils.exceptions import ElasticNetDomainError  # noqa: E402

LAMBDA_R = 1e-5  # 10 RRHs per km2
AREA = 25e6  # 25 km2


def radio(sigma2=1e-13):
    return RadioEnv(alpha=4.0, gamma=1.0, sigma2=sigma2, bandwidth=20e6)


def constraints(**overrides):
    values = dict(epsilon=0.75, r_min=200e3, deadline_us=2600.0, n_prb=100)
    values.update(overrides)
    return Constraints(**values)


def analytic_optimum(env, c, power, lambda_r, variant=KernelVariant.REFERENCE):
    """Stationary point of mu -> objective(mu, P*(mu)), unconstrained."""
    l1 = transmit_power_constant(env, c, variant)
    half = env.alpha / 2.0
    q1_base = q1(0.0, power.rrh, power.transport)
    ratio = (half - 1.0) * l1 / (power.rrh.amp_efficiency * lambda_r**half * q1_base)
    return ratio ** (2.0 / env.alpha)


class TestBoundaries(unittest.TestCase):
    """Rate and coverage boundaries."""

    def test_per_user_bandwidth(self):
        self.assertAlmostEqual(per_user_bandwidth(2e-6, 1e-4, 20e6), 4e5, places=6)
        with self.assertRaises(ElasticNetDomainError):
            per_user_bandwidth(2e-6, 0.0, 20e6)

    def test_per_user_rate(self):
        rate = per_user_rate(radio(), LAMBDA_R, 0.1945, 5e-4)
        self.assertAlmostEqual(rate, 2.0e5, delta=1e3)

    def test_min_activity_factor(self):
        mu = min_activity_factor(radio(), LAMBDA_R, 5e-4, constraints())
        self.assertAlmostEqual(mu, 0.1945, delta=1e-4)
        self.assertAlmostEqual(per_user_rate(radio(), LAMBDA_R, mu, 5e-4), 200e3, places=3)

    def test_min_activity_factor_edges(self):
        self.assertEqual(min_activity_factor(radio(), LAMBDA_R, 0.0, constraints()), 0.0)
        # 20 times the demand of the golden case needs mu_a ~ 3.9
        self.assertIsNone(min_activity_factor(radio(), LAMBDA_R, 1e-2, constraints()))

    def test_zero_threshold_is_a_domain_error(self):
        env = RadioEnv(alpha=4.0, gamma=0.0, sigma2=1e-13, bandwidth=20e6)
        with self.assertRaises(ElasticNetDomainError):
            min_activity_factor(env, LAMBDA_R, 5e-4, constraints())
        self.assertEqual(min_activity_factor(env, LAMBDA_R, 0.0, constraints()), 0.0)

    def test_transmit_power_constant(self):
        l1 = transmit_power_constant(radio(), constraints(), KernelVariant.AS_WRITTEN)
        expected = 1e-13 * 2.0 / (math.pi**2 * (1 + math.pi / 2) ** 2 * 0.25)
        self.assertAlmostEqual(l1 / expected, 1.0, delta=1e-6)
        self.assertAlmostEqual(l1, 1.226e-14, delta=0.001e-14)

    def test_min_tx_power(self):
        tx = min_tx_power(radio(), 2e-6, 1.0, constraints(), KernelVariant.AS_WRITTEN)
        self.assertAlmostEqual(tx, 3.07e-3, delta=0.01e-3)
        # alpha = 4: halving the active density quadruples the power
        half = min_tx_power(radio(), 1e-6, 1.0, constraints(), KernelVariant.AS_WRITTEN)
        self.assertAlmostEqual(half / tx, 4.0, places=9)

    def test_min_tx_power_without_noise(self):
        self.assertEqual(min_tx_power(radio(sigma2=0.0), LAMBDA_R, 0.5, constraints()), 0.0)

    def test_min_tx_power_needs_active_rrhs(self):
        with self.assertRaises(ElasticNetDomainError):
            min_tx_power(radio(), LAMBDA_R, 0.0, constraints())

    def test_coverage_activity_bound_inverts_min_tx_power(self):
        c = constraints()
        tx = min_tx_power(radio(), LAMBDA_R, 0.3, c)
        self.assertAlmostEqual(coverage_activity_bound(radio(), LAMBDA_R, tx, c), 0.3, places=9)
        self.assertEqual(coverage_activity_bound(radio(), LAMBDA_R, 0.0, c), math.inf)
        self.assertEqual(coverage_activity_bound(radio(sigma2=0.0), LAMBDA_R, 0.0, c), 0.0)

    def test_constraint_validation(self):
        with self.assertRaises(ElasticNetDomainError):
            constraints(epsilon=1.0)
        with self.assertRaises(ElasticNetDomainError):
            constraints(r_min=0.0)
        with self.assertRaises(ElasticNetDomainError):
            constraints(n_prb=0)
        with self.assertLogs("modules.provision", level="WARNING"):
            constraints(deadline_us=3000.0)


class TestCores(unittest.TestCase):
    """Fewest cores meeting the frame deadline."""

    def setUp(self):
        self.vm = PowerParams.defaults().vm

    def test_default_deadline(self):
        self.assertEqual(min_cores(constraints(), self.vm), 2)

    def test_loose_deadline_single_core(self):
        self.assertEqual(min_cores(constraints(deadline_us=4000.0), self.vm), 1)

    def test_deadline_equal_to_frame_time(self):
        exact = frame_processing_time(100, 2, self.vm)
        self.assertEqual(min_cores(constraints(deadline_us=exact), self.vm), 2)

    def test_tight_deadline(self):
        cores = min_cores(constraints(deadline_us=500.0), self.vm)
        self.assertLessEqual(frame_processing_time(100, cores, self.vm), 500.0)
        self.assertGreater(frame_processing_time(100, cores - 1, self.vm), 500.0)


class TestEvaluateDecision(unittest.TestCase):
    """Constraint re-check of arbitrary decisions."""

    def setUp(self):
        self.env = radio()
        self.c = constraints()
        self.power = PowerParams.defaults()
        self.state = ClusterState(lambda_r=LAMBDA_R, lambda_u=5e-4, area_m2=AREA)
        self.mu = min_activity_factor(self.env, LAMBDA_R, 5e-4, self.c)
        self.tx = min_tx_power(self.env, LAMBDA_R, self.mu, self.c)

    def evaluate(self, mu, tx, cores=2):
        return evaluate_decision(self.env, self.state, self.c, self.power, mu, tx, cores)

    def test_boundary_point_is_feasible(self):
        d = self.evaluate(self.mu, self.tx)
        self.assertTrue(d.feasible, d.violations)
        self.assertAlmostEqual(d.utilization, 0.6842, delta=1e-4)
        self.assertAlmostEqual(d.breakdown.vm_power, 150.36, places=2)
        self.assertAlmostEqual(d.objective, d.breakdown.area_power + d.breakdown.vm_power, places=6)

    def test_rate_violation(self):
        d = self.evaluate(0.9 * self.mu, self.tx * 10)
        self.assertFalse(d.feasible)
        self.assertTrue(any(v.startswith("rate") for v in d.violations))

    def test_coverage_violation(self):
        d = self.evaluate(self.mu, 0.5 * self.tx)
        self.assertFalse(d.feasible)
        self.assertTrue(any(v.startswith("coverage") for v in d.violations))

    def test_deadline_violation(self):
        d = self.evaluate(self.mu, self.tx, cores=1)
        self.assertFalse(d.feasible)
        self.assertTrue(any(v.startswith("frame time") for v in d.violations))
        self.assertEqual(d.utilization, 1.0)

    def test_rate_slack(self):
        # 0.05% short of the rate is within tolerance
        self.assertTrue(self.evaluate(self.mu * 0.9995, self.tx * 2).feasible)

    def test_no_demand_all_asleep(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=0.0, area_m2=AREA)
        d = evaluate_decision(self.env, state, self.c, self.power, 0.0, 0.0, 2)
        self.assertTrue(d.feasible)
        self.assertAlmostEqual(d.breakdown.area_power, 4.0 * LAMBDA_R * AREA, places=6)


class TestClosedForm(unittest.TestCase):
    """Boundary solution."""

    def setUp(self):
        self.c = constraints()
        self.power = PowerParams.defaults()

    def test_golden_point(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=5e-4, area_m2=AREA)
        d = closed_form_provision(radio(), state, self.c, self.power)
        self.assertTrue(d.feasible)
        self.assertAlmostEqual(d.mu_a, 0.1945, delta=1e-4)
        self.assertEqual(d.n_cores, 2)
        self.assertAlmostEqual(d.tx_power, min_tx_power(radio(), LAMBDA_R, d.mu_a, self.c), places=15)

    def test_zero_demand(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=0.0, area_m2=AREA)
        d = closed_form_provision(radio(), state, self.c, self.power)
        self.assertTrue(d.feasible)
        self.assertEqual(d.mu_a, 0.0)
        self.assertEqual(d.tx_power, 0.0)

    def test_demand_beyond_capacity(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=1e-2, area_m2=AREA)
        d = closed_form_provision(radio(), state, self.c, self.power)
        self.assertFalse(d.feasible)
        self.assertEqual(d.mu_a, 1.0)
        self.assertTrue(any(v.startswith("rate") for v in d.violations))

    def test_noiseless(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=5e-4, area_m2=AREA)
        d = closed_form_provision(radio(sigma2=0.0), state, self.c, self.power)
        self.assertTrue(d.feasible)
        self.assertEqual(d.tx_power, 0.0)

    def test_variant_changes_power_only(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=5e-4, area_m2=AREA)
        ref = closed_form_provision(radio(), state, self.c, self.power, KernelVariant.REFERENCE)
        written = closed_form_provision(radio(), state, self.c, self.power, KernelVariant.AS_WRITTEN)
        self.assertEqual(ref.mu_a, written.mu_a)
        self.assertGreater(ref.tx_power, written.tx_power)

    def test_monotone_in_demand(self):
        objectives = []
        for lambda_u in (1e-4, 2e-4, 5e-4, 1e-3, 2e-3):
            state = ClusterState(lambda_r=LAMBDA_R, lambda_u=lambda_u, area_m2=AREA)
            objectives.append(closed_form_provision(radio(), state, self.c, self.power).objective)
        self.assertEqual(objectives, sorted(objectives))


class TestSolversAgree(unittest.TestCase):
    """Closed form, coordinate descent and brute force."""

    def setUp(self):
        self.c = constraints()
        self.power = PowerParams.defaults()
        self.state = ClusterState(lambda_r=LAMBDA_R, lambda_u=5e-4, area_m2=AREA)

    def test_circuit_power_regime(self):
        env = radio()
        self.assertLess(analytic_optimum(env, self.c, self.power, LAMBDA_R), 0.1945)
        closed = closed_form_provision(env, self.state, self.c, self.power)
        descent = coordinate_descent_provision(env, self.state, self.c, self.power)
        brute = brute_force_provision(env, self.state, self.c, self.power)
        for d in (descent, brute):
            self.assertTrue(d.feasible)
            self.assertAlmostEqual(d.mu_a, closed.mu_a, places=9)
            self.assertAlmostEqual(d.objective / closed.objective, 1.0, delta=1e-9)
        self.assertTrue(descent.converged)

    def test_transmit_power_regime(self):
        # strong noise: activating more RRHs saves transmit power
        env = radio(sigma2=1e-9)
        mu_opt = analytic_optimum(env, self.c, self.power, LAMBDA_R)
        self.assertGreater(mu_opt, 0.5)
        self.assertLess(mu_opt, 1.0)

        closed = closed_form_provision(env, self.state, self.c, self.power)
        descent = coordinate_descent_provision(env, self.state, self.c, self.power)
        brute = brute_force_provision(env, self.state, self.c, self.power)

        self.assertTrue(descent.feasible, descent.violations)
        self.assertTrue(descent.converged)
        self.assertAlmostEqual(descent.mu_a, mu_opt, delta=1e-3)
        self.assertLess(descent.objective, closed.objective)
        self.assertTrue(brute.feasible)
        self.assertLessEqual(descent.objective, brute.objective * (1 + 1e-7))
        self.assertAlmostEqual(brute.objective / descent.objective, 1.0, delta=0.01)

    def test_descent_never_worse_than_closed_form(self):
        for sigma2 in (0.0, 1e-13, 1e-11, 1e-10, 1e-9):
            for lambda_u in (1e-4, 5e-4, 1.5e-3):
                with self.subTest(sigma2=sigma2, lambda_u=lambda_u):
                    env = radio(sigma2=sigma2)
                    state = ClusterState(lambda_r=LAMBDA_R, lambda_u=lambda_u, area_m2=AREA)
                    closed = closed_form_provision(env, state, self.c, self.power)
                    descent = coordinate_descent_provision(env, state, self.c, self.power)
                    self.assertTrue(descent.feasible)
                    self.assertLessEqual(descent.objective, closed.objective * (1 + 1e-12))

    def test_brute_force_noiseless_picks_lowest_activity(self):
        env = radio(sigma2=0.0)
        brute = brute_force_provision(env, self.state, self.c, self.power)
        closed = closed_form_provision(env, self.state, self.c, self.power)
        self.assertEqual(brute.mu_a, closed.mu_a)
        self.assertEqual(brute.tx_power, 0.0)

    def test_degenerate_states_return_boundary(self):
        env = radio()
        for lambda_u in (0.0, 1e-2):
            state = ClusterState(lambda_r=LAMBDA_R, lambda_u=lambda_u, area_m2=AREA)
            closed = closed_form_provision(env, state, self.c, self.power)
            for solver in (coordinate_descent_provision, brute_force_provision):
                with self.subTest(lambda_u=lambda_u, solver=solver.__name__):
                    d = solver(env, state, self.c, self.power)
                    self.assertEqual(d.mu_a, closed.mu_a)
                    self.assertEqual(d.feasible, closed.feasible)

    def test_solver_arguments(self):
        env = radio()
        with self.assertRaises(ElasticNetDomainError):
            brute_force_provision(env, self.state, self.c, self.power, grid=8)
        with self.assertRaises(ElasticNetDomainError):
            coordinate_descent_provision(env, self.state, self.c, self.power, max_iters=0)


class TestPrbLoad(unittest.TestCase):
    """Scheduled PRBs and the cores they need."""

    def setUp(self):
        self.c = constraints()
        self.power = PowerParams.defaults()

    def test_scheduled_prbs(self):
        self.assertEqual(scheduled_prbs(self.c), 100)
        self.assertEqual(scheduled_prbs(self.c, 0.5), 50)
        self.assertEqual(scheduled_prbs(self.c, 300.0 / 2200.0), 14)
        self.assertEqual(scheduled_prbs(self.c, 0.0), 1)
        with self.assertRaises(ElasticNetDomainError):
            scheduled_prbs(self.c, 1.5)
        with self.assertRaises(ElasticNetDomainError):
            ClusterState(lambda_r=LAMBDA_R, lambda_u=5e-4, area_m2=AREA, prb_load=-0.1)

    def test_cores_non_decreasing_in_prbs(self):
        cores = [min_cores(self.c, self.power.vm, m) for m in range(1, 301)]
        self.assertEqual(cores, sorted(cores))
        self.assertEqual(cores[0], 1)
        self.assertEqual(cores[99], min_cores(self.c, self.power.vm))
        for m, n in enumerate(cores, start=1):
            self.assertLessEqual(frame_processing_time(m, n, self.power.vm), self.c.deadline_us * (1 + 1e-9))

    def test_light_frame_needs_one_core(self):
        state = ClusterState(lambda_r=LAMBDA_R, lambda_u=1e-4, area_m2=AREA, prb_load=0.14)
        d = closed_form_provision(radio(), state, self.c, self.power)
        self.assertTrue(d.feasible, d.violations)
        self.assertEqual(d.n_cores, 1)
        expected = frame_processing_time(14, 1, self.power.vm) / self.c.deadline_us
        self.assertAlmostEqual(d.utilization, expected, places=12)
        full = closed_form_provision(radio(), replace(state, prb_load=1.0), self.c, self.power)
        self.assertEqual(full.n_cores, 2)
        self.assertLess(d.breakdown.vm_power, full.breakdown.vm_power)


class TestRandomInstances(unittest.TestCase):
    """Boundary round trips and monotonicity over random environments."""

    def draw(self, rng):
        env = RadioEnv.from_db(
            alpha=float(rng.uniform(3.0, 5.0)),
            gamma_db=float(rng.uniform(-5.0, 10.0)),
            sigma2=float(10.0 ** rng.uniform(-14.0, -10.0)),
            bandwidth=20e6,
        )
        c = constraints(epsilon=float(rng.uniform(0.5, 0.95)), r_min=float(rng.uniform(50e3, 500e3)))
        lambda_r = float(rng.uniform(5e-6, 5e-5))
        lambda_u = float(rng.uniform(1e-5, 2e-3))
        variant = KernelVariant.REFERENCE if rng.random() < 0.5 else KernelVariant.AS_WRITTEN
        return env, c, lambda_r, lambda_u, variant

    def test_boundary_round_trips(self):
        rng = np.random.default_rng(2024)
        checked = 0
        while checked < 50:
            env, c, lambda_r, lambda_u, variant = self.draw(rng)
            mu = min_activity_factor(env, lambda_r, lambda_u, c)
            if mu is None:
                continue
            checked += 1
            with self.subTest(instance=checked):
                tx = min_tx_power(env, lambda_r, mu, c, variant)
                coverage = coverage_approx(env, mu * lambda_r, tx, variant)
                target = c.epsilon * coverage_no_noise(env, variant)
                self.assertAlmostEqual(coverage / target, 1.0, delta=1e-9)

                rate = per_user_rate(env, lambda_r, mu, lambda_u)
                self.assertAlmostEqual(rate / c.r_min, 1.0, delta=1e-3)
                self.assertLess(per_user_rate(env, lambda_r, 0.99 * mu, lambda_u), c.r_min)

    def test_activity_grows_with_demand_and_rate(self):
        rng = np.random.default_rng(7)
        for k in range(20):
            env, c, lambda_r, lambda_u, _ = self.draw(rng)
            with self.subTest(instance=k):
                low = min_activity_factor(env, lambda_r, 0.5 * lambda_u, c)
                high = min_activity_factor(env, lambda_r, lambda_u, c)
                if high is not None:
                    self.assertLess(low, high)
                    richer_c = replace(c, r_min=1.5 * c.r_min)
                    richer = min_activity_factor(env, lambda_r, 0.5 * lambda_u, richer_c)
                    self.assertLess(low, richer)

    def test_power_falls_with_activity(self):
        rng = np.random.default_rng(8)
        for k in range(20):
            env, c, lambda_r, _, variant = self.draw(rng)
            with self.subTest(instance=k):
                powers = [min_tx_power(env, lambda_r, mu, c, variant) for mu in (0.05, 0.1, 0.3, 0.6, 1.0)]
                self.assertTrue(all(a > b for a, b in zip(powers, powers[1:])), powers)

    def test_solver_ordering(self):
        rng = np.random.default_rng(31)
        power = PowerParams.defaults()
        for k in range(20):
            env = RadioEnv(
                alpha=float(rng.choice([3.5, 4.0])),
                gamma=1.0,
                sigma2=float(10.0 ** rng.uniform(-13.0, -9.0)),
                bandwidth=20e6,
            )
            c = constraints(r_min=float(rng.uniform(100e3, 300e3)))
            state = ClusterState(lambda_r=LAMBDA_R, lambda_u=float(rng.uniform(1e-4, 1e-3)), area_m2=AREA)
            with self.subTest(instance=k, sigma2=env.sigma2):
                closed = closed_form_provision(env, state, c, power)
                descent = coordinate_descent_provision(env, state, c, power)
                brute = brute_force_provision(env, state, c, power, grid=64)
                self.assertEqual(descent.feasible, closed.feasible)
                self.assertEqual(brute.feasible, closed.feasible)
                # the grid holds the closed-form point, descent is continuous
                self.assertLessEqual(descent.objective, brute.objective * (1 + 1e-7))
                self.assertLessEqual(brute.objective, closed.objective * (1 + 1e-9))


def main():
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    suite.addTests(loader.loadTestsFromTestCase(TestBoundaries))
    suite.addTests(loader.loadTestsFromTestCase(TestCores))
    suite.addTests(loader.loadTestsFromTestCase(TestPrbLoad))
    suite.addTests(loader.loadTestsFromTestCase(TestEvaluateDecision))
    suite.addTests(loader.loadTestsFromTestCase(TestClosedForm))
    suite.addTests(loader.loadTestsFromTestCase(TestSolversAgree))
    suite.addTests(loader.loadTestsFromTestCase(TestRandomInstances))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    sys.exit(0 if result.wasSuccessful() else 1)


if __name__ == "__main__":
    main()
