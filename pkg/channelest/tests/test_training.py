import numpy as np
import pytest
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from channelest.channel_model import SEUCE, SIUCE
from channelest.exceptions import CapacityExceededError, InvalidArgumentError
from channelest.ofdm import partial_dft
from channelest.training import (
    DISJOINTNESS, PILOT_COUNT, SLOT_INVARIANCE, SUBCARRIER_SPAN, TONE_BUDGET, TONE_PER_SLOT,
    PilotAllocation, ReflectionPattern, adjacent_pilots, build_pattern, check_feasibility, complexity_seuce,
    complexity_siuce, dft_pattern, equispaced_pilots, k1_max, k2_max, min_pilot_tones, onoff_pattern,
    parameter_count, parse_allocation_grid, permuted_allocation, random_pattern, recommend_scheme,
    render_allocation, render_pattern, seuce_two_step_allocation, spread_score,
)

HAND_GRID = """\
1 2 3 1 4 5 1 2 2
1 2 3 1 4 5 1 3 3
1 2 3 1 4 5 1 4 4
1 2 3 1 4 5 1 5 5"""


@pytest.mark.unit
class SiuceAllocationTest(SimpleTestCase):
    """Slot-invariant pilot combs of the simultaneous scheme"""

    def test_equispaced_examples(self):
        """Test comb allocations for N = 16 and N = 9"""
        allocation = equispaced_pilots(16, 4, 4)
        self.assertEqual(allocation.tones(0, 0), {0, 4, 8, 12})
        self.assertEqual(allocation.tones(3, 0), {3, 7, 11, 15})
        self.assertEqual(equispaced_pilots(9, 3, 3).tones(2, 0), {2, 5, 8})

    def test_equispaced_requires_divisor(self):
        """Test L_p must divide N"""
        with self.assertRaises(InvalidArgumentError):
            equispaced_pilots(16, 2, 3)

    def test_equispaced_rejects_too_many_users(self):
        """Test more users than comb offsets are rejected"""
        with self.assertRaises(InvalidArgumentError):
            equispaced_pilots(16, 5, 4)

    def test_adjacent_examples(self):
        """Test contiguous blocks for N = 16"""
        allocation = adjacent_pilots(16, 4, 4)
        self.assertEqual(allocation.tones(0, 0), {0, 1, 2, 3})
        self.assertEqual(allocation.tones(3, 0), {12, 13, 14, 15})

    def test_adjacent_rejects_overflow(self):
        """Test K * L_p above N is rejected"""
        with self.assertRaises(InvalidArgumentError):
            adjacent_pilots(16, 5, 4)

    def test_single_user_designs_coincide(self):
        """Test one user on every tone gets the same set either way"""
        self.assertEqual(equispaced_pilots(8, 1, 8).sets, adjacent_pilots(8, 1, 8).sets)

    def test_disjoint_and_slot_invariant(self):
        """Test comb allocations have no collisions"""
        allocation = equispaced_pilots(16, 4, 4)
        self.assertTrue(allocation.slot_invariant)
        self.assertEqual(allocation.collisions(9), [])
        self.assertEqual(allocation.zeta(0, 9), 36)


@pytest.mark.unit
class SeuceAllocationTest(SimpleTestCase):
    """Two-step and permuted allocations of the sequential scheme"""

    def test_two_step_single_user(self):
        """Test a whole sub-carrier in every slot plus two leftovers spaced evenly around it"""
        allocation = seuce_two_step_allocation(9, 3, 3, {0, 3, 6}, [6])
        self.assertEqual(allocation.K, 2)
        self.assertEqual(allocation.tones(0, 2), {0, 3, 6})
        self.assertEqual(allocation.tones(1, 0), {1, 4, 7})
        for t in (1, 2, 3):
            self.assertEqual(allocation.tones(1, t), {1})
        self.assertEqual(allocation.zeta(1), 6)
        self.assertTrue(check_feasibility(allocation, SEUCE, 9, 3, 3).passed)

    def test_two_step_full_capacity(self):
        """Test four users fill every slot and a fifth budget overflows"""
        allocation = seuce_two_step_allocation(9, 3, 3, {0, 3, 6}, [6] * 4)
        self.assertNotIn('.', render_allocation(allocation))
        for k in range(1, 5):
            self.assertEqual(allocation.zeta(k), 6)
            self.assertEqual(len(allocation.tones(k, k - 1)), 3)
        self.assertTrue(check_feasibility(allocation, SEUCE, 9, 3, 3).passed)
        with self.assertRaises(CapacityExceededError) as ctx:
            seuce_two_step_allocation(9, 3, 3, {0, 3, 6}, [6] * 5)
        self.assertEqual(ctx.exception.user, 5)

    def test_two_step_minimal_budget(self):
        """Test zeta = M + L with L = 1 is one sub-carrier in every slot"""
        allocation = seuce_two_step_allocation(4, 1, 1, {0}, [2])
        self.assertEqual(allocation.tones(1, 0), {1})
        self.assertEqual(allocation.tones(1, 1), {1})

    def test_two_step_leftover_half_band_away(self):
        """Test a single leftover tone lands N/2 away from the whole sub-carrier"""
        allocation = seuce_two_step_allocation(8, 1, 2, {0, 4}, [3])
        self.assertEqual(allocation.tones(1, 0), {1, 5})
        self.assertEqual(allocation.tones(1, 1), {1})

    def test_two_step_default_scenario(self):
        """Test zeta = 12 on N = 16, M = 8 gives every user four well-spread sub-carriers"""
        allocation = seuce_two_step_allocation(16, 8, 4, {0, 4, 8, 12}, [12] * 9)
        self.assertTrue(check_feasibility(allocation, SEUCE, 16, 8, 4).passed)
        for k in range(1, 10):
            self.assertEqual(allocation.zeta(k), 12)
            self.assertEqual(len(allocation.tones(k, k - 1)), 4)
            subcarriers = set().union(*(allocation.tones(k, t) for t in range(9)))
            self.assertEqual(len(subcarriers), 4)
            self.assertLess(np.linalg.cond(partial_dft(16, 4, subcarriers).values), 25)

    def test_two_step_beats_packed_leftovers(self):
        """Test the chosen leftovers score well below packing them on sub-carriers 13, 14 and 15"""
        allocation = seuce_two_step_allocation(16, 8, 4, {0, 4, 8, 12}, [12] * 9)
        chosen = 0.0
        for k in range(1, 10):
            whole = allocation.tones(k, k % 9)
            chosen += spread_score(16, 4, whole, allocation.tones(k, k - 1) - whole, 9)
        packed = sum(spread_score(16, 4, [n], [13, 14, 15], 9) for n in (1, 2, 3, 5, 6, 7, 9, 10, 11))
        self.assertLess(10 * chosen, packed)
        self.assertGreater(spread_score(8, 2, [1], [2], 2), spread_score(8, 2, [1], [5], 2))

    def test_two_step_rejects_small_budget(self):
        """Test a budget below M + L is rejected"""
        with self.assertRaises(InvalidArgumentError):
            seuce_two_step_allocation(9, 3, 3, {0, 3, 6}, [5])

    def test_permuted_feasible_and_spread(self):
        """Test the permuted benchmark meets the rank conditions"""
        allocation = permuted_allocation(9, 3, 3, {0, 3, 6}, [6] * 3, np.random.default_rng(4))
        self.assertTrue(check_feasibility(allocation, SEUCE, 9, 3, 3).passed)
        for k in range(1, 4):
            self.assertEqual(allocation.zeta(k), 6)
            self.assertGreaterEqual(len(allocation.union(k)), 3)

    def test_permuted_reproducible(self):
        """Test the same generator seed gives the same permuted allocation"""
        first = permuted_allocation(16, 8, 4, {0, 4, 8, 12}, [12] * 4, np.random.default_rng(9))
        second = permuted_allocation(16, 8, 4, {0, 4, 8, 12}, [12] * 4, np.random.default_rng(9))
        self.assertEqual(first.sets, second.sets)


@pytest.mark.unit
class ReflectionPatternTest(SimpleTestCase):
    """DFT, ON-OFF and random IRS reflection patterns"""

    def test_dft_examples(self):
        """Test the M = 3 DFT pattern entries"""
        pattern = dft_pattern(3)
        assert_allclose(pattern.Xi[:, 0], np.ones(4))
        self.assertAlmostEqual(pattern.theta(1)[0], -1j)
        self.assertEqual(pattern.tau, 4)

    def test_dft_orthogonal(self):
        """Test Xi Xi^H = (M+1) I for every M up to 64"""
        for M in range(1, 65):
            Xi = dft_pattern(M).Xi
            assert_allclose(Xi @ Xi.conj().T, (M + 1) * np.eye(M + 1), atol=1e-9)

    def test_dft_trace_is_one(self):
        """Test the DFT pattern attains tr{(Xi Xi^H)^-1} = 1"""
        self.assertAlmostEqual(dft_pattern(8).gram_trace_inverse(), 1.0)

    def test_onoff_structure(self):
        """Test the ON-OFF pattern switches on one sub-surface per slot"""
        Xi = onoff_pattern(3).Xi
        expected = np.array([[1, 1, 1, 1], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
        assert_allclose(Xi, expected)
        self.assertNotAlmostEqual(abs(np.linalg.det(Xi)), 0.0)

    def test_onoff_trace(self):
        """Test the ON-OFF trace is 2M + 1"""
        self.assertAlmostEqual(onoff_pattern(8).gram_trace_inverse(), 17.0)
        self.assertAlmostEqual(onoff_pattern(3).gram_trace_inverse(), 7.0)

    def test_random_unit_modulus(self):
        """Test random reflection coefficients have unit modulus"""
        Xi = random_pattern(8, np.random.default_rng(1)).Xi
        assert_allclose(np.abs(Xi), 1.0)

    def test_random_never_beats_dft(self):
        """Test no random pattern has a smaller trace than the DFT pattern"""
        rng = np.random.default_rng(3)
        traces = np.array([random_pattern(8, rng).gram_trace_inverse() for _ in range(1000)])
        self.assertTrue(np.all(traces >= 1.0 - 1e-9))
        self.assertLess(1.0, np.median(traces))

    def test_random_reproducible(self):
        """Test the same seed gives the same random pattern"""
        first = random_pattern(4, np.random.default_rng(6)).Xi
        second = random_pattern(4, np.random.default_rng(6)).Xi
        assert_allclose(first, second)

    def test_build_pattern_random_needs_rng(self):
        """Test a random pattern without a generator is rejected"""
        with self.assertRaises(InvalidArgumentError):
            build_pattern('random', 4)

    def test_pattern_first_row_must_be_ones(self):
        """Test the direct-path row of a pattern must be all ones"""
        with self.assertRaises(InvalidArgumentError):
            ReflectionPattern(np.eye(3, dtype=complex))


@pytest.mark.unit
class FeasibilityTest(SimpleTestCase):
    """Rank conditions reported per scheme"""

    def test_siuce_feasible(self):
        """Test a comb with L tones per user passes"""
        report = check_feasibility(equispaced_pilots(9, 3, 3), SIUCE, 9, 3, 3)
        self.assertTrue(report.passed)
        self.assertEqual(report.lines(), ['siuce: feasible'])

    def test_siuce_pilot_count(self):
        """Test a user with L-1 tones is flagged"""
        allocation = PilotAllocation.from_user_sets(9, [{0, 3, 6}, {1, 4}])
        report = check_feasibility(allocation, SIUCE, 9, 3, 3)
        self.assertEqual(report.constraints, {PILOT_COUNT})
        self.assertEqual(report.violations[0].user, 1)

    def test_siuce_slot_variation(self):
        """Test tones changing across slots are flagged for the simultaneous scheme"""
        allocation = seuce_two_step_allocation(9, 3, 3, {0, 3, 6}, [6])
        self.assertIn(SLOT_INVARIANCE, check_feasibility(allocation, SIUCE, 9, 3, 3).constraints)

    def test_collision_flagged(self):
        """Test a tone shared by two users is flagged"""
        allocation = PilotAllocation.from_user_sets(9, [{0, 3, 6}, {1, 3, 7}])
        report = check_feasibility(allocation, SIUCE, 9, 3, 3)
        self.assertIn(DISJOINTNESS, report.constraints)
        self.assertEqual(allocation.collisions(1), [(0, 3, [0, 1])])

    def test_seuce_empty_slot(self):
        """Test a non-reference user missing a slot is flagged"""
        ref = [{0, 3, 6}] * 4
        user = [{1, 2}, {1, 4}, {1, 2, 4}, set()]
        allocation = PilotAllocation.from_slot_sets(9, [ref, user])
        self.assertEqual(check_feasibility(allocation, SEUCE, 9, 3, 3).constraints, {TONE_PER_SLOT})

    def test_seuce_span(self):
        """Test a user on two sub-carriers is flagged when L = 3"""
        ref = [{0, 3, 6}] * 4
        user = [{1, 2}, {1, 2}, {1}, {1}]
        allocation = PilotAllocation.from_slot_sets(9, [ref, user])
        self.assertEqual(check_feasibility(allocation, SEUCE, 9, 3, 3).constraints, {SUBCARRIER_SPAN})

    def test_seuce_budget(self):
        """Test five tones are flagged when M + L = 6"""
        ref = [{0, 3, 6}] * 4
        user = [{1, 4}, {1}, {1}, {2}]
        allocation = PilotAllocation.from_slot_sets(9, [ref, user])
        self.assertEqual(check_feasibility(allocation, SEUCE, 9, 3, 3).constraints, {TONE_BUDGET})


@pytest.mark.unit
class CapacityTest(SimpleTestCase):
    """User limits, scheme choice, parameter counts and complexity"""

    def test_limits_default_scenario(self):
        """Test K1 = 4 and K2 = 10 for N = 16, M = 8, L = 4"""
        self.assertEqual(k1_max(16, 4), 4)
        self.assertEqual(k2_max(16, 8, 4), 10)

    def test_limits_small_instance(self):
        """Test K1 = 3 and K2 = 5 for N = 9, M = 3, L = 3"""
        self.assertEqual(k1_max(9, 3), 3)
        self.assertEqual(k2_max(9, 3, 3), 5)

    def test_single_tap_limits_coincide(self):
        """Test L = 1 gives K1 = K2 = N"""
        for N, M in [(4, 1), (16, 8), (64, 32)]:
            self.assertEqual(k1_max(N, 1), N)
            self.assertEqual(k2_max(N, M, 1), N)

    def test_k2_never_below_k1(self):
        """Test the sequential scheme supports at least as many users"""
        for N in range(4, 33, 4):
            for M in (1, 2, 4, 8):
                for L in range(1, N // 2 + 1):
                    self.assertGreaterEqual(k2_max(N, M, L), k1_max(N, L))

    def test_rejects_invalid_dimensions(self):
        """Test L above N is rejected"""
        with self.assertRaises(InvalidArgumentError):
            k1_max(4, 5)

    def test_recommend_scheme(self):
        """Test scheme choice on both sides of K1 and beyond K2"""
        self.assertEqual(recommend_scheme(4, 16, 8, 4), SIUCE)
        self.assertEqual(recommend_scheme(5, 16, 8, 4), SEUCE)
        self.assertEqual(recommend_scheme(10, 16, 8, 4), SEUCE)
        with self.assertRaises(CapacityExceededError):
            recommend_scheme(11, 16, 8, 4)

    def test_parameter_count(self):
        """Test unknown counts of both schemes"""
        self.assertEqual(parameter_count(SIUCE, 4, 8, 4), 144)
        self.assertEqual(parameter_count(SEUCE, 4, 8, 4), 72)

    def test_min_pilot_tones(self):
        """Test per-user pilot minimums"""
        self.assertEqual(min_pilot_tones(SIUCE, 8, 4), 36)
        self.assertEqual(min_pilot_tones(SEUCE, 8, 4), 12)
        self.assertEqual(min_pilot_tones(SEUCE, 8, 4, reference=True), 36)

    def test_complexity(self):
        """Test multiplication counts; one sequential user costs the same as SiUCE"""
        self.assertEqual(complexity_siuce(8, 4), 468)
        self.assertAlmostEqual(complexity_seuce(8, 4, 1), 468)
        nonref = 2 * 4 * 8 * (16 + 4 + 1) + 9 ** 3 + 7 * 81
        self.assertAlmostEqual(complexity_seuce(8, 4, 10), 9 * nonref / 20 + 46.8)


@pytest.mark.unit
class RenderTest(SimpleTestCase):
    """Text grids of allocations and patterns"""

    def test_render_comb(self):
        """Test a slot-invariant comb renders one line per slot"""
        self.assertEqual(render_allocation(equispaced_pilots(9, 3, 3), 1), "1 2 3 1 2 3 1 2 3")

    def test_free_tones_render_as_dots(self):
        """Test unallocated tones render as '.'"""
        allocation = PilotAllocation.from_user_sets(4, [{0}])
        self.assertEqual(render_allocation(allocation, 2), "1 . . .\n1 . . .")

    def test_parse_rendered_grid(self):
        """Test a hand-written sequential grid parses to a feasible allocation and renders back"""
        allocation = parse_allocation_grid(HAND_GRID)
        self.assertEqual(allocation.tones(3, 2), {4, 7, 8})
        self.assertTrue(check_feasibility(allocation, SEUCE, 9, 3, 3).passed)
        self.assertEqual(render_allocation(allocation), HAND_GRID)

    def test_parse_rejects_bad_cell(self):
        """Test unknown grid cells are rejected"""
        with self.assertRaises(InvalidArgumentError):
            parse_allocation_grid("1 x .")

    def test_render_pattern(self):
        """Test the ON-OFF pattern renders real entries"""
        text = render_pattern(onoff_pattern(1), precision=1)
        self.assertEqual(text, "1.0 1.0\n0.0 1.0")
