import math

import numpy as np
import pytest

import dense_oracle
from qswap.fock import JointBasisState, partial_trace_to_memory
from qswap.optics import BLOCK_INPUT_ORDER, DETECTORS, POLARIZATION_MODES, bell_interferometer_polarization
from qswap.protocol import (
    CANONICAL,
    FIRST_HALF,
    SECOND_HALF,
    DetectionPattern,
    Detector,
    ProtocolParams,
    alpha_balanced,
    bell_state,
    enumerate_patterns,
    expected_heralded_state,
    fock_basis,
    herald,
    herald_all,
    local_correction,
    measurement_operator,
    outcome_distribution,
    prepare_aux,
    prepare_initial,
    prepare_initial_lossy,
    prepare_source,
    total_success,
)
from qswap.sampling import random_ensemble


def analytic_pattern(p):
    return 3 / 16 * p * p * (1 - p) ** 2 / (5 * p * p - 8 * p + 4)


class TestAlpha:
    @pytest.mark.parametrize("p, expected", [(0, 0), (1, 1), (0.5, 0.4472135954999579)])
    def test_values(self, p, expected):
        assert alpha_balanced(p) == pytest.approx(expected, abs=1e-12)

    def test_denominator_positive(self):
        ps = np.linspace(0, 1, 1001)
        assert np.all(5 * ps**2 - 8 * ps + 4 > 0)


class TestStates:
    def test_source_vacuum(self):
        s = prepare_source(0, "A")
        assert s.amplitudes == {JointBasisState((0,), (0, 0)): 1}

    def test_source_deterministic(self):
        s = prepare_source(1, "B")
        assert len(s) == 2 and s.norm_squared() == pytest.approx(1)

    def test_source_weights(self):
        s = prepare_source(0.6, "A")
        got = sorted(abs(a) ** 2 for a in s.amplitudes.values())
        assert got == pytest.approx([0.3, 0.3, 0.4])

    def test_aux(self):
        assert len(prepare_aux(0)) == 1
        assert list(prepare_aux(1).amplitudes) == [JointBasisState((), (1, 1))]
        assert prepare_aux(0.3).norm_squared() == pytest.approx(1)

    def test_initial_vacuum(self):
        psi = prepare_initial(ProtocolParams(0, alpha=0))
        assert psi.amplitudes == {JointBasisState((0, 0), (0,) * 8): 1}

    def test_initial_term_count(self):
        psi = prepare_initial(ProtocolParams(0.3, alpha=0.4))
        assert len(psi) == 18
        assert psi.photon_numbers() <= {0, 1, 2, 3, 4}
        assert psi.norm_squared() == pytest.approx(1, abs=1e-12)

    def test_lossless_ensemble_is_pure(self):
        params = ProtocolParams(0.4)
        ens = prepare_initial_lossy(params)
        assert len(ens) == 1 and ens.branches[0][1].allclose(prepare_initial(params))

    def test_lossy_source_amplitude(self):
        # Kraus oracle: the no-loss branch of one node keeps sqrt(eta p / 2) on |1,H>
        p, eta = 0.5, 0.5
        ens = prepare_initial_lossy(ProtocolParams(p, alpha=0.0, eta=eta))
        target = JointBasisState((1, 0), (1, 0, 0, 0, 0, 0, 0, 0))
        amps = [math.sqrt(w) * abs(s.amplitudes[target]) for w, s in ens.branches if target in s.amplitudes]
        assert len(amps) == 1
        # the B node is in its own no-loss branch with vacuum amplitude sqrt(1 - p)
        assert amps[0] == pytest.approx(math.sqrt(eta * p / 2) * math.sqrt(1 - p), abs=1e-12)

    def test_lossy_aux_vacuum_weight(self):
        p, eta = 0.0, 0.3
        alpha = 0.6
        ens = prepare_initial_lossy(ProtocolParams(p, alpha=alpha, eta=eta))
        # p = 0: the only branch structure comes from the auxiliary pair
        vac_only = [w for w, s in ens.branches if len(s) == 1 and sum(next(iter(s.amplitudes)).photons) == 0]
        assert vac_only == [pytest.approx(alpha**2 * (1 - eta) ** 2)]

    @pytest.mark.parametrize("p", [0.1, 0.5, 0.9])
    @pytest.mark.parametrize("eta", [0.2, 0.6, 1.0])
    def test_lossy_trace(self, p, eta):
        assert prepare_initial_lossy(ProtocolParams(p, eta=eta)).trace() == pytest.approx(1, abs=1e-12)


class TestPatterns:
    def test_table(self):
        pats = enumerate_patterns()
        assert len(pats) == 16 == len(set(pats))
        assert pats[0] == DetectionPattern("H1'", "H2'")
        assert all(p.first in FIRST_HALF and p.second in SECOND_HALF for p in pats)

    def test_invalid_pattern(self):
        with pytest.raises(ValueError):
            DetectionPattern("H1'", "H3'")

    @pytest.mark.parametrize("pattern, signs", [
        (("H1'", "H2'"), (1, 1, 1)), (("H1'", "V2'"), (-1, 1, 1)), (("H1'", "V4'"), (1, -1, 1)),
    ])
    def test_expected_states(self, pattern, signs):
        v = expected_heralded_state(DetectionPattern(*pattern))
        np.testing.assert_allclose(v[[0, 5, 7]] * math.sqrt(3), signs)
        assert np.linalg.norm(v) == pytest.approx(1)

    def test_parse(self):
        assert DetectionPattern.parse("(V3', H4')") == DetectionPattern("V3'", "H4'")

    def test_local_correction_maps_to_bell(self):
        for pat in enumerate_patterns():
            np.testing.assert_allclose(local_correction(pat) @ expected_heralded_state(pat), bell_state(),
                                       atol=1e-15)


class TestMeasurementOperator:
    def test_pnrd_pullback_coefficients(self):
        # the canonical projector spreads over input pairs with amplitude 1/4, i.e. 1/16 in the operator
        op = measurement_operator(CANONICAL, Detector.PNRD)
        (c, vec), = op.input_vectors()
        assert c == 1
        mags = sorted({round(abs(a), 12) for a in vec.amplitudes.values()})
        assert mags == [0.25]
        assert len(vec) == 16
        # one photon enters each Hadamard block
        block1 = [POLARIZATION_MODES.index(m) for m in BLOCK_INPUT_ORDER[:4]]
        for k in vec.amplitudes:
            assert sum(k.photons[i] for i in block1) == 1

    def test_threshold_dominates_pnrd(self):
        basis = fock_basis()
        for pat in enumerate_patterns()[:4]:
            th = measurement_operator(pat, Detector.THRESHOLD).matrix(basis)
            pn = measurement_operator(pat, Detector.PNRD).matrix(basis)
            assert np.linalg.eigvalsh(th - pn).min() >= -1e-10

    def test_equal_on_two_photon_sector(self):
        basis = fock_basis()
        two = [i for i, occ in enumerate(basis) if sum(occ) == 2]
        th = measurement_operator(CANONICAL, Detector.THRESHOLD).matrix(basis)
        pn = measurement_operator(CANONICAL, Detector.PNRD).matrix(basis)
        np.testing.assert_allclose(th[np.ix_(two, two)], pn[np.ix_(two, two)], atol=1e-12)
        assert not np.allclose(th, pn)

    def test_threshold_terms_are_the_six_projectors(self):
        op = measurement_operator(CANONICAL, Detector.THRESHOLD)
        i, j = CANONICAL.detector_indices
        assert sorted((occ[i], occ[j]) for _, occ in op.terms) == [(1, 1), (1, 2), (1, 3), (2, 1), (2, 2), (3, 1)]

    def test_unrestricted_others(self):
        op = measurement_operator(CANONICAL, Detector.PNRD, others_vacuum=False)
        assert len(op.terms) > 1


class TestHerald:
    @pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
    def test_canonical_ideal(self, p):
        out = herald(prepare_initial(ProtocolParams(p)), CANONICAL)
        assert out.probability == pytest.approx(analytic_pattern(p), abs=1e-14)
        np.testing.assert_allclose(out.memory.matrix, np.outer(bell_state(), bell_state()), atol=1e-12)

    def test_p_zero_balanced_is_degenerate(self):
        out = herald(prepare_initial(ProtocolParams(0.0)), CANONICAL)
        assert out.probability == 0 and out.degenerate and math.isnan(out.fidelity)

    def test_p_zero_aux_alone_clicks_both_halves(self):
        # aux photons enter H3 and V3, which feed different Hadamard blocks
        alpha = 0.5
        out = herald(prepare_initial(ProtocolParams(0.0, alpha=alpha)), CANONICAL)
        assert out.probability == pytest.approx(alpha**2 / 16, abs=1e-14)
        assert out.memory.matrix[0, 0] == pytest.approx(1)

    def test_off_balanced_alpha_lowers_fidelity(self):
        p = 0.5
        outs = herald_all(prepare_initial(ProtocolParams(p, alpha=0.9 * alpha_balanced(p))))
        assert all(o.fidelity < 1 - 1e-4 for o in outs)
        probs = [o.probability for o in outs]
        assert max(probs) - min(probs) < 1e-15

    @pytest.mark.parametrize("p", [0.3, 0.7])
    def test_balanced_alpha_maximizes_fidelity(self, p):
        a0 = alpha_balanced(p)
        grid = np.clip(a0 + np.linspace(-0.2, 0.2, 21), 0, 1)
        fids = [herald(prepare_initial(ProtocolParams(p, alpha=a)), CANONICAL).fidelity for a in grid]
        f0 = herald(prepare_initial(ProtocolParams(p)), CANONICAL).fidelity
        assert f0 == pytest.approx(1, abs=1e-12)
        assert all(f <= f0 + 1e-12 for f in fids)

    def test_total_success(self):
        assert total_success(ProtocolParams(0.5)) == pytest.approx(0.15, abs=1e-14)
        assert total_success(ProtocolParams(0.5), all_patterns=False) == pytest.approx(0.15, abs=1e-14)
        assert total_success(ProtocolParams(0.0)) == 0
        assert total_success(ProtocolParams(1.0)) == pytest.approx(0, abs=1e-15)

    def test_total_success_near_optimum(self):
        assert total_success(ProtocolParams(0.6135)) == pytest.approx(0.173, abs=5e-4)

    def test_completeness(self, rng):
        for source in (prepare_initial(ProtocolParams(0.6)), random_ensemble(rng),
                       prepare_initial_lossy(ProtocolParams(0.5, eta=0.7))):
            dist = outcome_distribution(source)
            assert sum(dist.values()) == pytest.approx(1, abs=1e-9)

    def test_dominance_random(self, rng):
        for _ in range(10):
            rho = random_ensemble(rng)
            for pat in enumerate_patterns():
                assert herald(rho, pat, "threshold").probability >= herald(rho, pat, "pnrd").probability - 1e-12

    def test_memory_from_partial_trace(self):
        psi = prepare_initial(ProtocolParams(0.4))
        assert partial_trace_to_memory(psi).trace() == pytest.approx(1)


@pytest.fixture(scope="module")
def dense_unitary():
    return dense_oracle.fock_unitary(bell_interferometer_polarization().matrix)


class TestDenseOracle:
    def test_oracle_single_photon_matches_columns(self, dense_unitary):
        u = bell_interferometer_polarization().matrix
        out = dense_unitary @ dense_oracle.create("V2")
        for k in range(8):
            occ = tuple(int(m == k) for m in range(8))
            assert out[dense_oracle.INDEX[occ]] == pytest.approx(u[k, 5], abs=1e-12)

    def test_oracle_kraus_match_binomial(self):
        from qswap.optics import loss_kraus_amplitude

        for k, km in enumerate(dense_oracle.dilation_kraus(0.37)):
            for n in range(5):
                expect = loss_kraus_amplitude(n, k, 0.37)
                assert abs(km[n - k, n]) == pytest.approx(expect, abs=1e-12) if k <= n else True

    @pytest.mark.parametrize("detector", ["pnrd", "threshold"])
    @pytest.mark.parametrize("pattern", [CANONICAL, DetectionPattern("V3'", "H4'")])
    def test_engine_matches_oracle(self, dense_unitary, detector, pattern):
        p, eta = 0.5, 0.8
        i, j = DETECTORS.index(pattern.first), DETECTORS.index(pattern.second)
        target = expected_heralded_state(pattern)
        prob, fid = dense_oracle.evaluate(p, eta, alpha_balanced(p), dense_unitary, i, j, detector, target)
        out = herald(prepare_initial_lossy(ProtocolParams(p, eta=eta)), pattern, detector)
        assert out.probability == pytest.approx(prob, abs=1e-12)
        assert out.fidelity == pytest.approx(fid, abs=1e-9)
