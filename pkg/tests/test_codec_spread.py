"""Spread-spectrum codec tests: modulation, blind detection, false alarms."""

from math import ceil, comb

import numpy as np
import pytest

from stegotrace.codec_spread import (
    SpreadParams,
    detect_dwtss,
    detect_ss,
    encode_dwtss,
    encode_ss,
)
from stegotrace.errors import CarrierTooSmall
from stegotrace.payload import Fingerprint32
from stegotrace.signals import prn_generate, round_half_away

BALANCED_FP = Fingerprint32(tuple([1, 0] * 16))


def exact_false_valid_probability(threshold):
    """Binomial tail oracle: P(valid) for 32 uniform independent bits."""
    min_matches = ceil(16 * (1 + threshold))
    return sum(comb(32, k) for k in range(min_matches, 33)) / 2**32


class TestParams:
    def test_validation(self):
        with pytest.raises(ValueError):
            SpreadParams(strength=-1.0)
        with pytest.raises(ValueError):
            SpreadParams(num_segments=16)
        with pytest.raises(ValueError):
            SpreadParams(corr_threshold=0.0)

    def test_zero_strength_allowed_for_degenerate_case(self):
        assert SpreadParams(strength=0.0).strength == 0.0


class TestSpatial:
    def test_clean_roundtrip(self, scene, fingerprint, spread_params):
        img = scene(40, 64, 64)
        result = detect_ss(encode_ss(img, fingerprint, spread_params), fingerprint, spread_params)
        assert result.valid
        assert result.correlation >= 0.9
        assert result.ber <= 1 / 32

    def test_zero_strength_identity_and_degenerate_detection(self, spread_params):
        img = np.full((64, 64, 3), 128, dtype=np.uint8)
        params = SpreadParams(strength=0.0, prn_seed=spread_params.prn_seed)
        marked = encode_ss(img, BALANCED_FP, params)
        np.testing.assert_array_equal(marked, img)
        result = detect_ss(marked, BALANCED_FP, params)
        assert not result.valid
        assert abs(result.correlation) < 0.5

    def test_constant_image_samples_match_pinned_prn(self, spread_params):
        # sample s of segment i must equal round(128 + bipolar_i * a * prn_s)
        img = np.full((64, 64, 3), 128, dtype=np.uint8)
        marked = encode_ss(img, BALANCED_FP, spread_params)
        n = 64 * 64
        seg_len = n // 32
        prn = prn_generate(spread_params.prn_seed, 32 * seg_len)
        blue = marked[:, :, 2].ravel()
        for s in range(10):
            seg = s // seg_len
            expected = round_half_away(
                128 + BALANCED_FP.bipolar[seg] * spread_params.strength * prn[s]
            )
            assert blue[s] == expected

    def test_trailing_remainder_untouched(self, scene, fingerprint, spread_params):
        img = scene(41, 66, 66)  # 4356 samples; 4356 - 32*136 = 4 remainder
        marked = encode_ss(img, fingerprint, spread_params)
        n = 66 * 66
        used = 32 * (n // 32)
        np.testing.assert_array_equal(
            marked[:, :, 2].ravel()[used:], img[:, :, 2].ravel()[used:]
        )

    def test_perturbation_bound(self, scene, fingerprint, spread_params):
        img = scene(42, 64, 80)
        marked = encode_ss(img, fingerprint, spread_params)
        diff = np.abs(marked.astype(np.int16) - img.astype(np.int16))
        assert diff.max() <= ceil(spread_params.strength) + 1
        np.testing.assert_array_equal(marked[:, :, :2], img[:, :, :2])

    def test_carrier_too_small(self, fingerprint, spread_params):
        with pytest.raises(CarrierTooSmall):
            encode_ss(np.zeros((32, 32, 3), dtype=np.uint8), fingerprint, spread_params)

    def test_wrong_seed_behaves_like_unwatermarked(self, scene, fingerprint, spread_params):
        img = scene(43, 128, 128)
        marked = encode_ss(img, fingerprint, spread_params)
        wrong = SpreadParams(strength=spread_params.strength,
                             prn_seed=spread_params.prn_seed + 1)
        result = detect_ss(marked, fingerprint, wrong)
        assert not result.valid


class TestDwtSpread:
    def test_clean_roundtrip(self, scene, fingerprint, spread_params):
        img = scene(50, 128, 128)
        result = detect_dwtss(encode_dwtss(img, fingerprint, spread_params),
                              fingerprint, spread_params)
        assert result.valid
        assert result.ber <= 1 / 32

    def test_odd_dims_trailing_row_untouched(self, scene, fingerprint, spread_params):
        img = scene(51, 129, 128)
        marked = encode_dwtss(img, fingerprint, spread_params)
        np.testing.assert_array_equal(marked[128, :, :], img[128, :, :])
        assert detect_dwtss(marked, fingerprint, spread_params).valid

    def test_perturbation_bound(self, scene, fingerprint, spread_params):
        img = scene(52, 128, 160)
        marked = encode_dwtss(img, fingerprint, spread_params)
        diff = np.abs(marked.astype(np.int16) - img.astype(np.int16))
        assert diff.max() <= ceil(spread_params.strength) + 1

    def test_carrier_too_small(self, fingerprint, spread_params):
        with pytest.raises(CarrierTooSmall):
            encode_dwtss(np.zeros((64, 64, 3), dtype=np.uint8), fingerprint, spread_params)


class TestCleanAgreement:
    def test_ber_within_one_bit_across_corpus(self, scene, fingerprint, spread_params):
        # detector/embedder PRN agreement: clean ber <= 1/32 on 20 carriers
        for i in range(20):
            img = scene(60 + i, 192, 224)
            assert detect_ss(encode_ss(img, fingerprint, spread_params),
                             fingerprint, spread_params).ber <= 1 / 32
            assert detect_dwtss(encode_dwtss(img, fingerprint, spread_params),
                                fingerprint, spread_params).ber <= 1 / 32


class TestFalseAlarms:
    def test_exact_binomial_tail_oracle(self):
        # frozen from the oracle: tail for >= 24 of 32 matches (tau = 0.5)
        assert exact_false_valid_probability(0.5) == 15033173 / 2**32
        assert exact_false_valid_probability(0.5) == pytest.approx(3.500183e-3, rel=1e-6)
        # the tail first drops under 1e-3 at >= 26 matches (tau > 0.5625)
        assert exact_false_valid_probability(0.5625) == pytest.approx(1.0512e-3, rel=1e-4)
        assert exact_false_valid_probability(0.625) == pytest.approx(2.6753e-4, rel=1e-4)

    def test_unwatermarked_false_valid_rate_within_binomial_envelope(
        self, scene, fingerprint, spread_params
    ):
        # 200 unwatermarked carriers per scheme; false-valid count must stay
        # inside the 99.9% binomial envelope of the oracle probability
        p = exact_false_valid_probability(spread_params.corr_threshold)
        n = 200
        false_ss = sum(
            detect_ss(scene(3000 + i, 160, 192), fingerprint, spread_params).valid
            for i in range(n)
        )
        false_dw = sum(
            detect_dwtss(scene(3000 + i, 160, 192), fingerprint, spread_params).valid
            for i in range(n)
        )
        # P(X >= 6 | n=200, p=0.0035) ~ 5e-5
        assert false_ss <= 6
        assert false_dw <= 6
        assert p < 0.004
