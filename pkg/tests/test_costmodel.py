import itertools
import math
import pytest
from hypothesis import given, strategies as st

from nf4lut import (
    KernelGeometry,
    CycleCosts,
    lut_traffic,
    instruction_reduction,
    latency_advantage,
    amdahl_projection,
    overhead_sweep,
    memory_footprint,
    evaluate,
)
from nf4lut.core.CostModel import QWEN3_32B_DEQUANT_OVERHEAD, MEASURED_KERNEL_SPEEDUP


class TestLutTraffic:
    def test_defaults(self):
        assert lut_traffic() == (4096, 64, 64)
        assert lut_traffic(KernelGeometry()) == (4096, 64, 64.0)

    def test_single_lane(self):
        assert lut_traffic(KernelGeometry(lanes_per_block=1))[2] == 1

    def test_wide_block(self):
        assert lut_traffic(KernelGeometry(lanes_per_block=128, lut_bytes=64)) == (8192, 64, 128)

    def test_invalid_geometry(self):
        with pytest.raises(ValueError):
            KernelGeometry(lanes_per_block=0)

    def test_tile_elems(self):
        assert KernelGeometry().tile_elems == 512


class TestInstructionReduction:
    def test_defaults(self):
        baseline, optimized, reduction = instruction_reduction()
        assert (baseline, optimized) == (7, 2)
        assert reduction == pytest.approx(0.714, abs=0.005)
        assert f"{reduction * 100:.0f}%" == "71%"

    def test_variants(self):
        assert instruction_reduction(5, 5)[2] == 0
        assert instruction_reduction(10, 2)[2] == pytest.approx(0.8)


class TestLatencyAdvantage:
    def test_defaults(self):
        lo, hi = latency_advantage()
        assert lo == pytest.approx(12.6, abs=0.05)
        assert hi == pytest.approx(15.3, abs=0.05)
        assert 12 <= lo < hi <= 16

    def test_equal_costs(self):
        assert latency_advantage(CycleCosts(1, 1, 1)) == (1, 1)

    def test_formula(self):
        assert latency_advantage(CycleCosts(300, 30, 20)) == (10, 15)

    def test_invalid_costs(self):
        with pytest.raises(ValueError):
            CycleCosts(10, 23, 19)
        with pytest.raises(ValueError):
            CycleCosts(290, 0, 19)

    def test_scaled(self):
        assert latency_advantage(CycleCosts().scaled(3)) == pytest.approx(latency_advantage())


class TestAmdahlProjection:
    def test_textbook_case(self):
        assert amdahl_projection(0.5, 2) == 4 / 3

    def test_no_overhead(self):
        for s in (0.5, 1, 2.19, 1000):
            assert amdahl_projection(0.0, s) == 1.0

    def test_qwen_batch_32(self):
        assert amdahl_projection(0.295, 2.19) == pytest.approx(1.191, abs=5e-4)

    def test_full_overhead(self):
        assert amdahl_projection(1.0, 2.19) == pytest.approx(2.19)

    @pytest.mark.parametrize("f,s", [(-0.1, 2), (1.1, 2), (0.5, 0), (0.5, -1), (math.nan, 2), (0.5, math.inf)])
    def test_domain(self, f, s):
        with pytest.raises(ValueError):
            amdahl_projection(f, s)

    def test_monotone_grid(self):
        fs = [i / 19 for i in range(20)]
        ss = [1 + (i + 1) / 2 for i in range(20)]
        for f, s in itertools.product(fs, ss):
            value = amdahl_projection(f, s)
            assert 1 - 1e-12 <= value <= s * (1 + 1e-12)
        for s in ss:
            values = [amdahl_projection(f, s) for f in fs]
            assert values == sorted(values)
        for f in fs:
            values = [amdahl_projection(f, s) for s in ss]
            assert values == sorted(values)

    @given(st.floats(min_value=0, max_value=1), st.floats(min_value=0.01, max_value=100))
    def test_slowdown_below_one(self, f, s):
        value = amdahl_projection(f, s)
        if s < 1:
            assert value <= 1 + 1e-12
        else:
            assert value >= 1 - 1e-12


class TestOverheadSweep:
    def test_default_profile(self):
        sweep = overhead_sweep(MEASURED_KERNEL_SPEEDUP["Qwen3-32B"])
        assert list(sweep) == [2, 4, 8, 16, 32, 64]
        assert sweep[32] == pytest.approx(1.191, abs=5e-4)
        # a larger dequantization share gives a larger gain
        assert sweep[2] > sweep[64]

    def test_custom_profile(self):
        assert overhead_sweep(2, {1: 0.5}) == {1: 4 / 3}

    def test_profile_constants(self):
        assert QWEN3_32B_DEQUANT_OVERHEAD[32] == 0.295
        assert all(1 < s < 3 for s in MEASURED_KERNEL_SPEEDUP.values())


class TestMemoryFootprint:
    def test_32b_model(self):
        fp16_bytes, nf4_bytes, ratio = memory_footprint(32_000_000_000)
        assert fp16_bytes == 64_000_000_000
        assert nf4_bytes == 18_000_000_000
        assert ratio == pytest.approx(3.556, abs=1e-3)

    def test_partial_block(self):
        assert memory_footprint(65)[:2] == (130, 33 + 8)

    def test_invalid(self):
        with pytest.raises(ValueError):
            memory_footprint(-1)


class TestEvaluate:
    def test_defaults(self):
        result = evaluate()
        assert result.traffic_ratio == 64
        assert result.instr_reduction == pytest.approx(5 / 7)
        assert result.latency_ratio_lo == pytest.approx(290 / 23)
        assert result.latency_ratio_hi == pytest.approx(290 / 19)
        assert set(result.to_json()) >= {"traffic_ratio", "instr_reduction", "latency_ratio_lo", "latency_ratio_hi"}
