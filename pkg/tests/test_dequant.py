import numpy as np
import pytest

from nf4lut import (
    Codebook,
    ExecConfig,
    DecoderKind,
    QuantizedTensor,
    TiledDequantizer,
    NF4_CODE_VALUES,
    decode_nibble_lut,
    decode_nibble_tree,
    dequantize_byte,
    dequantize_blockwise,
    dequantize_reference,
    quantize_blockwise,
    CodebookMismatchError,
    InvariantViolationError,
    NibbleRangeError,
    NonFiniteValueError,
)


def _bits(array: np.ndarray) -> np.ndarray:
    return array.view(f"u{array.itemsize}")


class TestNibbleDecoders:
    def test_lut_examples(self, codebook: Codebook):
        assert decode_nibble_lut(0, codebook) == -1.0
        assert decode_nibble_lut(7, codebook) == 0.0
        assert decode_nibble_lut(15, codebook) == 1.0

    def test_tree_examples(self, codebook: Codebook):
        assert decode_nibble_tree(8) == codebook.values[8]
        assert decode_nibble_tree(0) == -1.0

    def test_tree_equals_lut_for_every_nibble(self, codebook: Codebook):
        for q in range(16):
            tree, lut = decode_nibble_tree(q), decode_nibble_lut(q, codebook)
            assert tree.dtype == np.float32
            assert tree.tobytes() == lut.tobytes()

    @pytest.mark.parametrize("q", [-1, 16, 255])
    def test_out_of_range(self, codebook: Codebook, q):
        with pytest.raises(NibbleRangeError):
            decode_nibble_lut(q, codebook)
        with pytest.raises(NibbleRangeError):
            decode_nibble_tree(q)


class TestDequantizeByte:
    def test_examples(self, codebook: Codebook):
        assert dequantize_byte(0xF0, 2.0, codebook) == (2.0, -2.0)
        assert dequantize_byte(0x77, 5.0, codebook) == (0.0, 0.0)
        assert dequantize_byte(0xAB, 0.0, codebook) == (0.0, 0.0)

    def test_decoders_bit_identical(self, codebook: Codebook, scale_parametrized, precision_parametrized):
        for b in range(256):
            tree = dequantize_byte(b, scale_parametrized, codebook, DecoderKind.TREE, precision_parametrized)
            lut = dequantize_byte(b, scale_parametrized, codebook, DecoderKind.DIRECT_LUT, precision_parametrized)
            assert [v.tobytes() for v in tree] == [v.tobytes() for v in lut]

    def test_bad_scale(self, codebook: Codebook):
        with pytest.raises(NonFiniteValueError):
            dequantize_byte(0x12, float("inf"), codebook)
        with pytest.raises(ValueError):
            dequantize_byte(0x12, -1.0, codebook)

    def test_tree_rejects_other_codebooks(self):
        values = list(NF4_CODE_VALUES)
        values[8] = 0.0625
        other = Codebook(values, id="custom")
        with pytest.raises(CodebookMismatchError):
            dequantize_byte(0x12, 1.0, other, DecoderKind.TREE)
        assert dequantize_byte(0x08, 2.0, other)[1] == 0.125


class TestDequantizeBlockwise:
    def test_zero_block(self, codebook: Codebook):
        qt = quantize_blockwise(np.zeros(64, dtype=np.float32), codebook)
        for decoder in DecoderKind:
            out = dequantize_blockwise(qt, decoder)
            assert out.dtype == np.float32
            assert out.tolist() == [0.0] * 64

    def test_single_element(self):
        qt = QuantizedTensor(packed=[0x00], absmax=[3.0], n=1)
        for decoder in DecoderKind:
            assert dequantize_blockwise(qt, decoder).tolist() == [-3.0]

    def test_empty(self):
        qt = QuantizedTensor(packed=[], absmax=[], n=0)
        assert len(dequantize_blockwise(qt)) == 0

    def test_decoders_bit_identical(self, sized_tensor_parametrized, precision_parametrized):
        _, qt = sized_tensor_parametrized
        cfg = ExecConfig(output_precision=precision_parametrized)
        tree = dequantize_blockwise(qt, DecoderKind.TREE, cfg)
        lut = dequantize_blockwise(qt, DecoderKind.DIRECT_LUT, cfg)
        assert tree.dtype == cfg.dtype
        assert np.array_equal(_bits(tree), _bits(lut))

    def test_matches_reference_for_every_tail(self, codebook: Codebook):
        rng = np.random.default_rng(5)
        configs = [
            ExecConfig(workers=w, tile_elems=64, lanes=8, tiles_per_task=1) for w in (1, 2, 8)
        ] + [ExecConfig(workers=w) for w in (1, 2, 8)]
        for n in range(1, 1026):
            qt = quantize_blockwise(rng.standard_normal(n, dtype=np.float32), codebook)
            expected = _bits(dequantize_reference(qt, codebook))
            for cfg in configs:
                assert np.array_equal(_bits(dequantize_blockwise(qt, DecoderKind.DIRECT_LUT, cfg, codebook)), expected), (n, cfg)
            assert np.array_equal(_bits(dequantize_blockwise(qt, DecoderKind.TREE, configs[1], codebook)), expected), n

    def test_float16_matches_reference(self, quantized: QuantizedTensor, codebook: Codebook):
        cfg = ExecConfig(output_precision="float16", workers=4, tiles_per_task=2)
        out = dequantize_blockwise(quantized, DecoderKind.DIRECT_LUT, cfg, codebook)
        expected = dequantize_reference(quantized, codebook, output_precision="float16")
        assert out.dtype == np.float16
        assert np.array_equal(_bits(out), _bits(expected))

    def test_scale_locality(self, quantized: QuantizedTensor):
        base = dequantize_blockwise(quantized)
        absmax = quantized.absmax.copy()
        absmax[3] *= np.float32(2.0)
        changed = QuantizedTensor(quantized.packed, absmax, quantized.n)
        out = dequantize_blockwise(changed)
        outside = np.ones(quantized.n, dtype=bool)
        outside[3 * 64 : 4 * 64] = False
        assert np.array_equal(out[outside], base[outside])
        assert np.array_equal(out[3 * 64 : 4 * 64], base[3 * 64 : 4 * 64] * np.float32(2.0))

    def test_scale_linearity(self, quantized: QuantizedTensor):
        # multiplying by a power of two is exact in float32
        doubled = QuantizedTensor(quantized.packed, quantized.absmax * np.float32(4.0), quantized.n)
        assert np.array_equal(dequantize_blockwise(doubled), dequantize_blockwise(quantized) * np.float32(4.0))

    def test_codebook_mismatch(self, quantized: QuantizedTensor):
        other = Codebook(NF4_CODE_VALUES, id="nf4-other")
        with pytest.raises(CodebookMismatchError):
            dequantize_blockwise(quantized, DecoderKind.DIRECT_LUT, cb=other)

    def test_invalid_tensor(self):
        qt = QuantizedTensor(packed=[0x12], absmax=[1.0, 2.0], n=2)
        with pytest.raises(InvariantViolationError):
            dequantize_blockwise(qt)


class TestTiledDequantizer:
    def test_one_lut_staging_per_tile(self, quantized: QuantizedTensor, codebook: Codebook):
        executor = TiledDequantizer(quantized, codebook, DecoderKind.DIRECT_LUT, ExecConfig(tiles_per_task=3))
        executor.run()
        assert executor.num_tiles == (10_000 + 511) // 512
        assert executor.lut_stagings == executor.num_tiles

    def test_tree_stages_nothing(self, quantized: QuantizedTensor, codebook: Codebook):
        executor = TiledDequantizer(quantized, codebook, DecoderKind.TREE)
        executor.run()
        assert executor.lut_stagings == 0


class TestExecConfig:
    def test_defaults(self):
        cfg = ExecConfig()
        assert (cfg.tile_elems, cfg.lanes, cfg.elems_per_lane, cfg.workers) == (512, 64, 8, 1)
        assert cfg.dtype == np.float32

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"tile_elems": 500},
            {"workers": 0},
            {"tile_elems": 9, "lanes": 9, "elems_per_lane": 1},
            {"output_precision": "bfloat16"},
            {"tiles_per_task": 0},
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            ExecConfig(**kwargs)

    def test_from_tile(self):
        cfg = ExecConfig.from_tile(1024, workers=2)
        assert (cfg.tile_elems, cfg.lanes, cfg.workers) == (1024, 128, 2)
        with pytest.raises(ValueError):
            ExecConfig.from_tile(100)

    def test_replace_rederives_lanes(self):
        cfg = ExecConfig().replace(tile_elems=256)
        assert cfg.lanes == 32

    def test_json_roundtrip(self):
        cfg = ExecConfig(tile_elems=256, lanes=32, workers=3, output_precision="float16", tiles_per_task=5)
        assert ExecConfig.from_json(cfg.to_json()).to_json() == cfg.to_json()

    def test_from_json_unknown_key(self, caplog):
        cfg = ExecConfig.from_json({"workers": 2, "gpu": True})
        assert cfg.workers == 2
        assert "gpu" in caplog.text
