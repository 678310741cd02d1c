import itertools

import numpy as np
import pytest

from pace.codec import (
    Decoder,
    PaceCodec,
    ReferenceCodec,
    ResidualVectorQuantizer,
    ScaleLayer,
    Stage1Encoder,
    decode,
    encode_stage1,
    fuse_prosody,
    parameter_fingerprint,
    read_codes,
    rvq_dequantize,
    rvq_quantize,
    scale_layer,
    write_codes,
)
from pace.config import ModelConfig, RvqConfig
from pace.exceptions import AudioFormatError, CodeIndexError, ContractError, DimensionError
from pace.prosody import ProsodyEmbeddings, ProsodyFeatures
from pace.tensor import Tensor, backward
from pace.types import AudioClip, AudioCodes, CodecEmbedding, FrameEmbedding
from tests.gradcheck import assert_gradients

TINY_MODEL = ModelConfig(
    encoder_widths=[4, 4, 8, 8],
    embedding_dim=8,
    codec_dim=8,
    decoder_widths=[8, 8, 4, 4, 4],
    scale_hidden=4,
    discriminator_channels=2,
)
TINY_RVQ = RvqConfig(stages=4, codebook_size=16)


@pytest.fixture
def codec(rng):
    return PaceCodec(rng, TINY_MODEL, TINY_RVQ)


def _clip(rng, length):
    return AudioClip(0.1 * rng.normal(size=length))


def _with_books(quantizer, books):
    for k, book in enumerate(books):
        quantizer._buffers[f"codebook.{k}"] = np.asarray(book, dtype=np.float64)
    return quantizer


class TestDimensions:
    @pytest.mark.parametrize("length", [320, 48000])
    def test_ladder(self, codec, rng, length):
        clip = _clip(rng, length)
        features = ProsodyFeatures.unvoiced(length // 40)
        fwd, quant, audio = codec.reconstruct(clip, features)
        assert fwd.frame.values.shape == (length // 40, 8)
        assert fwd.prosody.e_f0.shape == (length // 40, 8)
        assert fwd.pre_scale.values.shape == (length // 320, 8)
        assert fwd.scaled.values.shape == (length // 320, 8)
        assert quant.codes.codes.shape == (length // 320, 4)
        assert audio.shape == (length,)

    @pytest.mark.slow
    def test_four_second_clip(self, codec, rng):
        clip = _clip(rng, 96000)
        _, quant, audio = codec.reconstruct(clip, ProsodyFeatures.unvoiced(2400))
        assert quant.codes.frames == 300
        assert audio.shape == (96000,)

    def test_stage1_rejects_partial_frames(self, rng):
        with pytest.raises(ContractError):
            Stage1Encoder(rng, TINY_MODEL)(_clip(rng, 330))

    def test_stage2_rejects_partial_codec_frames(self, codec, rng):
        with pytest.raises(ContractError):
            codec.embed(_clip(rng, 360))

    def test_prosody_frames_must_match(self, codec, rng):
        with pytest.raises(ContractError):
            codec.embed(_clip(rng, 640), ProsodyFeatures.unvoiced(15))

    def test_reference_codec_ladder(self, rng):
        reference = ReferenceCodec(rng, TINY_MODEL, TINY_RVQ)
        emb, quant, audio = reference.reconstruct(_clip(rng, 640))
        assert emb.values.shape == (2, 8)
        assert audio.shape == (640,)

    def test_decoder_checks_channels(self, rng):
        with pytest.raises(DimensionError):
            Decoder(rng, TINY_MODEL)(CodecEmbedding(Tensor(np.zeros((2, 5)))))


class TestQuantizer:
    def test_matches_exhaustive_search(self):
        rng = np.random.default_rng(11)
        quantizer = ResidualVectorQuantizer(rng, 2, RvqConfig(stages=2, codebook_size=4))
        for _ in range(1000):
            books = rng.normal(size=(2, 4, 2))
            books[:, 0] = 0.0
            _with_books(quantizer, books)
            x = rng.normal(size=(1, 2))
            codes, quantized = rvq_quantize(quantizer, CodecEmbedding(Tensor(x)))

            residual, expected = x[0], []
            for book in books:
                dists = [np.sum((residual - entry) ** 2) for entry in book]
                expected.append(int(np.argmin(dists)))
                residual = residual - book[expected[-1]]
            assert codes.codes[0].tolist() == expected
            np.testing.assert_allclose(quantized.values.data[0], x[0] - residual, atol=1e-12)

    def test_two_stage_greedy_never_beats_joint_search(self):
        rng = np.random.default_rng(5)
        quantizer = ResidualVectorQuantizer(rng, 2, RvqConfig(stages=2, codebook_size=4))
        books = rng.normal(size=(2, 4, 2))
        books[:, 0] = 0.0
        _with_books(quantizer, books)
        x = rng.normal(size=(50, 2))
        _, quantized = rvq_quantize(quantizer, CodecEmbedding(Tensor(x)))
        greedy = np.sum((x - quantized.values.data) ** 2, axis=1)
        best = np.min(
            [np.sum((x - books[0][i] - books[1][j]) ** 2, axis=1) for i, j in itertools.product(range(4), repeat=2)],
            axis=0,
        )
        assert np.all(greedy >= best - 1e-12)

    def test_residual_norms_never_grow(self):
        rng = np.random.default_rng(3)
        quantizer = ResidualVectorQuantizer(rng, 128, RvqConfig(stages=8, codebook_size=32))
        data = rng.normal(size=(1000, 128))
        quantizer.initialize(data[:200], rng)
        out = quantizer(CodecEmbedding(Tensor(data)))
        assert out.residual_norms.shape == (9, 1000)
        assert np.all(np.diff(out.residual_norms, axis=0) <= 1e-12)

    def test_pinned_zero_entry_survives_training(self):
        rng = np.random.default_rng(4)
        quantizer = ResidualVectorQuantizer(rng, 8, TINY_RVQ)
        data = rng.normal(size=(64, 8))
        quantizer.initialize(data, rng)
        for _ in range(3):
            quantizer.update(data, quantizer(CodecEmbedding(Tensor(data))).codes, rng)
        assert quantizer.is_initialized
        for book in quantizer.codebooks:
            np.testing.assert_array_equal(book[0], np.zeros(8))

    def test_small_batch_reseeds_nothing(self):
        rng = np.random.default_rng(6)
        quantizer = ResidualVectorQuantizer(rng, 8, RvqConfig(stages=2, codebook_size=1024))
        quantizer.initialize(rng.normal(size=(2000, 8)), rng)
        before = quantizer.codebook(0).copy()
        batch = rng.normal(size=(200, 8))
        codes = quantizer(CodecEmbedding(Tensor(batch))).codes
        assert quantizer.update(batch, codes, rng) == 0
        unused = np.setdiff1d(np.arange(1024), codes.codes[:, 0])
        np.testing.assert_allclose(quantizer.codebook(0)[unused], before[unused], rtol=1e-4, atol=1e-8)

    def test_entries_unused_for_the_whole_window_are_reseeded(self):
        rng = np.random.default_rng(9)
        quantizer = ResidualVectorQuantizer(rng, 8, TINY_RVQ)
        data = rng.normal(size=(200, 8))
        quantizer.initialize(data, rng)
        batch = np.repeat(data[:1], 32, axis=0)
        reseeded = []
        for _ in range(1500):
            reseeded.append(quantizer.update(batch, quantizer(CodecEmbedding(Tensor(batch))).codes, rng))
        assert sum(reseeded[:400]) == 0
        assert sum(reseeded) > 0

    def test_dequantize_is_bit_identical(self):
        rng = np.random.default_rng(8)
        quantizer = ResidualVectorQuantizer(rng, 8, TINY_RVQ)
        data = rng.normal(size=(40, 8))
        quantizer.initialize(data, rng)
        codes, quantized = rvq_quantize(quantizer, CodecEmbedding(Tensor(data)))
        np.testing.assert_array_equal(rvq_dequantize(quantizer, codes).values.data, quantized.values.data)

    def test_dequantize_checks_stage_count(self, rng):
        quantizer = ResidualVectorQuantizer(rng, 8, TINY_RVQ)
        with pytest.raises(DimensionError):
            quantizer.dequantize(AudioCodes(np.zeros((3, 2)), codebook_size=16))

    def test_code_range_names_position(self):
        codes = np.zeros((3, 4), dtype=np.int64)
        codes[2, 1] = 16
        with pytest.raises(CodeIndexError) as err:
            AudioCodes(codes, codebook_size=16)
        assert err.value.position == (2, 1)

    def test_perplexity_of_uniform_usage(self, rng):
        quantizer = ResidualVectorQuantizer(rng, 8, TINY_RVQ)
        codes = AudioCodes(np.tile(np.arange(16)[:, None], (1, 4)), codebook_size=16)
        np.testing.assert_allclose(quantizer.perplexity(codes), np.full(4, 16.0))


class TestCodeStream:
    def test_round_trip(self, tmp_path, rng):
        codes = AudioCodes(rng.integers(0, 1024, size=(7, 8)), codebook_size=1024)
        path = write_codes(tmp_path / "clip.codes", codes)
        assert path.stat().st_size == 16 + 7 * 8 * 2
        np.testing.assert_array_equal(read_codes(path).codes, codes.codes)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.codes"
        path.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(AudioFormatError):
            read_codes(path)

    def test_truncated_body(self, tmp_path):
        path = write_codes(tmp_path / "clip.codes", AudioCodes(np.ones((2, 2)), codebook_size=4))
        path.write_bytes(path.read_bytes()[:-1])
        with pytest.raises(AudioFormatError):
            read_codes(path, codebook_size=4)

    def test_codes_outside_codebook(self, tmp_path):
        path = write_codes(tmp_path / "clip.codes", AudioCodes(np.full((2, 2), 9), codebook_size=16))
        with pytest.raises(CodeIndexError):
            read_codes(path, codebook_size=8)


class TestScaleLayer:
    def test_shapes_and_initial_factors(self, rng):
        layer = ScaleLayer(rng, TINY_MODEL)
        pre = CodecEmbedding(Tensor(rng.normal(size=(5, 8))))
        k, b = layer.factors(pre)
        assert k.shape == b.shape == (1,)
        assert layer(pre).values.shape == (5, 8)
        np.testing.assert_array_equal(layer.k_branch.fc.params.bias.data, [1.0])
        np.testing.assert_array_equal(layer.b_branch.fc.params.bias.data, [0.0])

    def test_bypass_without_scale_layer(self, rng):
        codec = PaceCodec(rng, TINY_MODEL, TINY_RVQ, use_scale_layer=False)
        fwd = codec.embed(_clip(rng, 640))
        np.testing.assert_array_equal(fwd.scaled.values.data, fwd.pre_scale.values.data)
        assert codec.stage_parameters(1) == codec.stage1.parameters() + codec.stage2.parameters()


class TestStageProperties:
    def test_silence_encodes_to_zero(self, rng):
        encoder = Stage1Encoder(rng, TINY_MODEL)
        e_f = encode_stage1(encoder, AudioClip(np.zeros(640)))
        assert e_f.values.shape == (16, 8)
        np.testing.assert_array_equal(e_f.values.data, np.zeros((16, 8)))

    def test_fusion_is_additive(self, rng):
        a, b, c = (rng.normal(size=(6, 4)) for _ in range(3))
        fused = fuse_prosody(FrameEmbedding(Tensor(a)), ProsodyEmbeddings(Tensor(b), Tensor(c)))
        np.testing.assert_allclose(fused.values.data, a + b + c, atol=1e-15)
        zeros = ProsodyEmbeddings(Tensor(np.zeros((6, 4))), Tensor(np.zeros((6, 4))))
        np.testing.assert_array_equal(fuse_prosody(FrameEmbedding(Tensor(a)), zeros).values.data, a)

        a2, b2, c2 = (rng.normal(size=(6, 4)) for _ in range(3))
        split = fuse_prosody(FrameEmbedding(Tensor(a2)), ProsodyEmbeddings(Tensor(b2), Tensor(c2)))
        joint = fuse_prosody(FrameEmbedding(Tensor(a + a2)), ProsodyEmbeddings(Tensor(b + b2), Tensor(c + c2)))
        np.testing.assert_allclose(joint.values.data, fused.values.data + split.values.data, atol=1e-12)

    def test_fusion_gradient_reaches_every_summand(self, rng):
        parts = [Tensor(rng.normal(size=(6, 4)), requires_grad=True) for _ in range(3)]
        weights = rng.normal(size=(6, 4))
        fused = fuse_prosody(FrameEmbedding(parts[0]), ProsodyEmbeddings(parts[1], parts[2]))
        backward((fused.values * weights).sum())
        for part in parts:
            np.testing.assert_array_equal(part.grad, weights)
        assert_gradients(
            lambda x, y, z: fuse_prosody(FrameEmbedding(x), ProsodyEmbeddings(y, z)).values,
            [rng.normal(size=(6, 4)) for _ in range(3)],
        )

    def test_scale_layer_identity_configuration(self, rng):
        layer = ScaleLayer(rng, TINY_MODEL)
        layer.k_branch.fc.params.weights.data[:] = 0.0
        layer.k_branch.fc.params.bias.data[:] = 1.0
        layer.b_branch.fc.params.weights.data[:] = 0.0
        layer.b_branch.fc.params.bias.data[:] = 0.0
        kernel = layer.out.params.weights.data
        kernel[:] = 0.0
        kernel[np.arange(8), np.arange(8), 1] = 1.0
        pre = rng.normal(size=(5, 8))
        out = scale_layer(layer, CodecEmbedding(Tensor(pre)))
        np.testing.assert_allclose(out.values.data, pre, atol=1e-12)

    def test_decode_gradient_on_ten_frames(self, rng):
        decoder = Decoder(rng, TINY_MODEL)
        assert_gradients(lambda e: decoder(CodecEmbedding(e)), [0.5 * rng.normal(size=(10, 8))])

    def test_decode_returns_a_clip(self, rng):
        decoder = Decoder(rng, TINY_MODEL)
        clip = decode(decoder, CodecEmbedding(Tensor(rng.normal(size=(3, 8)))))
        assert len(clip) == 960


class TestStageScopes:
    def _ids(self, params):
        return {id(p) for p in params}

    def test_stage_one_trains_encoders_and_scale(self, codec):
        expected = self._ids(codec.stage1.parameters() + codec.stage2.parameters() + codec.scale.parameters())
        assert self._ids(codec.stage_parameters(1)) == expected

    def test_stage_two_trains_only_the_first_encoder(self, codec):
        assert self._ids(codec.stage_parameters(2)) == self._ids(codec.stage1.parameters())

    def test_stage_three_trains_everything(self, codec):
        assert self._ids(codec.stage_parameters(3)) == self._ids(codec.parameters())


class TestFingerprint:
    def test_changes_with_parameters(self, rng):
        reference = ReferenceCodec(rng, TINY_MODEL, TINY_RVQ)
        before = reference.fingerprint()
        assert before == parameter_fingerprint(reference.encoder)
        reference.encoder.stage1.stem.params.weights.data[0, 0, 0] += 1e-9
        assert reference.fingerprint() != before

    def test_adopt_reference_copies_quantizer_and_decoder(self, codec, rng):
        reference = ReferenceCodec(np.random.default_rng(42), TINY_MODEL, TINY_RVQ)
        codec.adopt_reference(reference)
        assert parameter_fingerprint(codec.decoder) == parameter_fingerprint(reference.decoder)
        np.testing.assert_array_equal(codec.quantizer.codebook(2), reference.quantizer.codebook(2))
