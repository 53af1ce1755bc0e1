import math

import numpy as np
import pytest

from tdaharq.channel import ChannelSpec, power_normalize
from tdaharq.codec import CodecBudget, DctCodec
from tdaharq.harq import HarqConfig, HarqSession, SessionResult, combine, pad_view, run_session
from tdaharq.synthetic import synthetic_corpus


class CountingCodec(DctCodec):
    def __init__(self):
        self.encodes = 0
        self.decodes = 0

    def encode(self, img, budget):
        self.encodes += 1
        return super().encode(img, budget)

    def decode(self, payload, budget):
        self.decodes += 1
        return super().decode(payload, budget)


@pytest.fixture(scope="module")
def image():
    return synthetic_corpus(1, seed=99)[0]


def test_combine_examples():
    y = power_normalize(np.arange(1, 9) + 1j)
    assert np.array_equal(combine([(y, 1 + 0j)]), y)
    assert np.allclose(combine([(y, 1), (y, 1)]), y)
    h1, h2 = 0.3 - 0.4j, -1.2 + 0.5j
    assert np.allclose(combine([(h1 * y, h1), (h2 * y, h2)]), y)
    with pytest.raises(ValueError):
        combine([])


@pytest.mark.parametrize("j", [1, 2, 3])
def test_combining_residual_variance(j):
    rng = np.random.default_rng(j)
    var = 0.5
    noise = np.sqrt(var / 2) * (rng.normal(size=(j, 20000)) + 1j * rng.normal(size=(j, 20000)))
    residual = combine([(noise[i], 1.0) for i in range(j)])
    assert np.var(residual) == pytest.approx(var / j, rel=0.05)


def test_pad_view():
    a, b = np.ones(4, complex), 2 * np.ones(4, complex)
    assert pad_view([(a, 1)], 3, 4).tolist() == [1] * 4 + [0] * 8
    assert pad_view([(a, 1), (b, 1), (a, 1)], 3, 4).tolist() == [1] * 4 + [2] * 4 + [1] * 4
    assert not pad_view([], 3, 4).any()
    with pytest.raises(ValueError):
        pad_view([(a, 1)] * 4, 3, 4)


def test_session_state_machine():
    s = HarqSession(2)
    assert s.attempts == 0 and not s.done
    s.receive(np.zeros(2), 1)
    s.zeta = 1
    assert s.done
    with pytest.raises(RuntimeError):
        s.receive(np.zeros(2), 1)
    with pytest.raises(ValueError):
        HarqConfig(ChannelSpec(), CodecBudget(32, 32, 100), n_max=0)


def test_infinite_snr_accepts_first_attempt(image, model, encoder, budget):
    res = run_session(image, HarqConfig(ChannelSpec("awgn", math.inf), budget), model, encoder=encoder)
    assert res.attempts == 1 and res.zeta == 1 and res.zeta_trace == [1]
    assert res.distance == [0.0] and res.psnr == [100.0]


def test_chi_infinite_and_negative(image, model, encoder, budget):
    spec = ChannelSpec("awgn", 0.0, seed=3)
    always = run_session(image, HarqConfig(spec, budget, chi=math.inf), model, encoder=encoder)
    never = run_session(image, HarqConfig(spec, budget, chi=-1.0), model, encoder=encoder)
    assert always.attempts == 1 and always.zeta == 1
    assert never.attempts == 3 and never.zeta == 0 and never.zeta_trace == [0, 0, 0]
    assert len(never.psnr) == len(never.distance) == len(never.ms_ssim) == 3


def test_frame_encoded_exactly_once(image, model, encoder, budget):
    codec = CountingCodec()
    res = run_session(image, HarqConfig(ChannelSpec("awgn", 0.0), budget, chi=-1.0), model,
                      encoder=encoder, codec=codec)
    assert codec.encodes == 1 and codec.decodes == res.attempts == 3


def test_session_is_reproducible(image, model, encoder, budget):
    cfg = HarqConfig(ChannelSpec("rayleigh", 3.0, seed=21), budget)
    a = run_session(image, cfg, model, encoder=encoder, key=(5,), keep_reconstruction=True)
    b = run_session(image, cfg, model, encoder=encoder, key=(5,), keep_reconstruction=True)
    assert a.to_record() == b.to_record()
    assert np.array_equal(a.reconstruction, b.reconstruction)
    assert a.attempts <= 3


def test_record_fields(image, model, encoder, budget):
    res = run_session(image, HarqConfig(ChannelSpec(), budget), model, encoder=encoder, image_id="x.png")
    rec = res.to_record()
    assert set(rec) == {"image_id", "snr_db", "channel", "R", "attempts", "zeta", "zeta_trace",
                        "psnr", "ms_ssim", "distance"}
    assert rec["image_id"] == "x.png" and rec["R"] == pytest.approx(1 / 3)
    assert isinstance(res, SessionResult) and res.reconstruction is None


def test_psnr_improves_with_attempts(model, encoder, budget):
    corpus = synthetic_corpus(40, seed=123)
    cfg = HarqConfig(ChannelSpec("awgn", 3.0, seed=8), budget, chi=-1.0)
    psnrs = np.array([run_session(img, cfg, model, encoder=encoder, key=(i,)).psnr for i, img in enumerate(corpus)])
    means = psnrs.mean(axis=0)
    assert means[0] < means[1] < means[2]
