import numpy as np
import pytest

from padaug.audio_io import Waveform
from padaug.errors import (
    CorruptHeaderError,
    DatasetTooSmallError,
    DimMismatchError,
    InvalidConfigError,
    InvalidLabelError,
    TooFewFramesError,
)
from padaug.features import FeatureMatrix
from padaug.model import (
    ToyModel,
    ToyModelConfig,
    TrainingSet,
    aam_loss,
    forward,
    init_model,
    load_model,
    loss_and_grads,
    save_model,
    schedule,
    train,
    tsp_pool,
)
from padaug.seeding import make_rng
from padaug.synth import make_speaker, synth_utterance


def small_cfg(seed=0, **kw):
    base = dict(n_speakers=5, input_dim=6, hidden_dim=5, embed_dim=4,
                warmup_steps=2, total_steps=20, batch_size=4, seed=seed)
    base.update(kw)
    return ToyModelConfig(**base)


def numeric_gradients(m, feats, label, margin, s, eps=1e-5):
    """Central-difference gradients for every parameter group."""
    out = {}
    for name, p in m.params().items():
        num = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = p[i]
            p[i] = orig + eps
            lp, _ = loss_and_grads(m, feats, label, margin, s)
            p[i] = orig - eps
            lm, _ = loss_and_grads(m, feats, label, margin, s)
            p[i] = orig
            num[i] = (lp - lm) / (2 * eps)
        out[name] = num
    return out


# ---------------------------------------------------------------------------
# pooling


def test_tsp_constant_rows():
    h = np.tile([1.0, -2.0, 3.0], (10, 1))
    pooled = tsp_pool(h)
    assert np.allclose(pooled[:3], [1.0, -2.0, 3.0])
    assert np.allclose(pooled[3:], 1e-5)  # floored std


def test_tsp_two_frame_closed_form():
    v = np.array([0.5, -1.5, 2.0])
    pooled = tsp_pool(np.stack([v, -v]))
    assert np.allclose(pooled[:3], 0.0)
    assert np.allclose(pooled[3:], np.abs(v))


def test_tsp_matches_two_pass_oracle():
    h = make_rng(0).standard_normal((300, 64))
    pooled = tsp_pool(h)
    mean = np.array([sum(h[:, j]) / 300 for j in range(64)])
    std = np.array([np.sqrt(sum((h[:, j] - mean[j]) ** 2) / 300) for j in range(64)])
    assert np.abs(pooled[:64] - mean).max() < 1e-9
    assert np.abs(pooled[64:] - std).max() < 1e-9


def test_tsp_needs_two_frames():
    with pytest.raises(TooFewFramesError):
        tsp_pool(np.zeros((1, 4)))


# ---------------------------------------------------------------------------
# forward


def test_forward_unit_norm():
    m = init_model(small_cfg(1))
    for seed in range(5):
        f = FeatureMatrix(make_rng(seed).standard_normal((12, 6)))
        e = forward(m, f)
        assert abs(np.linalg.norm(e) - 1.0) < 1e-6


def test_forward_repetition_invariant():
    m = init_model(small_cfg(2))
    f = make_rng(9).standard_normal((8, 6))
    e1 = forward(m, FeatureMatrix(f))
    e2 = forward(m, FeatureMatrix(np.concatenate([f, f])))
    assert np.abs(e1 - e2).max() < 1e-9


def test_forward_zero_weights_no_nan():
    m = ToyModel(w1=np.zeros((5, 6)), b1=np.zeros(5), w2=np.zeros((4, 10)),
                 b2=np.zeros(4), head=np.ones((5, 4)))
    e = forward(m, FeatureMatrix(np.ones((4, 6))))
    assert np.all(np.isfinite(e))
    assert np.all(e == 0)  # degenerate model maps to the zero vector


def test_forward_dim_mismatch():
    m = init_model(small_cfg(3))
    with pytest.raises(DimMismatchError):
        forward(m, FeatureMatrix(np.zeros((5, 7))))


# ---------------------------------------------------------------------------
# loss


def test_margin_zero_matches_plain_softmax():
    m = init_model(small_cfg(4))
    emb = make_rng(3).standard_normal(4)
    emb /= np.linalg.norm(emb)
    loss, _, _ = aam_loss(emb, 1, m, margin=0.0, s=32.0)
    wn = m.head / np.linalg.norm(m.head, axis=1, keepdims=True)
    logits = 32.0 * wn @ emb
    oracle = np.log(np.exp(logits - logits.max()).sum()) - (logits[1] - logits.max())
    assert abs(loss - oracle) < 1e-9


def test_loss_monotone_in_margin():
    m = init_model(small_cfg(5))
    emb = make_rng(4).standard_normal(4)
    emb /= np.linalg.norm(emb)
    losses = [aam_loss(emb, 2, m, margin=mg, s=32.0)[0] for mg in np.linspace(0, 1.5, 12)]
    assert all(b >= a - 1e-12 for a, b in zip(losses, losses[1:]))


def test_margin_hurts_aligned_embedding():
    m = init_model(small_cfg(6))
    emb = m.head[0] / np.linalg.norm(m.head[0])
    l0, _, _ = aam_loss(emb, 0, m, margin=0.0, s=32.0)
    lm, _, _ = aam_loss(emb, 0, m, margin=0.2, s=32.0)
    assert lm > l0


def test_invalid_label():
    m = init_model(small_cfg(7))
    emb = np.ones(4) / 2.0
    with pytest.raises(InvalidLabelError):
        aam_loss(emb, 5, m, margin=0.1, s=32.0)


def test_gradients_match_finite_differences():
    # moderate-loss instances; tiny entries are compared absolutely via the
    # 1e-6 denominator guard (|a|+|b| below guard means noise-floor regime)
    for seed in (9, 28):
        cfg = small_cfg(seed)
        m = init_model(cfg)
        feats = FeatureMatrix(make_rng(1000 + seed).standard_normal((7, 6)))
        loss, g = loss_and_grads(m, feats, 2, 0.2, 32.0)
        assert 0.1 < loss < 10.0
        num = numeric_gradients(m, feats, 2, 0.2, 32.0)
        for name in g:
            rel = np.abs(num[name] - g[name]) / np.maximum(np.abs(num[name]) + np.abs(g[name]), 1e-6)
            assert rel.max() < 1e-4, f"{name}: {rel.max()}"
            norm_rel = np.linalg.norm(num[name] - g[name]) / np.linalg.norm(g[name])
            assert norm_rel < 1e-4, f"{name}: {norm_rel}"


def test_gradients_with_saturated_softmax():
    # saturated instances have near-zero gradients; group norms still agree
    cfg = small_cfg(3)
    m = init_model(cfg)
    feats = FeatureMatrix(make_rng(11).standard_normal((7, 6)))
    _, g = loss_and_grads(m, feats, 2, 0.15, 32.0)
    num = numeric_gradients(m, feats, 2, 0.15, 32.0)
    for name in g:
        denom = max(np.linalg.norm(g[name]), 1e-12)
        assert np.linalg.norm(num[name] - g[name]) / denom < 1e-3, name


# ---------------------------------------------------------------------------
# schedule


def test_schedule_endpoints():
    cfg = small_cfg(0, warmup_steps=100, total_steps=1000, margin_warm_steps=400)
    m0, lr0 = schedule(0, cfg)
    assert m0 == 0.0 and lr0 == 0.0
    m_end, lr_end = schedule(1000, cfg)
    assert abs(lr_end - 5e-5) / 5e-5 < 1e-9
    assert m_end == 0.2
    _, lr_w = schedule(100, cfg)
    assert lr_w == cfg.lr_init
    _, lr_half = schedule(50, cfg)
    assert abs(lr_half - 0.05) < 1e-12


def test_schedule_margin_warm():
    cfg = small_cfg(0, total_steps=1000, margin_warm_steps=400)
    for step in (400, 600, 1000):
        assert schedule(step, cfg)[0] == 0.2
    assert schedule(200, cfg)[0] == pytest.approx(0.1)
    # default warm span is half the run
    cfg2 = small_cfg(0, total_steps=1000)
    assert cfg2.margin_warm == 500


def test_schedule_lr_decreasing_after_warmup():
    cfg = small_cfg(0, warmup_steps=10, total_steps=200)
    lrs = [schedule(s, cfg)[1] for s in range(10, 201)]
    assert all(b < a for a, b in zip(lrs, lrs[1:]))


def test_config_validation():
    with pytest.raises(InvalidConfigError):
        small_cfg(0, warmup_steps=20, total_steps=20)
    with pytest.raises(InvalidConfigError):
        small_cfg(0, lr_init=1e-5, lr_final=1e-3)
    with pytest.raises(InvalidConfigError):
        small_cfg(0, margin_final=1.6)


# ---------------------------------------------------------------------------
# training


def tiny_training_set(n_speakers=2, n_utts=10, seconds=2.0):
    waves, ids, labels = [], [], []
    for spk in range(n_speakers):
        profile = make_speaker(1000 + spk, f"s{spk}")
        for j in range(n_utts):
            rng = make_rng(spk * 100 + j)
            waves.append(synth_utterance(profile, seconds, rng))
            ids.append(f"s{spk}_u{j}")
            labels.append(spk)
    return TrainingSet(utt_ids=ids, labels=np.array(labels), waveforms=waves,
                       speakers=[f"s{i}" for i in range(n_speakers)])


def test_train_loss_decreases():
    ts = tiny_training_set()
    cfg = ToyModelConfig(n_speakers=2, hidden_dim=16, embed_dim=8, warmup_steps=20,
                         total_steps=200, batch_size=8, seed=5)
    res = train(cfg, ts)
    assert res.log[-1][1] < res.log[0][1]
    assert len(res.log) == 200


def test_train_deterministic():
    ts = tiny_training_set()
    cfg = ToyModelConfig(n_speakers=2, hidden_dim=8, embed_dim=4, warmup_steps=5,
                         total_steps=40, batch_size=4, seed=6)
    a = train(cfg, ts, augment="ht")
    b = train(cfg, ts, augment="ht")
    for pa, pb in zip(a.model.params().values(), b.model.params().values()):
        assert np.array_equal(pa, pb)


def test_train_augment_changes_inputs():
    ts = tiny_training_set()
    cfg = ToyModelConfig(n_speakers=2, hidden_dim=8, embed_dim=4, warmup_steps=5,
                         total_steps=40, batch_size=4, seed=7)
    plain = train(cfg, ts, augment="none")
    padded = train(cfg, ts, augment="ht")
    assert any(abs(a[1] - b[1]) > 1e-9 for a, b in zip(plain.log, padded.log))
    assert plain.log[-1][1] < plain.log[0][1]
    assert padded.log[-1][1] < padded.log[0][1]


def test_train_rejects_single_speaker():
    ts = tiny_training_set(n_speakers=2)
    solo = TrainingSet(utt_ids=ts.utt_ids, labels=ts.labels, waveforms=ts.waveforms, speakers=["s0"])
    cfg = ToyModelConfig(n_speakers=2, total_steps=10, warmup_steps=1, seed=0)
    with pytest.raises(DatasetTooSmallError):
        train(cfg, solo)
    with pytest.raises(InvalidConfigError):
        train(cfg, ts, augment="wat")


# ---------------------------------------------------------------------------
# checkpoints


def test_checkpoint_roundtrip(tmp_path):
    m = init_model(small_cfg(8))
    save_model(m, tmp_path / "m.bin", meta={"note": "x"})
    back = load_model(tmp_path / "m.bin")
    for a, b in zip(m.params().values(), back.params().values()):
        assert np.array_equal(a, b)
    assert "note=x" in (tmp_path / "m.bin.meta").read_text()


def test_checkpoint_corruption(tmp_path):
    m = init_model(small_cfg(9))
    save_model(m, tmp_path / "m.bin")
    blob = (tmp_path / "m.bin").read_bytes()
    (tmp_path / "bad.bin").write_bytes(b"WRNG" + blob[4:])
    with pytest.raises(CorruptHeaderError):
        load_model(tmp_path / "bad.bin")
    (tmp_path / "cut.bin").write_bytes(blob[:-16])
    with pytest.raises(CorruptHeaderError):
        load_model(tmp_path / "cut.bin")
