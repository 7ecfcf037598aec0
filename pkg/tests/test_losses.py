import numpy as np
import pytest

import styletune as st


def _setup(seed=0, size=16, dtype=np.float64):
    rng = np.random.default_rng(seed)
    enc = st.generate_encoder(seed, dtype=dtype)
    x = st.Tensor(rng.uniform(0.05, 0.95, size=(1, 3, size, size)).astype(dtype))
    y = st.Tensor(rng.uniform(0.05, 0.95, size=(1, 3, size, size)).astype(dtype))
    sty = st.Tensor(rng.uniform(0.05, 0.95, size=(1, 3, size, size)).astype(dtype))
    target = st.make_style_target(sty, enc)
    return enc, x, y, target


def style_loss_oracle(y_feats, target):
    """Loop recomputation: sum_s ||gram - G_s||_F^2 / c^2, batch mean."""
    total = 0.0
    for f, g_t in zip(y_feats.style, target.grams):
        n, c = f.shape[0], f.shape[1]
        g_y = st.gram(f).data
        for ni in range(n):
            acc = 0.0
            for a in range(c):
                for b in range(c):
                    acc += (g_y[ni, a, b] - g_t[a, b]) ** 2
            total += acc / (c * c) / n
    return total


def content_loss_oracle(y_feats, x_feats):
    fy, fx = y_feats.content.data, x_feats.content.data
    acc = 0.0
    for v, u in zip(fy.ravel(), fx.ravel()):
        acc += (float(v) - float(u)) ** 2
    return acc / fy.size


# ---------------------------------------------------------------------------
# content loss


def test_content_loss_zero_for_identical():
    enc, x, _, _ = _setup(1)
    fx = st.encode(x, enc)
    assert float(st.content_loss(fx, fx).data) == 0.0


def test_content_loss_constant_offset():
    enc, x, _, _ = _setup(2)
    fx = st.encode(x, enc)
    d = 0.37
    fy = st.FeatureSet(stages=tuple(st.Tensor(f.data + d) for f in fx.stages))
    assert float(st.content_loss(fy, fx).data) == pytest.approx(d * d, rel=1e-12)


def test_content_loss_matches_loop_oracle():
    enc, x, y, _ = _setup(3)
    fy, fx = st.encode(y, enc), st.encode(x, enc)
    got = float(st.content_loss(fy, fx).data)
    assert got == pytest.approx(content_loss_oracle(fy, fx), abs=1e-10)


# ---------------------------------------------------------------------------
# style loss


def test_style_loss_zero_when_grams_match():
    enc, x, _, _ = _setup(4)
    fx = st.encode(x, enc)
    target = st.StyleTarget(grams=tuple(st.gram(f).data[0] for f in fx.style))
    assert float(st.style_loss(fx, target).data) == pytest.approx(0.0, abs=1e-18)


def test_style_loss_single_layer_arithmetic():
    # gram(y) = [[0.5,0],[0,0]] vs zero target: 0.25 / 4 = 0.0625
    f = np.zeros((1, 2, 1, 2))
    f[0, 0] = [[1.0, 1.0]]
    feats = st.FeatureSet(stages=(st.Tensor(f),))
    target = st.StyleTarget(grams=(np.zeros((2, 2)),))
    assert float(st.style_loss(feats, target).data) == pytest.approx(0.0625, abs=1e-15)


@pytest.mark.parametrize("case", range(10))
def test_style_loss_matches_loop_oracle(case):
    enc, x, y, target = _setup(10 + case)
    fy = st.encode(y, enc)
    got = float(st.style_loss(fy, target).data)
    assert got == pytest.approx(style_loss_oracle(fy, target), abs=1e-10)


def test_style_loss_layer_mismatch():
    enc, x, _, target = _setup(5)
    fx = st.encode(x, enc)
    short = st.StyleTarget(grams=target.grams[:2])
    with pytest.raises(st.ShapeError, match="layers"):
        st.style_loss(fx, short)


def test_style_target_precompute_equals_on_the_fly():
    enc, _, _, _ = _setup(6)
    rng = np.random.default_rng(99)
    sty = st.Tensor(rng.uniform(size=(1, 3, 16, 16)))
    t1 = st.make_style_target(sty, enc)
    fresh = st.encode(sty, enc)
    for g_pre, f in zip(t1.grams, fresh.style):
        assert np.array_equal(g_pre, st.gram(f).data[0])


# ---------------------------------------------------------------------------
# total loss


def test_total_loss_self_at_zero_alpha_is_pure_tv():
    enc, x, _, target = _setup(7)
    lw = st.LossWeights()
    _, bd = st.total_loss(x, x, target, 0.0, lw, enc)
    assert bd.content == 0.0
    assert bd.total == lw.lambda_tv * bd.tv


def test_total_loss_alpha_linearity():
    enc, x, y, target = _setup(8)
    lw = st.LossWeights()
    _, bd0 = st.total_loss(x, y, target, 0.0, lw, enc)
    _, bd10 = st.total_loss(x, y, target, 10.0, lw, enc)
    assert bd0.content == bd10.content
    assert bd0.tv == bd10.tv
    assert bd10.total - bd0.total == pytest.approx(10.0 * lw.lambda_style * bd0.style, rel=1e-12)


def test_total_loss_affine_in_alpha_three_points():
    enc, x, y, target = _setup(9)
    lw = st.LossWeights()
    totals = []
    for a in (0.0, 1.0, 2.0):
        _, bd = st.total_loss(x, y, target, a, lw, enc)
        totals.append(bd.total)
        assert bd.style >= 0.0
    slope1 = totals[1] - totals[0]
    slope2 = totals[2] - totals[1]
    assert slope1 == pytest.approx(slope2, rel=1e-9)
    _, bd = st.total_loss(x, y, target, 0.0, lw, enc)
    assert slope1 == pytest.approx(lw.lambda_style * bd.style, rel=1e-9)


def test_loss_breakdown_invariant():
    enc, x, y, target = _setup(11)
    lw = st.LossWeights(lambda_content=0.8, lambda_style=3.0, lambda_tv=2e-5)
    for a in (0.0, 0.1, 1.0, 7.3):
        _, bd = st.total_loss(x, y, target, a, lw, enc)
        bd.check(lw)


def test_all_components_nonnegative():
    enc, x, y, target = _setup(12)
    _, bd = st.total_loss(x, y, target, 5.0, st.LossWeights(), enc)
    assert bd.content >= 0 and bd.style >= 0 and bd.tv >= 0 and bd.total >= 0


def test_total_loss_gradient_wrt_y():
    enc, x, y, target = _setup(13)
    y.requires_grad = True
    lw = st.LossWeights()

    def f():
        loss, _ = st.total_loss(x, y, target, 2.0, lw, enc)
        return loss

    report = st.grad_check(f, {"y": y}, epsilon=1e-5, samples_per_param=8)
    assert report.passed, report.summary()


def test_loss_weights_reject_negative():
    with pytest.raises(ValueError, match="lambda_style"):
        st.LossWeights(lambda_style=-1.0)


def test_total_loss_shape_mismatch():
    enc, x, y, target = _setup(14)
    small = st.Tensor(np.zeros((1, 3, 16, 32)))
    with pytest.raises(st.ShapeError, match="shapes differ"):
        st.total_loss(x, small, target, 1.0, st.LossWeights(), enc)
