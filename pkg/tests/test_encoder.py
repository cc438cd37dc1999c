import json

import numpy as np
import numpy.testing as npt
import pytest

from litsynth.core.numerics import (
    Rng, ShapeError, CapacityError, SequenceLengthError, ConfigError,
    layer_norm, sigmoid, central_diff_grad, relative_error,
)
from litsynth.core.params import named_arrays, zeros_like
from litsynth.core.attention import Variant
from litsynth.core.encoder import (
    EncoderConfig, LayerNormParams, FfnParams,
    load_config, save_config, reference_config, tiny_config,
    init_ffn_params, init_conv_module_params, init_frontend_params,
    init_block_params, init_encoder_params,
    ffn_forward, ffn_backward, conv_module_forward, conv_module_backward,
    depthwise_conv1d, swish, sublayer, encoder_block_forward,
    conv_frontend, frontend_output_length, frontend_window, sinusoidal_encoding,
    encoder_forward, count_params, count_attention_params,
)


def _small(variant, n_blocks=1, **kw):
    base = dict(variant=variant, n_blocks=n_blocks, d=8, h=2, c=3, conv_kernel=3,
                ffn_inner=16, t_max=16, feat_dim=8)
    base.update(kw)
    return EncoderConfig(**base)


# =============================================================================
# 설정
# =============================================================================

def test_config_defaults_and_presets():
    cfg = EncoderConfig()
    assert (cfg.n_blocks, cfg.d, cfg.h, cfg.c, cfg.conv_kernel, cfg.ffn_inner, cfg.feat_dim) \
        == (12, 320, 4, 31, 15, 1280, 40)
    assert reference_config('ha').c == 15
    assert reference_config('ldsa').c == 31
    tiny = tiny_config('sa')
    assert (tiny.d, tiny.h, tiny.n_blocks, tiny.c, tiny.feat_dim) == (16, 2, 2, 5, 16)


def test_config_json_round_trip(tmp_path):
    cfg = tiny_config('ha')
    path = tmp_path / 'enc.json'
    save_config(cfg, path)
    data = json.loads(path.read_text(encoding='utf-8'))
    assert set(data) == {'variant', 'n_blocks', 'd', 'h', 'c', 'conv_kernel',
                         'ffn_inner', 't_max', 'feat_dim'}
    assert data['variant'] == 'ha'
    assert load_config(path) == cfg


@pytest.mark.parametrize('changes', [
    {'h': 3},            # d=16 % 3
    {'c': 4},
    {'conv_kernel': 6},
    {'d': 0},
    {'n_blocks': -1},
    {'feat_dim': 5},
])
def test_config_validation(changes):
    data = tiny_config('ldsa').to_dict()
    data.update(changes)
    with pytest.raises(ConfigError):
        EncoderConfig.from_dict(data)


def test_config_rejects_unknown_fields():
    data = tiny_config('sa').to_dict()
    data['dropout'] = 0.1
    with pytest.raises(ConfigError, match='dropout'):
        EncoderConfig.from_dict(data)


# =============================================================================
# FFN
# =============================================================================

def test_ffn_zero_params_give_zero(rng):
    p = zeros_like(init_ffn_params(4, 8, rng))
    npt.assert_array_equal(ffn_forward(rng.normal((3, 4)), p), np.zeros((3, 4)))


def test_ffn_identity_slices_pass_nonnegative_input(rng):
    eye = np.eye(4)
    p = FfnParams(w_a=np.hstack([eye, np.zeros((4, 4))]), b_a=np.zeros(8),
                  w_b=np.vstack([eye, np.zeros((4, 4))]), b_b=np.zeros(4))
    x = np.abs(rng.normal((5, 4)))
    npt.assert_array_equal(ffn_forward(x, p), x)


def test_ffn_matches_row_loop(rng):
    p = init_ffn_params(4, 8, rng)
    p.b_a, p.b_b = rng.normal(8), rng.normal(4)
    x = rng.normal((3, 4))
    expected = np.stack([np.maximum(row @ p.w_a + p.b_a, 0.0) @ p.w_b + p.b_b for row in x])
    npt.assert_allclose(ffn_forward(x, p), expected, atol=1e-12)


def test_ffn_backward_matches_finite_difference(rng):
    p = init_ffn_params(4, 6, rng)
    x, dy = rng.normal((3, 4)), rng.normal((3, 4))
    grads, dx = ffn_backward(x, p, dy)
    numeric = central_diff_grad(lambda z: float(np.sum(dy * ffn_forward(z, p))), x)
    assert relative_error(dx, numeric) < 1e-6
    assert isinstance(grads, FfnParams)


# =============================================================================
# Convolution module
# =============================================================================

def test_depthwise_conv_matches_loop(rng):
    x = rng.normal((6, 3))
    kernel, bias = rng.normal((5, 3)), rng.normal(3)
    expected = np.zeros((6, 3))
    for t in range(6):
        for ch in range(3):
            acc = bias[ch]
            for k in range(5):
                s = t + k - 2
                if 0 <= s < 6:
                    acc += kernel[k, ch] * x[s, ch]
            expected[t, ch] = acc
    npt.assert_allclose(depthwise_conv1d(x, kernel, bias), expected, atol=1e-12)


def test_conv_module_identity_configuration(rng):
    d, K = 4, 5
    p = init_conv_module_params(d, K, rng)
    p.pointwise_in = np.hstack([np.eye(d), np.zeros((d, d))])
    p.b_in = np.concatenate([np.zeros(d), np.full(d, 50.0)])
    p.depthwise = np.zeros((K, d))
    p.depthwise[K // 2] = 1.0
    p.pointwise_out = np.eye(d)
    x = rng.normal((7, d))
    expected = swish(layer_norm(x, np.ones(d), np.zeros(d)))
    npt.assert_allclose(conv_module_forward(x, p), expected, atol=1e-12)


def test_conv_module_zero_input_is_time_invariant(rng):
    p = init_conv_module_params(4, 3, rng)
    p.b_depthwise = rng.normal(4)
    p.b_out = rng.normal(4)
    p.norm.gamma, p.norm.beta = rng.normal(4), rng.normal(4)
    y = conv_module_forward(np.zeros((6, 4)), p)
    npt.assert_allclose(y, np.tile(y[0], (6, 1)), atol=1e-14)


def test_conv_module_matches_sliding_window_oracle(rng):
    d, K, T = 4, 3, 7
    p = init_conv_module_params(d, K, rng)
    p.b_in, p.b_depthwise, p.b_out = rng.normal(2 * d), rng.normal(d), rng.normal(d)
    x = rng.normal((T, d))

    z = x @ p.pointwise_in + p.b_in
    glu = z[:, :d] / (1.0 + np.exp(-z[:, d:]))
    padded = np.vstack([np.zeros((1, d)), glu, np.zeros((1, d))])
    conv = np.stack([
        np.sum(p.depthwise * padded[t:t + K], axis=0) + p.b_depthwise for t in range(T)
    ])
    mu = conv.mean(axis=1, keepdims=True)
    normed = (conv - mu) / np.sqrt(conv.var(axis=1, keepdims=True) + 1e-5)
    normed = normed * p.norm.gamma + p.norm.beta
    expected = (normed / (1.0 + np.exp(-normed))) @ p.pointwise_out + p.b_out

    npt.assert_allclose(conv_module_forward(x, p), expected, atol=1e-12)


def test_conv_module_backward_matches_finite_difference(rng):
    p = init_conv_module_params(4, 3, rng)
    p.b_in = rng.normal(8)
    x, dy = rng.normal((5, 4)), rng.normal((5, 4))
    grads, dx = conv_module_backward(x, p, dy)
    loss = lambda: float(np.sum(dy * conv_module_forward(x, p)))
    numeric = central_diff_grad(lambda z: float(np.sum(dy * conv_module_forward(z, p))), x)
    assert relative_error(dx, numeric) < 1e-6

    def f(w):
        saved = p.depthwise.copy()
        p.depthwise[...] = w
        try:
            return loss()
        finally:
            p.depthwise[...] = saved

    assert relative_error(grads.depthwise, central_diff_grad(f, p.depthwise)) < 1e-6


def test_sigmoid_gate_saturates_to_one():
    assert sigmoid(np.array([50.0]))[0] == 1.0


# =============================================================================
# Sublayer / 블록
# =============================================================================

def test_sublayer_examples(rng):
    x = rng.normal((4, 6))
    npt.assert_allclose(sublayer(x, lambda z: np.zeros_like(z)),
                        layer_norm(x, np.ones(6), np.zeros(6)), atol=1e-15)
    norm = LayerNormParams(gamma=rng.normal(6), beta=rng.normal(6))
    npt.assert_array_equal(sublayer(x, lambda z: -z, norm), np.tile(norm.beta, (4, 1)))


def test_sublayer_ffn_composition(rng):
    x = rng.normal((4, 6))
    p = init_ffn_params(6, 12, rng)
    npt.assert_allclose(sublayer(x, lambda z: ffn_forward(z, p)),
                        layer_norm(x + ffn_forward(x, p), np.ones(6), np.zeros(6)),
                        atol=1e-12)


def test_sublayer_rejects_shape_change(rng):
    with pytest.raises(ShapeError):
        sublayer(rng.normal((4, 6)), lambda z: z[:, :3])


def test_block_with_zeroed_inner_maps_is_triple_norm(rng):
    cfg = _small('sa')
    block = init_block_params(cfg, rng)
    block.mixer = zeros_like(block.mixer)
    block.local = zeros_like(block.local)
    block.ffn = zeros_like(block.ffn)
    x = rng.normal((6, 8))
    one, zero = np.ones(8), np.zeros(8)
    expected = layer_norm(layer_norm(layer_norm(x, one, zero), one, zero), one, zero)
    npt.assert_allclose(encoder_block_forward(x, 'sa', block), expected, atol=1e-12)


def test_ha_block_with_identity_window_skips_local_mixing(rng):
    cfg = _small('ha', c=1)
    block = init_block_params(cfg, rng)
    block.local.w3 = [np.eye(8)[:, :4], np.eye(8)[:, 4:]]
    block.local.wo = np.eye(8)
    x = rng.normal((6, 8))

    from litsynth.core.attention import multihead_sa
    h = sublayer(x, lambda z: multihead_sa(z, block.mixer).y, block.mixer_norm)
    h = sublayer(h, lambda z: z, block.local_norm)
    h = sublayer(h, lambda z: ffn_forward(z, block.ffn), block.ffn_norm)
    npt.assert_allclose(encoder_block_forward(x, 'ha', block), h, atol=1e-12)


def test_sa_block_matches_chained_sublayers(rng):
    cfg = _small('sa')
    block = init_block_params(cfg, rng)
    x = rng.normal((6, 8))

    from litsynth.core.attention import multihead_sa
    h = sublayer(x, lambda z: multihead_sa(z, block.mixer).y, block.mixer_norm)
    h = sublayer(h, lambda z: conv_module_forward(z, block.local), block.local_norm)
    h = sublayer(h, lambda z: ffn_forward(z, block.ffn), block.ffn_norm)
    npt.assert_allclose(encoder_block_forward(x, 'sa', block), h, atol=1e-12)


@pytest.mark.parametrize('variant', list(Variant))
def test_block_preserves_shape(variant, rng):
    block = init_block_params(_small(variant), rng)
    for T in (1, 3, 11):
        assert encoder_block_forward(rng.normal((T, 8)), variant, block).shape == (T, 8)


def test_block_rejects_mismatched_params(rng):
    block = init_block_params(_small('sa'), rng)
    with pytest.raises(ConfigError):
        encoder_block_forward(rng.normal((4, 8)), 'ha', block)


# =============================================================================
# Conv frontend
# =============================================================================

def _enumerated_length(n):
    for _ in range(2):
        n = len(range(0, n - 2, 2))
    return n


def test_frontend_length_formula_against_enumeration():
    for T in range(7, 201):
        assert frontend_output_length(T) == _enumerated_length(T) == ((T - 1) // 2 - 1) // 2


def test_frontend_output_shapes(rng):
    p = init_frontend_params(40, 16, rng, channels=4)
    assert p.proj.shape == (4 * 9, 16)
    assert conv_frontend(rng.normal((100, 40)), p).shape == (24, 16)
    assert conv_frontend(rng.normal((7, 40)), p).shape == (1, 16)
    for T in (8, 31, 64):
        assert conv_frontend(rng.normal((T, 40)), p).shape[0] == frontend_output_length(T)


def test_frontend_rejects_short_input(rng):
    p = init_frontend_params(16, 8, rng, channels=2)
    with pytest.raises(SequenceLengthError):
        conv_frontend(rng.normal((6, 16)), p)


def test_frontend_zero_features_give_bias_rows(rng):
    p = init_frontend_params(16, 8, rng, channels=2, positional_encoding=False)
    p.b_proj = rng.normal(8)
    y = conv_frontend(np.zeros((20, 16)), p)
    npt.assert_array_equal(y, np.tile(p.b_proj, (frontend_output_length(20), 1)))


def test_frontend_positional_encoding_switch(rng):
    p = init_frontend_params(16, 8, rng, channels=2)
    x = rng.normal((30, 16))
    with_pe = conv_frontend(x, p)
    p.positional_encoding = False
    without = conv_frontend(x, p)
    npt.assert_allclose(with_pe - without, sinusoidal_encoding(with_pe.shape[0], 8), atol=1e-12)


def test_frontend_window_covers_receptive_field(rng):
    p = init_frontend_params(16, 8, rng, channels=2, positional_encoding=False)
    x = rng.normal((30, 16))
    base = conv_frontend(x, p)
    start, stop = frontend_window(2)
    assert (start, stop) == (8, 15)
    moved = x.copy()
    moved[stop:] += 5.0
    moved[:start] += 5.0
    npt.assert_allclose(conv_frontend(moved, p)[2], base[2], atol=1e-12)


def test_sinusoidal_encoding_values():
    pe = sinusoidal_encoding(3, 4)
    npt.assert_allclose(pe[0], [0.0, 1.0, 0.0, 1.0])
    npt.assert_allclose(pe[1], [np.sin(1.0), np.cos(1.0), np.sin(0.01), np.cos(0.01)])


# =============================================================================
# 전체 인코더
# =============================================================================

def test_encoder_without_blocks_is_frontend(rng):
    cfg = _small('ldsa', n_blocks=0)
    params = init_encoder_params(cfg, rng, frontend_channels=2)
    features = rng.normal((20, 8))
    npt.assert_array_equal(encoder_forward(features, cfg, params),
                           conv_frontend(features, params.frontend))


@pytest.mark.parametrize('variant', list(Variant))
def test_encoder_is_chained_composition(variant, rng):
    cfg = _small(variant, n_blocks=2)
    params = init_encoder_params(cfg, rng, frontend_channels=2)
    features = rng.normal((20, 8))
    h = conv_frontend(features, params.frontend)
    for block in params.blocks:
        h = encoder_block_forward(h, variant, block)
    npt.assert_allclose(encoder_forward(features, cfg, params), h, atol=1e-12)


def test_encoder_rejects_block_count_mismatch(rng):
    cfg = _small('sa', n_blocks=2)
    params = init_encoder_params(cfg, rng, frontend_channels=2)
    params.blocks.pop()
    with pytest.raises(ConfigError):
        encoder_forward(rng.normal((20, 8)), cfg, params)


def test_encoder_rejects_wrong_feature_width(rng):
    cfg = _small('sa')
    params = init_encoder_params(cfg, rng, frontend_channels=2)
    with pytest.raises(ShapeError):
        encoder_forward(rng.normal((20, 9)), cfg, params)


def test_dsa_encoder_capacity_after_downsampling(rng):
    cfg = _small('dsa', t_max=4)
    params = init_encoder_params(cfg, rng, frontend_channels=2)
    assert encoder_forward(rng.normal((19, 8)), cfg, params).shape == (4, 8)
    with pytest.raises(CapacityError):
        encoder_forward(rng.normal((23, 8)), cfg, params)

    ldsa = _small('ldsa', t_max=4)
    long_ok = encoder_forward(rng.normal((60, 8)), ldsa,
                              init_encoder_params(ldsa, rng, frontend_channels=2))
    assert long_ok.shape == (frontend_output_length(60), 8)


# =============================================================================
# 파라미터 수
# =============================================================================

def test_single_head_ldsa_count():
    table = count_attention_params('ldsa', 320, 1, c=31)
    assert table.weight_total == 317120
    by_name = {e.name: e.count for e in table.entries}
    assert by_name['ldsa.w1.0'] == 102400
    assert by_name['ldsa.w2.0'] == 9920
    assert by_name['ldsa.w3.0'] == 102400
    assert by_name['ldsa.wo'] == 102400


@pytest.mark.parametrize('h', [1, 2, 4, 5, 8])
def test_multi_head_ldsa_count(h):
    d, c = 320, 15
    assert count_attention_params('ldsa', d, h, c=c).weight_total == 3 * d * d + d * c


def test_conv_module_and_ldsa_parity():
    d = 320
    cfg_ha = reference_config('ha')
    cfg_sa = reference_config('sa')
    ha, sa = count_params(cfg_ha), count_params(cfg_sa)
    for b in range(cfg_ha.n_blocks):
        conv = sa.sum(block=b, component='local', kind='weight')
        ldsa = ha.sum(block=b, component='local', kind='weight')
        assert conv == ldsa == 3 * d * d + 15 * d
        assert ha.sum(block=b, kind='weight') == sa.sum(block=b, kind='weight')
    assert ha.weight_total == sa.weight_total


@pytest.mark.parametrize('variant', list(Variant))
def test_count_params_matches_initialised_arrays(variant):
    cfg = tiny_config(variant)
    arrays = named_arrays(init_encoder_params(cfg, Rng(0), frontend_channels=3))
    table = count_params(cfg, frontend_channels=3)
    assert [e.name for e in table.entries] == list(arrays)
    for e in table.entries:
        assert arrays[e.name].shape == e.shape
    assert table.total == sum(a.size for a in arrays.values())


def test_param_kinds_and_block_totals():
    table = count_params(tiny_config('sa'), frontend_channels=2)
    kinds = {e.name: e.kind for e in table.entries}
    assert kinds['blocks.0.local.b_in'] == 'bias'
    assert kinds['blocks.0.local.norm.beta'] == 'norm'
    assert kinds['blocks.1.ffn.w_b'] == 'weight'
    assert kinds['frontend.b_proj'] == 'bias'
    rows = table.block_totals()
    assert [r['block'] for r in rows] == [0, 1]
    assert rows[0]['total'] == rows[0]['weight'] + rows[0]['bias'] + rows[0]['norm']
