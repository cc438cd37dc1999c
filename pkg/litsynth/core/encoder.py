"""
Encoder - 인코더 서브블록 및 전체 인코더 조립

구조:
1. conv frontend: 3x3 stride 2 convolution 두 번 (시간/주파수 4배 축소)
   → flatten → d 로 선형 투영 → sinusoidal positional encoding
2. N개 서브블록, 각 서브블록은 세 개의 sublayer
   - SA   : SA   → conv module → FFN
   - DSA  : DSA  → conv module → FFN
   - LDSA : LDSA → conv module → FFN
   - HA   : SA   → LDSA(c)     → FFN  (conv module 자리를 LDSA로 교체)
3. sublayer: layer_norm(x + f(x)) (post-norm)
4. count_params: 가중치 형태로부터 정확한 파라미터 수 계산

conv module (Conformer 방식, batch norm 대신 layer norm):
    pointwise d→2d → GLU → depthwise conv (zero "same" padding)
    → layer norm → swish → pointwise d→d
"""

import json
import re
from dataclasses import dataclass, field, fields
from functools import partial
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .numerics import (
    Matrix, Rng, ShapeError, CapacityError, ConfigError, SequenceLengthError,
    relu, relu_backward, sigmoid, layer_norm, layer_norm_backward,
    xavier_uniform_init, shape_str,
)
from .attention import (
    Variant, AttentionParams, SaParams, DsaParams, LdsaParams,
    init_sa_params, init_dsa_params, init_ldsa_params,
    attention_forward, attention_backward, variant_of,
)

FRONTEND_CHANNELS = 32
FRONTEND_KERNEL = 3
FRONTEND_STRIDE = 2
FRONTEND_MIN_LENGTH = 7


# =============================================================================
# 설정
# =============================================================================

@dataclass
class EncoderConfig:
    """
    인코더 하이퍼파라미터

    기본값은 기준 모델 설정 (N=12, d=320, h=4, c=31, kernel 15, 40차원 Fbank).
    ffn_inner는 4d.
    """
    variant: Variant = Variant.SA
    n_blocks: int = 12
    d: int = 320
    h: int = 4
    c: int = 31
    conv_kernel: int = 15
    ffn_inner: int = 1280
    t_max: int = 512
    feat_dim: int = 40

    def __post_init__(self):
        self.variant = Variant.parse(self.variant)

    @property
    def d_k(self) -> int:
        return self.d // self.h

    def validate(self) -> 'EncoderConfig':
        for name in ('d', 'h', 'c', 'conv_kernel', 'ffn_inner', 't_max', 'feat_dim'):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name}는 1 이상이어야 함: {getattr(self, name)}")
        if self.n_blocks < 0:
            raise ConfigError(f"n_blocks는 0 이상이어야 함: {self.n_blocks}")
        if self.d % self.h:
            raise ConfigError(f"d={self.d}는 h={self.h}로 나누어떨어져야 함")
        if self.c % 2 == 0:
            raise ConfigError(f"context width c는 홀수여야 함: {self.c}")
        if self.conv_kernel % 2 == 0:
            raise ConfigError(f"conv_kernel은 홀수여야 함: {self.conv_kernel}")
        if self.feat_dim < FRONTEND_MIN_LENGTH:
            raise ConfigError(
                f"feat_dim은 {FRONTEND_MIN_LENGTH} 이상이어야 함: {self.feat_dim}"
            )
        return self

    def to_dict(self) -> dict:
        data = {f.name: getattr(self, f.name) for f in fields(self)}
        data['variant'] = self.variant.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> 'EncoderConfig':
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"알 수 없는 설정 필드: {', '.join(unknown)}")
        return cls(**data).validate()


def load_config(path: Union[str, Path]) -> EncoderConfig:
    """JSON 파일에서 EncoderConfig 읽기"""
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    return EncoderConfig.from_dict(data)


def save_config(config: EncoderConfig, path: Union[str, Path]) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(config.to_dict(), f, indent=2)
        f.write('\n')


def reference_config(variant: Union[str, Variant]) -> EncoderConfig:
    """기준 모델 설정 (HA는 c=15 = conv kernel 크기)"""
    variant = Variant.parse(variant)
    c = 15 if variant == Variant.HA else 31
    return EncoderConfig(variant=variant, c=c)


def tiny_config(variant: Union[str, Variant], n_blocks: int = 2) -> EncoderConfig:
    """테스트/과적합 실험용 소형 설정"""
    return EncoderConfig(variant=variant, n_blocks=n_blocks, d=16, h=2, c=5,
                         conv_kernel=5, ffn_inner=64, t_max=64, feat_dim=16)


# =============================================================================
# 파라미터 컨테이너
# =============================================================================

@dataclass
class LayerNormParams:
    gamma: np.ndarray
    beta: np.ndarray


@dataclass
class FfnParams:
    """position-wise feed-forward"""
    w_a: Matrix
    b_a: np.ndarray
    w_b: Matrix
    b_b: np.ndarray


@dataclass
class ConvModuleParams:
    """Conformer 방식 convolution module"""
    pointwise_in: Matrix      # d x 2d
    b_in: np.ndarray          # 2d
    depthwise: Matrix         # kernel x d (kernel-major)
    b_depthwise: np.ndarray   # d
    norm: LayerNormParams
    pointwise_out: Matrix     # d x d
    b_out: np.ndarray         # d

    @property
    def kernel(self) -> int:
        return self.depthwise.shape[0]


@dataclass
class FrontendParams:
    """conv frontend (3x3 stride 2 두 단계 + 선형 투영)"""
    conv1: np.ndarray         # C1 x 1 x 3 x 3
    b1: np.ndarray
    conv2: np.ndarray         # C2 x C1 x 3 x 3
    b2: np.ndarray
    proj: Matrix              # (C2 * F'') x d
    b_proj: np.ndarray
    positional_encoding: bool = True

    @property
    def channels(self) -> int:
        return self.conv2.shape[0]


@dataclass
class BlockParams:
    """인코더 서브블록: (mixer, local, ffn) 세 sublayer와 각각의 layer norm"""
    mixer: AttentionParams
    mixer_norm: LayerNormParams
    local: Union[ConvModuleParams, LdsaParams]
    local_norm: LayerNormParams
    ffn: FfnParams
    ffn_norm: LayerNormParams

    def sublayers(self) -> List[tuple]:
        return [
            (self.mixer, self.mixer_norm),
            (self.local, self.local_norm),
            (self.ffn, self.ffn_norm),
        ]


@dataclass
class EncoderParams:
    frontend: FrontendParams
    blocks: List[BlockParams] = field(default_factory=list)


# =============================================================================
# 초기화
# =============================================================================

def init_layer_norm_params(d: int) -> LayerNormParams:
    return LayerNormParams(gamma=np.ones(d), beta=np.zeros(d))


def init_ffn_params(d: int, inner: int, rng: Rng) -> FfnParams:
    return FfnParams(
        w_a=xavier_uniform_init(d, inner, rng),
        b_a=np.zeros(inner),
        w_b=xavier_uniform_init(inner, d, rng),
        b_b=np.zeros(d),
    )


def init_conv_module_params(d: int, kernel: int, rng: Rng) -> ConvModuleParams:
    if kernel < 1 or kernel % 2 == 0:
        raise ConfigError(f"conv kernel은 1 이상의 홀수여야 함: {kernel}")
    return ConvModuleParams(
        pointwise_in=xavier_uniform_init(d, 2 * d, rng),
        b_in=np.zeros(2 * d),
        depthwise=xavier_uniform_init(kernel, d, rng),
        b_depthwise=np.zeros(d),
        norm=init_layer_norm_params(d),
        pointwise_out=xavier_uniform_init(d, d, rng),
        b_out=np.zeros(d),
    )


def init_frontend_params(feat_dim: int, d: int, rng: Rng,
                         channels: int = FRONTEND_CHANNELS,
                         positional_encoding: bool = True) -> FrontendParams:
    k = FRONTEND_KERNEL
    f2 = frontend_output_length(feat_dim)
    return FrontendParams(
        conv1=xavier_uniform_init(channels, k * k, rng).reshape(channels, 1, k, k),
        b1=np.zeros(channels),
        conv2=xavier_uniform_init(channels, channels * k * k, rng)
            .reshape(channels, channels, k, k),
        b2=np.zeros(channels),
        proj=xavier_uniform_init(channels * f2, d, rng),
        b_proj=np.zeros(d),
        positional_encoding=positional_encoding,
    )


def init_block_params(config: EncoderConfig, rng: Rng) -> BlockParams:
    cfg = config
    if cfg.variant in (Variant.SA, Variant.HA):
        mixer = init_sa_params(cfg.d, cfg.h, rng)
    elif cfg.variant == Variant.DSA:
        mixer = init_dsa_params(cfg.d, cfg.h, cfg.t_max, rng)
    else:
        mixer = init_ldsa_params(cfg.d, cfg.h, cfg.c, rng)

    if cfg.variant == Variant.HA:
        local = init_ldsa_params(cfg.d, cfg.h, cfg.c, rng)
    else:
        local = init_conv_module_params(cfg.d, cfg.conv_kernel, rng)

    return BlockParams(
        mixer=mixer,
        mixer_norm=init_layer_norm_params(cfg.d),
        local=local,
        local_norm=init_layer_norm_params(cfg.d),
        ffn=init_ffn_params(cfg.d, cfg.ffn_inner, rng),
        ffn_norm=init_layer_norm_params(cfg.d),
    )


def init_encoder_params(config: EncoderConfig, rng: Rng,
                        frontend_channels: int = FRONTEND_CHANNELS,
                        positional_encoding: bool = True) -> EncoderParams:
    """
    전체 인코더 파라미터 초기화

    가중치는 Xavier uniform, bias는 0, layer norm은 gamma=1 / beta=0.
    """
    config.validate()
    frontend = init_frontend_params(config.feat_dim, config.d, rng,
                                    channels=frontend_channels,
                                    positional_encoding=positional_encoding)
    blocks = [init_block_params(config, rng) for _ in range(config.n_blocks)]
    return EncoderParams(frontend=frontend, blocks=blocks)


# =============================================================================
# FFN
# =============================================================================

def _check_width(x: Matrix, d: int, what: str):
    if x.ndim != 2 or x.shape[1] != d:
        raise ShapeError(f"{what} 입력 형태 오류: {shape_str(x)} (기대값 Tx{d})")


def ffn_forward(x: Matrix, p: FfnParams) -> Matrix:
    """ReLU(x W_a + b_a) W_b + b_b"""
    _check_width(x, p.w_a.shape[0], "FFN")
    return relu(x @ p.w_a + p.b_a) @ p.w_b + p.b_b


def ffn_backward(x: Matrix, p: FfnParams, dy: Matrix) -> Tuple[FfnParams, Matrix]:
    pre = x @ p.w_a + p.b_a
    act = relu(pre)
    dpre = relu_backward(pre, dy @ p.w_b.T)
    grads = FfnParams(
        w_a=x.T @ dpre,
        b_a=dpre.sum(axis=0),
        w_b=act.T @ dy,
        b_b=dy.sum(axis=0),
    )
    return grads, dpre @ p.w_a.T


# =============================================================================
# Convolution module
# =============================================================================

def swish(m: np.ndarray) -> np.ndarray:
    return m * sigmoid(m)


def depthwise_conv1d(x: Matrix, kernel: Matrix, bias: np.ndarray) -> Matrix:
    """
    채널별 1-D convolution (시간축, zero "same" padding)

    y[t, ch] = sum_k kernel[k, ch] * x[t + k - K//2, ch] + bias[ch]
    """
    T = x.shape[0]
    K = kernel.shape[0]
    r = K // 2
    padded = np.pad(x, ((r, r), (0, 0)))
    y = np.zeros_like(x) + bias
    for k in range(K):
        y += kernel[k] * padded[k:k + T]
    return y


def depthwise_conv1d_backward(x: Matrix, kernel: Matrix,
                              dy: Matrix) -> Tuple[Matrix, Matrix, np.ndarray]:
    """Returns: (dx, dkernel, dbias)"""
    T = x.shape[0]
    K = kernel.shape[0]
    r = K // 2
    padded = np.pad(x, ((r, r), (0, 0)))
    dpadded = np.zeros_like(padded)
    dkernel = np.empty_like(kernel)
    for k in range(K):
        dkernel[k] = np.sum(dy * padded[k:k + T], axis=0)
        dpadded[k:k + T] += kernel[k] * dy
    return dpadded[r:r + T], dkernel, dy.sum(axis=0)


def _conv_module_trace(x: Matrix, p: ConvModuleParams) -> dict:
    d = p.pointwise_out.shape[0]
    z = x @ p.pointwise_in + p.b_in
    a, gate = z[:, :d], sigmoid(z[:, d:])
    glu = a * gate
    conv = depthwise_conv1d(glu, p.depthwise, p.b_depthwise)
    normed = layer_norm(conv, p.norm.gamma, p.norm.beta)
    act = swish(normed)
    return {
        'a': a, 'gate': gate, 'glu': glu, 'conv': conv,
        'normed': normed, 'act': act,
        'y': act @ p.pointwise_out + p.b_out,
    }


def conv_module_forward(x: Matrix, p: ConvModuleParams) -> Matrix:
    """pointwise d→2d, GLU, depthwise conv, layer norm, swish, pointwise d→d"""
    _check_width(x, p.pointwise_in.shape[0], "conv module")
    if p.kernel % 2 == 0:
        raise ConfigError(f"conv kernel은 홀수여야 함: {p.kernel}")
    return _conv_module_trace(x, p)['y']


def conv_module_backward(x: Matrix, p: ConvModuleParams,
                         dy: Matrix) -> Tuple[ConvModuleParams, Matrix]:
    tr = _conv_module_trace(x, p)
    dact = dy @ p.pointwise_out.T
    sig = sigmoid(tr['normed'])
    dnormed = dact * (sig + tr['normed'] * sig * (1.0 - sig))
    dconv, dgamma, dbeta = layer_norm_backward(tr['conv'], p.norm.gamma, dnormed)
    dglu, dkernel, db_dw = depthwise_conv1d_backward(tr['glu'], p.depthwise, dconv)
    gate = tr['gate']
    dz = np.concatenate([dglu * gate, dglu * tr['a'] * gate * (1.0 - gate)], axis=1)
    grads = ConvModuleParams(
        pointwise_in=x.T @ dz,
        b_in=dz.sum(axis=0),
        depthwise=dkernel,
        b_depthwise=db_dw,
        norm=LayerNormParams(gamma=dgamma, beta=dbeta),
        pointwise_out=tr['act'].T @ dy,
        b_out=dy.sum(axis=0),
    )
    return grads, dz @ p.pointwise_in.T


# =============================================================================
# Sublayer / 블록
# =============================================================================

def _inner_forward(p, x: Matrix) -> Matrix:
    if isinstance(p, FfnParams):
        return ffn_forward(x, p)
    if isinstance(p, ConvModuleParams):
        return conv_module_forward(x, p)
    return attention_forward(p, x).y


def _inner_backward(p, x: Matrix, dy: Matrix):
    if isinstance(p, FfnParams):
        return ffn_backward(x, p, dy)
    if isinstance(p, ConvModuleParams):
        return conv_module_backward(x, p, dy)
    return attention_backward(variant_of(p), p, x, dy)


def sublayer(x: Matrix, f: Callable[[Matrix], Matrix],
             norm: Optional[LayerNormParams] = None) -> Matrix:
    """
    post-norm residual: layer_norm(x + f(x))

    Args:
        norm: None이면 gamma=1, beta=0
    """
    if norm is None:
        norm = init_layer_norm_params(x.shape[1])
    fx = f(x)
    if fx.shape != x.shape:
        raise ShapeError(f"sublayer 함수가 형태를 바꿈: {shape_str(x)} → {shape_str(fx)}")
    return layer_norm(x + fx, norm.gamma, norm.beta)


def sublayer_backward(x: Matrix, inner, norm: LayerNormParams, dy: Matrix):
    """
    Returns:
        (inner 기울기, LayerNormParams 기울기, dx)
    """
    z = x + _inner_forward(inner, x)
    dz, dgamma, dbeta = layer_norm_backward(z, norm.gamma, dy)
    inner_grads, dx_inner = _inner_backward(inner, x, dz)
    return inner_grads, LayerNormParams(gamma=dgamma, beta=dbeta), dz + dx_inner


def _check_block(variant: Variant, p: BlockParams):
    expected = {
        Variant.SA: (SaParams, ConvModuleParams),
        Variant.DSA: (DsaParams, ConvModuleParams),
        Variant.LDSA: (LdsaParams, ConvModuleParams),
        Variant.HA: (SaParams, LdsaParams),
    }[variant]
    if not isinstance(p.mixer, expected[0]) or not isinstance(p.local, expected[1]):
        raise ConfigError(
            f"{variant.value} 블록 구성 불일치: "
            f"{type(p.mixer).__name__} + {type(p.local).__name__}"
        )


def encoder_block_forward(x: Matrix, variant: Union[str, Variant],
                          p: BlockParams) -> Matrix:
    """세 sublayer를 순서대로 적용 (각각 post-norm residual)"""
    variant = Variant.parse(variant)
    _check_block(variant, p)
    for inner, norm in p.sublayers():
        x = sublayer(x, partial(_inner_forward, inner), norm)
    return x


def encoder_block_backward(x: Matrix, variant: Union[str, Variant], p: BlockParams,
                           dy: Matrix) -> Tuple[BlockParams, Matrix]:
    variant = Variant.parse(variant)
    _check_block(variant, p)
    inputs = []
    for inner, norm in p.sublayers():
        inputs.append(x)
        x = sublayer(x, partial(_inner_forward, inner), norm)

    grads = []
    for (inner, norm), x_in in reversed(list(zip(p.sublayers(), inputs))):
        g_inner, g_norm, dy = sublayer_backward(x_in, inner, norm, dy)
        grads.append((g_inner, g_norm))
    grads.reverse()
    return BlockParams(
        mixer=grads[0][0], mixer_norm=grads[0][1],
        local=grads[1][0], local_norm=grads[1][1],
        ffn=grads[2][0], ffn_norm=grads[2][1],
    ), dy


# =============================================================================
# Conv frontend
# =============================================================================

def frontend_output_length(n: int, stages: int = 2) -> int:
    """kernel 3, stride 2, padding 없음: 단계마다 n → (n - 1) // 2"""
    for _ in range(stages):
        n = (n - FRONTEND_KERNEL) // FRONTEND_STRIDE + 1 if n >= FRONTEND_KERNEL else 0
    return n


def frontend_window(t: int) -> Tuple[int, int]:
    """출력 프레임 t가 보는 입력 행 구간 [4t, 4t + 7)"""
    return 4 * t, 4 * t + FRONTEND_MIN_LENGTH


def sinusoidal_encoding(T: int, d: int) -> Matrix:
    """pe[t, 2i] = sin(t / 10000^(2i/d)), pe[t, 2i+1] = cos(...)"""
    pos = np.arange(T)[:, None]
    i = np.arange(d)[None, :]
    angle = pos / np.power(10000.0, (2 * (i // 2)) / d)
    return np.where(i % 2 == 0, np.sin(angle), np.cos(angle))


def _conv2d_s2(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # x: (Cin, T, F), w: (Cout, Cin, 3, 3) → (Cout, T', F')
    k, s = FRONTEND_KERNEL, FRONTEND_STRIDE
    win = sliding_window_view(x, (k, k), axis=(1, 2))[:, ::s, ::s]
    out = np.tensordot(w, win, axes=([1, 2, 3], [0, 3, 4])) + b[:, None, None]
    return out, win


def _conv2d_s2_backward(x: np.ndarray, w: np.ndarray, win: np.ndarray,
                        dout: np.ndarray):
    k, s = FRONTEND_KERNEL, FRONTEND_STRIDE
    dw = np.tensordot(dout, win, axes=([1, 2], [1, 2]))
    db = dout.sum(axis=(1, 2))
    dwin = np.tensordot(w, dout, axes=([0], [0]))   # (Cin, 3, 3, T', F')
    dx = np.zeros_like(x)
    to, fo = dout.shape[1:]
    for i in range(k):
        for j in range(k):
            dx[:, i:i + s * to:s, j:j + s * fo:s] += dwin[:, i, j]
    return dx, dw, db


def _frontend_trace(features: Matrix, p: FrontendParams) -> dict:
    T, F = features.shape
    if T < FRONTEND_MIN_LENGTH or F < FRONTEND_MIN_LENGTH:
        raise SequenceLengthError(
            f"frontend 입력이 너무 짧음: {T}x{F} (최소 {FRONTEND_MIN_LENGTH}x{FRONTEND_MIN_LENGTH})"
        )
    x0 = features[None]
    pre1, win1 = _conv2d_s2(x0, p.conv1, p.b1)
    h1 = relu(pre1)
    pre2, win2 = _conv2d_s2(h1, p.conv2, p.b2)
    h2 = relu(pre2)
    c2, t2, f2 = h2.shape
    flat = h2.transpose(1, 0, 2).reshape(t2, c2 * f2)
    if flat.shape[1] != p.proj.shape[0]:
        raise ShapeError(
            f"frontend 투영 차원 불일치: flatten {shape_str(flat)} vs proj {shape_str(p.proj)}"
        )
    y = flat @ p.proj + p.b_proj
    if p.positional_encoding:
        y = y + sinusoidal_encoding(t2, y.shape[1])
    return {'x0': x0, 'win1': win1, 'pre1': pre1, 'h1': h1,
            'win2': win2, 'pre2': pre2, 'flat': flat, 'y': y}


def conv_frontend(features: Matrix, p: FrontendParams) -> Matrix:
    """
    conv frontend (T x feat_dim → T' x d)

    T' = ((T - 1) // 2 - 1) // 2, 주파수 축도 같은 규칙 (40 → 19 → 9)

    Raises:
        SequenceLengthError: T < 7
    """
    return _frontend_trace(features, p)['y']


def conv_frontend_backward(features: Matrix, p: FrontendParams,
                           dy: Matrix) -> Tuple[FrontendParams, Matrix]:
    tr = _frontend_trace(features, p)
    c2, t2, f2 = tr['pre2'].shape
    dflat = dy @ p.proj.T
    dh2 = dflat.reshape(t2, c2, f2).transpose(1, 0, 2)
    dh1, dconv2, db2 = _conv2d_s2_backward(tr['h1'], p.conv2, tr['win2'],
                                           relu_backward(tr['pre2'], dh2))
    dx0, dconv1, db1 = _conv2d_s2_backward(tr['x0'], p.conv1, tr['win1'],
                                           relu_backward(tr['pre1'], dh1))
    grads = FrontendParams(
        conv1=dconv1, b1=db1, conv2=dconv2, b2=db2,
        proj=tr['flat'].T @ dy, b_proj=dy.sum(axis=0),
        positional_encoding=p.positional_encoding,
    )
    return grads, dx0[0]


# =============================================================================
# 전체 인코더
# =============================================================================

def _check_features(features: Matrix, config: EncoderConfig):
    if features.ndim != 2 or features.shape[1] != config.feat_dim:
        raise ShapeError(
            f"특징 형태 오류: {shape_str(features)} (기대값 Tx{config.feat_dim})"
        )


def _check_blocks(config: EncoderConfig, params: EncoderParams):
    if len(params.blocks) != config.n_blocks:
        raise ConfigError(
            f"블록 수 불일치: 파라미터 {len(params.blocks)}개, 설정 n_blocks={config.n_blocks}"
        )


def _check_capacity(config: EncoderConfig, t_out: int):
    if config.variant == Variant.DSA and t_out > config.t_max:
        raise CapacityError(
            f"frontend 출력 길이 {t_out}가 DSA 최대 길이 t_max={config.t_max} 초과"
        )


def encoder_forward(features: Matrix, config: EncoderConfig,
                    params: EncoderParams) -> Matrix:
    """conv frontend 후 n_blocks개 서브블록 적용"""
    config.validate()
    _check_features(features, config)
    _check_blocks(config, params)
    x = conv_frontend(features, params.frontend)
    _check_capacity(config, x.shape[0])
    for block in params.blocks:
        x = encoder_block_forward(x, config.variant, block)
    return x


def encoder_backward(features: Matrix, config: EncoderConfig, params: EncoderParams,
                     dy: Matrix) -> Tuple[EncoderParams, Matrix]:
    """
    인코더 출력 기울기 dy로부터 전체 파라미터 기울기와 d(features) 계산
    """
    config.validate()
    _check_features(features, config)
    _check_blocks(config, params)
    x = conv_frontend(features, params.frontend)
    _check_capacity(config, x.shape[0])
    if dy.shape != x.shape:
        raise ShapeError(f"dY 형태 오류: {shape_str(dy)} (기대값 {shape_str(x)})")
    inputs = []
    blocks = params.blocks
    for block in blocks:
        inputs.append(x)
        x = encoder_block_forward(x, config.variant, block)

    block_grads = []
    for block, x_in in reversed(list(zip(blocks, inputs))):
        g, dy = encoder_block_backward(x_in, config.variant, block, dy)
        block_grads.append(g)
    block_grads.reverse()
    g_front, dfeatures = conv_frontend_backward(features, params.frontend, dy)
    return EncoderParams(frontend=g_front, blocks=block_grads), dfeatures


# =============================================================================
# 파라미터 수
# =============================================================================

@dataclass
class ParamEntry:
    name: str
    shape: Tuple[int, ...]
    count: int
    kind: str                 # weight / bias / norm
    component: str            # frontend, mixer, local, ffn, ...
    block: Optional[int] = None


@dataclass
class ParamTable:
    """가중치 행렬별 / 블록별 / 전체 파라미터 수"""
    entries: List[ParamEntry] = field(default_factory=list)

    @property
    def total(self) -> int:
        return sum(e.count for e in self.entries)

    @property
    def weight_total(self) -> int:
        return sum(e.count for e in self.entries if e.kind == 'weight')

    def select(self, block: Optional[int] = None, component: Optional[str] = None,
               kind: Optional[str] = None) -> List[ParamEntry]:
        return [
            e for e in self.entries
            if (block is None or e.block == block)
            and (component is None or e.component == component)
            and (kind is None or e.kind == kind)
        ]

    def sum(self, block: Optional[int] = None, component: Optional[str] = None,
            kind: Optional[str] = None) -> int:
        return sum(e.count for e in self.select(block, component, kind))

    def block_totals(self) -> List[Dict[str, int]]:
        blocks = sorted({e.block for e in self.entries if e.block is not None})
        return [
            {
                'block': b,
                'total': self.sum(block=b),
                'weight': self.sum(block=b, kind='weight'),
                'bias': self.sum(block=b, kind='bias'),
                'norm': self.sum(block=b, kind='norm'),
            }
            for b in blocks
        ]

    def to_dict(self) -> dict:
        return {
            'entries': [
                {'name': e.name, 'shape': list(e.shape), 'count': e.count,
                 'kind': e.kind, 'component': e.component, 'block': e.block}
                for e in self.entries
            ],
            'blocks': self.block_totals(),
            'weight_total': self.weight_total,
            'total': self.total,
        }


_HEAD_DIGITS = re.compile(r'^\d+$')
_BIAS_NAME = re.compile(r'^b(\d|_|$)')


def _param_kind(name: str) -> str:
    leaf = [part for part in name.split('.') if not _HEAD_DIGITS.match(part)][-1]
    if leaf in ('gamma', 'beta'):
        return 'norm'
    if _BIAS_NAME.match(leaf):
        return 'bias'
    return 'weight'


def _attention_shapes(variant: Variant, d: int, h: int, c: int,
                      t_max: int) -> List[Tuple[str, Tuple[int, ...]]]:
    dk = d // h
    if variant == Variant.SA:
        names = [('wq', (d, dk)), ('wk', (d, dk)), ('wv', (d, dk))]
    else:
        cols = t_max if variant == Variant.DSA else c
        names = [('w1', (d, dk)), ('w2', (dk, cols)), ('w3', (d, dk))]
    shapes = [(f"{n}.{i}", s) for n, s in names for i in range(h)]
    shapes.append(('wo', (d, d)))
    return shapes


def _conv_module_shapes(d: int, kernel: int):
    return [
        ('pointwise_in', (d, 2 * d)), ('b_in', (2 * d,)),
        ('depthwise', (kernel, d)), ('b_depthwise', (d,)),
        ('norm.gamma', (d,)), ('norm.beta', (d,)),
        ('pointwise_out', (d, d)), ('b_out', (d,)),
    ]


def _ffn_shapes(d: int, inner: int):
    return [('w_a', (d, inner)), ('b_a', (inner,)), ('w_b', (inner, d)), ('b_b', (d,))]


def _norm_shapes(d: int):
    return [('gamma', (d,)), ('beta', (d,))]


def _frontend_shapes(feat_dim: int, d: int, channels: int):
    k = FRONTEND_KERNEL
    f2 = frontend_output_length(feat_dim)
    return [
        ('conv1', (channels, 1, k, k)), ('b1', (channels,)),
        ('conv2', (channels, channels, k, k)), ('b2', (channels,)),
        ('proj', (channels * f2, d)), ('b_proj', (d,)),
    ]


def _entries(prefix: str, component: str, shapes, block: Optional[int] = None):
    return [
        ParamEntry(name=f"{prefix}.{n}", shape=tuple(s), count=int(np.prod(s)),
                   kind=_param_kind(n), component=component, block=block)
        for n, s in shapes
    ]


def count_attention_params(variant: Union[str, Variant], d: int, h: int,
                           c: int = 31, t_max: int = 512) -> ParamTable:
    """단일 어텐션 층의 파라미터 표 (어텐션 투영에는 bias 없음)"""
    variant = Variant.parse(variant)
    if variant == Variant.HA:
        raise ConfigError("HA는 단일 어텐션 층이 아님")
    if d % h:
        raise ConfigError(f"d={d}는 h={h}로 나누어떨어져야 함")
    return ParamTable(_entries(variant.value, 'attention',
                               _attention_shapes(variant, d, h, c, t_max)))


def count_params(config: EncoderConfig,
                 frontend_channels: int = FRONTEND_CHANNELS) -> ParamTable:
    """
    설정으로부터 정확한 파라미터 수 계산 (가중치를 만들지 않음)

    이름은 named_arrays(init_encoder_params(config, ...))와 같다.
    """
    cfg = config.validate()
    table = ParamTable(_entries('frontend', 'frontend',
                                _frontend_shapes(cfg.feat_dim, cfg.d, frontend_channels)))
    mixer_variant = Variant.SA if cfg.variant == Variant.HA else cfg.variant
    for b in range(cfg.n_blocks):
        pre = f"blocks.{b}"
        table.entries += _entries(f"{pre}.mixer", 'mixer',
                                  _attention_shapes(mixer_variant, cfg.d, cfg.h, cfg.c, cfg.t_max), b)
        table.entries += _entries(f"{pre}.mixer_norm", 'mixer_norm', _norm_shapes(cfg.d), b)
        if cfg.variant == Variant.HA:
            local = _attention_shapes(Variant.LDSA, cfg.d, cfg.h, cfg.c, cfg.t_max)
        else:
            local = _conv_module_shapes(cfg.d, cfg.conv_kernel)
        table.entries += _entries(f"{pre}.local", 'local', local, b)
        table.entries += _entries(f"{pre}.local_norm", 'local_norm', _norm_shapes(cfg.d), b)
        table.entries += _entries(f"{pre}.ffn", 'ffn', _ffn_shapes(cfg.d, cfg.ffn_inner), b)
        table.entries += _entries(f"{pre}.ffn_norm", 'ffn_norm', _norm_shapes(cfg.d), b)
    return table
