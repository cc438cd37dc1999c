"""
Attention Mechanisms - SA / DSA / LDSA (multi-head)

1. SA: Softmax(Q K^T / sqrt(d_k)) V, 헤드별 Q/K/V 투영
2. DSA: B = Softmax(ReLU(X W1) W2[:, :T]), 출력 B (X W3)
3. LDSA: 중심 프레임 기준 c개 창(window)에만 가중치 예측, 창 밖은 0
4. 모든 변형: 헤드 출력 concat 후 공유 Wo 투영
5. 수동 역전파 (attention_backward)와 band_expand 오라클

헤드 분할 규칙 (DSA/LDSA):
    헤드 i 마다 W1_i: d x d_k, W2_i: d_k x c (또는 d_k x t_max), W3_i: d x d_k
    SA의 W^Q_i / W^K_i / W^V_i 와 같은 구조

LDSA 경계 처리:
    t + j - c//2 가 [0, T) 밖이면 0 벡터가 기여한다 (재정규화 없음).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple, Union

import numpy as np

from .numerics import (
    Matrix, Rng, ShapeError, CapacityError, ConfigError,
    row_softmax, row_softmax_backward, relu, relu_backward,
    xavier_uniform_init, shape_str,
)


class Variant(Enum):
    """어텐션 / 인코더 블록 변형"""
    SA = "sa"
    DSA = "dsa"
    LDSA = "ldsa"
    HA = "ha"

    @classmethod
    def parse(cls, value: Union[str, 'Variant']) -> 'Variant':
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ', '.join(v.value for v in cls)
            raise ConfigError(f"알 수 없는 변형: {value} (지원: {names})") from None


# =============================================================================
# 파라미터 컨테이너
# =============================================================================

def _check_heads(name: str, mats: List[Matrix], rows: int, cols: int):
    for i, m in enumerate(mats):
        if m.shape != (rows, cols):
            raise ShapeError(
                f"{name}[{i}] 형태 오류: {shape_str(m)} (기대값 {rows}x{cols})"
            )


@dataclass
class SaParams:
    """dot-product self-attention 파라미터"""
    wq: List[Matrix]
    wk: List[Matrix]
    wv: List[Matrix]
    wo: Matrix

    @property
    def heads(self) -> int:
        return len(self.wq)

    @property
    def d(self) -> int:
        return self.wo.shape[0]

    @property
    def d_k(self) -> int:
        return self.wq[0].shape[1]

    def validate(self):
        h, d = self.heads, self.d
        if h < 1 or d % h:
            raise ConfigError(f"d={d}는 헤드 수 h={h}로 나누어떨어져야 함")
        dk = d // h
        for name in ('wq', 'wk', 'wv'):
            mats = getattr(self, name)
            if len(mats) != h:
                raise ShapeError(f"{name} 헤드 수 불일치: {len(mats)} != {h}")
            _check_heads(name, mats, d, dk)
        if self.wo.shape != (d, d):
            raise ShapeError(f"wo 형태 오류: {shape_str(self.wo)}")


@dataclass
class DsaParams:
    """dense synthesizer attention 파라미터 (W2 열 수 = t_max)"""
    w1: List[Matrix]
    w2: List[Matrix]
    w3: List[Matrix]
    wo: Matrix

    @property
    def heads(self) -> int:
        return len(self.w1)

    @property
    def d(self) -> int:
        return self.wo.shape[0]

    @property
    def d_k(self) -> int:
        return self.w1[0].shape[1]

    @property
    def t_max(self) -> int:
        return self.w2[0].shape[1]

    def validate(self):
        _validate_synth(self, self.t_max)


@dataclass
class LdsaParams:
    """local dense synthesizer attention 파라미터 (W2 열 수 = c)"""
    w1: List[Matrix]
    w2: List[Matrix]
    w3: List[Matrix]
    wo: Matrix

    @property
    def heads(self) -> int:
        return len(self.w1)

    @property
    def d(self) -> int:
        return self.wo.shape[0]

    @property
    def d_k(self) -> int:
        return self.w1[0].shape[1]

    @property
    def c(self) -> int:
        return self.w2[0].shape[1]

    def validate(self):
        if self.c < 1 or self.c % 2 == 0:
            raise ConfigError(f"context width c는 1 이상의 홀수여야 함: {self.c}")
        _validate_synth(self, self.c)


def _validate_synth(p, cols: int):
    h, d = p.heads, p.d
    if h < 1 or d % h:
        raise ConfigError(f"d={d}는 헤드 수 h={h}로 나누어떨어져야 함")
    if cols < 1:
        raise ConfigError(f"W2 열 수는 1 이상이어야 함: {cols}")
    dk = d // h
    for name in ('w1', 'w2', 'w3'):
        if len(getattr(p, name)) != h:
            raise ShapeError(f"{name} 헤드 수 불일치: {len(getattr(p, name))} != {h}")
    _check_heads('w1', p.w1, d, dk)
    _check_heads('w2', p.w2, dk, cols)
    _check_heads('w3', p.w3, d, dk)
    if p.wo.shape != (d, d):
        raise ShapeError(f"wo 형태 오류: {shape_str(p.wo)}")


AttentionParams = Union[SaParams, DsaParams, LdsaParams]


@dataclass
class AttentionOutput:
    """어텐션 출력 (T x d)과 헤드별 가중치 (T x T 또는 T x c)"""
    y: Matrix
    weights: List[Matrix] = field(default_factory=list)


def variant_of(p: AttentionParams) -> Variant:
    if isinstance(p, SaParams):
        return Variant.SA
    if isinstance(p, DsaParams):
        return Variant.DSA
    if isinstance(p, LdsaParams):
        return Variant.LDSA
    raise TypeError(f"어텐션 파라미터가 아님: {type(p).__name__}")


# =============================================================================
# 초기화
# =============================================================================

def _head_mats(rows: int, cols: int, h: int, rng: Rng) -> List[Matrix]:
    return [xavier_uniform_init(rows, cols, rng) for _ in range(h)]


def _check_dims(d: int, h: int):
    if d < 1 or h < 1 or d % h:
        raise ConfigError(f"d={d}는 헤드 수 h={h}로 나누어떨어져야 함")


def init_sa_params(d: int, h: int, rng: Rng) -> SaParams:
    _check_dims(d, h)
    dk = d // h
    return SaParams(
        wq=_head_mats(d, dk, h, rng),
        wk=_head_mats(d, dk, h, rng),
        wv=_head_mats(d, dk, h, rng),
        wo=xavier_uniform_init(d, d, rng),
    )


def init_dsa_params(d: int, h: int, t_max: int, rng: Rng) -> DsaParams:
    _check_dims(d, h)
    if t_max < 1:
        raise ConfigError(f"t_max는 1 이상이어야 함: {t_max}")
    dk = d // h
    return DsaParams(
        w1=_head_mats(d, dk, h, rng),
        w2=_head_mats(dk, t_max, h, rng),
        w3=_head_mats(d, dk, h, rng),
        wo=xavier_uniform_init(d, d, rng),
    )


def init_ldsa_params(d: int, h: int, c: int, rng: Rng) -> LdsaParams:
    _check_dims(d, h)
    if c < 1 or c % 2 == 0:
        raise ConfigError(f"context width c는 1 이상의 홀수여야 함: {c}")
    dk = d // h
    return LdsaParams(
        w1=_head_mats(d, dk, h, rng),
        w2=_head_mats(dk, c, h, rng),
        w3=_head_mats(d, dk, h, rng),
        wo=xavier_uniform_init(d, d, rng),
    )


def init_attention_params(variant: Union[str, Variant], d: int, h: int, rng: Rng,
                          c: int = 31, t_max: int = 512) -> AttentionParams:
    variant = Variant.parse(variant)
    if variant == Variant.SA:
        return init_sa_params(d, h, rng)
    if variant == Variant.DSA:
        return init_dsa_params(d, h, t_max, rng)
    if variant == Variant.LDSA:
        return init_ldsa_params(d, h, c, rng)
    raise ConfigError("HA는 단일 어텐션 층이 아님 (SA + LDSA 블록)")


# =============================================================================
# 입력 검증
# =============================================================================

def _check_input(x: Matrix, d: int):
    if x.ndim != 2 or x.shape[1] != d or x.shape[0] < 1:
        raise ShapeError(f"입력 형태 오류: {shape_str(x)} (기대값 Tx{d})")


def _check_weights(weights: Optional[List[Matrix]], h: int, rows: int, cols: int):
    if weights is None:
        return
    if len(weights) != h:
        raise ShapeError(f"주입 가중치 헤드 수 불일치: {len(weights)} != {h}")
    _check_heads('weights', weights, rows, cols)


# =============================================================================
# SA
# =============================================================================

def _sdpa(x: Matrix, wq: Matrix, wk: Matrix, wv: Matrix,
          weights: Optional[Matrix] = None) -> Tuple[Matrix, Matrix]:
    v = x @ wv
    if weights is None:
        q = x @ wq
        k = x @ wk
        weights = row_softmax(q @ k.T / np.sqrt(wq.shape[1]))
    return weights @ v, weights


def sdpa_head(x: Matrix, wq: Matrix, wk: Matrix, wv: Matrix) -> Matrix:
    """
    scaled dot-product attention 한 헤드 (마스크 없음)

    Args:
        x: (T, d) 입력
        wq, wk, wv: (d, d_k) 투영

    Returns:
        (T, d_k) 헤드 출력
    """
    _check_input(x, wq.shape[0])
    for name, w in (('wk', wk), ('wv', wv)):
        if w.shape != wq.shape:
            raise ShapeError(f"{name} 형태 불일치: {shape_str(w)} vs wq {shape_str(wq)}")
    return _sdpa(x, wq, wk, wv)[0]


def multihead_sa(x: Matrix, p: SaParams,
                 weights: Optional[List[Matrix]] = None) -> AttentionOutput:
    """
    multi-head SA: Concat(U_1..U_h) Wo

    Args:
        weights: 테스트용 헤드별 (T, T) 가중치 주입
    """
    p.validate()
    _check_input(x, p.d)
    T = x.shape[0]
    _check_weights(weights, p.heads, T, T)
    heads, probs = [], []
    for i in range(p.heads):
        u, b = _sdpa(x, p.wq[i], p.wk[i], p.wv[i],
                     None if weights is None else weights[i])
        heads.append(u)
        probs.append(b)
    return AttentionOutput(y=np.concatenate(heads, axis=1) @ p.wo, weights=probs)


# =============================================================================
# DSA / LDSA 가중치 예측
# =============================================================================

def _synth_weights(x: Matrix, w1: Matrix, w2: Matrix) -> Matrix:
    return row_softmax(relu(x @ w1) @ w2)


def dsa_weights(x: Matrix, w1: Matrix, w2: Matrix, T: Optional[int] = None) -> Matrix:
    """
    DSA 가중치 B = Softmax(ReLU(X W1) W2[:, :T])

    W2의 앞 T개 열만 참여한다 (패딩 없이 가변 길이 처리).

    Raises:
        CapacityError: T > t_max (W2 열 수)
    """
    T = x.shape[0] if T is None else T
    if T != x.shape[0]:
        raise ShapeError(f"T={T}와 입력 행 수 {x.shape[0]} 불일치")
    t_max = w2.shape[1]
    if T > t_max:
        raise CapacityError(f"시퀀스 길이 T={T}가 DSA 최대 길이 t_max={t_max} 초과")
    if x.shape[1] != w1.shape[0] or w1.shape[1] != w2.shape[0]:
        raise ShapeError(
            f"DSA 차원 불일치: x {shape_str(x)}, w1 {shape_str(w1)}, w2 {shape_str(w2)}"
        )
    return _synth_weights(x, w1, w2[:, :T])


def ldsa_weights(x: Matrix, w1: Matrix, w2: Matrix) -> Matrix:
    """
    LDSA 가중치 B (T x c)

    B[t, j]는 프레임 t가 프레임 t + j - c//2 에 주는 가중치.
    """
    c = w2.shape[1]
    if c % 2 == 0:
        raise ConfigError(f"context width c는 홀수여야 함: {c}")
    if x.shape[1] != w1.shape[0] or w1.shape[1] != w2.shape[0]:
        raise ShapeError(
            f"LDSA 차원 불일치: x {shape_str(x)}, w1 {shape_str(w1)}, w2 {shape_str(w2)}"
        )
    return _synth_weights(x, w1, w2)


def _synth_weights_backward(x: Matrix, w1: Matrix, w2: Matrix, b: Matrix,
                            db: Matrix) -> Tuple[Matrix, Matrix, Matrix]:
    """B = Softmax(ReLU(X W1) W2) 의 역전파 → (dW1, dW2, dX)"""
    pre = x @ w1
    act = relu(pre)
    dlogits = row_softmax_backward(b, db)
    dw2 = act.T @ dlogits
    dpre = relu_backward(pre, dlogits @ w2.T)
    return x.T @ dpre, dw2, dpre @ w1.T


# =============================================================================
# 지역 집계: Y[t] = sum_j B[t, j] V[t + j - c//2]
# =============================================================================

def local_aggregate(b: Matrix, v: Matrix) -> Matrix:
    T, c = b.shape
    r = c // 2
    padded = np.pad(v, ((r, r), (0, 0)))
    y = np.zeros_like(v)
    for j in range(c):
        y += b[:, j:j + 1] * padded[j:j + T]
    return y


def local_aggregate_backward(b: Matrix, v: Matrix, dy: Matrix) -> Tuple[Matrix, Matrix]:
    """Returns: (dB, dV)"""
    T, c = b.shape
    r = c // 2
    padded = np.pad(v, ((r, r), (0, 0)))
    db = np.empty_like(b)
    dpadded = np.zeros_like(padded)
    for j in range(c):
        db[:, j] = np.sum(dy * padded[j:j + T], axis=1)
        dpadded[j:j + T] += b[:, j:j + 1] * dy
    return db, dpadded[r:r + T]


def band_expand(b_local: Matrix, T: int, c: int) -> Matrix:
    """
    (T, c) 지역 가중치를 (T, T) 띠(band) 행렬로 확장

    B_full[t, t + j - c//2] = b_local[t, j] (범위 안쪽만), 나머지 0
    """
    if c % 2 == 0:
        raise ConfigError(f"context width c는 홀수여야 함: {c}")
    if b_local.shape != (T, c):
        raise ShapeError(f"b_local 형태 오류: {shape_str(b_local)} (기대값 {T}x{c})")
    r = c // 2
    full = np.zeros((T, T))
    rows = np.arange(T)
    for j in range(c):
        cols = rows + j - r
        ok = (cols >= 0) & (cols < T)
        full[rows[ok], cols[ok]] = b_local[rows[ok], j]
    return full


# =============================================================================
# DSA / LDSA forward
# =============================================================================

def multihead_dsa(x: Matrix, p: DsaParams,
                  weights: Optional[List[Matrix]] = None) -> AttentionOutput:
    """
    multi-head DSA: 헤드별 U_i = B_i (X W3_i), concat 후 Wo

    Raises:
        CapacityError: T > t_max
    """
    p.validate()
    _check_input(x, p.d)
    T = x.shape[0]
    if T > p.t_max:
        raise CapacityError(f"시퀀스 길이 T={T}가 DSA 최대 길이 t_max={p.t_max} 초과")
    _check_weights(weights, p.heads, T, T)
    heads, probs = [], []
    for i in range(p.heads):
        b = _synth_weights(x, p.w1[i], p.w2[i][:, :T]) if weights is None else weights[i]
        heads.append(b @ (x @ p.w3[i]))
        probs.append(b)
    return AttentionOutput(y=np.concatenate(heads, axis=1) @ p.wo, weights=probs)


def ldsa_forward(x: Matrix, p: LdsaParams,
                 weights: Optional[List[Matrix]] = None) -> AttentionOutput:
    """
    multi-head LDSA

    V = X W3_i, Y_t = sum_j B[t,j] V[t+j-c//2], concat 후 Wo.
    범위 밖 프레임은 0 벡터로 기여한다.
    """
    p.validate()
    _check_input(x, p.d)
    T = x.shape[0]
    _check_weights(weights, p.heads, T, p.c)
    heads, probs = [], []
    for i in range(p.heads):
        b = _synth_weights(x, p.w1[i], p.w2[i]) if weights is None else weights[i]
        heads.append(local_aggregate(b, x @ p.w3[i]))
        probs.append(b)
    return AttentionOutput(y=np.concatenate(heads, axis=1) @ p.wo, weights=probs)


def attention_forward(p: AttentionParams, x: Matrix,
                      weights: Optional[List[Matrix]] = None) -> AttentionOutput:
    """파라미터 타입에 따라 SA / DSA / LDSA forward 선택"""
    variant = variant_of(p)
    if variant == Variant.SA:
        return multihead_sa(x, p, weights)
    if variant == Variant.DSA:
        return multihead_dsa(x, p, weights)
    return ldsa_forward(x, p, weights)


# =============================================================================
# 역전파
# =============================================================================

def attention_backward(variant: Union[str, Variant], p: AttentionParams, x: Matrix,
                       dy: Matrix) -> Tuple[AttentionParams, Matrix]:
    """
    L = <dY, Y> 에 대한 해석적 기울기

    Args:
        variant: SA / DSA / LDSA (파라미터 타입과 일치해야 함)
        p: 파라미터
        x: (T, d) 입력
        dy: (T, d) 상류 기울기

    Returns:
        (dParams, dX): dParams는 p와 같은 타입의 컨테이너
    """
    variant = Variant.parse(variant)
    if variant != variant_of(p):
        raise ConfigError(
            f"변형 불일치: {variant.value} vs 파라미터 {variant_of(p).value}"
        )
    out = attention_forward(p, x)
    if dy.shape != out.y.shape:
        raise ShapeError(f"dY 형태 오류: {shape_str(dy)} (기대값 {shape_str(out.y)})")

    dk = p.d_k
    concat = np.concatenate(
        [_head_values(variant, p, x, i, out.weights[i]) for i in range(p.heads)], axis=1
    )
    dwo = concat.T @ dy
    dconcat = dy @ p.wo.T
    dx = np.zeros_like(x)

    if variant == Variant.SA:
        grads = SaParams(wq=[], wk=[], wv=[], wo=dwo)
        for i in range(p.heads):
            du = dconcat[:, i * dk:(i + 1) * dk]
            dwq, dwk, dwv, dxi = _sa_head_backward(x, p.wq[i], p.wk[i], p.wv[i],
                                                   out.weights[i], du)
            grads.wq.append(dwq)
            grads.wk.append(dwk)
            grads.wv.append(dwv)
            dx += dxi
        return grads, dx

    T = x.shape[0]
    grads = type(p)(w1=[], w2=[], w3=[], wo=dwo)
    for i in range(p.heads):
        du = dconcat[:, i * dk:(i + 1) * dk]
        b = out.weights[i]
        v = x @ p.w3[i]
        if variant == Variant.DSA:
            db = du @ v.T
            dv = b.T @ du
            w2_used = p.w2[i][:, :T]
        else:
            db, dv = local_aggregate_backward(b, v, du)
            w2_used = p.w2[i]
        dw1, dw2_used, dx_b = _synth_weights_backward(x, p.w1[i], w2_used, b, db)
        dw2 = np.zeros_like(p.w2[i])
        dw2[:, :w2_used.shape[1]] = dw2_used
        grads.w1.append(dw1)
        grads.w2.append(dw2)
        grads.w3.append(x.T @ dv)
        dx += dx_b + dv @ p.w3[i].T
    return grads, dx


def _head_values(variant: Variant, p: AttentionParams, x: Matrix, i: int,
                 b: Matrix) -> Matrix:
    """헤드 i 출력 U_i (Wo 적용 전)"""
    if variant == Variant.SA:
        return b @ (x @ p.wv[i])
    if variant == Variant.DSA:
        return b @ (x @ p.w3[i])
    return local_aggregate(b, x @ p.w3[i])


def _sa_head_backward(x, wq, wk, wv, b, du):
    q, k, v = x @ wq, x @ wk, x @ wv
    scale = 1.0 / np.sqrt(wq.shape[1])
    db = du @ v.T
    dv = b.T @ du
    ds = row_softmax_backward(b, db) * scale
    dq = ds @ k
    dk_ = ds.T @ q
    dx = dq @ wq.T + dk_ @ wk.T + dv @ wv.T
    return x.T @ dq, x.T @ dk_, x.T @ dv, dx
