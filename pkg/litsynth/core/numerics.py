"""
Numerics Core - 밀집 선형대수 기본 연산

모든 모듈의 기반:
1. Matrix (float64 2차원 ndarray) 생성/검증
2. matmul, row_softmax, relu, layer_norm (+ backward)
3. Xavier uniform 초기화, 결정적 난수 생성기
4. 중앙 차분 기울기 오라클
5. CSV 행렬 입출력 (17자리 유효숫자)
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Tuple, Union

import numpy as np

Matrix = np.ndarray

LN_EPS = 1e-5
CSV_FORMAT = '%.17g'


# =============================================================================
# 예외
# =============================================================================

class ShapeError(ValueError):
    """차원 불일치"""


class CapacityError(ValueError):
    """DSA 최대 길이(t_max) 초과"""


class SequenceLengthError(ValueError):
    """프론트엔드 입력이 너무 짧음"""


class ConfigError(ValueError):
    """잘못된 설정값"""


def shape_str(a: np.ndarray) -> str:
    return 'x'.join(str(n) for n in a.shape)


def as_matrix(data) -> Matrix:
    """float64 2차원 배열로 변환 (1차원 입력은 1행 행렬)"""
    m = np.asarray(data, dtype=np.float64)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise ShapeError(f"2차원 행렬이 아님: {shape_str(m)}")
    return m


# =============================================================================
# 난수 생성기
# =============================================================================

@dataclass
class Rng:
    """
    시드 고정 난수 생성기

    numpy PCG64 비트 생성기 사용 - 같은 시드면 플랫폼과 무관하게
    같은 수열을 만든다.
    """
    seed: int
    algorithm: str = "PCG64"
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    def uniform(self, low: float, high: float, size) -> np.ndarray:
        return self._gen.uniform(low, high, size)

    def normal(self, size, scale: float = 1.0) -> np.ndarray:
        return self._gen.normal(0.0, scale, size)

    def integers(self, low: int, high: int, size=None):
        return self._gen.integers(low, high, size)

    def random(self, size=None):
        return self._gen.random(size)


# =============================================================================
# 기본 연산
# =============================================================================

def matmul(a: Matrix, b: Matrix) -> Matrix:
    """
    행렬 곱

    Raises:
        ShapeError: a.cols != b.rows
    """
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul 차원 불일치: {shape_str(a)} @ {shape_str(b)}")
    return a @ b


def row_softmax(m: Matrix) -> Matrix:
    """행 단위 softmax (최댓값을 빼서 overflow 방지)"""
    z = m - m.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def row_softmax_backward(p: Matrix, dp: Matrix) -> Matrix:
    """softmax 출력 p와 상류 기울기 dp로부터 logit 기울기 계산"""
    return p * (dp - np.sum(dp * p, axis=-1, keepdims=True))


def relu(m: Matrix) -> Matrix:
    return np.maximum(m, 0.0)


def relu_backward(pre: Matrix, dy: Matrix) -> Matrix:
    return dy * (pre > 0)


def sigmoid(m: np.ndarray) -> np.ndarray:
    # 음수 쪽 overflow 방지
    out = np.empty_like(m, dtype=np.float64)
    pos = m >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-m[pos]))
    e = np.exp(m[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def layer_norm(x: Matrix, gamma: np.ndarray, beta: np.ndarray,
               eps: float = LN_EPS) -> Matrix:
    """
    행 단위 layer normalization

    모집단 분산 사용, eps는 제곱근 안쪽에 더한다.

    Args:
        x: (T, d) 입력
        gamma, beta: 길이 d 벡터
        eps: 분산 안정화 항 (> 0)

    Raises:
        ShapeError: x.cols, len(gamma), len(beta) 불일치
    """
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError(
            f"layer_norm 차원 불일치: x {shape_str(x)}, "
            f"gamma {shape_str(gamma)}, beta {shape_str(beta)}"
        )
    if eps <= 0:
        raise ValueError(f"eps는 양수여야 함: {eps}")
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mu) / np.sqrt(var + eps) * gamma + beta


def layer_norm_backward(x: Matrix, gamma: np.ndarray, dy: Matrix,
                        eps: float = LN_EPS) -> Tuple[Matrix, np.ndarray, np.ndarray]:
    """
    layer_norm 역전파

    Returns:
        (dx, dgamma, dbeta)
    """
    d = x.shape[-1]
    mu = x.mean(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + eps)
    xhat = (x - mu) * inv
    dgamma = np.sum(dy * xhat, axis=0)
    dbeta = np.sum(dy, axis=0)
    dxhat = dy * gamma
    dx = inv / d * (d * dxhat - dxhat.sum(axis=-1, keepdims=True)
                    - xhat * np.sum(dxhat * xhat, axis=-1, keepdims=True))
    return dx, dgamma, dbeta


def xavier_uniform_init(rows: int, cols: int, rng: Rng) -> Matrix:
    """U(-sqrt(6/(rows+cols)), +sqrt(6/(rows+cols))) 에서 i.i.d. 추출"""
    if rows < 1 or cols < 1:
        raise ShapeError(f"xavier 초기화 크기 오류: {rows}x{cols}")
    bound = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-bound, bound, (rows, cols))


# =============================================================================
# 기울기 오라클
# =============================================================================

def central_diff_grad(f: Callable[[np.ndarray], float], x: np.ndarray,
                      h: float = 1e-6) -> np.ndarray:
    """
    중앙 차분 기울기: (f(x + h·e) - f(x - h·e)) / 2h

    x는 임의 형태의 배열 (행렬, 벡터, 4차원 커널 모두 가능).
    x 자체는 변경하지 않는다.
    """
    if h <= 0:
        raise ValueError(f"h는 양수여야 함: {h}")
    probe = np.array(x, dtype=np.float64, copy=True)
    grad = np.zeros_like(probe)
    for idx in np.ndindex(probe.shape):
        orig = probe[idx]
        probe[idx] = orig + h
        f_plus = f(probe)
        probe[idx] = orig - h
        f_minus = f(probe)
        probe[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """블록 상대 오차: max|a - n| / max(max|a|, max|n|, 1e-12)"""
    if analytic.shape != numeric.shape:
        raise ShapeError(
            f"기울기 형태 불일치: {shape_str(analytic)} vs {shape_str(numeric)}"
        )
    if analytic.size == 0:
        return 0.0
    scale = max(np.max(np.abs(analytic)), np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


# =============================================================================
# CSV 입출력
# =============================================================================

def save_matrix_csv(path: Union[str, Path], m: np.ndarray) -> None:
    """한 줄에 한 행, 17자리 유효숫자 (정확한 왕복 보장)"""
    np.savetxt(path, as_matrix(m), fmt=CSV_FORMAT, delimiter=',')


def load_matrix_csv(path: Union[str, Path]) -> Matrix:
    return np.loadtxt(path, dtype=np.float64, delimiter=',', ndmin=2)
