"""
Gradient Check - 해석적 기울기 vs 중앙 차분

층 단위 (SA / DSA / LDSA, h = 1, 2) 와 1블록 전체 인코더 (네 변형)에 대해
파라미터 블록별 최대 상대 오차를 보고한다.

손실: L = <dY, Y> (dY는 고정 난수 행렬)
"""

import json
import logging
from dataclasses import dataclass, asdict
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.numerics import Rng, central_diff_grad, relative_error
from ..core.params import named_arrays
from ..core.attention import (
    Variant, init_attention_params, attention_forward, attention_backward,
)
from ..core.encoder import (
    EncoderConfig, init_encoder_params, encoder_forward, encoder_backward,
)

logger = logging.getLogger(__name__)

LAYER_TOLERANCE = 1e-5
ENCODER_TOLERANCE = 1e-4
FD_STEP = 1e-6

# (check, block, analytic) → analytic (테스트에서 기울기 오염 주입용)
GradHook = Callable[[str, str, np.ndarray], np.ndarray]


@dataclass
class GradReport:
    check: str
    block: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def check_gradients(check: str, loss: Callable[[], float], params,
                    grads, tolerance: float,
                    inputs: Optional[Dict[str, Tuple[np.ndarray, np.ndarray]]] = None,
                    grad_hook: Optional[GradHook] = None,
                    h: float = FD_STEP) -> List[GradReport]:
    """
    파라미터 블록별 기울기 비교

    Args:
        check: 검사 이름 (보고서에 기록)
        loss: 현재 파라미터로 스칼라 손실을 계산하는 함수
        params, grads: 같은 구조의 파라미터 / 해석적 기울기 컨테이너
        tolerance: 통과 기준 상대 오차
        inputs: 추가 검사 대상 {이름: (배열, 해석적 기울기)} (예: 입력 x)
        grad_hook: 해석적 기울기 변형 함수
    """
    grad_arrays = named_arrays(grads)
    targets = [
        (name, arr, grad_arrays[name])
        for name, arr in named_arrays(params).items()
    ]
    for name, (arr, g) in (inputs or {}).items():
        targets.append((name, arr, g))

    reports = []
    for name, arr, analytic in targets:
        if grad_hook is not None:
            analytic = grad_hook(check, name, analytic)

        def f(w, arr=arr):
            saved = arr.copy()
            arr[...] = w
            try:
                return loss()
            finally:
                arr[...] = saved

        numeric = central_diff_grad(f, arr, h)
        report = GradReport(check=check, block=name,
                            max_rel_error=relative_error(analytic, numeric),
                            tolerance=tolerance)
        if not report.passed:
            logger.warning("기울기 불일치 %s/%s: %.3e", check, name, report.max_rel_error)
        reports.append(report)
    return reports


def check_attention_layer(variant: Union[str, Variant], seed: int, T: int = 5, d: int = 4,
                          h: int = 2, c: int = 3, t_max: int = 7,
                          grad_hook: Optional[GradHook] = None) -> List[GradReport]:
    variant = Variant.parse(variant)
    rng = Rng(seed)
    params = init_attention_params(variant, d, h, rng, c=c, t_max=t_max)
    x = rng.normal((T, d))
    dy = rng.normal((T, d))
    grads, dx = attention_backward(variant, params, x, dy)

    def loss() -> float:
        return float(np.sum(dy * attention_forward(params, x).y))

    return check_gradients(f"{variant.value}/h{h}", loss, params, grads,
                           LAYER_TOLERANCE, inputs={'x': (x, dx)}, grad_hook=grad_hook)


def encoder_check_config(variant: Union[str, Variant]) -> EncoderConfig:
    """1블록 소형 인코더 (d=8, h=2)"""
    return EncoderConfig(variant=variant, n_blocks=1, d=8, h=2, c=3, conv_kernel=3,
                         ffn_inner=16, t_max=8, feat_dim=8)


def check_encoder(variant: Union[str, Variant], seed: int, T: int = 12,
                  frontend_channels: int = 2,
                  grad_hook: Optional[GradHook] = None) -> List[GradReport]:
    config = encoder_check_config(variant)
    rng = Rng(seed)
    params = init_encoder_params(config, rng, frontend_channels=frontend_channels)
    # bias, gamma, beta를 0 / 1 대신 난수로
    for name, arr in named_arrays(params).items():
        if arr.ndim == 1:
            arr += rng.normal(arr.shape, scale=0.1)
    features = rng.normal((T, config.feat_dim))
    out = encoder_forward(features, config, params)
    dy = rng.normal(out.shape)
    grads, dfeatures = encoder_backward(features, config, params, dy)

    def loss() -> float:
        return float(np.sum(dy * encoder_forward(features, config, params)))

    return check_gradients(f"encoder/{config.variant.value}", loss, params, grads,
                           ENCODER_TOLERANCE, inputs={'features': (features, dfeatures)},
                           grad_hook=grad_hook)


def grad_check_suite(seed: int = 0,
                     grad_hook: Optional[GradHook] = None) -> List[GradReport]:
    """
    전체 기울기 검사

    - SA / DSA / LDSA 층 (T=5, d=4, h ∈ {1, 2}), 허용 오차 1e-5
    - SA / DSA / LDSA / HA 1블록 인코더 (d=8, h=2, T=12), 허용 오차 1e-4
    """
    reports = []
    for variant in (Variant.SA, Variant.DSA, Variant.LDSA):
        for h in (1, 2):
            reports += check_attention_layer(variant, seed, h=h, grad_hook=grad_hook)
    for variant in Variant:
        reports += check_encoder(variant, seed, grad_hook=grad_hook)
    failed = [r for r in reports if not r.passed]
    logger.info("기울기 검사 %d개 블록, 실패 %d개", len(reports), len(failed))
    return reports


def reports_to_json(reports: List[GradReport]) -> str:
    data = {
        'passed': all(r.passed for r in reports),
        'reports': [dict(asdict(r), passed=r.passed) for r in reports],
    }
    return json.dumps(data, indent=2, sort_keys=True)


def write_reports(reports: List[GradReport], path: Union[str, Path]) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        f.write(reports_to_json(reports))
        f.write('\n')
