"""
Training Verification - Adam + Noam 스케줄, 합성 과제, 과적합 학습 루프

- noam_lr: scale · d^-0.5 · min(step^-0.5, step · warmup^-1.5)
- adam_step: bias-corrected Adam (beta1=0.9, beta2=0.98, eps=1e-9)
- gen_toy_task: frontend 출력 프레임마다 지역 규칙으로 라벨을 붙인 합성 데이터
- train_overfit: 인코더 + 선형 softmax 분류기를 full batch로 학습

학습은 full batch: 데이터 전체를 한 번 보고 Adam 한 스텝 (step == epoch).
"""

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..core.numerics import (
    Matrix, Rng, ShapeError, ConfigError, row_softmax, xavier_uniform_init,
)
from ..core.params import named_arrays
from ..core.encoder import (
    EncoderConfig, EncoderParams, FRONTEND_CHANNELS,
    init_encoder_params, encoder_forward, encoder_backward,
    frontend_output_length, frontend_window,
)

logger = logging.getLogger(__name__)

REFERENCE_WARMUP = 25000
DEFAULT_WARMUP = 400


# =============================================================================
# 학습률 스케줄
# =============================================================================

def noam_lr(step: int, d_model: int, warmup: int = DEFAULT_WARMUP,
            scale: float = 1.0) -> float:
    """
    Noam 스케줄

    warmup까지 선형 증가, 이후 step^-0.5 로 감소.
    """
    if step < 1:
        raise ValueError(f"step은 1 이상이어야 함: {step}")
    if warmup < 1:
        raise ValueError(f"warmup은 1 이상이어야 함: {warmup}")
    return scale * d_model ** -0.5 * min(step ** -0.5, step * warmup ** -1.5)


@dataclass
class NoamSchedule:
    d_model: int
    warmup: int = DEFAULT_WARMUP
    scale: float = 1.0

    def __post_init__(self):
        if self.warmup < 1:
            raise ConfigError(f"warmup은 1 이상이어야 함: {self.warmup}")

    def lr(self, step: int) -> float:
        return noam_lr(step, self.d_model, self.warmup, self.scale)


# =============================================================================
# Adam
# =============================================================================

@dataclass
class AdamState:
    """파라미터 이름별 1차/2차 moment"""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9

    @classmethod
    def zeros(cls, params, **kwargs) -> 'AdamState':
        arrays = named_arrays(params)
        return cls(
            m={k: np.zeros_like(a) for k, a in arrays.items()},
            v={k: np.zeros_like(a) for k, a in arrays.items()},
            **kwargs,
        )


def adam_step(params, grads, state: AdamState, lr: float):
    """
    bias-corrected Adam 한 스텝 (params를 in-place 갱신)

    moment는 항상 감쇠하지만, 이번 스텝 기울기가 정확히 0인 원소는
    갱신하지 않는다 (기울기 0이면 파라미터 불변).

    Returns:
        (params, state)
    """
    p_arrays = named_arrays(params)
    g_arrays = named_arrays(grads)
    if set(p_arrays) != set(g_arrays):
        raise ShapeError("기울기 구조가 파라미터와 다름")
    if not state.m:
        fresh = AdamState.zeros(params)
        state.m, state.v = fresh.m, fresh.v

    state.step += 1
    b1, b2 = state.beta1, state.beta2
    corr1 = 1.0 - b1 ** state.step
    corr2 = 1.0 - b2 ** state.step
    for name, p in p_arrays.items():
        g = g_arrays[name]
        if g.shape != p.shape:
            raise ShapeError(f"기울기 형태 불일치 {name}: {g.shape} vs {p.shape}")
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        update = lr * (m / corr1) / (np.sqrt(v / corr2) + state.eps)
        p -= np.where(g != 0, update, 0.0)
    return params, state


# =============================================================================
# 합성 과제
# =============================================================================

class LabelRule(Enum):
    WINDOW = "window"   # frontend 수용 영역 평균
    FRAME = "frame"     # 수용 영역 중심 프레임 (선형 분리 가능)


@dataclass
class ToyDataset:
    inputs: List[Matrix]
    labels: List[np.ndarray]
    seed: int
    n_classes: int
    projections: Matrix
    rule: LabelRule = LabelRule.WINDOW

    @property
    def n_frames(self) -> int:
        return sum(len(lab) for lab in self.labels)


def label_frames(features: Matrix, projections: Matrix,
                 rule: LabelRule = LabelRule.WINDOW) -> np.ndarray:
    """
    frontend 출력 프레임별 라벨

    class = argmax_k <projection_k, summary(frame window)>
    """
    n_out = frontend_output_length(features.shape[0])
    labels = np.empty(n_out, dtype=np.int64)
    for t in range(n_out):
        start, stop = frontend_window(t)
        if rule == LabelRule.WINDOW:
            summary = features[start:stop].mean(axis=0)
        else:
            summary = features[(start + stop) // 2]
        labels[t] = int(np.argmax(projections @ summary))
    return labels


def gen_toy_task(seed: int, n_utts: int, T: int, feat_dim: int, n_classes: int,
                 rule: Union[str, LabelRule] = LabelRule.WINDOW) -> ToyDataset:
    """
    합성 프레임 분류 데이터

    Args:
        seed: 난수 시드
        n_utts: 발화 수
        T: 발화 길이 (입력 프레임)
        feat_dim: 특징 차원
        n_classes: 클래스 수 (2 이상, 2이면 투영 벡터는 {+v, -v})
        rule: 라벨 규칙
    """
    if n_classes < 2:
        raise ConfigError(f"n_classes는 2 이상이어야 함: {n_classes}")
    rule = LabelRule(rule) if not isinstance(rule, LabelRule) else rule
    rng = Rng(seed)
    if n_classes == 2:
        v = rng.normal(feat_dim)
        projections = np.stack([v, -v])
    else:
        projections = rng.normal((n_classes, feat_dim))
    inputs = [rng.normal((T, feat_dim)) for _ in range(n_utts)]
    labels = [label_frames(x, projections, rule) for x in inputs]
    return ToyDataset(inputs=inputs, labels=labels, seed=seed, n_classes=n_classes,
                      projections=projections, rule=rule)


# =============================================================================
# 모델 / 손실
# =============================================================================

@dataclass
class ClassifierParams:
    w: Matrix
    b: np.ndarray


@dataclass
class ModelParams:
    encoder: EncoderParams
    classifier: ClassifierParams


def cross_entropy(logits: Matrix, labels: np.ndarray,
                  normalizer: Optional[int] = None) -> Tuple[float, Matrix]:
    """
    frame cross-entropy 합 / normalizer 와 logit 기울기

    normalizer 기본값은 프레임 수 (평균).
    """
    n = normalizer or len(labels)
    z = logits - logits.max(axis=1, keepdims=True)
    log_probs = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    rows = np.arange(len(labels))
    loss = -float(np.sum(log_probs[rows, labels])) / n
    dlogits = row_softmax(logits)
    dlogits[rows, labels] -= 1.0
    return loss, dlogits / n


def init_model(config: EncoderConfig, n_classes: int, rng: Rng,
               frontend_channels: int = FRONTEND_CHANNELS) -> ModelParams:
    encoder = init_encoder_params(config, rng, frontend_channels=frontend_channels)
    return ModelParams(
        encoder=encoder,
        classifier=ClassifierParams(w=xavier_uniform_init(config.d, n_classes, rng),
                                    b=np.zeros(n_classes)),
    )


def classify(model: ModelParams, config: EncoderConfig, features: Matrix) -> np.ndarray:
    h = encoder_forward(features, config, model.encoder)
    return np.argmax(h @ model.classifier.w + model.classifier.b, axis=1)


def evaluate(model: ModelParams, config: EncoderConfig,
             dataset: ToyDataset) -> Tuple[float, float]:
    """(평균 loss, frame accuracy)"""
    n = dataset.n_frames
    loss, correct = 0.0, 0
    for x, y in zip(dataset.inputs, dataset.labels):
        logits = encoder_forward(x, config, model.encoder) @ model.classifier.w + model.classifier.b
        loss += cross_entropy(logits, y, normalizer=n)[0]
        correct += int(np.sum(np.argmax(logits, axis=1) == y))
    return loss, correct / n


def loss_and_grads(model: ModelParams, config: EncoderConfig,
                   dataset: ToyDataset) -> Tuple[float, float, ModelParams]:
    """
    full batch loss, accuracy, 기울기

    Returns:
        (loss, accuracy, grads)
    """
    n = dataset.n_frames
    total_loss, correct = 0.0, 0
    grads = None
    for x, y in zip(dataset.inputs, dataset.labels):
        h = encoder_forward(x, config, model.encoder)
        logits = h @ model.classifier.w + model.classifier.b
        loss, dlogits = cross_entropy(logits, y, normalizer=n)
        total_loss += loss
        correct += int(np.sum(np.argmax(logits, axis=1) == y))
        g_enc, _ = encoder_backward(x, config, model.encoder,
                                    dlogits @ model.classifier.w.T)
        g = ModelParams(encoder=g_enc,
                        classifier=ClassifierParams(w=h.T @ dlogits, b=dlogits.sum(axis=0)))
        grads = g if grads is None else _accumulate(grads, g)
    return total_loss, correct / n, grads


def _accumulate(acc: ModelParams, g: ModelParams) -> ModelParams:
    targets = named_arrays(acc)
    for name, arr in named_arrays(g).items():
        targets[name] += arr
    return acc


# =============================================================================
# 과적합 학습
# =============================================================================

@dataclass
class TrainConfig:
    steps: int = 2000
    warmup: int = DEFAULT_WARMUP
    scale: float = 1.0
    seed: int = 0
    beta1: float = 0.9
    beta2: float = 0.98
    eps: float = 1e-9
    log_every: int = 100
    frontend_channels: int = FRONTEND_CHANNELS


@dataclass
class StepRecord:
    step: int
    lr: float
    loss: float
    accuracy: float


@dataclass
class TrainMetrics:
    records: List[StepRecord] = field(default_factory=list)
    initial_accuracy: float = 0.0
    final_loss: float = float('nan')
    final_accuracy: float = 0.0
    diverged_at: Optional[int] = None
    model: Optional[ModelParams] = field(default=None, repr=False)

    @property
    def ok(self) -> bool:
        return self.diverged_at is None

    @property
    def losses(self) -> List[float]:
        return [r.loss for r in self.records]

    def to_dict(self) -> dict:
        return {
            'steps': len(self.records),
            'initial_accuracy': self.initial_accuracy,
            'final_loss': self.final_loss,
            'final_accuracy': self.final_accuracy,
            'diverged_at': self.diverged_at,
            'ok': self.ok,
        }


METRIC_COLUMNS = ['step', 'lr', 'loss', 'accuracy']


def write_metrics_csv(metrics: TrainMetrics, path: Union[str, Path]) -> None:
    with open(path, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f)
        writer.writerow(METRIC_COLUMNS)
        for r in metrics.records:
            writer.writerow([r.step, repr(r.lr), repr(r.loss), repr(r.accuracy)])


def read_metrics_csv(path: Union[str, Path]) -> List[StepRecord]:
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return [
            StepRecord(step=int(row['step']), lr=float(row['lr']),
                       loss=float(row['loss']), accuracy=float(row['accuracy']))
            for row in csv.DictReader(f)
        ]


def train_overfit(config: EncoderConfig, dataset: ToyDataset,
                  steps: Optional[int] = None,
                  train_config: Optional[TrainConfig] = None) -> TrainMetrics:
    """
    인코더 + 선형 분류기를 합성 데이터에 과적합

    Args:
        config: 인코더 설정
        dataset: gen_toy_task 결과
        steps: 학습 스텝 수 (None이면 train_config.steps)
        train_config: 옵티마이저/스케줄 설정

    Returns:
        TrainMetrics: 스텝별 (lr, loss, accuracy), 최종 성능, 발산 스텝
    """
    tc = train_config or TrainConfig()
    steps = tc.steps if steps is None else steps
    if not dataset.inputs:
        raise ValueError("데이터셋이 비어 있음")
    config.validate()

    rng = Rng(tc.seed)
    model = init_model(config, dataset.n_classes, rng, tc.frontend_channels)
    schedule = NoamSchedule(config.d, tc.warmup, tc.scale)
    state = AdamState.zeros(model, beta1=tc.beta1, beta2=tc.beta2, eps=tc.eps)

    metrics = TrainMetrics(model=model)
    _, metrics.initial_accuracy = evaluate(model, config, dataset)

    for step in range(1, steps + 1):
        lr = schedule.lr(step)
        loss, acc, grads = loss_and_grads(model, config, dataset)
        metrics.records.append(StepRecord(step=step, lr=lr, loss=loss, accuracy=acc))
        if not np.isfinite(loss):
            metrics.diverged_at = step
            logger.warning("발산: step %d, loss=%s", step, loss)
            return metrics
        adam_step(model, grads, state, lr)
        if tc.log_every and step % tc.log_every == 0:
            logger.info("step %d lr=%.3e loss=%.5f acc=%.4f", step, lr, loss, acc)

    metrics.final_loss, metrics.final_accuracy = evaluate(model, config, dataset)
    if not np.isfinite(metrics.final_loss):
        metrics.diverged_at = steps
    return metrics
