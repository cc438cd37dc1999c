"""
Complexity Benchmark - 어텐션 층 실행 시간과 log-log 기울기

- bench_runtime: 변형별, 길이 T별 forward 시간 (warmup 2회 제외, 중앙값 + MAD)
- fit_loglog_slope: log(median_seconds) ~ log(T) 최소제곱 직선
- sweep_context_width: c별 파라미터 수 + 실행 시간

기대 기울기: SA / DSA ≈ 2 (O(T^2)), LDSA ≈ 1 (O(Tc), c 고정)
HA는 SA → LDSA 연속 적용 (O(T(T + c))), full_block이면 인코더 블록 전체.
"""

import csv
import logging
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, List, Optional, Sequence, TextIO, Union

import numpy as np

from ..core.numerics import Rng, CapacityError, ConfigError
from ..core.attention import (
    Variant, init_sa_params, init_dsa_params, init_ldsa_params,
    multihead_sa, multihead_dsa, ldsa_forward,
)
from ..core.encoder import (
    EncoderConfig, init_block_params, encoder_block_forward, count_attention_params,
)

logger = logging.getLogger(__name__)

MIN_REPETITIONS = 5
MIN_FIT_POINTS = 4


class InsufficientDataError(ValueError):
    """기울기 추정에 필요한 점이 부족함"""


@dataclass
class BenchConfig:
    d: int = 320
    h: int = 4
    c: int = 31
    t_max: Optional[int] = None     # None이면 T 목록의 최댓값
    conv_kernel: int = 15
    reps: int = MIN_REPETITIONS
    warmups: int = 2
    seed: int = 0
    full_block: bool = False


@dataclass
class BenchRecord:
    variant: str
    T: int
    c: int
    d: int
    h: int
    repetitions: int
    median_seconds: float
    mad_seconds: float


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    r2: float


@dataclass
class SweepRow:
    c: int
    T: int
    d: int
    h: int
    attention_weights: int
    w2_weights: int
    median_seconds: float
    mad_seconds: float


# =============================================================================
# 측정
# =============================================================================

def time_callable(fn: Callable[[], object], reps: int, warmups: int = 2) -> List[float]:
    """warmup 실행 후 reps회 측정 (단조 시계 perf_counter)"""
    for _ in range(warmups):
        fn()
    samples = []
    for _ in range(reps):
        start = time.perf_counter()
        fn()
        samples.append(time.perf_counter() - start)
    return samples


def _layer_fn(variant: Variant, T: int, cfg: BenchConfig, t_max: int,
              rng: Rng) -> Callable[[], object]:
    x = rng.normal((T, cfg.d))
    if cfg.full_block:
        block_cfg = EncoderConfig(variant=variant, n_blocks=1, d=cfg.d, h=cfg.h, c=cfg.c,
                                  conv_kernel=cfg.conv_kernel, ffn_inner=4 * cfg.d,
                                  t_max=t_max)
        block = init_block_params(block_cfg, rng)
        return lambda: encoder_block_forward(x, variant, block)
    if variant == Variant.SA:
        p = init_sa_params(cfg.d, cfg.h, rng)
        return lambda: multihead_sa(x, p)
    if variant == Variant.DSA:
        p = init_dsa_params(cfg.d, cfg.h, t_max, rng)
        return lambda: multihead_dsa(x, p)
    if variant == Variant.LDSA:
        p = init_ldsa_params(cfg.d, cfg.h, cfg.c, rng)
        return lambda: ldsa_forward(x, p)
    sa = init_sa_params(cfg.d, cfg.h, rng)
    ldsa = init_ldsa_params(cfg.d, cfg.h, cfg.c, rng)
    return lambda: ldsa_forward(multihead_sa(x, sa).y, ldsa)


def bench_runtime(variant: Union[str, Variant], t_list: Sequence[int],
                  config: Optional[BenchConfig] = None) -> List[BenchRecord]:
    """
    단일 층 forward 실행 시간

    Args:
        variant: sa / dsa / ldsa / ha
        t_list: 시퀀스 길이 목록
        config: 벤치마크 설정

    Raises:
        CapacityError: DSA에서 T > t_max
    """
    cfg = config or BenchConfig()
    variant = Variant.parse(variant)
    if cfg.reps < MIN_REPETITIONS:
        raise ConfigError(f"reps는 {MIN_REPETITIONS} 이상이어야 함: {cfg.reps}")
    if cfg.c % 2 == 0:
        raise ConfigError(f"context width c는 홀수여야 함: {cfg.c}")
    t_max = cfg.t_max or max(t_list)
    if variant == Variant.DSA:
        too_long = [T for T in t_list if T > t_max]
        if too_long:
            raise CapacityError(f"T={too_long[0]}가 DSA 최대 길이 t_max={t_max} 초과")

    records = []
    for T in t_list:
        fn = _layer_fn(variant, T, cfg, t_max, Rng(cfg.seed))
        samples = np.array(time_callable(fn, cfg.reps, cfg.warmups))
        median = float(np.median(samples))
        record = BenchRecord(
            variant=variant.value, T=int(T), c=cfg.c, d=cfg.d, h=cfg.h,
            repetitions=cfg.reps, median_seconds=median,
            mad_seconds=float(np.median(np.abs(samples - median))),
        )
        logger.info("%s T=%d median=%.6fs mad=%.6fs", record.variant, T,
                    record.median_seconds, record.mad_seconds)
        records.append(record)
    return records


def fit_loglog_slope(records: Sequence[BenchRecord]) -> SlopeFit:
    """
    log(median_seconds) = slope · log(T) + intercept 최소제곱

    Raises:
        InsufficientDataError: 서로 다른 T가 4개 미만
    """
    ts = np.array([r.T for r in records], dtype=np.float64)
    secs = np.array([r.median_seconds for r in records], dtype=np.float64)
    if len(np.unique(ts)) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"서로 다른 T가 {MIN_FIT_POINTS}개 이상 필요함: {len(np.unique(ts))}개"
        )
    if np.any(secs <= 0) or np.any(ts <= 0):
        raise InsufficientDataError("T와 시간은 양수여야 함")
    lx, ly = np.log(ts), np.log(secs)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return SlopeFit(slope=float(slope), intercept=float(intercept), r2=r2)


def sweep_context_width(c_list: Sequence[int], config: Optional[BenchConfig] = None,
                        T: int = 1024) -> List[SweepRow]:
    """
    context width별 LDSA 파라미터 수와 실행 시간

    Raises:
        ConfigError: 짝수 c
    """
    cfg = config or BenchConfig()
    even = [c for c in c_list if c % 2 == 0 or c < 1]
    if even:
        raise ConfigError(f"context width c는 1 이상의 홀수여야 함: {even}")
    rows = []
    for c in c_list:
        table = count_attention_params(Variant.LDSA, cfg.d, cfg.h, c=c)
        w2 = sum(e.count for e in table.entries if '.w2.' in e.name)
        sub = replace(cfg, c=c, full_block=False)
        record = bench_runtime(Variant.LDSA, [T], sub)[0]
        rows.append(SweepRow(c=c, T=T, d=cfg.d, h=cfg.h,
                             attention_weights=table.weight_total, w2_weights=w2,
                             median_seconds=record.median_seconds,
                             mad_seconds=record.mad_seconds))
    return rows


# =============================================================================
# CSV
# =============================================================================

def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _write_rows(rows: list, cls, target: Union[str, Path, TextIO]) -> None:
    names = [f.name for f in fields(cls)]
    if hasattr(target, 'write'):
        _write_csv(target, rows, names)
        return
    with open(target, 'w', encoding='utf-8', newline='') as f:
        _write_csv(f, rows, names)


def _write_csv(f: TextIO, rows: list, names: List[str]) -> None:
    writer = csv.writer(f, lineterminator='\n')
    writer.writerow(names)
    for row in rows:
        writer.writerow([_format(getattr(row, n)) for n in names])


def _read_rows(cls, path: Union[str, Path]) -> list:
    types = {f.name: f.type for f in fields(cls)}
    casts = {'int': int, 'float': float, 'str': str, int: int, float: float, str: str}
    with open(path, 'r', encoding='utf-8', newline='') as f:
        return [
            cls(**{k: casts[types[k]](v) for k, v in row.items()})
            for row in csv.DictReader(f)
        ]


def write_bench_csv(records: Sequence[BenchRecord], path: Union[str, Path, TextIO]) -> None:
    """BenchRecord 필드 순서대로 열 기록 (float는 repr로 정확한 왕복)"""
    _write_rows(list(records), BenchRecord, path)


def read_bench_csv(path: Union[str, Path]) -> List[BenchRecord]:
    return _read_rows(BenchRecord, path)


def write_sweep_csv(rows: Sequence[SweepRow], path: Union[str, Path, TextIO]) -> None:
    _write_rows(list(rows), SweepRow, path)


def read_sweep_csv(path: Union[str, Path]) -> List[SweepRow]:
    return _read_rows(SweepRow, path)
