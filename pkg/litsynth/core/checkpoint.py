"""
Checkpoint - 파라미터 저장/불러오기

디렉토리 구조:
    manifest.json   - 변형, 헤드 수, 행렬 목록 (이름, 형태, 파일, 블록 번호)
    <이름>.csv       - 행렬 하나당 CSV 파일 하나 (17자리 유효숫자)

1차원 벡터는 1 x n, 4차원 커널은 (shape[0], 나머지 곱) 형태로 저장하고
manifest의 shape로 원래 형태를 복원한다.
JSON은 sort_keys로 필드 순서를 고정한다.
"""

import json
import re
from pathlib import Path
from typing import Tuple, Union

import numpy as np

from .numerics import Rng, ShapeError, ConfigError, save_matrix_csv, load_matrix_csv
from .params import named_arrays, assign_arrays
from .attention import (
    Variant, AttentionParams, variant_of, init_attention_params,
)
from .encoder import (
    EncoderConfig, EncoderParams, FRONTEND_CHANNELS, init_encoder_params,
)

MANIFEST = 'manifest.json'
FORMAT_VERSION = 1

_BLOCK_PREFIX = re.compile(r'^blocks\.(\d+)\.')


def _as_2d(a: np.ndarray) -> np.ndarray:
    if a.ndim == 1:
        return a.reshape(1, -1)
    if a.ndim > 2:
        return a.reshape(a.shape[0], -1)
    return a


def _write_matrices(params, directory: Path) -> list:
    entries = []
    for name, arr in named_arrays(params).items():
        filename = f"{name}.csv"
        save_matrix_csv(directory / filename, _as_2d(arr))
        entry = {'name': name, 'shape': list(arr.shape), 'file': filename}
        m = _BLOCK_PREFIX.match(name)
        if m:
            entry['block'] = int(m.group(1))
        entries.append(entry)
    return entries


def _read_matrices(entries: list, directory: Path) -> dict:
    values = {}
    for entry in entries:
        shape = tuple(entry['shape'])
        data = load_matrix_csv(directory / entry['file'])
        if data.size != int(np.prod(shape)):
            raise ShapeError(
                f"{entry['file']} 원소 수 불일치: {data.size} vs {shape}"
            )
        values[entry['name']] = data.reshape(shape)
    return values


def _write_manifest(directory: Path, manifest: dict):
    with open(directory / MANIFEST, 'w', encoding='utf-8') as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write('\n')


def _read_manifest(directory: Path) -> dict:
    path = directory / MANIFEST
    if not path.exists():
        raise FileNotFoundError(f"manifest 없음: {path}")
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


# =============================================================================
# 단일 어텐션 층
# =============================================================================

def save_attention_params(params: AttentionParams, directory: Union[str, Path]) -> Path:
    """
    어텐션 파라미터 저장

    Returns:
        manifest 경로
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    params.validate()
    variant = variant_of(params)
    manifest = {
        'format': FORMAT_VERSION,
        'kind': 'attention',
        'variant': variant.value,
        'heads': params.heads,
        'd': params.d,
        'matrices': _write_matrices(params, directory),
    }
    if variant == Variant.DSA:
        manifest['t_max'] = params.t_max
    elif variant == Variant.LDSA:
        manifest['c'] = params.c
    _write_manifest(directory, manifest)
    return directory / MANIFEST


def load_attention_params(directory: Union[str, Path]) -> AttentionParams:
    directory = Path(directory)
    manifest = _read_manifest(directory)
    if manifest.get('kind') != 'attention':
        raise ConfigError(f"어텐션 checkpoint가 아님: {directory}")
    params = init_attention_params(
        manifest['variant'], manifest['d'], manifest['heads'], Rng(0),
        c=manifest.get('c', 1), t_max=manifest.get('t_max', 1),
    )
    _fill(params, _read_matrices(manifest['matrices'], directory))
    params.validate()
    return params


def _fill(params, values: dict):
    expected = set(named_arrays(params))
    missing = sorted(expected - set(values))
    if missing:
        raise ConfigError(f"checkpoint에 없는 파라미터: {', '.join(missing)}")
    assign_arrays(params, values)


# =============================================================================
# 전체 인코더
# =============================================================================

def save_encoder(config: EncoderConfig, params: EncoderParams,
                 directory: Union[str, Path]) -> Path:
    """
    인코더 checkpoint 저장 (행렬 항목에 block 번호 포함)
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    config.validate()
    manifest = {
        'format': FORMAT_VERSION,
        'kind': 'encoder',
        'variant': config.variant.value,
        'heads': config.h,
        'config': config.to_dict(),
        'frontend_channels': params.frontend.channels,
        'positional_encoding': params.frontend.positional_encoding,
        'matrices': _write_matrices(params, directory),
    }
    _write_manifest(directory, manifest)
    return directory / MANIFEST


def load_encoder(directory: Union[str, Path]) -> Tuple[EncoderConfig, EncoderParams]:
    directory = Path(directory)
    manifest = _read_manifest(directory)
    if manifest.get('kind') != 'encoder':
        raise ConfigError(f"인코더 checkpoint가 아님: {directory}")
    config = EncoderConfig.from_dict(manifest['config'])
    params = init_encoder_params(
        config, Rng(0),
        frontend_channels=manifest.get('frontend_channels', FRONTEND_CHANNELS),
        positional_encoding=manifest.get('positional_encoding', True),
    )
    _fill(params, _read_matrices(manifest['matrices'], directory))
    return config, params
