"""
Parameter Tree - 파라미터 컨테이너 순회 유틸리티

파라미터 컨테이너는 dataclass이며 필드는 다음 중 하나:
- np.ndarray (학습 파라미터)
- list (헤드별 행렬, 블록 목록)
- dataclass (하위 컨테이너)
- 그 외 스칼라 (bool 스위치 등, 순회 대상 아님)
"""

import dataclasses
from typing import Any, Callable, Dict, Iterator, List, Tuple

import numpy as np

from .numerics import ShapeError


def _children(tree: Any) -> Iterator[Tuple[str, Any]]:
    if dataclasses.is_dataclass(tree) and not isinstance(tree, type):
        for f in dataclasses.fields(tree):
            yield f.name, getattr(tree, f.name)
    elif isinstance(tree, (list, tuple)):
        for i, item in enumerate(tree):
            yield str(i), item


def iter_named_arrays(tree: Any, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
    """점(.)으로 이어진 이름과 배열 쌍을 필드 선언 순서대로 생성"""
    if isinstance(tree, np.ndarray):
        yield prefix, tree
        return
    for name, child in _children(tree):
        path = f"{prefix}.{name}" if prefix else name
        yield from iter_named_arrays(child, path)


def named_arrays(tree: Any) -> Dict[str, np.ndarray]:
    """
    이름 → 배열 (참조) 딕셔너리

    반환된 배열은 컨테이너 내부 배열과 같은 객체이므로
    in-place 수정이 컨테이너에 반영된다.
    """
    return dict(iter_named_arrays(tree))


def tree_map(fn: Callable[[np.ndarray], np.ndarray], tree: Any) -> Any:
    """모든 배열에 fn을 적용한 같은 구조의 새 컨테이너"""
    if isinstance(tree, np.ndarray):
        return fn(tree)
    if dataclasses.is_dataclass(tree) and not isinstance(tree, type):
        changes = {}
        for f in dataclasses.fields(tree):
            if not f.init:
                continue
            value = getattr(tree, f.name)
            if isinstance(value, (np.ndarray, list, tuple)) or dataclasses.is_dataclass(value):
                changes[f.name] = tree_map(fn, value)
        return dataclasses.replace(tree, **changes)
    if isinstance(tree, list):
        return [tree_map(fn, item) for item in tree]
    if isinstance(tree, tuple):
        return tuple(tree_map(fn, item) for item in tree)
    return tree


def zeros_like(tree: Any) -> Any:
    return tree_map(np.zeros_like, tree)


def copy_tree(tree: Any) -> Any:
    return tree_map(np.copy, tree)


def count_arrays(tree: Any) -> int:
    """컨테이너 안의 전체 원소 수"""
    return sum(a.size for _, a in iter_named_arrays(tree))


def assign_arrays(tree: Any, values: Dict[str, np.ndarray]) -> List[str]:
    """
    이름이 일치하는 배열을 in-place로 덮어쓴다.

    Returns:
        덮어쓴 이름 목록
    """
    targets = named_arrays(tree)
    written = []
    for name, value in values.items():
        if name not in targets:
            raise KeyError(f"알 수 없는 파라미터: {name}")
        dst = targets[name]
        if dst.shape != value.shape:
            raise ShapeError(
                f"파라미터 형태 불일치 {name}: {dst.shape} vs {value.shape}"
            )
        dst[...] = value
        written.append(name)
    return written
