"""Canonical JSON encoding of the package's frozen dataclasses.

Every encodable class is registered under a ``kind`` tag. Encoding produces
plain JSON values with a ``"kind"`` member per object; decoding is strict:
unknown kinds, unknown fields and missing required fields are rejected.
"""

from __future__ import annotations

import dataclasses
import json
import types
import typing
from typing import Any

from .errors import DecodeError

_REGISTRY: dict[str, type] = {}


def register(kind: str):
    def wrap(cls):
        if kind in _REGISTRY:
            raise RuntimeError(f"duplicate kind {kind!r}")
        cls.kind = kind
        _REGISTRY[kind] = cls
        return cls

    return wrap


def registered(kind: str) -> type:
    return _REGISTRY[kind]


def _floats(value: Any, hint: Any) -> Any:
    """Promote ints held in float-annotated slots so equal specs encode identically."""
    if hint is float:
        return float(value) if isinstance(value, int) and not isinstance(value, bool) else value
    if typing.get_origin(hint) is tuple and isinstance(value, (tuple, list)):
        args = typing.get_args(hint)
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_floats(v, args[0]) for v in value)
        if len(args) == len(value):
            return tuple(_floats(v, a) for v, a in zip(value, args))
    if typing.get_origin(hint) in (typing.Union, types.UnionType) and float in typing.get_args(hint):
        return _floats(value, float)
    return value


def encode(obj: Any) -> Any:
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        kind = getattr(type(obj), "kind", None)
        if kind is None:
            raise TypeError(f"{type(obj).__name__} is not registered")
        hints = _hints(type(obj))
        out = {"kind": kind}
        for f in dataclasses.fields(obj):
            out[f.name] = encode(_floats(getattr(obj, f.name), hints[f.name]))
        return out
    if isinstance(obj, (tuple, list)):
        return [encode(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        if obj != obj or obj in (float("inf"), float("-inf")):
            raise ValueError("non-finite floats are not encodable")
        return obj
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj: Any) -> str:
    """Canonical text: sorted keys, no whitespace, ASCII only."""
    return json.dumps(encode(obj), sort_keys=True, separators=(",", ":"), ensure_ascii=True, allow_nan=False)


def _hints(cls) -> dict[str, Any]:
    cached = cls.__dict__.get("_codec_hints")
    if cached is None:
        cached = typing.get_type_hints(cls)
        cls._codec_hints = cached
    return cached


def _coerce(value: Any, hint: Any, path: str) -> Any:
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if hint is Any:
        return _decode_any(value, path)
    if origin in (typing.Union, types.UnionType):
        if value is None and type(None) in args:
            return None
        errors = []
        for arg in args:
            if arg is type(None):
                continue
            try:
                return _coerce(value, arg, path)
            except DecodeError as exc:
                errors.append(str(exc))
        raise DecodeError(errors[0] if errors else f"{path}: unexpected null")
    if origin is tuple:
        if not isinstance(value, list):
            raise DecodeError(f"{path}: expected a list")
        if len(args) == 2 and args[1] is Ellipsis:
            return tuple(_coerce(v, args[0], f"{path}[{i}]") for i, v in enumerate(value))
        if len(args) != len(value):
            raise DecodeError(f"{path}: expected {len(args)} items")
        return tuple(_coerce(v, a, f"{path}[{i}]") for i, (v, a) in enumerate(zip(value, args)))
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise DecodeError(f"{path}: expected a number")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise DecodeError(f"{path}: expected an integer")
        return value
    if hint is bool:
        if not isinstance(value, bool):
            raise DecodeError(f"{path}: expected a boolean")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise DecodeError(f"{path}: expected a string")
        return value
    if isinstance(hint, type):
        obj = _decode_object(value, path)
        if not isinstance(obj, hint):
            raise DecodeError(f"{path}: expected {hint.__name__}, got kind {value.get('kind')!r}")
        return obj
    raise DecodeError(f"{path}: unsupported field type {hint!r}")


def _decode_any(value: Any, path: str) -> Any:
    if isinstance(value, dict):
        return _decode_object(value, path)
    if isinstance(value, list):
        return tuple(_decode_any(v, f"{path}[{i}]") for i, v in enumerate(value))
    return value


def _decode_object(value: Any, path: str) -> Any:
    if not isinstance(value, dict):
        raise DecodeError(f"{path}: expected an object")
    kind = value.get("kind")
    cls = _REGISTRY.get(kind) if isinstance(kind, str) else None
    if cls is None:
        raise DecodeError(f"{path}: unknown kind {kind!r}")
    hints = _hints(cls)
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(value) - set(fields) - {"kind"})
    if unknown:
        raise DecodeError(f"{path}: unknown field(s) {', '.join(unknown)} for kind {kind!r}")
    kwargs = {}
    for name, f in fields.items():
        if name in value:
            kwargs[name] = _coerce(value[name], hints[name], f"{path}.{name}")
        elif f.default is dataclasses.MISSING and f.default_factory is dataclasses.MISSING:
            raise DecodeError(f"{path}: missing field {name!r} for kind {kind!r}")
    try:
        return cls(**kwargs)
    except DecodeError:
        raise
    except (ValueError, TypeError) as exc:
        raise DecodeError(f"{path}: {exc}") from exc


def decode(value: Any, expected: type | None = None, path: str = "$") -> Any:
    obj = _decode_object(value, path)
    if expected is not None and not isinstance(obj, expected):
        raise DecodeError(f"{path}: expected {expected.__name__}, got kind {value.get('kind')!r}")
    return obj


def loads(text: str | bytes, expected: type | None = None) -> Any:
    try:
        value = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return decode(value, expected)
