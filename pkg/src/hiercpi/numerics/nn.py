"""Parameter containers and the few layers the encoders are built from."""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

from .tensor import Tensor, get_default_dtype, layer_norm, matmul, add, take_rows


def parameter(data, name: str | None = None) -> Tensor:
    return Tensor(np.asarray(data, dtype=get_default_dtype()), requires_grad=True, name=name)


def uniform_init(rng: np.random.Generator, shape: tuple, fan_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Module:
    """Collects trainable tensors and sub-modules from instance attributes.

    Attribute insertion order defines parameter order, which in turn fixes
    the order of initialisation draws and checkpoint layout.
    """

    def named_parameters(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for key, value in vars(self).items():
            full = f"{prefix}{key}"
            if isinstance(value, Tensor) and value.requires_grad:
                yield full, value
            elif isinstance(value, Module):
                yield from value.named_parameters(full + ".")
            elif isinstance(value, (list, tuple)):
                for i, item in enumerate(value):
                    if isinstance(item, Module):
                        yield from item.named_parameters(f"{full}.{i}.")

    def parameters(self) -> dict[str, Tensor]:
        params = dict(self.named_parameters())
        for name, p in params.items():
            p.name = name
        return params

    def zero_grad(self) -> None:
        for p in self.parameters().values():
            p.grad = None


class Linear(Module):
    def __init__(self, rng: np.random.Generator, d_in: int, d_out: int, bias: bool = True):
        self.weight = parameter(uniform_init(rng, (d_in, d_out), d_in))
        self.bias = parameter(uniform_init(rng, (d_out,), d_in)) if bias else None

    def __call__(self, x: Tensor) -> Tensor:
        y = matmul(x, self.weight)
        return add(y, self.bias) if self.bias is not None else y


class Embedding(Module):
    def __init__(self, rng: np.random.Generator, n: int, d: int):
        self.table = parameter(uniform_init(rng, (n, d), d))

    def __call__(self, idx) -> Tensor:
        return take_rows(self.table, idx)


class LayerNorm(Module):
    def __init__(self, d: int):
        self.gain = parameter(np.ones(d))
        self.bias = parameter(np.zeros(d))

    def __call__(self, x: Tensor) -> Tensor:
        return layer_norm(x, self.gain, self.bias)
