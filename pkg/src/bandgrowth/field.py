"""Exact scalar fields: GF(p) for primes below 2**61, and the rationals."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ._kernels import MAX_KERNEL_PRIME
from .errors import ConfigMismatch, UsageError

MAX_PRIME = 2**61


@dataclass(frozen=True)
class FieldConfig:
    kind: str  # "gfp" or "q"
    p: int = 0

    def __post_init__(self):
        if self.kind == "gfp":
            from sympy import isprime

            if not (2 <= self.p < MAX_PRIME) or not isprime(self.p):
                raise UsageError(f"GF(p) needs a prime p < 2**61, got {self.p}")
        elif self.kind == "q":
            if self.p != 0:
                raise UsageError("the rational field takes no modulus")
        else:
            raise UsageError(f"unknown field kind {self.kind!r}")

    @classmethod
    def gfp(cls, p: int) -> "FieldConfig":
        return cls("gfp", int(p))

    @classmethod
    def rationals(cls) -> "FieldConfig":
        return cls("q")

    @classmethod
    def parse(cls, text: str) -> "FieldConfig":
        """Parse the CLI spelling: ``gfp:7`` or ``q``."""
        text = text.strip().lower()
        if text in ("q", "qq", "rationals"):
            return cls.rationals()
        if text.startswith("gfp:"):
            try:
                return cls.gfp(int(text[4:]))
            except ValueError as exc:
                raise UsageError(f"bad field spec {text!r}") from exc
        raise UsageError(f"bad field spec {text!r}")

    @classmethod
    def from_json(cls, obj: dict) -> "FieldConfig":
        kind = obj.get("kind")
        if kind == "gfp":
            return cls.gfp(obj["p"])
        if kind == "q":
            return cls.rationals()
        raise UsageError(f"bad field object {obj!r}")

    def to_json(self) -> dict:
        return {"kind": "gfp", "p": self.p} if self.kind == "gfp" else {"kind": "q"}

    def __str__(self):
        return f"gfp:{self.p}" if self.kind == "gfp" else "q"

    # ------------------------------------------------------------ elements

    @property
    def is_prime_field(self) -> bool:
        return self.kind == "gfp"

    @property
    def fast(self) -> bool:
        """True when entries fit the int64 kernels."""
        return self.kind == "gfp" and self.p < MAX_KERNEL_PRIME

    @property
    def dtype(self):
        return np.int64 if self.fast else object

    @property
    def zero(self):
        return 0 if self.kind == "gfp" else Fraction(0)

    @property
    def one(self):
        return 1 if self.kind == "gfp" else Fraction(1)

    def element(self, x):
        """Coerce an int, Fraction or decimal/fraction string into the field."""
        if isinstance(x, str):
            x = Fraction(x.strip())
        if self.kind == "gfp":
            if isinstance(x, Fraction):
                if x.denominator % self.p == 0:
                    raise ZeroDivisionError(f"{x} has no image in GF({self.p})")
                return x.numerator * pow(x.denominator, -1, self.p) % self.p
            if isinstance(x, (np.integer,)):
                x = int(x)
            if not isinstance(x, int):
                raise TypeError(f"cannot coerce {type(x).__name__} into GF({self.p})")
            return x % self.p
        if isinstance(x, (int, np.integer)):
            return Fraction(int(x))
        if isinstance(x, Fraction):
            return x
        raise TypeError(f"cannot coerce {type(x).__name__} into Q")

    def array(self, values) -> np.ndarray:
        vals = [self.element(v) for v in values]
        if self.fast:
            return np.asarray(vals, dtype=np.int64).reshape(-1)
        out = np.empty(len(vals), dtype=object)
        out[:] = vals
        return out

    def zeros(self, shape) -> np.ndarray:
        if self.fast:
            return np.zeros(shape, dtype=np.int64)
        out = np.empty(shape, dtype=object)
        out.fill(self.zero)
        return out

    def normalize(self, arr: np.ndarray) -> np.ndarray:
        """Reduce an integer-valued array into canonical representatives."""
        if self.kind == "gfp":
            return arr % self.p
        return arr

    def add(self, a, b):
        return self.normalize(a + b)

    def sub(self, a, b):
        return self.normalize(a - b)

    def mul(self, a, b):
        return self.normalize(a * b)

    def neg(self, a):
        return self.normalize(-a)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.kind == "gfp":
            return pow(int(a), -1, self.p)
        return 1 / Fraction(a)

    def format(self, v) -> str:
        return str(int(v)) if self.kind == "gfp" else str(Fraction(v))

    def random(self, rng: np.random.Generator, size, bound: int = 3) -> np.ndarray:
        """Random entries: uniform residues for GF(p), small integers in Q."""
        if self.kind == "gfp":
            hi = min(self.p, 2**62)
            raw = rng.integers(0, hi, size=size)
            return raw.astype(np.int64) if self.fast else self.array(raw.reshape(-1).tolist()).reshape(raw.shape)
        raw = rng.integers(-bound, bound + 1, size=size)
        return self.array(raw.reshape(-1).tolist()).reshape(raw.shape)

    def check_same(self, other: "FieldConfig"):
        if self != other:
            raise ConfigMismatch(f"field mismatch: {self} vs {other}")


@dataclass(frozen=True)
class FieldScalar:
    """A single exact field element; arithmetic checks field agreement."""

    field: FieldConfig
    value: object

    def __post_init__(self):
        object.__setattr__(self, "value", self.field.element(self.value))

    def _other(self, other):
        if isinstance(other, FieldScalar):
            self.field.check_same(other.field)
            return other.value
        return self.field.element(other)

    def __add__(self, other):
        return FieldScalar(self.field, self.field.add(self.value, self._other(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return FieldScalar(self.field, self.field.sub(self.value, self._other(other)))

    def __rsub__(self, other):
        return FieldScalar(self.field, self.field.sub(self._other(other), self.value))

    def __mul__(self, other):
        return FieldScalar(self.field, self.field.mul(self.value, self._other(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return FieldScalar(self.field, self.field.mul(self.value, self.field.inv(self._other(other))))

    def __neg__(self):
        return FieldScalar(self.field, self.field.neg(self.value))

    def inverse(self):
        return FieldScalar(self.field, self.field.inv(self.value))

    def __eq__(self, other):
        if isinstance(other, FieldScalar):
            return self.field == other.field and self.value == other.value
        try:
            return self.value == self.field.element(other)
        except (TypeError, ZeroDivisionError):
            return NotImplemented

    def __hash__(self):
        return hash((self.field, self.value))

    def __bool__(self):
        return self.value != 0

    def __repr__(self):
        return f"{self.field.format(self.value)} in {self.field}"
