"""Truncated Laurent series in one variable.

A :class:`LaurentSeries` knows its coefficients up to ``truncation_order``;
everything above that order is unknown, never zero. Every operation here
derives the order it can justify from the orders of its inputs.
"""
import dataclasses
import logging
import math
import numbers
from fractions import Fraction

from .errors import NonInvertibleSeries, ScalarKindMismatch, SeriesException, SubstitutionError, UnknownCoefficient

logger = logging.getLogger(__name__)

EXACT = "exact"
FLOAT = "float"


def rational(value):
    """Parse an exact scalar: ints, Fractions and strings such as ``"-3/7"``."""
    if isinstance(value, bool):
        raise ScalarKindMismatch(f"not a rational scalar: {value!r}")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, numbers.Rational):
        return Fraction(value.numerator, value.denominator)
    raise ScalarKindMismatch(f"not a rational scalar: {value!r}")


def kind_of(value):
    if isinstance(value, bool):
        raise ScalarKindMismatch(f"booleans are not scalars: {value!r}")
    if isinstance(value, numbers.Rational):
        return EXACT
    if isinstance(value, numbers.Real):
        return FLOAT
    raise ScalarKindMismatch(f"unsupported scalar: {value!r}")


def _coerce(value, kind):
    if kind == EXACT:
        if kind_of(value) != EXACT:
            raise ScalarKindMismatch(f"float scalar {value!r} used with an exact series; promote explicitly")
        return Fraction(value)
    return float(value)


@dataclasses.dataclass(frozen=True)
class LaurentSeries:
    lowest_exponent: int
    coefficients: tuple
    truncation_order: int
    kind: str = EXACT

    def __post_init__(self):
        if self.kind not in (EXACT, FLOAT):
            raise ScalarKindMismatch(f"unknown scalar kind {self.kind!r}")
        lowest = int(self.lowest_exponent)
        order = int(self.truncation_order)
        coeffs = [_coerce(c, self.kind) for c in self.coefficients]
        # Unknown orders are dropped, missing known ones are zero
        coeffs = coeffs[: max(order - lowest + 1, 0)]
        coeffs.extend([_coerce(0, self.kind)] * (order - lowest + 1 - len(coeffs)))
        while len(coeffs) > 1 and coeffs[0] == 0:
            coeffs.pop(0)
            lowest += 1
        if not coeffs:
            lowest, coeffs = order, [_coerce(0, self.kind)]
        object.__setattr__(self, "lowest_exponent", lowest)
        object.__setattr__(self, "coefficients", tuple(coeffs))
        object.__setattr__(self, "truncation_order", order)

    # -- constructors

    @classmethod
    def zero(cls, order, kind=EXACT):
        return cls(order, (), order, kind)

    @classmethod
    def constant(cls, value, order, kind=None):
        kind = kind or kind_of(value)
        return cls(0, (value,), order, kind)

    @classmethod
    def monomial(cls, exponent, coefficient=1, order=None, kind=None):
        kind = kind or kind_of(coefficient)
        if order is None:
            order = exponent
        return cls(exponent, (coefficient,), order, kind)

    @classmethod
    def variable(cls, order, kind=EXACT):
        return cls.monomial(1, 1, order, kind)

    @classmethod
    def from_mapping(cls, terms, order, kind=EXACT):
        """Build from ``{exponent: coefficient}``; absent exponents are zero."""
        if not terms:
            return cls.zero(order, kind)
        lowest = min(terms)
        coeffs = [terms.get(p, 0) for p in range(lowest, order + 1)]
        return cls(lowest, tuple(coeffs), order, kind)

    # -- inspection

    @property
    def is_exact(self):
        return self.kind == EXACT

    @property
    def valuation(self):
        if self.coefficients[0] == 0:
            return self.truncation_order + 1
        return self.lowest_exponent

    @property
    def is_zero(self):
        return self.valuation > self.truncation_order

    @property
    def leading_coefficient(self):
        if self.is_zero:
            raise NonInvertibleSeries("series is zero to its truncation order")
        return self.coefficients[0]

    def coefficient(self, exponent):
        if exponent > self.truncation_order:
            raise UnknownCoefficient(
                f"coefficient of x^{exponent} is unknown (series truncated at order {self.truncation_order})"
            )
        index = exponent - self.lowest_exponent
        if index < 0:
            return _coerce(0, self.kind)
        return self.coefficients[index]

    def terms(self):
        """Nonzero ``(exponent, coefficient)`` pairs."""
        return [(self.lowest_exponent + i, c) for i, c in enumerate(self.coefficients) if c != 0]

    def _dense(self, start):
        return [self.coefficient(p) for p in range(start, self.truncation_order + 1)]

    # -- conversions

    def to_float(self):
        if self.kind == FLOAT:
            return self
        coeffs = tuple(float(c) for c in self.coefficients)
        return LaurentSeries(self.lowest_exponent, coeffs, self.truncation_order, FLOAT)

    def truncate(self, order):
        if order >= self.truncation_order:
            return self
        return LaurentSeries(self.lowest_exponent, self.coefficients, order, self.kind)

    def shift(self, power):
        """Multiply by ``x**power``."""
        return LaurentSeries(
            self.lowest_exponent + power, self.coefficients, self.truncation_order + power, self.kind
        )

    def evaluate(self, x, derivative=0):
        """Value (or ``derivative``-th derivative) of the known part at ``x``; works on numpy arrays."""
        series = self
        for _ in range(derivative):
            series = series_derivative(series)
        total = 0.0
        for exponent, coeff in series.terms():
            total = total + float(coeff) * x**exponent
        return total

    # -- arithmetic

    def _as_series(self, other):
        if isinstance(other, LaurentSeries):
            if other.kind != self.kind:
                raise ScalarKindMismatch(f"cannot combine {self.kind} and {other.kind} series without promotion")
            return other
        return LaurentSeries.constant(_coerce(other, self.kind), self.truncation_order, self.kind)

    def __add__(self, other):
        other = self._as_series(other)
        order = min(self.truncation_order, other.truncation_order)
        lowest = min(self.lowest_exponent, other.lowest_exponent)
        coeffs = [self.coefficient(p) + other.coefficient(p) for p in range(lowest, order + 1)]
        return LaurentSeries(lowest, tuple(coeffs), order, self.kind)

    __radd__ = __add__

    def __neg__(self):
        coeffs = tuple(-c for c in self.coefficients)
        return LaurentSeries(self.lowest_exponent, coeffs, self.truncation_order, self.kind)

    def __sub__(self, other):
        return self + (-self._as_series(other))

    def __rsub__(self, other):
        return self._as_series(other) + (-self)

    def __mul__(self, other):
        if isinstance(other, LaurentSeries):
            return series_mul(self, other)
        scale = _coerce(other, self.kind)
        return LaurentSeries(
            self.lowest_exponent, tuple(scale * c for c in self.coefficients), self.truncation_order, self.kind
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, LaurentSeries):
            return series_mul(self, series_reciprocal(other))
        scale = _coerce(other, self.kind)
        if scale == 0:
            raise NonInvertibleSeries("division of a series by zero")
        return self * (1 / scale)

    def __rtruediv__(self, other):
        return series_reciprocal(self) * _coerce(other, self.kind)

    def __pow__(self, exponent):
        if not isinstance(exponent, int):
            return series_pow(self, exponent)
        if exponent < 0:
            return series_reciprocal(self) ** (-exponent)
        if exponent == 0:
            return LaurentSeries.constant(1, self.truncation_order - self.valuation, self.kind)
        result = None
        base = self
        while exponent:
            if exponent & 1:
                result = base if result is None else series_mul(result, base)
            exponent >>= 1
            if exponent:
                base = series_mul(base, base)
        return result

    def __str__(self):
        parts = []
        for exponent, coeff in self.terms():
            if exponent == 0:
                parts.append(f"{coeff}")
            elif exponent == 1:
                parts.append(f"{coeff}*x")
            else:
                parts.append(f"{coeff}*x^{exponent}")
        body = " + ".join(parts) if parts else "0"
        return f"{body} + O(x^{self.truncation_order + 1})"


def _check_kinds(a, b):
    if a.kind != b.kind:
        raise ScalarKindMismatch(f"cannot combine {a.kind} and {b.kind} series without promotion")


def series_mul(a, b):
    _check_kinds(a, b)
    va, vb = a.valuation, b.valuation
    order = min(a.truncation_order + vb, b.truncation_order + va)
    lowest = va + vb
    if lowest > order:
        return LaurentSeries.zero(order, a.kind)
    da = a._dense(va)
    db = b._dense(vb)
    coeffs = []
    for p in range(lowest, order + 1):
        total = _coerce(0, a.kind)
        for i in range(0, p - lowest + 1):
            j = p - lowest - i
            if i < len(da) and j < len(db):
                total += da[i] * db[j]
        coeffs.append(total)
    return LaurentSeries(lowest, tuple(coeffs), order, a.kind)


def series_reciprocal(a):
    if a.is_zero:
        raise NonInvertibleSeries("non-invertible series")
    v = a.valuation
    lead = a.coefficient(v)
    inverse_lead = (Fraction(1) / lead) if a.is_exact else 1.0 / lead
    dense = a._dense(v)
    precision = a.truncation_order - v
    out = [inverse_lead]
    for k in range(1, precision + 1):
        total = _coerce(0, a.kind)
        for j in range(1, k + 1):
            total += dense[j] * out[k - j]
        out.append(-total * inverse_lead)
    return LaurentSeries(-v, tuple(out), a.truncation_order - 2 * v, a.kind)


def series_derivative(a):
    coeffs = []
    lowest = a.lowest_exponent - 1
    for p in range(a.lowest_exponent, a.truncation_order + 1):
        coeffs.append(p * a.coefficient(p))
    return LaurentSeries(lowest, tuple(coeffs), a.truncation_order - 1, a.kind)


def _check_near_identity(sub):
    if sub.valuation != 1:
        raise SubstitutionError(f"substitution must start at x^1, got valuation {sub.valuation}")
    lead = sub.coefficient(1)
    if (sub.is_exact and lead != 1) or (not sub.is_exact and abs(lead - 1.0) > 1e-12):
        raise SubstitutionError(f"substitution must have unit leading coefficient, got {lead}")


def series_substitute(a, sub):
    """Composition ``a(sub(x))`` for a near-identity ``sub = x + O(x^2)``."""
    _check_kinds(a, sub)
    _check_near_identity(sub)
    va = a.valuation
    if a.is_zero:
        return LaurentSeries.zero(a.truncation_order, a.kind)
    order = min(a.truncation_order, va + sub.truncation_order - 1)
    if va >= 0:
        power = sub**va if va else LaurentSeries.constant(1, a.truncation_order, a.kind)
    else:
        power = series_reciprocal(sub) ** (-va)
    total = LaurentSeries.zero(order, a.kind)
    for p in range(va, a.truncation_order + 1):
        coeff = a.coefficient(p)
        if coeff != 0:
            total = total + power * coeff
        if p < a.truncation_order:
            power = power * sub if p != -1 else LaurentSeries.constant(1, a.truncation_order, a.kind)
    return total.truncate(order)


def series_exp(a):
    if a.valuation < 1:
        raise SeriesException("exp is only expanded for series with zero constant term")
    order = a.truncation_order
    result = LaurentSeries.constant(1, order, a.kind)
    term = LaurentSeries.constant(1, order, a.kind)
    k = 1
    while True:
        term = series_mul(term, a) * (Fraction(1, k) if a.is_exact else 1.0 / k)
        if term.valuation > order:
            break
        result = result + term
        k += 1
    return result.truncate(order)


def series_pow(a, exponent):
    """``a**exponent`` for a rational exponent, expanded as ``c**e * x**(v*e) * (1 + u)**e``."""
    if isinstance(exponent, int):
        return a**exponent
    if a.is_exact:
        exponent = rational(exponent)
    else:
        exponent = float(exponent)
    v = a.valuation
    lead = a.leading_coefficient
    shift = v * exponent
    if shift != int(shift):
        raise SeriesException(f"x^{v} raised to {exponent} is not a Laurent monomial")
    if a.is_exact and lead != 1:
        raise SeriesException("exact rational powers need a unit leading coefficient")
    if not a.is_exact and lead <= 0:
        raise SeriesException("float powers need a positive leading coefficient")
    u = a.shift(-v) / lead - 1
    precision = a.truncation_order - v
    u = u.truncate(precision)
    result = LaurentSeries.constant(1, precision, a.kind)
    term = LaurentSeries.constant(1, precision, a.kind)
    binom = _coerce(1, a.kind)
    k = 1
    while True:
        binom = binom * (exponent - k + 1) / k
        term = series_mul(term, u)
        if term.valuation > precision:
            break
        result = result + term * binom
        k += 1
    scale = _coerce(1, a.kind) if a.is_exact else lead**exponent
    return (result * scale).truncate(precision).shift(int(shift))


def series_revert(s):
    """Compositional inverse of a near-identity series by fixed-point iteration ``t = x - q(t)``."""
    _check_near_identity(s)
    order = s.truncation_order
    x = LaurentSeries.variable(order, s.kind)
    q = s - x
    t = x
    for iteration in range(order + 1):
        updated = (x - series_substitute(q, t)).truncate(order)
        if updated == t:
            logger.debug("series reversion converged after %d iterations", iteration)
            break
        t = updated
    return t


def sinh_series(order, kind=EXACT):
    terms = {}
    for j in range(0, order // 2 + 1):
        p = 2 * j + 1
        if p > order:
            break
        terms[p] = Fraction(1, math.factorial(p)) if kind == EXACT else 1.0 / math.factorial(p)
    return LaurentSeries.from_mapping(terms, order, kind)


def cosh_series(order, kind=EXACT):
    terms = {}
    for j in range(0, order // 2 + 1):
        p = 2 * j
        terms[p] = Fraction(1, math.factorial(p)) if kind == EXACT else 1.0 / math.factorial(p)
    return LaurentSeries.from_mapping(terms, order, kind)


def csch2_series(order, kind=EXACT):
    """``1/sinh(x)**2`` known through ``x**order``."""
    sinh = sinh_series(order + 3, kind)
    return series_reciprocal(series_mul(sinh, sinh)).truncate(order)
