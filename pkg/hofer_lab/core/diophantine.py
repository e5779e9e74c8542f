"""Exact arithmetic for rotation numbers.

Continued fractions are stored as a materialised prefix of partial quotients plus an
optional generator rule. Every quantity derived from them is an exact rational interval
that is valid for every possible tail of the expansion.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import isqrt
from typing import Dict, List, Literal, Optional, Sequence, Tuple, Union

from pydantic import Field, field_validator, model_validator
from typing_extensions import Annotated

from .errors import DomainError, PrecisionError
from .models import ExactRational, LabModel, LiouvilleCertificate, LiouvilleWitness, to_fraction

logger = logging.getLogger(__name__)

DEFAULT_MAX_BITS = 4096
FULL_SCAN_LIMIT = 1000
LOG2_E = 1.4426950408889634

Interval = Tuple[Fraction, Fraction]


# ============================================================================
# Certified Exponentials
# ============================================================================


def _round_down(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(math.floor(value * scale), scale)


def _round_up(value: Fraction, bits: int) -> Fraction:
    scale = 1 << bits
    return Fraction(math.ceil(value * scale), scale)


@lru_cache(maxsize=4096)
def exp_bounds(x: Union[Fraction, int], bits: int = 64) -> Interval:
    """Dyadic interval [lo, hi] containing e^x, with absolute width about 2^-bits.

    Range reduction to |y| <= 1/2, a Taylor sum with remainder at most twice the first
    omitted term, then outward-rounded squaring.
    """
    x = Fraction(x)
    if bits < 1:
        raise DomainError(f"bits must be positive, got {bits}")
    if x == 0:
        return Fraction(1), Fraction(1)
    if x < 0:
        lo, hi = exp_bounds(-x, bits + 2)
        return _round_down(1 / hi, bits), _round_up(1 / lo, bits)

    squarings = 0
    y = x
    while y > Fraction(1, 2):
        y /= 2
        squarings += 1
    work = bits + 2 * squarings + math.ceil(float(x) * LOG2_E) + 16

    total = Fraction(0)
    term = Fraction(1)
    j = 0
    threshold = Fraction(1, 1 << (work + 2))
    while True:
        total += term
        j += 1
        term = _round_down(term * y / j, work + 24)
        if term < threshold:
            break
    # each rounded term is short of the true one by < 2·2^-(work+24); the true tail is < 2·y^j/j!
    slack = 2 * term + Fraction(6 * j, 1 << (work + 24))
    lo = _round_down(total, work)
    hi = _round_up(total + slack, work)
    for _ in range(squarings):
        lo = _round_down(lo * lo, work)
        hi = _round_up(hi * hi, work)
    return _round_down(lo, bits), _round_up(hi, bits)


def compare_with_exp_neg(d_lo: Fraction, d_hi: Fraction, x: Fraction, bits: int = 64) -> Optional[bool]:
    """Decide d < e^-x for d in [d_lo, d_hi].

    True when d_hi < e^-x is certified, False when d_lo >= e^-x is certified, None when
    `bits` of precision cannot separate them.
    """
    lo, hi = exp_bounds(x, bits)
    if d_hi * hi < 1:
        return True
    if d_lo * lo >= 1:
        return False
    return None


def exact_ceil_exp(x: Fraction, max_bits: int = DEFAULT_MAX_BITS) -> int:
    """ceil(e^x) for rational x > 0 (e^x is never an integer there).

    Raises:
        PrecisionError: If the enclosure still straddles an integer at max_bits
    """
    bits = 64
    while bits <= max_bits:
        lo, hi = exp_bounds(x, bits)
        if math.ceil(lo) == math.ceil(hi) and lo != math.ceil(lo):
            return math.ceil(lo)
        bits *= 2
    raise PrecisionError(f"cannot decide ceil(exp({x})) within {max_bits} bits")


# ============================================================================
# Interval Helpers
# ============================================================================


def circle_norm(x: Fraction) -> Fraction:
    """Distance from x to the nearest integer."""
    frac = x - math.floor(x)
    return min(frac, 1 - frac)


def circle_norm_interval(lo: Fraction, hi: Fraction) -> Interval:
    """Range of the distance-to-nearest-integer over [lo, hi]."""
    ends = (circle_norm(lo), circle_norm(hi))
    low = Fraction(0) if math.ceil(lo) <= hi else min(ends)
    half = Fraction(1, 2)
    high = half if math.ceil(lo - half) <= hi - half else max(ends)
    return low, high


# ============================================================================
# Continued Fractions
# ============================================================================


class GrowthSchedule(LabModel):
    """A growth rule n ↦ c_n: `linear` is slope·n + intercept, `constant` is value."""

    kind: Literal["linear", "constant"] = "linear"
    slope: ExactRational = Fraction(1)
    intercept: ExactRational = Fraction(0)
    value: ExactRational = Fraction(1)

    def c(self, n: int) -> Fraction:
        if self.kind == "constant":
            return self.value
        return self.slope * n + self.intercept

    @property
    def unbounded(self) -> bool:
        return self.kind == "linear" and self.slope > 0

    @classmethod
    def parse(cls, text: str) -> "GrowthSchedule":
        """Parse 'c_n=n', 'c_n=2n+1' or 'c_n=5'."""
        body = text.replace(" ", "").split("=", 1)[-1]
        try:
            if "n" not in body:
                return cls(kind="constant", value=to_fraction(body))
            coefficient, _, rest = body.partition("n")
            slope = Fraction(1) if coefficient in ("", "+") else to_fraction(coefficient.rstrip("*"))
            intercept = to_fraction(rest) if rest else Fraction(0)
        except ValueError as e:
            raise DomainError(f"cannot parse growth schedule {text!r}: {e}") from e
        return cls(kind="linear", slope=slope, intercept=intercept)


class PeriodicRule(LabModel):
    kind: Literal["periodic"] = "periodic"
    period: List[int] = Field(..., min_length=1)

    @field_validator("period")
    @classmethod
    def _positive(cls, period: List[int]) -> List[int]:
        if any(a < 1 for a in period):
            raise ValueError("periodic partial quotients must be >= 1")
        return period


class ExpLiouvilleRule(LabModel):
    """a_{n+1} = ceil(exp(c_n·q_n))."""

    kind: Literal["exp-liouville"] = "exp-liouville"
    schedule: GrowthSchedule = Field(default_factory=GrowthSchedule)


class PowerOfTwoRule(LabModel):
    """a_{n+1} = 2^{q_n}."""

    kind: Literal["power-of-two"] = "power-of-two"


QuotientRule = Annotated[Union[PeriodicRule, ExpLiouvilleRule, PowerOfTwoRule], Field(discriminator="kind")]


class QuadraticIrrational(LabModel):
    """(P + sqrt(D))/Q with D > 0 not a perfect square."""

    P: int = 0
    D: int
    Q: int = 1

    @model_validator(mode="after")
    def _irrational(self) -> "QuadraticIrrational":
        if self.D <= 0 or isqrt(self.D) ** 2 == self.D:
            raise ValueError(f"D must be a positive non-square, got {self.D}")
        if self.Q == 0:
            raise ValueError("Q must be non-zero")
        return self

    @classmethod
    def golden(cls) -> "QuadraticIrrational":
        """(sqrt(5) - 1)/2, the fractional part of the golden ratio."""
        return cls(P=-1, D=5, Q=2)

    @classmethod
    def sqrt(cls, d: int) -> "QuadraticIrrational":
        return cls(P=0, D=d, Q=1)

    @property
    def approx(self) -> float:
        return (self.P + math.sqrt(self.D)) / self.Q


class ContinuedFraction:
    """Partial quotients [a₀; a₁, a₂, ...] with exact convergents.

    Quotients past the stored prefix come from `rule` on demand. A quotient whose bit
    length would exceed `max_bits` is never materialised: the expansion is then capped
    and all values are enclosed by the interval valid for every tail.
    """

    def __init__(self, prefix: Sequence[int], rule: Optional[QuotientRule] = None, max_bits: int = DEFAULT_MAX_BITS):
        if not prefix:
            raise DomainError("a continued fraction needs at least a₀")
        if any(a < 1 for a in prefix[1:]):
            raise DomainError(f"partial quotients after a₀ must be >= 1, got {list(prefix)}")
        self.rule = rule
        self.max_bits = max_bits
        self._prefix_len = len(prefix)
        self._quotients: List[int] = []
        self._p: List[int] = []
        self._q: List[int] = []
        self._capped = False
        for a in prefix:
            self._push(int(a))

    def __repr__(self) -> str:
        head = ", ".join(str(a) if a.bit_length() < 64 else f"<{a.bit_length()} bits>" for a in self._quotients[1:6])
        more = ", ..." if self.infinite or len(self._quotients) > 6 else ""
        return f"ContinuedFraction([{self._quotients[0]}; {head}{more}])"

    def _push(self, a: int) -> None:
        # seeds (p_{-1}, q_{-1}) = (1, 0) and (p_{-2}, q_{-2}) = (0, 1)
        history = [(0, 1), (1, 0)] + list(zip(self._p, self._q))
        (p2, q2), (p1, q1) = history[-2], history[-1]
        self._quotients.append(a)
        self._p.append(a * p1 + p2)
        self._q.append(a * q1 + q2)

    def _next_quotient(self) -> Optional[int]:
        index = len(self._quotients)
        rule = self.rule
        if rule is None:
            return None
        if isinstance(rule, PeriodicRule):
            return rule.period[(index - self._prefix_len) % len(rule.period)]
        q_prev = self._q[-1]
        if isinstance(rule, PowerOfTwoRule):
            if q_prev + 1 > self.max_bits:
                return None
            return 1 << q_prev
        exponent = rule.schedule.c(index - 1) * q_prev
        if exponent <= 0:
            return 1
        if float(exponent) * LOG2_E > self.max_bits:
            return None
        return exact_ceil_exp(exponent, self.max_bits)

    @property
    def quotients(self) -> Tuple[int, ...]:
        return tuple(self._quotients)

    @property
    def depth(self) -> int:
        """Index of the deepest materialised quotient."""
        return len(self._quotients) - 1

    @property
    def infinite(self) -> bool:
        return self.rule is not None

    @property
    def capped(self) -> bool:
        return self._capped

    @property
    def proves_liouville(self) -> bool:
        """Whether the generator makes every ‖q_nα‖ beat e^{-c q_n} for every c eventually."""
        rule = self.rule
        if isinstance(rule, PowerOfTwoRule):
            return False
        return isinstance(rule, ExpLiouvilleRule) and rule.schedule.unbounded

    def ensure(self, n: int) -> int:
        """Materialise quotients up to index n when possible; returns the depth reached."""
        while self.depth < n and not self._capped and self.rule is not None:
            a = self._next_quotient()
            if a is None:
                self._capped = True
                logger.info("continued fraction capped at depth %d (next quotient exceeds %d bits)", self.depth, self.max_bits)
                break
            self._push(a)
        return self.depth

    def ensure_denominator(self, bound: int) -> int:
        while self._q[-1] < bound and not self._capped and self.rule is not None:
            self.ensure(self.depth + 1)
        return self.depth

    def convergent(self, n: int) -> Tuple[int, int]:
        """(p_n, q_n)."""
        if n < 0:
            raise DomainError(f"convergent index must be >= 0, got {n}")
        self.ensure(n)
        if n > self.depth:
            raise PrecisionError(f"convergent {n} is beyond the materialised depth {self.depth}")
        return self._p[n], self._q[n]

    def convergents(self) -> List[Tuple[int, int]]:
        return list(zip(self._p, self._q))

    def denominators(self) -> List[int]:
        return list(self._q)

    def enclosure(self) -> Interval:
        """Exact interval containing the value for every admissible tail."""
        p, q = self._p[-1], self._q[-1]
        if not self.infinite:
            return Fraction(p, q), Fraction(p, q)
        p1, q1 = (self._p[-2], self._q[-2]) if len(self._p) > 1 else (1, 0)
        ends = sorted([Fraction(p, q), Fraction(p + p1, q + q1)])
        return ends[0], ends[1]

    @property
    def value(self) -> Fraction:
        if self.infinite:
            raise DomainError("an infinite continued fraction has no rational value")
        return Fraction(self._p[-1], self._q[-1])

    def representative(self) -> Fraction:
        """The deepest convergent p_N/q_N."""
        return Fraction(self._p[-1], self._q[-1])

    def error_interval(self, n: int) -> Interval:
        """Range of |q_n·α - p_n| over the current enclosure."""
        p, q = self.convergent(n)
        lo, hi = self.enclosure()
        ends = sorted([abs(q * lo - p), abs(q * hi - p)])
        if (q * lo - p) * (q * hi - p) <= 0:
            return Fraction(0), ends[1]
        return ends[0], ends[1]

    def descriptor(self) -> Dict[str, object]:
        return {
            "prefix": [str(a) for a in self._quotients[: self._prefix_len]],
            "rule": self.rule.model_dump(mode="json") if self.rule is not None else None,
            "depth": self.depth,
            "capped": self._capped,
            "denominators": [str(q) for q in self._q],
        }


def _expand_rational(x: Fraction) -> List[int]:
    quotients = []
    num, den = x.numerator, x.denominator
    while den:
        a, r = divmod(num, den)
        quotients.append(a)
        num, den = den, r
    return quotients


def _expand_quadratic(x: QuadraticIrrational) -> Tuple[List[int], List[int]]:
    P, D, Q = x.P, x.D, x.Q
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
    root = isqrt(D)
    seen: Dict[Tuple[int, int], int] = {}
    quotients: List[int] = []
    while (P, Q) not in seen:
        seen[(P, Q)] = len(quotients)
        a = (P + root) // Q if Q > 0 else (P + root + 1) // Q
        quotients.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    start = seen[(P, Q)]
    return quotients[:start], quotients[start:]


def cf_expand(x: Union[Fraction, int, str, float, QuadraticIrrational], depth: int = 32) -> ContinuedFraction:
    """Continued fraction of a rational or a quadratic irrational.

    Rationals expand completely (Euclid); quadratic irrationals by exact period detection,
    with at least `depth` quotients materialised.
    """
    if depth < 1:
        raise DomainError(f"depth must be >= 1, got {depth}")
    if isinstance(x, QuadraticIrrational):
        prefix, period = _expand_quadratic(x)
        # a purely periodic expansion stores one period so that a₀ is present
        cf = ContinuedFraction(prefix or period, PeriodicRule(period=period))
        cf.ensure(depth)
        return cf
    return ContinuedFraction(_expand_rational(to_fraction(x)))


def construct_exp_liouville(
    schedule: GrowthSchedule,
    stages: int,
    prefix: Sequence[int] = (0, 2),
    max_bits: int = DEFAULT_MAX_BITS,
) -> ContinuedFraction:
    """Build α with a_{n+1} = ceil(exp(c_n·q_n)), so that ‖q_nα‖ < 1/q_{n+1} <= e^{-c_n q_n}.

    Stages past the materialisation cap are not computed; the result keeps its prefix and
    `capped` is set. A bounded schedule never proves membership in the exponentially
    Liouville set (see `proves_liouville`).
    """
    if stages < 0:
        raise DomainError(f"stages must be >= 0, got {stages}")
    cf = ContinuedFraction(prefix, ExpLiouvilleRule(schedule=schedule), max_bits=max_bits)
    cf.ensure(len(prefix) - 1 + stages)
    if not schedule.unbounded:
        logger.info("growth schedule %s is bounded; witnesses do not prove exponential Liouville membership", schedule)
    return cf


# ============================================================================
# Torus Vectors
# ============================================================================

Component = Union[Fraction, ContinuedFraction]


@dataclass(frozen=True)
class TorusVector:
    """A rotation vector; rational components are reduced to [0, 1)."""

    components: Tuple[Component, ...]

    def __post_init__(self) -> None:
        if not self.components:
            raise DomainError("a torus vector needs at least one component")
        reduced = tuple(c - math.floor(c) if isinstance(c, Fraction) else c for c in self.components)
        object.__setattr__(self, "components", reduced)

    @classmethod
    def of(cls, *components: Union[Component, int, float, str]) -> "TorusVector":
        return cls(tuple(c if isinstance(c, ContinuedFraction) else to_fraction(c) for c in components))

    @property
    def k(self) -> int:
        return len(self.components)

    @property
    def is_rational(self) -> bool:
        return all(not isinstance(c, ContinuedFraction) or not c.infinite for c in self.components)

    def intervals(self) -> List[Interval]:
        """Exact enclosures of each component, reduced mod 1."""
        out = []
        for c in self.components:
            lo, hi = (c, c) if isinstance(c, Fraction) else c.enclosure()
            shift = math.floor(lo)
            out.append((lo - shift, hi - shift))
        return out

    def representative(self) -> Tuple[Fraction, ...]:
        """Exact rationals: the components themselves, or the deepest convergents mod 1."""
        values = []
        for c in self.components:
            value = c if isinstance(c, Fraction) else c.representative()
            values.append(value - math.floor(value))
        return tuple(values)

    def deepen(self, extra: int = 8) -> bool:
        """Materialise more quotients in every infinite component; False if none could grow."""
        grew = False
        for c in self.components:
            if isinstance(c, ContinuedFraction) and c.infinite and not c.capped:
                before = c.depth
                grew |= c.ensure(before + extra) > before
        return grew

    def scaled_norm(self, k: int) -> Interval:
        """torus_norm(k·α) as an exact interval."""
        los, his = [], []
        for lo, hi in self.intervals():
            d_lo, d_hi = circle_norm_interval(k * lo, k * hi)
            los.append(d_lo)
            his.append(d_hi)
        return max(los), max(his)

    def denominator_lists(self) -> List[List[int]]:
        return [c.denominators() if isinstance(c, ContinuedFraction) else [c.denominator] for c in self.components]


def torus_norm(v: Union[TorusVector, Sequence[Union[Fraction, float, int, str]]]) -> Interval:
    """max_i ‖v_i‖ as an exact interval (degenerate for rational vectors)."""
    if not isinstance(v, TorusVector):
        v = TorusVector.of(*v)
    return v.scaled_norm(1)


def _as_torus(alpha: Union[TorusVector, ContinuedFraction, Fraction]) -> TorusVector:
    if isinstance(alpha, TorusVector):
        return alpha
    return TorusVector.of(alpha)


# ============================================================================
# Exponential Liouville Witnesses
# ============================================================================


def _dyadic_upper(value: Fraction, x: Fraction, bits: int) -> Optional[Tuple[int, int]]:
    """Smallest-effort dyadic upper bound num/2^e of value that still certifies < e^-x."""
    extra = 64
    while extra <= 4 * bits:
        e = max(0, value.denominator.bit_length() - value.numerator.bit_length()) + extra
        num = math.ceil(value * (1 << e))
        dyadic = Fraction(num, 1 << e)
        if compare_with_exp_neg(dyadic, dyadic, x, bits) is True:
            return num, e
        extra *= 2
    return None


def _candidates(alpha: TorusVector, k_max: int, full_scan: int) -> List[int]:
    candidates = set(range(1, min(k_max, full_scan) + 1))
    lists = [[q for q in qs if 1 <= q <= k_max] for qs in alpha.denominator_lists()]
    if alpha.k == 1:
        candidates.update(lists[0])
    else:
        for combo in product(*lists):
            k = 1
            for q in combo:
                k = k * q // math.gcd(k, q)
            if k <= k_max:
                candidates.add(k)
            total = math.prod(combo)
            if total <= k_max:
                candidates.add(total)
    return sorted(candidates)


def _decide_witness(vector: TorusVector, k: int, x: Fraction, bits: int) -> Tuple[Optional[bool], Fraction]:
    """Decide ‖kα‖ < e^-x, sharpening the exponential first and the expansion second."""
    while True:
        d_lo, d_hi = vector.scaled_norm(k)
        precision = bits
        while precision <= DEFAULT_MAX_BITS:
            lo, hi = exp_bounds(x, precision)
            if d_hi * hi < 1:
                return True, d_hi
            if d_lo * lo >= 1:
                return False, d_hi
            if d_hi * lo >= 1 and d_lo * hi < 1:
                # the distance interval itself straddles the bound
                break
            precision *= 2
        if not vector.deepen():
            return None, d_hi


def exp_liouville_witnesses(
    alpha: Union[TorusVector, ContinuedFraction],
    c: Union[Fraction, float, int, str],
    k_max: int,
    full_scan: int = FULL_SCAN_LIMIT,
    bits: int = 64,
) -> LiouvilleCertificate:
    """Certified k <= k_max with 0 < ‖kα‖ < e^{-ck}.

    Candidates are every k <= full_scan plus the convergent denominators (component-wise
    products for k >= 2). A candidate the current expansion cannot decide is deepened; if
    that is impossible it is reported in `undecided`.

    Raises:
        DomainError: If α is rational or c is not positive
    """
    vector = _as_torus(alpha)
    c = to_fraction(c)
    if vector.is_rational:
        raise DomainError("rational rotation vectors have ‖kα‖ = 0 for some k and are never exponentially Liouville")
    if c <= 0:
        raise DomainError(f"decay parameter c must be positive, got {c}")
    for comp in vector.components:
        if isinstance(comp, ContinuedFraction):
            comp.ensure_denominator(max(k_max, 2) ** 2 << 32)

    witnesses: List[LiouvilleWitness] = []
    undecided: List[int] = []
    for k in _candidates(vector, k_max, full_scan):
        x = c * k
        verdict, d_hi = _decide_witness(vector, k, x, bits)
        if verdict is None:
            logger.info("Liouville candidate k=%d undecided at the materialised depth", k)
            undecided.append(k)
            continue
        if not verdict:
            continue
        # an irrational component keeps ‖kα‖ > 0 even when the enclosure touches an integer
        dyadic = _dyadic_upper(d_hi, x, bits)
        if dyadic is None:
            undecided.append(k)
            continue
        witnesses.append(
            LiouvilleWitness(k=k, dist_num=dyadic[0], dist_den_log2=dyadic[1], bound_log=-float(x))
        )
    scan = "convergents+full" if vector.k == 1 else f"scan-complete up to k_max={k_max}"
    logger.debug("Liouville scan c=%s k_max=%d: %d witnesses, %d undecided", c, k_max, len(witnesses), len(undecided))
    return LiouvilleCertificate(c=c, k_max=k_max, witnesses=witnesses, undecided=undecided, scan=scan)


def verify_certificate(
    certificate: LiouvilleCertificate, alpha: Union[TorusVector, ContinuedFraction], bits: int = 128
) -> bool:
    """Re-check every witness with a deeper expansion and doubled exponential precision."""
    vector = _as_torus(alpha)
    vector.deepen(4)
    for witness in certificate.witnesses:
        bound = Fraction(witness.dist_num, 1 << witness.dist_den_log2)
        _, d_hi = vector.scaled_norm(witness.k)
        if d_hi > bound:
            return False
        if compare_with_exp_neg(bound, bound, certificate.c * witness.k, 2 * bits) is not True:
            return False
    return True


# ============================================================================
# Equidistribution and Rationality
# ============================================================================


def _component_state(component: Component, n: int) -> Tuple[int, int, Fraction]:
    """(p, q, error) with |α - p/q| <= error, using a convergent deep enough for n iterates."""
    if isinstance(component, Fraction):
        return component.numerator, component.denominator, Fraction(0)
    component.ensure_denominator(n << 40)
    lo, hi = component.enclosure()
    rep = component.representative()
    rep -= math.floor(rep)
    shift = math.floor(lo)
    return rep.numerator, rep.denominator, max(abs(lo - shift - rep), abs(hi - shift - rep))


def equidistribution_density(
    alpha: Union[TorusVector, ContinuedFraction, Fraction],
    eps: Union[Fraction, float, str],
    N: int,
) -> float:
    """#{1 <= j <= N : ‖jα‖ < eps}/N with exact integer arithmetic per term.

    Raises:
        DomainError: If eps is outside (0, 1/2] or N < 1
        PrecisionError: If a term stays undecidable at the materialised depth
    """
    eps = to_fraction(eps)
    if not 0 < eps <= Fraction(1, 2):
        raise DomainError(f"eps must lie in (0, 1/2], got {eps}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    vector = _as_torus(alpha)
    states = [_component_state(comp, N) for comp in vector.components]
    num, den = eps.numerator, eps.denominator
    inside = None
    for p, q, error in states:
        # |‖jα‖ - ‖jp/q‖| <= j·error <= N·error, scaled by q·den
        slack = math.ceil(N * error * q * den)
        hits = []
        r = 0
        for _ in range(N):
            r = (r + p) % q
            dist = min(r, q - r) * den
            target = num * q
            if abs(dist - target) <= slack and slack > 0:
                raise PrecisionError(
                    f"cannot decide ‖jα‖ < {eps} at the materialised depth",
                    {"q": q, "slack": slack},
                )
            hits.append(dist < target)
        inside = hits if inside is None else [a and b for a, b in zip(inside, hits)]
    assert inside is not None
    return sum(inside) / N


def discrepancy_bound(alpha: Union[ContinuedFraction, Fraction], N: int) -> float:
    """(1/N)·Σ_{i <= m+1} a_i for q_m <= N < q_{m+1}; q/N for rational α."""
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if isinstance(alpha, Fraction):
        return alpha.denominator / N
    if not alpha.infinite:
        return alpha.value.denominator / N
    alpha.ensure_denominator(N + 1)
    qs = alpha.denominators()
    if qs[-1] <= N:
        raise PrecisionError(f"expansion capped before a denominator exceeds N={N}")
    m = max(i for i, q in enumerate(qs) if q <= N)
    return sum(alpha.quotients[1 : m + 2]) / N


def is_rational_within(
    x: Union[Interval, Fraction, float, str], q_max: int, tol: Union[float, Fraction]
) -> Optional[Fraction]:
    """A rational p/q with q <= q_max within tol of every point of x, or None."""
    if q_max < 1:
        raise DomainError(f"q_max must be >= 1, got {q_max}")
    lo, hi = x if isinstance(x, tuple) else (to_fraction(x), to_fraction(x))
    lo, hi = to_fraction(lo), to_fraction(hi)
    tol = to_fraction(tol)
    best: Optional[Fraction] = None
    for anchor in ((lo + hi) / 2, lo, hi):
        candidate = anchor.limit_denominator(q_max)
        spread = max(abs(candidate - lo), abs(candidate - hi))
        if spread <= tol and (best is None or candidate.denominator < best.denominator):
            best = candidate
    return best


def random_quadratic(d: int) -> TorusVector:
    """sqrt(d) - floor(sqrt(d)) as a torus vector (d must not be a square)."""
    return TorusVector.of(cf_expand(QuadraticIrrational.sqrt(d)))
