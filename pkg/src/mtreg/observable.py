"""States, events and density-represented observables.

Everything here is classical: a state space is a box in R^k, an observable
has measured values in R^d and is described by a density kernel p(x | w)
together with the probability it assigns to events.  Events are finite
disjoint unions of axis-aligned rectangles, which is enough to be closed
under union, intersection and complement.

Internally the kernels work on raw coordinate arrays so that the inference
and simulation loops do not pay for building a ``State`` on every call.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy import integrate

from mtreg.errors import ConstructionError, DomainError, UnsupportedSamplingError

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
QUAD_EPSREL = 1e-10

Coords = np.ndarray
LogDensityKernel = Callable[[np.ndarray, np.ndarray], float]
RectProbKernel = Callable[["Rectangle", np.ndarray], float]
SamplerKernel = Callable[[np.random.Generator, np.ndarray, int], np.ndarray]


# --------------------------------------------------------------------------- #
# State spaces
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class StateSpace:
    """A box in R^k, some of whose coordinates must be strictly positive."""

    bounds: tuple[tuple[float, float], ...]
    positivity_mask: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        mask = tuple(bool(b) for b in self.positivity_mask) or (False,) * len(bounds)
        if len(bounds) < 1:
            raise ConstructionError("a state space needs at least one dimension")
        if len(mask) != len(bounds):
            raise ConstructionError("positivity_mask length differs from bounds")
        for i, (lo, hi) in enumerate(bounds):
            if math.isnan(lo) or math.isnan(hi) or not lo < hi:
                raise ConstructionError(f"empty bound interval on axis {i}: ({lo}, {hi})")
            if mask[i] and lo < 0:
                raise ConstructionError(f"axis {i} is positivity-masked but lower bound {lo} < 0")
        object.__setattr__(self, "bounds", bounds)
        object.__setattr__(self, "positivity_mask", mask)

    @classmethod
    def real(cls, dims: int = 1) -> StateSpace:
        """R^dims with no constraints."""
        return cls(((-math.inf, math.inf),) * dims)

    @classmethod
    def location_scale(cls) -> StateSpace:
        """R x R_+, the (mean, standard deviation) space of the normal family."""
        return cls(((-math.inf, math.inf), (0.0, math.inf)), (False, True))

    @property
    def dims(self) -> int:
        return len(self.bounds)

    def contains(self, coords: Sequence[float]) -> bool:
        if len(coords) != self.dims:
            return False
        for c, (lo, hi), pos in zip(coords, self.bounds, self.positivity_mask):
            if not lo <= c <= hi or (pos and not c > 0):
                return False
        return True

    def state(self, coords: Iterable[float]) -> State:
        return State(tuple(float(c) for c in coords), self)


@dataclass(frozen=True)
class State:
    coords: tuple[float, ...]
    space: StateSpace

    def __post_init__(self) -> None:
        if len(self.coords) != self.space.dims:
            raise DomainError(
                f"state has {len(self.coords)} coordinates, space has {self.space.dims}"
            )
        if not self.space.contains(self.coords):
            raise DomainError(f"state {self.coords} lies outside its state space")

    def __len__(self) -> int:
        return len(self.coords)

    def __getitem__(self, i: int) -> float:
        return self.coords[i]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=float)


def _coords_of(state: State | Sequence[float], space: StateSpace) -> np.ndarray:
    if isinstance(state, State):
        if state.space != space:
            raise DomainError("state belongs to a different state space")
        return np.asarray(state.coords, dtype=float)
    return space.state(state).as_array()


# --------------------------------------------------------------------------- #
# Events
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Interval:
    """A real interval.  Infinite endpoints are always open."""

    lo: float
    hi: float
    lo_closed: bool = True
    hi_closed: bool = True

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise DomainError("interval endpoints must not be NaN")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if math.isinf(lo):
            object.__setattr__(self, "lo_closed", False)
        if math.isinf(hi):
            object.__setattr__(self, "hi_closed", False)

    @classmethod
    def real(cls) -> Interval:
        return cls(-math.inf, math.inf)

    @classmethod
    def closed(cls, lo: float, hi: float) -> Interval:
        return cls(lo, hi, True, True)

    @classmethod
    def open(cls, lo: float, hi: float) -> Interval:
        return cls(lo, hi, False, False)

    @classmethod
    def at_most(cls, hi: float) -> Interval:
        """(-inf, hi]"""
        return cls(-math.inf, hi, False, True)

    @classmethod
    def less_than(cls, hi: float) -> Interval:
        return cls(-math.inf, hi, False, False)

    @classmethod
    def at_least(cls, lo: float) -> Interval:
        return cls(lo, math.inf, True, False)

    @classmethod
    def greater_than(cls, lo: float) -> Interval:
        return cls(lo, math.inf, False, False)

    @property
    def is_empty(self) -> bool:
        if self.lo > self.hi:
            return True
        if self.lo == self.hi:
            return not (self.lo_closed and self.hi_closed)
        return False

    def contains(self, v: float) -> bool:
        above = v >= self.lo if self.lo_closed else v > self.lo
        below = v <= self.hi if self.hi_closed else v < self.hi
        return above and below

    def contains_many(self, v: np.ndarray) -> np.ndarray:
        above = v >= self.lo if self.lo_closed else v > self.lo
        below = v <= self.hi if self.hi_closed else v < self.hi
        return above & below

    def intersect(self, other: Interval) -> Interval:
        if self.lo > other.lo:
            lo, lo_closed = self.lo, self.lo_closed
        elif other.lo > self.lo:
            lo, lo_closed = other.lo, other.lo_closed
        else:
            lo, lo_closed = self.lo, self.lo_closed and other.lo_closed
        if self.hi < other.hi:
            hi, hi_closed = self.hi, self.hi_closed
        elif other.hi < self.hi:
            hi, hi_closed = other.hi, other.hi_closed
        else:
            hi, hi_closed = self.hi, self.hi_closed and other.hi_closed
        return Interval(lo, hi, lo_closed, hi_closed)

    def complement(self) -> list[Interval]:
        """Pieces of R not in this interval (at most two)."""
        if self.is_empty:
            return [Interval.real()]
        out = []
        left = Interval(-math.inf, self.lo, False, not self.lo_closed)
        right = Interval(self.hi, math.inf, not self.hi_closed, False)
        for piece in (left, right):
            if not piece.is_empty:
                out.append(piece)
        return out


@dataclass(frozen=True)
class Rectangle:
    sides: tuple[Interval, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "sides", tuple(self.sides))
        if not self.sides:
            raise DomainError("a rectangle needs at least one side")

    @classmethod
    def whole(cls, dim: int) -> Rectangle:
        return cls((Interval.real(),) * dim)

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def is_empty(self) -> bool:
        return any(s.is_empty for s in self.sides)

    def intersect(self, other: Rectangle) -> Rectangle:
        return Rectangle(tuple(a.intersect(b) for a, b in zip(self.sides, other.sides)))

    def minus(self, other: Rectangle) -> list[Rectangle]:
        """Disjoint rectangles covering ``self \\ other``."""
        if self.is_empty:
            return []
        common = self.intersect(other)
        if common.is_empty:
            return [self]
        pieces = []
        # Peel one axis at a time: earlier axes pinned to the overlap, the
        # current axis outside it, later axes free.
        for k in range(self.dim):
            for outside in other.sides[k].complement():
                side = self.sides[k].intersect(outside)
                if side.is_empty:
                    continue
                sides = common.sides[:k] + (side,) + self.sides[k + 1 :]
                pieces.append(Rectangle(sides))
        return pieces

    def slice(self, start: int, stop: int) -> Rectangle:
        return Rectangle(self.sides[start:stop])

    def contains(self, point: Sequence[float]) -> bool:
        return all(s.contains(v) for s, v in zip(self.sides, point))

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        mask = np.ones(points.shape[0], dtype=bool)
        for k, s in enumerate(self.sides):
            mask &= s.contains_many(points[:, k])
        return mask


@dataclass(frozen=True)
class Event:
    """A finite union of rectangles, stored in pairwise-disjoint form."""

    dim: int
    rectangles: tuple[Rectangle, ...] = ()

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise DomainError("event dimension must be positive")
        disjoint: list[Rectangle] = []
        for rect in self.rectangles:
            if rect.dim != self.dim:
                raise DomainError(f"rectangle of dim {rect.dim} in an event of dim {self.dim}")
            pieces = [] if rect.is_empty else [rect]
            for kept in disjoint:
                pieces = [q for p in pieces for q in p.minus(kept)]
                if not pieces:
                    break
            disjoint.extend(pieces)
        object.__setattr__(self, "rectangles", tuple(disjoint))

    @classmethod
    def whole(cls, dim: int) -> Event:
        return cls(dim, (Rectangle.whole(dim),))

    @classmethod
    def empty(cls, dim: int) -> Event:
        return cls(dim, ())

    @classmethod
    def box(cls, *sides: Interval) -> Event:
        """The single rectangle with the given sides."""
        return cls(len(sides), (Rectangle(sides),))

    @property
    def is_empty(self) -> bool:
        return not self.rectangles

    def union(self, other: Event) -> Event:
        self._check_dim(other)
        return Event(self.dim, self.rectangles + other.rectangles)

    def intersection(self, other: Event) -> Event:
        self._check_dim(other)
        return Event(
            self.dim,
            tuple(a.intersect(b) for a in self.rectangles for b in other.rectangles),
        )

    def complement(self) -> Event:
        pieces = [Rectangle.whole(self.dim)]
        for rect in self.rectangles:
            pieces = [q for p in pieces for q in p.minus(rect)]
        return Event(self.dim, tuple(pieces))

    def difference(self, other: Event) -> Event:
        return self.intersection(other.complement())

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def __invert__(self) -> Event:
        return self.complement()

    def contains(self, point: Sequence[float] | float) -> bool:
        if np.ndim(point) == 0:
            point = (float(point),)
        return any(r.contains(point) for r in self.rectangles)

    def contains_many(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=float).reshape(-1, self.dim)
        mask = np.zeros(points.shape[0], dtype=bool)
        for r in self.rectangles:
            mask |= r.contains_many(points)
        return mask

    def _check_dim(self, other: Event) -> None:
        if other.dim != self.dim:
            raise DomainError(f"event dimensions differ: {self.dim} vs {other.dim}")


# --------------------------------------------------------------------------- #
# Observables
# --------------------------------------------------------------------------- #


class ObservableKind(str, enum.Enum):
    NORMAL = "normal"
    PRODUCT = "product"
    IMAGE = "image"
    PULLBACK = "pullback"
    COMPOSITE = "composite"
    CUSTOM = "custom"


@dataclass(frozen=True, eq=False)
class Observable:
    """Measured values in R^value_dim, distributed by a density over a state space.

    Construct through the builder functions of this module or
    ``mtreg.causality``; the kernel fields take raw coordinate arrays.
    ``rect_prob`` may be omitted, in which case rectangle probabilities are
    obtained by adaptive quadrature of the density.
    """

    value_dim: int
    state_space: StateSpace
    kind: ObservableKind
    log_density_kernel: LogDensityKernel | None
    rect_prob_kernel: RectProbKernel | None = None
    sampler_kernel: SamplerKernel | None = None
    event_estimator: Callable[[Event, np.ndarray], tuple[float, float]] | None = None
    parts: tuple[Observable, ...] = ()
    info: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.value_dim < 1:
            raise ConstructionError("value_dim must be positive")
        if self.log_density_kernel is None and self.rect_prob_kernel is None \
                and self.event_estimator is None:
            raise ConstructionError("an observable needs a density, rectangle probabilities or an estimator")

    # -- density ---------------------------------------------------------- #

    def log_density(self, x: Sequence[float], state: State | Sequence[float]) -> float:
        if self.log_density_kernel is None:
            raise DomainError(f"{self.kind.value} observable has no density")
        return self.log_density_kernel(self._value(x), _coords_of(state, self.state_space))

    def density(self, x: Sequence[float], state: State | Sequence[float]) -> float:
        return math.exp(self.log_density(x, state))

    # -- probabilities ---------------------------------------------------- #

    def event_prob(self, event: Event, state: State | Sequence[float]) -> float:
        """[F(event)](state), clipped into [0, 1]."""
        return self.event_prob_with_error(event, state)[0]

    def event_prob_with_error(
        self, event: Event, state: State | Sequence[float]
    ) -> tuple[float, float]:
        """Probability of ``event`` and its standard error (0 when exact)."""
        if event.dim != self.value_dim:
            raise DomainError(f"event of dim {event.dim} for an observable of dim {self.value_dim}")
        w = _coords_of(state, self.state_space)
        return self._event_prob_coords(event, w)

    def _event_prob_coords(self, event: Event, w: np.ndarray) -> tuple[float, float]:
        if self.event_estimator is not None and self.rect_prob_kernel is None \
                and self.log_density_kernel is None:
            return self.event_estimator(event, w)
        p = math.fsum(self.rect_prob(r, w) for r in event.rectangles)
        return min(max(p, 0.0), 1.0), 0.0

    def rect_prob(self, rect: Rectangle, w: np.ndarray) -> float:
        if rect.is_empty:
            return 0.0
        if self.rect_prob_kernel is not None:
            return self.rect_prob_kernel(rect, w)
        if self.log_density_kernel is not None:
            return _quad_rect(self.log_density_kernel, rect, w)
        return self.event_estimator(Event(rect.dim, (rect,)), w)[0]

    # -- sampling --------------------------------------------------------- #

    @property
    def has_sampler(self) -> bool:
        return self.sampler_kernel is not None

    def _value(self, x: Sequence[float]) -> np.ndarray:
        arr = np.asarray(x, dtype=float).reshape(-1)
        if arr.shape[0] != self.value_dim:
            raise DomainError(f"measured value has length {arr.shape[0]}, expected {self.value_dim}")
        return arr


def _quad_rect(log_density: LogDensityKernel, rect: Rectangle, w: np.ndarray) -> float:
    def integrand(*xs: float) -> float:
        return math.exp(log_density(np.asarray(xs), w))

    ranges = [(s.lo, s.hi) for s in rect.sides]
    if rect.dim == 1:
        value, _ = integrate.quad(integrand, *ranges[0], epsabs=0.0, epsrel=QUAD_EPSREL, limit=200)
    else:
        value, _ = integrate.nquad(integrand, ranges, opts={"epsabs": 0.0, "epsrel": QUAD_EPSREL})
    return value


# -- normal ---------------------------------------------------------------- #


def _std_normal_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def normal_interval_prob(iv: Interval, mean: float, sd: float) -> float:
    """P(lo <= X <= hi) for X ~ N(mean, sd^2) in closed form."""
    if iv.is_empty:
        return 0.0
    zlo = (iv.lo - mean) / sd
    zhi = (iv.hi - mean) / sd
    # Work in the tail where the cdf difference does not cancel.
    if zlo >= 0.0:
        return _std_normal_cdf(-zlo) - _std_normal_cdf(-zhi)
    return _std_normal_cdf(zhi) - _std_normal_cdf(zlo)


def make_normal_observable(
    sigma: float | None = None,
    *,
    sigma_index: int | None = None,
    mean_index: int = 0,
    space: StateSpace | None = None,
) -> Observable:
    """Normal observable on X = R.

    Give exactly one of ``sigma`` (fixed standard deviation) or
    ``sigma_index`` (the state coordinate holding the standard deviation,
    which must be positivity-masked).  The mean is read from coordinate
    ``mean_index``.  Without an explicit ``space`` the state space is R for
    fixed sigma and R x R_+ otherwise.
    """
    if (sigma is None) == (sigma_index is None):
        raise ConstructionError("give exactly one of sigma or sigma_index")
    if sigma is not None:
        sigma = float(sigma)
        if not sigma > 0 or math.isinf(sigma):
            raise DomainError(f"fixed sigma must be positive and finite, got {sigma}")
        space = space or StateSpace.real(1)
    else:
        space = space or StateSpace.location_scale()
        if not 0 <= sigma_index < space.dims:
            raise ConstructionError(f"sigma_index {sigma_index} out of range for {space.dims} dims")
        if not space.positivity_mask[sigma_index]:
            raise ConstructionError(f"state coordinate {sigma_index} is not positivity-masked")
    if not 0 <= mean_index < space.dims:
        raise ConstructionError(f"mean_index {mean_index} out of range for {space.dims} dims")

    fixed = sigma

    def params(w: np.ndarray) -> tuple[float, float]:
        return float(w[mean_index]), (fixed if fixed is not None else float(w[sigma_index]))

    def log_density(x: np.ndarray, w: np.ndarray) -> float:
        mu, sd = params(w)
        z = (float(x[0]) - mu) / sd
        return -0.5 * z * z - math.log(sd) - _LOG_SQRT_2PI

    def rect_prob(rect: Rectangle, w: np.ndarray) -> float:
        mu, sd = params(w)
        return normal_interval_prob(rect.sides[0], mu, sd)

    def sampler(rng: np.random.Generator, w: np.ndarray, count: int) -> np.ndarray:
        mu, sd = params(w)
        return rng.normal(mu, sd, size=(count, 1))

    return Observable(
        value_dim=1,
        state_space=space,
        kind=ObservableKind.NORMAL,
        log_density_kernel=log_density,
        rect_prob_kernel=rect_prob,
        sampler_kernel=sampler,
        info={"params": params, "mean_index": mean_index, "sigma": sigma, "sigma_index": sigma_index},
    )


# -- product --------------------------------------------------------------- #


def product_observable(parts: Sequence[Observable], *, kind: ObservableKind = ObservableKind.PRODUCT) -> Observable:
    """Simultaneous observable: values concatenated, probabilities multiplied.

    On a rectangle E_1 x ... x E_K the probability is the product of the
    part probabilities; events that are unions of rectangles sum over their
    disjoint pieces.
    """
    parts = tuple(parts)
    if not parts:
        raise ConstructionError("product_observable needs at least one part")
    space = parts[0].state_space
    for i, p in enumerate(parts[1:], start=1):
        if p.state_space != space:
            raise ConstructionError(f"part {i} is defined on a different state space")

    offsets = [0]
    for p in parts:
        offsets.append(offsets[-1] + p.value_dim)
    dim = offsets[-1]
    spans = list(zip(offsets[:-1], offsets[1:]))

    iid_normal = all(p is parts[0] for p in parts) and parts[0].kind is ObservableKind.NORMAL
    with_density = all(p.log_density_kernel is not None for p in parts)

    if iid_normal:
        params = parts[0].info["params"]
        n = len(parts)

        def log_density(x: np.ndarray, w: np.ndarray) -> float:
            mu, sd = params(w)
            z = (x - mu) / sd
            return float(-0.5 * np.dot(z, z) - n * (math.log(sd) + _LOG_SQRT_2PI))

    elif with_density:

        def log_density(x: np.ndarray, w: np.ndarray) -> float:
            return math.fsum(p.log_density_kernel(x[a:b], w) for p, (a, b) in zip(parts, spans))

    else:
        log_density = None

    def rect_prob(rect: Rectangle, w: np.ndarray) -> float:
        prob = 1.0
        for p, (a, b) in zip(parts, spans):
            prob *= p.rect_prob(rect.slice(a, b), w)
            if prob == 0.0:
                break
        return prob

    sampler = None
    if iid_normal:
        params = parts[0].info["params"]
        n = len(parts)

        def sampler(rng: np.random.Generator, w: np.ndarray, count: int) -> np.ndarray:
            mu, sd = params(w)
            return rng.normal(mu, sd, size=(count, n))

    elif all(p.has_sampler for p in parts):

        def sampler(rng: np.random.Generator, w: np.ndarray, count: int) -> np.ndarray:
            return np.hstack([p.sampler_kernel(rng, w, count) for p in parts])

    return Observable(
        value_dim=dim,
        state_space=space,
        kind=kind,
        log_density_kernel=log_density,
        rect_prob_kernel=rect_prob,
        sampler_kernel=sampler,
        parts=parts,
        info={"iid_normal": iid_normal},
    )


# -- image ----------------------------------------------------------------- #


def identity(x: np.ndarray) -> np.ndarray:
    """The identity map on measured values."""
    return x


def sample_mean(x: np.ndarray) -> np.ndarray:
    """Average of the measured coordinates; recognised by ``image_observable``."""
    return np.mean(np.atleast_2d(x), axis=-1, keepdims=True)


def image_observable(
    base: Observable,
    value_map: Callable[[np.ndarray], np.ndarray],
    *,
    image_dim: int | None = None,
    density: Callable[[np.ndarray, State], float] | None = None,
    sampling: bool = False,
    mc_samples: int = 100_000,
    mc_seed: int = 0,
) -> Observable:
    """Image of ``base`` under ``value_map``: probability of E is base's of map^-1(E).

    Closed forms are used for ``identity`` and for ``sample_mean`` over an
    n-fold normal (the mean of n iid N(mu, s^2) draws is N(mu, s^2/n)).
    Otherwise supply the image ``density`` or set ``sampling=True``, in
    which case probabilities are Monte Carlo estimates over ``mc_samples``
    draws seeded with ``mc_seed`` and carry a standard error.
    """
    if value_map is identity:
        return Observable(
            value_dim=base.value_dim,
            state_space=base.state_space,
            kind=ObservableKind.IMAGE,
            log_density_kernel=base.log_density_kernel,
            rect_prob_kernel=lambda rect, w: base.rect_prob(rect, w),
            sampler_kernel=base.sampler_kernel,
            event_estimator=base.event_estimator,
            parts=(base,),
            info={"map": "identity"},
        )

    sampler = None
    if base.has_sampler:

        def sampler(rng: np.random.Generator, w: np.ndarray, count: int) -> np.ndarray:
            return np.asarray(value_map(base.sampler_kernel(rng, w, count)), dtype=float).reshape(count, -1)

    if value_map is sample_mean and base.info.get("iid_normal"):
        params = base.parts[0].info["params"]
        root_n = math.sqrt(len(base.parts))

        def log_density(x: np.ndarray, w: np.ndarray) -> float:
            mu, sd = params(w)
            sd /= root_n
            z = (float(x[0]) - mu) / sd
            return -0.5 * z * z - math.log(sd) - _LOG_SQRT_2PI

        def rect_prob(rect: Rectangle, w: np.ndarray) -> float:
            mu, sd = params(w)
            return normal_interval_prob(rect.sides[0], mu, sd / root_n)

        return Observable(
            value_dim=1,
            state_space=base.state_space,
            kind=ObservableKind.IMAGE,
            log_density_kernel=log_density,
            rect_prob_kernel=rect_prob,
            sampler_kernel=sampler,
            parts=(base,),
            info={"map": "sample_mean", "params": lambda w: (params(w)[0], params(w)[1] / root_n)},
        )

    if density is not None:
        if image_dim is None:
            raise ConstructionError("image_dim is required with a supplied density")
        space = base.state_space

        def log_density(x: np.ndarray, w: np.ndarray) -> float:
            value = density(x, space.state(w))
            return math.log(value) if value > 0 else -math.inf

        return Observable(
            value_dim=image_dim,
            state_space=space,
            kind=ObservableKind.IMAGE,
            log_density_kernel=log_density,
            sampler_kernel=sampler,
            parts=(base,),
            info={"map": "custom"},
        )

    if sampling:
        if sampler is None:
            raise UnsupportedSamplingError("sampling-only image needs a base observable with a sampler")
        if image_dim is None:
            probe = sampler(np.random.default_rng(mc_seed), _interior_point(base.state_space), 1)
            image_dim = probe.shape[1]

        def estimate(event: Event, w: np.ndarray) -> tuple[float, float]:
            values = sampler(np.random.default_rng(mc_seed), w, mc_samples)
            p = float(np.mean(event.contains_many(values)))
            return p, math.sqrt(p * (1.0 - p) / mc_samples)

        return Observable(
            value_dim=image_dim,
            state_space=base.state_space,
            kind=ObservableKind.IMAGE,
            log_density_kernel=None,
            sampler_kernel=sampler,
            event_estimator=estimate,
            parts=(base,),
            info={"map": "sampled", "mc_samples": mc_samples},
        )

    raise ConstructionError("image_observable needs a closed form, a density, or sampling=True")


def _interior_point(space: StateSpace) -> np.ndarray:
    point = []
    for (lo, hi), pos in zip(space.bounds, space.positivity_mask):
        if math.isfinite(lo) and math.isfinite(hi):
            point.append(0.5 * (lo + hi))
        elif math.isfinite(lo):
            point.append(lo + 1.0)
        elif math.isfinite(hi):
            point.append(hi - 1.0)
        else:
            point.append(1.0 if pos else 0.0)
    return np.asarray(point)


# -- sampling -------------------------------------------------------------- #


def sample_measurement(
    obs: Observable, state: State | Sequence[float], rng_seed: int, count: int
) -> np.ndarray:
    """Draw ``count`` iid measured values at ``state``; shape (count, value_dim).

    The output depends only on the arguments: each call builds its own
    generator from ``rng_seed``.
    """
    if count < 1:
        raise DomainError(f"count must be positive, got {count}")
    if not obs.has_sampler:
        raise UnsupportedSamplingError(f"{obs.kind.value} observable has no sampler")
    w = _coords_of(state, obs.state_space)
    rng = np.random.default_rng(rng_seed)
    return obs.sampler_kernel(rng, w, count)
