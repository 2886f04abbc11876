"""Sites, volumes, configurations, filtrations and neighborhood systems.

Everything here is an immutable value; all operations are pure. The
infinite lattice is represented only through a finite "window" volume
declared per experiment, and complements are always taken relative to
that window.
"""

from __future__ import annotations

import os
from bisect import bisect_left
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

Site = tuple  # tuple[int, ...], length = lattice dimension
Symbol = object  # hashable alphabet element, typically a small int

DEFAULT_ENUM_CAP = 2**24


class DomainError(ValueError):
    """A configuration or volume was used outside its domain."""


class CapacityError(RuntimeError):
    """An enumeration would exceed the configured cap."""


class GeometryError(ValueError):
    """A site or volume does not fit the required window geometry."""


def enumeration_cap() -> int:
    """Current enumeration cap; override with env var GFL_ENUM_CAP."""
    raw = os.environ.get("GFL_ENUM_CAP")
    return int(raw) if raw else DEFAULT_ENUM_CAP


def as_site(value) -> Site:
    """Normalize an int or coordinate sequence to a site tuple."""
    if isinstance(value, int):
        return (value,)
    site = tuple(int(c) for c in value)
    if not site:
        raise ValueError("a site needs at least one coordinate")
    return site


@dataclass(frozen=True)
class Volume:
    """Finite set of lattice sites in canonical (lexicographic) order."""

    sites: tuple

    @staticmethod
    def of(sites: Iterable) -> "Volume":
        canonical = tuple(sorted({as_site(s) for s in sites}))
        dims = {len(s) for s in canonical}
        if len(dims) > 1:
            raise ValueError(f"sites of mixed dimension: {sorted(dims)}")
        return Volume(canonical)

    @staticmethod
    def empty() -> "Volume":
        return _EMPTY_VOLUME

    @property
    def dim(self) -> int | None:
        return len(self.sites[0]) if self.sites else None

    def __len__(self) -> int:
        return len(self.sites)

    def __bool__(self) -> bool:
        return bool(self.sites)

    def __iter__(self) -> Iterator[Site]:
        return iter(self.sites)

    def __contains__(self, site) -> bool:
        site = as_site(site)
        i = bisect_left(self.sites, site)
        return i < len(self.sites) and self.sites[i] == site

    def index(self, site: Site) -> int:
        i = bisect_left(self.sites, site)
        if i == len(self.sites) or self.sites[i] != site:
            raise KeyError(site)
        return i

    def union(self, other: "Volume") -> "Volume":
        return Volume(tuple(sorted(set(self.sites) | set(other.sites))))

    def difference(self, other: "Volume") -> "Volume":
        removed = set(other.sites)
        return Volume(tuple(s for s in self.sites if s not in removed))

    def intersection(self, other: "Volume") -> "Volume":
        kept = set(other.sites)
        return Volume(tuple(s for s in self.sites if s in kept))

    def issubset(self, other: "Volume") -> bool:
        return set(self.sites) <= set(other.sites)

    def isdisjoint(self, other: "Volume") -> bool:
        return set(self.sites).isdisjoint(other.sites)

    __or__ = union
    __sub__ = difference
    __and__ = intersection

    def __str__(self) -> str:
        return ";".join(format_site(s) for s in self.sites)


_EMPTY_VOLUME = Volume(())


def volume(*sites) -> Volume:
    """Shorthand: ``volume(0, 1, 2)`` or ``volume((0, 0), (0, 1))``."""
    return Volume.of(sites)


@dataclass(frozen=True)
class Alphabet:
    """Ordered finite symbol set with a printable name per symbol."""

    symbols: tuple
    names: tuple

    @staticmethod
    def of(symbols: Sequence, names: Sequence[str] | None = None) -> "Alphabet":
        symbols = tuple(symbols)
        if len(set(symbols)) != len(symbols):
            raise ValueError("duplicate symbols")
        if len(symbols) < 2:
            raise ValueError("an alphabet needs at least two symbols")
        if names is None:
            names = tuple(str(s) for s in symbols)
        else:
            names = tuple(names)
            if len(names) != len(symbols):
                raise ValueError("names/symbols length mismatch")
        return Alphabet(symbols, names)

    @property
    def size(self) -> int:
        return len(self.symbols)

    def index(self, symbol) -> int:
        return self.symbols.index(symbol)

    def name_of(self, symbol) -> str:
        return self.names[self.symbols.index(symbol)]

    def symbol_of(self, name: str):
        return self.symbols[self.names.index(name)]


def binary_alphabet() -> Alphabet:
    return Alphabet.of((0, 1))


def spin_alphabet() -> Alphabet:
    return Alphabet.of((-1, 1), ("-1", "+1"))


@dataclass(frozen=True)
class Configuration:
    """Assignment of one symbol to each site of a finite volume."""

    volume: Volume
    symbols: tuple  # parallel to volume.sites

    def __post_init__(self):
        if len(self.symbols) != len(self.volume):
            raise ValueError("one symbol per site required")

    @property
    def domain(self) -> Volume:
        return self.volume

    def __len__(self) -> int:
        return len(self.symbols)

    def __getitem__(self, site):
        return self.symbols[self.volume.index(as_site(site))]

    def items(self) -> Iterator[tuple]:
        return zip(self.volume.sites, self.symbols)

    def count(self, symbol) -> int:
        return self.symbols.count(symbol)

    def __str__(self) -> str:
        return ";".join(f"{format_site(s)}={v}" for s, v in self.items())


EMPTY_CONFIGURATION = Configuration(Volume.empty(), ())


def configuration(assignment: Mapping) -> Configuration:
    """Build a configuration from a site → symbol mapping."""
    pairs = sorted((as_site(s), v) for s, v in assignment.items())
    return Configuration(Volume(tuple(s for s, _ in pairs)), tuple(v for _, v in pairs))


def concat(a: Configuration, b: Configuration) -> Configuration:
    """Join two configurations on disjoint volumes into one on the union."""
    if not a.volume.isdisjoint(b.volume):
        overlap = a.volume & b.volume
        raise DomainError(f"domains overlap on {overlap}")
    merged = sorted(list(a.items()) + list(b.items()))
    return Configuration(
        Volume(tuple(s for s, _ in merged)), tuple(v for _, v in merged)
    )


def restrict(c: Configuration, T: Volume) -> Configuration:
    """Restriction of a configuration to a sub-volume."""
    if not T.issubset(c.volume):
        raise DomainError(f"{T - c.volume} not in the configuration's domain")
    return Configuration(T, tuple(c.symbols[c.volume.index(s)] for s in T))


@lru_cache(maxsize=8192)
def _enumerate(volume: Volume, alphabet: Alphabet) -> tuple:
    return tuple(
        Configuration(volume, symbols)
        for symbols in product(alphabet.symbols, repeat=len(volume))
    )


def enumerate_configurations(volume: Volume, alphabet: Alphabet) -> tuple:
    """All configurations on the volume, lexicographic in site-major order.

    The first configuration assigns the alphabet's first symbol everywhere.
    Raises CapacityError when the count would exceed the enumeration cap.
    """
    count = alphabet.size ** len(volume)
    cap = enumeration_cap()
    if count > cap:
        raise CapacityError(
            f"enumeration of {count} configurations exceeds cap {cap}"
        )
    return _enumerate(volume, alphabet)


@dataclass(frozen=True)
class Filtration:
    """Strictly increasing sequence of finite volumes; union is the window."""

    volumes: tuple

    def __post_init__(self):
        if not self.volumes:
            raise ValueError("a filtration needs at least one stage")
        for a, b in zip(self.volumes, self.volumes[1:]):
            if not (a.issubset(b) and len(a) < len(b)):
                raise ValueError("stages must strictly increase by inclusion")

    @property
    def window(self) -> Volume:
        return self.volumes[-1]

    def __len__(self) -> int:
        return len(self.volumes)

    def __iter__(self) -> Iterator[Volume]:
        return iter(self.volumes)

    def __getitem__(self, n: int) -> Volume:
        return self.volumes[n]


def box_volume(center, radius: int, window: Volume | None = None) -> Volume:
    """L-infinity ball of the given radius around a center site."""
    center = as_site(center)
    ranges = [range(c - radius, c + radius + 1) for c in center]
    sites = [tuple(p) for p in product(*ranges)]
    vol = Volume.of(sites)
    if window is not None:
        vol = vol & window
    return vol


def box_filtration(center, radii: Sequence[int], window: Volume | None = None) -> Filtration:
    """Filtration of L-infinity balls with strictly increasing radii."""
    radii = list(radii)
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError(f"radii must strictly increase: {radii}")
    return Filtration(tuple(box_volume(center, r, window) for r in radii))


def interval_filtration(center, spans: Sequence[tuple]) -> Filtration:
    """1D filtration of intervals [center-lo, center+hi] per (lo, hi) span."""
    (c,) = as_site(center)
    stages = []
    for lo, hi in spans:
        stages.append(Volume.of(range(c - lo, c + hi + 1)))
    return Filtration(tuple(stages))


def line_window(n_sites: int, center: int = 0) -> Volume:
    """1D window of n sites, centered (lopsided right for even n)."""
    lo = center - (n_sites - 1) // 2
    return Volume.of(range(lo, lo + n_sites))


def grid_window(nx: int, ny: int) -> Volume:
    """2D window of nx * ny sites around the origin."""
    lox = -(nx - 1) // 2
    loy = -(ny - 1) // 2
    return Volume.of((x, y) for x in range(lox, lox + nx) for y in range(loy, loy + ny))


@dataclass(frozen=True)
class NeighborhoodSystem:
    """Symmetric, irreflexive site → neighbor-volume map."""

    neighbors: tuple  # sorted tuple of (site, Volume) pairs

    @staticmethod
    def of(mapping: Mapping) -> "NeighborhoodSystem":
        items = tuple(sorted((as_site(s), v) for s, v in mapping.items()))
        system = NeighborhoodSystem(items)
        system.validate()
        return system

    def volume_at(self, site) -> Volume:
        site = as_site(site)
        for s, v in self.neighbors:
            if s == site:
                return v
        raise KeyError(site)

    def validate(self) -> None:
        table = dict(self.neighbors)
        for t, vol in self.neighbors:
            if t in vol:
                raise ValueError(f"site {t} is its own neighbor")
            for s in vol:
                if s in table and t not in table[s]:
                    raise ValueError(f"asymmetric neighborhood between {t} and {s}")


def nearest_neighbor_system(window: Volume) -> NeighborhoodSystem:
    """L1-distance-1 neighborhoods, truncated to the window."""
    mapping = {}
    for t in window:
        near = []
        for axis in range(len(t)):
            for step in (-1, 1):
                s = t[:axis] + (t[axis] + step,) + t[axis + 1 :]
                if s in window:
                    near.append(s)
        mapping[t] = Volume.of(near) if near else Volume.empty()
    return NeighborhoodSystem.of(mapping)


def format_site(site: Site) -> str:
    return "(" + ",".join(str(c) for c in site) + ")"


def parse_site(text: str) -> Site:
    text = text.strip()
    if not (text.startswith("(") and text.endswith(")")):
        raise ValueError(f"bad site literal: {text!r}")
    return tuple(int(c) for c in text[1:-1].split(","))


def format_configuration(c: Configuration, alphabet: Alphabet) -> str:
    """Render as `site=symbol` pairs, e.g. ``(0,0)=+1;(0,1)=-1``."""
    return ";".join(
        f"{format_site(s)}={alphabet.name_of(v)}" for s, v in c.items()
    )


def parse_configuration(text: str, alphabet: Alphabet) -> Configuration:
    text = text.strip()
    if not text:
        return EMPTY_CONFIGURATION
    assignment = {}
    for chunk in text.split(";"):
        lhs, _, rhs = chunk.partition("=")
        site = parse_site(lhs)
        if site in assignment:
            raise ValueError(f"site {lhs.strip()} assigned twice")
        assignment[site] = alphabet.symbol_of(rhs.strip())
    return configuration(assignment)
