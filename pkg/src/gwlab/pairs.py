"""Finite families of space-time Lebesgue exponent pairs.

A pair (q, r) is wave-admissible when 2 <= q, r <= inf and

    1/q + (n-1)/(2r) <= (n-1)/4,

sharp when equality holds.  Restricting suprema to sharp pairs loses
nothing (frequency-localized Sobolev embedding), so the default family is
the sharp lattice the estimates actually invoke, extended by the endpoint
pairs the definitions need.

The derived variants keep a fixed margin of 1/100 in their defining
inequalities:

* time_integrable: admissible pairs with 1/q + n/r <= 1 - 1/100, the ones
  whose products are integrable in time;
* product / product_t: pairs (q, p >= 1) with
  1/(2q) + (n-1)/(4p) <= (n-1)/4 - 1/100 (product_t adds q >= 2), the
  target exponents reachable by products of two admissible factors;
* holder: Hoelder combinations of an admissible and a time_integrable
  pair (each member carries its witness);
* good / good_t: holder intersected with product / product_t - the pairs
  used for frequency-localized wave products.
"""

import math
from dataclasses import dataclass, field

INF = math.inf
MARGIN = 1.0 / 100.0
_TOL = 1e-9


def inv(x: float) -> float:
    return 0.0 if x == INF else 1.0 / x


@dataclass(frozen=True)
class AdmissiblePair:
    q: float
    r: float

    def key(self):
        return (round(inv(self.q), 9), round(inv(self.r), 9))

    def weight_exponent(self, n: int, j: int) -> float:
        """Exponent of the dyadic weight 2^{k (1/q + n/r - j)}."""
        return inv(self.q) + n * inv(self.r) - j


def is_admissible(q, r, n) -> bool:
    if q < 2 - _TOL or r < 2 - _TOL:
        return False
    return inv(q) + (n - 1) * inv(r) / 2.0 <= (n - 1) / 4.0 + _TOL


def is_sharp_admissible(q, r, n) -> bool:
    if q < 2 - _TOL or r < 2 - _TOL:
        return False
    return abs(inv(q) + (n - 1) * inv(r) / 2.0 - (n - 1) / 4.0) <= _TOL


def in_time_integrable(q, r, n) -> bool:
    return is_admissible(q, r, n) and inv(q) + n * inv(r) <= 1.0 - MARGIN + _TOL


def in_product(q, p, n) -> bool:
    if q < 1 - _TOL or p < 1 - _TOL:
        return False
    return inv(q) / 2.0 + (n - 1) * inv(p) / 4.0 <= (n - 1) / 4.0 - MARGIN + _TOL


def in_product_t(q, p, n) -> bool:
    return q >= 2 - _TOL and in_product(q, p, n)


_PREDICATES = {
    "admissible": is_admissible,
    "sharp": is_sharp_admissible,
    "time_integrable": in_time_integrable,
    "product": in_product,
    "product_t": in_product_t,
}

VARIANTS = ("admissible", "sharp", "time_integrable", "product", "product_t",
            "holder", "good", "good_t")


@dataclass(frozen=True)
class AdmissiblePairFamily:
    n: int
    variant: str
    pairs: tuple
    witnesses: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown pair-family variant {self.variant!r}")
        for p in self.pairs:
            if not self._certify(p):
                raise ValueError(
                    f"pair (q={p.q}, r={p.r}) fails the {self.variant} condition at n={self.n}"
                )

    def _certify(self, p: AdmissiblePair) -> bool:
        if self.variant in _PREDICATES:
            return _PREDICATES[self.variant](p.q, p.r, self.n)
        if self.variant == "holder":
            return p.key() in self.witnesses
        if self.variant == "good":
            return p.key() in self.witnesses and in_product(p.q, p.r, self.n)
        if self.variant == "good_t":
            return p.key() in self.witnesses and in_product_t(p.q, p.r, self.n)
        return False

    def __iter__(self):
        return iter(self.pairs)

    def __len__(self):
        return len(self.pairs)

    def describe(self):
        return {
            "variant": self.variant,
            "n": self.n,
            "pairs": [[p.q, p.r] for p in self.pairs],
        }


def _from_inverse(iq: float, ir: float) -> AdmissiblePair:
    q = INF if iq <= _TOL else 1.0 / iq
    r = INF if ir <= _TOL else 1.0 / ir
    return AdmissiblePair(q, r)


def _sharp_lattice(n: int):
    pairs = []
    for q in (2.0, 4.0, INF):
        ir = 0.5 - 2.0 * inv(q) / (n - 1)
        if -_TOL <= ir <= 0.5 + _TOL:
            pairs.append(_from_inverse(inv(q), max(ir, 0.0)))
    return [p for p in pairs if is_sharp_admissible(p.q, p.r, n)]


def _admissible_lattice(n: int):
    pairs = _sharp_lattice(n)
    for cand in (AdmissiblePair(2.0, INF), AdmissiblePair(INF, INF)):
        if is_admissible(cand.q, cand.r, n):
            pairs.append(cand)
    return _dedupe(pairs)


def _time_integrable_lattice(n: int):
    # endpoint pairs only: these are what the product estimates invoke
    cands = [
        AdmissiblePair(2.0, INF),
        AdmissiblePair(4.0, INF),
        AdmissiblePair(INF, INF),
    ]
    return _dedupe([p for p in cands if in_time_integrable(p.q, p.r, n)])


def _product_lattice(n: int, require_q2: bool):
    cands = _admissible_lattice(n) + [AdmissiblePair(2.0, 2.0), AdmissiblePair(1.0, INF)]
    pred = in_product_t if require_q2 else in_product
    return _dedupe([p for p in cands if pred(p.q, p.r, n)])


def _holder_combinations(n: int):
    pairs, witnesses = [], {}
    for p1 in _admissible_lattice(n):
        for p2 in _time_integrable_lattice(n):
            iq = inv(p1.q) + inv(p2.q)
            ir = inv(p1.r) + inv(p2.r)
            if iq > 1.0 + _TOL or ir > 1.0 + _TOL:
                continue
            pair = _from_inverse(iq, ir)
            if pair.key() not in witnesses:
                witnesses[pair.key()] = ((p1.q, p1.r), (p2.q, p2.r))
                pairs.append(pair)
    return pairs, witnesses


def _dedupe(pairs):
    seen, out = set(), []
    for p in pairs:
        if p.key() not in seen:
            seen.add(p.key())
            out.append(p)
    return out


def enumerate_pairs(n: int, variant: str = "sharp") -> AdmissiblePairFamily:
    """Default finite lattice realizing one exponent family at dimension n."""
    if n < 2:
        raise ValueError("need n >= 2")
    if variant in ("admissible",):
        pairs = _admissible_lattice(n)
        return AdmissiblePairFamily(n, variant, tuple(pairs))
    if variant == "sharp":
        return AdmissiblePairFamily(n, variant, tuple(_sharp_lattice(n)))
    if variant == "time_integrable":
        return AdmissiblePairFamily(n, variant, tuple(_time_integrable_lattice(n)))
    if variant == "product":
        return AdmissiblePairFamily(n, variant, tuple(_product_lattice(n, False)))
    if variant == "product_t":
        return AdmissiblePairFamily(n, variant, tuple(_product_lattice(n, True)))
    if variant in ("holder", "good", "good_t"):
        pairs, wit = _holder_combinations(n)
        if variant == "good":
            pairs = [p for p in pairs if in_product(p.q, p.r, n)]
        elif variant == "good_t":
            pairs = [p for p in pairs if in_product_t(p.q, p.r, n)]
        return AdmissiblePairFamily(n, variant, tuple(pairs), {p.key(): wit[p.key()] for p in pairs})
    raise ValueError(f"unknown pair-family variant {variant!r}")
