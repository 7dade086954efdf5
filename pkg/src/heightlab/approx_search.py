"""Best rational approximation under a height budget.

Two independent routes compute the same answer: a certified brute-force
enumeration over denominator tuples, and a fast route built on per-coordinate
best-approximation tables.  Both resolve every comparison exactly: floating
point only prefilters, and the winner set plus tie-break order come from
interval refinement or rational arithmetic.

Tie-break everywhere: smallest numerator vector (lexicographic), then
smallest denominator vector.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iter_product
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .cf_engine import ConvergentCursor
from .errors import CapExceededError, PrecisionExhaustedError, UnboundedSearchError
from .heights import HeightKind, HeightValue, height, iroot
from .numerics import Interval, RealTarget, refine

DEFAULT_ENUM_CAP = 10 ** 7
_CHUNK = 500_000
# certified record errors: relative width <= 2^-40 and bounded away from 0
_REL_WIDTH_BITS = 40
# absorb float rounding slop in prefilters; exact phase re-decides everything
_SLOP = 1e-13


@dataclass(frozen=True)
class Budget:
    kind: HeightKind
    bound: HeightValue

    def __post_init__(self) -> None:
        if not isinstance(self.kind, HeightKind):
            raise TypeError("kind must be a HeightKind")
        if not isinstance(self.bound, HeightValue):
            raise TypeError("bound must be a HeightValue")


@dataclass(frozen=True)
class ApproxRecord:
    point: Tuple[Fraction, ...]
    error: Interval
    height: HeightValue


# ---------------------------------------------------------------------------
# certified error atoms


class _Atom:
    """|target - frac| as a refinable certified quantity."""

    __slots__ = ("target", "frac", "exact")

    def __init__(self, target: RealTarget, frac: Fraction) -> None:
        self.target = target
        self.frac = frac
        ev = target.exact_value
        self.exact = abs(ev - frac) if ev is not None else None

    def interval(self, bits: int) -> Interval:
        if self.exact is not None:
            return Interval(self.exact, self.exact)
        e = refine(self.target, min(bits, self.target.budget))
        lo = e.lower - self.frac
        hi = e.upper - self.frac
        if lo >= 0:
            return Interval(lo, hi)
        if hi <= 0:
            return Interval(-hi, -lo)
        return Interval(Fraction(0), max(-lo, hi))

    def float_bounds(self, bits: int = 192) -> Tuple[float, float]:
        iv = self.interval(bits)
        lo = max(0.0, math.nextafter(float(iv.lower), -math.inf))
        return lo, math.nextafter(float(iv.upper), math.inf)

    @property
    def budget(self) -> int:
        return 0 if self.exact is not None else self.target.budget


def _cmp_atoms(u: _Atom, v: _Atom) -> int:
    """Certified three-way comparison of two error atoms."""
    if u.exact is not None and v.exact is not None:
        return (u.exact > v.exact) - (u.exact < v.exact)
    if u.exact is None and v.exact is None and u.target.key == v.target.key:
        if u.frac == v.frac:
            return 0
        # |x-a| vs |x-b| for a != b is decided by x against the midpoint
        u_low = u.frac < v.frac
        m = (u.frac + v.frac) / 2
        target = u.target
        bits = 64
        while True:
            e = refine(target, bits)
            if e.upper < m:
                return -1 if u_low else 1
            if e.lower > m:
                return 1 if u_low else -1
            if bits >= target.budget:
                raise PrecisionExhaustedError(
                    f"cannot separate errors of {u.frac} and {v.frac} against {target.key}"
                )
            bits = min(bits * 2, target.budget)
    # distinct underlying reals: refinement race
    cap = max(u.budget, v.budget)
    bits = 128
    while True:
        iu = u.interval(bits)
        iv = v.interval(bits)
        if iu.upper < iv.lower:
            return -1
        if iv.upper < iu.lower:
            return 1
        if bits >= cap:
            raise PrecisionExhaustedError(
                "refinement race undecided between "
                f"|{u.target.key} - {u.frac}| and |{v.target.key} - {v.frac}|"
            )
        bits = min(bits * 2, cap)


class ErrVal:
    """Certified max-norm error of one candidate point."""

    __slots__ = ("point", "atoms", "_champ")

    def __init__(self, targets: Sequence[RealTarget], point: Sequence[Fraction]) -> None:
        self.point = tuple(point)
        self.atoms = tuple(_Atom(t, f) for t, f in zip(targets, self.point))
        self._champ: Optional[int] = None

    def champion(self) -> _Atom:
        if self._champ is None:
            best = 0
            for i in range(1, len(self.atoms)):
                if _cmp_atoms(self.atoms[i], self.atoms[best]) > 0:
                    best = i
            self._champ = best
        return self.atoms[self._champ]

    def interval(self, bits: int) -> Interval:
        ivs = [a.interval(bits) for a in self.atoms]
        return Interval(max(i.lower for i in ivs), max(i.upper for i in ivs))

    def compare(self, other: "ErrVal") -> int:
        return _cmp_atoms(self.champion(), other.champion())

    def certified_interval(self) -> Interval:
        budget = max((a.budget for a in self.atoms), default=0)
        bits = 192
        while True:
            iv = self.interval(bits)
            if iv.lower == iv.upper:
                return iv
            if iv.lower > 0 and iv.width <= iv.lower / (1 << _REL_WIDTH_BITS):
                return iv
            if bits >= budget:
                if iv.lower > 0:
                    return iv
                raise PrecisionExhaustedError(
                    f"error interval at {self.point} still touches 0 at {budget} bits"
                )
            bits = min(bits * 2, budget)


def _nearest_ps(target: RealTarget, q: int) -> List[int]:
    """Coprime numerators among the two integers nearest q*x, certified.

    When q*x is an exact integer k the pair is (k-1, k): k is nearest and the
    tied second place goes to the smaller integer.
    """
    ev = target.exact_value
    if ev is not None:
        t = ev * q
        if t.denominator == 1:
            cands = [t.numerator - 1, t.numerator]
        else:
            f = t.numerator // t.denominator
            cands = [f, f + 1]
    else:
        bits = 64
        while True:
            e = refine(target, bits)
            flo = math.floor(e.lower * q)
            fhi = math.floor(e.upper * q)
            if flo == fhi:
                break
            if bits >= target.budget:
                raise PrecisionExhaustedError(
                    f"cannot certify floor({q} * {target.key})"
                )
            bits = min(bits * 2, target.budget)
        cands = [flo, flo + 1]
    return [p for p in cands if math.gcd(p, q) == 1]


# ---------------------------------------------------------------------------
# per-coordinate best-approximation table


class _BestTable:
    """Strictly improving best-approximation entries for one coordinate.

    Entries (den, frac) have strictly increasing denominators and strictly
    decreasing certified errors; every best approximation of the first kind
    appears.  Families of intermediate fractions between consecutive
    convergents are cut at the certified break-even index, so the classical
    half-quotient rule is never assumed.
    """

    def __init__(self, target: RealTarget) -> None:
        self.target = target
        self._cursor = ConvergentCursor(target)
        self.entries: List[Tuple[int, Fraction]] = []
        self._done = False
        self._fam: Optional[dict] = None
        self._seed_decided = False

    def _next_family(self) -> Optional[dict]:
        pa, pb, qa, qb = self._cursor.state
        row = self._cursor.advance()
        if row is None:
            self._done = True
            return None
        return {"pa": pa, "qa": qa, "pb": pb, "qb": qb, "a": row.a, "k": 0}

    def _kstar(self, fam: dict) -> int:
        base = _Atom(self.target, Fraction(fam["pb"], fam["qb"]))
        lo, hi = 1, fam["a"]
        while lo < hi:
            mid = (lo + hi) // 2
            m = Fraction(fam["pa"] + mid * fam["pb"], fam["qa"] + mid * fam["qb"])
            if _cmp_atoms(_Atom(self.target, m), base) < 0:
                hi = mid
            else:
                lo = mid + 1
        return lo

    def extend_to(self, den_cap: int) -> None:
        while True:
            if self._fam is None:
                if self._done:
                    return
                fam = self._next_family()
                if fam is None:
                    return
                fam["k"] = self._kstar(fam)
                if not self._seed_decided:
                    self._seed_decided = True
                    if fam["k"] >= 2:
                        self.entries.append((1, Fraction(0, 1)))
                self._fam = fam
            fam = self._fam
            while fam["k"] <= fam["a"]:
                den = fam["qa"] + fam["k"] * fam["qb"]
                if den > den_cap:
                    return
                num = fam["pa"] + fam["k"] * fam["pb"]
                self.entries.append((den, Fraction(num, den)))
                fam["k"] += 1
            self._fam = None

    def best_at(self, den_cap: int) -> Tuple[int, Fraction]:
        self.extend_to(den_cap)
        idx = bisect_right(self.entries, den_cap, key=lambda e: e[0]) - 1
        if idx < 0:
            raise ValueError("no entry at denominator cap >= 1")
        return self.entries[idx]

    def dens_up_to(self, den_cap: int) -> List[int]:
        self.extend_to(den_cap)
        idx = bisect_right(self.entries, den_cap, key=lambda e: e[0])
        return [d for d, _ in self.entries[:idx]]


# ---------------------------------------------------------------------------
# budget plumbing


def _validate_targets(x: Sequence[RealTarget]) -> Tuple[RealTarget, ...]:
    targets = tuple(x)
    if not targets:
        raise ValueError("need at least one coordinate")
    for t in targets:
        if not isinstance(t, RealTarget):
            raise TypeError("coordinates must be RealTarget instances")
    return targets


def _den_cap(budget: Budget, d: int) -> int:
    """Largest admissible scalar cap implied by the budget bound.

    max/lcm and every d=1 case bound single denominators; prod bounds the
    product; prod with the d-th root comparison bounds the product by
    base**(d/root).
    """
    base, root = budget.bound.base, budget.bound.root
    if budget.kind is HeightKind.PROD_ROOT:
        return iroot(base ** d, root)
    return iroot(base, root)


# ---------------------------------------------------------------------------
# denominator grids (brute force)


def _grid_max(d: int, cap: int, enum_cap: int) -> np.ndarray:
    if cap ** d > enum_cap:
        raise CapExceededError(f"{cap}^{d} denominator tuples exceed cap {enum_cap}")
    axes = np.meshgrid(*([np.arange(1, cap + 1, dtype=np.int64)] * d), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=1)


def _grid_prod(d: int, cap: int, enum_cap: int) -> np.ndarray:
    rows = np.arange(1, cap + 1, dtype=np.int64).reshape(-1, 1)
    prods = rows[:, 0].copy()
    for _ in range(d - 1):
        counts = cap // prods
        total = int(counts.sum())
        if total > enum_cap:
            raise CapExceededError(f"product grid exceeds enumeration cap {enum_cap}")
        rep = np.repeat(np.arange(len(rows)), counts)
        offsets = np.concatenate(([0], np.cumsum(counts)[:-1]))
        new_col = np.arange(total, dtype=np.int64) - np.repeat(offsets, counts) + 1
        rows = np.column_stack([rows[rep], new_col])
        prods = prods[rep] * new_col
    return rows


def _grid_lcm(d: int, cap: int, enum_cap: int) -> np.ndarray:
    if cap ** d > enum_cap:
        raise CapExceededError(f"{cap}^{d} denominator tuples exceed cap {enum_cap}")
    grid = _grid_max(d, cap, enum_cap)
    mask = grid[:, 0]
    for j in range(1, d):
        mask = np.lcm(mask, grid[:, j])
    return grid[mask <= cap]


def _grid_for(kind: HeightKind, d: int, cap: int, enum_cap: int) -> np.ndarray:
    if kind is HeightKind.MAX or d == 1:
        return _grid_max(d, cap, enum_cap)
    if kind in (HeightKind.PROD, HeightKind.PROD_ROOT):
        return _grid_prod(d, cap, enum_cap)
    if kind is HeightKind.LCM:
        return _grid_lcm(d, cap, enum_cap)
    raise UnboundedSearchError("min height bounds only one coordinate")


# ---------------------------------------------------------------------------
# float prefilter


def _coord_float_bounds(targets: Sequence[RealTarget], bits: int = 192):
    lows, highs = [], []
    for t in targets:
        e = refine(t, min(bits, t.budget))
        lows.append(math.nextafter(float(e.lower), -math.inf))
        highs.append(math.nextafter(float(e.upper), math.inf))
    return lows, highs


def _filter_bounds(qcol: np.ndarray, x_lo: float, x_hi: float):
    """Outer float bounds on the best reduced-candidate error at each den."""
    f = np.floor(qcol * x_lo).astype(np.int64)
    ps = f[:, None] + np.arange(3, dtype=np.int64)
    valid = np.gcd(ps, qcol[:, None]) == 1
    a = ps / qcol[:, None].astype(np.float64)
    dlo = a - x_hi
    dhi = a - x_lo
    lo = np.where(dlo > 0, dlo, np.where(dhi < 0, -dhi, 0.0))
    hi = np.maximum(np.abs(dlo), np.abs(dhi))
    lo = np.maximum(lo * (1.0 - _SLOP) - 1e-300, 0.0)
    hi = hi * (1.0 + _SLOP) + 1e-300
    lo = np.where(valid, lo, np.inf)
    hi = np.where(valid, hi, np.inf)
    return lo.min(axis=1), hi.min(axis=1)


def _phase1(grid: np.ndarray, targets: Sequence[RealTarget]):
    n, d = grid.shape
    tuple_lo = np.empty(n)
    tuple_hi = np.empty(n)
    xl, xh = _coord_float_bounds(targets)
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        lo = np.full(sl.stop - sl.start, -np.inf)
        hi = np.full(sl.stop - sl.start, -np.inf)
        for j in range(d):
            clo, chi = _filter_bounds(grid[sl, j], xl[j], xh[j])
            lo = np.maximum(lo, clo)
            hi = np.maximum(hi, chi)
        tuple_lo[sl] = lo
        tuple_hi[sl] = hi
    return tuple_lo, tuple_hi


# ---------------------------------------------------------------------------
# exact phase


def _coord_options(target: RealTarget, q: int) -> List[Tuple[int, _Atom]]:
    return [(p, _Atom(target, Fraction(p, q))) for p in _nearest_ps(target, q)]


def _tuple_best(targets, dens) -> Optional[Tuple[Tuple[Fraction, ...], "ErrVal"]]:
    point = []
    for t, q in zip(targets, dens):
        opts = _coord_options(t, int(q))
        if not opts:
            return None
        best = opts[0]
        for cand in opts[1:]:
            if _cmp_atoms(cand[1], best[1]) < 0:
                best = cand
        point.append(best[1].frac)
    ev = ErrVal(targets, point)
    return ev.point, ev


def _collect_ties(targets, den_tuples: Iterable[Sequence[int]], opt: ErrVal):
    """All candidate points over the given den tuples with error == opt."""
    champ = opt.champion()
    points = set()
    for dens in den_tuples:
        kept: List[List[Tuple[Fraction, bool]]] = []
        any_eq_possible = False
        ok = True
        for t, q in zip(targets, dens):
            opts = []
            for p, atom in _coord_options(t, int(q)):
                c = _cmp_atoms(atom, champ)
                if c <= 0:
                    opts.append((atom.frac, c == 0))
                    any_eq_possible = any_eq_possible or c == 0
            if not opts:
                ok = False
                break
            kept.append(opts)
        if not ok or not any_eq_possible:
            continue
        for combo in iter_product(*kept):
            if any(eq for _, eq in combo):
                points.add(tuple(f for f, _ in combo))
    return points


def _lex_min(points: Iterable[Tuple[Fraction, ...]]) -> Tuple[Fraction, ...]:
    return min(
        points,
        key=lambda pt: (
            tuple(f.numerator for f in pt),
            tuple(f.denominator for f in pt),
        ),
    )


def _finish(targets, kind: HeightKind, point) -> ApproxRecord:
    ev = ErrVal(targets, point)
    return ApproxRecord(ev.point, ev.certified_interval(), height(ev.point, kind))


# ---------------------------------------------------------------------------
# brute force route


def brute_force_best(
    x: Sequence[RealTarget], budget: Budget, enum_cap: int = DEFAULT_ENUM_CAP
) -> ApproxRecord:
    """Certified exhaustive minimizer of the max-norm error under the budget."""
    targets = _validate_targets(x)
    if budget.kind is HeightKind.MIN:
        raise UnboundedSearchError("min height bounds only one coordinate")
    d = len(targets)
    cap = _den_cap(budget, d)
    grid = _grid_for(budget.kind, d, cap, enum_cap)
    tuple_lo, tuple_hi = _phase1(grid, targets)
    opt_hi = tuple_hi.min()
    if not np.isfinite(opt_hi):
        raise PrecisionExhaustedError("no admissible candidate point")
    survivors = grid[tuple_lo <= opt_hi]

    best: Optional[ErrVal] = None
    for dens in survivors:
        got = _tuple_best(targets, dens)
        if got is None:
            continue
        _, ev = got
        if best is None or ev.compare(best) < 0:
            best = ev
    if best is None:
        raise PrecisionExhaustedError("no admissible candidate point")
    ties = _collect_ties(targets, survivors.tolist(), best)
    return _finish(targets, budget.kind, _lex_min(ties))


# ---------------------------------------------------------------------------
# fast route


def _mirror_candidates(target: RealTarget, frac: Fraction, cap: int):
    """Equal-error partner of a table entry for an exact target, if admissible."""
    ev = target.exact_value
    if ev is None:
        return []
    m = 2 * ev - frac
    if m == frac or m.denominator > cap:
        return []
    if m.numerator not in _nearest_ps(target, m.denominator):
        return []
    return [m]


def _fast_d1(targets, budget: Budget) -> ApproxRecord:
    cap = _den_cap(budget, 1)
    table = _BestTable(targets[0])
    _, frac = table.best_at(cap)
    cands = [(frac,)] + [(m,) for m in _mirror_candidates(targets[0], frac, cap)]
    return _finish(targets, budget.kind, _lex_min(cands))


def _certified_min_atoms(cand_atoms: List[_Atom]) -> _Atom:
    best = cand_atoms[0]
    for a in cand_atoms[1:]:
        if _cmp_atoms(a, best) < 0:
            best = a
    return best


def _qualifying_dens(
    target: RealTarget, den_cap: int, opt_hi_f: float, enum_cap: int
) -> List[int]:
    """Dens <= den_cap whose best candidate might reach error <= opt (floats)."""
    if den_cap > enum_cap:
        raise CapExceededError(f"tie scan over {den_cap} denominators exceeds cap")
    e = refine(target, min(192, target.budget))
    x_lo = math.nextafter(float(e.lower), -math.inf)
    x_hi = math.nextafter(float(e.upper), math.inf)
    qs = np.arange(1, den_cap + 1, dtype=np.int64)
    lo, _ = _filter_bounds(qs, x_lo, x_hi)
    return [int(q) for q in qs[lo <= opt_hi_f * (1.0 + _SLOP) + 1e-300]]


def _fast_ties(targets, kind, cap, opt: ErrVal, enum_cap):
    opt_hi_f = opt.champion().float_bounds()[1]
    den_sets = [_qualifying_dens(t, cap, opt_hi_f, enum_cap) for t in targets]
    d = len(targets)
    tuples: List[Tuple[int, ...]] = []
    visits = 0

    def rec(j: int, prefix: Tuple[int, ...], state: int) -> None:
        nonlocal visits
        visits += 1
        if visits > enum_cap:
            raise CapExceededError("tie candidate tuples exceed enumeration cap")
        if j == d:
            tuples.append(prefix)
            return
        for q in den_sets[j]:
            if kind in (HeightKind.PROD, HeightKind.PROD_ROOT):
                if q > state:
                    break
                rec(j + 1, prefix + (q,), state // q)
            elif kind is HeightKind.LCM:
                l = math.lcm(state, q)
                if l <= cap:
                    rec(j + 1, prefix + (q,), l)
            else:
                rec(j + 1, prefix + (q,), state)

    rec(0, (), 1 if kind is HeightKind.LCM else cap)
    ties = _collect_ties(targets, tuples, opt)
    if not ties:
        # opt witness itself must be in the tie set; missing it means the
        # float prefilter and the certified comparison disagree
        raise AssertionError("certified optimum lost during tie collection")
    return ties


def fast_best(
    x: Sequence[RealTarget], budget: Budget, enum_cap: int = DEFAULT_ENUM_CAP
) -> ApproxRecord:
    """Table-driven minimizer; same contract and output as brute_force_best."""
    targets = _validate_targets(x)
    kind = budget.kind
    if kind is HeightKind.MIN:
        raise UnboundedSearchError("min height bounds only one coordinate")
    d = len(targets)
    if d == 1:
        return _fast_d1(targets, budget)

    tables = [_BestTable(t) for t in targets]
    cap = _den_cap(budget, d)

    if kind is HeightKind.MAX:
        entries = [tb.best_at(cap) for tb in tables]
        opt = ErrVal(targets, [f for _, f in entries])
    elif kind in (HeightKind.PROD, HeightKind.PROD_ROOT):
        opt = _prod_opt(targets, tables, cap, enum_cap)
    elif kind is HeightKind.LCM:
        opt = _lcm_opt(targets, cap, enum_cap)
    else:  # pragma: no cover
        raise ValueError(f"unknown height kind {kind!r}")

    ties = _fast_ties(targets, kind, cap, opt, enum_cap)
    return _finish(targets, kind, _lex_min(ties))


def _prod_opt(targets, tables: List[_BestTable], prod_cap: int, enum_cap: int) -> ErrVal:
    """Best error over allocations of the product cap, via table denominators."""
    den_lists = [tb.dens_up_to(prod_cap) for tb in tables]
    tuples: List[Tuple[int, ...]] = []

    def rec(j: int, prefix: Tuple[int, ...], left: int) -> None:
        if j == len(den_lists):
            tuples.append(prefix)
            return
        for q in den_lists[j]:
            if q > left:
                break
            rec(j + 1, prefix + (q,), left // q)

    rec(0, (), prod_cap)
    if len(tuples) > enum_cap:
        raise CapExceededError("allocation tuples exceed enumeration cap")
    return _scan_opt(targets, tuples)


def _divisor_lists(cap: int, enum_cap: int) -> List[List[int]]:
    if cap * int(math.log(cap) + 2) > enum_cap:
        raise CapExceededError("divisor scan exceeds enumeration cap")
    divisors: List[List[int]] = [[] for _ in range(cap + 1)]
    for q in range(1, cap + 1):
        for mult in range(q, cap + 1, q):
            divisors[mult].append(q)
    return divisors


def _best_over_dens(target: RealTarget, dens: Sequence[int], lo, hi) -> Optional[_Atom]:
    """Certified best atom for one coordinate over the given denominators.

    lo/hi are float bound arrays aligned with dens; every den whose lower
    bound does not exceed the smallest upper bound is certified exactly.
    """
    cut = hi.min()
    atom_best = None
    for oi in np.nonzero(lo <= cut)[0]:
        opts = _coord_options(target, int(dens[int(oi)]))
        if not opts:
            continue
        a = _certified_min_atoms([o[1] for o in opts])
        if atom_best is None or _cmp_atoms(a, atom_best) < 0:
            atom_best = a
    return atom_best


def _lcm_opt(targets, lcm_cap: int, enum_cap: int) -> ErrVal:
    """Best error over common-denominator scales D <= cap via divisor dens."""
    divisors = _divisor_lists(lcm_cap, enum_cap)
    best: Optional[ErrVal] = None
    best_hi = math.inf
    xl, xh = _coord_float_bounds(targets)
    qs = np.arange(1, lcm_cap + 1, dtype=np.int64)
    per_coord = [_filter_bounds(qs, xl[j], xh[j]) for j in range(len(targets))]
    for dd in range(1, lcm_cap + 1):
        divs = np.array(divisors[dd], dtype=np.int64) - 1
        cand_lo = max(float(per_coord[j][0][divs].min()) for j in range(len(targets)))
        if cand_lo >= best_hi:
            continue
        atoms = []
        for j, t in enumerate(targets):
            a = _best_over_dens(t, divisors[dd], per_coord[j][0][divs], per_coord[j][1][divs])
            if a is None:
                atoms = None
                break
            atoms.append(a)
        if atoms is None:
            continue
        ev = ErrVal(targets, [a.frac for a in atoms])
        if best is None or ev.compare(best) < 0:
            best = ev
            best_hi = ev.champion().float_bounds()[1]
    if best is None:
        raise PrecisionExhaustedError("no admissible candidate point")
    return best


def _scan_opt(targets, tuples: List[Tuple[int, ...]]) -> ErrVal:
    d = len(targets)
    arr = np.array(tuples, dtype=np.int64)
    xl, xh = _coord_float_bounds(targets)
    lo = np.full(len(tuples), -np.inf)
    hi = np.full(len(tuples), -np.inf)
    for j in range(d):
        clo, chi = _filter_bounds(arr[:, j], xl[j], xh[j])
        lo = np.maximum(lo, clo)
        hi = np.maximum(hi, chi)
    opt_hi = hi.min()
    best: Optional[ErrVal] = None
    for idx in np.nonzero(lo <= opt_hi)[0]:
        got = _tuple_best(targets, arr[idx])
        if got is None:
            continue
        _, ev = got
        if best is None or ev.compare(best) < 0:
            best = ev
    if best is None:
        raise PrecisionExhaustedError("no admissible candidate point")
    return best


# ---------------------------------------------------------------------------
# record chains


def _require_irrational(targets) -> None:
    for t in targets:
        if t.exact_value is not None:
            raise ValueError(f"record chains need irrational coordinates, got {t.key}")


def records(
    x: Sequence[RealTarget],
    kind: HeightKind,
    height_cap: HeightValue,
    enum_cap: int = DEFAULT_ENUM_CAP,
) -> List[ApproxRecord]:
    """Maximal chain of best-approximation records up to the height cap.

    Each returned record strictly improves the certified error of everything
    at smaller or equal height; heights strictly increase along the chain.
    """
    targets = _validate_targets(x)
    if kind is HeightKind.MIN:
        raise UnboundedSearchError("min height bounds only one coordinate")
    _require_irrational(targets)
    budget = Budget(kind, height_cap)
    d = len(targets)
    cap = _den_cap(budget, d)
    if d == 1:
        table = _BestTable(targets[0])
        table.extend_to(cap)
        out = []
        for den, frac in table.entries:
            if den > cap:
                break
            ev = ErrVal(targets, (frac,))
            out.append(ApproxRecord(ev.point, ev.certified_interval(), HeightValue(den)))
        return out
    if kind is HeightKind.MAX:
        return _records_max(targets, cap, enum_cap)
    if kind in (HeightKind.PROD, HeightKind.PROD_ROOT):
        return _records_prod(targets, kind, cap, enum_cap)
    return _records_lcm(targets, cap, enum_cap)


def _chain_append(chain, cur, ev, hv) -> ErrVal:
    """Append ev as a record if it strictly improves cur; returns the incumbent."""
    if cur is None or ev.compare(cur) < 0:
        chain.append(ApproxRecord(ev.point, ev.certified_interval(), hv))
        return ev
    return cur


def _records_max(targets, cap: int, enum_cap: int) -> List[ApproxRecord]:
    tables = [_BestTable(t) for t in targets]
    breakpoints = sorted({q for tb in tables for q in tb.dens_up_to(cap)})
    chain: List[ApproxRecord] = []
    cur: Optional[ErrVal] = None
    cur_hi = math.inf
    for bp in breakpoints:
        point = [tb.best_at(bp)[1] for tb in tables]
        ev = ErrVal(targets, point)
        if ev.interval(192).lower > cur_hi:
            continue
        nxt = _chain_append(chain, cur, ev, HeightValue(bp))
        if nxt is not cur:
            cur = nxt
            cur_hi = float(cur.certified_interval().upper)
    return chain


def _records_prod(targets, kind, prod_cap: int, enum_cap: int) -> List[ApproxRecord]:
    tables = [_BestTable(t) for t in targets]
    den_lists = [tb.dens_up_to(prod_cap) for tb in tables]
    tuples: List[Tuple[int, ...]] = []

    def rec(j, prefix, left):
        if len(tuples) > enum_cap:
            raise CapExceededError("record sweep exceeds enumeration cap")
        if j == len(den_lists):
            tuples.append(prefix)
            return
        for q in den_lists[j]:
            if q > left:
                break
            rec(j + 1, prefix + (q,), left // q)

    rec(0, (), prod_cap)
    tuples.sort(key=lambda t: (math.prod(t), t))
    arr = np.array(tuples, dtype=np.int64)
    xl, xh = _coord_float_bounds(targets)
    lo = np.full(len(tuples), -np.inf)
    for j in range(len(targets)):
        clo, _ = _filter_bounds(arr[:, j], xl[j], xh[j])
        lo = np.maximum(lo, clo)

    d = len(targets)
    root = d if kind is HeightKind.PROD_ROOT else 1
    chain: List[ApproxRecord] = []
    cur: Optional[ErrVal] = None
    cur_hi = math.inf
    i = 0
    # process one height (= product value) at a time: the record at a height
    # must beat every tuple of that height, not just the first improving one
    while i < len(tuples):
        hv = math.prod(tuples[i])
        j = i
        group_best: Optional[ErrVal] = None
        while j < len(tuples) and math.prod(tuples[j]) == hv:
            if lo[j] < cur_hi:
                got = _tuple_best(targets, tuples[j])
                if got is not None:
                    _, ev = got
                    if group_best is None or ev.compare(group_best) < 0:
                        group_best = ev
            j += 1
        i = j
        if group_best is None:
            continue
        nxt = _chain_append(chain, cur, group_best, HeightValue(hv, root))
        if nxt is not cur:
            cur = nxt
            cur_hi = float(cur.certified_interval().upper)
    return chain


def _records_lcm(targets, lcm_cap: int, enum_cap: int) -> List[ApproxRecord]:
    divisors = _divisor_lists(lcm_cap, enum_cap)
    d = len(targets)
    xl, xh = _coord_float_bounds(targets)
    qs = np.arange(1, lcm_cap + 1, dtype=np.int64)
    per_coord = [_filter_bounds(qs, xl[j], xh[j]) for j in range(d)]
    chain: List[ApproxRecord] = []
    cur: Optional[ErrVal] = None
    cur_hi = math.inf
    for dd in range(1, lcm_cap + 1):
        divs = np.array(divisors[dd], dtype=np.int64) - 1
        cand_lo = max(float(per_coord[j][0][divs].min()) for j in range(d))
        if cand_lo >= cur_hi:
            continue
        atoms = []
        for j, t in enumerate(targets):
            a = _best_over_dens(t, divisors[dd], per_coord[j][0][divs], per_coord[j][1][divs])
            if a is None:
                atoms = None
                break
            atoms.append(a)
        if atoms is None:
            continue
        ev = ErrVal(targets, [a.frac for a in atoms])
        # improvements always sit at lcm exactly dd; earlier scans covered the rest
        if math.lcm(*(f.denominator for f in ev.point)) != dd:
            continue
        nxt = _chain_append(chain, cur, ev, HeightValue(dd))
        if nxt is not cur:
            cur = nxt
            cur_hi = float(cur.certified_interval().upper)
    return chain


def record_csv_rows(chain: Sequence[ApproxRecord]) -> List[Tuple]:
    rows = []
    for rec in chain:
        row = [rec.height.base, rec.height.root, str(rec.error.lower), str(rec.error.upper)]
        for f in rec.point:
            row.extend([f.numerator, f.denominator])
        rows.append(tuple(row))
    return rows


# ---------------------------------------------------------------------------
# solution counting


def _err_beats_power(atom: _Atom, base: int, tau: Fraction) -> bool:
    """Certified check of |x - p/q| < base**(-tau)."""
    a, b = tau.numerator, tau.denominator
    if atom.exact is not None:
        return atom.exact ** b * base ** a < 1
    bits = 64
    target = atom.target
    while True:
        iv = atom.interval(bits)
        if iv.upper ** b * base ** a < 1:
            return True
        if iv.lower ** b * base ** a >= 1:
            return False
        if bits >= target.budget:
            raise PrecisionExhaustedError(
                f"cannot decide |{target.key} - {atom.frac}| vs {base}^(-{tau})"
            )
        bits = min(bits * 2, target.budget)


def _window_solutions(target: RealTarget, q: int, tau: Fraction) -> List[Fraction]:
    """All reduced p/q with |x - p/q| < q**(-tau), certified."""
    return [Fraction(p, q) for p in _solution_ps(target, q, q, tau)]


def _legendre_threshold(tau: Fraction) -> int:
    """Smallest q with q^(tau-2) >= 2; above it solutions are convergents."""
    a, b = tau.numerator, tau.denominator
    e = a - 2 * b
    t = iroot(2 ** b, e)
    return t if t ** e >= 2 ** b else t + 1


def _count_d1(target: RealTarget, tau: Fraction, cap: int, enum_cap: int) -> List[Fraction]:
    sols: List[Fraction] = []
    q0 = _legendre_threshold(tau) if tau > 2 else cap + 1
    work = 0
    for q in range(1, min(q0, cap + 1)):
        got = _window_solutions(target, q, tau)
        work += max(len(got), 1)
        if work > enum_cap:
            raise CapExceededError("direct window enumeration exceeds cap")
        sols.extend(got)
    if q0 <= cap:
        cursor = ConvergentCursor(target)
        while True:
            row = cursor.advance()
            if row is None or row.q > cap:
                break
            if row.q < q0:
                continue
            if _err_beats_power(_Atom(target, Fraction(row.p, row.q)), row.q, tau):
                sols.append(Fraction(row.p, row.q))
    return sols


def _min_witness_points(
    targets, tau: Fraction, cap: int, aux_cap: int, enum_cap: int
):
    """Lower-bound witness set for the min-height solution count.

    A witness at coordinate i is a d=1 solution with q <= cap; the other
    coordinates take their first convergent with denominator >= q that
    certifiably beats q**(-tau).  Witnesses without such partners are dropped,
    keeping the count an honest lower bound.
    """
    d = len(targets)
    points = set()
    for i, t in enumerate(targets):
        for w in _count_d1(t, tau, cap, enum_cap):
            q_i = w.denominator
            aux: List[Optional[Fraction]] = []
            ok = True
            for j, other in enumerate(targets):
                if j == i:
                    aux.append(w)
                    continue
                partner = _aux_partner(other, q_i, tau, aux_cap)
                if partner is None:
                    ok = False
                    break
                aux.append(partner)
            if ok:
                points.add(tuple(aux))
    return points


def _aux_partner(target: RealTarget, q_min: int, tau: Fraction, aux_cap: int):
    cursor = ConvergentCursor(target)
    while True:
        row = cursor.advance()
        if row is None or row.q > aux_cap:
            return None
        if row.q < q_min:
            continue
        if _err_beats_power(_Atom(target, Fraction(row.p, row.q)), q_min, tau):
            return Fraction(row.p, row.q)


def solutions_count(
    x: Sequence[RealTarget],
    kind: HeightKind,
    tau: Fraction,
    height_cap: HeightValue,
    aux_cap: Optional[int] = None,
    enum_cap: int = DEFAULT_ENUM_CAP,
) -> int:
    """Number of distinct points with height <= cap and error < height**(-tau).

    For kind=min the reported value is a certified lower bound built from
    per-coordinate witnesses; every other kind is counted exhaustively.
    """
    targets = _validate_targets(x)
    tau = Fraction(tau)
    if tau <= 0:
        raise ValueError("tau must be positive")
    d = len(targets)
    budget = Budget(kind, height_cap)
    cap = _den_cap(budget, d)
    if d == 1:
        return len(set(_count_d1(targets[0], tau, cap, enum_cap)))
    if kind is HeightKind.MIN:
        if aux_cap is None:
            aux_cap = max(cap, 10 ** 9)
        return len(_min_witness_points(targets, tau, cap, aux_cap, enum_cap))
    grid = _grid_for(kind, d, cap, enum_cap)
    count = 0
    for dens in grid:
        dens = [int(q) for q in dens]
        if kind is HeightKind.MAX:
            hbase, hroot = max(dens), 1
        elif kind is HeightKind.PROD:
            hbase, hroot = math.prod(dens), 1
        elif kind is HeightKind.PROD_ROOT:
            hbase, hroot = math.prod(dens), d
        else:
            hbase, hroot = math.lcm(*dens), 1
        # error < (hbase^(1/hroot))^(-tau) = hbase^(-tau/hroot)
        t_eff = tau / hroot
        per_coord = []
        empty = False
        for t, q in zip(targets, dens):
            ps = []
            for p in _solution_ps(t, q, hbase, t_eff):
                ps.append(p)
            if not ps:
                empty = True
                break
            per_coord.append(ps)
        if empty:
            continue
        count += math.prod(len(ps) for ps in per_coord)
    return count


def _solution_ps(target: RealTarget, q: int, hbase: int, tau: Fraction) -> List[int]:
    e = refine(target, min(128, target.budget))
    mid = float((e.lower + e.upper) / 2)
    center = mid * q
    rad = q * float(hbase) ** (-float(tau)) + 2
    out = []
    for p in range(math.floor(center - rad), math.ceil(center + rad) + 1):
        if math.gcd(p, q) != 1:
            continue
        if _err_beats_power(_Atom(target, Fraction(p, q)), hbase, tau):
            out.append(p)
    return out
