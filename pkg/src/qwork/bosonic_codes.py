"""Codes that store logical states in multi-register excitation numbers.

A basis state here is a product of number states |n_1 ... n_m> over m
registers; a logical state is a weighted superposition of such products.
Losing s quanta multiplies every basis state by binomial factors in its
occupations, so correctability turns into combinatorics on the occupation
vectors: all logicals must share the same occupation moments up to order t
(no relative deformation), and basis states of different logicals must stay
far enough apart that losses cannot map one onto another.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import qec_engine
from .qop_core import standard_channel

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class Qcs:
    """One multi-register number state, held as its occupation vector."""

    occupations: tuple

    def __post_init__(self):
        occ = tuple(int(x) for x in self.occupations)
        if any(x < 0 for x in occ):
            raise ValueError("occupations must be non-negative")
        object.__setattr__(self, "occupations", occ)

    @property
    def m(self):
        return len(self.occupations)

    @property
    def total(self):
        return sum(self.occupations)

    def scaled(self, factor):
        return Qcs(tuple(factor * x for x in self.occupations))

    def __iter__(self):
        return iter(self.occupations)

    def __getitem__(self, i):
        return self.occupations[i]


def as_qcs(x):
    return x if isinstance(x, Qcs) else Qcs(tuple(x))


def partitions(n, m):
    """Number of ways to spread n quanta over m ordered registers."""
    if n < 0 or m < 1:
        raise ValueError("need n >= 0 and m >= 1")
    return math.comb(n + m - 1, m - 1)


def occupation_vectors(n, m):
    """All length-m occupation vectors summing to n, lexicographic."""
    if m == 1:
        return [(n,)]
    out = []
    for first in range(n + 1):
        out.extend((first,) + rest for rest in occupation_vectors(n - first, m - 1))
    return out


def qcs_distance(u, v):
    """Half the entrywise occupation difference; losses move states by
    at most the number of lost quanta in this metric."""
    u, v = as_qcs(u), as_qcs(v)
    if u.m != v.m:
        raise ValueError("occupation vectors differ in length")
    return sum(abs(a - b) for a, b in zip(u, v)) / 2


@dataclass
class BosonicCode:
    """Weighted number-state superpositions forming the logical states.

    ``logicals`` is a list of lists of (Qcs, weight) pairs; weights are
    probabilities (squared amplitudes) and must sum to one per logical.
    Fractions keep the moment checks exact.
    """

    m: int
    t: int
    logicals: list

    def __post_init__(self):
        self.logicals = [[(as_qcs(q), mu) for q, mu in states]
                         for states in self.logicals]

    def validate(self, tol=DEFAULT_TOL):
        if self.m < 1:
            raise ValueError("need at least one register")
        if self.t < 0:
            raise ValueError("t must be non-negative")
        if not self.logicals:
            raise ValueError("no logical states")
        for states in self.logicals:
            if not states:
                raise ValueError("empty logical state")
            seen = set()
            total = 0
            for q, mu in states:
                if q.m != self.m:
                    raise ValueError("occupation vector length != m")
                if q.occupations in seen:
                    raise ValueError(f"repeated basis state {q.occupations}")
                seen.add(q.occupations)
                if mu <= 0:
                    raise ValueError("weights must be positive")
                total += mu
            if abs(float(total) - 1.0) > tol:
                raise ValueError(f"weights sum to {float(total)}, not 1")
        return self

    @property
    def n_levels(self):
        return len(self.logicals)

    @property
    def n_total(self):
        """Common total quanta count, or None if the basis states differ."""
        totals = {q.total for states in self.logicals for q, _ in states}
        return totals.pop() if len(totals) == 1 else None

    @property
    def max_occupation(self):
        return max(x for states in self.logicals for q, _ in states for x in q)

    def distance(self):
        """Minimum distance between basis states of different logicals."""
        best = math.inf
        for a, b in itertools.combinations(self.logicals, 2):
            for (u, _), (v, _) in itertools.product(a, b):
                best = min(best, qcs_distance(u, v))
        return best

    def logical_vectors(self, cutoff=None):
        """Dense state vectors on (cutoff+1)^m amplitudes."""
        n = self.max_occupation if cutoff is None else cutoff
        dim = (n + 1) ** self.m
        vecs = []
        for states in self.logicals:
            v = np.zeros(dim, dtype=complex)
            for q, mu in states:
                idx = 0
                for x in q:
                    idx = idx * (n + 1) + x
                v[idx] = math.sqrt(float(mu))
            vecs.append(v / np.linalg.norm(v))
        return vecs

    def to_json(self):
        return json.dumps({
            "m": self.m,
            "t": self.t,
            "logicals": [[{"qcs": list(q.occupations), "mu": float(mu)}
                          for q, mu in states] for states in self.logicals],
        })

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        logicals = [[(Qcs(tuple(e["qcs"])), e["mu"]) for e in states]
                    for states in data["logicals"]]
        return cls(int(data["m"]), int(data["t"]), logicals).validate()


# ---------------------------------------------------------------------------
# criteria


@dataclass
class NonDeformationReport:
    passed: bool
    uniform_total: bool
    totals: list
    moments: dict
    max_discrepancy: float


def check_nondeformation(code, t=None, tol=DEFAULT_TOL):
    """Moment matching between logicals for every order s = 1..t.

    Also requires every basis state to carry the same total quanta count
    (the order-0 condition): unequal totals decay at different rates and
    no recovery can undo that.
    """
    t = code.t if t is None else t
    totals = [sorted({q.total for q, _ in states}) for states in code.logicals]
    uniform = len({x for ts in totals for x in ts}) == 1

    moments = {}
    worst = 0.0
    for s in range(1, t + 1):
        for combo in itertools.combinations_with_replacement(range(code.m), s):
            vals = []
            for states in code.logicals:
                acc = 0
                for q, mu in states:
                    prod = mu
                    for j in combo:
                        prod = prod * q[j]
                    acc = acc + prod
                vals.append(acc)
            moments[combo] = [float(v) for v in vals]
            spread = max(moments[combo]) - min(moments[combo])
            worst = max(worst, spread)
    passed = uniform and worst <= tol
    return NonDeformationReport(passed, uniform, totals, moments, worst)


def check_orthogonality(code, t=None):
    """Basis states of different logicals must sit further than t apart,
    so states that lost up to t quanta can never collide."""
    t = code.t if t is None else t
    return code.distance() > t


# ---------------------------------------------------------------------------
# constructions


def _rotations(v):
    return [v[r:] + v[:r] for r in range(len(v))]


def cyclic_orbits(n, m):
    """Orbits of the n-quanta occupation vectors under register rotation.

    Each orbit is listed from its lexicographically smallest member;
    orbits come out sorted by that representative.
    """
    seen, orbits = set(), []
    for v in occupation_vectors(n, m):
        if v in seen:
            continue
        orbit = []
        for w in _rotations(v):
            if w not in orbit:
                orbit.append(w)
        seen.update(orbit)
        orbits.append(orbit)
    return orbits


def construct_t1(n, m):
    """One-loss code: every rotation orbit of Q(n, m), occupations doubled.

    Rotation averaging makes all first moments equal to 2n/m, and doubling
    keeps distinct basis states at distance two or more.
    """
    if n < 1 or m < 2:
        raise ValueError("need n >= 1 and m >= 2")
    logicals = []
    for orbit in cyclic_orbits(n, m):
        mu = Fraction(1, len(orbit))
        logicals.append([(Qcs(tuple(2 * x for x in w)), mu) for w in orbit])
    return BosonicCode(m, 1, logicals).validate()


def construct_t2(x):
    """Two-loss code from one full rotation orbit and its reversal, tripled.

    Lagged products of a sequence and of its reversal agree, which is
    exactly the second-moment matching; tripling keeps all distances > 2.
    """
    x = tuple(int(v) for v in x)
    m = len(x)
    if m <= 2:
        raise ValueError("need more than two registers")
    if any(v < 0 for v in x):
        raise ValueError("occupations must be non-negative")
    rots = _rotations(x)
    if len(set(rots)) < m:
        raise ValueError("rotation orbit of x is degenerate")
    rev = x[::-1]
    if rev in rots:
        raise ValueError("reversal lies in the rotation orbit; logicals collide")
    mu = Fraction(1, m)
    logicals = [
        [(Qcs(tuple(3 * v for v in w)), mu) for w in rots],
        [(Qcs(tuple(3 * v for v in w)), mu) for w in _rotations(rev)],
    ]
    return BosonicCode(m, 2, logicals).validate()


# ---------------------------------------------------------------------------
# fidelity


def code_fidelity(n_total, t, gamma):
    """Success probability when every loss of up to t quanta is repaired.

    Includes the no-loss term s = 0, so the small-gamma expansion reads
    1 - comb(n_total, t+1) * gamma^(t+1) + ...
    """
    return sum(math.comb(n_total, s) * (1 - gamma) ** (n_total - s) * gamma ** s
               for s in range(t + 1))


def leading_term(n_total, t):
    """Coefficient of the first uncorrected order gamma^(t+1)."""
    return math.comb(n_total, t + 1)


def loss_patterns(m, s):
    """All ways to distribute s lost quanta over m registers."""
    return occupation_vectors(s, m)


def loss_weight_identity(code, s):
    """Pattern-summed binomial weights per logical, next to comb(N_T, s).

    Summing mu_i * prod_j C(n_ij, k_j) over all patterns losing s quanta
    telescopes to C(N_T, s) whenever every basis state carries N_T quanta;
    returns (per-logical values, target).
    """
    target = math.comb(code.n_total, s) if code.n_total is not None else None
    values = []
    for states in code.logicals:
        acc = 0
        for k in loss_patterns(code.m, s):
            for q, mu in states:
                prod = mu
                for j, kj in enumerate(k):
                    prod = prod * math.comb(q[j], kj)
                acc = acc + prod
        values.append(acc)
    return values, target


@dataclass
class ChannelCheck:
    gamma: float
    t: int
    numeric_fidelity: float
    formula_fidelity: float
    difference: float
    verdict: str
    report: object

    @property
    def passed(self):
        return self.verdict == "exact" and self.difference <= 1e-6


def verify_by_channel(code, gamma, t=None, max_amplitudes=20000):
    """Run the generic correctability checker on the actual loss channel.

    Builds per-register loss operators at the code's occupation cutoff,
    enumerates every loss pattern with up to t quanta in total, and
    compares the summed detection probabilities against the closed-form
    fidelity.  For a valid code the checker verdict is "exact": each
    pattern shrinks the whole code space uniformly and distinct patterns
    land in orthogonal sectors.
    """
    t = code.t if t is None else t
    code.validate()
    if code.n_total is None:
        raise ValueError("basis-state totals differ; the formula does not apply")
    n = code.max_occupation
    dim = (n + 1) ** code.m
    if dim > max_amplitudes:
        raise ValueError(
            f"state vector needs {dim} amplitudes, cap is {max_amplitudes}")

    single = standard_channel("bosonic_ad", gamma=gamma, cutoff=n).kraus
    shape = (n + 1,) * code.m

    def apply_pattern(pattern):
        def act(vec):
            tens = np.asarray(vec, dtype=complex).reshape(shape)
            for axis, k in enumerate(pattern):
                tens = np.moveaxis(
                    np.tensordot(single[k], tens, axes=(1, axis)), 0, axis)
            return tens.reshape(dim)
        return act

    patterns = [p for s in range(t + 1) for p in loss_patterns(code.m, s)
                if max(p) <= n]
    errors = [apply_pattern(p) for p in patterns]
    space = qec_engine.CodeSpace(dim, code.logical_vectors())
    report = qec_engine.check_approximate(space, errors)
    numeric = float(report.crude_bound)
    formula = code_fidelity(code.n_total, t, gamma)
    return ChannelCheck(gamma, t, numeric, formula, abs(numeric - formula),
                        report.verdict, report)


# ---------------------------------------------------------------------------
# existence and rate


def existence_min_NT(t, m, l_o):
    """Smallest admissible total quanta count for l_o + 1 logical states.

    Counting bound: the images of all logicals under every pattern of up
    to t losses must fit, mutually distinguishable, among the occupation
    vectors available at spacing t + 1.
    """
    if t < 0 or m < 1 or l_o < 1:
        raise ValueError("need t >= 0, m >= 1, l_o >= 1")
    need = 1 + l_o + l_o * sum(partitions(s, m) for s in range(t + 1))
    nt = t + 1
    while partitions(nt // (t + 1), m) < need:
        nt += t + 1
    return nt


def rate(code):
    """Encoded bits per qubit-equivalent of register space."""
    n = code.max_occupation
    k = math.log2(code.n_levels)
    return k / (code.m * math.log2(n + 1))


def balance_weights(qcs_lists, t, tol=DEFAULT_TOL):
    """Solve for per-logical weights equalizing moments up to order t.

    Least squares on the linear system (normalization plus moment matching
    against the first logical); raises when no assignment fits or the best
    one needs negative weight.  Returns one weight array per logical.
    """
    lists = [[as_qcs(q) for q in states] for states in qcs_lists]
    m = lists[0][0].m
    sizes = [len(states) for states in lists]
    offs = np.concatenate(([0], np.cumsum(sizes)))
    nvar = offs[-1]

    rows, rhs = [], []
    for l in range(len(lists)):
        row = np.zeros(nvar)
        row[offs[l]:offs[l + 1]] = 1.0
        rows.append(row)
        rhs.append(1.0)
    for s in range(1, t + 1):
        for combo in itertools.combinations_with_replacement(range(m), s):
            def mono(q):
                prod = 1.0
                for j in combo:
                    prod *= q[j]
                return prod
            base = [mono(q) for q in lists[0]]
            for l in range(1, len(lists)):
                row = np.zeros(nvar)
                row[offs[0]:offs[1]] = base
                row[offs[l]:offs[l + 1]] = [-mono(q) for q in lists[l]]
                rows.append(row)
                rhs.append(0.0)

    a, b = np.array(rows), np.array(rhs)
    w, *_ = np.linalg.lstsq(a, b, rcond=None)
    if np.abs(a @ w - b).max() > tol:
        raise ValueError("no weight assignment matches the moments")
    if w.min() < -tol:
        raise ValueError("moment matching requires negative weights")
    w = np.clip(w, 0.0, None)
    return [w[offs[l]:offs[l + 1]] for l in range(len(lists))]


# ---------------------------------------------------------------------------
# worked example codes


def _balanced(m, t, orbits):
    return BosonicCode(m, t, [
        [(Qcs(v), Fraction(1, len(orbit))) for v in orbit] for orbit in orbits
    ]).validate()


def example_codes():
    """Eleven worked loss codes, keyed ex1..ex11.

    ex1-ex3 are rotation-orbit one-loss codes, ex4 a two-loss orbit pair,
    ex5-ex6 hand-built one-loss codes, ex7-ex11 weighted codes for two to
    four losses.  ex10's five-plus-four states carry the weights of a
    product of second differences on a spacing-four grid; ex11's weights
    solve the order-four moment system on its ten basis states.
    """
    f = Fraction
    codes = {
        "ex1": _balanced(2, 1, [[(4, 0), (0, 4)], [(2, 2)]]),
        "ex2": _balanced(3, 1, [
            [(0, 0, 12), (12, 0, 0), (0, 12, 0)],
            [(0, 2, 10), (10, 0, 2), (2, 10, 0)],
            [(0, 4, 8), (8, 0, 4), (4, 8, 0)],
            [(0, 6, 6), (6, 0, 6), (6, 6, 0)],
            [(0, 8, 4), (4, 0, 8), (8, 4, 0)],
            [(0, 10, 2), (2, 0, 10), (10, 2, 0)],
            [(2, 2, 8), (8, 2, 2), (2, 8, 2)],
            [(2, 4, 6), (6, 2, 4), (4, 6, 2)],
            [(2, 6, 4), (6, 4, 2), (4, 2, 6)],
            [(4, 4, 4)],
        ]),
        "ex3": _balanced(3, 1, [
            [(6, 0, 0), (0, 6, 0), (0, 0, 6)],
            [(4, 2, 0), (2, 0, 4), (0, 4, 2)],
            [(2, 4, 0), (4, 0, 2), (0, 2, 4)],
            [(2, 2, 2)],
        ]),
        "ex4": _balanced(3, 2, [
            [(3, 0, 6), (0, 6, 3), (6, 3, 0)],
            [(0, 3, 6), (3, 6, 0), (6, 0, 3)],
        ]),
        "ex5": _balanced(4, 1, [
            [(0, 3, 2, 1), (1, 0, 3, 2), (2, 1, 0, 3), (3, 2, 1, 0)],
            [(0, 1, 2, 3), (1, 2, 3, 0), (2, 3, 0, 1), (3, 0, 1, 2)],
        ]),
        "ex6": _balanced(2, 1, [
            [(7, 0), (1, 6)],
            [(5, 2), (3, 4)],
        ]),
        "ex7": BosonicCode(2, 2, [
            [((9, 0), f(1, 4)), ((3, 6), f(3, 4))],
            [((0, 9), f(1, 4)), ((6, 3), f(3, 4))],
        ]).validate(),
        "ex8": BosonicCode(3, 2, [
            [((0, 3, 6), f(1, 3)), ((3, 0, 6), f(1, 3)), ((3, 6, 0), f(1, 3))],
            [((3, 3, 3), f(2, 3)), ((0, 0, 9), f(2, 9)), ((0, 9, 0), f(1, 9))],
        ]).validate(),
        "ex9": BosonicCode(2, 3, [
            [((0, 16), f(1, 8)), ((16, 0), f(1, 8)), ((8, 8), f(3, 4))],
            [((4, 12), f(1, 2)), ((12, 4), f(1, 2))],
        ]).validate(),
        "ex10": BosonicCode(3, 3, [
            [((0, 0, 20), f(1, 8)), ((0, 8, 12), f(1, 8)),
             ((8, 0, 12), f(1, 8)), ((8, 8, 4), f(1, 8)),
             ((4, 4, 12), f(1, 2))],
            [((0, 4, 16), f(1, 4)), ((4, 0, 16), f(1, 4)),
             ((4, 8, 8), f(1, 4)), ((8, 4, 8), f(1, 4))],
        ]).validate(),
        "ex11": BosonicCode(2, 4, [
            [((0, 50), f(13, 216)), ((20, 30), f(31, 60)), ((30, 20), f(1, 9)),
             ((40, 10), f(5, 24)), ((45, 5), f(14, 135))],
            [((5, 45), f(1, 18)), ((10, 40), f(1, 6)), ((25, 25), f(11, 30)),
             ((35, 15), f(1, 3)), ((50, 0), f(7, 90))],
        ]).validate(),
    }
    return codes
