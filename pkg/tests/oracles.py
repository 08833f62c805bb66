"""Independent high-precision oracles for the scalar LQ corner games.

Nothing here imports the solver. For a corner with scalars (g1, g2, h1, h2)
both costates are multiples of one function q with q' = -(x + a q), q(T) = 0:
p1 = g1 q and p2 = h1 q. Hence x' = a x - M q with M = b^2 g1/g2 + c^2 h1/h2,
so x and q are sums of exp(+r t) and exp(-r t), r = sqrt(a^2 + M), and
every payoff integral is a sum of exponential antiderivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

mp.mp.dps = 50


@dataclass
class ExpPair:
    """f(t) = P exp(r t) + Q exp(-r t) on [0, T]."""

    P: mp.mpf
    Q: mp.mpf
    r: mp.mpf

    def __call__(self, t):
        t = mp.mpf(t)
        return self.P * mp.exp(self.r * t) + self.Q * mp.exp(-self.r * t)

    def scaled(self, k):
        return ExpPair(self.P * k, self.Q * k, self.r)

    def square_integral(self, T):
        r, T = self.r, mp.mpf(T)
        return (
            self.P**2 * mp.expm1(2 * r * T) / (2 * r)
            + 2 * self.P * self.Q * T
            - self.Q**2 * mp.expm1(-2 * r * T) / (2 * r)
        )


@dataclass
class CornerOracle:
    x: ExpPair
    p1: ExpPair
    p2: ExpPair
    u1: ExpPair
    u2: ExpPair
    r: mp.mpf
    T: mp.mpf

    def payoff(self, w1, w2, u):
        """0.5 * integral of (w1 x^2 + w2 u^2) over [0, T]."""
        return (mp.mpf(w1) * self.x.square_integral(self.T) + mp.mpf(w2) * u.square_integral(self.T)) / 2


def corner_oracle(a, b, c, x0, T, g1, g2, h1, h2) -> CornerOracle:
    """Exact corner equilibrium on [0, T] (requires M != 0 and a^2 + M > 0)."""
    a, b, c, x0, T = (mp.mpf(v) for v in (a, b, c, x0, T))
    g1, g2, h1, h2 = (mp.mpf(v) for v in (g1, g2, h1, h2))
    M = b**2 * g1 / g2 + c**2 * h1 / h2
    r = mp.sqrt(a**2 + M)
    # x = al e^{rt} + be e^{-rt}; q = (a x - x')/M; q(T) = 0
    e = mp.exp(-2 * r * T)
    # (a - r) al e^{rT} + (a + r) be e^{-rT} = 0  ->  al = -(a + r) be e^{-2rT} / (a - r)
    k = -(a + r) * e / (a - r)
    be = x0 / (1 + k)
    al = k * be
    x = ExpPair(al, be, r)
    q = ExpPair((a - r) * al / M, (a + r) * be / M, r)
    return CornerOracle(
        x=x,
        p1=q.scaled(g1),
        p2=q.scaled(h1),
        u1=q.scaled(-b * g1 / g2),
        u2=q.scaled(-c * h1 / h2),
        r=r,
        T=T,
    )


EXAMPLE = dict(a=2, b=1, c=1, x0=1, T=3)
EXAMPLE_WEIGHTS = dict(G1=(0.9, 1.2), G2=(0.3, 0.6), H1=(0.8, 1.5), H2=(0.4, 0.5))
CORNER_PICKS = {"ll": (0, 0), "lu": (0, 1), "ul": (1, 0), "uu": (1, 1)}


def example_corner(label: str) -> CornerOracle:
    e1, e2 = CORNER_PICKS[label]
    W = {k: tuple(mp.mpf(str(v)) for v in pair) for k, pair in EXAMPLE_WEIGHTS.items()}
    return corner_oracle(
        **EXAMPLE, g1=W["G1"][e1], g2=W["G2"][e1], h1=W["H1"][e2], h2=W["H2"][e2]
    )


def example_payoffs(label: str):
    """((J1lo, J1hi), (J2lo, J2hi)) of a corner equilibrium, original interval weights."""
    o = example_corner(label)
    W = {k: tuple(mp.mpf(str(v)) for v in pair) for k, pair in EXAMPLE_WEIGHTS.items()}
    J1 = tuple(o.payoff(W["G1"][k], W["G2"][k], o.u1) for k in (0, 1))
    J2 = tuple(o.payoff(W["H1"][k], W["H2"][k], o.u2) for k in (0, 1))
    return J1, J2


# Closed-form expressions as stated for the example (LL and UU share the
# exponent 3, LU uses sqrt(10), UL sqrt(8)).
E18 = mp.exp(18)
D = (5 + E18) ** 2


def stated_ll_u1(t):
    t = mp.mpf(t)
    return 3 / (5 + E18) * (mp.exp(3 * t) - mp.exp(18 - 3 * t))


def stated_ll_x(t):
    t = mp.mpf(t)
    return (5 * mp.exp(3 * t) + mp.exp(18 - 3 * t)) / (5 + E18)


def stated_uu_u1(t):
    t = mp.mpf(t)
    return 2 / (5 + E18) * (mp.exp(3 * t) - mp.exp(18 - 3 * t))


def stated_payoffs():
    """Closed-form payoff intervals as stated for all four corners (mpmath)."""
    E36 = mp.exp(36)
    out = {
        "ll": (
            ((mp.mpf(3) / 10 * E36 + mp.mpf(36) / 5 * E18 - mp.mpf(21) / 10) / D,
             (mp.mpf(11) / 20 * E36 + mp.mpf(21) / 5 * E18 - mp.mpf(59) / 20) / D),
            ((mp.mpf(1) / 5 * E36 + mp.mpf(44) / 5 * E18 - mp.mpf(9) / 5) / D,
             (mp.mpf(7) / 24 * E36 + mp.mpf(39) / 2 * E18 - mp.mpf(79) / 24) / D),
        ),
        "uu": (
            (mp.mpf(3) / 5 * (mp.mpf(39) / 2 * E18 + mp.mpf(7) / 24 * E36 - mp.mpf(79) / 24) / D,
             mp.mpf(3) / 5 * (22 * E18 + E36 / 2 - mp.mpf(9) / 2) / D),
            ((mp.mpf(14) / 5 * E18 + mp.mpf(11) / 30 * E36 - mp.mpf(59) / 30) / D,
             (12 * E18 + E36 / 2 - mp.mpf(7) / 2) / D),
        ),
    }
    s = mp.sqrt(10)
    K = (s + 2) + (s - 2) * mp.exp(6 * s)
    e6, e12 = mp.exp(6 * s), mp.exp(12 * s)
    out["lu"] = (
        (mp.mpf(3) / 10 / K**2 * (33 * e6 + 3 * (17 - 4 * s) / (4 * s) * e12 - 3 * (17 + 4 * s) / (4 * s)),
         mp.mpf(3) / 10 / K**2 * (14 * e6 + (37 - 8 * s) / (2 * s) * e12 - (37 + 8 * s) / (2 * s))),
        (1 / K**2 * (mp.mpf(14) / 5 * e6 + (37 - 8 * s) / (10 * s) * e12 - (37 + 8 * s) / (10 * s)),
         1 / K**2 * (mp.mpf(33) / 2 * e6 + (37 - 8 * s) / (8 * s) * e12 - (37 + 8 * s) / (8 * s))),
    )
    s = mp.sqrt(8)
    K = (s + 2) + (s - 2) * mp.exp(6 * s)
    e6, e12 = mp.exp(6 * s), mp.exp(12 * s)
    out["ul"] = (
        (mp.mpf(3) / 5 / K**2 * (15 * e6 + (10 - 3 * s) / (2 * s) * e12 - (10 + 3 * s) / (2 * s)),
         mp.mpf(3) / 5 / K**2 * (8 * e6 + (7 - 2 * s) / s * e12 - (7 + 2 * s) / s)),
        (1 / K**2 * (mp.mpf(32) / 5 * e6 + (14 - 4 * s) / (5 * s) * e12 - (14 + 4 * s) / (5 * s)),
         1 / K**2 * (7 * e6 + (10 - 3 * s) / (2 * s) * e12 - (10 + 3 * s) / (2 * s))),
    )
    return out


def rel(a, b) -> float:
    return float(abs(mp.mpf(a) - mp.mpf(b)) / abs(mp.mpf(b)))
