"""Slow, obviously-correct reference computations the tests compare against."""

from fractions import Fraction

import mpmath


def discrete_cdf(support, masses, x):
    total = sum(Fraction(m) for m in masses)
    return float(sum(Fraction(m) for s, m in zip(support, masses) if s <= x) / total)


def discrete_conditional_mean(support, masses, t):
    above = [(Fraction(s), Fraction(m)) for s, m in zip(support, masses) if s >= t]
    mass = sum(m for _, m in above)
    return float(sum(s * m for s, m in above) / mass)


def beta_conditional_mean(a, b, t):
    pdf = lambda x: x ** (a - 1) * (1 - x) ** (b - 1)
    num = mpmath.quad(lambda x: x * pdf(x), [t, 1])
    den = mpmath.quad(pdf, [t, 1])
    return float(num / den)


def normal_conditional_mean(mu, sd, t):
    pdf = lambda x: mpmath.npdf(x, mu, sd)
    num = mpmath.quad(lambda x: x * pdf(x), [t, mpmath.inf])
    den = mpmath.quad(pdf, [t, mpmath.inf])
    return float(num / den)


def gamma_conditional_mean(shape, rate, t):
    pdf = lambda x: x ** (shape - 1) * mpmath.e ** (-rate * x)
    num = mpmath.quad(lambda x: x * pdf(x), [t, mpmath.inf])
    den = mpmath.quad(pdf, [t, mpmath.inf])
    return float(num / den)


def pava_bruteforce(y, w):
    """Weighted isotonic fit via repeated pooling of the first violating pair."""
    blocks = [[float(v), float(wt), 1] for v, wt in zip(y, w)]
    changed = True
    while changed:
        changed = False
        for i in range(len(blocks) - 1):
            if blocks[i][0] > blocks[i + 1][0]:
                a, b = blocks[i], blocks[i + 1]
                wt = a[1] + b[1]
                blocks[i] = [(a[0] * a[1] + b[0] * b[1]) / wt, wt, a[2] + b[2]]
                del blocks[i + 1]
                changed = True
                break
    out = []
    for v, _, n in blocks:
        out += [v] * n
    return out
