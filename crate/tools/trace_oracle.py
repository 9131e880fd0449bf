"""Scalar hand-trace oracles for f(x) = x^2, written independently of the Rust code.

Prints 20-step (x, lr) traces for hypergradient descent and for DSA in both
probe forms, formatted as Rust array literals.
"""
import math

EPS = 1e-12


def grad(x):
    return 2.0 * x


def hd(x=1.0, alpha=0.1, beta=0.01, steps=20):
    out, prev = [], None
    for _ in range(steps):
        g = grad(x)
        if prev is not None:
            alpha = alpha + beta * (g * prev)
        x = x - alpha * g
        prev = g
        out.append((x, alpha))
    return out


def sig(a):
    return 1.0 / (1.0 + math.exp(-a))


def dsa(x=1.0, alpha=0.0, beta=0.1, gamma=0.1, raw_probe=False, steps=20):
    out = []
    for _ in range(steps):
        g = grad(x)
        d = g / (abs(g) + EPS)
        lr = gamma * sig(alpha)
        x_trial = x - lr * (g if raw_probe else d)
        p = grad(x_trial) * g
        alpha = alpha + beta * p / (abs(p) + EPS)
        lr = gamma * sig(alpha)
        x = x - lr * d
        out.append((x, lr))
    return out


def emit(name, rows):
    print(f"const {name}: [(f64, f64); {len(rows)}] = [")
    for x, r in rows:
        print(f"    ({x!r}, {r!r}),")
    print("];")


if __name__ == "__main__":
    emit("HD_TRACE", hd())
    emit("DSA_TRACE", dsa())
    emit("DSA_RAW_PROBE_TRACE", dsa(raw_probe=True))
