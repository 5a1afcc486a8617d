"""Random expressions over the smooth, everywhere-defined subset of the grammar."""

import numpy as np


def random_expression(rng: np.random.Generator, d: int, depth: int = 4) -> str:
    if depth == 0 or rng.random() < 0.25:
        if rng.random() < 0.6:
            return f"x{rng.integers(d)}"
        return f"{rng.uniform(-2, 2):.3f}"
    kind = rng.choice(["add", "sub", "mul", "neg", "pow", "sin", "cos", "exp"])
    a = random_expression(rng, d, depth - 1)
    if kind in ("add", "sub", "mul"):
        b = random_expression(rng, d, depth - 1)
        op = {"add": "+", "sub": "-", "mul": "*"}[kind]
        return f"({a}) {op} ({b})"
    if kind == "neg":
        return f"-({a})"
    if kind == "pow":
        return f"({a})^{rng.integers(0, 4)}"
    if kind == "exp":
        # keep magnitudes moderate so central differences stay well conditioned
        return f"exp(sin({a}))"
    return f"{kind}({a})"


def close(analytic, fd, rel=1e-5, abs_near_zero=1e-7) -> bool:
    return abs(analytic - fd) <= max(rel * max(abs(analytic), abs(fd)), abs_near_zero)
