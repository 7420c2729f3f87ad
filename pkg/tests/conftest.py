"""Shared test helpers: seeded random MiniLang program generation."""
from __future__ import annotations

import random

from fixscope.minilang import parse_minilang
from fixscope.tree import AstTree

NAMES = ("x", "y", "z", "n", "total")
BIN_OPS = ("+", "-", "*", "/")
CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")


def random_expr(rng: random.Random, depth: int = 0) -> str:
    roll = rng.random()
    if depth > 2 or roll < 0.35:
        if rng.random() < 0.5:
            return rng.choice(NAMES)
        return str(rng.randint(0, 99))
    if roll < 0.6:
        op = rng.choice(BIN_OPS)
        return f"({random_expr(rng, depth + 1)} {op} {random_expr(rng, depth + 1)})"
    if roll < 0.75:
        return f"f({random_expr(rng, depth + 1)})"
    op = rng.choice(CMP_OPS)
    return f"({random_expr(rng, depth + 1)} {op} {random_expr(rng, depth + 1)})"


def random_stmt(rng: random.Random, depth: int = 0) -> str:
    roll = rng.random()
    if depth > 1 or roll < 0.5:
        return f"{rng.choice(NAMES)} = {random_expr(rng)};"
    if roll < 0.65:
        body = " ".join(random_stmt(rng, depth + 1)
                        for _ in range(rng.randint(1, 2)))
        return f"if ({random_expr(rng)}) {{ {body} }}"
    if roll < 0.8:
        body = " ".join(random_stmt(rng, depth + 1)
                        for _ in range(rng.randint(1, 2)))
        return f"while ({random_expr(rng)}) {{ {body} }}"
    if roll < 0.9:
        return f"return {random_expr(rng)};"
    return f"g({random_expr(rng)});"


def random_program(rng: random.Random, max_stmts: int = 6) -> str:
    return "\n".join(random_stmt(rng) for _ in range(rng.randint(0, max_stmts)))


def random_tree(rng: random.Random, max_stmts: int = 6) -> AstTree:
    return parse_minilang(random_program(rng, max_stmts))
