"""The three reference problems (sources, boundary data, inverse settings)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .asymptotics import PhysicalSetup


def source_ex1(x):
    x = np.asarray(x, dtype=float)
    return x - x ** 2 + x ** 3


def source_ex2(x):
    x = np.asarray(x, dtype=float)
    return np.sqrt(np.clip(x - x * x, 0.0, None))


def source_ex3(x):
    x = np.asarray(x, dtype=float)
    return x * np.sin(3.0 * np.pi * x)


SOURCES = {"ex1": source_ex1, "ex2": source_ex2, "ex3": source_ex3}


@dataclass(frozen=True)
class InverseSettings:
    t0: float
    n: int
    delta: float
    constraint_class: str
    gradient_observed: bool
    gaps: tuple = ()


@dataclass(frozen=True)
class ExampleProblem:
    name: str
    source: str
    setup: PhysicalSetup
    inverse: InverseSettings
    forward_error: float
    regular_error: float | None = None

    @property
    def f(self):
        return SOURCES[self.source]


EXAMPLES = {
    1: ExampleProblem(
        "ex1",
        "ex1",
        PhysicalSetup(mu=0.01, k=1.0, u_left=-10.0, u_right=5.0, t_final=0.3, x0_init=0.1),
        InverseSettings(t0=0.2, n=20, delta=0.01, constraint_class="monotone", gradient_observed=True),
        forward_error=0.0586,
    ),
    2: ExampleProblem(
        "ex2",
        "ex2",
        PhysicalSetup(mu=0.01, k=1.0, u_left=-10.0, u_right=5.0, t_final=0.3, x0_init=0.1),
        InverseSettings(t0=0.2, n=20, delta=0.01, constraint_class="concave", gradient_observed=True),
        forward_error=0.0386,
    ),
    3: ExampleProblem(
        "ex3",
        "ex3",
        PhysicalSetup(mu=0.01, k=1.0, u_left=-8.0, u_right=4.0, t_final=0.2, x0_init=0.1),
        InverseSettings(t0=0.2, n=499, delta=0.001, constraint_class="none", gradient_observed=False),
        forward_error=0.0411,
        regular_error=0.1081,
    ),
}

EX3_GAP = InverseSettings(
    t0=0.17, n=499, delta=0.01, constraint_class="none", gradient_observed=False, gaps=((0.77, 0.87),)
)
