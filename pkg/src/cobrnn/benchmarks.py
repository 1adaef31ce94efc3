"""Standard continuous test objectives (minimisation)."""

import numpy as np


def sphere(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.dot(x, x))


def rosenbrock(x):
    x = np.asarray(x, dtype=np.float64)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


def rastrigin(x):
    x = np.asarray(x, dtype=np.float64)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


# name -> (objective, default symmetric bound, location of the global minimum)
BENCHMARKS = {
    "sphere": (sphere, 5.0, 0.0),
    "rosenbrock": (rosenbrock, 5.0, 1.0),
    "rastrigin": (rastrigin, 5.12, 0.0),
}
