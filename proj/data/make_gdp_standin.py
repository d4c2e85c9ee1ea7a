"""Synthetic stand-in for the quarterly regional GDP panels (2009Q4-2019Q4, 41 levels).

Levels follow a common growth factor plus AR(1) idiosyncratic growth, so that
log + first differencing yields 40 stationary points per series, the shape of
the real panels. Deterministic given the seed.
"""
import numpy as np

SIZES = {"small": 19, "medium": 49, "large": 65}
T_LEVELS = 41


def panel(p, rng):
    common = np.zeros(T_LEVELS)
    for t in range(1, T_LEVELS):
        common[t] = 0.5 * common[t - 1] + rng.normal(0.0, 0.004)
    loadings = rng.uniform(0.5, 1.5, size=p)
    growth = np.zeros((T_LEVELS, p))
    idio = np.zeros(p)
    phi = rng.uniform(-0.3, 0.6, size=p)
    for t in range(1, T_LEVELS):
        idio = phi * idio + rng.normal(0.0, 0.006, size=p)
        growth[t] = 0.005 + loadings * common[t] + idio
    start = rng.uniform(20e3, 2e6, size=p)
    return start * np.exp(np.cumsum(growth, axis=0))


def main():
    rng = np.random.default_rng(20240601)
    for name, p in SIZES.items():
        levels = panel(p, rng)
        header = ",".join(f"region{j + 1:02d}" for j in range(p))
        np.savetxt(f"gdp_standin_{name}.csv", levels, delimiter=",", header=header, comments="", fmt="%.17g")


if __name__ == "__main__":
    main()
