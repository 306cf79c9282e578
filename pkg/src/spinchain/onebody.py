"""Closed-form diagnostics in the single-excitation sector.

With one excitation, every reduced state is at most rank 2 and all
entropies reduce to the binary entropy of subset occupation weights
p_X = sum_{m in X} |c_m|^2.  The TMI then becomes an explicit function of
(p_A, p_B, p_C), which is nonnegative everywhere on the probability
simplex and vanishes exactly on its boundary, so these routines both
cross-check the general pipeline and certify the sign structure cheaply.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import xlogy

from .bits import bit_positions
from .model import CouplingMatrix
from .partitions import PartitionSet, TmiSeries
from .propagate import TimeGrid, onebody_amplitudes

P_SNAP = 1e-12      # distance from {0, 1} inside which p snaps to the endpoint
NORM_TOL = 1e-10

__all__ = [
    "OccupationWeights", "SimplexScan", "binary_entropy", "occupation_weights",
    "tmi_binary", "simplex_scan", "onebody_tmi_scan",
]

_LN2 = math.log(2.0)


def binary_entropy(p):
    """H(p) = -p log2 p - (1-p) log2 (1-p), elementwise, in bits.

    Values within 1e-12 outside [0, 1] are clipped; anything farther out
    raises ValueError.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(arr < -P_SNAP) or np.any(arr > 1.0 + P_SNAP):
        bad = arr[(arr < -P_SNAP) | (arr > 1.0 + P_SNAP)]
        raise ValueError(f"probability {np.ravel(bad)[0]} outside [0, 1]")
    arr = np.clip(arr, 0.0, 1.0)
    h = -(xlogy(arr, arr) + xlogy(1.0 - arr, 1.0 - arr)) / _LN2
    if np.isscalar(p) or np.ndim(p) == 0:
        return float(h)
    return h


@dataclass(frozen=True)
class OccupationWeights:
    """Excitation probabilities of three disjoint subsets."""

    p_a: float
    p_b: float
    p_c: float

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_c"):
            p = getattr(self, name)
            if not -P_SNAP <= p <= 1.0 + P_SNAP:
                raise ValueError(f"{name}={p} outside [0, 1]")
            object.__setattr__(self, name, min(max(p, 0.0), 1.0))
        total = self.p_a + self.p_b + self.p_c
        if total > 1.0 + NORM_TOL:
            raise ValueError(f"occupation weights sum to {total} > 1")

    def as_tuple(self):
        return (self.p_a, self.p_b, self.p_c)


def occupation_weights(c: np.ndarray, a, b, c_subset) -> OccupationWeights:
    """Subset occupation probabilities of a normalized k=1 amplitude vector.

    ``a``, ``b``, ``c_subset`` are site bitmasks or SiteSubsets, pairwise
    disjoint; site m of the chain is entry m of ``c``.
    """
    from .entropy import _as_mask

    c = np.asarray(c, dtype=np.complex128)
    n = len(c)
    norm = np.linalg.norm(c)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValueError(f"amplitudes are not normalized (norm {norm})")
    masks = [_as_mask(x, n) for x in (a, b, c_subset)]
    if (masks[0] & masks[1]) or (masks[0] & masks[2]) or (masks[1] & masks[2]):
        raise ValueError("subsets must be pairwise disjoint")
    w = np.abs(c) ** 2
    ps = [float(np.sum(w[bit_positions(m)])) for m in masks]
    return OccupationWeights(*ps)


def tmi_binary(w, p_b=None, p_c=None) -> float:
    """TMI of a k=1 state as a function of occupation weights, in bits.

    Accepts an OccupationWeights or three probabilities.  Returns 0.0
    exactly when any weight vanishes or the three sum to one: those are
    the boundary faces of the parameter simplex.
    """
    if p_b is None:
        p_a, p_b, p_c = w.as_tuple()
    else:
        p_a, p_b, p_c = OccupationWeights(float(w), float(p_b), float(p_c)).as_tuple()
    if min(p_a, p_b, p_c) <= P_SNAP or p_a + p_b + p_c >= 1.0 - P_SNAP:
        return 0.0
    return float(
        binary_entropy(p_a) + binary_entropy(p_b) + binary_entropy(p_c)
        + binary_entropy(p_a + p_b + p_c)
        - binary_entropy(p_a + p_b) - binary_entropy(p_a + p_c)
        - binary_entropy(p_b + p_c)
    )


def _tmi_binary_grid(pa, pb, pc, psum):
    """Vectorized TMI with the same boundary snap as tmi_binary."""
    vals = (binary_entropy(pa) + binary_entropy(pb) + binary_entropy(pc)
            + binary_entropy(psum)
            - binary_entropy(pa + pb) - binary_entropy(pa + pc)
            - binary_entropy(pb + pc))
    boundary = (np.minimum(np.minimum(pa, pb), pc) <= P_SNAP) | (psum >= 1.0 - P_SNAP)
    return np.where(boundary, 0.0, vals)


@dataclass
class SimplexScan:
    """Extrema of the k=1 TMI over the weight simplex p_i >= 0, sum <= 1."""

    resolution: float
    min_value: float
    argmin: tuple
    max_value: float
    argmax: tuple


def simplex_scan(resolution: float = 0.01, refine: bool = True) -> SimplexScan:
    """Scan tmi_binary over a regular simplex grid.

    The minimum sits on the simplex boundary (where the TMI vanishes
    identically) and the maximum at the interior point (1/4, 1/4, 1/4);
    with ``refine`` the maximum is polished on two successively finer
    local grids.
    """
    steps = round(1.0 / resolution)
    if steps < 4 or abs(steps * resolution - 1.0) > 1e-9:
        raise ValueError(f"resolution {resolution} must divide 1 into >= 4 steps")
    i, j, k = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1),
                          np.arange(steps + 1), indexing="ij")
    keep = (i + j + k) <= steps
    i, j, k = i[keep], j[keep], k[keep]
    # integer sums keep the simplex boundary i+j+k == steps exact
    vals = _tmi_binary_grid(i / steps, j / steps, k / steps, (i + j + k) / steps)
    i_min = int(np.argmin(vals))
    i_max = int(np.argmax(vals))
    argmin = (i[i_min] / steps, j[i_min] / steps, k[i_min] / steps)
    argmax = (i[i_max] / steps, j[i_max] / steps, k[i_max] / steps)
    max_value = float(vals[i_max])

    if refine:
        span = resolution
        for _ in range(2):
            span /= 10.0
            offsets = np.linspace(-5 * span, 5 * span, 11)
            pa = argmax[0] + offsets[:, None, None]
            pb = argmax[1] + offsets[None, :, None]
            pc = argmax[2] + offsets[None, None, :]
            pa, pb, pc = np.broadcast_arrays(pa, pb, pc)
            ok = (pa > 0) & (pb > 0) & (pc > 0) & (pa + pb + pc < 1.0)
            vals_f = np.full(pa.shape, -np.inf)
            vals_f[ok] = _tmi_binary_grid(pa[ok], pb[ok], pc[ok],
                                          pa[ok] + pb[ok] + pc[ok])
            best = np.unravel_index(np.argmax(vals_f), vals_f.shape)
            if vals_f[best] > max_value:
                max_value = float(vals_f[best])
                argmax = (float(pa[best]), float(pb[best]), float(pc[best]))
    return SimplexScan(resolution=resolution, min_value=float(vals[i_min]),
                       argmin=tuple(float(x) for x in argmin),
                       max_value=max_value,
                       argmax=tuple(float(x) for x in argmax))


def _subset_probability_table(weights: np.ndarray) -> np.ndarray:
    """p[mask] = sum of site weights selected by the mask, for all masks."""
    n = len(weights)
    table = np.zeros(1 << n)
    for s in range(n):
        half = 1 << s
        # masks with bit s set are the upper half of each 2^(s+1) stride
        table = table.reshape(-1, 2 * half)
        table[:, half:] += weights[s]
        table = table.reshape(-1)
    return table


def onebody_tmi_scan(coupling: CouplingMatrix, site: int, grid: TimeGrid,
                     partitions: PartitionSet) -> TmiSeries:
    """Min/max TMI over partitions along a quench of one excitation.

    The excitation starts at ``site``; amplitudes evolve with the
    single-particle propagator, and each time step costs one binary-entropy
    table over subset masks plus seven gathers per partition.
    """
    pset = partitions if isinstance(partitions, PartitionSet) \
        else PartitionSet.from_triples(partitions)
    n = coupling.n_sites
    if pset.n_sites != n:
        raise ValueError("partitions and coupling disagree on chain length")
    amps = onebody_amplitudes(coupling, site, grid.physical_times(coupling.kac))
    ia, ib, ic, iab, iac, ibc, iabc = pset.lookup_masks

    n_t = len(grid)
    min_vals = np.empty(n_t)
    max_vals = np.empty(n_t)
    argmin = []
    argmax = []
    occupations = np.abs(amps) ** 2
    for ti in range(n_t):
        p = _subset_probability_table(occupations[ti])
        h = binary_entropy(p)
        vals = (h[ia] + h[ib] + h[ic] + h[iabc]) - (h[iab] + h[iac] + h[ibc])
        # same boundary snap as tmi_binary: zero on the simplex faces
        boundary = (np.minimum(np.minimum(p[ia], p[ib]), p[ic]) <= P_SNAP) \
            | (p[iabc] >= 1.0 - P_SNAP)
        vals = np.where(boundary, 0.0, vals)
        i_min = int(np.argmin(vals))
        i_max = int(np.argmax(vals))
        min_vals[ti] = vals[i_min]
        max_vals[ti] = vals[i_max]
        argmin.append(pset[i_min])
        argmax.append(pset[i_max])
    return TmiSeries(
        grid=grid, min_values=min_vals, max_values=max_vals,
        argmin=argmin, argmax=argmax,
        meta={"n_sites": n, "site": site, "strategy": pset.strategy,
              "occupations": occupations},
    )
