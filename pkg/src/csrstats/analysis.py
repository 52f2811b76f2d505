"""Time-profile construction and mRNA/protein pairing analysis.

Per-cell degrees of clustering are reduced to one median per time point and
species, normalized to zero mean and unit variance across time, and compared
across all mRNA x protein pairings by Pearson correlation.  Corresponding
pairs (same species) are scored against non-corresponding ones with a
one-tailed Mann-Whitney test and per-pair Z-scores.

Conventions (recorded in report metadata): profile time points are matched by
ascending rank; normalization and Z-scores use the population standard
deviation; the Z-score comparison set is every pair sharing exactly one
member with the pair under test, that pair itself excluded.
"""

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional

import numpy as np

from .errors import InputError

ANALYSIS_CONVENTIONS = {
    "alignment": "time points matched by ascending rank",
    "normalization": "per profile: subtract mean, divide by population std",
    "zscore_std": "population",
    "zscore_comparisons": "pairs sharing exactly one member, pair under test excluded",
    "mann_whitney": "one-tailed, corresponding pairs greater; exact when n <= 12",
}


@dataclass(frozen=True)
class Profile:
    """Median degree-of-clustering across time for one species and kind."""

    species: str
    kind: str  # "mRNA" or "protein"
    times: tuple
    medians: tuple
    normalized: Optional[tuple]

    @property
    def label(self):
        return f"{self.species}/{self.kind}"


def build_profiles(per_cell_deltas):
    """Reduce per-cell degrees of clustering to normalized time profiles.

    Parameters
    ----------
    per_cell_deltas : dict
        Maps ``(species, kind)`` to ``{time: [delta, ...]}``; every series
        needs at least two time points with at least one cell each.

    Returns
    -------
    list of Profile
        Sorted by (species, kind).  A profile whose medians are constant
        across time carries ``normalized=None`` (it cannot enter
        correlations).
    """
    profiles = []
    for (species, kind) in sorted(per_cell_deltas):
        series = per_cell_deltas[(species, kind)]
        if len(series) < 2:
            raise InputError(f"{species}/{kind}: need at least two time points")
        times = sorted(series)
        medians = []
        for t in times:
            deltas = np.asarray(series[t], dtype=float)
            if deltas.size == 0:
                raise InputError(f"{species}/{kind}: no cells at time {t}")
            medians.append(float(np.median(deltas)))
        medians = np.asarray(medians)
        std = float(medians.std())  # population std: normalized variance is 1
        normalized = None
        if std > 0:
            normalized = tuple((medians - medians.mean()) / std)
        profiles.append(
            Profile(species, kind, tuple(float(t) for t in times),
                    tuple(medians), normalized)
        )
    return profiles


def pearson(xs, ys):
    """Sample Pearson correlation of two equal-length series."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise InputError("need two 1-d series of equal length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = math.sqrt(float((xc * xc).sum()) * float((yc * yc).sum()))
    if denom == 0.0:
        raise InputError("pearson undefined for a constant series")
    return float((xc * yc).sum()) / denom


def _u_statistic(a, b):
    a = np.asarray(a, dtype=float)[:, None]
    b = np.asarray(b, dtype=float)[None, :]
    return float((a > b).sum()) + 0.5 * float((a == b).sum())


def mann_whitney_one_tailed(group_a, group_b):
    """One-tailed Mann-Whitney p-value for H1: group_a stochastically greater.

    For combined sizes up to 12 the p-value is exact: every assignment of the
    pooled values to the two group sizes is enumerated and p is the fraction
    with a U statistic at least the observed one.  Larger samples use the
    normal approximation with tie correction and continuity correction.
    """
    a = list(group_a)
    b = list(group_b)
    if not a or not b:
        raise InputError("both groups must be nonempty")
    n_a, n_b = len(a), len(b)
    u_obs = _u_statistic(a, b)
    pooled = np.asarray(a + b, dtype=float)
    n = n_a + n_b
    if n <= 12:
        hits = 0
        total = 0
        idx = np.arange(n)
        for pick in combinations(range(n), n_a):
            mask = np.zeros(n, dtype=bool)
            mask[list(pick)] = True
            u = _u_statistic(pooled[mask], pooled[~mask])
            hits += u >= u_obs
            total += 1
        return hits / total
    mean = n_a * n_b / 2.0
    _, tie_counts = np.unique(pooled, return_counts=True)
    tie_term = float((tie_counts ** 3 - tie_counts).sum()) / (n * (n - 1))
    var = n_a * n_b / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0  # all values tied: no separation
    z = (u_obs - mean - 0.5) / math.sqrt(var)
    return 0.5 * math.erfc(z / math.sqrt(2.0))


def pair_zscore(row, col, correlations):
    """Z-score of one pairing against the pairs sharing exactly one member.

    The comparison set holds every entry in the same row or same column of the
    correlation matrix except the (row, col) entry itself; the score is the
    entry's excess over the comparison mean in population-std units.
    """
    m = np.asarray(correlations, dtype=float)
    if m.ndim != 2:
        raise InputError("correlations must be a matrix")
    comparisons = np.concatenate([np.delete(m[row, :], col), np.delete(m[:, col], row)])
    if comparisons.size < 2:
        raise InputError("comparison set too small")
    std = float(comparisons.std())
    if std == 0.0:
        raise InputError("zero-variance comparison set")
    return float((m[row, col] - comparisons.mean()) / std)


@dataclass(frozen=True, eq=False)  # identity equality: holds the matrix
class PairingReport:
    """Correlations over all mRNA x protein pairings plus significance scores."""

    mrna_labels: tuple  # species with an mRNA profile (matrix rows)
    protein_labels: tuple  # species with a protein profile (matrix columns)
    correlations: np.ndarray
    corresponding: tuple  # species present on both sides
    pair_r: dict  # species -> Pearson r of its corresponding pair
    pair_z: dict  # species -> Z-score of its corresponding pair
    mann_whitney_p: float
    conventions: dict


def pairing_report(profiles):
    """Correlate every mRNA profile with every protein profile and score pairs.

    Profiles are matched index-wise after sorting each profile's time points
    (profiles must all have the same number of time points).  Returns the full
    correlation matrix, per-corresponding-pair r and Z, and the one-tailed
    Mann-Whitney p for corresponding pairs being more correlated than the
    rest.
    """
    mrna = [p for p in profiles if p.kind == "mRNA"]
    protein = [p for p in profiles if p.kind == "protein"]
    if not mrna or not protein:
        raise InputError("need at least one mRNA and one protein profile")
    lengths = {len(p.times) for p in mrna + protein}
    if len(lengths) != 1:
        raise InputError("all profiles must share the same number of time points")
    for p in mrna + protein:
        if p.normalized is None:
            raise InputError(f"{p.label}: constant profile cannot be correlated")

    matrix = np.empty((len(mrna), len(protein)))
    for i, pm in enumerate(mrna):
        for j, pp in enumerate(protein):
            matrix[i, j] = pearson(pm.normalized, pp.normalized)

    mrna_species = [p.species for p in mrna]
    protein_species = [p.species for p in protein]
    corresponding = [s for s in mrna_species if s in protein_species]
    if not corresponding:
        raise InputError("no corresponding mRNA/protein pairs")

    pair_r, pair_z = {}, {}
    corr_vals, other_vals = [], []
    pairs = {(mrna_species.index(s), protein_species.index(s)) for s in corresponding}
    for i in range(len(mrna)):
        for j in range(len(protein)):
            (corr_vals if (i, j) in pairs else other_vals).append(matrix[i, j])
    for s in corresponding:
        i, j = mrna_species.index(s), protein_species.index(s)
        pair_r[s] = float(matrix[i, j])
        pair_z[s] = pair_zscore(i, j, matrix)
    if other_vals:
        p = mann_whitney_one_tailed(corr_vals, other_vals)
    else:
        p = 1.0
    return PairingReport(
        tuple(mrna_species),
        tuple(protein_species),
        matrix,
        tuple(corresponding),
        pair_r,
        pair_z,
        p,
        dict(ANALYSIS_CONVENTIONS),
    )
