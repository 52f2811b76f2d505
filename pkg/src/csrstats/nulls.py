"""CSR null-hypothesis engines.

Grid-valued nulls: maximum-likelihood Gamma fit and sampler, a weighted
Poisson-sum model fitted by EM, empirical resampling (with or without an
external reference grid), in-mask value permutation, and the total-conditioned
Dirichlet variant of the Gamma model.  Point-valued nulls: homogeneous Poisson
parametric bootstrap and the count-conditioned binomial process.

All samplers are pure functions of their explicit integer seed.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import digamma, gammaln, logsumexp, polygamma

from .errors import InputError, NumericalError
from .grids import PointSample, VoxelGrid
from .rng import make_generator

ALPHA_FLOOR = 1e-8
GAMMA_VALUE_FLOOR = 1e-6
DECOMP_TOL = 1e-9

#: mark weights used throughout the synthetic studies
DEFAULT_WEIGHTS = (0.25, 0.5, 1.0, 2.0, 4.0)

GRID_NULLS = frozenset(
    {"permutation", "gamma", "gamma-cond", "wsp", "empirical", "reference"}
)
POINT_NULLS = frozenset({"poisson", "binomial"})
NULL_KINDS = GRID_NULLS | POINT_NULLS


@dataclass(frozen=True)
class GammaParams:
    """Gamma model: mass on a region of volume V is Gamma(a * V, scale=b).

    ``a`` is the shape per unit volume; fitting a marginal at voxel volume
    ``l**d`` therefore yields ``a = fitted_shape / l**d`` (a no-op for unit
    voxels).
    """

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise InputError("gamma shape must be positive and finite")
        if not (np.isfinite(self.b) and self.b > 0):
            raise InputError("gamma scale must be positive and finite")


@dataclass(frozen=True)
class PoissonSumParams:
    """Weighted sum of independent Poisson counts.

    A region of volume V carries ``sum_m weights[m] * Poisson(rates[m] * V)``;
    ``rates`` are per unit volume.  Weights are fixed; only rates are fitted.
    """

    weights: tuple
    rates: tuple

    def __post_init__(self):
        weights = tuple(float(w) for w in self.weights)
        rates = tuple(float(a) for a in self.rates)
        if len(weights) < 1:
            raise InputError("need at least one mark weight")
        if len(weights) != len(rates):
            raise InputError("weights and rates must have equal length")
        if any(not (np.isfinite(w) and w > 0) for w in weights):
            raise InputError("mark weights must be positive and finite")
        if len(set(weights)) != len(weights):
            raise InputError("mark weights must be distinct")
        if any(not (np.isfinite(a) and a >= 0) for a in rates):
            raise InputError("mark rates must be nonnegative and finite")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "rates", rates)


@dataclass(frozen=True)
class NullModelSpec:
    """Which CSR null engine to run, plus its engine-specific parameters.

    ``kind`` is one of ``permutation | gamma | gamma-cond | wsp | empirical |
    reference | poisson | binomial``.  ``weights`` and ``em_iters`` apply to
    the ``wsp`` engine; ``reference`` (a VoxelGrid or a list of them) applies
    to the ``reference`` engine.
    """

    kind: str
    weights: tuple = DEFAULT_WEIGHTS
    em_iters: int = 5
    reference: object = None

    def __post_init__(self):
        if self.kind not in NULL_KINDS:
            raise InputError(f"unknown null model kind {self.kind!r}")
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind == "wsp" and int(self.em_iters) < 1:
            raise InputError("em_iters must be at least 1")
        if self.kind == "reference" and self.reference is None:
            raise InputError("reference null model requires a reference grid")

    @property
    def grid_based(self):
        return self.kind in GRID_NULLS


# ---------------------------------------------------------------------------
# Gamma model
# ---------------------------------------------------------------------------


def fit_gamma_mle(values):
    """Maximum-likelihood Gamma fit to a batch of nonnegative values.

    Values are clamped to ``1e-6`` from below (Gamma support is positive and
    fluorescence grids contain empty voxels).  The shape solves
    ``log(k) - psi(k) = log(mean) - mean(log x)`` by Newton iteration from the
    moment start ``mean^2 / variance``; the scale is ``mean / shape``.  Falls
    back to the moment estimate if Newton leaves the domain.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size < 10:
        raise InputError("gamma fit requires at least 10 values")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InputError("gamma fit requires finite nonnegative values")
    v = np.maximum(v, GAMMA_VALUE_FLOOR)
    mean = float(v.mean())
    var = float(v.var(ddof=1))
    if var <= 0.0:
        raise InputError("degenerate marginal: zero variance")
    s = math.log(mean) - float(np.log(v).mean())
    k0 = mean * mean / var
    k = k0
    if s > 0:
        for _ in range(100):
            f = math.log(k) - float(digamma(k)) - s
            fprime = 1.0 / k - float(polygamma(1, k))
            k_new = k - f / fprime
            if not np.isfinite(k_new) or k_new <= 0:
                k = k0  # Newton left the domain; keep the moment estimate
                break
            step = abs(k_new - k)
            k = k_new
            if step < 1e-10:
                break
    return GammaParams(k, mean / k)


def sample_gamma_grid(params, window, mask, seed):
    """Draw an i.i.d. Gamma grid: each in-mask voxel ~ Gamma(a * l**d, b)."""
    grid = _empty_grid(window, mask)
    rng = make_generator(seed)
    shape = params.a * window.voxel_len ** window.dim
    return grid.with_active_values(
        rng.gamma(shape, scale=params.b, size=grid.n_active)
    )


def sample_dirichlet_conditioned(a, total, window, mask, seed):
    """Draw a Gamma grid conditioned on its total mass.

    Draws i.i.d. Gamma(a * l**d, 1) per in-mask voxel and rescales so the grid
    sums to ``total`` (a Dirichlet draw scaled by the total).
    """
    if not (np.isfinite(total) and total > 0):
        raise InputError("conditioning total must be positive")
    if not (np.isfinite(a) and a > 0):
        raise InputError("gamma shape must be positive")
    grid = _empty_grid(window, mask)
    rng = make_generator(seed)
    shape = a * window.voxel_len ** window.dim
    draws = rng.gamma(shape, scale=1.0, size=grid.n_active)
    if draws.sum() == 0.0:  # possible underflow for minuscule shapes
        draws = rng.gamma(shape, scale=1.0, size=grid.n_active)
        if draws.sum() == 0.0:
            raise NumericalError("all Dirichlet draws underflowed to zero")
    return grid.with_active_values(draws * (total / draws.sum()))


def _empty_grid(window, mask):
    return VoxelGrid(window, np.zeros(window.extent), mask)


# ---------------------------------------------------------------------------
# Weighted Poisson-sum model (EM fit)
# ---------------------------------------------------------------------------


def _validated_weights(weights):
    w = tuple(float(x) for x in weights)
    if len(w) < 1:
        raise InputError("need at least one mark weight")
    if any(not (np.isfinite(x) and x > 0) for x in w):
        raise InputError("mark weights must be positive and finite")
    if len(set(w)) != len(w):
        raise InputError("mark weights must be distinct")
    return w


@lru_cache(maxsize=65536)
def _decomposition_array(x, weights):
    """All count vectors n with sum_m weights[m]*n[m] == x (within DECOMP_TOL).

    Rows are sorted lexicographically; dtype int64, shape (n_solutions, M).
    Weights are iterated from largest to smallest with the smallest weight
    solved in closed form, so the search visits O(n_solutions) nodes.
    """
    m_count = len(weights)
    order = sorted(range(m_count), key=lambda i: -weights[i])
    w_desc = [weights[i] for i in order]
    found = []
    counts = [0] * m_count

    def descend(level, residual):
        w = w_desc[level]
        if level == m_count - 1:
            n = int(round(residual / w))
            if n >= 0 and abs(residual - n * w) <= DECOMP_TOL:
                counts[level] = n
                vec = [0] * m_count
                for j in range(m_count):
                    vec[order[j]] = counts[j]
                found.append(tuple(vec))
            return
        for n in range(int(math.floor((residual + DECOMP_TOL) / w)) + 1):
            counts[level] = n
            descend(level + 1, residual - n * w)

    if x >= 0:
        descend(0, float(x))
    arr = np.array(sorted(found), dtype=np.int64).reshape(len(found), m_count)
    arr.setflags(write=False)
    return arr


def enumerate_decompositions(x, weights):
    """List every nonnegative integer vector n with ``sum w[m]*n[m] == x``.

    Equality is tested within 1e-9; the list is empty when `x` is not
    representable, and ``[(0,...,0)]`` when ``x == 0``.
    """
    if x < 0:
        raise InputError("value must be nonnegative")
    arr = _decomposition_array(float(x), _validated_weights(weights))
    return [tuple(int(n) for n in row) for row in arr]


def round_to_representable(x, weights):
    """Round `x` to the nearest value expressible as ``sum w[m]*n[m]``.

    Ties round downward.  When every weight is an integer multiple of the
    smallest (the usual mark ladders), representable values are exactly the
    multiples of the smallest weight and the rounding is closed-form;
    otherwise a bounded branch-and-bound search is used.
    """
    if x < 0:
        raise InputError("value must be nonnegative")
    w = _validated_weights(weights)
    w_min = min(w)
    below, above = _lattice_neighbours(x, w_min)
    if all(abs(v / w_min - round(v / w_min)) <= DECOMP_TOL for v in w):
        return below if (x - below) <= (above - x) else above

    # General weights: search all representable sums near x, seeded with the
    # w_min-multiple candidate (always representable).
    best = below if (x - below) <= (above - x) else above
    best_diff = abs(best - x)
    m_count = len(w)
    w_desc = sorted(w, reverse=True)

    def descend(level, acc):
        nonlocal best, best_diff
        if acc - x > best_diff + DECOMP_TOL:
            return
        if level == m_count:
            diff = abs(acc - x)
            if diff < best_diff - 1e-15 or (
                abs(diff - best_diff) <= 1e-15 and acc < best
            ):
                best, best_diff = acc, diff
            return
        wl = w_desc[level]
        n_max = int(math.floor((x + best_diff - acc) / wl + DECOMP_TOL)) + 1
        for n in range(max(n_max, 1)):
            descend(level + 1, acc + n * wl)

    descend(0, 0.0)
    return best


def _lattice_neighbours(x, step):
    lo = math.floor(x / step)
    return lo * step, (lo + 1) * step


def round_values_to_representable(values, weights):
    """Vectorized :func:`round_to_representable` over an array."""
    v = np.asarray(values, dtype=float)
    w = _validated_weights(weights)
    w_min = min(w)
    if all(abs(x / w_min - round(x / w_min)) <= DECOMP_TOL for x in w):
        q = v / w_min
        lo = np.floor(q)
        return np.where(q - lo <= 0.5, lo, lo + 1.0) * w_min
    return np.vectorize(lambda x: round_to_representable(x, w))(v)


def _greedy_decomposition(x, weights):
    """Largest-weight-first decomposition of x, or None if it misses exactly."""
    m_count = len(weights)
    order = sorted(range(m_count), key=lambda i: -weights[i])
    vec = [0] * m_count
    residual = float(x)
    for i in order:
        n = int(math.floor((residual + DECOMP_TOL) / weights[i]))
        vec[i] = n
        residual -= n * weights[i]
    if abs(residual) <= DECOMP_TOL:
        return tuple(vec)
    return None


def _prepare_decompositions(unique_values, weights):
    tables = []
    for x in unique_values:
        arr = _decomposition_array(float(x), weights)
        if arr.shape[0] == 0:
            raise InputError(f"unrepresentable value {x!r} for weights {weights}")
        tables.append((arr, gammaln(arr + 1.0).sum(axis=1)))
    return tables


def _poisson_sum_loglik(tables, counts, rates):
    # rates below the fit floor are evaluated at the floor, keeping
    # 0 * log(0) terms out of the decomposition sums
    rates = np.maximum(np.asarray(rates, dtype=float), ALPHA_FLOOR)
    log_rates = np.log(rates)
    total_rate = float(rates.sum())
    ll = 0.0
    for (arr, lgam), c in zip(tables, counts):
        ll += c * (float(logsumexp(arr @ log_rates - lgam)) - total_rate)
    return ll


def fit_poisson_sum_em(values, weights, max_iters=5, return_history=False):
    """Fit the rates of a weighted Poisson-sum model by EM.

    `values` must already be rounded to representable sums (see
    :func:`round_to_representable`); any unrepresentable value is an error.
    The E-step distributes responsibility for each value over its count-vector
    decompositions proportionally to the Poisson likelihoods; the M-step sets
    each rate to the responsibility-weighted mean count.  Initialization
    assigns every value its greedy largest-weight-first decomposition.  Rates
    are floored at 1e-8 and the log-likelihood is checked to be nondecreasing
    (slack 1e-9) after every iteration.

    Returns the fitted params, or ``(params, loglik_history)`` when
    `return_history` is set.
    """
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InputError("empty sample")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise InputError("values must be finite and nonnegative")
    if int(max_iters) < 1:
        raise InputError("max_iters must be at least 1")
    w = _validated_weights(weights)
    unique, counts = np.unique(v, return_counts=True)
    tables = _prepare_decompositions(unique, w)
    n_total = v.size
    m_count = len(w)

    init = np.zeros(m_count)
    for x, c, (arr, _) in zip(unique, counts, tables):
        greedy = _greedy_decomposition(x, w)
        vec = np.asarray(greedy if greedy is not None else arr[0], dtype=float)
        init += c * vec
    rates = np.maximum(init / n_total, ALPHA_FLOOR)

    history = [_poisson_sum_loglik(tables, counts, rates)]
    if not np.isfinite(history[0]):
        raise NumericalError("non-finite likelihood at initialization")
    for _ in range(int(max_iters)):
        log_rates = np.log(rates)
        accum = np.zeros(m_count)
        for (arr, lgam), c in zip(tables, counts):
            logw = arr @ log_rates - lgam
            resp = np.exp(logw - logsumexp(logw))
            accum += c * (resp @ arr)
        rates = np.maximum(accum / n_total, ALPHA_FLOOR)
        ll = _poisson_sum_loglik(tables, counts, rates)
        if not np.isfinite(ll):
            raise NumericalError("non-finite likelihood during EM")
        if ll < history[-1] - 1e-9:
            raise NumericalError("EM log-likelihood decreased")
        history.append(ll)
    params = PoissonSumParams(w, tuple(float(a) for a in rates))
    return (params, history) if return_history else params


def poisson_sum_loglik(values, params):
    """Log-likelihood of representable values under a weighted Poisson sum."""
    v = np.asarray(values, dtype=float).ravel()
    if v.size == 0:
        raise InputError("empty sample")
    unique, counts = np.unique(v, return_counts=True)
    tables = _prepare_decompositions(unique, params.weights)
    return _poisson_sum_loglik(tables, counts, np.asarray(params.rates))


def sample_poisson_sum_grid(params, window, mask, seed):
    """Draw a grid whose in-mask voxels are weighted sums of Poisson counts."""
    grid = _empty_grid(window, mask)
    rng = make_generator(seed)
    scale = window.voxel_len ** window.dim
    vals = np.zeros(grid.n_active)
    for w, rate in zip(params.weights, params.rates):
        vals += w * rng.poisson(rate * scale, size=grid.n_active)
    return grid.with_active_values(vals)


# ---------------------------------------------------------------------------
# Nonparametric grid nulls
# ---------------------------------------------------------------------------


def permute_grid(grid, seed):
    """Uniformly permute the in-mask voxel values (mask and total preserved)."""
    if grid.n_active < 2:
        raise InputError("permutation requires at least 2 in-mask voxels")
    rng = make_generator(seed)
    return grid.with_active_values(grid.active_values[rng.permutation(grid.n_active)])


def resample_empirical(grid, seed):
    """Resample every in-mask voxel i.i.d. from the empirical value distribution."""
    rng = make_generator(seed)
    values = grid.active_values
    return grid.with_active_values(values[rng.integers(0, values.size, values.size)])


def resample_reference(grid, reference, seed):
    """Resample a grid from per-voxel reference values, rescaled to the input total.

    With a list of reference grids, each in-mask voxel copies the value at the
    same position from one reference chosen uniformly at random.  With a single
    reference grid, the reference value at the voxel is used as a rate: one
    Poisson draw per voxel for continuous inputs, one Bernoulli draw (success
    probability proportional to the reference value) when the input grid is
    binary.  The output is then rescaled to match the input's total mass.
    """
    refs = list(reference) if isinstance(reference, (list, tuple)) else [reference]
    if not refs:
        raise InputError("need at least one reference grid")
    for ref in refs:
        if ref.dim != grid.dim or ref.window.extent != grid.window.extent:
            raise InputError("reference grid shape does not match input grid")
    sel = grid.mask if grid.mask is not None else slice(None)
    ref_stack = np.stack([np.asarray(ref.values[sel]).ravel() for ref in refs])
    if ref_stack.sum() <= 0.0:
        raise InputError("reference total is zero")
    total = float(grid.active_values.sum())
    rng = make_generator(seed)
    n = grid.n_active
    for _ in range(2):
        if len(refs) > 1:
            draws = ref_stack[rng.integers(0, len(refs), n), np.arange(n)].astype(float)
        else:
            rates = ref_stack[0]
            if _is_binary(grid.active_values):
                draws = rng.binomial(1, rates / rates.max()).astype(float)
            else:
                draws = rng.poisson(rates).astype(float)
        if draws.sum() > 0.0:
            return grid.with_active_values(draws * (total / draws.sum()))
    raise NumericalError("reference resampling produced an all-zero grid twice")


def _is_binary(values):
    return bool(np.all((values == 0.0) | (values == 1.0)))


# ---------------------------------------------------------------------------
# Point-process nulls
# ---------------------------------------------------------------------------


def sample_poisson_points(lam, window, seed):
    """Homogeneous Poisson sample: Poisson(lam * volume) uniform points."""
    if not (np.isfinite(lam) and lam > 0):
        raise InputError("intensity must be positive")
    rng = make_generator(seed)
    n = int(rng.poisson(lam * window.volume))
    pts = rng.uniform(0.0, window.side_lengths, size=(n, window.dim))
    return PointSample(window, pts)


def sample_binomial_points(n, window, seed):
    """Binomial process: exactly n i.i.d. uniform points in the window."""
    if int(n) < 1:
        raise InputError("point count must be at least 1")
    rng = make_generator(seed)
    pts = rng.uniform(0.0, window.side_lengths, size=(int(n), window.dim))
    return PointSample(window, pts)
