import logging
import math
from dataclasses import dataclass, field
import numpy as np
from scipy.special import logsumexp

from auto_comb.exceptions import ParameterError

logger = logging.getLogger(__name__)

LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class GmmModel:
    '''1D Gaussian mixture with components sorted by ascending mean.'''
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: float = float('-inf')
    ll_history: list = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.means = np.asarray(self.means, dtype=np.float64)
        self.variances = np.asarray(self.variances, dtype=np.float64)
        if not (len(self.weights) == len(self.means) == len(self.variances)) or len(self.means) == 0:
            raise ParameterError("GMM weights, means and variances must have one equal, nonzero length")

    @property
    def k(self):
        return int(len(self.means))

    def weighted_log_density(self, x):
        '''log(w_j * N(x; mu_j, var_j)) for every x and component, shape (n, k).'''
        x = np.asarray(x, dtype=np.float64)[:, None]
        with np.errstate(divide='ignore'):
            log_w = np.log(self.weights)[None, :]
        return log_w - 0.5 * (LOG_2PI + np.log(self.variances))[None, :] \
            - (x - self.means[None, :]) ** 2 / (2.0 * self.variances[None, :])

    def score(self, x, counts=None):
        log_mix = logsumexp(self.weighted_log_density(x), axis=1)
        if counts is None:
            return math.fsum(log_mix)
        return math.fsum(np.asarray(counts, dtype=np.float64) * log_mix)

    def sorted(self):
        order = np.argsort(self.means, kind='stable')
        return GmmModel(self.weights[order], self.means[order], self.variances[order], self.log_likelihood,
                        list(self.ll_history), self.n_iter, self.converged)

    def to_dict(self):
        return {
            'k': self.k,
            'weights': self.weights.tolist(),
            'means': self.means.tolist(),
            'variances': self.variances.tolist(),
            'log_likelihood': float(self.log_likelihood),
            'n_iter': int(self.n_iter),
            'converged': bool(self.converged),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d['weights'], d['means'], d['variances'], d.get('log_likelihood', float('-inf')),
                   n_iter=d.get('n_iter', 0), converged=d.get('converged', False))


def _initial_means(x, c, k):
    cdf = np.cumsum(c) / np.sum(c)
    quantiles = (np.arange(k) + 0.5) / k
    idx = np.minimum(np.searchsorted(cdf, quantiles), len(x) - 1)
    return x[idx].astype(np.float64)


def _run_em(x, c, weights, means, variances, variance_floor, tol, max_iter):
    n = c.sum()
    model = GmmModel(weights, means, variances)
    history = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        log_p = model.weighted_log_density(x)
        log_mix = logsumexp(log_p, axis=1)
        ll = math.fsum(c * log_mix)
        history.append(ll)
        if len(history) > 1 and abs(history[-1] - history[-2]) <= tol * abs(history[-2]):
            converged = True
            break

        resp = np.exp(log_p - log_mix[:, None]) * c[:, None]
        nk = resp.sum(axis=0)
        alive = nk > 0
        new_means = model.means.copy()
        new_vars = model.variances.copy()
        new_means[alive] = (resp[:, alive] * x[:, None]).sum(axis=0) / nk[alive]
        new_vars[alive] = (resp[:, alive] * (x[:, None] - new_means[None, alive]) ** 2).sum(axis=0) / nk[alive]
        model = GmmModel(nk / n, new_means, np.maximum(new_vars, variance_floor))

    if not converged:
        history.append(model.score(x, c))
    model.log_likelihood = history[-1]
    model.ll_history = history
    model.n_iter = it
    model.converged = converged
    return model


def fit_gmm(hist, k=4, seed=0, tol=1e-6, max_iter=500, restarts=3, variance_floor=None):
    '''
    Weighted EM over the histogram's bin centres with bin counts as weights.
    Means start at the k-quantiles of the histogram CDF, variances at the
    global variance and weights uniform; restarts after the first jitter the
    means with a generator seeded by seed. The best log-likelihood wins and
    its components come back sorted by mean. The variance floor defaults to
    the squared bin width.
    '''
    if k < 1:
        raise ParameterError("GMM needs k >= 1, got {}".format(k))
    if restarts < 1 or max_iter < 1 or not tol > 0:
        raise ParameterError("GMM needs restarts >= 1, max_iter >= 1 and tol > 0")
    occupied = hist.counts > 0
    if int(occupied.sum()) < k:
        raise ParameterError("GMM with k={} needs at least {} occupied bins, got {}".format(k, k, int(occupied.sum())))
    x = hist.centers[occupied]
    c = hist.counts[occupied]
    if variance_floor is None:
        variance_floor = hist.bin_width ** 2

    n = c.sum()
    global_mean = math.fsum(c * x) / n
    global_var = max(math.fsum(c * (x - global_mean) ** 2) / n, variance_floor)
    base_means = _initial_means(x, c, k)
    rng = np.random.default_rng(seed)

    best = None
    for r in range(restarts):
        means = base_means.copy()
        if r > 0:
            means = np.sort(means + rng.normal(0.0, 0.25 * math.sqrt(global_var), size=k))
        model = _run_em(x, c, np.full(k, 1.0 / k), means, np.full(k, global_var), variance_floor, tol, max_iter)
        logger.debug("GMM k=%d restart %d: ll=%.6f after %d iterations", k, r, model.log_likelihood, model.n_iter)
        if best is None or model.log_likelihood > best.log_likelihood:
            best = model
    return best.sorted()
