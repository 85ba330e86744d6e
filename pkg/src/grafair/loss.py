"""Training objective: node-averaged Gaussian KL plus beta-weighted
conditional negative log-likelihood, and Monte-Carlo checks of the two
variational bounds behind it."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.special import logsumexp

from . import autodiff as ad
from .errors import EmptyTrainMask, InvalidBeta, NonFiniteInput
from .model import EncodedPosterior, Variant

PROB_FLOOR = 1e-12


@dataclass(frozen=True)
class LossBreakdown:
    kl_term: float
    nll_term: float
    beta: float
    total: float

    def as_dict(self) -> dict:
        return {"kl": self.kl_term, "nll": self.nll_term, "beta": self.beta, "total": self.total}


def gaussian_kl(mu, log_var) -> float:
    """Mean over nodes (rows) of KL(N(mu, diag exp(log_var)) || N(0, I))."""
    mu = np.asarray(mu, dtype=np.float64)
    lv = np.asarray(log_var, dtype=np.float64)
    if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(lv))):
        raise NonFiniteInput("gaussian_kl received non-finite mu or log_var")
    mu = np.atleast_2d(mu)
    lv = np.atleast_2d(lv)
    per_node = 0.5 * np.sum(mu ** 2 + np.exp(lv) - 1.0 - lv, axis=1)
    return float(per_node.mean())


def _train_index(train_mask) -> np.ndarray:
    idx = np.flatnonzero(np.asarray(train_mask, dtype=bool))
    if idx.size == 0:
        raise EmptyTrainMask("no training nodes")
    return idx


def conditional_nll(prob, labels, train_mask) -> float:
    """-mean over training nodes of log prob[i, labels[i]] (probabilities
    floored at 1e-12)."""
    idx = _train_index(train_mask)
    p = np.asarray(prob, dtype=np.float64)[idx, np.asarray(labels)[idx]]
    return float(-np.mean(np.log(np.maximum(p, PROB_FLOOR))))


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not np.isfinite(beta) or beta < 1.0:
        raise InvalidBeta(f"beta must be >= 1, got {beta}")
    return beta


def cfb_loss(posterior: EncodedPosterior, prob, labels, train_mask, beta: float, variant) -> LossBreakdown:
    beta = _check_beta(beta)
    variant = Variant.parse(variant)
    kl = gaussian_kl(posterior.mu, posterior.log_var) if variant.uses_kl else 0.0
    nll = conditional_nll(prob, labels, train_mask)
    return LossBreakdown(kl, nll, beta, kl + beta * nll)


# -- differentiable versions used by training ------------------------------

def kl_value(mu: ad.Value, var: ad.Value, log_var: ad.Value) -> ad.Value:
    n = mu.shape[0]
    terms = ad.add(ad.add(ad.square(mu), var), ad.scalar_mul(-1.0, ad.add(log_var, ad.constant(np.ones(mu.shape)))))
    return ad.scalar_mul(0.5 / n, ad.sum_all(terms))


def nll_value(probs: ad.Value, labels, train_mask) -> ad.Value:
    idx = _train_index(train_mask)
    picked = ad.row_gather(probs, idx)
    onehot = np.zeros(picked.shape)
    onehot[np.arange(len(idx)), np.asarray(labels)[idx]] = 1.0
    logp = ad.log(ad.clip_min(picked, PROB_FLOOR))
    return ad.scalar_mul(-1.0 / len(idx), ad.sum_all(ad.elementwise_mul(logp, ad.constant(onehot))))


def cfb_loss_value(fwd, labels, train_mask, beta: float, variant):
    """Differentiable loss for a :class:`~grafair.model.ForwardPass`.

    Returns ``(total Value, LossBreakdown)``.
    """
    beta = _check_beta(beta)
    variant = Variant.parse(variant)
    nll = nll_value(fwd.probs, labels, train_mask)
    total = ad.scalar_mul(beta, nll)
    kl_f = 0.0
    if variant.uses_kl:
        kl = kl_value(fwd.mu, fwd.var, fwd.log_var)
        total = ad.add(kl, total)
        kl_f = kl.item()
    return total, LossBreakdown(kl_f, nll.item(), beta, total.item())


def empirical_conditional_entropy(labels, sensitive, mask) -> float:
    """-E[log Q(y|s)] with Q the empirical label frequencies per sensitive
    group on ``mask``; the constant the optimized loss leaves out."""
    m = np.asarray(mask, dtype=bool)
    y = np.asarray(labels)[m]
    s = np.asarray(sensitive)[m]
    if y.size == 0:
        raise EmptyTrainMask("no nodes in mask")
    h = 0.0
    for sv in (0, 1):
        grp = y[s == sv]
        if grp.size == 0:
            continue
        q = np.bincount(grp, minlength=2) / grp.size
        nz = q[q > 0]
        h -= (grp.size / y.size) * np.sum(nz * np.log(nz))
    return float(h)


def full_objective(breakdown: LossBreakdown, labels, sensitive, mask) -> float:
    """Loss value including the log Q(y|s) term:
    kl - beta * (E[log p(y|z,s)] - E[log Q(y|s)])."""
    h = empirical_conditional_entropy(labels, sensitive, mask)
    return breakdown.kl_term + breakdown.beta * (breakdown.nll_term - h)


# -- Monte-Carlo checks of the variational bounds --------------------------

class BoundGaps(NamedTuple):
    ub_gap: float   # KL bound minus I(X;Z)
    lb_gap: float   # I(Y;Z|S) minus the variational lower bound
    ub_se: float
    lb_se: float


def _norm_logpdf(z, m, s):
    return -0.5 * np.log(2 * np.pi) - np.log(s) - 0.5 * ((z - m) / s) ** 2


def _kl_normal_std(m, s) -> float:
    return 0.5 * (m ** 2 + s ** 2 - 1.0 - 2.0 * np.log(s))


def _log_sigmoid(t):
    return -np.logaddexp(0.0, -t)


def verify_bounds_toy(seed: int = 0, samples: int = 10**6, mu=(-1.0, 1.0), sigma=(1.0, 1.0),
                      y_given_s=(0.3, 0.7), z_means=((-1.0, 1.0), (-0.5, 1.5)), decoder_temperature=3.0,
                      decoder_shift=0.5) -> BoundGaps:
    """Check both bounds on small systems with known densities.

    Upper bound: X uniform on {0,1}, Z|X=x ~ N(mu[x], sigma[x]^2), prior
    N(0,1). I(X;Z) is estimated by Monte Carlo with the exact mixture
    density; the bound E_x KL(P(Z|x)||N(0,1)) is closed form.

    Lower bound: S uniform on {0,1}, Y|S=s ~ Bernoulli(y_given_s[s]),
    Z|Y=y,S=s ~ N(z_means[s][y], 1); Q(Y|S) is the true P(Y|S). The
    variational decoder is the true posterior logit scaled by
    ``decoder_temperature`` and shifted by ``decoder_shift`` (temperature 1,
    shift 0 makes it exact). The gap I - bound equals
    E[log p(y|z,s) - log p_phi(y|z,s)] and is estimated pairwise.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)

    x = rng.integers(0, 2, size=samples)
    z = rng.normal(mu[x], sigma[x])
    log_cond = _norm_logpdf(z, mu[x], sigma[x])
    log_marg = logsumexp(np.stack([_norm_logpdf(z, mu[0], sigma[0]), _norm_logpdf(z, mu[1], sigma[1])]), axis=0) - np.log(2)
    mi_terms = log_cond - log_marg
    bound = 0.5 * (_kl_normal_std(mu[0], sigma[0]) + _kl_normal_std(mu[1], sigma[1]))
    ub_gap = bound - mi_terms.mean()
    ub_se = mi_terms.std(ddof=1) / np.sqrt(samples)

    py = np.asarray(y_given_s, dtype=float)
    zm = np.asarray(z_means, dtype=float)
    s = rng.integers(0, 2, size=samples)
    y = (rng.random(samples) < py[s]).astype(int)
    zz = rng.normal(zm[s, y], 1.0)
    # true posterior logit of y=1 given (z, s)
    logit = (np.log(py[s]) - np.log1p(-py[s])
             + _norm_logpdf(zz, zm[s, 1], 1.0) - _norm_logpdf(zz, zm[s, 0], 1.0))
    sign = 2 * y - 1
    log_true = _log_sigmoid(sign * logit)
    log_phi = _log_sigmoid(sign * (decoder_temperature * logit + decoder_shift))
    gap_terms = log_true - log_phi
    lb_gap = gap_terms.mean()
    lb_se = gap_terms.std(ddof=1) / np.sqrt(samples)
    return BoundGaps(float(ub_gap), float(lb_gap), float(ub_se), float(lb_se))
