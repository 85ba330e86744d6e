"""Self-test oracles behind ``grafair verify``."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy import integrate

from . import autodiff as ad
from .graph import SplitSpec, build_graph, normalize_adjacency
from .loss import cfb_loss_value, gaussian_kl, verify_bounds_toy
from .model import ALL_VARIANTS, ModelDims, forward, init_weights

GRAD_TOL = 1e-4
KL_TOL = 1e-6
BOUND_SIGMAS = 3.0
# below this a bound gap is treated as exactly zero (float round-off in the
# log-density differences, not Monte-Carlo noise)
GAP_FLOOR = 1e-12


class CheckResult(NamedTuple):
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def random_instance(n: int = 10, d: int = 4, seed: int = 0, edge_prob: float = 0.3):
    """Small random attributed graph with a binary sensitive column 0 and
    both labels present on the training nodes."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    x[:, 0] = np.arange(n) % 2
    y = (np.arange(n) // 2) % 2
    iu, ju = np.triu_indices(n, 1)
    keep = rng.random(len(iu)) < edge_prob
    train = np.zeros(n, dtype=bool)
    train[: n // 2 + 1] = True
    return build_graph(x, np.stack([iu[keep], ju[keep]], 1), 0, y,
                       SplitSpec(masks=(train, np.zeros(n, bool), ~train)))


def loss_gradient_error(variant, seed: int = 0, hidden_dim: int = 5, beta: float = 10.0,
                        encoder_layers: int = 1, classifier_layers: int = 1) -> float:
    """Max relative error of the full-loss gradient against central
    differences, with the sampling noise held fixed."""
    g = random_instance(seed=seed)
    adj = normalize_adjacency(g)
    dims = ModelDims(g.num_features, hidden_dim, encoder_layers, classifier_layers)
    model = init_weights(dims, seed, variant)
    names = list(model.params)

    def loss(*vals):
        params = dict(zip(names, vals))
        fwd = forward(model, g, adj, sample=True, rng=np.random.default_rng(seed + 1), params=params)
        return cfb_loss_value(fwd, g.labels, g.train_mask, beta, model.variant)[0]

    return ad.finite_diff_check(loss, [model.params[k] for k in names], eps=1e-5)


def check_gradients(seed: int = 0) -> CheckResult:
    errs = {v.value: loss_gradient_error(v, seed) for v in ALL_VARIANTS}
    worst = max(errs, key=errs.get)
    ok = all(e < GRAD_TOL for e in errs.values())
    return CheckResult("gradients", ok, f"max relative error {errs[worst]:.2e} ({worst}), tolerance {GRAD_TOL:g}")


def kl_by_quadrature(mu: float, log_var: float) -> float:
    """KL(N(mu, var) || N(0, 1)) by adaptive integration of p log(p/q)."""
    sd = np.exp(0.5 * log_var)

    def integrand(z):
        logp = -0.5 * ((z - mu) / sd) ** 2 - np.log(sd) - 0.5 * np.log(2 * np.pi)
        logq = -0.5 * z * z - 0.5 * np.log(2 * np.pi)
        return np.exp(logp) * (logp - logq)

    val, _ = integrate.quad(integrand, mu - 20 * sd, mu + 20 * sd, epsabs=1e-12, epsrel=1e-12, limit=200)
    return val


def check_kl(points: int = 9) -> CheckResult:
    worst = 0.0
    for mu in np.linspace(-3, 3, points):
        for lv in np.linspace(-2, 2, points):
            # one node, one dimension: the per-node mean is the node's KL
            closed = gaussian_kl(np.array([[mu]]), np.array([[lv]]))
            worst = max(worst, abs(closed - kl_by_quadrature(mu, lv)))
    return CheckResult("kl-quadrature", worst < KL_TOL, f"max abs error {worst:.2e} on {points}x{points} grid")


def check_bounds(samples: int = 10**6, seed: int = 0) -> CheckResult:
    toy = verify_bounds_toy(seed, samples)
    flat = verify_bounds_toy(seed, samples, mu=(0.0, 0.0), decoder_temperature=1.0, decoder_shift=0.0)
    positive = toy.ub_gap > BOUND_SIGMAS * toy.ub_se and toy.lb_gap > BOUND_SIGMAS * toy.lb_se
    zero = (abs(flat.ub_gap) <= max(BOUND_SIGMAS * flat.ub_se, GAP_FLOOR)
            and abs(flat.lb_gap) <= max(BOUND_SIGMAS * flat.lb_se, GAP_FLOOR))
    detail = (f"ub_gap {toy.ub_gap:.4f} (se {toy.ub_se:.1e}), lb_gap {toy.lb_gap:.4f} (se {toy.lb_se:.1e}); "
              f"degenerate {flat.ub_gap:.1e}, {flat.lb_gap:.1e}")
    return CheckResult("bounds", positive and zero, detail)


def run_all(samples: int = 10**6, seed: int = 0) -> list:
    return [check_gradients(seed), check_kl(), check_bounds(samples, seed)]
