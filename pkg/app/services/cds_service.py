"""Class-agnostic domain separation.

A VAE is pre-trained on labeled (known-domain) inputs only. Its scoring-mode
reconstruction error on the unlabeled pool is fit, in log space, with a
two-component 1-D gaussian mixture; the posterior of the component with the
larger mean is the unknown-domain weight w_d. That posterior is held
non-decreasing in the error, so w_d never reverses the order given by L_re.
The non-adversarial discriminator D′ is later trained towards these frozen
posteriors with `domain_loss`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.special import logsumexp
from scipy.stats import norm

from app.constants import VARIANCE_FLOOR
from app.exceptions import ConfigError, DegenerateFitError, NumericError, TrainingDivergedError
from app.logging import get_logger
from app.models.scenario import Scenario
from app.models.training import TrainConfig
from app.networks.vae import Vae
from app.numerics import Tensor, bce, column, sgd_step
from app.numerics.tensor import Operand, lift
from app.utils.seeding import stage_rng

logger = get_logger(__name__)

MIN_GMM_POINTS = 4

# Reconstruction errors are floored here before the log-domain fit
LOG_ERROR_FLOOR = 1e-12


@dataclass
class GmmFit:
    """Two-component 1-D gaussian mixture.

    Attributes:
        weights: (2,) mixing weights, summing to 1
        means: (2,) component means
        variances: (2,) component variances, each >= the variance floor
        log_likelihood: total log-likelihood of every E-step that improved on the previous one by at least `tol`
        ukd_component: index of the component with the larger mean
        seed: recorded for provenance; initialization is deterministic
        log_domain: components live on log(error) instead of the raw error
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood: list[float] = field(default_factory=list)
    ukd_component: int = 1
    seed: int = 0
    log_domain: bool = False

    @property
    def iterations(self) -> int:
        return len(self.log_likelihood)

    def transform(self, values: np.ndarray) -> np.ndarray:
        """Map raw errors onto the axis the components were fit on."""
        values = np.asarray(values, dtype=np.float64)
        return np.log(np.maximum(values, LOG_ERROR_FLOOR)) if self.log_domain else values

    def turning_point(self) -> Optional[float]:
        """Where the unknown-domain log-odds stop increasing, if anywhere.

        The log-odds are quadratic in the fitted axis and strictly increasing
        between the two means. With unequal variances they turn once outside
        that interval: above the larger mean when the unknown-domain
        component is the narrower one, below the smaller mean otherwise.
        """
        u, o = self.ukd_component, 1 - self.ukd_component
        curvature = 1.0 / self.variances[o] - 1.0 / self.variances[u]
        if curvature == 0.0:
            return None
        slope = self.means[o] / self.variances[o] - self.means[u] / self.variances[u]
        return float(slope / curvature)

    def component_log_density(self, values: np.ndarray) -> np.ndarray:
        """(n, 2) log π_k + log N(value; μ_k, s_k²) on the fitted axis."""
        values = np.asarray(values, dtype=np.float64).reshape(-1, 1)
        return np.log(self.weights) + norm.logpdf(values, loc=self.means, scale=np.sqrt(self.variances))

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
            "log_likelihood": list(self.log_likelihood),
            "ukd_component": self.ukd_component,
            "seed": self.seed,
            "log_domain": self.log_domain,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GmmFit":
        return cls(
            weights=np.asarray(data["weights"], dtype=np.float64),
            means=np.asarray(data["means"], dtype=np.float64),
            variances=np.asarray(data["variances"], dtype=np.float64),
            log_likelihood=[float(v) for v in data.get("log_likelihood", [])],
            ukd_component=int(data["ukd_component"]),
            seed=int(data.get("seed", 0)),
            log_domain=bool(data.get("log_domain", False)),
        )


@dataclass
class UkdScores:
    """Per unlabeled sample: reconstruction error and unknown-domain posterior."""

    l_re: np.ndarray
    w_d: np.ndarray

    def __len__(self) -> int:
        return int(self.w_d.shape[0])


@dataclass
class CdsResult:
    """Everything the joint phase needs from domain separation."""

    vae: Vae
    gmm: Optional[GmmFit]
    scores: UkdScores
    trace: list[float]


def pretrain_vae(
    vae: Vae,
    labeled_inputs: np.ndarray,
    epochs: int,
    lr: float,
    rng: np.random.Generator,
    batch_size: int = 32,
) -> tuple[Vae, list[float]]:
    """Minimize mean L_re + kl_weight·KL on labeled inputs by mini-batch SGD.

    Returns:
        The trained VAE (same object) and the per-epoch mean objective

    Raises:
        TrainingDivergedError: If the objective becomes non-finite
    """
    x = np.asarray(labeled_inputs, dtype=np.float64)
    n = x.shape[0]
    trace: list[float] = []
    if epochs == 0 or n == 0:
        return vae, trace

    vae.store.zero_grad()
    for epoch in range(epochs):
        order = rng.permutation(n)
        losses = []
        for batch, start in enumerate(range(0, n, batch_size)):
            idx = order[start : start + batch_size]
            try:
                loss = vae.objective(vae.forward(x[idx], rng))
                loss.backward()
                sgd_step(vae.store, lr)
            except NumericError as e:
                raise TrainingDivergedError(
                    f"VAE pre-training diverged: {e.message}", epoch=epoch, batch=batch
                ) from e
            losses.append(loss.item())
        trace.append(float(np.mean(losses)))
        logger.debug("VAE epoch finished", epoch=epoch, objective=trace[-1])
    logger.info("VAE pre-trained", epochs=epochs, final_objective=trace[-1])
    return vae, trace


def recon_errors(vae: Vae, xs: np.ndarray) -> np.ndarray:
    """Scoring-mode (z = μ) squared reconstruction error per row."""
    xs = np.asarray(xs, dtype=np.float64)
    if xs.shape[0] == 0:
        return np.zeros(0)
    return vae.forward(xs).recon.data[:, 0].copy()


def fit_gmm2(
    errors: np.ndarray,
    max_iters: int = 200,
    tol: float = 1e-8,
    seed: int = 0,
    log_domain: bool = False,
) -> GmmFit:
    """Two-component EM with log-space responsibilities.

    With `log_domain` the components are fit to log(error), which turns
    heavy-tailed squared reconstruction errors into two roughly gaussian
    clusters. The flag travels with the fit so `posterior_ukd` maps raw
    errors the same way.

    Means start at the 25th/75th percentiles (min/max if those coincide),
    both variances at the pooled variance, weights at 1/2. Iteration stops
    once the log-likelihood gain drops below `tol` or after `max_iters`
    E-steps.

    Raises:
        ConfigError: On max_iters < 1 or tol <= 0
        DegenerateFitError: On fewer than four points or all-identical inputs
    """
    if max_iters < 1 or tol <= 0:
        raise ConfigError("fit_gmm2 needs max_iters >= 1 and tol > 0", details={"max_iters": max_iters, "tol": tol})
    x = np.asarray(errors, dtype=np.float64).reshape(-1)
    if x.size < MIN_GMM_POINTS:
        raise DegenerateFitError(f"Need at least {MIN_GMM_POINTS} points, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DegenerateFitError("Mixture input contains non-finite values")
    if log_domain:
        x = np.log(np.maximum(x, LOG_ERROR_FLOOR))
    if np.ptp(x) == 0.0:
        raise DegenerateFitError("All mixture inputs are identical", details={"value": float(x[0])})

    means = np.percentile(x, [25.0, 75.0])
    if means[0] == means[1]:
        means = np.array([x.min(), x.max()])
    fit = GmmFit(
        weights=np.array([0.5, 0.5]),
        means=means.astype(np.float64),
        variances=np.full(2, max(float(np.var(x)), VARIANCE_FLOOR)),
        seed=seed,
        log_domain=log_domain,
    )

    for _ in range(max_iters):
        log_p = fit.component_log_density(x)
        log_norm = logsumexp(log_p, axis=1)
        total = float(log_norm.sum())
        if fit.log_likelihood and total - fit.log_likelihood[-1] < tol:
            break
        fit.log_likelihood.append(total)

        resp = np.exp(log_p - log_norm[:, None])
        nk = resp.sum(axis=0)
        if np.any(nk <= 0.0):
            break
        weights = nk / x.size
        fit.weights = weights / weights.sum()
        fit.means = (resp * x[:, None]).sum(axis=0) / nk
        fit.variances = np.maximum((resp * (x[:, None] - fit.means) ** 2).sum(axis=0) / nk, VARIANCE_FLOOR)

    fit.ukd_component = int(np.argmax(fit.means))
    logger.debug(
        "Mixture fit",
        iterations=fit.iterations,
        means=fit.means.tolist(),
        weights=fit.weights.tolist(),
        log_likelihood=fit.log_likelihood[-1],
    )
    return fit


def posterior_ukd(gmm: GmmFit, l_re: float | np.ndarray) -> float | np.ndarray:
    """Posterior of the unknown-domain component; scalar in, scalar out.

    Non-decreasing in `l_re` for any fit: past the turning point of the
    log-odds the posterior is held at its value there.
    """
    values = gmm.transform(l_re)
    turn = gmm.turning_point()
    if turn is not None:
        u, o = gmm.ukd_component, 1 - gmm.ukd_component
        if gmm.variances[u] > gmm.variances[o]:
            values = np.maximum(values, turn)
        else:
            values = np.minimum(values, turn)
    log_p = gmm.component_log_density(values)
    post = np.exp(log_p[:, gmm.ukd_component] - logsumexp(log_p, axis=1))
    if np.ndim(l_re) == 0:
        return float(post[0])
    return post


def domain_loss(yhat_l: Operand, yhat_u: Optional[Operand], w_d: np.ndarray) -> Tensor:
    """BCE for D′: target 0 on labeled outputs, soft target w_d on unlabeled.

    Both output sets are (n, 1) columns; a missing or empty unlabeled set
    contributes nothing.

    Raises:
        DimensionError: If `yhat_u` and `w_d` disagree in length
    """
    yhat_l = lift(yhat_l)
    loss = bce(yhat_l, np.zeros(yhat_l.shape), np.ones(yhat_l.shape))
    if yhat_u is None:
        return loss
    yhat_u = lift(yhat_u)
    if yhat_u.rows == 0:
        return loss
    target = column(w_d)
    return loss + bce(yhat_u, target, np.ones(target.shape))


def separate_domains(vae: Vae, gmm: GmmFit, xs: np.ndarray) -> UkdScores:
    l_re = recon_errors(vae, xs)
    w_d = posterior_ukd(gmm, l_re) if l_re.size else np.zeros(0)
    return UkdScores(l_re=l_re, w_d=np.asarray(w_d))


def run_cds(scenario: Scenario, config: TrainConfig, seed: Optional[int] = None) -> CdsResult:
    """Pre-train the VAE on labeled inputs, then score and fit the unlabeled pool.

    With fewer than four unlabeled samples no mixture is fit and every w_d
    is 1.
    """
    seed = config.seed if seed is None else seed
    vae = Vae.from_config(scenario.input_dim, config.vae, seed)
    vae, trace = pretrain_vae(
        vae,
        scenario.labeled.x,
        config.vae.epochs,
        config.vae.lr,
        stage_rng(seed, "vae"),
        config.vae.batch_size,
    )
    x_u = scenario.unlabeled.x
    if x_u.shape[0] < MIN_GMM_POINTS:
        logger.warning("Unlabeled pool too small for a mixture fit", n=int(x_u.shape[0]))
        l_re = recon_errors(vae, x_u)
        return CdsResult(vae=vae, gmm=None, scores=UkdScores(l_re=l_re, w_d=np.ones_like(l_re)), trace=trace)

    gmm = fit_gmm2(recon_errors(vae, x_u), config.vae.gmm_max_iters, config.vae.gmm_tol, seed, log_domain=True)
    scores = separate_domains(vae, gmm, x_u)
    logger.info(
        "Domain separation ready",
        n=len(scores),
        mean_l_re=float(scores.l_re.mean()),
        mean_w_d=float(scores.w_d.mean()),
    )
    return CdsResult(vae=vae, gmm=gmm, scores=scores, trace=trace)
