import numpy as np
from scipy.special import expit

from tsgd.models.core import ParamVector
from tsgd.models.finite_sum import FiniteSumProblem


class LogisticProblem(FiniteSumProblem):
    """L2-regularized logistic regression, the affine classifier h = <w_hat, x> + b.

    Parameters are laid out as (w_hat, b); b is absent without an intercept.
    """

    name = "logistic"

    def dimension(self) -> int:
        return self.dataset.n_features + (1 if self.fit_intercept else 0)

    def scores(self, idx: np.ndarray, w: ParamVector) -> np.ndarray:
        d = self.dataset.n_features
        h = self.samples[idx] @ w[:d]
        if self.fit_intercept:
            h = h + w[d]
        return h

    def value_and_gradient(self, batch, w: ParamVector) -> tuple[float, ParamVector]:
        idx = self._batch(batch)
        self._check_w(w)
        d = self.dataset.n_features
        y = self.labels[idx]
        margin = -y * self.scores(idx, w)

        # ln(1 + exp(margin)) without overflow
        loss = float(np.mean(np.logaddexp(0.0, margin)))
        coef = -y * expit(margin) / idx.size

        grad = np.empty_like(w)
        grad[:d] = self.samples[idx].T @ coef
        if self.fit_intercept:
            grad[d] = coef.sum()
        value = loss + 0.5 * self.reg * float(np.dot(w, w))
        return value, grad + self.reg * w
