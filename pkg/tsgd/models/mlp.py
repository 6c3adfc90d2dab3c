from typing import Optional

import numpy as np
from scipy.special import expit

from tsgd.models.core import ParamVector
from tsgd.models.dataset import SparseDataset
from tsgd.models.finite_sum import FiniteSumProblem
from tsgd.utils.exceptions import InvalidInputError


class MlpProblem(FiniteSumProblem):
    """One hidden ReLU layer and a sigmoid output, trained with the log loss.

    The loss acts on the pre-sigmoid score. Flat parameter layout: W1 (width x d,
    row-major), b1 (width), w2 (width), b2; biases are dropped without an intercept.
    """

    name = "mlp"

    def __init__(
        self,
        dataset: SparseDataset,
        reg: float,
        hidden_width: int = 100,
        batch_size: Optional[int] = None,
        fit_intercept: bool = True,
    ):
        if hidden_width < 1:
            raise InvalidInputError("hidden_width must be >= 1")
        super().__init__(dataset, reg, batch_size=batch_size, fit_intercept=fit_intercept)
        self.hidden_width = hidden_width

    def dimension(self) -> int:
        width, d = self.hidden_width, self.dataset.n_features
        if self.fit_intercept:
            return width * d + 2 * width + 1
        return width * d + width

    def unpack(self, w: ParamVector):
        width, d = self.hidden_width, self.dataset.n_features
        w1 = w[: width * d].reshape(width, d)
        offset = width * d
        if self.fit_intercept:
            b1 = w[offset:offset + width]
            w2 = w[offset + width:offset + 2 * width]
            b2 = w[offset + 2 * width]
        else:
            b1 = np.zeros(width)
            w2 = w[offset:offset + width]
            b2 = 0.0
        return w1, b1, w2, b2

    def value_and_gradient(self, batch, w: ParamVector) -> tuple[float, ParamVector]:
        idx = self._batch(batch)
        self._check_w(w)
        w1, b1, w2, b2 = self.unpack(w)
        x = self.samples[idx]
        y = self.labels[idx]

        pre = x @ w1.T + b1
        hidden = np.maximum(pre, 0.0)
        score = hidden @ w2 + b2
        margin = -y * score
        loss = float(np.mean(np.logaddexp(0.0, margin)))

        d_score = -y * expit(margin) / idx.size
        d_pre = np.outer(d_score, w2) * (pre > 0.0)
        grad_w1 = np.asarray(x.T @ d_pre).T

        parts = [grad_w1.reshape(-1)]
        if self.fit_intercept:
            parts += [d_pre.sum(axis=0), hidden.T @ d_score, [d_score.sum()]]
        else:
            parts += [hidden.T @ d_score]
        grad = np.concatenate(parts)

        value = loss + 0.5 * self.reg * float(np.dot(w, w))
        return value, grad + self.reg * w

    def initial_point(self, rng: np.random.Generator, scale: float = 0.1) -> ParamVector:
        return scale * rng.standard_normal(self.dimension())
