"""scikit-learn style wrapper around the sketching pipeline.

The core API is functional (weighted sets in, sketches out), but a thin
transformer makes the parameter handling compose with the usual
get_params / set_params / clone machinery and lets sketching sit inside
existing pipelines that pass lists of token-weight mappings around.
"""

from __future__ import annotations

from typing import Iterable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .hashing import Seed
from .sets import WeightedSet
from .sketch import SketchParams, WeightedSketch, compute_sketch, estimate_jaccard


class WeightedMinHashSketcher(BaseEstimator, TransformerMixin):
    """Transform weighted sets into fixed-size similarity sketches.

    Parameters mirror :class:`~wjacc.sketch.SketchParams`; ``seed`` is
    a hex string so estimators stay cloneable.  Stateless apart from
    parameter validation: ``fit`` only freezes the parameter object.
    """

    def __init__(
        self,
        alpha: float = 0.5,
        samples: int = 256,
        tau: int = 1,
        scales: int = 3,
        redundancy: int = 5,
        bits: int | str = 2,
        variant: str = "independent",
        seed: str = "00" * 32,
    ):
        self.alpha = alpha
        self.samples = samples
        self.tau = tau
        self.scales = scales
        self.redundancy = redundancy
        self.bits = bits
        self.variant = variant
        self.seed = seed

    def fit(self, X=None, y=None):
        self.params_ = SketchParams(
            alpha=self.alpha,
            samples=self.samples,
            tau=self.tau,
            scales=self.scales,
            redundancy=self.redundancy,
            bits=self.bits,
            variant=self.variant,
        )
        self.seed_ = Seed.from_hex(self.seed)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "params_"):
            raise NotFittedError("call fit before transforming")

    def transform(self, X: Iterable[Mapping | WeightedSet]) -> list[WeightedSketch]:
        self._check_fitted()
        out = []
        for pos, entry in enumerate(X):
            w = entry if isinstance(entry, WeightedSet) else WeightedSet(entry)
            if len(w) == 0:
                raise ValueError(f"input {pos} is empty and cannot be sketched")
            out.append(compute_sketch(w, self.params_, self.seed_))
        return out

    def similarity(self, a: WeightedSketch, b: WeightedSketch) -> float:
        """Estimated Jaccard, with below-threshold results as NaN."""
        est = estimate_jaccard(a, b)
        return float("nan") if est.is_below_threshold else float(est.value)

    def pairwise_similarity(
        self,
        sketches: Sequence[WeightedSketch],
        others: Sequence[WeightedSketch] | None = None,
    ) -> np.ndarray:
        """Matrix of estimates; NaN marks below-threshold pairs."""
        self._check_fitted()
        cols = sketches if others is None else others
        out = np.empty((len(sketches), len(cols)))
        for i, a in enumerate(sketches):
            for j, b in enumerate(cols):
                out[i, j] = self.similarity(a, b)
        return out
