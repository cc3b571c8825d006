"""
1-nearest-neighbor classification of context windows: a pixel takes the
label of the minimally distant stored window (Euclidean), ties going to the
lowest stored index.
"""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cwseg.errors import PreconditionError
from cwseg.image_io import PathLike
from cwseg.sampler import Dataset, LabeledSample, as_arrays, read_dataset
from cwseg.schemas import Label

logger = logging.getLogger(__name__)

_QUERY_CHUNK = 64


@dataclass(frozen=True)
class NNModel:
    features: np.ndarray  # (N, K)
    labels: np.ndarray  # (N,) bool, True = OBJECT

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] == 0:
            raise PreconditionError("NN model needs at least one stored sample")
        if self.labels.shape != (self.features.shape[0],):
            raise PreconditionError("one label per stored sample is required")

    @classmethod
    def from_samples(cls, samples: Sequence[LabeledSample]) -> "NNModel":
        X, y = as_arrays(samples)
        return cls(X, y)

    @classmethod
    def from_dataset(cls, dataset: Dataset) -> "NNModel":
        return cls.from_samples(dataset.train)

    @property
    def input_width(self) -> int:
        return self.features.shape[1]

    def predict(self, features: np.ndarray) -> np.ndarray:
        return classify_1nn_batch(self, features)


def _check_width(model: NNModel, width: int) -> None:
    if width != model.input_width:
        raise PreconditionError(
            f"query width {width} does not match stored width {model.input_width}"
        )


def nearest_index(model: NNModel, query: np.ndarray) -> int:
    q = np.asarray(query, dtype=np.float64).reshape(-1)
    _check_width(model, q.shape[0])
    d2 = ((model.features - q) ** 2).sum(axis=1)
    return int(np.argmin(d2))  # argmin returns the first minimum


def classify_1nn(model: NNModel, query: np.ndarray) -> Label:
    return Label.OBJECT if model.labels[nearest_index(model, query)] else Label.BACKGROUND


def classify_1nn_batch(model: NNModel, queries: np.ndarray) -> np.ndarray:
    Q = np.atleast_2d(np.asarray(queries, dtype=np.float64))
    _check_width(model, Q.shape[1])
    out = np.empty(Q.shape[0], dtype=bool)
    for start in range(0, Q.shape[0], _QUERY_CHUNK):
        chunk = Q[start:start + _QUERY_CHUNK]
        d2 = ((model.features[None, :, :] - chunk[:, None, :]) ** 2).sum(axis=2)
        out[start:start + len(chunk)] = model.labels[np.argmin(d2, axis=1)]
    return out


def load_nn_model(path: PathLike) -> NNModel:
    """The sampler's dataset file doubles as the NN model; its train split is stored."""
    model = NNModel.from_dataset(read_dataset(path))
    logger.info(f"[nn] loaded {model.features.shape[0]} stored windows of width {model.input_width} from {path}")
    return model
