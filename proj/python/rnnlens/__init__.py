"""Hidden-memory interpretation of recurrent language models."""

import json as _json

from ._core import (  # noqa: F401
    ConfigError,
    Error,
    ExplorerService,
    InvalidArgumentError,
    Model,
    NoObservationsError,
    NotFoundError,
    ResponseRecord,
    Vocabulary,
    aggregate_info,
    decompose_prediction,
    generate_sentiment,
    generate_toy_corpus,
    kmeans,
    planted_bipartite,
    preserved_info,
    record_responses,
    sort_dimensions,
    spectral_cocluster,
    tokenize,
    toy_pos_lexicon,
)
from . import _core


def train(config, base_dir=""):
    """Trains from a run config dict and returns the report as a dict."""
    return _json.loads(_core.train(_json.dumps(config), str(base_dir)))


def profile_sequence(model, assignment, k, ids, layer=0, kind="hidden"):
    """Per-step cluster measures for one token sequence, as a dict."""
    return _json.loads(_core.profile_sequence(model, assignment, k, ids, layer, kind))


def model_config(model):
    return _json.loads(model.config_json)


def request(service, method, path, query=None, body=None):
    """Sends one API request and returns (status, decoded JSON)."""
    payload = "" if body is None else _json.dumps(body)
    status, text = service.handle(method, path, query or {}, payload)
    return status, _json.loads(text)
