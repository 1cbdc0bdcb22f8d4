"""Python access to the verirl reward, estimator and toy-training core."""

import json

from ._verirl import (
    chrf,
    clipped_term,
    compute_reward,
    count_alias_occurrences,
    group_advantages,
    match_entity,
    normalize,
    pass_at_k,
    pass_at_k_curve,
    seq_importance_ratio,
    train_toy,
)
from ._verirl import gen_lexicon_json as _gen_lexicon_json
from ._verirl import score_line as _score_line


def score_record(record, **config):
    """Score one record dict; returns the reply dict (breakdown or error)."""
    return json.loads(_score_line(json.dumps(record), **config))


def gen_lexicon(seed=42, entities=20, aliases=3, train_frac=0.75, vocab=48):
    return json.loads(_gen_lexicon_json(seed, entities, aliases, train_frac, vocab))


__all__ = [
    "chrf",
    "clipped_term",
    "compute_reward",
    "count_alias_occurrences",
    "gen_lexicon",
    "group_advantages",
    "match_entity",
    "normalize",
    "pass_at_k",
    "pass_at_k_curve",
    "score_record",
    "seq_importance_ratio",
    "train_toy",
]
