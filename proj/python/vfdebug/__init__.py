# Copyright 2026 The vfdebug Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Two-party vertical federated training-data debugging.

Configs and reports are plain dicts; see `default_config()` for every key.
"""

from __future__ import annotations

import json
import os
from typing import Any, Iterable, Mapping

from ._vfdebug import (  # noqa: F401
    AuditIncompleteError,
    Ciphertext,
    EncOpCounter,
    Error,
    IngestionError,
    InvalidArgumentError,
    KeyPair,
    PaillierSession,
    PhaseError,
    QueryError,
    SecurityError,
    f1_score,
    fedrain_debug_limit,
    fedrain_train_limit,
    frog_debug_secure,
    generate_key_pair,
    inject_corruption,
    logistic_gradient,
    logistic_hessian,
    logistic_loss,
    recall_at_k,
    sigmoid,
    train_logistic_gd,
)
from . import _vfdebug

__all__ = [
    "AuditIncompleteError",
    "Error",
    "IngestionError",
    "InvalidArgumentError",
    "PaillierSession",
    "PhaseError",
    "QueryError",
    "SecurityError",
    "audit_transcript",
    "compare",
    "default_config",
    "f1_score",
    "fedrain_debug_limit",
    "fedrain_train_limit",
    "frog_debug_secure",
    "generate_key_pair",
    "inject_corruption",
    "load_config",
    "logistic_gradient",
    "logistic_hessian",
    "logistic_loss",
    "recall_at_k",
    "run_experiment",
    "sigmoid",
    "train_logistic_gd",
]

Config = Mapping[str, Any]


def _config_text(config: Config | str | os.PathLike | None) -> str:
    """Accepts a dict, a JSON file path, or None for the defaults."""
    if config is None:
        return _vfdebug.default_config()
    if isinstance(config, (str, os.PathLike)):
        with open(config, encoding="utf-8") as f:
            return f.read()
    return json.dumps(config)


def default_config() -> dict:
    """Every config key with its default value."""
    return json.loads(_vfdebug.default_config())


def load_config(config: Config | str | os.PathLike | None = None) -> dict:
    """Validates a config and fills in the missing keys."""
    return json.loads(_vfdebug.normalize_config(_config_text(config)))


def run_experiment(config: Config | str | os.PathLike) -> tuple[dict, dict]:
    """Runs one experiment; returns (report, timing)."""
    report, timing = _vfdebug.run_experiment(_config_text(config))
    return json.loads(report), json.loads(timing)


def compare(
    config: Config | str | os.PathLike, frameworks: Iterable[str] = ()
) -> dict:
    """Runs several frameworks on one shared corruption; empty means all."""
    return json.loads(_vfdebug.compare(_config_text(config), list(frameworks)))


def audit_transcript(path: str | os.PathLike) -> dict:
    """Audits an exported JSONL transcript against its protocol script."""
    return json.loads(_vfdebug.audit_transcript_file(os.fspath(path)))
