"""Python access to the vigil workflow runtime."""

import json as _json

from . import _vigil
from ._vigil import ConfigError, VigilError, error_bound, optimize_chain_retention, suite_names

__all__ = [
    "ConfigError",
    "VigilError",
    "error_bound",
    "optimize_chain_retention",
    "run_document",
    "run_suite",
    "run_workflow",
    "suite_names",
    "validate_document",
    "validate_workflow",
]


def validate_workflow(path):
    """Return the list of findings for a workflow file; empty when valid."""
    return _vigil.validate_workflow(str(path))


def validate_document(document):
    """Like validate_workflow, for an in-memory document (dict or JSON text)."""
    if not isinstance(document, str):
        document = _json.dumps(document)
    return _vigil.validate_document(document)


def run_workflow(path, seed=None, budget=None, monitoring=True):
    """Execute a workflow file and return the execution record as a dict."""
    return _json.loads(_vigil.run_workflow(str(path), seed, budget, monitoring))


def run_document(document, seed=None, budget=None, monitoring=True):
    """Execute an in-memory workflow document and return the record as a dict."""
    if not isinstance(document, str):
        document = _json.dumps(document)
    return _json.loads(_vigil.run_document(document, seed, budget, monitoring))


def run_suite(name, n=None, eps=None, trials=None, seed=7, **extra):
    """Run a simulation suite; keyword extras become suite overrides."""
    return _json.loads(_vigil.run_suite(name, n, eps, trials, seed, _json.dumps(extra)))
