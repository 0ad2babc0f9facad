"""Reflected BSDEs on finite event trees."""

import json
import os

from ._core import RbsdeError, __version__, suite_names
from . import _core

__all__ = ["RbsdeError", "__version__", "suite_names", "load", "solve", "dynkin", "verify",
           "horizon_study", "value_process"]


def load(scenario):
    """Scenario text from a path, a JSON string or a dict."""
    if isinstance(scenario, dict):
        return json.dumps(scenario)
    if isinstance(scenario, os.PathLike) or (isinstance(scenario, str) and not scenario.lstrip().startswith("{")):
        with open(scenario) as fh:
            return fh.read()
    return scenario


def solve(scenario, **kw):
    return _core.solve(load(scenario), **kw)


def dynkin(scenario, **kw):
    return _core.dynkin(load(scenario), **kw)


def verify(scenario=None, **kw):
    return _core.verify(load(scenario) if scenario is not None else "", **kw)


def horizon_study(scenario, **kw):
    return _core.horizon_study(load(scenario), **kw)


def value_process(scenario, **kw):
    """(instant values, plus values) of Y by node id."""
    return _core.value_process(load(scenario), **kw)
