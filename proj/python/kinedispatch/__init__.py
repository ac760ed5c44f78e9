"""Kinematics-driven mixed-precision dispatch for step-wise control policies."""

import json

from . import _core
from ._core import (
    ContractViolation,
    InvalidInput,
    action_error,
    affine_params,
    fake_quant,
    pearson,
    step_reference,
    step_stateful,
)

__all__ = [
    "ContractViolation",
    "InvalidInput",
    "Scheduler",
    "action_error",
    "affine_params",
    "calibrate",
    "default_env",
    "default_table",
    "derive_thresholds",
    "fake_quant",
    "pearson",
    "profile",
    "replay_dispatch",
    "run_suite",
    "simulate",
    "step_reference",
    "step_stateful",
]


def _dump(doc):
    return "" if doc is None else json.dumps(doc)


def default_table():
    return json.loads(_core.default_table())


def default_env():
    return json.loads(_core.default_env())


def calibrate(seeds, table=None, env=None, bins=32, **overrides):
    """Collect full-precision samples over `seeds` and derive thresholds.

    Keyword overrides (e.g. D_acc=0.005) are applied to the table first.
    Returns (table, warnings, excluded_seeds).
    """
    doc = dict(table or default_table())
    doc.update(overrides)
    text, warnings, excluded = _core.collect_and_calibrate(list(seeds), _dump(doc), _dump(env), bins)
    return json.loads(text), list(warnings), list(excluded)


def derive_thresholds(samples, table=None, bins=32):
    """samples: iterable of (S, e2, e4, e8). Returns (table, warnings)."""
    text, warnings = _core.derive_thresholds([tuple(s) for s in samples], _dump(table), bins)
    return json.loads(text), list(warnings)


def simulate(seed, mode="static:16", table=None, env=None):
    return json.loads(_core.simulate(seed, mode, _dump(table), _dump(env)))


def run_suite(seeds, modes, table=None, env=None):
    """Returns (report dict, aligned text table)."""
    text, pretty = _core.run_suite(list(seeds), list(modes), _dump(table), _dump(env))
    return json.loads(text), pretty


def profile(seeds, bits=2, env=None):
    return json.loads(_core.profile(list(seeds), bits, _dump(env)))


def replay_dispatch(actions, table):
    return json.loads(_core.replay_dispatch([list(a) for a in actions], _dump(table)))


class Scheduler:
    """Kinematic tracker + stateful dispatcher for one control stream."""

    def __init__(self, table):
        self._impl = _core._Scheduler(_dump(table))

    def decide(self):
        return json.loads(self._impl.decide())

    def observe(self, action):
        self._impl.observe(list(action))

    def state(self):
        return json.loads(self._impl.state())
