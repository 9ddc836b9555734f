"""Python interface to the bsforce simulator and decoder.

Functions that take an experiment configuration accept a dict, a JSON
string or None (the built-in defaults).
"""

import json as _json

try:
    from . import _bsforce as _core
except ImportError:
    import _bsforce as _core

for _name in dir(_core):
    if not _name.startswith("_"):
        globals()[_name] = getattr(_core, _name)


def _config_text(config):
    if config is None:
        return ""
    if isinstance(config, str):
        return config
    return _json.dumps(config)


def default_config():
    """The default experiment configuration as a dict."""
    return _json.loads(_core.default_config_json())


def simulate(config=None, seed=None):
    return _core.simulate(_config_text(config), seed)


def calibrate(config=None, locations_mm=None, forces_n=None):
    return _core.calibrate(_config_text(config), locations_mm, forces_n)


def snr_sweep(config=None, seed=7):
    return _core.snr_sweep(_config_text(config), seed)


def force_sweep(config=None, seed=7):
    return _core.force_sweep(_config_text(config), seed)


def crosstalk(config=None, seed=7):
    return _core.crosstalk(_config_text(config), seed)
