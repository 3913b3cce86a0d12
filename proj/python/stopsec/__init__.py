"""StopSec spectrum-sharing protocol simulator.

Thin Python surface over the C++ core: OFDM watermarking, pseudonym frame
codec, channel simulation, the PU detection pipeline, the interference
database, and the closed-loop scenario runner.
"""

import json as _json

from ._stopsec import *  # noqa: F401,F403
from ._stopsec import __version__, run_scenario_json, default_scenario_config


def run_scenario(config):
    """Run one closed-loop scenario.

    `config` may be a dict or a JSON string (comments allowed); returns the
    summary as a dict.
    """
    text = config if isinstance(config, str) else _json.dumps(config)
    return _json.loads(run_scenario_json(text))


def default_scenario():
    """The commented default scenario config, parsed into a dict."""
    import re

    text = default_scenario_config()
    stripped = re.sub(r"//[^\n\"]*", "", text)
    return _json.loads(stripped)
