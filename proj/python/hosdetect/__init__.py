"""Hard-limit nonlinearity detection via segment-averaged higher-order spectra.

The compiled extension carries the numerics; this wrapper turns the JSON
report into plain dictionaries.
"""

import json as _json

from ._hosdetect import (
    HosdetectError,
    __version__,
    analyze_json,
    auto_segments,
    case2_loop,
    describing_function,
    file_digest,
    gen_clipped,
    gen_tones,
    predict_limit_cycle,
    read_record,
    simulate,
    spectra,
    unilateral_dc_shift,
)

__all__ = [
    "HosdetectError",
    "__version__",
    "analyze",
    "analyze_json",
    "auto_segments",
    "case2_loop",
    "describing_function",
    "file_digest",
    "gen_clipped",
    "gen_tones",
    "predict_limit_cycle",
    "read_record",
    "simulate",
    "spectra",
    "unilateral_dc_shift",
]


def analyze(xd=None, xq=None, fs=0.0, **kwargs):
    """Classify one or both dq channels; returns the report as a dict.

    Accepts the same keyword arguments as ``analyze_json``: ``segments``,
    ``seglen`` (both or neither), ``window``, ``sigma``, ``threshold``,
    ``max_tri_bin``.
    """
    return _json.loads(analyze_json(xd=xd, xq=xq, fs=fs, **kwargs))
