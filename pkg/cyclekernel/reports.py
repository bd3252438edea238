"""
Writes command reports: one JSON document per command with the resolved
config and a timestamp embedded, plus CSV tables via pandas. Apart from
`created_at`, the output depends only on the config.
"""

import json
import math
import os
from datetime import datetime, timezone

import numpy as np
import pandas as pd

TIMESTAMP_KEY = 'created_at'


def to_jsonable(obj):
    """numpy scalars/arrays to python, tuples to lists, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def write_json(out_dir, name, payload, config):
    os.makedirs(out_dir, exist_ok=True)
    doc = dict(payload)
    doc['config'] = config.to_dict()
    doc[TIMESTAMP_KEY] = datetime.now(timezone.utc).isoformat()
    path = os.path.join(out_dir, f'{name}.json')
    with open(path, 'w') as f:
        json.dump(to_jsonable(doc), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def write_csv(out_dir, name, rows):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, f'{name}.csv')
    pd.DataFrame(rows).to_csv(path, index=False)
    return path


def read_json(path, drop_timestamp=True):
    with open(path) as f:
        doc = json.load(f)
    if drop_timestamp:
        doc.pop(TIMESTAMP_KEY, None)
    return doc
