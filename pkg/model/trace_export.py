"""
Attention traces of a decode as a flat table (one CSV per sentence).
"""

from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from model.seq2seq import DecodeTrace
from model.vocabulary import Vocabulary

ATTENTION_COLUMNS = ["component", "step", "head", "token", "input",
                     "w_vv", "w_wv", "w_vw", "w_ww", "w_mm", "w_fm"]

FM_AVERAGE_HEAD = -1


def attention_frame(trace: DecodeTrace, vocab: Vocabulary) -> pd.DataFrame:
    """FM rows carry the 2×2 matrix (row-major), RM rows the [M→M, f→M] pair.

    ``head = -1`` marks the FM average over heads.
    """
    records = []
    for step in range(len(trace)):
        token = vocab.token_of(trace.tokens[step])
        previous = vocab.token_of(trace.inputs[step])
        fm = trace.fm_attention[step]
        if fm is not None:
            heads = list(enumerate(fm.weights)) + [(FM_AVERAGE_HEAD, fm.average)]
            for head, weights in heads:
                w_vv, w_wv, w_vw, w_ww = np.asarray(weights).reshape(-1)
                records.append({"component": "fm", "step": step, "head": head, "token": token,
                                "input": previous, "w_vv": w_vv, "w_wv": w_wv, "w_vw": w_vw,
                                "w_ww": w_ww, "w_mm": np.nan, "w_fm": np.nan})
        rm = trace.rm_attention[step]
        if rm is not None:
            for head, weights in enumerate(rm.weights):
                w_mm, w_fm = np.asarray(weights)[0]
                records.append({"component": "rm", "step": step, "head": head, "token": token,
                                "input": previous, "w_vv": np.nan, "w_wv": np.nan, "w_vw": np.nan,
                                "w_ww": np.nan, "w_mm": w_mm, "w_fm": w_fm})
    return pd.DataFrame.from_records(records, columns=ATTENTION_COLUMNS)


def write_attention_csv(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format="%.17g")
    return path
