"""
Data formatting and display utilities.
"""

from typing import Optional, Union

import pandas as pd

STAGE_NAMES = {"1": "Stage 1 • L_XE", "2": "Stage 2 • L_S", "3": "Stage 3 • L_M", "4": "Stage 4 • L_I"}


class Formatters:
    """Utility class for formatting data for display."""

    @staticmethod
    def format_number(value: Union[int, float, None],
                      decimals: int = 4,
                      suffix: str = "") -> str:
        """Format a loss or score with fixed decimals."""
        if value is None or pd.isna(value):
            return "—"
        try:
            return f"{float(value):,.{decimals}f}{suffix}"
        except (ValueError, TypeError):
            return "—"

    @staticmethod
    def format_percentage(value: Union[float, None],
                          decimals: int = 1) -> str:
        """Format a [0, 1] score as a percentage."""
        if value is None or pd.isna(value):
            return "—%"
        try:
            return f"{100.0 * float(value):.{decimals}f}%"
        except (ValueError, TypeError):
            return "—%"

    @staticmethod
    def format_scope(stage: str) -> str:
        if stage == "All":
            return "All Stages"
        return STAGE_NAMES.get(str(stage), f"Stage {stage}")

    @staticmethod
    def format_sentence(sentence: Optional[str]) -> str:
        return sentence.replace("_", " ") if sentence else "No attention trace"

    @staticmethod
    def get_loss_title(stage: str) -> str:
        return f"Mean Loss per Epoch & 3-Epoch Rolling Mean • {Formatters.format_scope(stage)}"

    @staticmethod
    def get_attention_title(sentence: Optional[str], component: str) -> str:
        labels = {"fm": "Fusion memory (head average)", "rm": "Recurrent memory"}
        label = labels.get(component, "Fusion & recurrent memory attention")
        return f"{label} • {Formatters.format_sentence(sentence)}"
