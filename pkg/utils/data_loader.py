"""
Run directory loading for the workbench.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Union

import pandas as pd

from config import settings
from harness.evaluate import EvalReport
from harness.trainer import LOSS_COLUMNS
from model.trace_export import ATTENTION_COLUMNS

logger = logging.getLogger(__name__)


class RunLoader:
    """Reads loss curves, the evaluation report and attention traces of one run."""

    def __init__(self, run_dir: Union[str, Path]):
        self.run_dir = Path(run_dir)
        self.losses = pd.DataFrame(columns=LOSS_COLUMNS)
        self.report: Optional[EvalReport] = None
        self.attention: Dict[str, pd.DataFrame] = {}
        self._load_data()

    def _load_data(self) -> None:
        """Load every artifact that exists; a fresh run directory is not an error."""
        losses_path = self.run_dir / settings.LOSS_CURVES_FILE
        try:
            if losses_path.is_file():
                self.losses = pd.read_csv(losses_path, float_precision="round_trip")
                self._clean_losses()
            report_path = self.run_dir / settings.EVAL_REPORT_FILE
            if report_path.is_file():
                self.report = EvalReport.load(report_path)
            for path in sorted((self.run_dir / settings.ATTENTION_DIR).glob("*.csv")):
                self.attention[path.stem] = pd.read_csv(path, float_precision="round_trip")
            logger.info(f"Loaded run {self.run_dir}: {len(self.losses)} loss rows, "
                        f"{len(self.attention)} attention traces")
        except Exception as e:
            logger.error(f"Error loading run {self.run_dir}: {str(e)}")
            raise

    def _clean_losses(self) -> None:
        missing = [c for c in LOSS_COLUMNS if c not in self.losses.columns]
        if missing:
            raise ValueError(f"loss curve file lacks columns {missing}")
        for column in ("stage", "epoch", "batch"):
            self.losses[column] = self.losses[column].astype(int)

    def get_stages(self) -> List[str]:
        return ["All"] + [str(s) for s in sorted(self.losses["stage"].unique().tolist())]

    def get_sentences(self) -> List[str]:
        return sorted(self.attention)

    def filter_losses(self, stage: str) -> pd.DataFrame:
        filtered = self.losses.copy()
        if stage != "All":
            filtered = filtered[filtered["stage"] == int(stage)]
        return filtered

    def get_epoch_curve(self, stage: str) -> pd.DataFrame:
        """Mean loss per (stage, epoch) with a running position and a 3-epoch rolling mean."""
        df = self.filter_losses(stage)
        if df.empty:
            return pd.DataFrame(columns=["stage", "epoch", "loss", "xe", "rec", "triplet", "step", "rolling_loss"])
        curve = (
            df.groupby(["stage", "epoch"], as_index=False)
            .agg({"loss": "mean", "xe": "mean", "rec": "mean", "triplet": "mean"})
            .sort_values(["stage", "epoch"])
            .reset_index(drop=True)
        )
        curve["step"] = range(1, len(curve) + 1)
        curve["rolling_loss"] = curve.groupby("stage")["loss"].transform(
            lambda s: s.rolling(3, min_periods=1).mean())
        return curve

    def get_summary_stats(self, stage: str) -> Dict[str, float]:
        """KPI values: BLEU-1, BLEU-4, concept recall and the last epoch's mean loss."""
        curve = self.get_epoch_curve(stage)
        stats = {"bleu1": float("nan"), "bleu4": float("nan"), "concept_recall": float("nan"),
                 "final_loss": float(curve["loss"].iloc[-1]) if not curve.empty else float("nan")}
        if self.report is not None:
            stats.update(bleu1=self.report.bleu[0], bleu4=self.report.bleu[3],
                         concept_recall=self.report.concept_recall)
        return stats

    def get_attention(self, sentence: str) -> pd.DataFrame:
        if sentence not in self.attention:
            return pd.DataFrame(columns=ATTENTION_COLUMNS)
        return self.attention[sentence]
