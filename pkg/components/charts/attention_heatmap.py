"""
Attention heatmap component: FM weights averaged over heads and RM weights per head.
"""

from typing import List, Tuple

import pandas as pd
import plotly.graph_objects as go
from dash import dcc, html
from plotly.subplots import make_subplots

from config import colors, settings
from model.trace_export import FM_AVERAGE_HEAD

FM_COLUMNS = ["w_vv", "w_wv", "w_vw", "w_ww"]
FM_LABELS = ["v→v", "w→v", "v→w", "w→w"]
RM_COLUMNS = ["w_mm", "w_fm"]
RM_LABELS = ["M→M", "f→M"]


class AttentionHeatmap:
    """Heatmaps of one sentence's attention trace, one row per decoding step."""

    def create_heatmap_card(self) -> html.Div:
        return html.Div(
            className="card attention-card",
            children=[
                html.Div(id="attention-title", className="card-title"),
                dcc.Graph(
                    id="attention-fig",
                    config={"displayModeBar": False},
                    style={"height": "480px", "width": "100%"}
                ),
            ],
        )

    @staticmethod
    def step_labels(frame: pd.DataFrame) -> List[str]:
        steps = frame.drop_duplicates("step").sort_values("step")
        return [f"{row.step}: {row.input} → {row.token}" for row in steps.itertuples()]

    @staticmethod
    def fm_matrix(frame: pd.DataFrame) -> Tuple[List[List[float]], List[str]]:
        """Step × 4 matrix of the head-averaged FM weights."""
        rows = frame[(frame["component"] == "fm") & (frame["head"] == FM_AVERAGE_HEAD)].sort_values("step")
        return rows[FM_COLUMNS].to_numpy().tolist(), FM_LABELS

    @staticmethod
    def rm_matrix(frame: pd.DataFrame) -> Tuple[List[List[float]], List[str]]:
        """Step × (2·heads) matrix of the RM weights, heads side by side."""
        rows = frame[frame["component"] == "rm"]
        if rows.empty:
            return [], []
        wide = rows.pivot(index="step", columns="head", values=RM_COLUMNS).sort_index()
        heads = sorted(rows["head"].unique().tolist())
        columns = [(name, head) for head in heads for name in RM_COLUMNS]
        labels = [f"h{head} {label}" for head in heads for label in RM_LABELS]
        return wide[columns].to_numpy().tolist(), labels

    @staticmethod
    def create_figure(frame: pd.DataFrame) -> go.Figure:
        """FM (left) and RM (right) heatmaps sharing the step axis."""
        if frame.empty:
            return AttentionHeatmap._create_empty_figure("No attention trace recorded")
        labels = AttentionHeatmap.step_labels(frame)
        fm, fm_labels = AttentionHeatmap.fm_matrix(frame)
        rm, rm_labels = AttentionHeatmap.rm_matrix(frame)

        fig = make_subplots(rows=1, cols=2, shared_yaxes=True,
                            subplot_titles=["Fusion memory (head average)", "Recurrent memory"])
        if fm:
            fig.add_trace(go.Heatmap(z=fm, x=fm_labels, y=labels, zmin=0, zmax=1,
                                     colorscale=colors.HEATMAP_SCALE, showscale=False), row=1, col=1)
        if rm:
            fig.add_trace(go.Heatmap(z=rm, x=rm_labels, y=labels, zmin=0, zmax=1,
                                     colorscale=colors.HEATMAP_SCALE), row=1, col=2)
        fig.update_yaxes(autorange="reversed")
        fig.update_layout(
            paper_bgcolor="rgba(0,0,0,0)",
            plot_bgcolor=colors.BACKGROUND["main"],
            font_color=colors.TEXT["primary"],
            margin=settings.CHART_MARGIN,
            height=settings.CHART_HEIGHT,
        )
        return fig

    @staticmethod
    def _create_empty_figure(message: str) -> go.Figure:
        fig = go.Figure()
        fig.update_layout(
            paper_bgcolor="rgba(0,0,0,0)",
            plot_bgcolor=colors.BACKGROUND["main"],
            font_color=colors.TEXT["primary"],
            xaxis=dict(showgrid=False, zeroline=False, showticklabels=False),
            yaxis=dict(showgrid=False, zeroline=False, showticklabels=False),
            annotations=[dict(
                text=message,
                xref="paper", yref="paper",
                x=0.5, y=0.5, showarrow=False,
                font=dict(size=16, color=colors.TEXT["secondary"])
            )]
        )
        return fig
