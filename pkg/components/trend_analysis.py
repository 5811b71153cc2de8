"""
Loss trend component: per-epoch loss and its components across the curriculum.
"""

from typing import List

import pandas as pd
import plotly.graph_objects as go
from dash import dcc, html
from plotly.subplots import make_subplots

from config import colors
from utils.data_loader import RunLoader
from utils.formatters import Formatters

METRICS = {"loss": "Total loss", "xe": "Cross-entropy", "rec": "Reconstruction", "triplet": "Triplet ranking"}


class TrendAnalysis:
    """Loss curves per stage, per component."""

    def __init__(self, run_loader: RunLoader):
        self.run_loader = run_loader

    def create_trend_analysis_card(self) -> html.Div:
        return html.Div(
            className="card trend-analysis-card",
            children=[
                html.H3("Loss Components", className="card-title"),
                html.Div(
                    className="trend-controls",
                    children=[
                        html.Label("Select Metric:"),
                        dcc.Dropdown(
                            id="trend-metric-dd",
                            options=[{"label": label, "value": key} for key, label in METRICS.items()],
                            value="loss",
                            className="dropdown"
                        ),
                        html.Label("Chart Type:"),
                        dcc.Dropdown(
                            id="trend-chart-type-dd",
                            options=[
                                {"label": "Line Chart", "value": "line"},
                                {"label": "Area Chart", "value": "area"},
                                {"label": "Scatter Plot", "value": "scatter"}
                            ],
                            value="line",
                            className="dropdown"
                        )
                    ]
                ),
                dcc.Graph(
                    id="trend-analysis-fig",
                    style={"height": "400px", "width": "100%"}
                ),
                html.Div(
                    className="statistics-summary",
                    children=[
                        html.H4("Statistical Summary", className="summary-title"),
                        html.Div(id="trend-stats", className="stats-grid")
                    ]
                )
            ],
        )

    def create_loss_figure(self, stage: str) -> go.Figure:
        """Bars of mean epoch loss colored by stage with the rolling mean on top."""
        curve = self.run_loader.get_epoch_curve(stage)
        if curve.empty:
            return self._create_empty_figure("No loss curve recorded yet")
        fig = go.Figure()
        for stage_id, rows in curve.groupby("stage"):
            fig.add_trace(go.Bar(
                x=rows["step"], y=rows["loss"], name=Formatters.format_scope(str(stage_id)),
                marker_color=colors.STAGE_COLORS.get(int(stage_id), colors.PRIMARY["accent"]), opacity=0.9,
            ))
        fig.add_trace(go.Scatter(
            x=curve["step"], y=curve["rolling_loss"], name="Rolling mean (3 epochs)",
            mode="lines+markers", line=dict(width=3, color=colors.PRIMARY["accent_pink"]),
        ))
        self._style(fig, "Epoch (curriculum order)", "Mean loss")
        return fig

    def create_trend_figure(self, stage: str, metric: str, chart_type: str) -> go.Figure:
        curve = self.run_loader.get_epoch_curve(stage)
        if curve.empty or curve[metric].isna().all():
            return self._create_empty_figure(f"No {METRICS[metric].lower()} values for this selection")
        fig = make_subplots(rows=1, cols=1, subplot_titles=[f"{METRICS[metric]} - {Formatters.format_scope(stage)}"])
        for stage_id, rows in curve.groupby("stage"):
            self._add_trace_to_fig(fig, rows.dropna(subset=[metric]), Formatters.format_scope(str(stage_id)),
                                   metric, chart_type, colors.STAGE_COLORS.get(int(stage_id), colors.PRIMARY["accent"]))
        self._style(fig, "Epoch (curriculum order)", METRICS[metric])
        return fig

    def _add_trace_to_fig(self, fig: go.Figure, data: pd.DataFrame,
                          name: str, metric: str, chart_type: str, color: str) -> None:
        if chart_type == "line":
            fig.add_trace(go.Scatter(x=data["step"], y=data[metric], name=name, mode="lines+markers",
                                     line=dict(width=3, color=color), marker=dict(size=8)))
        elif chart_type == "area":
            fig.add_trace(go.Scatter(x=data["step"], y=data[metric], name=name,
                                     mode="lines", fill="tozeroy", line=dict(width=2, color=color)))
        elif chart_type == "scatter":
            fig.add_trace(go.Scatter(x=data["step"], y=data[metric], name=name,
                                     mode="markers", marker=dict(size=10, opacity=0.7, color=color)))

    def get_trend_statistics(self, stage: str, metric: str) -> List[html.Div]:
        values = self.run_loader.filter_losses(stage)[metric].dropna()
        if values.empty:
            return [html.Div("No data available", className="stat-item")]
        stats = {
            "Mean": values.mean(),
            "Median": values.median(),
            "Std Dev": values.std(),
            "Min": values.min(),
            "Max": values.max(),
            "Batches": len(values),
        }
        return [
            html.Div([
                html.Span(f"{name}:", className="stat-label"),
                html.Span(str(value) if name == "Batches" else Formatters.format_number(value),
                          className="stat-value")
            ], className="stat-item")
            for name, value in stats.items()
        ]

    @staticmethod
    def _style(fig: go.Figure, x_title: str, y_title: str) -> None:
        fig.update_layout(
            paper_bgcolor="rgba(0,0,0,0)",
            plot_bgcolor=colors.BACKGROUND["main"],
            font_color=colors.TEXT["primary"],
            margin=dict(t=40, r=20, b=40, l=60),
            legend=dict(orientation="h", yanchor="bottom", y=1.02, xanchor="right", x=1),
            xaxis=dict(title=x_title, gridcolor=colors.BACKGROUND["grid"]),
            yaxis=dict(title=y_title, gridcolor=colors.BACKGROUND["grid"]),
        )

    def _create_empty_figure(self, message: str) -> go.Figure:
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
