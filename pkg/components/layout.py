"""
Main layout component for the workbench.
"""

from dash import dcc, html

from components.charts.attention_heatmap import AttentionHeatmap
from components.export_reports import ExportReports
from components.filters import FilterControls
from components.kpi_cards import KPICards
from components.navbar import create_navbar
from components.trend_analysis import TrendAnalysis
from utils.data_loader import RunLoader

TABS = [
    ("overview-tab", "Overview"),
    ("attention-tab", "Attention"),
    ("loss-components-tab", "Loss Components"),
    ("export-reports-tab", "Export & Reports"),
]


class DashboardLayout:
    """Tabbed layout over one run directory."""

    def __init__(self, run_loader: RunLoader):
        self.run_loader = run_loader
        self.filter_controls = FilterControls(run_loader)
        self.kpi_cards = KPICards()
        self.attention_heatmap = AttentionHeatmap()
        self.trend_analysis = TrendAnalysis(run_loader)
        self.export_reports = ExportReports(run_loader)

    def create_layout(self) -> html.Div:
        return html.Div(
            id="app-container",
            className="app",
            children=[
                create_navbar(self.run_loader.run_dir.name or str(self.run_loader.run_dir)),

                html.Div([
                    html.Div([
                        html.Button(
                            label,
                            id=tab_id,
                            className="custom-tab active" if tab_id == "overview-tab" else "custom-tab",
                            n_clicks=0
                        )
                        for tab_id, label in TABS
                    ], className="custom-tabs-container"),

                    html.Div(self.create_tab_layout("overview-tab"), id="tab-content")
                ])
            ],
        )

    def create_tab_layout(self, tab_id: str) -> html.Div:
        builders = {
            "overview-tab": self._create_overview_layout,
            "attention-tab": self._create_attention_layout,
            "loss-components-tab": self._create_loss_components_layout,
            "export-reports-tab": self._create_export_reports_layout,
        }
        return builders.get(tab_id, self._create_overview_layout)()

    def _create_overview_layout(self) -> html.Div:
        return html.Div(
            className="grid",
            children=[
                self.filter_controls.create_filter_card("overview"),
                self.kpi_cards.create_kpi_row(),
                html.Div(
                    className="card trend-card",
                    children=[
                        html.Div(id="trend-title", className="card-title"),
                        dcc.Graph(
                            id="trend-fig",
                            style={"height": "320px", "width": "100%"}
                        ),
                    ],
                ),
            ],
        )

    def _create_attention_layout(self) -> html.Div:
        return html.Div(
            className="grid-comparison",
            children=[
                self.filter_controls.create_filter_card("attention"),
                self.attention_heatmap.create_heatmap_card(),
            ],
        )

    def _create_loss_components_layout(self) -> html.Div:
        return html.Div(
            className="grid-comparison",
            children=[
                self.filter_controls.create_filter_card("loss-components"),
                self.trend_analysis.create_trend_analysis_card(),
            ],
        )

    def _create_export_reports_layout(self) -> html.Div:
        return html.Div(
            className="grid-comparison",
            children=[
                self.export_reports.create_export_card(),
            ],
        )
