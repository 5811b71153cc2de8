"""
Filter controls component for the workbench.
"""

from dash import dcc, html

from utils.data_loader import RunLoader
from utils.formatters import Formatters


class FilterControls:
    """Stage and sentence selectors."""

    def __init__(self, run_loader: RunLoader):
        self.run_loader = run_loader

    def create_filter_card(self, id_prefix: str) -> html.Div:
        stages = self.run_loader.get_stages()
        sentences = self.run_loader.get_sentences()

        return html.Div(
            className="card filter-card",
            children=[
                html.H3("Filters"),

                html.Label("Stage", className="filter-label"),
                dcc.Dropdown(
                    id=f"{id_prefix}-stage-dd",
                    options=[{"label": Formatters.format_scope(s), "value": s} for s in stages],
                    value="All",
                    className="dropdown",
                    clearable=False,
                ),

                html.Label("Attention trace", className="filter-label"),
                dcc.Dropdown(
                    id=f"{id_prefix}-sentence-dd",
                    options=[{"label": Formatters.format_sentence(s), "value": s} for s in sentences],
                    value=sentences[0] if sentences else None,
                    className="dropdown",
                    clearable=False,
                ),

                html.Div(
                    className="note",
                    children="Tip: write traces with `cli.py export-attention` into the run's attention folder."
                ),
            ],
        )
