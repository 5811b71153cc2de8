"""
KPI cards component for displaying key metrics.
"""

from dash import html


class KPICards:
    """BLEU, concept recall and final loss cards."""

    def create_kpi_row(self) -> html.Div:
        """One row of four cards; the value ids are filled by the run callbacks."""
        return html.Div(
            className="kpi-row",
            children=[
                self._create_kpi_card(
                    title="BLEU-1",
                    value_id="kpi-bleu1",
                    subtitle_id="kpi-bleu1-sub"
                ),
                self._create_kpi_card(
                    title="BLEU-4",
                    value_id="kpi-bleu4",
                    subtitle_id="kpi-bleu4-sub"
                ),
                self._create_kpi_card(
                    title="Concept Recall",
                    value_id="kpi-recall",
                    subtitle_id="kpi-recall-sub",
                    accent=True
                ),
                self._create_kpi_card(
                    title="Final Epoch Loss",
                    value_id="kpi-loss",
                    subtitle_id="kpi-loss-sub"
                ),
            ],
        )

    def _create_kpi_card(self, title: str, value_id: str, subtitle_id: str, accent: bool = False) -> html.Div:
        """A titled card with a large value line and a muted subtitle."""
        value_class = "kpi-value accent" if accent else "kpi-value"
        return html.Div(
            className="kpi",
            children=[
                html.Div(title, className="kpi-title"),
                html.Div(id=value_id, className=value_class),
                html.Div(id=subtitle_id, className="kpi-sub"),
            ],
        )
