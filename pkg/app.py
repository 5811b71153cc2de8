"""
R2M Workbench - training and evaluation dashboard for one run directory.
Usage: python app.py --run runs/demo
"""

import argparse
import logging

import dash
from dash import html
from dash.dependencies import Input, Output

from components.layout import TABS, DashboardLayout
from config import settings
from utils.data_loader import RunLoader
from utils.formatters import Formatters

logger = logging.getLogger(__name__)


def create_app(run_dir: str) -> dash.Dash:
    run_loader = RunLoader(run_dir)
    dashboard_layout = DashboardLayout(run_loader)
    trend_analysis = dashboard_layout.trend_analysis
    attention_heatmap = dashboard_layout.attention_heatmap
    export_reports = dashboard_layout.export_reports

    app = dash.Dash(__name__,
                    external_stylesheets=[
                        "https://fonts.googleapis.com/css2?family=Inter:wght@400;600;700&display=swap",
                    ],
                    suppress_callback_exceptions=True)
    app.title = settings.APP_TITLE
    app.layout = dashboard_layout.create_layout()

    tab_ids = [tab_id for tab_id, _ in TABS]

    @app.callback(
        [Output("tab-content", "children")] + [Output(tab_id, "className") for tab_id in tab_ids],
        [Input(tab_id, "n_clicks") for tab_id in tab_ids],
        prevent_initial_call=True
    )
    def switch_tab(*_clicks):
        ctx = dash.callback_context
        button_id = ctx.triggered[0]['prop_id'].split('.')[0] if ctx.triggered else "overview-tab"
        classes = ["custom-tab active" if tab_id == button_id else "custom-tab" for tab_id in tab_ids]
        return [dashboard_layout.create_tab_layout(button_id)] + classes

    @app.callback(
        [
            Output("kpi-bleu1", "children"),
            Output("kpi-bleu1-sub", "children"),
            Output("kpi-bleu4", "children"),
            Output("kpi-bleu4-sub", "children"),
            Output("kpi-recall", "children"),
            Output("kpi-recall-sub", "children"),
            Output("kpi-loss", "children"),
            Output("kpi-loss-sub", "children"),
            Output("trend-fig", "figure"),
            Output("trend-title", "children"),
        ],
        [Input("overview-stage-dd", "value")],
    )
    def update_overview(stage):
        stats = run_loader.get_summary_stats(stage)
        report = run_loader.report
        eval_scope = f"{report.split} • beam {report.beam_width}" if report else "No evaluation report"
        return (
            Formatters.format_number(stats["bleu1"]),
            eval_scope,
            Formatters.format_number(stats["bleu4"]),
            eval_scope,
            Formatters.format_percentage(stats["concept_recall"]),
            eval_scope,
            Formatters.format_number(stats["final_loss"]),
            Formatters.format_scope(stage),
            trend_analysis.create_loss_figure(stage),
            Formatters.get_loss_title(stage),
        )

    @app.callback(
        [Output("attention-fig", "figure"), Output("attention-title", "children")],
        [Input("attention-sentence-dd", "value")],
    )
    def update_attention(sentence):
        frame = run_loader.get_attention(sentence or "")
        return attention_heatmap.create_figure(frame), Formatters.get_attention_title(sentence, "both")

    @app.callback(
        [Output("trend-analysis-fig", "figure"), Output("trend-stats", "children")],
        [Input("loss-components-stage-dd", "value"),
         Input("trend-metric-dd", "value"),
         Input("trend-chart-type-dd", "value")],
    )
    def update_loss_components(stage, metric, chart_type):
        return (trend_analysis.create_trend_figure(stage, metric, chart_type),
                trend_analysis.get_trend_statistics(stage, metric))

    @app.callback(
        [Output("export-download-link", "children"),
         Output("export-status", "children"),
         Output("download-section", "style")],
        [Input("export-generate-btn", "n_clicks"),
         Input("export-format-dd", "value"),
         Input("export-scope-dd", "value")]
    )
    def generate_export(n_clicks, format_type, scope):
        if not n_clicks:
            return "", "", {"display": "none"}
        try:
            if format_type == "pdf":
                export_data = export_reports.generate_pdf_report()
            else:
                export_data = export_reports.generate_csv(scope)
            if export_data["error"]:
                logger.warning(f"Export failed: {export_data['error']}")
                return "", f"Error: {export_data['error']}", {"display": "none"}
            filename = export_data["filename"]
            download_link = html.A(
                f"Download {filename}",
                href=export_data["content"],
                download=filename,
                className="btn-primary"
            )
            return download_link, f"{format_type.upper()} export ready for download", {"display": "block"}
        except Exception as e:
            logger.error(f"Error generating export: {str(e)}")
            return "", f"Error generating export: {str(e)}", {"display": "none"}

    return app


def main() -> None:
    parser = argparse.ArgumentParser(description="Serve the R2M workbench for one run directory")
    parser.add_argument("--run", required=True, help="run directory written by `cli.py train`")
    parser.add_argument("--port", type=int, default=settings.PORT)
    parser.add_argument("--debug", action="store_true")
    args = parser.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    create_app(args.run).run(debug=args.debug or settings.DEBUG_MODE, port=args.port)


if __name__ == "__main__":
    main()
