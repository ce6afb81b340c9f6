import argparse
import glob
import os
import sys

import plotly.graph_objects as go
from matplotlib import cm
from matplotlib.colors import to_rgba
from plotly.subplots import make_subplots

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from eval_checker.eval_checker_constant import METRICS  # noqa: E402
from model_handler.utils import read_csv  # noqa: E402

PANEL_TITLES = {
    "coverage": "Coverage of rho_2",
    "power": "Power for H0: rho_2 = 0",
    "bias": "Mean bias of rho_2",
    "width": "Mean 95% interval width",
}


def generate_colors(num_colors):
    colormap = cm.get_cmap("tab10", max(num_colors, 1))
    colors = [to_rgba(colormap(i), alpha=0.9) for i in range(num_colors)]
    return ["rgba({:.0f}, {:.0f}, {:.0f}, {:.2f})".format(r * 255, g * 255, b * 255, a) for r, g, b, a in colors]


def create_metric_panels(plot_data, title):
    """Four panels (coverage, power, bias, width) against theta12, one line per method."""
    fig = make_subplots(rows=2, cols=2, subplot_titles=[PANEL_TITLES[metric] for metric in METRICS])
    methods = list(dict.fromkeys(plot_data["method"]))
    colors = dict(zip(methods, generate_colors(len(methods))))
    for position, metric in enumerate(METRICS):
        row, col = divmod(position, 2)
        part = plot_data[plot_data["metric"] == metric]
        for method in methods:
            series = part[part["method"] == method].sort_values("theta12")
            fig.add_trace(
                go.Scatter(
                    x=series["theta12"],
                    y=series["value"],
                    mode="lines+markers",
                    name=method,
                    legendgroup=method,
                    showlegend=position == 0,
                    line=dict(color=colors[method]),
                ),
                row=row + 1,
                col=col + 1,
            )
        fig.update_xaxes(title_text="theta12", row=row + 1, col=col + 1)
    fig.update_layout(title=title, width=1200, height=800)
    return fig


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description="Render simulation plot-data files as figure panels.")
    parser.add_argument("--plot_dir", type=str, default="./result/simulate")
    parser.add_argument("--out_dir", type=str, default=None)
    args = parser.parse_args()

    out_dir = args.out_dir or args.plot_dir
    os.makedirs(out_dir, exist_ok=True)
    for path in sorted(glob.glob(os.path.join(args.plot_dir, "plot_data_K*.csv"))):
        name = os.path.splitext(os.path.basename(path))[0]
        fig = create_metric_panels(read_csv(path), title=name.replace("plot_data_", ""))
        out_png = os.path.join(out_dir, f"{name}.png")
        fig.write_image(out_png)
        print(f"{out_png} has been created")
