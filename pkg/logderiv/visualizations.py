"""Plotly figures for the dashboard"""
from io import BytesIO
from typing import Dict, Optional

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from logderiv.ensembles import ENSEMBLE_LABELS

COLORS = {
    'navy': '#000080',
    'red': '#DC143C',
    'ash': '#F5F5F5',
    'light_navy': '#4169E1',
    'dark_red': '#B91C3C',
    'medium_ash': '#D3D3D3',
    'green': '#28a745',
}

ENSEMBLE_COLORS = {
    'so_even': COLORS['navy'],
    'so_odd': COLORS['light_navy'],
    'usp': COLORS['red'],
}


def apply_theme(fig: go.Figure) -> go.Figure:
    """Shared layout for every figure"""
    fig.update_layout(
        font=dict(family="Arial, sans-serif", color=COLORS['navy']),
        plot_bgcolor=COLORS['ash'],
        paper_bgcolor='white',
        title_font=dict(size=20, color=COLORS['navy']),
        showlegend=True,
        hovermode='closest',
        margin=dict(l=40, r=40, t=60, b=40)
    )
    return fig


def create_moment_chart(row: Dict[str, object], title: str = "Monte Carlo against closed forms") -> go.Figure:
    """Bars for the Monte Carlo mean, the asymptotic value and the exact value when there is one"""
    labels = ["Monte Carlo", "Asymptotic"]
    values = [row["mc_mean"], row["asymptotic"]]
    errors = [1.96 * row["mc_stderr"], 0.0]
    colors = [COLORS['red'], COLORS['navy']]
    if row.get("exact") is not None:
        labels.append("Exact")
        values.append(row["exact"])
        errors.append(0.0)
        colors.append(COLORS['green'])

    fig = go.Figure(go.Bar(
        x=labels, y=values, marker_color=colors,
        error_y=dict(type='data', array=errors, visible=True, color=COLORS['dark_red']),
    ))
    fig.update_layout(title=title, yaxis_title="moment", showlegend=False)
    return apply_theme(fig)


def create_density_chart(histograms: Dict[str, pd.DataFrame],
                         title: str = "Eigenangle density near 1") -> go.Figure:
    """Overlaid step densities in mean-spacing units, with the uniform level for reference"""
    fig = go.Figure()
    x_max = 0.0
    for ensemble, frame in histograms.items():
        centers = (frame["bin_left"] + frame["bin_right"]) / 2
        x_max = max(x_max, float(frame["bin_right"].max()))
        fig.add_trace(go.Scatter(
            x=centers, y=frame["density"],
            mode='lines+markers', line_shape='hvh',
            name=ENSEMBLE_LABELS.get(ensemble, ensemble),
            line=dict(color=ENSEMBLE_COLORS.get(ensemble, COLORS['navy']), width=2),
        ))
    fig.add_hline(y=1.0, line_dash="dash", line_color=COLORS['medium_ash'])
    fig.update_layout(title=title, xaxis_title="x = θN/π", yaxis_title="density",
                      xaxis=dict(range=[0, x_max]))
    return apply_theme(fig)


def create_value_histogram(values: np.ndarray, bins: int = 60, title: str = "Distribution of Λ′/Λ",
                           clip: Optional[float] = None) -> go.Figure:
    """Histogram of per-sample log-derivative values"""
    data = pd.DataFrame({"value": np.clip(values, -clip, clip) if clip else values})
    fig = px.histogram(
        data, x="value", nbins=bins, title=title,
        color_discrete_sequence=[COLORS['red']],
        template='plotly_white'
    )
    fig.add_vline(x=0.0, line_dash="dash", line_color=COLORS['navy'])
    return apply_theme(fig)


def create_identity_summary(results: pd.DataFrame, title: str = "Identity checks") -> go.Figure:
    """Stacked pass/fail counts per identity"""
    counts = results.groupby(["identity", "status"]).size().reset_index(name="checks")
    fig = px.bar(
        counts, x="identity", y="checks", color="status", title=title,
        color_discrete_map={"PASS": COLORS['navy'], "FAIL": COLORS['red']},
        template='plotly_white'
    )
    fig.update_layout(xaxis_tickangle=-45)
    return apply_theme(fig)


def create_metric_card(label: str, value, note: str = None) -> str:
    """HTML card for one headline number"""
    note_html = ""
    if note is not None:
        note_html = f'<p style="margin: 0; color: {COLORS["dark_red"]}; font-size: 0.9rem;">{note}</p>'

    return f"""
    <div style="
        background: white;
        padding: 1.5rem;
        border-radius: 10px;
        border-left: 4px solid {COLORS['red']};
        box-shadow: 0 2px 4px rgba(0, 0, 0, 0.1);
    ">
        <p style="margin: 0; color: {COLORS['navy']}; font-size: 0.9rem; opacity: 0.8;">{label}</p>
        <p style="margin: 0.5rem 0; color: {COLORS['navy']}; font-size: 2rem; font-weight: bold;">{value}</p>
        {note_html}
    </div>
    """


def excel_bytes(frame: pd.DataFrame, sheet_name: str) -> bytes:
    """Excel workbook with the branded header row"""
    output = BytesIO()
    with pd.ExcelWriter(output, engine='xlsxwriter') as writer:
        frame.to_excel(writer, sheet_name=sheet_name[:31], index=False)  # Sheet name max 31 chars
        workbook = writer.book
        worksheet = writer.sheets[sheet_name[:31]]
        header_format = workbook.add_format({
            'bold': True,
            'bg_color': COLORS['navy'],
            'font_color': 'white',
            'border': 1
        })
        for col_num, value in enumerate(frame.columns):
            worksheet.write(0, col_num, value, header_format)
            worksheet.set_column(col_num, col_num, max(12, len(str(value)) + 2))
    return output.getvalue()
