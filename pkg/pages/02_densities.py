"""
pages/02_densities.py — Density and Boundary Traces

Interval / logarithmic / Davenport–Erdős densities, the per-stage boundary
trace [1, N] ∩ M_{A_k} ∩ F_B and the interior densities d(F_{A_k}), plus
the light-tails trace. Horizons here are kept small enough for interactive
use; the CLI takes the full default.
"""

import json
import sys
from pathlib import Path

import plotly.graph_objects as go
import streamlit as st

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.bset_families import family_catalog  # noqa: E402
from core.report_builder import RunConfig, run_subcommand  # noqa: E402

PLOTLY_BASE = dict(
    paper_bgcolor="#0e1117",
    plot_bgcolor="#13161d",
    font=dict(color="#d1d5db", size=11, family="monospace"),
    margin=dict(l=45, r=20, t=35, b=40),
    xaxis=dict(gridcolor="#2d3139", linecolor="#2d3139"),
    yaxis=dict(gridcolor="#2d3139", linecolor="#2d3139"),
    hoverlabel=dict(bgcolor="#1a1d23", bordercolor="#2d3139", font_color="#f3f4f6"),
)

HORIZONS = (10 ** 4, 10 ** 5, 10 ** 6, 10 ** 7)


@st.cache_data(show_spinner=False)
def _run(name: str, config: str) -> dict:
    cfg = RunConfig.from_dict(json.loads(config))
    return run_subcommand(name, cfg).to_dict()


def _as_float(value) -> float:
    """Report values: float, or "p/q" for exact fractions."""
    if isinstance(value, str) and "/" in value:
        p, q = value.split("/")
        return int(p) / int(q)
    return float(value)


def _build_trace_chart(window: dict) -> go.Figure:
    fig = go.Figure()
    boundary = window["per_stage_boundary"]
    interior = window["per_stage_interior"]
    fig.add_trace(go.Scatter(
        x=[k for k, _ in boundary], y=[_as_float(v) for _, v in boundary],
        name="boundary (upper bound)", mode="lines+markers",
        line=dict(color="#f59e0b", width=2),
    ))
    fig.add_trace(go.Scatter(
        x=[k for k, _ in interior], y=[_as_float(v) for _, v in interior],
        name="d(F_{A_k})", mode="lines+markers",
        line=dict(color="#22c55e", width=2, dash="dot"),
    ))
    fig.add_hline(y=_as_float(window["m_W"]["value"]), line_dash="dash", line_color="#6b7280",
                  annotation_text="m(W)", annotation_font_color="#6b7280")
    fig.update_layout(**PLOTLY_BASE, title="Window measures by stage", height=340)
    fig.update_xaxes(title_text="k", dtick=1)
    return fig


def _build_tails_chart(tails: list) -> go.Figure:
    fig = go.Figure(go.Bar(
        x=[str(k) for k, _ in tails], y=[v for _, v in tails],
        marker_color="#f59e0b", opacity=0.8,
    ))
    fig.update_layout(**PLOTLY_BASE, title="Light tails: d(M_{B ∩ (K, N]}) on [1, N]", height=300)
    fig.update_xaxes(title_text="K")
    return fig


st.title("Densities")

families = [f.name for f in family_catalog()]
c1, c2, c3, c4 = st.columns([2, 2, 1, 1])
with c1:
    family = st.selectbox("Family", families, index=families.index("power2"), key="den_family")
with c2:
    raw_params = st.text_input("Params (JSON)", value='{"count": 8}', key="den_params")
with c3:
    horizon = st.selectbox("Horizon N", HORIZONS, index=1, format_func=lambda n: f"{n:,}", key="den_horizon")
with c4:
    depth = st.number_input("Depth", min_value=1, max_value=12, value=6, key="den_depth")

try:
    params = json.loads(raw_params or "{}")
except json.JSONDecodeError as exc:
    st.error(f"Params are not valid JSON: {exc}")
    st.stop()

config = json.dumps({
    "bset": {"family": family, "params": params},
    "horizon": int(horizon),
    "depth": int(depth),
    "cutoffs": [c for c in (10, 100, 1_000, 10_000) if c < horizon],
}, sort_keys=True)

try:
    with st.spinner("Sieving..."):
        density = _run("density", config)["results"]
        window = _run("window", config)["results"]
except ValueError as exc:
    st.error(str(exc))
    st.stop()

k1, k2, k3, k4 = st.columns(4)
with k1:
    st.metric("d(F_B) on [1, N]", f"{_as_float(density['interval_free']['value']):.6f}")
with k2:
    log = density.get("log_partial")
    st.metric("log density (partial)", f"{_as_float(log['value']):.6f}" if log else "—")
with k3:
    de = density.get("davenport_erdos")
    st.metric("Davenport–Erdős ≥", f"{_as_float(de['value']):.6f}" if de else "—",
              help="exact d(M_{B ∩ [1, K]}) at the largest cutoff")
with k4:
    st.metric("m(int W) ≥", f"{_as_float(window['window']['m_intW']['value']):.6f}")

st.plotly_chart(_build_trace_chart(window["window"]), use_container_width=True,
                config={"displayModeBar": False})

if density.get("light_tails"):
    st.plotly_chart(_build_tails_chart(density["light_tails"]), use_container_width=True,
                    config={"displayModeBar": False})

haar = window["haar"]
st.subheader("Haar regularity scan")
if haar["records"]:
    st.dataframe(haar["records"], use_container_width=True, hide_index=True)
else:
    st.caption("No cylinder below ratio·N/s_k at the scanned stages.")
if haar["skipped_stages"]:
    st.caption(f"Skipped stages (N/s_k too small): {haar['skipped_stages']}")
