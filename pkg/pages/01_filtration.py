"""
pages/01_filtration.py — Filtration Explorer

Stage table S_k, s_k, A_k minus S_k, c_k, d_k for any family, plus the MEF
descriptor and the period branching counts. Everything comes from the
`mef` and `filtration` subcommands, so the table matches the CLI output.

Design: dark terminal aesthetic, amber accent, no narrative.
"""

import json
import math
import sys
from pathlib import Path

import pandas as pd
import plotly.graph_objects as go
import streamlit as st

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.bset_families import family_catalog  # noqa: E402
from core.filtration_engine import DEFAULT_DEPTH, MODES  # noqa: E402
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

SERIES_COLORS = {"s_k": "#6b7280", "c_k": "#f59e0b", "d_k": "#22c55e"}


@st.cache_data(show_spinner=False)
def _run(name: str, config: str) -> dict:
    cfg = RunConfig.from_dict(json.loads(config))
    return run_subcommand(name, cfg).to_dict()


def _log10_series(rows: list[dict], key: str) -> list[float]:
    return [math.log10(int(r[key])) if key in r else None for r in rows]


def _build_period_chart(rows: list[dict]) -> go.Figure:
    fig = go.Figure()
    ks = [r["k"] for r in rows]
    for key, color in SERIES_COLORS.items():
        fig.add_trace(go.Scatter(
            x=ks, y=_log10_series(rows, key), name=key,
            mode="lines+markers", line=dict(color=color, width=2),
        ))
    fig.update_layout(**PLOTLY_BASE, title="log10 of the stage periods", height=320)
    fig.update_xaxes(title_text="k", dtick=1)
    return fig


def _mef_card(mef: dict) -> str:
    tentative = '<span style="color:#ef4444;"> · tentative</span>' if mef.get("tentative") else ""
    return f"""
    <div style="
        background:#1a1d23; border:1px solid #2d3139;
        border-left:3px solid #f59e0b; border-radius:6px;
        padding:12px 16px; font-family:monospace;
    ">
        <div style="font-size:0.6rem; color:#6b7280; letter-spacing:0.1em; font-weight:600;">MEF (lim ← Z/d_kZ)</div>
        <div style="font-size:1.2rem; color:#f59e0b; font-weight:700; margin:4px 0;">{mef["label"]}{tentative}</div>
        <div style="font-size:0.7rem; color:#9ca3af;">
            H_int(W): {mef["h_int_label"]} ·
            every b divides some c_n: {mef["every_b_divides_some_c"]}
        </div>
    </div>
    """


# ---------------------------------------------------------------------------
# Controls
# ---------------------------------------------------------------------------
st.title("Filtration Explorer")

families = [f.name for f in family_catalog()]
c1, c2, c3, c4 = st.columns([2, 2, 1, 1])
with c1:
    family = st.selectbox("Family", families, index=families.index("two-three"), key="flt_family")
with c2:
    raw_params = st.text_input("Params (JSON)", value="{}", key="flt_params",
                               help='e.g. {"count": 8} for power2, {"elements": [...]} for explicit')
with c3:
    depth = st.number_input("Depth", min_value=1, max_value=16, value=min(DEFAULT_DEPTH, 6), key="flt_depth")
with c4:
    mode = st.selectbox("Mode", MODES, key="flt_mode")

try:
    params = json.loads(raw_params or "{}")
except json.JSONDecodeError as exc:
    st.error(f"Params are not valid JSON: {exc}")
    st.stop()

bset = {"family": family, "params": params}
config = json.dumps({"bset": bset, "depth": int(depth), "mode": mode}, sort_keys=True)

try:
    with st.spinner("Building filtration..."):
        mef_report = _run("mef", config)
        flt_report = _run("filtration", config)
except ValueError as exc:
    st.error(str(exc))
    st.stop()

rows = mef_report["stages"]
results = mef_report["results"]

# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------
k1, k2, k3, k4 = st.columns(4)
with k1:
    st.metric("Stages", len(rows), help="Stops early when a finite family is exhausted")
with k2:
    st.metric("Exhausted", "yes" if results["exhausted"] else "no")
with k3:
    persistent = [c["value"] for c in results["a_infinity_candidates"] if c["persistent"]]
    st.metric("A_∞ candidates", ", ".join(str(v) for v in persistent) or "—")
with k4:
    st.metric("Branching", " · ".join(str(v) for v in flt_report["results"]["period_branching"]))

st.html(_mef_card(results["mef"]))
st.markdown("")

st.plotly_chart(_build_period_chart(rows), use_container_width=True, config={"displayModeBar": False})

st.dataframe(
    pd.DataFrame(rows),
    use_container_width=True,
    hide_index=True,
    column_config={
        "A_k_exact": st.column_config.CheckboxColumn("exact"),
        "d_k_status": st.column_config.TextColumn("d_k status"),
    },
)

for note in mef_report["provenance"]:
    st.caption(note)
