"""
pages/03_reproduce.py — Reproduce Runner

Runs the named experiments from core.reproduce_catalog and shows each
check with PASS/FAIL. Same runner as `scripts/bfree.py reproduce <id>`.
"""

import sys
from pathlib import Path

import streamlit as st

ROOT = Path(__file__).parent.parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.report_builder import jsonable  # noqa: E402
from core.reproduce_catalog import reproduce_catalog, run_experiment  # noqa: E402


@st.cache_data(show_spinner=False)
def _outcome(exp_id: str) -> dict:
    out = run_experiment(exp_id)
    return {"passed": out.passed, "checks": out.checks, "observed": jsonable(out.observed),
            "stages": jsonable(out.stages)}


def _status_card(exp_id: str, claim: str, passed: bool, checks: dict) -> str:
    color = "#22c55e" if passed else "#ef4444"
    items = "".join(
        f'<div><span style="color:{"#22c55e" if ok else "#ef4444"};">{"✓" if ok else "✗"}</span> {name}</div>'
        for name, ok in checks.items()
    )
    return f"""
    <div style="
        background:#1a1d23; border:1px solid #2d3139;
        border-left:3px solid {color}; border-radius:6px;
        padding:10px 14px; margin-bottom:8px;
    ">
        <div style="display:flex; justify-content:space-between; margin-bottom:4px;">
            <span style="font-size:0.75rem; font-weight:700; color:#d1d5db; font-family:monospace;">{exp_id}</span>
            <span style="font-size:0.7rem; font-weight:700; color:{color};">{"PASS" if passed else "FAIL"}</span>
        </div>
        <div style="font-size:0.65rem; color:#9ca3af; margin-bottom:6px;">{claim}</div>
        <div style="font-size:0.65rem; color:#6b7280; line-height:1.7; font-family:monospace;">{items}</div>
    </div>
    """


st.title("Reproduce")

catalog = reproduce_catalog()
chosen = st.multiselect("Experiments", [e.id for e in catalog], default=[catalog[0].id], key="rep_ids")
if st.button("Run", type="primary"):
    st.session_state["rep_run"] = list(chosen)

for exp in catalog:
    if exp.id not in st.session_state.get("rep_run", []):
        continue
    with st.spinner(f"Running {exp.id}..."):
        try:
            out = _outcome(exp.id)
        except ValueError as exc:
            st.error(f"{exp.id}: {exc}")
            continue
    st.html(_status_card(exp.id, exp.claim, out["passed"], out["checks"]))
    with st.expander(f"{exp.id} — observed values"):
        st.json(out["observed"])
        if out["stages"]:
            st.dataframe(out["stages"], use_container_width=True, hide_index=True)
