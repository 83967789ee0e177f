"""
app.py — bfree-lab Streamlit Entry Point

Multi-page navigation via st.navigation() (Streamlit 1.36+).
Read-only views over core/: every number shown comes from the same calls
the CLI makes.

Design principles:
- Dark terminal aesthetic: #0e1117 bg, amber accent (#f59e0b)
- st.html() for custom cards (not st.markdown: style tags sandboxed)
- Inline styles only: Streamlit strips <style> blocks in components

Run: streamlit run app.py
"""

import logging
import sys
from pathlib import Path

import streamlit as st

# ---------------------------------------------------------------------------
# Path setup: allow 'from core.xxx import' regardless of cwd
# ---------------------------------------------------------------------------
ROOT = Path(__file__).parent
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))

from core.bset_families import default_horizon, family_catalog  # noqa: E402

# ---------------------------------------------------------------------------
# Logging setup: write to logs/bfree.log
# ---------------------------------------------------------------------------
LOG_DIR = ROOT / "logs"
LOG_DIR.mkdir(exist_ok=True)

logging.basicConfig(
    level=logging.INFO,
    format="%(asctime)s [%(name)s] %(levelname)s: %(message)s",
    handlers=[
        logging.FileHandler(LOG_DIR / "bfree.log"),
        logging.StreamHandler(),
    ],
)
logger = logging.getLogger(__name__)

# ---------------------------------------------------------------------------
# Page config: must be first Streamlit call
# ---------------------------------------------------------------------------
st.set_page_config(
    page_title="bfree-lab",
    page_icon="∞",
    layout="wide",
    initial_sidebar_state="expanded",
    menu_items={
        "Get Help": None,
        "Report a bug": None,
        "About": "bfree-lab — B-free systems explorer",
    },
)

st.markdown(
    """
    <style>
    [data-testid="stSidebar"] {
        background-color: #13161d;
    }
    [data-testid="stSidebar"] .stMarkdown p {
        color: #9ca3af;
        font-size: 0.75rem;
        letter-spacing: 0.05em;
    }
    .block-container {
        padding-top: 1.5rem;
        padding-bottom: 2rem;
    }
    [data-testid="stMetricValue"] {
        font-size: 1.6rem !important;
        font-weight: 700 !important;
    }
    footer { visibility: hidden; }
    thead tr th {
        background-color: #1a1d23 !important;
        color: #f59e0b !important;
        font-size: 0.75rem !important;
        letter-spacing: 0.08em !important;
        text-transform: uppercase !important;
    }
    </style>
    """,
    unsafe_allow_html=True,
)

# ---------------------------------------------------------------------------
# Sidebar: family catalog
# ---------------------------------------------------------------------------
with st.sidebar:
    st.html(
        """
        <div style="
            padding: 12px 0 8px 0;
            border-bottom: 1px solid #2d3139;
            margin-bottom: 12px;
        ">
            <span style="
                font-size: 1.1rem;
                font-weight: 700;
                color: #f59e0b;
                letter-spacing: 0.03em;
            ">∞ BFREE</span>
            <span style="
                font-size: 0.65rem;
                color: #6b7280;
                margin-left: 6px;
                letter-spacing: 0.1em;
                vertical-align: middle;
            ">LAB</span>
        </div>
        """
    )
    rows = "".join(
        f'<div><span style="color:#d1d5db;">{fam.name}</span> '
        f'<span style="color:#4b5563;">{"∞" if fam.infinite else "fin"}'
        f'{" · oracle" if fam.exact_oracle else ""}</span></div>'
        for fam in family_catalog()
    )
    st.html(
        f"""
        <div style="
            background:#1a1d23; border:1px solid #2d3139;
            border-radius:6px; padding:8px 10px; margin-bottom:8px;
        ">
            <div style="font-size:0.6rem; font-weight:700; color:#9ca3af; letter-spacing:0.08em; margin-bottom:4px;">
                FAMILIES
            </div>
            <div style="font-size:0.6rem; color:#6b7280; line-height:1.7; font-family:monospace;">
                {rows}
            </div>
            <div style="font-size:0.55rem; color:#4b5563; margin-top:6px;">
                default horizon N = {default_horizon():,}
            </div>
        </div>
        """
    )
    st.markdown("---")
    st.markdown("Exact where possible, flagged where not")

# ---------------------------------------------------------------------------
# Multi-page navigation: programmatic (st.navigation, Streamlit 1.36+)
# ---------------------------------------------------------------------------
pages = [
    st.Page("pages/01_filtration.py", title="Filtration",  icon="🧱", default=True),
    st.Page("pages/02_densities.py",  title="Densities",   icon="📈"),
    st.Page("pages/03_reproduce.py",  title="Reproduce",   icon="✅"),
]

pg = st.navigation(pages)
pg.run()
