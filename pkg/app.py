import logging

import streamlit as st

from logderiv import __version__
from logderiv.config import LOG_LEVEL, run_defaults
from logderiv.visualizations import COLORS, create_metric_card

logging.basicConfig(level=LOG_LEVEL, format='%(asctime)s - %(name)s - %(levelname)s - %(message)s')

# Page configuration
st.set_page_config(
    page_title="Log-derivative Moments",
    page_icon="🎲",
    layout="wide",
    initial_sidebar_state="expanded"
)


def load_custom_css():
    st.markdown(f"""
    <style>
    .main-header {{
        background: linear-gradient(135deg, {COLORS['navy']} 0%, #1e3c72 100%);
        padding: 2rem;
        border-radius: 10px;
        margin-bottom: 2rem;
        box-shadow: 0 4px 6px rgba(0, 0, 0, 0.1);
    }}

    .link-card {{
        background: white;
        padding: 1.5rem;
        border-radius: 10px;
        border-left: 4px solid {COLORS['red']};
        box-shadow: 0 2px 4px rgba(0, 0, 0, 0.1);
        margin-bottom: 1rem;
    }}

    .link-card h3 {{
        color: {COLORS['navy']};
        margin: 0 0 0.5rem 0;
    }}

    .link-card p {{
        color: #666;
        margin: 0;
    }}

    h1 {{
        color: {COLORS['navy']};
        font-weight: 700;
    }}

    h2, h3 {{
        color: #1e3c72;
        font-weight: 600;
    }}
    </style>
    """, unsafe_allow_html=True)


def initialize_session_state():
    """Shared run defaults, editable from the sidebar"""
    for key in ("seed", "samples", "threads"):
        if key not in st.session_state:
            st.session_state[key] = run_defaults[key]


def main():
    initialize_session_state()
    load_custom_css()

    with st.sidebar:
        st.markdown("### ⚙️ Run defaults")
        st.session_state.seed = st.number_input("Seed", min_value=0, value=st.session_state.seed, step=1)
        st.session_state.samples = st.number_input("Samples", min_value=100, max_value=1_000_000,
                                                   value=st.session_state.samples, step=1000)
        st.session_state.threads = st.number_input("Worker processes", min_value=1, max_value=64,
                                                   value=st.session_state.threads, step=1)
        st.markdown("---")
        st.caption(f"logderiv {__version__}")

    st.markdown('<div class="main-header">', unsafe_allow_html=True)
    st.markdown("<h1 style='text-align: center; color: white;'>🎲 Log-derivative Moments</h1>",
                unsafe_allow_html=True)
    st.markdown("<p style='text-align: center; color: #F5F5F5;'>Characteristic polynomials of "
                "SO(2N), SO(2N+1) and USp(2N) near the point 1</p>", unsafe_allow_html=True)
    st.markdown('</div>', unsafe_allow_html=True)

    col1, col2, col3 = st.columns(3)
    with col1:
        st.markdown(create_metric_card("SO(2N)", "−N", "first moment, no repulsion at 1"),
                    unsafe_allow_html=True)
    with col2:
        st.markdown(create_metric_card("USp(2N)", "N", "first moment, quadratic repulsion"),
                    unsafe_allow_html=True)
    with col3:
        st.markdown(create_metric_card("SO(2N+1)", "−N/a", "first moment, forced eigenvalue at 1"),
                    unsafe_allow_html=True)

    st.markdown("## Three routes to the same moments")
    col1, col2, col3 = st.columns(3)
    with col1:
        st.markdown("""
        <div class="link-card">
            <h3>🎲 Moments</h3>
            <p>Monte Carlo over Haar-random matrices next to the asymptotic and exact formulas.</p>
        </div>
        """, unsafe_allow_html=True)
    with col2:
        st.markdown("""
        <div class="link-card">
            <h3>🧮 Identities</h3>
            <p>Exact rational checks of the determinant identities behind the asymptotics.</p>
        </div>
        """, unsafe_allow_html=True)
    with col3:
        st.markdown("""
        <div class="link-card">
            <h3>📈 Eigenvalue Density</h3>
            <p>Empirical eigenangle density near 1 in units of the mean spacing.</p>
        </div>
        """, unsafe_allow_html=True)

    st.info("Use the pages in the sidebar. Sidebar values are shared by every page.")


if __name__ == "__main__":
    main()
