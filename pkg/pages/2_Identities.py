import pandas as pd
import streamlit as st

from logderiv.config import MAX_IDENTITY_K, run_defaults
from logderiv.errors import LogDerivError
from logderiv.matcalc import identity_suite
from logderiv.visualizations import COLORS, create_identity_summary, excel_bytes

# Page configuration
st.set_page_config(
    page_title="Identities - Log-derivative Moments",
    page_icon="🧮",
    layout="wide"
)


@st.cache_data(show_spinner=False)
def run_suite(max_K, derivative_bound, seed):
    return pd.DataFrame([r.as_row() for r in identity_suite(max_K, derivative_bound, seed=seed)])


def highlight_status(value):
    color = COLORS['navy'] if value == "PASS" else COLORS['red']
    return f"color: white; background-color: {color}"


st.markdown("# 🧮 Exact determinant identities")
st.markdown("All values are exact rationals. Checks that differentiate determinants "
            "stop at the derivative bound.")

col1, col2 = st.columns(2)
with col1:
    max_K = st.slider("Largest K", 1, MAX_IDENTITY_K, min(4, MAX_IDENTITY_K))
with col2:
    derivative_bound = st.slider("Derivative bound", 1, 6, min(run_defaults["derivative_bound"], 4))

if st.button("▶️ Verify", use_container_width=True):
    try:
        with st.spinner("Computing exact determinants..."):
            results = run_suite(max_K, derivative_bound, int(st.session_state.get("seed", run_defaults["seed"])))
    except LogDerivError as e:
        st.error(f"Suite failed to run: {e}")
        st.stop()

    passed = int((results["status"] == "PASS").sum())
    col1, col2, col3 = st.columns(3)
    col1.metric("Checks", len(results))
    col2.metric("Passed", passed)
    col3.metric("Failed", len(results) - passed)

    if passed == len(results):
        st.success("✅ Every identity holds")
    else:
        st.error("❌ Some identities failed")

    st.plotly_chart(create_identity_summary(results), use_container_width=True)
    st.dataframe(results.style.map(highlight_status, subset=["status"]), use_container_width=True)

    col1, col2 = st.columns(2)
    with col1:
        st.download_button(
            label="📥 Download CSV",
            data=results.to_csv(index=False),
            file_name=f"identities_K{max_K}.csv",
            mime="text/csv",
            use_container_width=True
        )
    with col2:
        st.download_button(
            label="📥 Download Excel",
            data=excel_bytes(results, "identities"),
            file_name=f"identities_K{max_K}.xlsx",
            mime="application/vnd.openxmlformats-officedocument.spreadsheetml.sheet",
            use_container_width=True
        )
