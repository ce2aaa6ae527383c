import pandas as pd
import streamlit as st

from logderiv.config import run_defaults
from logderiv.ensembles import ENSEMBLE_LABELS, ENSEMBLES
from logderiv.errors import LogDerivError
from logderiv.formulas import asymptotic_coefficients, compare
from logderiv.moments import ScaledPoint, draw_logderivs
from logderiv.visualizations import create_moment_chart, create_value_histogram

# Page configuration
st.set_page_config(
    page_title="Moments - Log-derivative Moments",
    page_icon="🎲",
    layout="wide"
)


@st.cache_data(show_spinner=False)
def run_comparison(ensemble, K, N, a, samples, seed, threads):
    result = compare(ensemble, K, N, a, samples, seed, threads)
    row = result.as_row()
    row["reference"] = result.reference
    row["p_value"] = result.p_value
    row["next_to_leading"] = result.asymptotic.next_to_leading
    row["formula"] = result.asymptotic.formula_id
    return row


@st.cache_data(show_spinner=False)
def load_values(ensemble, N, a, samples, seed, threads):
    return draw_logderivs(ensemble, ScaledPoint(N, a), samples, seed, threads)


st.markdown("# 🎲 Moments of Λ′/Λ at s = e^(−a/N)")

col1, col2, col3, col4 = st.columns(4)
with col1:
    ensemble = st.selectbox("Ensemble", ENSEMBLES, format_func=lambda e: ENSEMBLE_LABELS[e])
with col2:
    K = st.number_input("Moment K", min_value=1, max_value=8, value=1, step=1)
with col3:
    N = st.number_input("N", min_value=1, max_value=200, value=20, step=1)
with col4:
    a = st.number_input("a", min_value=0.001, max_value=10.0, value=0.1, step=0.01, format="%.3f")

seed = st.session_state.get("seed", run_defaults["seed"])
samples = st.session_state.get("samples", run_defaults["samples"])
threads = st.session_state.get("threads", run_defaults["threads"])

stated = asymptotic_coefficients(ensemble, int(K))
st.caption("Asymptotic coefficients c_m of N^K a^(m−K): "
           + ", ".join(f"a^{m - int(K)}: {c}" for m, c in sorted(stated.items())))

if st.button("▶️ Run", use_container_width=True):
    try:
        with st.spinner(f"Sampling {samples:,} Haar matrices..."):
            row = run_comparison(ensemble, int(K), int(N), float(a), int(samples), int(seed), int(threads))
            values = load_values(ensemble, int(N), float(a), int(samples), int(seed), int(threads))
    except LogDerivError as e:
        st.error(f"Could not run: {e}")
        st.stop()

    col1, col2, col3, col4 = st.columns(4)
    with col1:
        st.metric("Monte Carlo", f"{row['mc_mean']:.5g}", f"± {row['mc_stderr']:.2g}", delta_color="off")
    with col2:
        st.metric("Asymptotic", f"{row['asymptotic']:.5g}")
    with col3:
        st.metric("Exact", "—" if row["exact"] is None else f"{row['exact']:.5g}")
    with col4:
        st.metric("z-score", f"{row['z_score']:.2f}", f"p = {row['p_value']:.3f}", delta_color="off")

    col1, col2 = st.columns(2)
    with col1:
        st.plotly_chart(create_moment_chart(row), use_container_width=True)
    with col2:
        scale = 10 * max(abs(row["reference"]) ** (1 / int(K)), 1.0)
        st.plotly_chart(create_value_histogram(values, clip=scale), use_container_width=True)
        st.caption(f"Negative values: {(values < 0).mean():.2%}")

    frame = pd.DataFrame([row])
    st.dataframe(frame, use_container_width=True)
    st.download_button(
        label="📥 Download CSV",
        data=frame.to_csv(index=False),
        file_name=f"moment_{ensemble}_K{int(K)}_N{int(N)}.csv",
        mime="text/csv"
    )
