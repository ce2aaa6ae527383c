import pandas as pd
import streamlit as st

from logderiv.config import run_defaults
from logderiv.ensembles import ENSEMBLE_LABELS, ENSEMBLES, density_histogram
from logderiv.errors import LogDerivError
from logderiv.visualizations import create_density_chart

# Page configuration
st.set_page_config(
    page_title="Eigenvalue Density - Log-derivative Moments",
    page_icon="📈",
    layout="wide"
)


@st.cache_data(show_spinner=False)
def load_histogram(ensemble, N, samples, bins, seed, x_max):
    return density_histogram(ensemble, N, samples, bins, seed, x_max)


st.markdown("# 📈 Eigenangle density near 1")
st.markdown("Angles are scaled to x = θN/π so the mean spacing is 1 and the far density is 1.")

chosen = st.multiselect("Ensembles", ENSEMBLES, default=list(ENSEMBLES),
                        format_func=lambda e: ENSEMBLE_LABELS[e])
col1, col2, col3 = st.columns(3)
with col1:
    N = st.number_input("N", min_value=1, max_value=100, value=20, step=1)
with col2:
    bins = st.number_input("Bins", min_value=1, max_value=200, value=30, step=1)
with col3:
    x_max = st.number_input("Largest x", min_value=0.5, max_value=float(N), value=min(3.0, float(N)), step=0.5)

samples = int(st.session_state.get("samples", run_defaults["samples"]))
seed = int(st.session_state.get("seed", run_defaults["seed"]))

if not chosen:
    st.warning("Pick at least one ensemble.")
    st.stop()

try:
    with st.spinner(f"Sampling {samples:,} matrices per ensemble..."):
        histograms = {e: load_histogram(e, int(N), samples, int(bins), seed, float(x_max)) for e in chosen}
except LogDerivError as e:
    st.error(f"Could not sample: {e}")
    st.stop()

st.plotly_chart(create_density_chart(histograms), use_container_width=True)

col = st.columns(len(chosen))
for column, ensemble in zip(col, chosen):
    column.metric(f"{ENSEMBLE_LABELS[ensemble]} first bin", f"{histograms[ensemble]['density'].iloc[0]:.3f}")

combined = pd.concat([frame.assign(ensemble=e) for e, frame in histograms.items()], ignore_index=True)
st.download_button(
    label="📥 Download CSV",
    data=combined.to_csv(index=False),
    file_name=f"density_N{int(N)}.csv",
    mime="text/csv"
)
