from hypothesis import strategies as st

from src.qcorr.types import SpinKind

# Angles kept where cos/sin stay accurate to ~1e-14 absolute
angles = st.floats(min_value=-20.0, max_value=20.0, allow_nan=False, allow_infinity=False)
phases = st.floats(min_value=0.0, max_value=6.283185307179586, allow_nan=False)
species = st.sampled_from(list(SpinKind))
