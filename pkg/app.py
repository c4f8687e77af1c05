import os
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pandas as pd
import streamlit as st

from src.exception import CodeParseError, HamSearchError
from src.components.index_store import load_index
from src.components.search_index import SearchMode, query_response

st.set_page_config(
    page_title="Hamming Search Console",
    page_icon="🔎",
    layout="centered",
)


@st.cache_resource
def load_search_index(path: str):
    return load_index(path)


st.title("Hamming Search")
st.subheader("Two-stage search over 256-bit hash codes")
st.caption("Coarse filter on 16-bit subcodes, exact re-ranking on the full code.")

index_path = st.text_input("Index file", value=os.getenv("HAMSEARCH_INDEX_PATH", "artifacts/index.bin"))

try:
    index = load_search_index(index_path)
except FileNotFoundError:
    st.error(f"No index file at {index_path}. Build one with `python -m src.cli build`.")
    st.stop()
except HamSearchError as e:
    st.error(f"Could not load the index: {e}")
    st.stop()

stats = index.stats()
col_docs, col_d, col_nbs = st.columns(3)
col_docs.metric("Documents", f"{stats['documents']:,}")
col_d.metric("Radius d", stats["radius"])
col_nbs.metric("Neighbors / subcode", stats["neighbors_per_subcode"])

st.divider()

code = st.text_input("Query code (64 hex chars, or 16 for short mode)")

modes = [m.value for m in SearchMode if stats["modes"][m.value]]
col1, col2 = st.columns(2)
with col1:
    mode = st.selectbox("Mode", modes, index=modes.index(stats["default_mode"]) if stats["default_mode"] in modes else 0)
with col2:
    k = st.number_input("Top k", min_value=1, max_value=10_000, value=10)

if st.button("Search", use_container_width=True, type="primary"):
    try:
        with st.spinner("Searching..."):
            payload = query_response(index, code.strip(), int(k), mode)
    except CodeParseError as e:
        st.error(f"Malformed code: {e}")
    except HamSearchError as e:
        st.error(str(e))
    else:
        results = pd.DataFrame(payload["results"], columns=["id", "distance", "score"])
        results.index = pd.RangeIndex(1, len(results) + 1, name="rank")
        labels = index.labels_for(results["id"].tolist()) if len(results) else []
        if any(labels):
            results["labels"] = [", ".join(sorted(l)) for l in labels]
        st.success(f"{len(results)} results ({payload['mode']}, k={payload['k']})")
        st.dataframe(results, use_container_width=True)
