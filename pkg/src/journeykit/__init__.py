"""journeykit: extract, benchmark, and name user interest journeys.

A user's noisy interaction history is clustered online into coherent
"journeys" in a sparse salient-term space; two global-cluster baselines and
a golden-playlist benchmark measure how well each method pulls mixed
interests back apart, and a prompt-building layer names the results.
"""

from .baselines import (
    CoocMatrix,
    GlobalAssignment,
    build_cooccurrence,
    cooc_extract,
    default_eps_dist,
    factorize,
    kmeans,
    multimodal_extract,
)
from .concepts import (
    ConceptVector,
    InvalidVectorError,
    Item,
    UserHistory,
    aggregate,
    cosine,
    tfidf_extract,
    top_terms,
)
from .evaluation import (
    EvalReport,
    GoldenInstance,
    build_report,
    clusters_per_journey,
    granularity_stats,
    match_clusters,
    mix_playlists,
    precision,
    recall,
    riffle,
)
from .extraction import (
    ExtractionResult,
    ExtractorConfig,
    JourneyCluster,
    extract_journeys,
    item_journey_sim,
)
from .io import DataError, Playlist
from .naming import (
    BackendError,
    Exemplar,
    JourneyText,
    NamingModesReport,
    NamingRequest,
    NamingResult,
    OfflineBackend,
    PromptTemplate,
    RemoteBackend,
    bleu,
    build_prompt,
    compare_naming_modes,
    name_journey,
)
from .synth import SynthCorpus, SynthSpec, generate, save_corpus

__version__ = "0.1.0"
