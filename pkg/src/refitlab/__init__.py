"""refitlab: interactive word-embedding refinement.

Load a word2vec-format model, answer vector-arithmetic similarity queries, and
apply human-driven refitting (targeted or round-robin) to the live model with
full action logging, undo, and persistence.
"""

from .errors import (
    DimensionMismatchError,
    EmptyLogError,
    FormatError,
    InvalidQueryError,
    InvalidRequestError,
    LineageMismatchError,
    RefitlabError,
    UnknownTokenError,
    WriterBusyError,
    ZeroDenominatorError,
    ZeroVectorError,
)
from .model import (
    EmbeddingModel,
    Vocabulary,
    display_token,
    load_word2vec_binary,
    load_word2vec_text,
    normalize_token,
    save_model,
    save_model_file,
)
from .queries import (
    CosineMatrix,
    Projection,
    Query,
    RankedResults,
    cosine,
    distance_matrix,
    neighbor_graph,
    project_2d,
    query_vector,
    search,
)
from .refitting import (
    ActionEntry,
    ActionLog,
    RefitGraph,
    RefitParams,
    RefitReport,
    RefitRequest,
    build_refit_graph,
    objective,
    refit,
    refit_step,
    replay,
    undo,
)
from .service import ServiceConfig, ServiceState, build_state, create_app

__version__ = "0.1.0"
