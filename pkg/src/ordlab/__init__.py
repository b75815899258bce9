"""ordlab: finite-scale checks for pair-colourings of ordinals below w^w."""

__version__ = "0.1.0"

from .ordinals import (  # noqa: F401
    CnfOrdinal,
    OrdinalParseError,
    Truncation,
    add,
    cb_rank,
    coefficient,
    compare,
    enumerate_universe,
    format_ordinal,
    omega_power,
    parse_ordinal,
)
from .tree import (  # noqa: F401
    ClosedGridWitness,
    children,
    is_tree_copy,
    parent,
    subtree_rank,
    tree_le,
    validate_witness,
)
from .colourings import (  # noqa: F401
    Colouring,
    EdgeFamily,
    builtin_colouring,
    colour,
    edge_family,
    restrict,
)
from .adjacency import AdjacencyBitmap, adjacency, build_adjacency  # noqa: F401
from .canonical import (  # noqa: F401
    CanonicalTables,
    LargenessSpec,
    audit_canonical,
    extract_tables,
    harass_check,
    harassment_refine,
    is_large,
    oppress_check,
    scarcity_check,
    synthesize_canonical,
)
from .verify import (  # noqa: F401
    check_lowerbound_steps,
    dominating_vertex,
    extract_upper,
    find_triangles,
    independent_subset,
    search_closed_witness,
    search_independent_grid,
)
