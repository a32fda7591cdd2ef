"""verbreg: measure English verb regularization in corpora.

Counts regular vs irregular past-tense verb tokens in streamed text and
n-gram frequency tables, resolves records to regions and U.S. counties, and
runs the downstream statistics: regularization tables, paired comparisons,
county hotspot analysis, demographic partial correlations, and a
sampling-bias simulation.
"""

__version__ = "0.1.0"

from .lexicon import (  # noqa: F401
    IRREGULAR,
    REGULAR,
    Lexicon,
    LexiconError,
    VerbEntry,
    classify_token,
    load_lexicon,
    save_lexicon,
    t_subset,
)
from .ingest import (  # noqa: F401
    FrequencySeries,
    LoadReport,
    PastTenseCounts,
    Record,
    count_sharded,
    count_stream,
    iter_jsonl_records,
    load_frequency_series,
    merge_scope_maps,
    ngram_counts,
    ngram_weights,
    smooth,
    tokenize,
)
from .geo import (  # noqa: F401
    County,
    Gazetteer,
    GazetteerEntry,
    Region,
    RegionSet,
    fuzzy_match,
    latlon_to_county,
    levenshtein,
    load_counties,
    load_gazetteer,
    load_regions,
    make_scoper,
    parse_city_state,
    point_in_region,
    resolve_scope,
    similarity,
)
from .stats import (  # noqa: F401
    DifferenceTable,
    FrequencyBin,
    PairedTestResult,
    RegularizationTable,
    bin_verbs,
    build_table,
    classify,
    comparison_report,
    difference_table,
    pearson,
    regularization_fraction,
    spearman,
    wilcoxon_signed_rank,
)
from .spatial import (  # noqa: F401
    CountyPanel,
    CountyRow,
    RegressionFit,
    WeightMatrix,
    county_pipeline,
    distance_matrix,
    fit_log_volume,
    gi_star,
    great_circle_miles,
    residualize,
    significance,
    significance_threshold,
    verb_pipeline,
    weight_matrix,
)
from .experiment import (  # noqa: F401
    DemographicVariable,
    RankedVariable,
    SyntheticCounty,
    TokenPool,
    build_pool,
    load_acs_csv,
    log_spaced_sizes,
    partial_correlation,
    rank_variables,
    residualize_demographic,
    sample_synthetic,
)
