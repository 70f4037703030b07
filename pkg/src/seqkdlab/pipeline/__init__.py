from .config import (
    ALL_ROWS,
    AR_ROWS,
    NAR_ROWS,
    DataConfig,
    ExperimentConfig,
    config_fingerprint,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
    with_overrides,
)
from .experiment import (
    TWO_REF_ABLATION,
    World,
    build_world,
    prepare_seed,
    row_recipes,
    run_analysis,
    run_experiment,
    split_indices,
    train_row,
)
from .artifacts import ArtifactSink
from .reporting import report_to_json, report_to_markdown, write_report
