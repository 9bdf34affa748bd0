from .design import (
    CovariateSpec,
    DataAccumulation,
    DecisionRule,
    OutcomeSpec,
    StagePlan,
    TrialDesign,
    load_trial_spec,
    load_trial_spec_file,
)
from .generate import generate_cohort, merge_datasets, write_dataset_csv, read_dataset_csv
from .simulate import (
    FAILURE_THRESHOLD_DEFAULT,
    InterimDecision,
    InterimOutcome,
    OperatingCharacteristics,
    ReplicateRecord,
    TrialOutcome,
    build_stage2_dataset,
    evaluate_final,
    evaluate_interim,
    replicate_seed,
    run_oc_simulation,
    run_single_trial,
)

__all__ = [
    "CovariateSpec",
    "OutcomeSpec",
    "StagePlan",
    "DecisionRule",
    "TrialDesign",
    "DataAccumulation",
    "load_trial_spec",
    "load_trial_spec_file",
    "generate_cohort",
    "merge_datasets",
    "write_dataset_csv",
    "read_dataset_csv",
    "InterimDecision",
    "InterimOutcome",
    "TrialOutcome",
    "ReplicateRecord",
    "OperatingCharacteristics",
    "evaluate_interim",
    "evaluate_final",
    "build_stage2_dataset",
    "run_single_trial",
    "run_oc_simulation",
    "replicate_seed",
    "FAILURE_THRESHOLD_DEFAULT",
]
