from urbanlab.ideation.refine import (
    DEFAULT_PANEL,
    PanelConfig,
    Persona,
    RefinementConfig,
    RefinementStep,
    RefinementTrace,
    refine_loop,
    run_panel,
    synthesize_revision,
)
from urbanlab.ideation.transforms import (
    REPROMPT_BUDGET,
    generate_meta,
    recombine,
    transfer_context,
    transform_mechanism,
)

__all__ = [
    "DEFAULT_PANEL",
    "PanelConfig",
    "Persona",
    "REPROMPT_BUDGET",
    "RefinementConfig",
    "RefinementStep",
    "RefinementTrace",
    "generate_meta",
    "recombine",
    "refine_loop",
    "run_panel",
    "synthesize_revision",
    "transfer_context",
    "transform_mechanism",
]
