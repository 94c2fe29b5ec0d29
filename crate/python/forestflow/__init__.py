"""Random-forest path flows: train, aggregate, threshold and render."""

from ._forestflow import (
    FLOW_FORMAT_VERSION,
    TERMINUS,
    Dataset,
    FlowAggregate,
    Forest,
    aggregate_flows,
    flow_document,
    render_importance,
    render_sankey,
    train_forest,
    tune_mtry,
)

__all__ = [
    "FLOW_FORMAT_VERSION",
    "TERMINUS",
    "Dataset",
    "FlowAggregate",
    "Forest",
    "aggregate_flows",
    "flow_document",
    "render_importance",
    "render_sankey",
    "train_forest",
    "tune_mtry",
]
