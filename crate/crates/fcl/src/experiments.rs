//! Batch experiments.
