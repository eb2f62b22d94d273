//! Report writing helpers.
