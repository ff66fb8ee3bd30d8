//! Command-line and HTTP front ends over one on-disk project.

pub mod api;
pub mod cli;
pub mod project;
pub mod render;
