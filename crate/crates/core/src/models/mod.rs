//! The three candidate learners and their shared preparation step.

pub mod artifact;
pub mod linear;
pub mod neural;
pub mod prepare;
pub mod tree;
