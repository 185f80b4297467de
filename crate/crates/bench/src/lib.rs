//! Shared fixtures for the benchmarks.

use edumine::dataio::{partition, Dataset, Partition};
use edumine::synth::{generate, SynthSpec};

pub const TARGET: &str = "aggregate";

/// A scored synthetic cohort of `n` students.
pub fn cohort(n: usize, seed: u64) -> Dataset {
    let spec = SynthSpec {
        n_students: n,
        seed,
        ..SynthSpec::default()
    };
    generate(&spec)
        .and_then(|out| out.scored_students())
        .expect("default synth spec is valid")
}

/// The cohort split 80/20 into training and validation rows.
pub fn split(n: usize, seed: u64) -> Partition {
    partition(&cohort(n, seed), 0.8, seed).expect("cohort has at least two rows")
}
