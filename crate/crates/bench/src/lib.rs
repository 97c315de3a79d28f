//! Fixtures shared by the benchmarks.

use regclass_core::synthetic;
use regclass_core::DefectDataset;

/// Single-signal dataset used by the learner and harness benchmarks.
pub fn fixture(n: usize, seed: u64) -> DefectDataset {
    synthetic::single_signal(n, 5, seed)
}
