use serde::{Deserialize, Serialize};

/// Gate tallies for one circuit execution.
///
/// `toffoli` is the sampled count: it includes deferred phase fixups only on
/// the runs where a measurement asked for them. `expected_toffoli` charges
/// every deferred fixup at weight one half whether or not it ran, so a single
/// execution reports the expectation over measurement outcomes. Without
/// deferred fixups the two agree exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateStats {
    pub toffoli: u64,
    pub cnot: u64,
    pub cz: u64,
    pub single_qubit: u64,
    pub x_measurements: u64,
    pub fixups_applied: u64,
    pub ancilla_high_water: usize,
    /// Twice the expected Toffoli count, kept as an integer so half weights stay exact.
    pub expected_toffoli_halves: u64,
}

impl GateStats {
    pub fn expected_toffoli(&self) -> f64 {
        self.expected_toffoli_halves as f64 / 2.0
    }
}
