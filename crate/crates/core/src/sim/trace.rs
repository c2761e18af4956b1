use std::fmt;

use super::Qubit;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    X,
    Z,
    Cnot,
    Cz,
    Toffoli,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::X => "X",
            GateKind::Z => "Z",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Toffoli => "TOFFOLI",
        }
    }
}

/// One line of a gate log.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Gate {
        kind: GateKind,
        qubits: Vec<Qubit>,
        /// Set for gates that only ran because of a measurement outcome.
        conditional: bool,
    },
    XMeasure {
        qubit: Qubit,
        outcome: bool,
    },
}

impl TraceEvent {
    pub fn is_conditional(&self) -> bool {
        matches!(
            self,
            TraceEvent::Gate {
                conditional: true,
                ..
            }
        )
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceEvent::Gate { kind, qubits, .. } => {
                write!(f, "GATE {}", kind.name())?;
                for q in qubits {
                    write!(f, " {q}")?;
                }
                Ok(())
            }
            TraceEvent::XMeasure { qubit, outcome } => {
                write!(f, "XMEAS {qubit} -> {}", u8::from(*outcome))
            }
        }
    }
}
