use thiserror::Error;

/// Errors raised by state operations, optical elements and pipelines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("malformed element: {0}")]
    MalformedElement(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("dimension mismatch: {what} ({left} vs {right})")]
    Dimension {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("measurement on an empty state")]
    MeasurementOnVacuum,

    #[error("probe register still entangled with photons ({distinct} distinct probe tuples)")]
    ProbeStillEntangled { distinct: usize },

    #[error("routing error: {0}")]
    Routing(String),

    #[error("party {party} measured before its QND interaction")]
    MeasureBeforeQnd { party: usize },

    #[error("party {party}: frequency already up-converted")]
    AlreadyUpconverted { party: usize },

    #[error("improper frequency erasure: norm became {norm}")]
    ImproperErasure { norm: f64 },

    #[error("incomplete measurement: party {party} has no phase readout")]
    IncompleteMeasurement { party: usize },

    #[error("circuit description: {0}")]
    Circuit(String),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
