use alloc::string::String;

use thiserror::Error;

use crate::mobility::{RsuId, VehicleId};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MobilityError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid vehicle state: {0}")]
    InvalidState(String),
    #[error("duplicate vehicle id {0}")]
    DuplicateVehicle(VehicleId),
    #[error("duplicate RSU id {0}")]
    DuplicateRsu(RsuId),
    #[error("placement error: {0}")]
    Placement(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown node {0}")]
    UnknownNode(String),
}

/// A strategy entry that breaks one of the topology constraints.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstraintViolation {
    #[error("link references unknown vehicle {0}")]
    UnknownVehicle(VehicleId),
    #[error("link references unknown RSU {0}")]
    UnknownRsu(RsuId),
    #[error("v2v link {a}-{b} spans {distance:.1} m, beyond range {range} m")]
    V2vRange { a: VehicleId, b: VehicleId, distance: f64, range: f64 },
    #[error("v2i link {vehicle}-{rsu} spans {distance:.1} m, beyond range {range} m")]
    V2iRange { vehicle: VehicleId, rsu: RsuId, distance: f64, range: f64 },
    #[error("vehicle {vehicle} has {degree} active v2v links, cap {cap}")]
    V2vDegree { vehicle: VehicleId, degree: usize, cap: usize },
    #[error("RSU {rsu} has {degree} active v2i links, cap {cap}")]
    V2iDegree { rsu: RsuId, degree: usize, cap: usize },
    #[error("v2i link {vehicle}-{rsu} has non-positive bandwidth {bandwidth}")]
    NonPositiveBandwidth { vehicle: VehicleId, rsu: RsuId, bandwidth: f64 },
    #[error("RSU {rsu} allocates {allocated} Mbps, capacity {capacity} Mbps")]
    Bandwidth { rsu: RsuId, allocated: f64, capacity: f64 },
}

/// Which constraint family a violation belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConstraintKind {
    Malformed,
    V2vRange,
    V2iRange,
    V2vDegree,
    V2iDegree,
    Bandwidth,
}

impl ConstraintKind {
    pub fn label(self) -> &'static str {
        match self {
            ConstraintKind::Malformed => "malformed",
            ConstraintKind::V2vRange => "v2v-range",
            ConstraintKind::V2iRange => "v2i-range",
            ConstraintKind::V2vDegree => "v2v-degree",
            ConstraintKind::V2iDegree => "v2i-degree",
            ConstraintKind::Bandwidth => "bandwidth",
        }
    }
}

impl ConstraintViolation {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            ConstraintViolation::UnknownVehicle(_)
            | ConstraintViolation::UnknownRsu(_) => ConstraintKind::Malformed,
            ConstraintViolation::V2vRange { .. } => ConstraintKind::V2vRange,
            ConstraintViolation::V2iRange { .. } => ConstraintKind::V2iRange,
            ConstraintViolation::V2vDegree { .. } => ConstraintKind::V2vDegree,
            ConstraintViolation::V2iDegree { .. } => ConstraintKind::V2iDegree,
            ConstraintViolation::NonPositiveBandwidth { .. } | ConstraintViolation::Bandwidth { .. } => {
                ConstraintKind::Bandwidth
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("path is empty")]
    EmptyPath,
    #[error("path uses inactive edge {0}-{1}")]
    InactiveEdge(usize, usize),
    #[error("path node {0} out of range")]
    UnknownNode(usize),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FusionError {
    #[error("demand matrix is {got}x{got}, expected {expected}x{expected}")]
    Shape { expected: usize, got: usize },
    #[error("neighbourhood list has {got} entries for {expected} nodes")]
    Neighborhoods { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CheckpointError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing field {0}")]
    MissingField(&'static str),
    #[error("field {field}: {message}")]
    Invalid { field: &'static str, message: String },
}
