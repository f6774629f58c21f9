//! Bridge between muon spin rotation histograms and spin tomograms.
//!
//! A decaying μ⁺ emits its positron with angular density `Γ(n) = 1 + a P·n`.
//! Counting positrons in opposite detectors therefore measures the muon's
//! reduced tomogram along the detector axis.

mod estimate;
mod model;
mod simulate;

pub use estimate::{estimate_tomogram, AxisEstimate, BinEstimate, EstimationOptions, TomogramEstimate, DEFAULT_COUNT_FLOOR};
pub use model::{
    bloch_vector, gamma_distribution, histogram_to_tomogram, DecayModel, Detector, DetectorGeometry, EvolvedPolarization,
    MuonPolarization, Precessing, Species, StaticPolarization, AVERAGE_ASYMMETRY, MUON_LIFETIME_NS, PROBABILITY_SLACK,
};
pub use simulate::{
    expected_histogram, simulate_events, true_reduced_tomogram, uniform_edges, HistogramMetadata, HistogramSeries,
    SimulationConfig, CHUNK_SIZE, DEFAULT_BACKGROUND,
};
