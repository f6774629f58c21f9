//! Hamiltonians, propagators and time evolution of states and tomograms.

mod closed_form;
mod constants;
mod hamiltonian;
mod materials;
mod propagate;

pub use closed_form::{propagator_closed_form, ClosedFormVariant};
pub use constants::{mhz_to_rad_per_ns, PhysicalConstants};
pub use hamiltonian::{build_hamiltonian, Abbreviations, HamiltonianFamily, HamiltonianSpec};
pub use materials::{Material, PRESET_PATH_ENV};
pub use propagate::{
    analytic_free_mu, analytic_free_mu_entanglement, analytic_free_mu_max_bell, analytic_free_mu_reduced,
    evolve_density, evolve_tomogram, propagator_numeric, EvolutionPath, PreparedPropagator, PropagationMethod,
    PropagatorSpec, TomogramSeries,
};
