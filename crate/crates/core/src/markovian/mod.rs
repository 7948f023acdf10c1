//! Markovian couplings of the classical (index 1) diffusion.

pub mod area;
pub mod bck;
pub mod mu_t;

pub use area::{area_density, area_tail, area_tail_by_quadrature, first_half_cycle_tail, AreaLaw};
pub use bck::{
    sample_first_half_cycle, simulate_bck, simulate_bck_traced, simulate_general_start,
    CouplingOutcome, DifferenceState, HalfCycleEnd, HalfCycleRecord, Phase,
};
pub use mu_t::{simulate_mu_t, MuTOutcome};
