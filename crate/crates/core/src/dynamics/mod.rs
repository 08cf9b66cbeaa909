//! Ring-model Hamiltonians, two-phase evolution and the case suite.

pub mod cases;
pub mod hamiltonians;
pub mod output;
pub mod runner;

pub use cases::{
    initial_state, ring_layout, CaseConfig, CaseId, CaseTerms, Couplings, InitialState, Preset,
    TermKind,
};
pub use hamiltonians::{
    build_central_hamiltonian, build_env_interaction, build_env_random, build_global_random,
    build_self_hamiltonian, build_self_random,
};
pub use runner::{
    extra_hamiltonian, run_case, run_plan, CaseRun, EvolutionPlan, TimePoint, REPORT_FRAMES,
};
