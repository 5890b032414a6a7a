//! Coverage planning with intelligent reflecting surfaces and movable antennas.
//!
//! The crate chooses which candidate IRS sites to build, where to put the
//! base-station antennas on a discrete grid, and how to set every IRS phase
//! shift, so that each target area is covered at a guaranteed SNR for the
//! least hardware cost. Modules follow the processing chain:
//!
//! * [`scenario`] builds geometry and the cost model,
//! * [`channel`] synthesizes line-of-sight channels and gain coefficients,
//! * [`conic`] solves the LP / SOCP subproblems,
//! * [`feasibility`], [`costmin`] and [`pruning`] are the three optimization stages,
//! * [`baselines`] holds the comparison schemes and the budget-constrained variant,
//! * [`audit`] re-checks any plan from raw binaries and phases.

pub mod audit;
pub mod baselines;
pub mod channel;
pub mod config;
pub mod conic;
pub mod costmin;
mod error;
pub mod feasibility;
pub mod fixtures;
pub mod geometry;
pub(crate) mod phase;
pub mod plan;
pub mod pruning;
pub mod sca;
pub mod scenario;

pub use baselines::{all_irs, budget_snr_max, fpa_irs, per_area_union, Scheme, SchemeResult, SchemeRunner};
pub use audit::{audit_solution, AuditReport};
pub use channel::ChannelSet;
pub use costmin::{run_costmin, run_costmin_with, CostminVariant};
pub use config::{PenaltySchedule, SolverConfig};
pub use error::{Error, Result};
pub use feasibility::{run_feasibility, FeasibilityReport};
pub use pruning::{run_pruning, run_pruning_with};
pub use plan::{CostBreakdown, Plan, RunStatus};
pub use scenario::{
    CostModel, DeploymentSolution, IrsSite, MaGrid, Orientation, RadioConstants, Scenario,
    TargetArea,
};

pub use num_complex::Complex64;
