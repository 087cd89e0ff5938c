//! Spatial harvesting models on uniform grids.
//!
//! The steady logistic-diffusive population `-μΔθ = θ(K - α - θ)` with
//! Neumann boundaries, optimal single-player fishing strategies under a
//! pointwise cap and a volume budget, best-response Nash equilibria between
//! several fishers, the large-diffusivity asymptotic functionals, and the
//! time-dependent mean field harvesting game.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`). The aliases below fix `f64`, which every default
//! tolerance is tuned for.

pub mod elliptic;
pub mod error;
pub mod game;
pub mod grid;
pub mod harvest;
pub mod linalg;
pub mod mfhg;
pub mod scalar;

pub use elliptic::{
    principal_eigenvalue, solve_linear_reaction, solve_steady, solve_zero_mean_poisson,
    EigenOptions, LogisticProblem, SolveReport, SteadyOptions,
};
pub use error::{Error, Result};
pub use game::{
    best_response, eps_nash_check, joint_state, nash_fixed_point, potential_condition_gap,
    potential_game_counterexample, price_of_anarchy, regulation_sweep, write_sweep_csv, GameOptions,
    GameSpec, NashReport, SweepRow,
};
pub use harvest::{
    adjoint_state, evaluate, fishing_output, gateaux_gradient, gateaux_second, j0_argmax, j0_eval,
    j1_eval, j1_gradient, optimize_from, optimize_single, project, project_with_shift,
    ConstraintMode, LocalOptimum, OptimizeOptions, OptimizeReport, StartKind, StrategyConstraints,
};
pub use grid::{sum_fields, write_csv_columns, Axis, Field, Grid, VectorField};
pub use linalg::LinearOptions;
pub use mfhg::{
    agent_payoff, fish_forward, fp_forward, front_speed, hjb_backward, mfhg_solve,
    optimal_feedback, Agents, FrontOptions, FrontSample, FrontSeries, MfhgSpec, MfhgState,
    Reaction, TimeSeries,
};
pub use scalar::Real;

pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type Grid32 = Grid<f32>;
pub type Field32 = Field<f32>;
