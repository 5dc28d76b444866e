//! Special functions, limit constants, the fixed-point operator and the mean
//! ODE.

mod constants;
mod gamma;
mod ode;
mod operator;

pub use constants::{
    beta_star, constants, limit_curve, try_constants, write_constants_json, Constants,
    IDENTITY_TOLERANCE,
};
pub use gamma::{gamma, log_gamma};
pub use ode::{solve_mean_ode, OdeSolution, ODE_ERROR_BUDGET};
pub use operator::{
    apply_g, kernel_g, kernel_mass, power_iteration, GOperator, GridFunction, PowerIteration,
    DEFAULT_NODES, LOGISTIC_HALF_WIDTH,
};
