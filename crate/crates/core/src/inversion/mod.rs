//! Domestic to foreign maps: the dynamics of `1/S` under the foreign
//! measure expressed in the vocabulary of the model for `S`.

mod heston;
mod jumps;
mod local_vol;
mod sabr;

pub use heston::invert_heston;
pub use jumps::{invert_constant_jump, jump_compensation_residual, CompensationCheck, ConstantJumpSpec, Measure};
pub use local_vol::{
    check_local_vol_consistency, default_grid, make_log_polynomial, make_symmetric_laurent, LocalVolFamily,
    LocalVolFunction, LocalVolVerdict,
};
pub use sabr::{inverse_sabr, InverseSabrDynamics};
