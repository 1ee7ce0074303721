//! Numerics for Ruelle transfer operators on subshifts of finite type and
//! KMS states on the associated Cuntz-Krieger algebras.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ck_algebra;
pub mod cli;
pub mod potential;
pub mod shift_space;
pub mod thermo;
pub mod transfer_op;
