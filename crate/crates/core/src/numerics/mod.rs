//! Quadrature, special functions and small optimizers used by the models.

pub mod optimize;
pub mod quad;
pub mod special;
