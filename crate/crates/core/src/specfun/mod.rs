//! Special functions: gamma family, modified Bessel, Meijer G.

pub mod bessel;
pub mod gamma;
pub mod meijer;
pub mod bivariate;
pub mod mellin;
