pub mod error;
pub mod inversion;
pub mod laws;
pub mod levy_model;
pub mod quadrature;
pub mod risk;
pub mod roots;
pub mod scale;
pub mod sim;
pub mod validation;
