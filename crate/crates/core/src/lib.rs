//! Laboratory for accelerated first-order methods viewed through Bregman
//! geometry: eleven momentum-style steppers with exact state transports
//! between them, the matching continuous-time flows, and spectral decay
//! certificates for quadratic objectives.

pub mod bregman;
pub mod discrete;
pub mod error;
pub mod linalg;
pub mod objectives;
pub mod ode;
pub mod spectral;

pub use error::{Error, Result};
pub use objectives::{make_quadratic, make_quartic, strong_convexity_bounds, Objective, ObjectiveSpec};
