//! Planner for mixed discrete-continuous domains.
//!
//! The pipeline: parse and ground a domain/problem pair ([`pddl`]), compile
//! the ground instance into a program of Boolean rules plus numerical
//! constraints ([`encoding`]), enumerate bounded candidate plans ([`search`]),
//! solve the induced constraint networks ([`numeric`]), and validate each
//! timed plan against the continuous dynamics, expanding the encoding at
//! violation points until a plan survives ([`validate`], [`driver`]).

pub mod benchdomains;
pub mod driver;
pub mod encoding;
pub mod numeric;
pub mod pddl;
pub mod search;
pub mod validate;

pub use pddl::{ground, parse_domain, parse_problem, GroundInstance, PddlError};
