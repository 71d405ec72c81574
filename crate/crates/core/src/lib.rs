//! Generic skew-symmetric matrix pencils and odd-grade matrix polynomials of
//! bounded rank: canonical forms, orbit-closure certificates, closed-form
//! generic structures, the skew linearization template, numerical structure
//! recovery and Monte-Carlo genericity experiments.

pub mod canon;
pub mod closure;
pub mod generic;
pub mod io;
pub mod linearize;
pub mod numeric;
pub mod sampling;
pub mod verify;
