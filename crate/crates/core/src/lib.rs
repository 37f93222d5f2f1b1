pub mod bdiv;
pub mod cli;
pub mod convex;
pub mod error;
pub mod expr;
pub mod fan;
pub mod lattice;
pub mod linalg;
pub mod okounkov;
pub mod rational;
pub mod sections;
pub mod surface;
