//! Shared numerical machinery: adaptive quadrature, polynomial root
//! finding and Laplace transform inversion.

pub mod laplace;
pub mod quad;
pub mod roots;
