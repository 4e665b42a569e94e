pub mod equal_means;
pub mod sphere;
pub mod logspline;
pub mod ar1;
