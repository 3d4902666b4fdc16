//! Small numerical building blocks: bracketed root finding, adaptive
//! quadrature, and an adaptive Runge–Kutta integrator for complex systems.

pub mod ode;
pub mod quadrature;
pub mod roots;
