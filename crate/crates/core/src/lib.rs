pub mod expr;
pub mod fracops;
pub mod gamma;
pub mod hypothesis;
pub mod mnc;
pub mod problem;
pub mod selftest;
pub mod solver;
