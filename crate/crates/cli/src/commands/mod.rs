pub mod admin;
pub mod analyze;
pub mod groundtruth;
pub mod illusion;
pub mod qc;
