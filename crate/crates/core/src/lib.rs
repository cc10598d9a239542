pub mod cli;
pub mod expr;
pub mod forms;
pub mod model;
pub mod numerics;
pub mod reconstruct;
pub mod routh;
pub mod symmetry;
