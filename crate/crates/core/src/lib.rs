pub mod cli;
pub mod ergodic;
pub mod error;
pub mod linalg;
pub mod lp;
pub mod restriction;
pub mod transport;
pub mod types;
pub mod verify;
