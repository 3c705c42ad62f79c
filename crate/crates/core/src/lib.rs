pub mod error;
pub mod grid;
pub mod pulse;
pub mod schedule;
pub mod solver;
pub mod oracle;
pub mod analysis;
pub mod scenario;
