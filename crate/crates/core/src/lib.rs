pub mod cli;
pub mod formula;
pub mod oracles;
pub mod reductions;
pub mod semantics;
pub mod solver;
pub mod ties;
