pub mod cli;
pub mod frameworks;
pub mod graph;
pub mod ik;
pub mod kinematics;
pub mod search;
pub mod trajectory;
