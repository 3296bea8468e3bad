pub mod exponents;
pub mod gap_scan;
pub mod ion;
pub mod locate;
pub mod phase_diagram;
pub mod quench_collapse;
