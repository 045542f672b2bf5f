//! Hardware Trojan detection and mitigation for LUT-mapped FPGA netlists.

pub mod logic;
pub mod netlist;
pub mod sim;
pub mod analysis;
pub mod properties;
pub mod prove;
pub mod reconfig;
pub mod benchgen;
pub mod pipeline;
pub mod report;
