pub mod angular;
pub mod boundstates;
pub mod cli;
pub mod exec;
pub mod numerov;
pub mod ofr;
pub mod potentials;
pub mod scattering;
pub mod units;
