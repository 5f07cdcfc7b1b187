pub mod cli;
pub mod cone_atlas;
pub mod cone_engine;
pub mod emin_lab;
pub mod exact;
pub mod lattice_forms;
pub mod nef_certify;
pub mod wall_calculus;
