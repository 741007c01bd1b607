pub mod devices;
pub mod fixtures;
pub mod presets;
pub mod scenario;
pub mod sched_evhvac;
pub mod sched_mgbid;
pub mod thermal;
