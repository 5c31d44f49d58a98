pub mod build_code;
pub mod capacity;
pub mod feedback_sim;
pub mod presets;
pub mod show;
pub mod verify;
