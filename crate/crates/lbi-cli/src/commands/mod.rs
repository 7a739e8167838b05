pub mod detect;
pub mod experiment;
pub mod gen_profile;
pub mod simulate;
pub mod sweep;
