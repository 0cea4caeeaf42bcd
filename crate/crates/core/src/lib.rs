pub mod cli;
pub mod emit;
pub mod far;
pub mod gen;
pub mod lang;
pub mod oracle;
pub mod passive;
pub mod pipeline;
pub mod refine;
pub mod sp;
pub mod spec;
