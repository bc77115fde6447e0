pub mod batch;
pub mod corpus;
pub mod dyninterp;
pub mod flatten;
pub mod specializer;
pub mod staging;
pub mod staticeval;
pub mod syntax;
