pub mod config;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod folds;
pub mod pipeline;
pub mod recommend;
pub mod regress;
pub mod report;
pub mod text;
