pub mod corpus_ops;
pub mod evaluate;
pub mod predict;
pub mod report;
pub mod train;
