pub mod agent;
pub mod corpus;
pub mod lang;
pub mod metrics;
pub mod prompting;
pub mod s3;
pub mod stack;
pub mod xml;
