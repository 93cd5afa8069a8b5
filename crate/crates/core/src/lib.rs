pub mod corpus;
pub mod experiment;
pub mod gateway;
pub mod metrics;
pub mod parser;
pub mod prompts;
pub mod reasoning;
