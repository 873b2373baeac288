pub mod criteria;
pub mod output;
