pub mod oracles;
pub mod scenarios;
