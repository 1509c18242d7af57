pub mod board;
pub mod data;
pub mod features;
pub mod interface;
pub mod network;
pub mod search;
