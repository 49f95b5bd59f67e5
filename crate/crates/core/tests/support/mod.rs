#![allow(dead_code)]

pub mod crossbar_oracle;
pub mod gradcheck;
