#![allow(dead_code)]

pub mod mie;
pub mod transfer_matrix;
