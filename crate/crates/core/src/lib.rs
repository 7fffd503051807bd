#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod attack;
pub mod autoencoder;
pub mod channel;
pub mod linalg;
pub mod neural;
