//! Model-free control toolkit: intelligent controllers on an ultra-local
//! model, a closed-loop simulator, Routh-Hurwitz analysis and stability maps
//! of the filtered iP loop.

pub mod cli;
pub mod mfc;
pub mod poly;
pub mod sim;
pub mod stabmap;
