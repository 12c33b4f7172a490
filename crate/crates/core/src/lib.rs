//! Hard LTLf task generation, formula automata, and compositional recurrent policies
//! trained with advantage actor-critic.

pub mod automaton;
pub mod compnet;
pub mod domain;
pub mod envs;
pub mod gen;
pub mod ltl;
pub mod meta;
pub mod trainer;

pub use domain::Domain;

use num_traits::{Float, FromPrimitive};

/// Floating-point element type of networks and training.
pub trait Scalar: Float + FromPrimitive + Default + Send + Sync + std::fmt::Debug + std::fmt::Display + 'static {
    /// Width tag written to checkpoints (bytes per value).
    const BYTES: u8;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("representable")
    }

    fn write_le(self, out: &mut Vec<u8>);

    /// Reads `Self::BYTES` little-endian bytes.
    fn read_le(bytes: &[u8]) -> Self;
}

impl Scalar for f32 {
    const BYTES: u8 = 4;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_bits(u32::from_le_bytes(bytes.try_into().expect("4 bytes")))
    }
}

impl Scalar for f64 {
    const BYTES: u8 = 8;

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_bits().to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f64::from_bits(u64::from_le_bytes(bytes.try_into().expect("8 bytes")))
    }
}

/// Scalar used for training and evaluation.
pub type Real = f32;
pub type Network = compnet::Model<Real>;
