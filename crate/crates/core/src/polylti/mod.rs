//! Polynomials and discrete-time SISO transfer functions.

mod polynomial;
pub mod roots;
mod transfer;

pub use polynomial::Polynomial;
pub use roots::poly_roots;
pub use transfer::{
    is_unstable_root, DiscreteTransferFunction, ZeroClassification, SINGULAR_EPS,
    UNIT_CIRCLE_MARGIN,
};

use num_complex::Complex64;

pub fn poly_eval(p: &Polynomial, z: Complex64) -> Complex64 {
    p.eval(z)
}

pub fn classify_zeros(tf: &DiscreteTransferFunction) -> crate::Result<ZeroClassification> {
    tf.classify_zeros()
}
