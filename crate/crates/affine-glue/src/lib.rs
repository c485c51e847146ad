//! Exact rational piecewise-linear curve complexes with re-glued curve
//! ends: a kernel for deciding when such a space carries an affine
//! topology and for constructing the explicit affine embedding, with a
//! verifiable homeomorphism certificate.

pub mod embedder;
pub mod fixtures;
pub mod germ;
pub mod io;
pub mod kernel;
pub mod mapping;
pub mod neighborhood;
pub mod oracle;
pub mod scalar;
pub mod space;
pub mod unbounded;
pub mod verifier;
