//! Computational companion for summable ideals `I_x = {A : sum_{n in A} x_n < inf}`.
//!
//! * [`sequences`]: the positive sequences involved (the interleaved star
//!   sequence, its powers, Fubini interleavings) with certified tail bounds.
//! * [`index_sets`]: lazy enumerations of primes, shifted primes, root-primes,
//!   blocks and parity filters.
//! * [`summation`]: compensated subseries sums, prefix domination, growth
//!   evidence, and an MPFR-backed oracle mode ([`oracle`]).
//! * [`game`]: the Player-II strategy for the Banach-Mazur game on `c_0`,
//!   with containment and witness verification.
//! * [`isomorphism`]: greedy witnesses separating the ideals of `x^(r)` and
//!   `x^(s)` under a given bijection.
//! * [`cli`]: the `subseries` command line.

pub mod cli;
pub mod error;
pub mod game;
pub mod index_sets;
pub mod isomorphism;
pub mod oracle;
pub(crate) mod parse;
pub mod sequences;
pub mod sieve;
pub mod summation;

pub use error::{Error, Result};
pub use index_sets::{root_primes, IndexSetExpr};
pub use parse::parse_count;
pub use sequences::{fubini_interleave, power_transform, Patch, Rule, SequenceExpr};
pub use sieve::nth_prime;

/// Parity class of a positive integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: u64) -> Parity {
        if n % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn contains(self, n: u64) -> bool {
        Parity::of(n) == self
    }
}
