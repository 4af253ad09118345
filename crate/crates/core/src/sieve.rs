//! Segmented sieve of Eratosthenes with a process-wide, grow-on-demand cache.
//!
//! The cache only ever grows, one segment run at a time under a write lock;
//! everything else reads. The budget caps how far it may grow and defaults to
//! `2 * 10^7`, enough for `p_n` with `n <= 10^6` (`p_{10^6} = 15_485_863`).

use std::sync::{OnceLock, RwLock};

use crate::error::{Error, Result};

pub const DEFAULT_LIMIT: u64 = 20_000_000;

/// Environment variable overriding the global sieve budget.
pub const LIMIT_ENV: &str = "SUBSERIES_SIEVE_LIMIT";

const SEGMENT: u64 = 1 << 18;
const BOOTSTRAP: u64 = 1 << 16;

#[derive(Debug)]
struct State {
    primes: Vec<u64>,
    /// Every prime `< sieved_to` is in `primes`.
    sieved_to: u64,
}

#[derive(Debug)]
pub struct PrimeSieve {
    limit: u64,
    state: RwLock<State>,
}

impl PrimeSieve {
    pub fn new(limit: u64) -> Self {
        PrimeSieve {
            limit,
            state: RwLock::new(State {
                primes: Vec::new(),
                sieved_to: 0,
            }),
        }
    }

    /// Shared instance; its budget is read once from [`LIMIT_ENV`].
    pub fn global() -> &'static PrimeSieve {
        static GLOBAL: OnceLock<PrimeSieve> = OnceLock::new();
        GLOBAL.get_or_init(|| {
            let limit = std::env::var(LIMIT_ENV)
                .ok()
                .and_then(|v| crate::parse::parse_count(&v).ok())
                .unwrap_or(DEFAULT_LIMIT);
            PrimeSieve::new(limit)
        })
    }

    /// Largest value this sieve is allowed to examine.
    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Make sure every prime `<= bound` is cached.
    pub fn ensure(&self, bound: u64) -> Result<()> {
        if bound > self.limit {
            return Err(Error::Capacity {
                needed: bound,
                limit: self.limit,
            });
        }
        if self.read().sieved_to > bound {
            return Ok(());
        }
        let mut state = self.state.write().expect("sieve lock poisoned");
        if state.sieved_to > bound {
            return Ok(());
        }
        let target = (bound + 1)
            .max(state.sieved_to.saturating_mul(2))
            .min(self.limit + 1);
        extend(&mut state, target);
        Ok(())
    }

    /// The `n`-th prime, 1-based.
    pub fn nth(&self, n: u64) -> Result<u64> {
        if n == 0 {
            return Err(Error::invalid("prime index must be >= 1"));
        }
        let idx = usize::try_from(n - 1).map_err(|_| Error::IndexOverflow("indexing primes"))?;
        match self.prime_at(idx, u64::MAX)? {
            Some(p) => Ok(p),
            None => unreachable!("unbounded prime lookup returned no value"),
        }
    }

    /// Prime number `idx` (0-based) if it is `<= value_limit`; `None` once the
    /// primes pass `value_limit`. Errors only when the budget runs out first.
    pub fn prime_at(&self, idx: usize, value_limit: u64) -> Result<Option<u64>> {
        loop {
            let sieved_to = {
                let state = self.read();
                if let Some(&p) = state.primes.get(idx) {
                    return Ok((p <= value_limit).then_some(p));
                }
                state.sieved_to
            };
            if sieved_to > value_limit {
                return Ok(None);
            }
            if sieved_to > self.limit {
                return Err(Error::Capacity {
                    needed: value_limit.min(self.limit.saturating_mul(2)),
                    limit: self.limit,
                });
            }
            let next = sieved_to
                .saturating_mul(2)
                .max(BOOTSTRAP)
                .min(value_limit)
                .min(self.limit);
            self.ensure(next)?;
        }
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        if n < 2 {
            return Ok(false);
        }
        self.ensure(n)?;
        Ok(self.read().primes.binary_search(&n).is_ok())
    }

    /// Number of cached primes.
    pub fn cached(&self) -> usize {
        self.read().primes.len()
    }

    fn read(&self) -> std::sync::RwLockReadGuard<'_, State> {
        self.state.read().expect("sieve lock poisoned")
    }
}

fn extend(state: &mut State, target: u64) {
    if state.sieved_to == 0 {
        let end = BOOTSTRAP.min(target).max(2);
        state.primes = small_sieve(end);
        state.sieved_to = end;
    }
    while state.sieved_to < target {
        let lo = state.sieved_to;
        let hi = (lo + SEGMENT).min(target);
        let found = sieve_segment(&state.primes, lo, hi);
        state.primes.extend(found);
        state.sieved_to = hi;
    }
}

/// Plain Eratosthenes over `[0, end)`.
fn small_sieve(end: u64) -> Vec<u64> {
    let end = end as usize;
    let mut composite = vec![false; end];
    let mut primes = Vec::new();
    for n in 2..end {
        if composite[n] {
            continue;
        }
        primes.push(n as u64);
        let mut m = n * n;
        while m < end {
            composite[m] = true;
            m += n;
        }
    }
    primes
}

/// Primes in `[lo, hi)`, given every prime `<= sqrt(hi)` in `base`.
fn sieve_segment(base: &[u64], lo: u64, hi: u64) -> Vec<u64> {
    let mut composite = vec![false; (hi - lo) as usize];
    for &p in base {
        if p * p >= hi {
            break;
        }
        let mut m = (p * p).max(lo.div_ceil(p) * p);
        while m < hi {
            composite[(m - lo) as usize] = true;
            m += p;
        }
    }
    composite
        .iter()
        .enumerate()
        .filter(|&(i, &c)| !c && lo + i as u64 >= 2)
        .map(|(i, _)| lo + i as u64)
        .collect()
}

/// The `n`-th prime from the global sieve.
pub fn nth_prime(n: u64) -> Result<u64> {
    PrimeSieve::global().nth(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division(n: u64) -> bool {
        n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
    }

    #[test]
    fn small_primes() {
        let sieve = PrimeSieve::new(1000);
        assert_eq!(sieve.nth(1).unwrap(), 2);
        assert_eq!(sieve.nth(4).unwrap(), 7);
        assert_eq!(sieve.nth(25).unwrap(), 97);
    }

    #[test]
    fn segments_agree_with_trial_division() {
        let sieve = PrimeSieve::new(3 * SEGMENT + 17);
        sieve.ensure(3 * SEGMENT + 17).unwrap();
        for n in (0..3 * SEGMENT + 17).step_by(7) {
            assert_eq!(sieve.is_prime(n).unwrap(), trial_division(n), "n = {n}");
        }
    }

    #[test]
    fn hundred_thousandth_prime() {
        // independent check: 1299709 is prime and there are 10^5 primes up to it
        assert!(trial_division(1_299_709));
        assert_eq!(nth_prime(100_000).unwrap(), 1_299_709);
    }

    #[test]
    fn capacity_error() {
        let sieve = PrimeSieve::new(100);
        assert_eq!(sieve.nth(25).unwrap(), 97);
        assert!(matches!(sieve.nth(26), Err(Error::Capacity { .. })));
        assert!(matches!(sieve.is_prime(101), Err(Error::Capacity { .. })));
        assert_eq!(sieve.prime_at(25, 100).unwrap(), None);
    }

    #[test]
    fn zero_index_rejected() {
        assert!(PrimeSieve::new(100).nth(0).is_err());
    }
}
