use crate::error::RingError;
use crate::ring::{self, Configuration};

/// Smallest image of an `n`-bit occupancy mask under rotation and reflection.
pub fn canonical_mask(mask: u64, n: usize) -> u64 {
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let reversed = (0..n).filter(|&i| mask >> i & 1 == 1).fold(0u64, |acc, i| acc | 1 << ((n - i) % n));
    let rotate = |m: u64, r: usize| if r == 0 { m } else { ((m << r) | (m >> (n - r))) & full };
    (0..n).flat_map(|r| [rotate(mask, r), rotate(reversed, r)]).min().expect("n ≥ 1")
}

/// Every tower-free, non-periodic placement of `k` robots on `n` nodes, one
/// per rotation/reflection class, ordered by canonical mask.
pub fn enumerate_initials(n: usize, k: usize) -> Result<Vec<Configuration>, RingError> {
    ring::check_instance_size(n, k)?;
    if n > 63 {
        return Err(RingError::InvalidConfiguration(format!("enumeration supports n ≤ 63, got {n}")));
    }
    let mut out = Vec::new();
    let mut mask: u64 = (1 << k) - 1;
    while mask < 1 << n {
        if canonical_mask(mask, n) == mask {
            let nodes: Vec<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
            let c = Configuration::from_occupied(n, &nodes)?;
            if !ring::is_periodic(&c) {
                out.push(c);
            }
        }
        // Next mask with the same popcount.
        let low = mask & mask.wrapping_neg();
        let ripple = mask + low;
        mask = ripple | (((mask ^ ripple) >> 2) / low);
    }
    Ok(out)
}
