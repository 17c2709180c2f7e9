//! Odometer-style enumeration of value assignments over finite domains.

/// Iterates over all index tuples of the given domain sizes in lexicographic
/// order, last position varying fastest. An empty size list yields exactly
/// one empty tuple (the identity assignment).
pub(crate) struct IndexProduct {
    sizes: Vec<usize>,
    next: Option<Vec<usize>>,
}

impl IndexProduct {
    pub(crate) fn new(sizes: Vec<usize>) -> Self {
        let next = if sizes.contains(&0) {
            None
        } else {
            Some(vec![0; sizes.len()])
        };
        IndexProduct { sizes, next }
    }

    /// Total number of tuples, computed without overflow.
    pub(crate) fn count_total(sizes: &[usize]) -> u128 {
        sizes.iter().fold(1u128, |acc, &s| acc.saturating_mul(s as u128))
    }
}

impl Iterator for IndexProduct {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let current = self.next.clone()?;
        // advance the odometer
        let mut carried = true;
        if let Some(state) = self.next.as_mut() {
            for pos in (0..state.len()).rev() {
                state[pos] += 1;
                if state[pos] < self.sizes[pos] {
                    carried = false;
                    break;
                }
                state[pos] = 0;
            }
        }
        if carried {
            self.next = None;
        }
        Some(current)
    }
}
