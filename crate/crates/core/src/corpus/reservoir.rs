use rand::seq::SliceRandom;
use rand::Rng;

/// Fixed-capacity uniform sample over a stream (Algorithm R) that also
/// remembers how many items it has seen, so two reservoirs over disjoint
/// streams can be merged into a uniform sample of the union.
#[derive(Debug, Clone)]
pub struct Reservoir<T> {
    capacity: usize,
    seen: u64,
    items: Vec<T>,
}

impl<T> Reservoir<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            seen: 0,
            items: Vec::with_capacity(capacity.min(64)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn seen(&self) -> u64 {
        self.seen
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn into_items(self) -> Vec<T> {
        self.items
    }

    pub fn offer<R: Rng + ?Sized>(&mut self, rng: &mut R, item: T) {
        self.offer_with(rng, || item);
    }

    /// Like [`offer`](Self::offer) but only builds the item if it is kept.
    pub fn offer_with<R: Rng + ?Sized>(&mut self, rng: &mut R, make: impl FnOnce() -> T) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(make());
        } else if self.capacity > 0 {
            let j = rng.random_range(0..self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = make();
            }
        }
    }

    /// Uniform sample of the union of the two underlying streams.
    ///
    /// The number of survivors taken from `self` is hypergeometric in the
    /// two seen-counts; each side then contributes a uniform subset of its
    /// own (already uniform) sample.
    pub fn merge<R: Rng + ?Sized>(self, other: Self, rng: &mut R) -> Self {
        debug_assert_eq!(self.capacity, other.capacity);
        let total = self.seen + other.seen;
        let draws = (self.capacity as u64).min(total) as usize;
        let (mut left_a, mut left_b) = (self.seen, other.seen);
        let mut from_a = 0usize;
        for _ in 0..draws {
            if rng.random_range(0..left_a + left_b) < left_a {
                from_a += 1;
                left_a -= 1;
            } else {
                left_b -= 1;
            }
        }
        let from_b = draws - from_a;
        let mut items = keep_random(self.items, from_a, rng);
        items.extend(keep_random(other.items, from_b, rng));
        Self {
            capacity: self.capacity,
            seen: total,
            items,
        }
    }
}

/// Uniform `k`-subset of `items`.
fn keep_random<T, R: Rng + ?Sized>(mut items: Vec<T>, k: usize, rng: &mut R) -> Vec<T> {
    debug_assert!(k <= items.len());
    // partial_shuffle moves the chosen elements to the tail
    items.partial_shuffle(rng, k);
    let start = items.len() - k;
    items.split_off(start)
}
