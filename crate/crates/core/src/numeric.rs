//! Small numeric helpers shared across modules.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Element-wise mean, accumulated left to right in f64.
///
/// Panics if `vectors` is empty or dimensions differ.
pub fn mean_vectors<V: AsRef<[f64]>>(vectors: &[V]) -> Vec<f64> {
    assert!(!vectors.is_empty(), "mean of no vectors");
    let dim = vectors[0].as_ref().len();
    let mut acc = vec![0.0f64; dim];
    for v in vectors {
        let v = v.as_ref();
        assert_eq!(v.len(), dim, "dimension mismatch");
        for (a, x) in acc.iter_mut().zip(v) {
            *a += x;
        }
    }
    let k = vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    acc
}

pub fn widen(v: &[f32]) -> Vec<f64> {
    v.iter().map(|&x| x as f64).collect()
}
