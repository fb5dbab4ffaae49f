//! Streaming moments with an order-fixed merge.
//!
//! [`Moments::pairwise`] reduces a slice by recursive halving, so the result
//! depends only on the data and its order, never on how the values were
//! produced. Parallel drivers collect per-trial values in trial order and
//! call it once.

/// Count, mean and central sums of powers 2 to 4.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

impl Moments {
    pub fn single(x: f64) -> Self {
        Moments { count: 1, mean: x, m2: 0.0, m3: 0.0, m4: 0.0 }
    }

    pub fn push(&mut self, x: f64) {
        *self = self.merge(&Moments::single(x));
    }

    /// Combines two disjoint samples (Pébay's update formulas).
    pub fn merge(&self, other: &Moments) -> Moments {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let na = self.count as f64;
        let nb = other.count as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d_n = delta / n;
        let d_n2 = d_n * d_n;
        let term1 = delta * d_n * na * nb;
        let mean = self.mean + nb * d_n;
        let m2 = self.m2 + other.m2 + term1;
        let m3 = self.m3 + other.m3 + term1 * d_n * (na - nb)
            + 3.0 * d_n * (na * other.m2 - nb * self.m2);
        let m4 = self.m4
            + other.m4
            + term1 * d_n2 * (na * na - na * nb + nb * nb)
            + 6.0 * d_n2 * (na * na * other.m2 + nb * nb * self.m2)
            + 4.0 * d_n * (na * other.m3 - nb * self.m3);
        Moments { count: self.count + other.count, mean, m2, m3, m4 }
    }

    pub fn pairwise(values: &[f64]) -> Moments {
        match values.len() {
            0 => Moments::default(),
            1 => Moments::single(values[0]),
            len => {
                let (a, b) = values.split_at(len / 2);
                Moments::pairwise(a).merge(&Moments::pairwise(b))
            }
        }
    }

    /// Unbiased sample variance; zero below two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error_of_mean(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        libm::sqrt(self.variance() / self.count as f64)
    }

    /// Moment-based standard error of [`variance`](Self::variance):
    /// `sqrt((mu4 - s^4 (N-3)/(N-1)) / N)`.
    pub fn std_error_of_variance(&self) -> f64 {
        if self.count < 4 {
            return f64::INFINITY;
        }
        let n = self.count as f64;
        let mu4 = self.m4 / n;
        let s2 = self.variance();
        libm::sqrt(((mu4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0))
    }
}
