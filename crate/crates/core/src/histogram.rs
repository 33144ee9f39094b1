//! Equal-width histograms shared by topology and coalition statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bucket {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub buckets: Vec<Bucket>,
}

impl Histogram {
    /// Equal-width buckets spanning `[min, max]` of `values`. Each bucket's
    /// upper edge is exclusive except the last one, which is closed. When
    /// all values coincide a single bucket holds them.
    pub fn equal_width(values: &[f64], bucket_count: usize) -> Result<Self> {
        if bucket_count == 0 {
            return Err(Error::config("bucket_count", "must be at least 1"));
        }
        if values.is_empty() {
            return Ok(Self::default());
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if lo == hi {
            return Ok(Self {
                buckets: vec![Bucket {
                    lo,
                    hi,
                    count: values.len() as u64,
                }],
            });
        }
        let width = (hi - lo) / bucket_count as f64;
        let mut buckets: Vec<Bucket> = (0..bucket_count)
            .map(|i| Bucket {
                lo: lo + width * i as f64,
                hi: if i + 1 == bucket_count {
                    hi
                } else {
                    lo + width * (i + 1) as f64
                },
                count: 0,
            })
            .collect();
        for &v in values {
            let mut idx = ((v - lo) / width).floor() as usize;
            if idx >= bucket_count {
                idx = bucket_count - 1;
            }
            // floating edges: nudge into the bucket whose half-open range holds v
            while idx > 0 && v < buckets[idx].lo {
                idx -= 1;
            }
            while idx + 1 < bucket_count && v >= buckets[idx + 1].lo {
                idx += 1;
            }
            buckets[idx].count += 1;
        }
        Ok(Self { buckets })
    }

    /// Unit-width buckets `[k, k+1)` for every integer between the minimum
    /// and maximum value; falls back to `max_buckets` equal-width buckets
    /// when the range is wider than that.
    pub fn integer(values: &[u64], max_buckets: usize) -> Self {
        let Some(&min) = values.iter().min() else {
            return Self::default();
        };
        let max = *values.iter().max().expect("non-empty");
        let span = (max - min + 1) as usize;
        if span > max_buckets.max(1) {
            let as_f: Vec<f64> = values.iter().map(|&v| v as f64).collect();
            return Self::equal_width(&as_f, max_buckets.max(1)).expect("non-zero buckets");
        }
        let mut buckets: Vec<Bucket> = (0..span)
            .map(|i| Bucket {
                lo: (min + i as u64) as f64,
                hi: (min + i as u64 + 1) as f64,
                count: 0,
            })
            .collect();
        for &v in values {
            buckets[(v - min) as usize].count += 1;
        }
        Self { buckets }
    }

    pub fn total(&self) -> u64 {
        self.buckets.iter().map(|b| b.count).sum()
    }

    /// Bucket with the largest count (first on ties).
    pub fn mode_bucket(&self) -> Option<&Bucket> {
        self.buckets
            .iter()
            .fold(None, |best: Option<&Bucket>, b| match best {
                Some(cur) if cur.count >= b.count => Some(cur),
                _ => Some(b),
            })
    }
}
