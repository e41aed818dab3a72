//! Per-channel standardization.
//!
//! Current and stress statistics are taken over wire pixels only; the zero
//! background would otherwise dominate both moments. Normalized images are
//! re-zeroed outside the footprint. Aging time has its own mean and std.

use serde::{Deserialize, Serialize};

use super::{ChannelKind, FieldImage};
use crate::error::{Error, Result};

/// An input/target pair for one design at one aging time.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub design_id: u64,
    pub input: FieldImage,
    /// Years
    pub time: f64,
    pub target: FieldImage,
}

impl SamplePair {
    pub fn new(input: FieldImage, target: FieldImage, time: f64) -> Result<Self> {
        if input.mask != target.mask {
            return Err(Error::MaskMismatch);
        }
        Ok(SamplePair { design_id: input.design_id, input, time, target })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean_current: f64,
    pub std_current: f64,
    pub mean_stress: f64,
    pub std_stress: f64,
    pub mean_time: f64,
    pub std_time: f64,
}

/// Streaming count, mean and sum of squared deviations (Welford), with
/// pairwise merging (Chan et al.). Merging in a fixed order gives
/// bit-identical results regardless of how the work was scheduled.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let mut m = Moments::default();
        values.into_iter().for_each(|v| m.push(v));
        m
    }

    pub fn merge(&mut self, o: &Moments) {
        if o.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *o;
            return;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        self.mean += d * o.n as f64 / n as f64;
        self.m2 += o.m2 + d * d * (self.n as f64 * o.n as f64 / n as f64);
        self.n = n;
    }

    /// Population standard deviation.
    pub fn std(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.m2 / self.n as f64).sqrt()
        }
    }
}

impl NormStats {
    /// Fits statistics on training samples.
    pub fn fit(samples: &[SamplePair]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config("cannot fit normalization on an empty training split".into()));
        }
        let (mut current, mut stress) = (Moments::default(), Moments::default());
        for s in samples {
            current.merge(&Moments::of(s.input.wire_values().map(f64::from)));
            stress.merge(&Moments::of(s.target.wire_values().map(f64::from)));
        }
        let time = Moments::of(samples.iter().map(|s| s.time));
        Self::from_moments(&current, &stress, &time)
    }

    pub fn from_moments(current: &Moments, stress: &Moments, time: &Moments) -> Result<Self> {
        for (m, name) in [(current, "current"), (stress, "stress"), (time, "time")] {
            if m.n == 0 {
                return Err(Error::EmptyFootprint);
            }
            if !(m.std() > 0.0) {
                return Err(Error::ZeroVariance(name));
            }
        }
        Ok(NormStats {
            mean_current: current.mean,
            std_current: current.std(),
            mean_stress: stress.mean,
            std_stress: stress.std(),
            mean_time: time.mean,
            std_time: time.std(),
        })
    }

    pub fn channel(&self, kind: ChannelKind) -> (f64, f64) {
        match kind {
            ChannelKind::Current => (self.mean_current, self.std_current),
            ChannelKind::Stress => (self.mean_stress, self.std_stress),
        }
    }

    pub fn apply_value(&self, kind: ChannelKind, v: f64) -> f64 {
        let (m, s) = self.channel(kind);
        (v - m) / s
    }

    pub fn invert_value(&self, kind: ChannelKind, v: f64) -> f64 {
        let (m, s) = self.channel(kind);
        v * s + m
    }

    pub fn apply_time(&self, years: f64) -> f64 {
        (years - self.mean_time) / self.std_time
    }

    pub fn invert_time(&self, normalized: f64) -> f64 {
        normalized * self.std_time + self.mean_time
    }

    fn map_image(img: &FieldImage, f: impl Fn(f64) -> f64) -> FieldImage {
        let mut out = img.clone();
        for (p, &on) in out.pixels.iter_mut().zip(img.mask.bits()) {
            *p = if on { f(*p as f64) as f32 } else { 0.0 };
        }
        out
    }

    pub fn apply(&self, img: &FieldImage) -> FieldImage {
        Self::map_image(img, |v| self.apply_value(img.kind, v))
    }

    pub fn invert(&self, img: &FieldImage) -> FieldImage {
        Self::map_image(img, |v| self.invert_value(img.kind, v))
    }
}
