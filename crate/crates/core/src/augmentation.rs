//! Masking transformation, augmentation-factor sampling and the channel mask.
//!
//! `δ(e, τ)` zeroes every cell whose uniform draw `r` satisfies `r ≤ τ` and
//! keeps the rest. Draws are taken in row-major cell order, one fresh draw per
//! cell, so the per-grid and batched forms consume an RNG identically.

use ndarray::{Array2, Array3, ArrayView3, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::data::{ElectrodeLayout, GRID, WINDOW};
use crate::error::{Error, Result};
use crate::seed::Rng;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AugmentationFactor(f64);

impl AugmentationFactor {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::Argument(format!("tau must lie in [0, 1), got {tau}")));
        }
        Ok(Self(tau))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Closed range `[τ_min, τ_max]` with `0 ≤ τ_min ≤ τ_max < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauRange {
    pub min: f64,
    pub max: f64,
}

impl TauRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        let r = Self { min, max };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.min && self.min <= self.max && self.max < 1.0) {
            return Err(Error::Argument(format!(
                "tau range [{}, {}] must satisfy 0 <= min <= max < 1",
                self.min, self.max
            )));
        }
        Ok(())
    }
}

pub fn sample_tau(range: TauRange, rng: &mut Rng) -> Result<AugmentationFactor> {
    range.validate()?;
    if range.min == range.max {
        return AugmentationFactor::new(range.min);
    }
    AugmentationFactor::new(rng.random_range(range.min..range.max))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaskedSample {
    pub grid: Array3<f32>,
    pub tau: AugmentationFactor,
    /// `r ≤ τ` indicator, kept only when requested.
    pub mask_realization: Option<Array3<bool>>,
}

/// Applies the masking rule to `e` given an explicit draw field `r`.
pub fn mask_with_draws(e: ArrayView3<f32>, r: ArrayView3<f64>, tau: AugmentationFactor) -> Result<Array3<f32>> {
    if e.shape() != r.shape() {
        return Err(Error::Argument(format!("draw shape {:?} differs from grid {:?}", r.shape(), e.shape())));
    }
    let t = tau.value();
    Ok(Zip::from(e).and(r).map_collect(|&v, &r| if r <= t { 0.0 } else { v }))
}

pub fn masking_transform(e: &Array3<f32>, tau: f64, rng: &mut Rng, keep_realization: bool) -> Result<MaskedSample> {
    let tau = AugmentationFactor::new(tau)?;
    let r = Array3::from_shape_simple_fn(e.raw_dim(), || rng.random::<f64>());
    let grid = mask_with_draws(e.view(), r.view(), tau)?;
    let mask_realization = keep_realization.then(|| r.mapv(|r| r <= tau.value()));
    Ok(MaskedSample { grid, tau, mask_realization })
}

/// Batched form over `[n, ...]`, with one `τ` per sample.
pub fn mask_batch(x: &Tensor, taus: &[f64], rng: &mut Rng) -> Result<Tensor> {
    let n = x.shape()[0];
    if taus.len() != n {
        return Err(Error::Argument(format!("{} taus for a batch of {n}", taus.len())));
    }
    for &t in taus {
        AugmentationFactor::new(t)?;
    }
    let per = x.len() / n.max(1);
    let mut out = x.clone();
    for (i, chunk) in out.data_mut().chunks_mut(per).enumerate() {
        for v in chunk {
            if rng.random::<f64>() <= taus[i] {
                *v = 0.0;
            }
        }
    }
    Ok(out)
}

/// Binary 9×9 prior with ones at electrode positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelMask {
    pub m: Vec<Vec<u8>>,
    pub layout_name: String,
}

pub fn build_channel_mask(layout: &ElectrodeLayout) -> ChannelMask {
    let mut m = vec![vec![0u8; GRID]; GRID];
    for (r, c) in layout.positions() {
        m[r][c] = 1;
    }
    ChannelMask { m, layout_name: layout.name.clone() }
}

impl ChannelMask {
    pub fn popcount(&self) -> usize {
        self.m.iter().flatten().filter(|&&v| v == 1).count()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.m[r][c] == 1
    }

    pub fn as_array(&self) -> Array2<f32> {
        Array2::from_shape_fn((GRID, GRID), |(r, c)| self.m[r][c] as f32)
    }

    /// Mask broadcast to `[n, channels, 9, 9]`.
    pub fn broadcast(&self, n: usize, channels: usize) -> Tensor {
        let cells = GRID * GRID;
        Tensor::from_fn(&[n, channels, GRID, GRID], |i| {
            let cell = i % cells;
            self.m[cell / GRID][cell % GRID] as f64
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.m.len() != GRID || self.m.iter().any(|row| row.len() != GRID || row.iter().any(|&v| v > 1)) {
            return Err(Error::Argument("channel mask must be a 9x9 binary array".into()));
        }
        Ok(())
    }
}

pub fn apply_channel_mask(x: &Array3<f32>, mask: &ChannelMask) -> Result<Array3<f32>> {
    mask.validate()?;
    if x.shape()[1..] != [GRID, GRID] {
        return Err(Error::Argument(format!("grid shape {:?} is not [_, 9, 9]", x.shape())));
    }
    Ok(Array3::from_shape_fn(x.raw_dim(), |(t, r, c)| if mask.get(r, c) { x[[t, r, c]] } else { 0.0 }))
}

/// Tensor form over `[n, c, 9, 9]`.
pub fn apply_channel_mask_tensor(x: &Tensor, mask: &ChannelMask) -> Result<Tensor> {
    let s = x.shape();
    if s.len() != 4 || s[2..] != [GRID, GRID] {
        return Err(Error::Argument(format!("tensor shape {s:?} is not [n, c, 9, 9]")));
    }
    Ok(x.zip_map(&mask.broadcast(s[0], s[1]), |a, m| a * m))
}

/// Default grid shape used by the networks.
pub const GRID_SHAPE: [usize; 3] = [WINDOW, GRID, GRID];

#[cfg(test)]
mod tests {
    use ndarray::array;
    use rand::SeedableRng;

    use super::*;
    use crate::seed;

    #[test]
    fn toy_slice_by_direct_evaluation() {
        let e = array![[[1.0f32, 2.0], [3.0, 4.0]]];
        let r = array![[[0.2, 0.6], [0.8, 0.4]]];
        let out = mask_with_draws(e.view(), r.view(), AugmentationFactor::new(0.5).unwrap()).unwrap();
        assert_eq!(out, array![[[0.0, 2.0], [3.0, 0.0]]]);
    }

    #[test]
    fn tie_masks_the_cell() {
        let e = array![[[5.0f32]]];
        let out = mask_with_draws(e.view(), array![[[0.25]]].view(), AugmentationFactor::new(0.25).unwrap()).unwrap();
        assert_eq!(out[[0, 0, 0]], 0.0);
    }

    #[test]
    fn tau_range_checks() {
        let mut rng = seed::stream(1, "t", 0);
        assert_eq!(sample_tau(TauRange { min: 0.3, max: 0.3 }, &mut rng).unwrap().value(), 0.3);
        assert!(matches!(sample_tau(TauRange { min: 0.6, max: 0.2 }, &mut rng), Err(Error::Argument(_))));
        assert!(TauRange::new(0.0, 1.0).is_err());
        assert!(AugmentationFactor::new(-0.1).is_err());
        assert!(AugmentationFactor::new(1.0).is_err());
    }

    #[test]
    fn tau_mean_matches_uniform_mean() {
        let mut rng = seed::stream(2, "t", 0);
        let range = TauRange::new(0.5, 0.9).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| sample_tau(range, &mut rng).unwrap().value()).sum::<f64>() / n as f64;
        assert!((mean - 0.7).abs() < 0.01, "{mean}");
    }

    #[test]
    fn zero_tau_keeps_everything() {
        let e = Array3::from_elem((128, 9, 9), 1.5f32);
        let out = masking_transform(&e, 0.0, &mut seed::stream(3, "t", 0), false).unwrap();
        assert_eq!(out.grid, e);
        assert!(out.mask_realization.is_none());
    }

    #[test]
    fn masked_fraction_concentrates() {
        let e = Array3::from_elem((128, 9, 9), 1.0f32);
        let mut rng = seed::stream(4, "t", 0);
        for tau in [0.1, 0.4, 0.7] {
            let out = masking_transform(&e, tau, &mut rng, true).unwrap();
            let zeros = out.grid.iter().filter(|&&v| v == 0.0).count() as f64 / e.len() as f64;
            assert!((zeros - tau).abs() < 0.02, "tau {tau}: {zeros}");
            let real = out.mask_realization.unwrap();
            assert!(Zip::from(&out.grid).and(&real).all(|&g, &m| (g == 0.0) == m));
        }
    }

    #[test]
    fn batched_form_matches_per_grid_form() {
        let mut src = seed::Rng::seed_from_u64(9);
        let grids: Vec<Array3<f32>> =
            (0..3).map(|_| Array3::from_shape_simple_fn((128, 9, 9), || src.random::<f32>() + 0.5)).collect();
        let taus = [0.1, 0.5, 0.8];
        let mut a = seed::stream(5, "m", 0);
        let expected: Vec<Array3<f32>> =
            grids.iter().zip(taus).map(|(g, t)| masking_transform(g, t, &mut a, false).unwrap().grid).collect();
        let batch = crate::data::grids_to_tensor(&grids);
        let got = mask_batch(&batch, &taus, &mut seed::stream(5, "m", 0)).unwrap();
        assert_eq!(crate::data::tensor_to_grids(&got), expected);
    }

    #[test]
    fn channel_mask_matches_layout_membership() {
        for layout in [ElectrodeLayout::deap32(), ElectrodeLayout::dreamer14()] {
            let m = build_channel_mask(&layout);
            assert_eq!(m.popcount(), layout.channel_count());
            let positions: Vec<_> = layout.positions().collect();
            for r in 0..GRID {
                for c in 0..GRID {
                    assert_eq!(m.get(r, c), positions.contains(&(r, c)));
                }
            }
        }
        let empty = ElectrodeLayout::new("empty", vec![]).unwrap();
        assert_eq!(build_channel_mask(&empty).popcount(), 0);
    }

    #[test]
    fn channel_mask_application() {
        let m = build_channel_mask(&ElectrodeLayout::deap32());
        let ones = Array3::from_elem((128, 9, 9), 1.0f32);
        let out = apply_channel_mask(&ones, &m).unwrap();
        for t in 0..128 {
            assert_eq!(out.index_axis(ndarray::Axis(0), t).sum(), 32.0);
        }
        let mut rng = seed::Rng::seed_from_u64(3);
        let x = Array3::from_shape_simple_fn((128, 9, 9), || rng.random::<f32>() - 0.5);
        let once = apply_channel_mask(&x, &m).unwrap();
        assert_eq!(apply_channel_mask(&once, &m).unwrap(), once);
        for ((t, r, c), v) in once.indexed_iter() {
            if m.get(r, c) {
                assert_eq!(v.to_bits(), x[[t, r, c]].to_bits());
            } else {
                assert_eq!(*v, 0.0);
            }
        }
        assert!(apply_channel_mask(&Array3::zeros((128, 8, 9)), &m).is_err());
    }
}
