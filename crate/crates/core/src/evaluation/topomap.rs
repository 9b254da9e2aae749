//! Topographic maps of one sample at chosen instants: a PNG per time on a
//! fixed diverging scale (warm = high, cool = low) and the raw 9×9 slice as
//! text.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use image::{Rgb, RgbImage};
use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::data::{GRID, SAMPLE_RATE, WINDOW};
use crate::error::{Error, IoContext, Result};

pub const DEFAULT_TIMES: [f64; 4] = [0.0, 0.25, 0.5, 0.75];

/// Pixels per grid cell in the rendered map.
pub const CELL_PX: u32 = 24;

/// Value range mapped onto the colour ramp. Keep one scale across every map
/// that is compared side by side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColorScale {
    pub min: f64,
    pub max: f64,
}

impl ColorScale {
    /// `[−m, m]` with `m` the largest magnitude across `grids` (1 if all zero).
    pub fn symmetric_over<'a>(grids: impl IntoIterator<Item = &'a Array3<f32>>) -> Self {
        let m = grids.into_iter().flat_map(|g| g.iter()).fold(0.0f64, |m, &v| m.max((v as f64).abs()));
        let m = if m > 0.0 && m.is_finite() { m } else { 1.0 };
        Self { min: -m, max: m }
    }

    fn unit(&self, v: f64) -> f64 {
        ((v - self.min) / (self.max - self.min)).clamp(0.0, 1.0)
    }
}

/// Blue → white → red.
pub fn diverging(u: f64) -> [u8; 3] {
    const COOL: [f64; 3] = [49.0, 54.0, 149.0];
    const MID: [f64; 3] = [247.0, 247.0, 247.0];
    const WARM: [f64; 3] = [165.0, 0.0, 38.0];
    let (a, b, t) = if u < 0.5 { (COOL, MID, u * 2.0) } else { (MID, WARM, u * 2.0 - 1.0) };
    [0, 1, 2].map(|i| (a[i] + (b[i] - a[i]) * t).round() as u8)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopomapFrame {
    pub time: f64,
    pub index: usize,
    pub png: PathBuf,
    pub grid: PathBuf,
}

/// Sample index `round(t·128)` for `t ∈ [0, 1)`, capped at the last sample.
pub fn time_index(t: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Argument(format!("topomap time {t} s outside [0, 1)")));
    }
    Ok(((t * SAMPLE_RATE as f64).round() as usize).min(WINDOW - 1))
}

pub fn render(slice: &Array2<f32>, scale: ColorScale) -> RgbImage {
    let side = GRID as u32 * CELL_PX;
    RgbImage::from_fn(side, side, |x, y| {
        let v = slice[[(y / CELL_PX) as usize, (x / CELL_PX) as usize]] as f64;
        Rgb(diverging(scale.unit(v)))
    })
}

fn grid_text(slice: &Array2<f32>, time: f64, index: usize) -> String {
    let mut out = format!("# t={time} s, index={index}\n");
    for row in slice.rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(" ")).expect("write to string");
    }
    out
}

pub fn read_grid_text(path: &Path) -> Result<Array2<f32>> {
    let text = std::fs::read_to_string(path).at(path)?;
    let bad = |m: String| Error::Ingestion { path: path.to_path_buf(), reason: m };
    let values = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .flat_map(|l| l.split_whitespace())
        .map(|v| v.parse::<f32>().map_err(|e| bad(format!("`{v}`: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    Array2::from_shape_vec((GRID, GRID), values).map_err(|e| bad(e.to_string()))
}

/// Writes `{name}_t{ms:04}.png` and `{name}_t{ms:04}.txt` per requested time.
pub fn topomap_export(grid: &Array3<f32>, times: &[f64], out_dir: &Path, name: &str, scale: ColorScale) -> Result<Vec<TopomapFrame>> {
    if grid.shape() != [WINDOW, GRID, GRID] {
        return Err(Error::Argument(format!("sample grid {:?} is not [128, 9, 9]", grid.shape())));
    }
    if !(scale.max > scale.min) {
        return Err(Error::Argument(format!("colour scale [{}, {}] is empty", scale.min, scale.max)));
    }
    let indices = times.iter().map(|&t| time_index(t)).collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out_dir).at(out_dir)?;
    let mut frames = Vec::new();
    for (&time, index) in times.iter().zip(indices) {
        let slice = grid.index_axis(Axis(0), index).to_owned();
        let stem = format!("{name}_t{:04}", (time * 1000.0).round() as u32);
        let png = out_dir.join(format!("{stem}.png"));
        render(&slice, scale)
            .save(&png)
            .map_err(|e| Error::Io { path: png.clone(), source: std::io::Error::other(e) })?;
        let txt = out_dir.join(format!("{stem}.txt"));
        std::fs::write(&txt, grid_text(&slice, time, index)).at(&txt)?;
        frames.push(TopomapFrame { time, index, png, grid: txt });
    }
    Ok(frames)
}
