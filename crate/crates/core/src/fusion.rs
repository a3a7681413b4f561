//! Per-AP bearing likelihood heat maps and their multiplicative fusion.
//!
//! Each AP turns its angle set into a planar map: every cell center is
//! converted to an array-relative bearing and scored with the Gaussian
//! likelihood of the nearest estimated angle. Bearings are straight rays from
//! the AP; the far-field approximation is deliberate. Cells an AP cannot see
//! (outside the field of view, or the AP's own cell) carry a floor value so
//! that they stay uninformative instead of vetoing the product.
//!
//! # Text layout
//!
//! ```text
//! # heatmap
//! # origin_x=<f64>,origin_y=<f64>,cell=<f64>,nx=<u64>,ny=<u64>,floor=<f64>
//! v(0,0),v(1,0),...,v(nx-1,0)
//! ...
//! v(0,ny-1),...,v(nx-1,ny-1)
//! ```
//!
//! One line per row, rows by increasing y. Cell `(ix, iy)` is centered at
//! `origin + (ix + 0.5, iy + 0.5) * cell`.
//!
//! # Binary layout
//!
//! Little-endian: `origin_x f64, origin_y f64, cell f64, nx u64, ny u64`,
//! then `nx * ny` row-major `f32` values. The floor is not stored; maps read
//! back from binary have floor 0.

use std::collections::VecDeque;
use std::f64::consts::PI;
use std::io::{BufRead, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::estimators::AoaEstimate;
use crate::simenv::{ApPose, FIELD_OF_VIEW_DEG};
use crate::{Error, Result};

/// Placement and resolution of a heat-map grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Lower-left corner of cell (0, 0), meters.
    pub origin: [f64; 2],
    /// Cell edge, meters.
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    /// Grid of `cell`-sized cells covering the bounding box of `points`
    /// grown by `padding` on every side.
    pub fn covering(points: &[[f64; 2]], padding: f64, cell: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::DegenerateGeometry("no points to cover".into()));
        }
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in points {
            for d in 0..2 {
                lo[d] = lo[d].min(p[d]);
                hi[d] = hi[d].max(p[d]);
            }
        }
        let origin = [lo[0] - padding, lo[1] - padding];
        let span = |d: usize| ((hi[d] + padding - origin[d]) / cell - 1e-9).ceil().max(1.0) as usize;
        let grid = Self {
            origin,
            cell,
            nx: span(0),
            ny: span(1),
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell.is_finite() && self.cell > 0.0) || self.nx == 0 || self.ny == 0 {
            return Err(Error::DegenerateGeometry(format!(
                "grid {}x{} with cell {}",
                self.nx, self.ny, self.cell
            )));
        }
        if !self.origin.iter().all(|v| v.is_finite()) {
            return Err(Error::DegenerateGeometry("non-finite grid origin".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn center(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + (ix as f64 + 0.5) * self.cell,
            self.origin[1] + (iy as f64 + 0.5) * self.cell,
        ]
    }

    /// Cell containing `p`, if inside the grid.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let fx = ((p[0] - self.origin[0]) / self.cell).floor();
        let fy = ((p[1] - self.origin[1]) / self.cell).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }
}

/// How [`locate`] reduces a map to one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LocateMode {
    /// Center of the strongest cell.
    Argmax,
    /// Likelihood-weighted centroid of the 4-connected region around the
    /// strongest cell whose values exceed `fraction` of the peak.
    Centroid { fraction: f64 },
}

impl Default for LocateMode {
    fn default() -> Self {
        LocateMode::Argmax
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FusionConfig {
    /// Standard deviation of the angle error model, degrees.
    pub sigma_deg: f64,
    /// Cell edge of the automatically sized grid, meters.
    pub cell: f64,
    /// Margin around the scene bounding box, meters.
    pub padding: f64,
    /// Explicit grid; overrides `cell` and `padding` when set.
    pub grid: Option<GridSpec>,
    pub locate: LocateMode,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            sigma_deg: 3.0,
            cell: 0.5,
            padding: 10.0,
            grid: None,
            locate: LocateMode::Argmax,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_deg.is_finite() && self.sigma_deg > 0.0) {
            return Err(Error::Parameter(format!("sigma {} must be > 0", self.sigma_deg)));
        }
        if let LocateMode::Centroid { fraction } = self.locate {
            if !(0.0..1.0).contains(&fraction) {
                return Err(Error::Parameter(format!("centroid fraction {fraction} outside [0, 1)")));
            }
        }
        match self.grid {
            Some(g) => g.validate(),
            None if !(self.cell > 0.0 && self.padding >= 0.0) => Err(Error::Parameter(format!(
                "cell {} / padding {}",
                self.cell, self.padding
            ))),
            None => Ok(()),
        }
    }

    /// The explicit grid, or one covering `points` with the configured
    /// padding and cell size.
    pub fn grid_for(&self, points: &[[f64; 2]]) -> Result<GridSpec> {
        match self.grid {
            Some(g) => {
                g.validate()?;
                Ok(g)
            }
            None => GridSpec::covering(points, self.padding, self.cell),
        }
    }
}

fn gaussian_pdf(x: f64, sigma: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

/// Value assigned to cells an AP cannot see: the pdf four sigmas out.
pub fn floor_value(sigma_deg: f64) -> f64 {
    gaussian_pdf(4.0 * sigma_deg, sigma_deg)
}

/// Largest Gaussian pdf of `theta` over the estimated angles.
pub fn likelihood(theta_deg: f64, estimates: &[f64], sigma_deg: f64) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::Domain("empty estimate list".into()));
    }
    if !(sigma_deg.is_finite() && sigma_deg > 0.0) {
        return Err(Error::Parameter(format!("sigma {sigma_deg} must be > 0")));
    }
    if !(theta_deg.abs() < FIELD_OF_VIEW_DEG) {
        return Err(Error::Domain(format!("angle {theta_deg} outside the field of view")));
    }
    Ok(estimates
        .iter()
        .map(|e| gaussian_pdf(theta_deg - e, sigma_deg))
        .fold(0.0, f64::max))
}

/// Nonnegative likelihood values over a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub grid: GridSpec,
    /// Row-major by y: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
    /// Value of an uninformative cell; the product of floors after fusion.
    pub floor: f64,
}

impl Heatmap {
    pub fn new(grid: GridSpec, values: Vec<f64>, floor: f64) -> Result<Self> {
        grid.validate()?;
        if values.len() != grid.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.nx,
                grid.ny
            )));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Domain("heat map values must be finite and nonnegative".into()));
        }
        Ok(Self { grid, values, floor })
    }

    /// Constant map.
    pub fn uniform(grid: GridSpec, value: f64) -> Result<Self> {
        Self::new(grid, vec![value; grid.len()], value)
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.nx + ix]
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Same map scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * factor).collect(),
            floor: self.floor * factor,
        }
    }

    /// Writes the plain-text layout described in the module docs.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        writeln!(w, "# heatmap")?;
        writeln!(
            w,
            "# origin_x={},origin_y={},cell={},nx={},ny={},floor={}",
            g.origin[0], g.origin[1], g.cell, g.nx, g.ny, self.floor
        )?;
        for row in self.values.chunks(g.nx) {
            let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut header: Option<(GridSpec, f64)> = None;
        let mut values = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if rest.contains("origin_x=") {
                    header = Some(parse_header(rest)?);
                }
                continue;
            }
            for field in line.split(',') {
                values.push(
                    field
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Record(format!("heat map value {field:?}: {e}")))?,
                );
            }
        }
        let (grid, floor) = header.ok_or_else(|| Error::Record("heat map header missing".into()))?;
        Self::new(grid, values, floor)
    }

    /// Writes the binary layout described in the module docs.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let g = &self.grid;
        w.write_all(&g.origin[0].to_le_bytes())?;
        w.write_all(&g.origin[1].to_le_bytes())?;
        w.write_all(&g.cell.to_le_bytes())?;
        w.write_all(&(g.nx as u64).to_le_bytes())?;
        w.write_all(&(g.ny as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut b8)?;
            Ok(b8)
        };
        let ox = f64::from_le_bytes(next(&mut r)?);
        let oy = f64::from_le_bytes(next(&mut r)?);
        let cell = f64::from_le_bytes(next(&mut r)?);
        let nx = u64::from_le_bytes(next(&mut r)?) as usize;
        let ny = u64::from_le_bytes(next(&mut r)?) as usize;
        let grid = GridSpec {
            origin: [ox, oy],
            cell,
            nx,
            ny,
        };
        grid.validate()?;
        let mut raw = vec![0u8; grid.len() * 4];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
            .collect();
        Self::new(grid, values, 0.0)
    }
}

fn parse_header(text: &str) -> Result<(GridSpec, f64)> {
    let get = |key: &str| -> Result<String> {
        text.split(',')
            .filter_map(|kv| kv.trim().split_once('='))
            .find(|(k, _)| *k == key)
            .map(|(_, v)| v.to_string())
            .ok_or_else(|| Error::Record(format!("heat map header lacks {key}")))
    };
    let num = |s: String| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Record(format!("heat map header value {s:?}: {e}")))
    };
    let int = |s: String| -> Result<usize> {
        s.parse::<usize>()
            .map_err(|e| Error::Record(format!("heat map header value {s:?}: {e}")))
    };
    let grid = GridSpec {
        origin: [num(get("origin_x")?)?, num(get("origin_y")?)?],
        cell: num(get("cell")?)?,
        nx: int(get("nx")?)?,
        ny: int(get("ny")?)?,
    };
    Ok((grid, num(get("floor")?)?))
}

/// Likelihood map of one AP's angle set.
pub fn heatmap_for_ap(pose: &ApPose, estimate: &AoaEstimate, cfg: &FusionConfig, grid: &GridSpec) -> Result<Heatmap> {
    angles_heatmap(pose, &estimate.angles, cfg.sigma_deg, grid)
}

/// [`heatmap_for_ap`] on a bare angle list.
pub fn angles_heatmap(pose: &ApPose, angles: &[f64], sigma_deg: f64, grid: &GridSpec) -> Result<Heatmap> {
    grid.validate()?;
    if angles.is_empty() {
        return Err(Error::Domain("empty estimate list".into()));
    }
    if !(sigma_deg.is_finite() && sigma_deg > 0.0) {
        return Err(Error::Parameter(format!("sigma {sigma_deg} must be > 0")));
    }
    let floor = floor_value(sigma_deg);
    let mut values = vec![0.0; grid.len()];
    values
        .par_chunks_mut(grid.nx)
        .enumerate()
        .for_each(|(iy, row)| {
            for (ix, v) in row.iter_mut().enumerate() {
                let c = grid.center(ix, iy);
                let (dx, dy) = (c[0] - pose.position[0], c[1] - pose.position[1]);
                *v = if dx.hypot(dy) < 1e-9 * grid.cell {
                    floor
                } else {
                    let rel = pose.relative_angle(dy.atan2(dx).to_degrees());
                    if rel.abs() < FIELD_OF_VIEW_DEG {
                        angles
                            .iter()
                            .map(|a| gaussian_pdf(rel - a, sigma_deg))
                            .fold(0.0, f64::max)
                    } else {
                        floor
                    }
                };
            }
        });
    Heatmap::new(*grid, values, floor)
}

/// Elementwise product of maps on an identical grid.
pub fn fuse(maps: &[Heatmap]) -> Result<Heatmap> {
    let first = maps
        .first()
        .ok_or_else(|| Error::Parameter("nothing to fuse".into()))?;
    if maps.iter().any(|m| m.grid != first.grid) {
        return Err(Error::GridMismatch);
    }
    let mut out = first.clone();
    for m in &maps[1..] {
        out.values.iter_mut().zip(&m.values).for_each(|(a, b)| *a *= b);
        out.floor *= m.floor;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub x: f64,
    pub y: f64,
    /// Largest cell value of the map.
    pub peak: f64,
    /// Cell holding the peak.
    pub cell: (usize, usize),
    /// Another cell shares the peak value; the lowest (y, x) index won.
    pub tie: bool,
}

/// Transmitter position from a (usually fused) map.
pub fn locate(map: &Heatmap, mode: LocateMode) -> Result<Location> {
    let g = &map.grid;
    let mut best = 0usize;
    for (i, &v) in map.values.iter().enumerate() {
        if v > map.values[best] {
            best = i;
        }
    }
    let peak = map.values[best];
    if !(peak > map.floor) || peak <= 0.0 {
        return Err(Error::NoEstimate);
    }
    let tie = map.values.iter().enumerate().any(|(i, &v)| i != best && v == peak);
    let cell = (best % g.nx, best / g.nx);
    let [x, y] = match mode {
        LocateMode::Argmax => g.center(cell.0, cell.1),
        LocateMode::Centroid { fraction } => centroid(map, cell, fraction * peak),
    };
    Ok(Location { x, y, peak, cell, tie })
}

fn centroid(map: &Heatmap, start: (usize, usize), threshold: f64) -> [f64; 2] {
    let g = &map.grid;
    let mut seen = vec![false; g.len()];
    let mut queue = VecDeque::from([start]);
    seen[start.1 * g.nx + start.0] = true;
    let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
    while let Some((ix, iy)) = queue.pop_front() {
        let v = map.at(ix, iy);
        let c = g.center(ix, iy);
        sw += v;
        sx += v * c[0];
        sy += v * c[1];
        let mut visit = |jx: usize, jy: usize| {
            let j = jy * g.nx + jx;
            if !seen[j] && map.values[j] > threshold {
                seen[j] = true;
                queue.push_back((jx, jy));
            }
        };
        if ix > 0 {
            visit(ix - 1, iy);
        }
        if ix + 1 < g.nx {
            visit(ix + 1, iy);
        }
        if iy > 0 {
            visit(ix, iy - 1);
        }
        if iy + 1 < g.ny {
            visit(ix, iy + 1);
        }
    }
    [sx / sw, sy / sw]
}

/// Number of cells that dominate their 8-neighborhood and reach at least
/// `fraction` of the global peak. Equal neighbors go to the lower index.
pub fn local_maxima(map: &Heatmap, fraction: f64) -> usize {
    let g = &map.grid;
    let threshold = fraction * map.peak();
    let mut count = 0;
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let v = map.at(ix, iy);
            if v < threshold || v <= 0.0 {
                continue;
            }
            let idx = iy * g.nx + ix;
            let mut is_max = true;
            'scan: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let (jx, jy) = (ix as i64 + dx, iy as i64 + dy);
                    if jx < 0 || jy < 0 || jx >= g.nx as i64 || jy >= g.ny as i64 {
                        continue;
                    }
                    let j = jy as usize * g.nx + jx as usize;
                    let w = map.values[j];
                    if w > v || (w == v && j < idx) {
                        is_max = false;
                        break 'scan;
                    }
                }
            }
            if is_max {
                count += 1;
            }
        }
    }
    count
}
