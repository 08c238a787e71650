//! Upper bounds on Hausdorff pre-measures from dyadic covers, box-counting
//! dimension, Rogers–Taylor density classification and finite-scale carriers.
//!
//! Covers use Euclidean diameters; measure queries use `ℓ∞` balls. The two
//! differ by at most a factor `√2` in radius.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chaos::{compensated_sum, AtomicMeasure, BallMeasure};
use crate::error::{Error, Result};
use crate::gauge::GaugeFunction;
use crate::lattice::Rect;
use crate::stats::least_squares;

/// A compact subset of the plane: finitely many points or closed boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PlaneSet {
    Points(Vec<(f64, f64)>),
    Boxes(Vec<Rect>),
}

impl PlaneSet {
    pub fn unit_segment() -> Self {
        PlaneSet::Boxes(vec![Rect::new(0.0, 0.5, 1.0, 0.0)])
    }

    pub fn unit_square() -> Self {
        PlaneSet::Boxes(vec![Rect::unit_square()])
    }

    /// Product of two middle-thirds Cantor sets at construction depth `depth`.
    pub fn cantor_dust(depth: u32) -> Self {
        let mut line = vec![(0.0f64, 1.0f64)];
        for _ in 0..depth {
            line = line.iter().flat_map(|&(a, w)| [(a, w / 3.0), (a + 2.0 * w / 3.0, w / 3.0)]).collect();
        }
        let boxes = line.iter().flat_map(|&(x, w)| line.iter().map(move |&(y, _)| Rect::new(x, y, w, w))).collect();
        PlaneSet::Boxes(boxes)
    }

    /// Upper bound on the number of occupied cells at `level`.
    fn cell_bound(&self, level: u32) -> f64 {
        let scale = (1u64 << level) as f64;
        match self {
            PlaneSet::Points(ps) => ps.len() as f64,
            PlaneSet::Boxes(bs) => bs.iter().map(|r| (r.w * scale + 2.0) * (r.h * scale + 2.0)).sum(),
        }
    }

    /// Occupied cells at dyadic level `level` with the bounding box of the part
    /// of the set inside each cell.
    fn cells(&self, level: u32) -> HashMap<(i64, i64), [f64; 4]> {
        let scale = (1u64 << level) as f64;
        let mut cells: HashMap<(i64, i64), [f64; 4]> = HashMap::new();
        let mut add = |key: (i64, i64), b: [f64; 4]| {
            cells
                .entry(key)
                .and_modify(|c| {
                    c[0] = c[0].min(b[0]);
                    c[1] = c[1].min(b[1]);
                    c[2] = c[2].max(b[2]);
                    c[3] = c[3].max(b[3]);
                })
                .or_insert(b);
        };
        // cells are half-open; a box is half-open too unless it is flat in that direction
        let span = |a: f64, b: f64| -> (i64, i64) {
            let lo = (a * scale).floor() as i64;
            if b <= a {
                (lo, lo)
            } else {
                (lo, ((b * scale).ceil() as i64 - 1).max(lo))
            }
        };
        match self {
            PlaneSet::Points(ps) => {
                for &(x, y) in ps {
                    add(((x * scale).floor() as i64, (y * scale).floor() as i64), [x, y, x, y]);
                }
            }
            PlaneSet::Boxes(bs) => {
                for r in bs {
                    let (x0, y0, x1, y1) = (r.x0, r.y0, r.x0 + r.w, r.y0 + r.h);
                    let (ia, ib) = span(x0, x1);
                    let (ja, jb) = span(y0, y1);
                    for j in ja..=jb {
                        for i in ia..=ib {
                            let c = [i as f64 / scale, j as f64 / scale, (i + 1) as f64 / scale, (j + 1) as f64 / scale];
                            add((i, j), [x0.max(c[0]), y0.max(c[1]), x1.min(c[2]), y1.min(c[3])]);
                        }
                    }
                }
            }
        }
        cells
    }
}

/// Finest level considered by the cover search.
pub const DEFAULT_MAX_LEVEL: u32 = 14;

/// Levels whose cell count may exceed this are skipped by the search (the
/// mesh level itself is always evaluated).
pub const CELL_BUDGET: f64 = 2e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCell {
    /// Lower-left corner and side of the dyadic cell.
    pub corner: (f64, f64),
    pub side: f64,
    /// Euclidean diameter of the part of the set inside the cell.
    pub diameter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverEstimate {
    pub mesh: f64,
    pub level: u32,
    /// `Σ φ(diam O_i)`, an upper bound on the `mesh`-pre-measure.
    pub value: f64,
    pub cover: Vec<CoverCell>,
}

impl CoverEstimate {
    /// CSV rows `x,y,side`.
    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("x,y,side\n");
        for c in &self.cover {
            let _ = writeln!(out, "{:e},{:e},{:e}", c.corner.0, c.corner.1, c.side);
        }
        out
    }
}

/// Coarsest dyadic level whose cells have diameter `√2·2^{-L} ≤ mesh`.
pub fn level_for_mesh(mesh: f64) -> u32 {
    let mut l = 0u32;
    while 2f64.sqrt() * 0.5f64.powi(l as i32) > mesh {
        l += 1;
    }
    l
}

fn cover_at(set: &PlaneSet, gauge: &dyn GaugeFunction, level: u32) -> Result<(f64, Vec<CoverCell>)> {
    let side = 0.5f64.powi(level as i32);
    let mut cells: Vec<((i64, i64), [f64; 4])> = set.cells(level).into_iter().collect();
    cells.sort_by_key(|(k, _)| (k.1, k.0));
    let mut terms = Vec::with_capacity(cells.len());
    let mut cover = Vec::with_capacity(cells.len());
    for ((i, j), b) in cells {
        let d = (b[2] - b[0]).hypot(b[3] - b[1]);
        terms.push(if d > 0.0 { gauge.phi(d)? } else { 0.0 });
        cover.push(CoverCell { corner: (i as f64 * side, j as f64 * side), side, diameter: d });
    }
    Ok((compensated_sum(terms), cover))
}

/// Best dyadic cover over levels from the mesh level to `max_level`, each
/// cell replaced by its intersection with the set.
///
/// Every candidate is admissible for all coarser meshes, and the finest level
/// searched depends on the set alone, so the value is nondecreasing as
/// `mesh ↓ 0`.
pub fn premeasure_upper_with(set: &PlaneSet, gauge: &dyn GaugeFunction, mesh: f64, max_level: u32) -> Result<CoverEstimate> {
    if !(mesh > 0.0) {
        return Err(Error::DomainError(format!("mesh must be positive, got {mesh}")));
    }
    let first = level_for_mesh(mesh);
    let mut last = 0;
    while last < max_level && set.cell_bound(last + 1) <= CELL_BUDGET {
        last += 1;
    }
    let mut best: Option<CoverEstimate> = None;
    for level in first..=last.max(first) {
        let (value, cover) = cover_at(set, gauge, level)?;
        if best.as_ref().is_none_or(|b| value < b.value) {
            best = Some(CoverEstimate { mesh, level, value, cover });
        }
    }
    Ok(best.expect("at least one level"))
}

pub fn premeasure_upper(set: &PlaneSet, gauge: &dyn GaugeFunction, mesh: f64) -> Result<CoverEstimate> {
    premeasure_upper_with(set, gauge, mesh, DEFAULT_MAX_LEVEL)
}

/// Box-counting slope of `log #cells` against `log 2^L` over the given levels.
pub fn dim_estimate(set: &PlaneSet, levels: std::ops::RangeInclusive<u32>) -> Result<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for l in levels {
        xs.push(l as f64 * std::f64::consts::LN_2);
        ys.push((set.cells(l).len() as f64).ln());
    }
    if xs.len() < 2 {
        return Err(Error::EmptyGrid);
    }
    Ok(least_squares(&xs, &ys).slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityClass {
    MeasureInfinite,
    MeasureZeroOnCarrier,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub points: Vec<(f64, f64)>,
    pub ratios: Vec<f64>,
    pub classification: DensityClass,
    pub t_low: f64,
    pub t_high: f64,
    pub fraction: f64,
}

/// Default share of points that must agree for a one-sided verdict.
pub const DEFAULT_CLASS_FRACTION: f64 = 0.9;

/// `max_r μ(B(x, r))/φ(r)` over the radius grid.
pub fn density_ratio(m: &dyn BallMeasure, gauge: &dyn GaugeFunction, x: (f64, f64), radii: &[f64]) -> Result<f64> {
    let mut best = 0.0f64;
    for &r in radii {
        best = best.max(m.ball_mass(x, r) / gauge.phi(r)?);
    }
    Ok(best)
}

pub fn rogers_taylor_classify(
    m: &dyn BallMeasure,
    points: &[(f64, f64)],
    gauge: &dyn GaugeFunction,
    radii: &[f64],
    t_low: f64,
    t_high: f64,
    fraction: f64,
) -> Result<DensityReport> {
    if radii.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) || radii[0] >= 1.0 || radii[radii.len() - 1] <= 0.0 {
        return Err(Error::invalid("radii must decrease within (0, 1)"));
    }
    if !(t_low < t_high) {
        return Err(Error::invalid("need t_low < t_high"));
    }
    let ratios: Vec<f64> = points.iter().map(|&x| density_ratio(m, gauge, x, radii)).collect::<Result<_>>()?;
    let n = ratios.len().max(1) as f64;
    let above = ratios.iter().filter(|&&r| r > t_high).count() as f64 / n;
    let below = ratios.iter().filter(|&&r| r < t_low).count() as f64 / n;
    let classification = if above >= fraction {
        DensityClass::MeasureInfinite
    } else if below >= fraction {
        DensityClass::MeasureZeroOnCarrier
    } else {
        DensityClass::Indeterminate
    };
    Ok(DensityReport { points: points.to_vec(), ratios, classification, t_low, t_high, fraction })
}

/// Masses of the closed `ℓ∞` balls of radius `r` around every site, by 2D
/// prefix sums over the bounding box.
pub fn site_ball_masses(m: &AtomicMeasure, r: f64) -> Vec<f64> {
    let dom = m.domain();
    let n = dom.scale() as f64;
    let (x0, y0, w, h) = dom.sites().bbox();
    let mut k = (r * n).floor().max(0.0) as i64;
    while (k + 1) as f64 / n <= r {
        k += 1;
    }
    while k > 0 && k as f64 / n > r {
        k -= 1;
    }
    let mut prefix = vec![0.0f64; (w + 1) * (h + 1)];
    for (i, &(x, y)) in dom.sites().sites().iter().enumerate() {
        prefix[(y - y0 + 1) as usize * (w + 1) + (x - x0 + 1) as usize] = m.weight(i);
    }
    for j in 1..=h {
        for i in 1..=w {
            prefix[j * (w + 1) + i] +=
                prefix[(j - 1) * (w + 1) + i] + prefix[j * (w + 1) + i - 1] - prefix[(j - 1) * (w + 1) + i - 1];
        }
    }
    let at = |i: i64, j: i64| prefix[j as usize * (w + 1) + i as usize];
    dom.sites()
        .sites()
        .iter()
        .map(|&(x, y)| {
            let (ia, ib) = ((x - x0 - k).max(0), (x - x0 + k + 1).min(w as i64));
            let (ja, jb) = ((y - y0 - k).max(0), (y - y0 + k + 1).min(h as i64));
            (at(ib, jb) - at(ia, jb) - at(ib, ja) + at(ia, ja)).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierReport {
    pub threshold: f64,
    pub radius: f64,
    pub indices: Vec<usize>,
    pub mass_fraction: f64,
    pub complement_fraction: f64,
}

/// Sites whose ratio `μ(B(x, r))/φ(r)` at the finest grid radius exceeds `t`.
pub fn carrier_extract(m: &AtomicMeasure, gauge: &dyn GaugeFunction, t: f64, radii: &[f64]) -> Result<CarrierReport> {
    let radius = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    if !radius.is_finite() {
        return Err(Error::EmptyGrid);
    }
    let phi = gauge.phi(radius)?;
    let balls = site_ball_masses(m, radius);
    let indices: Vec<usize> = (0..balls.len()).filter(|&i| balls[i] / phi > t).collect();
    let mut inside = vec![false; balls.len()];
    for &i in &indices {
        inside[i] = true;
    }
    let total = m.total();
    let kept = compensated_sum(indices.iter().map(|&i| m.weight(i)));
    let rest = compensated_sum((0..balls.len()).filter(|&i| !inside[i]).map(|i| m.weight(i)));
    Ok(CarrierReport { threshold: t, radius, indices, mass_fraction: kept / total, complement_fraction: rest / total })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_levels() {
        assert_eq!(level_for_mesh(2.0), 0);
        assert_eq!(level_for_mesh(1.0), 1);
        assert_eq!(level_for_mesh(2f64.sqrt() / 1024.0), 10);
    }

    #[test]
    fn cantor_dust_box_count() {
        match PlaneSet::cantor_dust(2) {
            PlaneSet::Boxes(b) => assert_eq!(b.len(), 16),
            _ => unreachable!(),
        }
    }
}
