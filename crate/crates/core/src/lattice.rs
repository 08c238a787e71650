//! Lattice approximations of planar domains and the concentric frame around a root.
//!
//! Distances are `ℓ∞` throughout. A domain `D` is discretized at scale `N` as
//! the set of `x ∈ Z²` with `dist(x/N, Dᶜ) > 1/N`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `Z²`, `(x, y)`.
pub type Site = (i64, i64);

const NONE: u32 = u32::MAX;

/// Open axis-aligned box `(x0, x0 + w) × (y0, y0 + h)` in continuum coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, w: f64, h: f64) -> Self {
        Rect { x0, y0, w, h }
    }

    pub fn unit_square() -> Self {
        Rect::new(0.0, 0.0, 1.0, 1.0)
    }

    fn x1(&self) -> f64 {
        self.x0 + self.w
    }

    fn y1(&self) -> f64 {
        self.y0 + self.h
    }
}

/// Continuum domain descriptor.
///
/// A `PolyominoUnion` is the interior of the union of the closed boxes, so
/// seams between touching boxes belong to the domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    Rectangle(Rect),
    PolyominoUnion(Vec<Rect>),
}

impl Shape {
    fn validate(&self) -> Result<()> {
        let boxes: &[Rect] = match self {
            Shape::Rectangle(r) => std::slice::from_ref(r),
            Shape::PolyominoUnion(b) => b,
        };
        if boxes.is_empty() {
            return Err(Error::invalid("shape has no boxes"));
        }
        for b in boxes {
            let finite = [b.x0, b.y0, b.w, b.h].iter().all(|v| v.is_finite());
            if !finite || b.w <= 0.0 || b.h <= 0.0 {
                return Err(Error::invalid(format!("degenerate box {b:?}")));
            }
        }
        Ok(())
    }

    /// Bounding box `[x0, x1] × [y0, y1]`.
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        match self {
            Shape::Rectangle(r) => (r.x0, r.x1(), r.y0, r.y1()),
            Shape::PolyominoUnion(b) => b.iter().fold(
                (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
                |acc, r| (acc.0.min(r.x0), acc.1.max(r.x1()), acc.2.min(r.y0), acc.3.max(r.y1())),
            ),
        }
    }

    /// Shift by a continuum vector.
    pub fn translated(&self, dx: f64, dy: f64) -> Shape {
        let shift = |r: &Rect| Rect::new(r.x0 + dx, r.y0 + dy, r.w, r.h);
        match self {
            Shape::Rectangle(r) => Shape::Rectangle(shift(r)),
            Shape::PolyominoUnion(b) => Shape::PolyominoUnion(b.iter().map(shift).collect()),
        }
    }
}

/// `ℓ∞` distance from a point to the complement of a shape, everything
/// pre-multiplied by `scale`.
struct ComplementDistance {
    bounds: (f64, f64, f64, f64),
    // closed cells of the bounding box that are not covered by any box
    holes: Vec<(f64, f64, f64, f64)>,
}

impl ComplementDistance {
    fn new(shape: &Shape, scale: f64) -> Self {
        let (bx0, bx1, by0, by1) = shape.bounds();
        let bounds = (bx0 * scale, bx1 * scale, by0 * scale, by1 * scale);
        let mut holes = Vec::new();
        if let Shape::PolyominoUnion(boxes) = shape {
            let mut xs: Vec<f64> = boxes.iter().flat_map(|b| [b.x0, b.x1()]).collect();
            let mut ys: Vec<f64> = boxes.iter().flat_map(|b| [b.y0, b.y1()]).collect();
            for v in [&mut xs, &mut ys] {
                v.sort_by(f64::total_cmp);
                v.dedup();
            }
            for wx in xs.windows(2) {
                for wy in ys.windows(2) {
                    let (cx, cy) = (0.5 * (wx[0] + wx[1]), 0.5 * (wy[0] + wy[1]));
                    let covered = boxes
                        .iter()
                        .any(|b| b.x0 <= cx && cx <= b.x1() && b.y0 <= cy && cy <= b.y1());
                    if !covered {
                        holes.push((wx[0] * scale, wx[1] * scale, wy[0] * scale, wy[1] * scale));
                    }
                }
            }
        }
        ComplementDistance { bounds, holes }
    }

    fn at(&self, px: f64, py: f64) -> f64 {
        let (x0, x1, y0, y1) = self.bounds;
        let mut d = (px - x0).min(x1 - px).min(py - y0).min(y1 - py).max(0.0);
        for &(a, b, c, e) in &self.holes {
            let dx = (a - px).max(px - b).max(0.0);
            let dy = (c - py).max(py - e).max(0.0);
            d = d.min(dx.max(dy));
        }
        d
    }
}

/// A finite subset of `Z²` with constant-time lookup over its bounding box.
///
/// Sites are stored in row-major order (sorted by `y`, then `x`), so a full
/// rectangle is laid out exactly like a dense row-major grid.
#[derive(Debug, Clone)]
pub struct SiteSet {
    sites: Vec<Site>,
    x_min: i64,
    y_min: i64,
    width: usize,
    height: usize,
    lookup: Vec<u32>,
}

impl SiteSet {
    pub fn from_sites(mut sites: Vec<Site>) -> Self {
        sites.sort_by_key(|&(x, y)| (y, x));
        sites.dedup();
        if sites.is_empty() {
            return SiteSet { sites, x_min: 0, y_min: 0, width: 0, height: 0, lookup: Vec::new() };
        }
        let x_min = sites.iter().map(|s| s.0).min().unwrap();
        let x_max = sites.iter().map(|s| s.0).max().unwrap();
        let y_min = sites[0].1;
        let y_max = sites[sites.len() - 1].1;
        let width = (x_max - x_min + 1) as usize;
        let height = (y_max - y_min + 1) as usize;
        let mut lookup = vec![NONE; width * height];
        for (i, &(x, y)) in sites.iter().enumerate() {
            lookup[(y - y_min) as usize * width + (x - x_min) as usize] = i as u32;
        }
        SiteSet { sites, x_min, y_min, width, height, lookup }
    }

    /// All sites with `|x - cx| ≤ half` and `|y - cy| ≤ half`.
    pub fn square(center: Site, half: i64) -> Self {
        let mut sites = Vec::with_capacity(((2 * half + 1) * (2 * half + 1)) as usize);
        for y in center.1 - half..=center.1 + half {
            for x in center.0 - half..=center.0 + half {
                sites.push((x, y));
            }
        }
        SiteSet::from_sites(sites)
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    pub fn index_of(&self, (x, y): Site) -> Option<usize> {
        let dx = x - self.x_min;
        let dy = y - self.y_min;
        if dx < 0 || dy < 0 || dx as usize >= self.width || dy as usize >= self.height {
            return None;
        }
        match self.lookup[dy as usize * self.width + dx as usize] {
            NONE => None,
            i => Some(i as usize),
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index_of(s).is_some()
    }

    /// `(x_min, y_min, width, height)` of the bounding box.
    pub fn bbox(&self) -> (i64, i64, usize, usize) {
        (self.x_min, self.y_min, self.width, self.height)
    }

    /// True when the set fills its bounding box.
    pub fn is_full_box(&self) -> bool {
        !self.is_empty() && self.len() == self.width * self.height
    }

    /// Lattice neighbours of site `i` that belong to the set.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        let (x, y) = self.sites[i];
        [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)]
            .into_iter()
            .filter_map(move |s| self.index_of(s))
    }

    /// Sites outside the set that have a lattice neighbour inside it.
    pub fn outer_boundary(&self) -> Vec<Site> {
        let mut out = Vec::new();
        for &(x, y) in &self.sites {
            for s in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if !self.contains(s) {
                    out.push(s);
                }
            }
        }
        out.sort_by_key(|&(x, y)| (y, x));
        out.dedup();
        out
    }

    /// Chessboard distance from each site to the nearest lattice point outside the set.
    pub fn distance_to_complement(&self) -> Vec<u32> {
        // padded grid so that the complement ring is explicit
        let (w, h) = (self.width + 2, self.height + 2);
        let mut d = vec![0u32; w * h];
        let big = u32::MAX / 2;
        for &(x, y) in &self.sites {
            d[(y - self.y_min + 1) as usize * w + (x - self.x_min + 1) as usize] = big;
        }
        for r in 1..h {
            for c in 0..w {
                let i = r * w + c;
                if d[i] == 0 {
                    continue;
                }
                let mut best = d[i].min(d[i - w] + 1);
                if c > 0 {
                    best = best.min(d[i - 1] + 1).min(d[i - w - 1] + 1);
                }
                if c + 1 < w {
                    best = best.min(d[i - w + 1] + 1);
                }
                d[i] = best;
            }
        }
        for r in (0..h - 1).rev() {
            for c in (0..w).rev() {
                let i = r * w + c;
                if d[i] == 0 {
                    continue;
                }
                let mut best = d[i].min(d[i + w] + 1);
                if c + 1 < w {
                    best = best.min(d[i + 1] + 1).min(d[i + w + 1] + 1);
                }
                if c > 0 {
                    best = best.min(d[i + w - 1] + 1);
                }
                d[i] = best;
            }
        }
        self.sites
            .iter()
            .map(|&(x, y)| d[(y - self.y_min + 1) as usize * w + (x - self.x_min + 1) as usize])
            .collect()
    }
}

/// The lattice approximation `D_N` of a continuum shape at scale `N`.
#[derive(Debug, Clone)]
pub struct LatticeDomain {
    shape: Shape,
    scale: u32,
    sites: SiteSet,
    boundary: Vec<Site>,
}

/// `D_N = {x ∈ Z² : dist(x/N, Dᶜ) > 1/N}`.
pub fn discretize(shape: &Shape, scale: u32) -> Result<LatticeDomain> {
    shape.validate()?;
    if scale == 0 {
        return Err(Error::invalid("scale N must be at least 1"));
    }
    let n = scale as f64;
    let dist = ComplementDistance::new(shape, n);
    let (x0, x1, y0, y1) = shape.bounds();
    let (xa, xb) = ((x0 * n).floor() as i64, (x1 * n).ceil() as i64);
    let (ya, yb) = ((y0 * n).floor() as i64, (y1 * n).ceil() as i64);
    let mut sites = Vec::new();
    for y in ya..=yb {
        for x in xa..=xb {
            // comparison in units of 1/N: dist(x, N·Dᶜ) > 1
            if dist.at(x as f64, y as f64) > 1.0 {
                sites.push((x, y));
            }
        }
    }
    if sites.is_empty() {
        return Err(Error::EmptyDomain);
    }
    let sites = SiteSet::from_sites(sites);
    let boundary = sites.outer_boundary();
    Ok(LatticeDomain { shape: shape.clone(), scale, sites, boundary })
}

impl LatticeDomain {
    /// Wraps an explicit site set (used for sub-domains such as the boxes `Δ^k`).
    pub fn from_site_set(sites: SiteSet, scale: u32) -> Result<Self> {
        if sites.is_empty() {
            return Err(Error::EmptyDomain);
        }
        let (x, y, w, h) = sites.bbox();
        let n = scale as f64;
        let shape = Shape::Rectangle(Rect::new(x as f64 / n, y as f64 / n, w as f64 / n, h as f64 / n));
        let boundary = sites.outer_boundary();
        Ok(LatticeDomain { shape, scale, sites, boundary })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    /// The scale parameter `N`.
    pub fn scale(&self) -> u32 {
        self.scale
    }

    pub fn sites(&self) -> &SiteSet {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn boundary(&self) -> &[Site] {
        &self.boundary
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        self.sites.index_of(s)
    }

    /// Site closest to the centre of the bounding box.
    pub fn center_site(&self) -> Site {
        let (x, y, w, h) = self.sites.bbox();
        let c = (x + (w as i64 - 1) / 2, y + (h as i64 - 1) / 2);
        if self.sites.contains(c) {
            return c;
        }
        *self
            .sites
            .sites()
            .iter()
            .min_by_key(|s| (s.0 - c.0).abs().max((s.1 - c.1).abs()))
            .unwrap()
    }

    /// `(width, height)` when the site set is a full rectangle.
    pub fn rectangle_dims(&self) -> Option<(usize, usize)> {
        self.sites.is_full_box().then(|| {
            let (_, _, w, h) = self.sites.bbox();
            (w, h)
        })
    }
}

/// `D_N^δ = {x ∈ D_N : dist(x, Z² \ D_N) > δN}`.
pub fn delta_interior(dom: &LatticeDomain, delta: f64) -> Vec<Site> {
    let threshold = delta * dom.scale() as f64;
    let d = dom.sites().distance_to_complement();
    dom.sites()
        .sites()
        .iter()
        .zip(d)
        .filter(|&(_, d)| d as f64 > threshold)
        .map(|(s, _)| *s)
        .collect()
}

/// `κ(δ) = inf{k ∈ ℕ : e^{-k} < δ}`.
pub fn kappa(delta: f64) -> u32 {
    let mut k = 0u32;
    while (-(k as f64)).exp() >= delta {
        k += 1;
    }
    k
}

/// `n = inf{k ∈ ℕ : N e^{-κ-k} < 1}`.
pub fn frame_depth(scale: u32, kappa: u32) -> u32 {
    let mut k = 0u32;
    while scale as f64 * (-((kappa + k) as f64)).exp() >= 1.0 {
        k += 1;
    }
    k
}

/// Concentric boxes `Δ^0 = D_N ⊇ Δ^1 ⊇ … ⊇ Δ^n = {x₀}` around a root.
///
/// `Δ^k = {x : dist(x₀, x) < N e^{-κ(δ)-k}}` for `1 ≤ k < n`; as a lattice set
/// this is the square of half-width `⌈N e^{-κ-k}⌉ - 1`.
#[derive(Debug, Clone)]
pub struct ConcentricFrame {
    root: Site,
    delta: f64,
    kappa: u32,
    depth: u32,
    scale: u32,
    // half_widths[k] for k = 1..=n (index 0 unused, Δ^0 is the whole domain)
    half_widths: Vec<i64>,
    // annulus index of every domain site, in domain order
    annulus_of: Vec<u32>,
    annulus_sizes: Vec<usize>,
}

pub fn build_frame(dom: &LatticeDomain, root: Site, delta: f64) -> Result<ConcentricFrame> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0,1), got {delta}")));
    }
    let root_index = dom.index_of(root).ok_or(Error::RootTooClose { root })?;
    let dist = dom.sites().distance_to_complement();
    if dist[root_index] as f64 <= delta * dom.scale() as f64 {
        return Err(Error::RootTooClose { root });
    }
    let kappa = kappa(delta);
    let depth = frame_depth(dom.scale(), kappa);
    if depth == 0 {
        return Err(Error::invalid("scale too small for a concentric frame"));
    }
    let n = dom.scale() as f64;
    let mut half_widths = vec![i64::MAX; depth as usize + 1];
    for k in 1..depth {
        let radius = n * (-((kappa + k) as f64)).exp();
        half_widths[k as usize] = radius.ceil() as i64 - 1;
    }
    half_widths[depth as usize] = 0;

    let mut annulus_sizes = vec![0usize; depth as usize + 1];
    let annulus_of = dom
        .sites()
        .sites()
        .iter()
        .map(|&(x, y)| {
            let d = (x - root.0).abs().max((y - root.1).abs());
            // largest k with d ≤ half_widths[k]
            let mut k = 0usize;
            while k < depth as usize && d <= half_widths[k + 1] {
                k += 1;
            }
            annulus_sizes[k] += 1;
            k as u32
        })
        .collect();

    Ok(ConcentricFrame {
        root,
        delta,
        kappa,
        depth,
        scale: dom.scale(),
        half_widths,
        annulus_of,
        annulus_sizes,
    })
}

impl ConcentricFrame {
    pub fn root(&self) -> Site {
        self.root
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn kappa(&self) -> u32 {
        self.kappa
    }

    /// The depth `n`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// Half-width of the box `Δ^k`, `1 ≤ k ≤ n`.
    pub fn half_width(&self, k: u32) -> i64 {
        assert!(k >= 1 && k <= self.depth, "box index {k} outside 1..={}", self.depth);
        self.half_widths[k as usize]
    }

    /// The lattice box `Δ^k` for `1 ≤ k ≤ n`.
    pub fn inner_box(&self, k: u32) -> SiteSet {
        SiteSet::square(self.root, self.half_width(k))
    }

    /// Annulus index (`k` such that the site lies in `Δ^k \ Δ^{k+1}`) of domain site `i`.
    pub fn annulus_of(&self, i: usize) -> u32 {
        self.annulus_of[i]
    }

    pub fn annulus_size(&self, k: u32) -> usize {
        self.annulus_sizes[k as usize]
    }

    /// Domain indices of the sites in `Δ^k \ Δ^{k+1}`.
    pub fn annulus_indices(&self, k: u32) -> impl Iterator<Item = usize> + '_ {
        self.annulus_of.iter().enumerate().filter(move |(_, &a)| a == k).map(|(i, _)| i)
    }

    /// CSV rows `x,y,annulus_index` for every site of the domain.
    pub fn to_csv(&self, dom: &LatticeDomain) -> String {
        let mut out = String::from("x,y,annulus_index\n");
        for (i, &(x, y)) in dom.sites().sites().iter().enumerate() {
            let _ = writeln!(out, "{x},{y},{}", self.annulus_of[i]);
        }
        out
    }
}
