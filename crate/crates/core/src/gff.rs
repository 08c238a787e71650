//! Dirichlet Green functions and discrete Gaussian free field samplers.
//!
//! The Green function `G^V = (I − P)^{-1}` counts expected visits of simple
//! random walk killed on leaving `V`, so `G^V(x,x) ≈ g log N` with `g = 2/π`.

use std::io::{self, Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dst::{generator_eigenvalue, Dst2};
use crate::error::{Error, Result};
use crate::lattice::{LatticeDomain, Site};
use crate::linalg::{self, BandCholesky, Generator};
use crate::rng;

/// Largest site count for which a dense Green matrix is built by default.
pub const DEFAULT_DENSE_CAP: usize = 20_000;

/// Eigen-decomposition of the generator on a full `width × height` rectangle.
pub struct Spectral {
    width: usize,
    height: usize,
    dst: Dst2,
    // eigenvalues μ_{jl} in row-major (l, j) order, matching the grid layout
    eigenvalues: Vec<f64>,
}

impl Spectral {
    pub fn new(width: usize, height: usize) -> Self {
        let mut eigenvalues = Vec::with_capacity(width * height);
        for l in 1..=height {
            for j in 1..=width {
                eigenvalues.push(generator_eigenvalue(width, height, j, l));
            }
        }
        Spectral { width, height, dst: Dst2::new(width, height), eigenvalues }
    }

    /// `G v` in `O(V log V)`.
    pub fn apply_green(&self, v: &mut [f64]) {
        self.dst.transform(v);
        for (c, mu) in v.iter_mut().zip(&self.eigenvalues) {
            *c /= mu;
        }
        self.dst.transform(v);
    }

    /// Overwrites `z` (i.i.d. standard normals) with a field of covariance `G`.
    pub fn color(&self, z: &mut [f64]) {
        for (c, mu) in z.iter_mut().zip(&self.eigenvalues) {
            *c /= mu.sqrt();
        }
        self.dst.transform(z);
    }

    /// Adjoint of `color`: `w ↦ Λ^{-1/2} Φ w`, so `⟨w, color(z)⟩ = ⟨color_adjoint(w), z⟩`.
    pub fn color_adjoint(&self, w: &mut [f64]) {
        self.dst.transform(w);
        for (c, mu) in w.iter_mut().zip(&self.eigenvalues) {
            *c /= mu.sqrt();
        }
    }

    /// `G(x, y)` by direct summation over modes, `O(V)`.
    pub fn entry(&self, x: (usize, usize), y: (usize, usize)) -> f64 {
        let (w, h) = (self.width, self.height);
        let ex: Vec<f64> = (1..=w).map(|j| crate::dst::basis(w, j, x.0 + 1) * crate::dst::basis(w, j, y.0 + 1)).collect();
        let ey: Vec<f64> = (1..=h).map(|l| crate::dst::basis(h, l, x.1 + 1) * crate::dst::basis(h, l, y.1 + 1)).collect();
        let mut s = 0.0;
        for (l, b) in ey.iter().enumerate() {
            let row = &self.eigenvalues[l * w..(l + 1) * w];
            for (a, mu) in ex.iter().zip(row) {
                s += a * b / mu;
            }
        }
        s
    }
}

pub enum GreenRepr {
    Dense(DMatrix<f64>),
    Factored(Generator),
    Spectral(Spectral),
}

/// The Green function `G^V` of a lattice domain in one of three representations.
pub struct GreenOperator {
    domain: Arc<LatticeDomain>,
    repr: GreenRepr,
}

impl GreenOperator {
    /// Dense `G = A^{-1}`, refused above `cap` sites.
    pub fn dense(domain: Arc<LatticeDomain>, cap: usize) -> Result<Self> {
        let n = domain.len();
        if n > cap {
            return Err(Error::CapExceeded { sites: n, cap });
        }
        let generator = Generator::new(domain.sites());
        let chol = generator.dense().cholesky().ok_or(Error::SolverFailure {
            residual: f64::NAN,
            tolerance: linalg::SOLVE_TOLERANCE,
            iterations: 0,
        })?;
        Ok(GreenOperator { domain, repr: GreenRepr::Dense(chol.inverse()) })
    }

    /// Matrix-free: every column is one Dirichlet solve.
    pub fn factored(domain: Arc<LatticeDomain>) -> Self {
        let generator = Generator::new(domain.sites());
        GreenOperator { domain, repr: GreenRepr::Factored(generator) }
    }

    /// Diagonalized by the sine basis; rectangles only.
    pub fn spectral(domain: Arc<LatticeDomain>) -> Result<Self> {
        let (w, h) = domain.rectangle_dims().ok_or(Error::NotRectangle)?;
        Ok(GreenOperator { domain, repr: GreenRepr::Spectral(Spectral::new(w, h)) })
    }

    pub fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    pub fn repr(&self) -> &GreenRepr {
        &self.repr
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }

    fn grid_coords(&self, i: usize) -> (usize, usize) {
        let (x0, y0, _, _) = self.domain.sites().bbox();
        let (x, y) = self.domain.sites().site(i);
        ((x - x0) as usize, (y - y0) as usize)
    }

    /// `G(·, y)` as a vector over the domain sites.
    pub fn column(&self, y: usize) -> Result<Vec<f64>> {
        self.check_index(y)?;
        match &self.repr {
            GreenRepr::Dense(g) => Ok(g.column(y).iter().copied().collect()),
            GreenRepr::Factored(_) => {
                let mut e = vec![0.0; self.len()];
                e[y] = 1.0;
                linalg::solve(self.domain.sites(), &e)
            }
            GreenRepr::Spectral(s) => {
                let mut e = vec![0.0; self.len()];
                e[y] = 1.0;
                s.apply_green(&mut e);
                Ok(e)
            }
        }
    }

    /// `G(x, y)`.
    pub fn entry(&self, x: usize, y: usize) -> Result<f64> {
        self.check_index(x)?;
        self.check_index(y)?;
        match &self.repr {
            GreenRepr::Dense(g) => Ok(g[(x, y)]),
            GreenRepr::Factored(_) => Ok(self.column(y)?[x]),
            GreenRepr::Spectral(s) => Ok(s.entry(self.grid_coords(x), self.grid_coords(y))),
        }
    }

    pub fn entry_at(&self, x: Site, y: Site) -> Result<f64> {
        let i = self.domain.index_of(x).ok_or_else(|| Error::invalid(format!("{x:?} not in domain")))?;
        let j = self.domain.index_of(y).ok_or_else(|| Error::invalid(format!("{y:?} not in domain")))?;
        self.entry(i, j)
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::IndexRange { index: i, lo: 0, hi: self.len().saturating_sub(1) });
        }
        Ok(())
    }

    /// Largest `|(I − P) G(·, y) − 1_y|` entry of column `y`.
    pub fn row_identity_residual(&self, y: usize) -> Result<f64> {
        let col = self.column(y)?;
        let generator = Generator::new(self.domain.sites());
        let mut out = vec![0.0; col.len()];
        generator.apply(&col, &mut out);
        out[y] -= 1.0;
        Ok(out.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }
}

/// Picks the spectral representation for rectangles, dense below the default
/// cap and matrix-free otherwise.
pub fn green(domain: Arc<LatticeDomain>) -> Result<GreenOperator> {
    if domain.rectangle_dims().is_some() {
        return GreenOperator::spectral(domain);
    }
    if domain.len() <= DEFAULT_DENSE_CAP {
        return GreenOperator::dense(domain, DEFAULT_DENSE_CAP);
    }
    Ok(GreenOperator::factored(domain))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SamplerKind {
    Exact,
    Spectral,
    Injected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Conditioning {
    None,
    RootValue { root: Site, a: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub sampler: SamplerKind,
    pub conditioning: Conditioning,
}

/// One realization of the field on a lattice domain.
#[derive(Debug, Clone)]
pub struct FieldSample {
    pub domain: Arc<LatticeDomain>,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl FieldSample {
    /// Wraps hand-made values, e.g. constant fields in tests.
    pub fn injected(domain: Arc<LatticeDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::invalid(format!("{} values for {} sites", values.len(), domain.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field values must be finite"));
        }
        let provenance = Provenance { seed: 0, sampler: SamplerKind::Injected, conditioning: Conditioning::None };
        Ok(FieldSample { domain, values, provenance })
    }

    /// `h(x)`, with the Dirichlet value 0 off the domain.
    pub fn at(&self, s: Site) -> f64 {
        self.domain.index_of(s).map_or(0.0, |i| self.values[i])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn to_csv(&self) -> String {
        use std::fmt::Write as _;
        let mut out = String::from("x,y,h\n");
        for (&(x, y), v) in self.domain.sites().sites().iter().zip(&self.values) {
            let _ = writeln!(out, "{x},{y},{v:e}");
        }
        out
    }

    /// Binary grid: eight little-endian 64-bit header words (magic, version,
    /// N, width, height, root x, root y, seed) followed by the bounding-box grid
    /// of `f64` values in row-major order, NaN off the domain. Root
    /// coordinates are two's-complement; an unconditioned field stores the
    /// bounding-box origin there.
    pub fn write_binary(&self, mut w: impl Write) -> io::Result<()> {
        let (x0, y0, width, height) = self.domain.sites().bbox();
        let root = match self.provenance.conditioning {
            Conditioning::RootValue { root, .. } => root,
            Conditioning::None => (x0, y0),
        };
        let header = [
            FIELD_MAGIC,
            FIELD_VERSION,
            self.domain.scale() as u64,
            width as u64,
            height as u64,
            root.0 as u64,
            root.1 as u64,
            self.provenance.seed,
        ];
        for word in header {
            w.write_all(&word.to_le_bytes())?;
        }
        let mut grid = vec![f64::NAN; width * height];
        for (&(x, y), &v) in self.domain.sites().sites().iter().zip(&self.values) {
            grid[(y - y0) as usize * width + (x - x0) as usize] = v;
        }
        for v in grid {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

pub const FIELD_MAGIC: u64 = u64::from_le_bytes(*b"CLQGFLD\0");
pub const FIELD_VERSION: u64 = 1;

/// Contents of a binary field file.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub scale: u64,
    pub width: usize,
    pub height: usize,
    pub root: Site,
    pub seed: u64,
    pub values: Vec<f64>,
}

pub fn read_binary(mut r: impl Read) -> io::Result<FieldGrid> {
    let mut word = [0u8; 8];
    let mut header = [0u64; 8];
    for h in header.iter_mut() {
        r.read_exact(&mut word)?;
        *h = u64::from_le_bytes(word);
    }
    if header[0] != FIELD_MAGIC || header[1] != FIELD_VERSION {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "not a field file"));
    }
    let (width, height) = (header[3] as usize, header[4] as usize);
    let mut values = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        r.read_exact(&mut word)?;
        values.push(f64::from_le_bytes(word));
    }
    Ok(FieldGrid {
        scale: header[2],
        width,
        height,
        root: (header[5] as i64, header[6] as i64),
        seed: header[7],
        values,
    })
}

fn normals(rng: &mut rng::Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// A centred Gaussian law on a lattice domain with covariance `G^V`.
pub trait FieldLaw: Send + Sync {
    fn domain(&self) -> &Arc<LatticeDomain>;
    fn sample(&self, seed: u64) -> FieldSample;
    /// `G(·, root)`.
    fn green_column(&self, root: usize) -> Result<Vec<f64>>;
}

/// `h = L^{-T} z` where `I − P = L Lᵀ`, so `Cov h = (I − P)^{-1} = G`.
pub struct ExactSampler {
    domain: Arc<LatticeDomain>,
    factor: BandCholesky,
}

impl ExactSampler {
    pub fn new(domain: Arc<LatticeDomain>) -> Result<Self> {
        let factor = BandCholesky::factor(domain.sites())?;
        Ok(ExactSampler { domain, factor })
    }
}

impl FieldLaw for ExactSampler {
    fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    fn sample(&self, seed: u64) -> FieldSample {
        let mut rng = rng::seeded(seed);
        let mut values = normals(&mut rng, self.domain.len());
        self.factor.backward(&mut values);
        FieldSample {
            domain: self.domain.clone(),
            values,
            provenance: Provenance { seed, sampler: SamplerKind::Exact, conditioning: Conditioning::None },
        }
    }

    fn green_column(&self, root: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.domain.len()];
        e[root] = 1.0;
        self.factor.solve(&mut e);
        Ok(e)
    }
}

/// `h = Σ μ^{-1/2} z_{jl} e_{jl}` on a rectangle.
pub struct SpectralSampler {
    domain: Arc<LatticeDomain>,
    spectral: Spectral,
}

impl SpectralSampler {
    pub fn new(domain: Arc<LatticeDomain>) -> Result<Self> {
        let (w, h) = domain.rectangle_dims().ok_or(Error::NotRectangle)?;
        Ok(SpectralSampler { domain, spectral: Spectral::new(w, h) })
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spectral
    }

    /// The white noise that `sample(seed)` colors.
    pub fn noise(&self, seed: u64) -> Vec<f64> {
        normals(&mut rng::seeded(seed), self.domain.len())
    }
}

impl FieldLaw for SpectralSampler {
    fn domain(&self) -> &Arc<LatticeDomain> {
        &self.domain
    }

    fn sample(&self, seed: u64) -> FieldSample {
        let mut values = self.noise(seed);
        self.spectral.color(&mut values);
        FieldSample {
            domain: self.domain.clone(),
            values,
            provenance: Provenance { seed, sampler: SamplerKind::Spectral, conditioning: Conditioning::None },
        }
    }

    fn green_column(&self, root: usize) -> Result<Vec<f64>> {
        let mut e = vec![0.0; self.domain.len()];
        e[root] = 1.0;
        self.spectral.apply_green(&mut e);
        Ok(e)
    }
}

/// Samples from `law` and pins the root through the Green column:
/// `h + (a − h(root)) G(·,root)/G(root,root)`.
pub struct RootConditioner {
    root: Site,
    root_index: usize,
    // G(·,root)/G(root,root)
    profile: Vec<f64>,
}

impl RootConditioner {
    pub fn new(law: &dyn FieldLaw, root: Site) -> Result<Self> {
        let root_index = law.domain().index_of(root).ok_or(Error::RootTooClose { root })?;
        let col = law.green_column(root_index)?;
        let d = col[root_index];
        let profile = col.iter().map(|c| c / d).collect();
        Ok(RootConditioner { root, root_index, profile })
    }

    pub fn root(&self) -> Site {
        self.root
    }

    pub fn root_index(&self) -> usize {
        self.root_index
    }

    pub fn pin(&self, mut field: FieldSample, a: f64) -> FieldSample {
        let shift = a - field.values[self.root_index];
        for (v, p) in field.values.iter_mut().zip(&self.profile) {
            *v += shift * p;
        }
        field.values[self.root_index] = a;
        field.provenance.conditioning = Conditioning::RootValue { root: self.root, a };
        field
    }
}

/// One draw of the field conditioned on `h(root) = a`.
pub fn condition_root(law: &dyn FieldLaw, root: Site, a: f64, seed: u64) -> Result<FieldSample> {
    let c = RootConditioner::new(law, root)?;
    Ok(c.pin(law.sample(seed), a))
}

/// True iff `max h ≤ cap`.
pub fn filter_max(field: &FieldSample, cap: f64) -> bool {
    field.values.iter().all(|&v| v <= cap)
}
