//! Linear solves with the Dirichlet random-walk generator `A = I - P` on a site set.
//!
//! `(A u)(x) = u(x) - ¼ Σ_{y~x, y∈V} u(y)`. `A` is symmetric positive definite
//! and `A⁻¹` is the Green function `G^V`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lattice::SiteSet;

/// Below this many unknowns solves go through a dense Cholesky factorization.
pub const DIRECT_SOLVE_LIMIT: usize = 5000;
/// Relative residual targeted by the iterative solver.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

const NO_NEIGHBOR: u32 = u32::MAX;

/// Matrix-free `I - P` with precomputed neighbour lists.
pub struct Generator {
    neighbors: Vec<[u32; 4]>,
}

impl Generator {
    pub fn new(sites: &SiteSet) -> Self {
        let neighbors = (0..sites.len())
            .map(|i| {
                let mut nb = [NO_NEIGHBOR; 4];
                for (slot, j) in nb.iter_mut().zip(sites.neighbors(i)) {
                    *slot = j as u32;
                }
                nb
            })
            .collect();
        Generator { neighbors }
    }

    pub fn len(&self) -> usize {
        self.neighbors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighbors.is_empty()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) {
        for (i, nb) in self.neighbors.iter().enumerate() {
            let mut s = 0.0;
            for &j in nb {
                if j != NO_NEIGHBOR {
                    s += u[j as usize];
                }
            }
            out[i] = u[i] - 0.25 * s;
        }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.len();
        let mut a = DMatrix::<f64>::identity(n, n);
        for (i, nb) in self.neighbors.iter().enumerate() {
            for &j in nb {
                if j != NO_NEIGHBOR {
                    a[(i, j as usize)] = -0.25;
                }
            }
        }
        a
    }

    /// Relative residual `‖b - A u‖ / ‖b‖`.
    pub fn residual(&self, u: &[f64], b: &[f64]) -> f64 {
        let mut au = vec![0.0; u.len()];
        self.apply(u, &mut au);
        let r: f64 = au.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nb == 0.0 {
            r
        } else {
            r / nb
        }
    }

    /// Solves `A u = b` with conjugate gradients.
    pub fn solve_cg(&self, b: &[f64], tolerance: f64) -> Result<Vec<f64>> {
        let n = self.len();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut u = vec![0.0; n];
        if nb == 0.0 {
            return Ok(u);
        }
        let mut r = b.to_vec();
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr: f64 = r.iter().map(|x| x * x).sum();
        let max_iter = 20 * n + 100;
        for it in 0..max_iter {
            if rr.sqrt() <= tolerance * nb {
                return Ok(u);
            }
            self.apply(&p, &mut ap);
            let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
            let step = rr / pap;
            for i in 0..n {
                u[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            let rr_new: f64 = r.iter().map(|x| x * x).sum();
            // recompute the true residual now and then to avoid drift
            if it % 500 == 499 {
                self.apply(&u, &mut ap);
                for i in 0..n {
                    r[i] = b[i] - ap[i];
                }
            }
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..n {
                p[i] = r[i] + beta * p[i];
            }
        }
        let residual = self.residual(&u, b);
        if residual <= tolerance {
            Ok(u)
        } else {
            Err(Error::SolverFailure { residual, tolerance, iterations: max_iter })
        }
    }

    /// Solves `A u = b` with a dense Cholesky factorization.
    pub fn solve_dense(&self, b: &[f64]) -> Result<Vec<f64>> {
        let chol = self.dense().cholesky().ok_or(Error::SolverFailure {
            residual: f64::NAN,
            tolerance: SOLVE_TOLERANCE,
            iterations: 0,
        })?;
        let u = chol.solve(&DVector::from_column_slice(b));
        Ok(u.as_slice().to_vec())
    }
}

/// Solves `A u = b` on `sites`: banded Cholesky below [`DIRECT_SOLVE_LIMIT`]
/// unknowns, conjugate gradients above.
pub fn solve(sites: &SiteSet, b: &[f64]) -> Result<Vec<f64>> {
    if sites.len() <= DIRECT_SOLVE_LIMIT {
        let mut u = b.to_vec();
        BandCholesky::factor(sites)?.solve(&mut u);
        return Ok(u);
    }
    Generator::new(sites).solve_cg(b, SOLVE_TOLERANCE)
}

/// Cholesky factor `A = L Lᵀ` stored by lower band.
///
/// Sites in row-major order give `A` a bandwidth equal to the row width, so
/// factoring costs `O(n b²)` and each solve `O(n b)`.
pub struct BandCholesky {
    n: usize,
    band: usize,
    // row i holds L[i][i - band ..= i], left-padded with zeros
    rows: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(sites: &SiteSet) -> Result<Self> {
        let n = sites.len();
        let band = (0..n).flat_map(|i| sites.neighbors(i).map(move |j| i.abs_diff(j))).max().unwrap_or(0);
        let w = band + 1;
        let mut rows = vec![0.0; n * w];
        // A[i][j] for j ≤ i: diagonal 1, neighbours -1/4
        for i in 0..n {
            rows[i * w + band] = 1.0;
            for j in sites.neighbors(i) {
                if j < i {
                    rows[i * w + band - (i - j)] = -0.25;
                }
            }
        }
        for i in 0..n {
            let lo = i.saturating_sub(band);
            for j in lo..=i {
                let kmin = lo.max(j.saturating_sub(band));
                let mut s = rows[i * w + band - (i - j)];
                for k in kmin..j {
                    s -= rows[i * w + band - (i - k)] * rows[j * w + band - (j - k)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::SolverFailure { residual: s, tolerance: 0.0, iterations: i });
                    }
                    rows[i * w + band] = s.sqrt();
                } else {
                    rows[i * w + band - (i - j)] = s / rows[j * w + band];
                }
            }
        }
        Ok(BandCholesky { n, band, rows })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn l(&self, i: usize, j: usize) -> f64 {
        self.rows[i * (self.band + 1) + self.band - (i - j)]
    }

    /// Solves `L y = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        for i in 0..self.n {
            let mut s = b[i];
            for k in i.saturating_sub(self.band)..i {
                s -= self.l(i, k) * b[k];
            }
            b[i] = s / self.l(i, i);
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let w = self.band + 1;
        for i in (0..self.n).rev() {
            let x = b[i] / self.l(i, i);
            b[i] = x;
            // subtract column i of Lᵀ, i.e. row entries L[i][k] for k < i
            let lo = i.saturating_sub(self.band);
            let row = &self.rows[i * w..(i + 1) * w];
            for k in lo..i {
                b[k] -= row[self.band - (i - k)] * x;
            }
        }
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        self.forward(b);
        self.backward(b);
    }
}

/// Value at `target` of the harmonic extension into `sites` of `boundary_value`,
/// which is queried on the outer boundary of `sites`.
pub fn harmonic_extension_at(
    sites: &SiteSet,
    target: usize,
    boundary_value: impl Fn((i64, i64)) -> f64,
) -> Result<f64> {
    let mut rhs = vec![0.0; sites.len()];
    for (i, &(x, y)) in sites.sites().iter().enumerate() {
        for s in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
            if !sites.contains(s) {
                rhs[i] += 0.25 * boundary_value(s);
            }
        }
    }
    Ok(solve(sites, &rhs)?[target])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_and_direct_agree() {
        let sites = SiteSet::square((0, 0), 6);
        let g = Generator::new(&sites);
        let b: Vec<f64> = (0..sites.len()).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let dense = g.solve_dense(&b).unwrap();
        let band = solve(&sites, &b).unwrap();
        let cg = g.solve_cg(&b, 1e-12).unwrap();
        for ((a, c), d) in dense.iter().zip(&cg).zip(&band) {
            assert!((a - c).abs() < 1e-9);
            assert!((a - d).abs() < 1e-12);
        }
        assert!(g.residual(&cg, &b) < 1e-12);
    }

    #[test]
    fn band_factor_reproduces_generator_on_l_shape() {
        let mut pts = Vec::new();
        for y in 0..6 {
            for x in 0..6 {
                if x < 3 || y < 3 {
                    pts.push((x, y));
                }
            }
        }
        let sites = SiteSet::from_sites(pts);
        let g = Generator::new(&sites);
        let chol = BandCholesky::factor(&sites).unwrap();
        let b: Vec<f64> = (0..sites.len()).map(|i| (i as f64 * 0.37).cos()).collect();
        let mut x = b.clone();
        chol.solve(&mut x);
        assert!(g.residual(&x, &b) < 1e-13);
    }

    #[test]
    fn constant_boundary_data_extends_to_constant() {
        let sites = SiteSet::square((3, -2), 4);
        let centre = sites.index_of((3, -2)).unwrap();
        let v = harmonic_extension_at(&sites, centre, |_| 2.5).unwrap();
        assert!((v - 2.5).abs() < 1e-12);
    }
}
