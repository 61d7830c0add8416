use faer::sparse::{SparseColMat, Triplet};
use faer::prelude::Solve;
use faer::Col;

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// `-Δ_h` on the interior nodes of a grid function, with Shortley–Weller arms
/// next to the boundary and homogeneous Dirichlet data.
#[derive(Debug, Clone)]
pub struct Laplacian {
    /// Grid node of each unknown.
    pub nodes: Vec<usize>,
    /// Unknown index of each grid node.
    pub unknown: Vec<Option<usize>>,
    pub diag: Vec<f64>,
    /// Off-diagonal couplings `(unknown, coefficient)`; at most four per row.
    pub offdiag: Vec<Vec<(usize, f64)>>,
}

impl Laplacian {
    pub fn assemble(template: &GridFunction) -> Result<Laplacian> {
        let nodes: Vec<usize> = template.interior_nodes().collect();
        if nodes.is_empty() {
            return Err(Error::EmptyRegion("no interior nodes to assemble".into()));
        }
        let mut unknown = vec![None; template.grid.len()];
        for (i, &k) in nodes.iter().enumerate() {
            unknown[k] = Some(i);
        }
        let mut diag = Vec::with_capacity(nodes.len());
        let mut offdiag = Vec::with_capacity(nodes.len());
        for &k in &nodes {
            let arms = template.arms(k);
            let nb = template.grid.neighbors(k);
            let frac = template.fractions[k];
            let mut d = 0.0;
            let mut row = Vec::with_capacity(4);
            for (p, m) in [(0, 1), (2, 3)] {
                let (hp, hm) = (arms[p], arms[m]);
                d += 2.0 / (hp * hm);
                for (dir, own, other) in [(p, hp, hm), (m, hm, hp)] {
                    if frac[dir] < 1.0 {
                        continue;
                    }
                    if let Some(j) = nb[dir].and_then(|n| unknown[n]) {
                        row.push((j, -2.0 / (own * (own + other))));
                    }
                }
            }
            diag.push(d);
            offdiag.push(row);
        }
        Ok(Laplacian {
            nodes,
            unknown,
            diag,
            offdiag,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `y = -Δ_h x` on unknowns.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                self.diag[i] * x[i]
                    + self.offdiag[i]
                        .iter()
                        .map(|&(j, c)| c * x[j])
                        .sum::<f64>()
            })
            .collect()
    }

    /// Sparse matrix of `-Δ_h + diag(shift)`.
    pub fn matrix(&self, shift: Option<&[f64]>) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(5 * self.len());
        for i in 0..self.len() {
            let s = shift.map_or(0.0, |s| s[i]);
            t.push(Triplet::new(i, i, self.diag[i] + s));
            for &(j, c) in &self.offdiag[i] {
                t.push(Triplet::new(i, j, c));
            }
        }
        SparseColMat::try_new_from_triplets(self.len(), self.len(), &t)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))
    }

    /// Solves `(-Δ_h + diag(shift)) x = b` by sparse LU.
    pub fn solve(&self, shift: Option<&[f64]>, b: &[f64]) -> Result<Vec<f64>> {
        let lu = self
            .matrix(shift)?
            .sp_lu()
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let rhs = Col::<f64>::from_fn(b.len(), |i| b[i]);
        let x = lu.solve(&rhs);
        let out: Vec<f64> = (0..b.len()).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular or ill-conditioned system".into()));
        }
        Ok(out)
    }

    /// Unknown vector of a grid function.
    pub fn gather(&self, u: &GridFunction) -> Vec<f64> {
        self.nodes.iter().map(|&k| u.values[k]).collect()
    }

    /// Copies unknowns into `u`, zeroing exterior nodes.
    pub fn scatter(&self, x: &[f64], u: &mut GridFunction) {
        u.values.iter_mut().for_each(|v| *v = 0.0);
        for (i, &k) in self.nodes.iter().enumerate() {
            u.values[k] = x[i];
        }
    }
}

pub(crate) fn max_abs(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Domain;

    #[test]
    fn quadratics_are_differentiated_exactly() {
        // Shortley–Weller is exact on quadratics, boundary arms included
        let d = Domain::disk([0.1, -0.05], 0.9, 10.0, 1.0 / 16.0).unwrap();
        let q = |p: [f64; 2]| 1.0 + 2.0 * p[0] - p[1] + 3.0 * p[0] * p[0] + 0.5 * p[1] * p[1] - p[0] * p[1];
        let t = d.grid_function(1.0 / 16.0).unwrap();
        let lap = Laplacian::assemble(&t).unwrap();
        // the boundary value of q is not zero; put it into the right-hand side
        let x: Vec<f64> = lap.nodes.iter().map(|&k| q(t.grid.point(k))).collect();
        let y = lap.apply(&x);
        for (i, &k) in lap.nodes.iter().enumerate() {
            let p = t.grid.point(k);
            let arms = t.arms(k);
            let mut bnd = 0.0;
            for (p_, m_) in [(0, 1), (2, 3)] {
                for (dir, own, other) in [(p_, arms[p_], arms[m_]), (m_, arms[m_], arms[p_])] {
                    if t.fractions[k][dir] < 1.0 {
                        let e = match dir {
                            0 => [p[0] + own, p[1]],
                            1 => [p[0] - own, p[1]],
                            2 => [p[0], p[1] + own],
                            _ => [p[0], p[1] - own],
                        };
                        bnd += 2.0 / (own * (own + other)) * q(e);
                    }
                }
            }
            assert!((y[i] - bnd + 7.0).abs() < 1e-8, "node {p:?}: {}", y[i] - bnd);
        }
    }

    #[test]
    fn operator_is_an_m_matrix() {
        let d = Domain::annulus([0.0, 0.0], 1.0, 2.0, 0.5, 1.0 / 8.0).unwrap();
        let lap = Laplacian::assemble(&d.grid_function(1.0 / 8.0).unwrap()).unwrap();
        for i in 0..lap.len() {
            let off: f64 = lap.offdiag[i].iter().map(|&(_, c)| c).sum();
            assert!(lap.offdiag[i].iter().all(|&(_, c)| c < 0.0));
            assert!(lap.diag[i] + off >= -1e-9);
        }
        // a positive right-hand side gives a positive solution
        let x = lap.solve(None, &vec![1.0; lap.len()]).unwrap();
        assert!(x.iter().all(|&v| v > 0.0));
        let r = lap.apply(&x);
        assert!(r.iter().all(|&v| (v - 1.0).abs() < 1e-10));
    }
}
