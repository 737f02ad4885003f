//! Uniform P1 meshes of the unit interval (space) and of `(0, T)` (time).
//!
//! Space nodes `x_0 = 0 < x_1 < ... < x_N = 1` carry hat functions; only the
//! interior ones `x_1 .. x_{N-1}` are degrees of freedom (homogeneous
//! Dirichlet data). Time nodes `t_0 = 0 < ... < t_M = T`; `t_0` is dropped
//! because every trial function vanishes at the initial time, so the last
//! basis function is a half hat ending at `T`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpaceMesh {
    pub n_cells: usize,
    pub h: f64,
}

impl SpaceMesh {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::TooFewSpaceCells(n_cells));
        }
        Ok(Self {
            n_cells,
            h: 1.0 / n_cells as f64,
        })
    }

    /// Interior node count, i.e. the dimension of the space factor.
    pub fn dofs(&self) -> usize {
        self.n_cells - 1
    }

    /// Coordinate of mesh node `i` in `0..=n_cells`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n_cells as f64
    }

    /// Coordinate of the interior degree of freedom `j` in `0..dofs()`.
    pub fn dof_coord(&self, j: usize) -> f64 {
        self.node(j + 1)
    }

    /// Value of the hat function of degree of freedom `j` at `x`.
    pub fn basis(&self, j: usize, x: f64) -> f64 {
        let r = 1.0 - ((x - self.dof_coord(j)) / self.h).abs();
        r.max(0.0)
    }

    pub fn basis_deriv(&self, j: usize, x: f64) -> f64 {
        let c = self.dof_coord(j);
        if x > c - self.h && x < c {
            1.0 / self.h
        } else if x > c && x < c + self.h {
            -1.0 / self.h
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeMesh {
    pub m_cells: usize,
    pub final_time: f64,
    pub k: f64,
}

impl TimeMesh {
    pub fn new(m_cells: usize, final_time: f64) -> Result<Self> {
        if m_cells == 0 {
            return Err(Error::NoTimeCells);
        }
        if !(final_time > 0.0 && final_time.is_finite()) {
            return Err(Error::BadFinalTime(final_time));
        }
        Ok(Self {
            m_cells,
            final_time,
            k: final_time / m_cells as f64,
        })
    }

    pub fn dofs(&self) -> usize {
        self.m_cells
    }

    /// Node `t_i` for `i` in `0..=m_cells`; the last node is exactly `T`.
    pub fn node(&self, i: usize) -> f64 {
        if i == self.m_cells {
            self.final_time
        } else {
            self.final_time * i as f64 / self.m_cells as f64
        }
    }

    /// Node of the time degree of freedom `j` in `0..dofs()` (that is `t_{j+1}`).
    pub fn dof_coord(&self, j: usize) -> f64 {
        self.node(j + 1)
    }

    /// Value of basis function `psi_j` at `t`; vanishes at `t = 0` for every `j`.
    pub fn basis(&self, j: usize, t: f64) -> f64 {
        let c = self.dof_coord(j);
        if j + 1 == self.m_cells && t > c {
            return 0.0;
        }
        let r = 1.0 - ((t - c) / self.k).abs();
        r.max(0.0)
    }

    pub fn basis_deriv(&self, j: usize, t: f64) -> f64 {
        let c = self.dof_coord(j);
        let last = j + 1 == self.m_cells;
        if t > c - self.k && t < c {
            1.0 / self.k
        } else if !last && t > c && t < c + self.k {
            -1.0 / self.k
        } else {
            0.0
        }
    }
}

/// Interpolation, inverse and Poincare constants for P1 on uniform meshes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AprioriConstants {
    /// `C_Omega(h) = h / pi`
    pub c_omega: f64,
    /// `C_J(k) = k / pi`
    pub c_j: f64,
    /// `C_inv(h) = sqrt(12) / h`
    pub c_inv: f64,
    /// Poincare constant of `H^1_0(0,1)`, `1 / pi`.
    pub c_p: f64,
}

/// Provenance note attached to reports that use `c_p`.
pub const POINCARE_NOTE: &str =
    "C_p = 1/pi is the optimal Poincare constant of H^1_0(0,1) (first Dirichlet eigenvalue pi^2)";

pub fn apriori_constants(space: &SpaceMesh, time: &TimeMesh) -> AprioriConstants {
    AprioriConstants {
        c_omega: space.h / PI,
        c_j: time.k / PI,
        c_inv: 12f64.sqrt() / space.h,
        c_p: 1.0 / PI,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn space_mesh_examples() {
        let s = SpaceMesh::new(5).unwrap();
        assert_eq!(s.dofs(), 4);
        assert_relative_eq!(s.h, 0.2);
        let s = SpaceMesh::new(2).unwrap();
        assert_eq!(s.dofs(), 1);
        assert_eq!(s.h, 0.5);
        assert_eq!(SpaceMesh::new(1), Err(Error::TooFewSpaceCells(1)));
        assert_eq!(SpaceMesh::new(0), Err(Error::TooFewSpaceCells(0)));
    }

    #[test]
    fn time_mesh_examples() {
        let t = TimeMesh::new(40, 1.0).unwrap();
        assert_eq!(t.dofs(), 40);
        assert_relative_eq!(t.k, 0.025);
        let t = TimeMesh::new(1, 1.0).unwrap();
        assert_eq!(t.k, 1.0);
        assert_eq!(TimeMesh::new(0, 1.0), Err(Error::NoTimeCells));
        assert!(TimeMesh::new(3, 0.0).is_err());
        assert!(TimeMesh::new(3, -1.0).is_err());
        assert!(TimeMesh::new(3, f64::NAN).is_err());
    }

    #[test]
    fn nodes_increase_and_end_at_t() {
        for m in [1, 3, 7, 40, 333] {
            let t = TimeMesh::new(m, 0.7).unwrap();
            assert_eq!(t.node(m), 0.7);
            for i in 0..m {
                assert!(t.node(i) < t.node(i + 1));
            }
        }
        let s = SpaceMesh::new(7).unwrap();
        assert!((s.h * 7.0 - 1.0).abs() <= f64::EPSILON);
        for i in 0..7 {
            assert!(s.node(i) < s.node(i + 1));
        }
    }

    #[test]
    fn time_basis_vanishes_at_zero() {
        let t = TimeMesh::new(4, 2.0).unwrap();
        for j in 0..4 {
            assert_eq!(t.basis(j, 0.0), 0.0);
            assert_relative_eq!(t.basis(j, t.dof_coord(j)), 1.0);
        }
        // last function is a half hat
        assert_eq!(t.basis(3, 2.0), 1.0);
        assert_relative_eq!(t.basis(3, 1.75), 0.5);
    }

    #[test]
    fn apriori_examples() {
        let c = apriori_constants(&SpaceMesh::new(5).unwrap(), &TimeMesh::new(40, 1.0).unwrap());
        assert_relative_eq!(c.c_omega, 0.063662, max_relative = 1e-5);
        assert_relative_eq!(c.c_j, 0.0079577, max_relative = 1e-5);
        assert_relative_eq!(c.c_inv, 17.3205, max_relative = 1e-5);
        assert_relative_eq!(c.c_p, 1.0 / PI);

        let c = apriori_constants(&SpaceMesh::new(20).unwrap(), &TimeMesh::new(400, 1.0).unwrap());
        assert_relative_eq!(c.c_omega, 0.0159155, max_relative = 1e-5);
        assert_relative_eq!(c.c_j, 0.00079577, max_relative = 1e-5);
        assert_relative_eq!(c.c_inv, 69.282, max_relative = 1e-5);
    }

    #[test]
    fn halving_h_scales_constants() {
        let t = TimeMesh::new(10, 1.0).unwrap();
        for n in [2, 3, 5, 10, 20, 64] {
            let a = apriori_constants(&SpaceMesh::new(n).unwrap(), &t);
            let b = apriori_constants(&SpaceMesh::new(2 * n).unwrap(), &t);
            assert_relative_eq!(b.c_omega, a.c_omega / 2.0, max_relative = 1e-15);
            assert_relative_eq!(b.c_inv, a.c_inv * 2.0, max_relative = 1e-15);
            assert_relative_eq!(a.c_omega * a.c_inv, 12f64.sqrt() / PI, max_relative = 1e-14);
        }
    }
}
