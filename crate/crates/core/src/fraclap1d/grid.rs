use crate::{Error, Result};

/// Uniform partition of the collar (A, B) with the domain (a, b) aligned to
/// nodes. Nodes are `x_i = A + i h`, `i = 0..=m`; the unknowns live on the
/// nodes strictly inside (A, B).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub big_a: f64,
    pub big_b: f64,
    pub h: f64,
    /// number of elements of (A, B)
    pub m: usize,
    /// node index of a
    pub ia: usize,
    /// node index of b
    pub ib: usize,
}

/// Node class of a degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Exterior,
}

impl Grid1D {
    /// Grid with `n_omega` elements in (a, b) and `n_left`, `n_right` elements
    /// in the two collar pieces.
    pub fn from_cells(a: f64, b: f64, n_omega: usize, n_left: usize, n_right: usize) -> Result<Self> {
        if !(b > a) || n_omega == 0 {
            return Err(Error::Invalid(format!("empty domain ({a}, {b})")));
        }
        let h = (b - a) / n_omega as f64;
        let g = Grid1D {
            a,
            b,
            big_a: a - n_left as f64 * h,
            big_b: b + n_right as f64 * h,
            h,
            m: n_left + n_omega + n_right,
            ia: n_left,
            ib: n_left + n_omega,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid for Ω = (a, b) inside Ω̃ = (A, B) with mesh size `h`; all four
    /// points must lie on the lattice.
    pub fn new(a: f64, b: f64, big_a: f64, big_b: f64, h: f64) -> Result<Self> {
        if !(big_a < a && a < b && b < big_b && h > 0.0) {
            return Err(Error::Invalid(format!(
                "need A < a < b < B and h > 0 (A={big_a}, a={a}, b={b}, B={big_b}, h={h})"
            )));
        }
        let cells = |len: f64, what: &str| -> Result<usize> {
            let n = (len / h).round();
            if (n * h - len).abs() > 1e-9 * len.max(1.0) {
                return Err(Error::Invalid(format!("{what} length {len} is not a multiple of h={h}")));
            }
            Ok(n as usize)
        };
        let nl = cells(a - big_a, "left collar")?;
        let no = cells(b - a, "domain")?;
        let nr = cells(big_b - b, "right collar")?;
        let mut g = Self::from_cells(a, b, no, nl, nr)?;
        g.big_a = big_a;
        g.big_b = big_b;
        Ok(g)
    }

    fn validate(&self) -> Result<()> {
        let interior = self.ib - self.ia - 1;
        let exterior = self.ia + (self.m - self.ib);
        if interior < 4 || exterior < 4 || self.ia < 1 || self.ib >= self.m {
            return Err(Error::Invalid(format!(
                "grid needs at least 4 interior and 4 exterior nodes (got {interior}, {exterior})"
            )));
        }
        Ok(())
    }

    /// Coordinate of node `i`, computed from the nearest aligned endpoint.
    pub fn x(&self, i: usize) -> f64 {
        if i <= self.ia {
            self.a - (self.ia - i) as f64 * self.h
        } else {
            self.b - (self.ib as f64 - i as f64) * self.h
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.x(i)).collect()
    }

    /// Number of unknowns (nodes 1..m-1).
    pub fn n_dof(&self) -> usize {
        self.m - 1
    }

    /// Node index of DOF `d`.
    pub fn dof_node(&self, d: usize) -> usize {
        d + 1
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        if node > self.ia && node < self.ib {
            NodeKind::Interior
        } else {
            NodeKind::Exterior
        }
    }

    /// Node indices of Ω.
    pub fn interior_nodes(&self) -> Vec<usize> {
        (self.ia + 1..self.ib).collect()
    }

    /// Exterior DOF nodes: (A, a] ∪ [b, B).
    pub fn exterior_nodes(&self) -> Vec<usize> {
        (1..=self.ia).chain(self.ib..self.m).collect()
    }

    /// Exterior nodes including A and B.
    pub fn exterior_closure_nodes(&self) -> Vec<usize> {
        (0..=self.ia).chain(self.ib..=self.m).collect()
    }

    pub fn element_in_omega(&self, e: usize) -> bool {
        e >= self.ia && e < self.ib
    }

    pub fn exterior_elements(&self) -> Vec<usize> {
        (0..self.ia).chain(self.ib..self.m).collect()
    }

    pub fn omega_elements(&self) -> std::ops::Range<usize> {
        self.ia..self.ib
    }

    /// Index of the element containing `x` (closed on the left), if any.
    pub fn locate(&self, x: f64) -> Option<usize> {
        if x < self.big_a || x > self.big_b {
            return None;
        }
        let e = ((x - self.big_a) / self.h).floor() as isize;
        Some(e.clamp(0, self.m as isize - 1) as usize)
    }
}
