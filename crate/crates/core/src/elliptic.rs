//! The elliptic boundary value problems solved in every iteration and the
//! forward operator built from them.
//!
//! All operators use the five-point Laplacian `Δ_h`:
//!
//! * Poisson with homogeneous Dirichlet data: `Δ_h u = s` at interior nodes, `u = 0` on the boundary;
//! * Laplace with Dirichlet data: `Δ_h v = 0` at interior nodes, `v = r` on the boundary;
//! * Helmholtz-type with homogeneous Neumann data: `(I − Δ_h) w = f` at every node, the
//!   normal derivative closed by mirrored ghost nodes.
//!
//! The Neumann system is scaled row-wise by the trapezoid weights so that it
//! is symmetric; this does not change its solution.

use crate::error::{Error, Result};
use crate::grid::{neumann_trace, BoundaryTrace, Grid, ScalarField};
use crate::linalg::{conjugate_gradient, BandedCholesky, CsrMatrix};

/// Relative residual every solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

/// How linear systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Backend {
    /// Banded Cholesky, factored once per grid and reused for every solve.
    #[default]
    Cholesky,
    /// Jacobi-preconditioned conjugate gradients, capped at `10 n²` iterations.
    ConjugateGradient,
}

#[derive(Debug)]
enum Factor {
    Direct(BandedCholesky),
    Iterative,
}

#[derive(Debug)]
struct System {
    matrix: CsrMatrix,
    factor: Factor,
}

impl System {
    fn new(matrix: CsrMatrix, backend: Backend) -> Result<Self> {
        let factor = match backend {
            Backend::Cholesky => Factor::Direct(BandedCholesky::factor(&matrix)?),
            Backend::ConjugateGradient => Factor::Iterative,
        };
        Ok(System { matrix, factor })
    }

    fn solve(&self, rhs: &[f64], max_iter: usize) -> Result<Vec<f64>> {
        let x = match &self.factor {
            Factor::Direct(chol) => chol.solve(rhs),
            Factor::Iterative => conjugate_gradient(&self.matrix, rhs, SOLVE_TOLERANCE, max_iter)?.0,
        };
        let residual = self.matrix.relative_residual(&x, rhs);
        if !(residual <= SOLVE_TOLERANCE) {
            return Err(Error::SolverFailure { iterations: 0, residual });
        }
        Ok(x)
    }
}

/// Solvers for one grid. Construction assembles (and, for the direct
/// backend, factors) both system matrices; afterwards every solve is a pair
/// of triangular sweeps.
#[derive(Debug)]
pub struct EllipticSolver {
    grid: Grid,
    dirichlet: System,
    neumann: Option<System>,
}

impl EllipticSolver {
    pub fn new(grid: Grid) -> Result<Self> {
        Self::with_backend(grid, Backend::default())
    }

    pub fn with_backend(grid: Grid, backend: Backend) -> Result<Self> {
        Ok(EllipticSolver {
            grid,
            dirichlet: System::new(dirichlet_matrix(&grid), backend)?,
            neumann: Some(System::new(neumann_matrix(&grid), backend)?),
        })
    }

    /// A solver with only the Dirichlet operator, for data generation on
    /// fine grids where the Neumann system is never needed.
    pub fn dirichlet_only(grid: Grid, backend: Backend) -> Result<Self> {
        Ok(EllipticSolver { grid, dirichlet: System::new(dirichlet_matrix(&grid), backend)?, neumann: None })
    }

    #[inline]
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn max_iter(&self) -> usize {
        10 * self.grid.node_count()
    }

    fn check_field(&self, f: &ScalarField, what: &str) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::invalid(format!("{what} lives on a different grid")));
        }
        if !f.is_finite() {
            return Err(Error::invalid(format!("{what} has non-finite values")));
        }
        Ok(())
    }

    fn check_trace(&self, t: &BoundaryTrace, what: &str) -> Result<()> {
        if *t.grid() != self.grid {
            return Err(Error::invalid(format!("{what} lives on a different grid")));
        }
        if t.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("{what} has non-finite values")));
        }
        Ok(())
    }

    /// `Δ_h u = source` inside with `u = boundary` on the boundary.
    pub fn solve_dirichlet(&self, source: &ScalarField, boundary: &BoundaryTrace) -> Result<ScalarField> {
        self.check_field(source, "source")?;
        self.check_trace(boundary, "boundary data")?;
        let g = &self.grid;
        let n = g.n();
        let h2 = g.spacing() * g.spacing();
        let mut u = ScalarField::zeros(*g);
        for (k, (i, j)) in g.boundary_nodes().enumerate() {
            u.set(i, j, boundary.values()[k]);
        }
        // Rows of −Δ_h with boundary neighbours moved to the right-hand side.
        let mut rhs = vec![0.0; g.interior_count()];
        for (m, r) in rhs.iter_mut().enumerate() {
            let (i, j) = g.interior_coords(m);
            let mut b = -source.at(i, j);
            for (a, c) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if g.is_boundary(a, c) {
                    b += u.at(a, c) / h2;
                }
            }
            *r = b;
        }
        let x = self.dirichlet.solve(&rhs, self.max_iter())?;
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                u.set(i, j, x[(j - 1) * (n - 2) + (i - 1)]);
            }
        }
        Ok(u)
    }

    /// `Δ_h u = source` inside, `u = 0` on the boundary.
    pub fn solve_poisson_dirichlet(&self, source: &ScalarField) -> Result<ScalarField> {
        self.solve_dirichlet(source, &BoundaryTrace::zeros(self.grid))
    }

    /// Harmonic extension of `boundary_data`. Applied to a boundary residual
    /// this is the adjoint of the linearized forward map.
    pub fn solve_laplace_dirichlet(&self, boundary_data: &BoundaryTrace) -> Result<ScalarField> {
        self.solve_dirichlet(&ScalarField::zeros(self.grid), boundary_data)
    }

    /// `(I − Δ_h) w = rhs` at all nodes with `∂w/∂ν = 0`.
    pub fn solve_helmholtz_neumann(&self, rhs: &ScalarField) -> Result<ScalarField> {
        self.check_field(rhs, "right-hand side")?;
        let system = self
            .neumann
            .as_ref()
            .ok_or_else(|| Error::invalid("solver was built without the Neumann operator"))?;
        let g = &self.grid;
        let n = g.n();
        let scaled: Vec<f64> =
            (0..g.node_count()).map(|k| {
                let (i, j) = g.coords(k);
                neumann_row_weight(n, i, j) * rhs.values()[k]
            }).collect();
        let x = system.solve(&scaled, self.max_iter())?;
        ScalarField::from_values(*g, x)
    }

    /// `F(z)`: Neumann trace of the potential generated by the density `z`.
    pub fn forward(&self, z: &ScalarField) -> Result<BoundaryTrace> {
        if z.values().iter().any(|v| !(-1e-12..=1.0 + 1e-12).contains(v)) {
            return Err(Error::invalid("material field must take values in [0, 1]"));
        }
        self.forward_linearization(z)
    }

    /// `F′(z)s`. The forward map is linear in the density, so this is the
    /// same solve without the range check on `s`.
    pub fn forward_linearization(&self, s: &ScalarField) -> Result<BoundaryTrace> {
        Ok(neumann_trace(&self.solve_poisson_dirichlet(s)?))
    }

    /// `(I − Δ_h) w` with mirrored ghost nodes, evaluated at every node.
    pub fn apply_helmholtz_neumann(&self, w: &ScalarField) -> ScalarField {
        let g = self.grid;
        let n = g.n();
        let h2 = g.spacing() * g.spacing();
        let mirror = |k: isize| -> usize {
            if k < 0 {
                (-k) as usize
            } else if k as usize >= n {
                2 * (n - 1) - k as usize
            } else {
                k as usize
            }
        };
        let mut out = ScalarField::zeros(g);
        for j in 0..n {
            for i in 0..n {
                let (ii, jj) = (i as isize, j as isize);
                let nb = w.at(mirror(ii - 1), j) + w.at(mirror(ii + 1), j) + w.at(i, mirror(jj - 1)) + w.at(i, mirror(jj + 1));
                out.set(i, j, w.at(i, j) - (nb - 4.0 * w.at(i, j)) / h2);
            }
        }
        out
    }
}

fn neumann_row_weight(n: usize, i: usize, j: usize) -> f64 {
    let edge = |k: usize| if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
    edge(i) * edge(j)
}

/// `−Δ_h` on interior unknowns with Dirichlet rows eliminated.
fn dirichlet_matrix(g: &Grid) -> CsrMatrix {
    let inv_h2 = 1.0 / (g.spacing() * g.spacing());
    let rows = (0..g.interior_count())
        .map(|m| {
            let (i, j) = g.interior_coords(m);
            let mut row = vec![(m, 4.0 * inv_h2)];
            for (a, c) in [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)] {
                if let Some(k) = g.interior_index(a, c) {
                    row.push((k, -inv_h2));
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

/// Trapezoid-weighted `I − Δ_h` with mirrored ghosts on all nodes.
fn neumann_matrix(g: &Grid) -> CsrMatrix {
    let n = g.n();
    let inv_h2 = 1.0 / (g.spacing() * g.spacing());
    let rows = (0..g.node_count())
        .map(|k| {
            let (i, j) = g.coords(k);
            let w = neumann_row_weight(n, i, j);
            let mut row = vec![(k, w * (1.0 + 4.0 * inv_h2))];
            // A missing neighbour on one side doubles the coupling on the other.
            let mut couple = |a: usize, b: usize, factor: f64| row.push((g.index(a, b), -w * factor * inv_h2));
            for (lo, hi, here, along_x) in [(i == 0, i == n - 1, i, true), (j == 0, j == n - 1, j, false)] {
                let at = |p: usize| if along_x { (p, j) } else { (i, p) };
                match (lo, hi) {
                    (true, _) => {
                        let (a, b) = at(here + 1);
                        couple(a, b, 2.0);
                    }
                    (_, true) => {
                        let (a, b) = at(here - 1);
                        couple(a, b, 2.0);
                    }
                    _ => {
                        let (a, b) = at(here - 1);
                        couple(a, b, 1.0);
                        let (a, b) = at(here + 1);
                        couple(a, b, 1.0);
                    }
                }
            }
            row
        })
        .collect();
    CsrMatrix::from_rows(rows)
}

pub fn solve_poisson_dirichlet(grid: Grid, source: &ScalarField) -> Result<ScalarField> {
    EllipticSolver::dirichlet_only(grid, Backend::default())?.solve_poisson_dirichlet(source)
}

pub fn solve_laplace_dirichlet(grid: Grid, boundary_data: &BoundaryTrace) -> Result<ScalarField> {
    EllipticSolver::dirichlet_only(grid, Backend::default())?.solve_laplace_dirichlet(boundary_data)
}

pub fn solve_helmholtz_neumann(grid: Grid, rhs: &ScalarField) -> Result<ScalarField> {
    EllipticSolver::new(grid)?.solve_helmholtz_neumann(rhs)
}

pub fn forward(grid: Grid, z: &ScalarField) -> Result<BoundaryTrace> {
    EllipticSolver::dirichlet_only(grid, Backend::default())?.forward(z)
}

pub fn forward_linearization(grid: Grid, s: &ScalarField) -> Result<BoundaryTrace> {
    EllipticSolver::dirichlet_only(grid, Backend::default())?.forward_linearization(s)
}
