//! Structured cell-centered grids in 1 or 2 dimensions with homogeneous
//! Neumann boundaries realized through mirror ghost cells.
//!
//! The zero-flux condition is built into the operators rather than into ghost
//! storage: a mirror ghost makes the gradient across every boundary face
//! exactly zero, so boundary faces simply carry zero flux. This keeps the
//! discrete mass balance exact (the volume-weighted sum of any divergence of
//! interior fluxes telescopes to zero).

/// Uniform cell-centered box grid. 1D grids store `ny = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    dim: usize,
    n: [usize; 2],
    len: [f64; 2],
    h: [f64; 2],
}

impl Grid {
    /// 1D grid with `nx` cells on `[0, length]`.
    pub fn line(nx: usize, length: f64) -> Grid {
        assert!(nx > 0, "grid needs at least one cell");
        assert!(length > 0.0 && length.is_finite(), "domain length must be positive");
        Grid {
            dim: 1,
            n: [nx, 1],
            len: [length, 0.0],
            h: [length / nx as f64, 0.0],
        }
    }

    /// 2D grid with `nx * ny` cells on `[0, lx] x [0, ly]`.
    pub fn rect(nx: usize, ny: usize, lx: f64, ly: f64) -> Grid {
        assert!(nx > 0 && ny > 0, "grid needs at least one cell per axis");
        assert!(lx > 0.0 && lx.is_finite() && ly > 0.0 && ly.is_finite());
        Grid {
            dim: 2,
            n: [nx, ny],
            len: [lx, ly],
            h: [lx / nx as f64, ly / ny as f64],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells along `axis`.
    pub fn n(&self, axis: usize) -> usize {
        assert!(axis < self.dim, "axis {} out of range for dim {}", axis, self.dim);
        self.n[axis]
    }

    pub fn length(&self, axis: usize) -> f64 {
        assert!(axis < self.dim, "axis {} out of range for dim {}", axis, self.dim);
        self.len[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        assert!(axis < self.dim, "axis {} out of range for dim {}", axis, self.dim);
        self.h[axis]
    }

    /// Total cell count.
    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn cell_volume(&self) -> f64 {
        if self.dim == 1 {
            self.h[0]
        } else {
            self.h[0] * self.h[1]
        }
    }

    /// |Omega|.
    pub fn domain_volume(&self) -> f64 {
        self.cell_volume() * self.cells() as f64
    }

    /// Flat index of cell `(i, j)`; `j = 0` in 1D.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.n[0] && j < self.n[1]);
        j * self.n[0] + i
    }

    /// Coordinate of the k-th cell center along `axis`.
    #[inline]
    pub fn center(&self, axis: usize, k: usize) -> f64 {
        (k as f64 + 0.5) * self.h[axis]
    }

    /// Number of faces normal to `axis` (interior + boundary).
    pub fn face_count(&self, axis: usize) -> usize {
        assert!(axis < self.dim, "axis {} out of range for dim {}", axis, self.dim);
        match axis {
            0 => (self.n[0] + 1) * self.n[1],
            _ => self.n[0] * (self.n[1] + 1),
        }
    }
}

/// One scalar per cell (density `u`, signal `v`, tissue `w`, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct CellField {
    values: Vec<f64>,
}

impl CellField {
    pub fn constant(grid: &Grid, value: f64) -> CellField {
        assert!(value.is_finite());
        CellField { values: vec![value; grid.cells()] }
    }

    pub fn zeros(grid: &Grid) -> CellField {
        CellField { values: vec![0.0; grid.cells()] }
    }

    /// Sample `f(x, y)` at cell centers (`y = 0` in 1D).
    pub fn from_fn(grid: &Grid, mut f: impl FnMut(f64, f64) -> f64) -> CellField {
        let mut values = Vec::with_capacity(grid.cells());
        for j in 0..grid.n[1] {
            let y = if grid.dim == 2 { grid.center(1, j) } else { 0.0 };
            for i in 0..grid.n[0] {
                let v = f(grid.center(0, i), y);
                assert!(v.is_finite(), "initial field sample is not finite");
                values.push(v);
            }
        }
        CellField { values }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> CellField {
        assert_eq!(values.len(), grid.cells(), "field length does not match grid");
        CellField { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One scalar per face normal to `axis`. Boundary faces are stored explicitly
/// and are zero for every operator in this module.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceField {
    axis: usize,
    values: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid, axis: usize) -> FaceField {
        FaceField { axis, values: vec![0.0; grid.face_count(axis)] }
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Flat index of the face left of cell `(i, j)` along this field's axis;
    /// `i` (resp. `j`) may equal `nx` (resp. `ny`) to address the last face.
    #[inline]
    pub fn fidx(&self, grid: &Grid, i: usize, j: usize) -> usize {
        match self.axis {
            0 => j * (grid.n[0] + 1) + i,
            _ => j * grid.n[0] + i,
        }
    }
}

/// Two-point gradient at faces normal to `axis`; boundary faces are zero
/// (mirror ghost), which is exactly the homogeneous Neumann condition.
///
/// Panics if `axis >= grid.dim()` or the field does not match the grid.
pub fn face_gradient(grid: &Grid, f: &CellField, axis: usize) -> FaceField {
    assert!(axis < grid.dim(), "axis {} out of range for dim {}", axis, grid.dim());
    assert_eq!(f.len(), grid.cells(), "field length does not match grid");
    let mut out = FaceField::zeros(grid, axis);
    let (nx, ny) = (grid.n[0], grid.n[1]);
    let h = grid.h[axis];
    let vals = f.values();
    match axis {
        0 => {
            for j in 0..ny {
                for i in 1..nx {
                    let g = (vals[grid.idx(i, j)] - vals[grid.idx(i - 1, j)]) / h;
                    let k = j * (nx + 1) + i;
                    out.values[k] = g;
                }
            }
        }
        _ => {
            for j in 1..ny {
                for i in 0..nx {
                    let g = (vals[grid.idx(i, j)] - vals[grid.idx(i, j - 1)]) / h;
                    out.values[j * nx + i] = g;
                }
            }
        }
    }
    out
}

/// Conservative divergence: cell value is the sum over axes of
/// `(flux_right - flux_left) / h`. With zero boundary faces the
/// volume-weighted cell sum telescopes to zero exactly.
///
/// Panics on a missing axis or shape mismatch.
pub fn divergence(grid: &Grid, fluxes: &[FaceField]) -> CellField {
    assert_eq!(fluxes.len(), grid.dim(), "one flux array per axis required");
    let mut out = CellField::zeros(grid);
    let (nx, ny) = (grid.n[0], grid.n[1]);
    for flux in fluxes {
        assert_eq!(
            flux.values.len(),
            grid.face_count(flux.axis),
            "flux shape does not match grid"
        );
        let h = grid.h[flux.axis];
        match flux.axis {
            0 => {
                for j in 0..ny {
                    for i in 0..nx {
                        let fl = flux.values[j * (nx + 1) + i];
                        let fr = flux.values[j * (nx + 1) + i + 1];
                        out.values[grid.idx(i, j)] += (fr - fl) / h;
                    }
                }
            }
            _ => {
                for j in 0..ny {
                    for i in 0..nx {
                        let fl = flux.values[j * nx + i];
                        let fr = flux.values[(j + 1) * nx + i];
                        out.values[grid.idx(i, j)] += (fr - fl) / h;
                    }
                }
            }
        }
    }
    out
}

/// Mirror-ghost Laplacian, defined as `divergence(face_gradient(f))` over all
/// axes so the compositional identity holds bit for bit.
pub fn laplacian(grid: &Grid, f: &CellField) -> CellField {
    let grads: Vec<FaceField> = (0..grid.dim()).map(|a| face_gradient(grid, f, a)).collect();
    divergence(grid, &grads)
}
