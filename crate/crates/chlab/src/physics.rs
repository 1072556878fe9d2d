//! Diffusivity laws and flux assembly for the cell equation.
//!
//! The transported flux through a face combines a Fickian part with the
//! diffusivity averaged between the two adjacent cells and a donor-cell
//! upwinded advective part driven by the chemotactic and haptotactic face
//! velocity `chi dv/dn + xi dw/dn`. Donor-cell upwinding keeps the cell
//! density nonnegative under the solver's time-step restriction.

use crate::grid::{CellField, FaceField, Grid};
use std::fmt;

/// Floor applied to `u` when evaluating the singular branch `m < 1` of the
/// regularized law; stands in for the implied regularization near `u = 0`.
pub const U_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffusivityLaw {
    /// `D(u) = C_D u^(m-1)`. Degenerate at `u = 0` for `m > 1`, singular
    /// there for `m < 1` (evaluation at zero is an error in that case).
    Power,
    /// `D_eps(u) = C_D u^(m-1) + eps`, with `u` floored at [`U_FLOOR`] for
    /// `m < 1`. Satisfies `D <= D_eps <= D + 2 eps` and `D_eps >= eps`.
    PowerRegularized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusivitySpec {
    pub law: DiffusivityLaw,
    pub m: f64,
    pub c_d: f64,
    pub epsilon: f64,
}

impl DiffusivitySpec {
    pub fn power(m: f64, c_d: f64) -> DiffusivitySpec {
        DiffusivitySpec { law: DiffusivityLaw::Power, m, c_d, epsilon: 0.0 }
    }

    pub fn power_regularized(m: f64, c_d: f64, epsilon: f64) -> DiffusivitySpec {
        DiffusivitySpec { law: DiffusivityLaw::PowerRegularized, m, c_d, epsilon }
    }

    /// Point diffusivity `D(u)`.
    pub fn eval_d(&self, u: f64) -> Result<f64, PhysicsError> {
        if !(u >= 0.0) {
            return Err(PhysicsError::NegativeDensity { value: u });
        }
        match self.law {
            DiffusivityLaw::Power => {
                if self.m < 1.0 && u == 0.0 {
                    return Err(PhysicsError::SingularAtZero { m: self.m });
                }
                Ok(self.c_d * pow_m1(u, self.m))
            }
            DiffusivityLaw::PowerRegularized => {
                let base = if self.m < 1.0 { u.max(U_FLOOR) } else { u };
                Ok(self.c_d * pow_m1(base, self.m) + self.epsilon)
            }
        }
    }

    /// Primitive `H(s) = integral of D over [0, s]`, in closed form.
    pub fn eval_h(&self, s: f64) -> Result<f64, PhysicsError> {
        if !(s >= 0.0) {
            return Err(PhysicsError::NegativeDensity { value: s });
        }
        let base = self.c_d * s.powf(self.m) / self.m;
        Ok(match self.law {
            DiffusivityLaw::Power => base,
            DiffusivityLaw::PowerRegularized => base + self.epsilon * s,
        })
    }
}

/// `u^(m-1)` with the conventions `D(0) = 0` for `m > 1` and `D(0) = C_D`
/// for `m = 1`; fast paths for the common integer exponents.
#[inline]
fn pow_m1(u: f64, m: f64) -> f64 {
    if m == 1.0 {
        1.0
    } else if m == 2.0 {
        u
    } else if m == 3.0 {
        u * u
    } else {
        u.powf(m - 1.0)
    }
}

/// Chemotactic/haptotactic sensitivities and the logistic rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sensitivities {
    pub chi: f64,
    pub xi: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PhysicsError {
    NegativeDensity { value: f64 },
    SingularAtZero { m: f64 },
}

impl fmt::Display for PhysicsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhysicsError::NegativeDensity { value } => {
                write!(f, "negative density {value} passed to a diffusivity law")
            }
            PhysicsError::SingularAtZero { m } => {
                write!(f, "power law with m = {m} < 1 is singular at u = 0")
            }
        }
    }
}

impl std::error::Error for PhysicsError {}

/// Total face flux of the cell equation,
/// `F = -D_face du/dn + u_upwind (chi dv/dn + xi dw/dn)`,
/// with `D_face` the arithmetic mean of the adjacent cell diffusivities and
/// the donor cell selected by the sign of the advective face velocity.
/// Boundary faces carry zero flux.
pub fn assemble_flux(
    grid: &Grid,
    u: &CellField,
    v: &CellField,
    w: &CellField,
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
) -> Result<Vec<FaceField>, PhysicsError> {
    let mut d_cell = vec![0.0; grid.cells()];
    let mut out: Vec<FaceField> = (0..grid.dim()).map(|a| FaceField::zeros(grid, a)).collect();
    assemble_flux_into(grid, u, v, w, spec, sens, &mut d_cell, &mut out)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble_flux_into(
    grid: &Grid,
    u: &CellField,
    v: &CellField,
    w: &CellField,
    spec: &DiffusivitySpec,
    sens: &Sensitivities,
    d_cell: &mut [f64],
    out: &mut [FaceField],
) -> Result<(), PhysicsError> {
    assert_eq!(u.len(), grid.cells());
    assert_eq!(v.len(), grid.cells());
    assert_eq!(w.len(), grid.cells());
    let uv = u.values();
    let vv = v.values();
    let wv = w.values();
    for (d, &ui) in d_cell.iter_mut().zip(uv.iter()) {
        *d = spec.eval_d(ui)?;
    }
    let nx = grid.n(0);
    let ny = if grid.dim() == 2 { grid.n(1) } else { 1 };
    for flux in out.iter_mut() {
        let axis = flux.axis();
        let h = grid.spacing(axis);
        match axis {
            0 => {
                for j in 0..ny {
                    for i in 1..nx {
                        let l = grid.idx(i - 1, j);
                        let r = grid.idx(i, j);
                        let d_face = 0.5 * (d_cell[l] + d_cell[r]);
                        let diffusive = -d_face * (uv[r] - uv[l]) / h;
                        let vel = sens.chi * (vv[r] - vv[l]) / h + sens.xi * (wv[r] - wv[l]) / h;
                        let donor = if vel >= 0.0 { uv[l] } else { uv[r] };
                        let k = j * (nx + 1) + i;
                        flux.values_mut()[k] = diffusive + donor * vel;
                    }
                }
            }
            _ => {
                for j in 1..ny {
                    for i in 0..nx {
                        let l = grid.idx(i, j - 1);
                        let r = grid.idx(i, j);
                        let d_face = 0.5 * (d_cell[l] + d_cell[r]);
                        let diffusive = -d_face * (uv[r] - uv[l]) / h;
                        let vel = sens.chi * (vv[r] - vv[l]) / h + sens.xi * (wv[r] - wv[l]) / h;
                        let donor = if vel >= 0.0 { uv[l] } else { uv[r] };
                        flux.values_mut()[j * nx + i] = diffusive + donor * vel;
                    }
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{divergence, laplacian};

    #[test]
    fn power_law_point_values() {
        let d = DiffusivitySpec::power(2.0, 1.0);
        assert_eq!(d.eval_d(3.0).unwrap(), 3.0);
        let d = DiffusivitySpec::power(1.0, 2.0);
        assert_eq!(d.eval_d(0.7).unwrap(), 2.0);
        assert_eq!(d.eval_d(0.0).unwrap(), 2.0);
        let d = DiffusivitySpec::power(3.0, 1.0);
        assert_eq!(d.eval_d(0.0).unwrap(), 0.0);
    }

    #[test]
    fn regularized_law_at_zero_stays_in_sandwich() {
        let d = DiffusivitySpec::power_regularized(2.0, 1.0, 0.1);
        let v = d.eval_d(0.0).unwrap();
        assert_eq!(v, 0.1);
        assert!(v >= 0.0 && v <= 0.2); // [D(0), D(0) + 2 eps]
    }

    #[test]
    fn eval_d_errors() {
        let d = DiffusivitySpec::power(0.5, 1.0);
        assert!(matches!(d.eval_d(-1.0), Err(PhysicsError::NegativeDensity { .. })));
        assert!(matches!(d.eval_d(0.0), Err(PhysicsError::SingularAtZero { .. })));
        assert!(d.eval_d(1e-9).is_ok());
    }

    #[test]
    fn sandwich_property_across_u_and_eps() {
        for m in [0.5, 1.0, 1.5, 2.0, 3.0] {
            let plain = DiffusivitySpec::power(m, 1.3);
            for k in 1..=6 {
                let eps = 10f64.powi(-(k as i32));
                let reg = DiffusivitySpec::power_regularized(m, 1.3, eps);
                for &u in &[1e-6, 0.01, 0.3, 1.0, 4.0, 50.0] {
                    let d = plain.eval_d(u).unwrap();
                    let de = reg.eval_d(u).unwrap();
                    assert!(de >= d - 1e-15 && de <= d + 2.0 * eps + 1e-15);
                    assert!(de >= eps);
                }
            }
        }
    }

    #[test]
    fn h_primitive_closed_forms() {
        let d = DiffusivitySpec::power(2.0, 1.0);
        assert!((d.eval_h(2.0).unwrap() - 2.0).abs() < 1e-15); // int_0^2 sigma dsigma
        assert_eq!(d.eval_h(0.0).unwrap(), 0.0);
        let reg = DiffusivitySpec::power_regularized(2.0, 1.0, 0.25);
        for &s in &[0.5, 1.0, 4.0] {
            let diff = reg.eval_h(s).unwrap() - d.eval_h(s).unwrap();
            assert!((diff - 0.25 * s).abs() < 1e-14);
        }
        assert!(d.eval_h(-0.1).is_err());
    }

    #[test]
    fn h_is_increasing_and_convex_for_m_ge_1() {
        for m in [1.0, 1.7, 2.0, 3.0] {
            let spec = DiffusivitySpec::power(m, 0.8);
            let mut prev = 0.0;
            let mut prev_slope = 0.0;
            for k in 1..40 {
                let s = 0.1 * k as f64;
                let h = spec.eval_h(s).unwrap();
                let slope = (h - prev) / 0.1;
                assert!(h > prev);
                assert!(slope >= prev_slope - 1e-12);
                prev = h;
                prev_slope = slope;
            }
            if m > 1.0 {
                // H(s)/s -> 0 as s -> 0
                let mut last = f64::INFINITY;
                for &s in &[1e-2, 1e-4, 1e-6] {
                    let ratio = spec.eval_h(s).unwrap() / s;
                    assert!(ratio < last);
                    last = ratio;
                }
                assert!(last < 1e-3);
            }
        }
    }

    #[test]
    fn constant_fields_give_zero_flux() {
        let g = Grid::rect(5, 4, 2.0, 2.0);
        let u = CellField::constant(&g, 1.2);
        let v = CellField::constant(&g, 0.4);
        let w = CellField::constant(&g, 0.9);
        let spec = DiffusivitySpec::power(2.0, 1.0);
        let sens = Sensitivities { chi: 1.0, xi: 1.0, mu: 0.5 };
        let fluxes = assemble_flux(&g, &u, &v, &w, &spec, &sens).unwrap();
        for f in &fluxes {
            assert!(f.values().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn pure_fickian_flux_on_linear_profile() {
        // chi = xi = 0, m = 1: flux is -C_D * slope at each interior face.
        // Hand evaluation on 4 cells with slope 2.
        let g = Grid::line(4, 4.0); // h = 1
        let u = CellField::from_fn(&g, |x, _| 2.0 * x);
        let zero = CellField::constant(&g, 0.0);
        let spec = DiffusivitySpec::power(1.0, 1.5);
        let sens = Sensitivities { chi: 0.0, xi: 0.0, mu: 0.0 };
        let fluxes = assemble_flux(&g, &u, &zero, &zero, &spec, &sens).unwrap();
        assert_eq!(fluxes[0].values(), &[0.0, -3.0, -3.0, -3.0, 0.0]);
    }

    #[test]
    fn constant_density_advection_has_zero_interior_divergence() {
        // u = 1, v linear with slope g, xi = 0: every interior face carries
        // chi * g; the divergence vanishes away from the boundary.
        let g = Grid::line(8, 8.0);
        let u = CellField::constant(&g, 1.0); // constant u: no Fickian part
        let v = CellField::from_fn(&g, |x, _| 0.3 * x);
        let w = CellField::constant(&g, 1.0);
        let spec = DiffusivitySpec::power(1.0, 1.0);
        let sens = Sensitivities { chi: 2.0, xi: 0.0, mu: 0.0 };
        let fluxes = assemble_flux(&g, &u, &v, &w, &spec, &sens).unwrap();
        for i in 1..8 {
            assert!((fluxes[0].values()[i] - 0.6).abs() < 1e-12);
        }
        let div = divergence(&g, &fluxes);
        for i in 1..7 {
            assert!(div.values()[i].abs() < 1e-12);
        }
    }

    #[test]
    fn flux_is_antisymmetric_under_reflection() {
        let g = Grid::line(6, 3.0);
        let u = CellField::from_fn(&g, |x, _| 1.0 + 0.3 * (x * 1.7).sin());
        let v = CellField::from_fn(&g, |x, _| 0.5 * x * x / 9.0);
        let w = CellField::from_fn(&g, |x, _| 1.0 - 0.1 * x / 3.0);
        let spec = DiffusivitySpec::power(2.0, 0.7);
        let sens = Sensitivities { chi: 1.0, xi: 0.8, mu: 0.0 };
        let reflect = |f: &CellField| {
            CellField::from_values(&g, f.values().iter().rev().copied().collect())
        };
        let fwd = assemble_flux(&g, &u, &v, &w, &spec, &sens).unwrap();
        let bwd = assemble_flux(&g, &reflect(&u), &reflect(&v), &reflect(&w), &spec, &sens)
            .unwrap();
        // Reversing the axis flips the sign convention of every face flux.
        let n = fwd[0].values().len();
        for k in 0..n {
            let a = fwd[0].values()[k];
            let b = -bwd[0].values()[n - 1 - k];
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0), "face {k}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_sensitivities_reduce_to_scaled_laplacian() {
        let g = Grid::rect(6, 5, 3.0, 2.5);
        let u = CellField::from_fn(&g, |x, y| 1.0 + 0.2 * (x + 0.5 * y).sin());
        let zero = CellField::constant(&g, 0.0);
        let sens = Sensitivities { chi: 0.0, xi: 0.0, mu: 1.0 };
        // C_D = 1: the flux is exactly minus the face gradient, so the
        // divergence equals -laplacian bit for bit.
        let spec = DiffusivitySpec::power(1.0, 1.0);
        let fluxes = assemble_flux(&g, &u, &zero, &zero, &spec, &sens).unwrap();
        let div = divergence(&g, &fluxes);
        let lap = laplacian(&g, &u);
        for (a, b) in div.values().iter().zip(lap.values()) {
            assert_eq!(*a, -*b);
        }
        // general constant C_D: equal to rounding
        let spec = DiffusivitySpec::power(1.0, 2.5);
        let fluxes = assemble_flux(&g, &u, &zero, &zero, &spec, &sens).unwrap();
        let div = divergence(&g, &fluxes);
        for (a, b) in div.values().iter().zip(lap.values()) {
            assert!((*a + 2.5 * *b).abs() < 1e-13);
        }
    }

    #[test]
    fn negative_density_is_rejected() {
        let g = Grid::line(3, 1.0);
        let mut u = CellField::constant(&g, 1.0);
        u.values_mut()[1] = -0.5;
        let v = CellField::constant(&g, 0.0);
        let w = CellField::constant(&g, 1.0);
        let spec = DiffusivitySpec::power(2.0, 1.0);
        let sens = Sensitivities { chi: 1.0, xi: 1.0, mu: 0.5 };
        assert!(assemble_flux(&g, &u, &v, &w, &spec, &sens).is_err());
    }
}
