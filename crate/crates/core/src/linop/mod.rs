//! Linearized operators around the stationary profile.
//!
//! `A f = -f' + (V/y) f`, `A* f = y^{1-d} (y^{d-1} f)' + (V/y) f`,
//! `L = A* A` and `L~ = A A*`. The first order system operator is
//! `H (p1, p2) = (-p2, L p1)` with adjoint `H* (p1, p2) = (L p2, -p1)`.
//!
//! Singular coefficients are rewritten so every term is regular at the origin:
//! `L f = -f'' - (d-1) (f/y)' - 2(d-1) (sin Q / y)^2 f`.

mod inequalities;
mod kernel;
mod phi;

pub use inequalities::{coercivity_check, hardy_check, random_test_functions, CoercivityOp, HardyReport, HardyVariant};
pub use phi::{build_phi_m, PhiM};

use crate::error::{Error, Result};
use crate::ground_state::GroundState;
use crate::numerics::{Parity, RadialField};
use std::sync::Arc;

/// Pair of radial fields, the phase space of the first order system.
#[derive(Debug, Clone)]
pub struct RadialPair {
    pub first: RadialField,
    pub second: RadialField,
}

impl RadialPair {
    pub fn new(first: RadialField, second: RadialField) -> Result<Self> {
        if !first.same_grid(&second) {
            return Err(Error::Contract("pair components live on different grids".into()));
        }
        Ok(RadialPair { first, second })
    }
    pub fn first_only(f: RadialField) -> Self {
        let z = RadialField::zeros(&f.grid, f.parity);
        RadialPair { first: f, second: z }
    }
    pub fn second_only(f: RadialField) -> Self {
        let z = RadialField::zeros(&f.grid, f.parity);
        RadialPair { first: z, second: f }
    }
    pub fn add(&self, o: &RadialPair) -> RadialPair {
        RadialPair { first: self.first.add(&o.first), second: self.second.add(&o.second) }
    }
    pub fn sub(&self, o: &RadialPair) -> RadialPair {
        RadialPair { first: self.first.sub(&o.first), second: self.second.sub(&o.second) }
    }
    pub fn scale(&self, c: f64) -> RadialPair {
        RadialPair { first: self.first.scale(c), second: self.second.scale(c) }
    }
    pub fn axpy(&self, c: f64, o: &RadialPair) -> RadialPair {
        RadialPair { first: self.first.axpy(c, &o.first), second: self.second.axpy(c, &o.second) }
    }
    pub fn neg(&self) -> RadialPair {
        self.scale(-1.0)
    }
    pub fn sup_on(&self, a: f64, b: f64) -> f64 {
        self.first.sup_on(a, b).max(self.second.sup_on(a, b))
    }
}

/// The operator family attached to one stationary profile.
#[derive(Debug, Clone)]
pub struct LinearOps {
    pub gs: Arc<GroundState>,
    z_tilde: RadialField,
}

impl LinearOps {
    pub fn new(gs: Arc<GroundState>) -> Self {
        let dm2 = (gs.d - 2) as f64;
        let z_tilde = RadialField::new(
            gs.grid.clone(),
            gs.v.values.iter().zip(&gs.lam_v.values).map(|(v, lv)| (v + 1.0) * (v + 1.0) + dm2 * (v + 1.0) - lv).collect(),
            Parity::Even,
        )
        .expect("grid sizes agree");
        LinearOps { gs, z_tilde }
    }

    fn dm1(&self) -> f64 {
        (self.gs.d - 1) as f64
    }

    fn check(&self, f: &RadialField) -> Result<()> {
        if !Arc::ptr_eq(&f.grid, &self.gs.grid) {
            return Err(Error::Contract("field is not on the ground state grid".into()));
        }
        Ok(())
    }

    /// `A f = -f' + V (f / y)`.
    pub fn apply_a(&self, f: &RadialField) -> Result<RadialField> {
        self.check(f)?;
        let fy = f.div_y()?;
        let mut out = f.deriv(1)?.scale(-1.0).add(&self.gs.v.mul(&fy));
        out.parity = f.parity.flip();
        Ok(out)
    }

    /// `A* g = g' + (d - 1 + V) (g / y)`.
    pub fn apply_a_star(&self, g: &RadialField) -> Result<RadialField> {
        self.check(g)?;
        let gy = g.div_y()?;
        let coef = self.gs.v.map(|v| v + self.dm1());
        let mut out = g.deriv(1)?.add(&coef.mul(&gy));
        out.parity = g.parity.flip();
        Ok(out)
    }

    /// `L f = -f'' - (d-1)/y f' + Z/y^2 f` in regular form.
    pub fn apply_l(&self, f: &RadialField) -> Result<RadialField> {
        self.check(f)?;
        let d2 = f.deriv(2)?;
        let fy = f.div_y()?.deriv(1)?;
        let dm1 = self.dm1();
        let vals = (0..f.values.len())
            .map(|i| -d2.values[i] - dm1 * fy.values[i] - 2.0 * dm1 * self.gs.sin_q_over_y_sq.values[i] * f.values[i])
            .collect();
        RadialField::new(f.grid.clone(), vals, f.parity)
    }

    /// Pointwise size of the three terms of `L f`, used to make residuals relative.
    pub fn l_term_scale(&self, f: &RadialField) -> Result<RadialField> {
        let d1 = f.deriv(1)?;
        let d2 = f.deriv(2)?;
        let dm1 = self.dm1();
        let vals = self
            .gs
            .grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                if y == 0.0 {
                    return d1.values[i].abs();
                }
                d2.values[i].abs() + (dm1 * d1.values[i] / y).abs() + (self.gs.z.values[i] * f.values[i] / (y * y)).abs()
            })
            .collect();
        RadialField::new(f.grid.clone(), vals, Parity::None)
    }

    /// `L~ g = -g'' - (d-1)/y g' + Z~/y^2 g` with `Z~ = (V+1)^2 + (d-2)(V+1) - Lambda V`.
    pub fn apply_l_tilde(&self, g: &RadialField) -> Result<RadialField> {
        self.check(g)?;
        let d1 = g.deriv(1)?;
        let d1y = d1.div_y()?;
        let gyy = g.div_y()?.div_y()?;
        let d2 = g.deriv(2)?;
        let dm1 = self.dm1();
        let vals = (0..g.values.len())
            .map(|i| -d2.values[i] - dm1 * d1y.values[i] + self.z_tilde.values[i] * gyy.values[i])
            .collect();
        RadialField::new(g.grid.clone(), vals, g.parity)
    }

    /// Particular solution of `L w = f` regular at the origin:
    /// `A w = (1 / (y^{d-1} Lambda Q)) int_0^y f Lambda Q x^{d-1} dx` and
    /// `w = -Lambda Q int_0^y (A w / Lambda Q) dx`.
    ///
    /// `w` has no `Lambda Q` component at the origin: for odd `f` it starts at `y^3`.
    pub fn invert_l(&self, f: &RadialField) -> Result<RadialField> {
        self.check(f)?;
        if !f.is_finite() {
            return Err(Error::Numerical("invert_l received non-finite data".into()));
        }
        let grid = &self.gs.grid;
        let lam_q = &self.gs.lam_q.values;
        let dq = &self.gs.dq.values;
        let d = self.gs.d as i32;
        let g: Vec<f64> = f.values.iter().zip(lam_q).map(|(a, b)| a * b).collect();
        let inner = grid.cumulative_power(&g, (d - 1) as f64, 0)?;
        // A w = I / (y^d Q')
        let aw: Vec<f64> = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &y)| if y == 0.0 { 0.0 } else { inner[i] / (y.powi(d) * dq[i]) })
            .collect();
        let aw_parity = f.parity.flip();
        // A w / Lambda Q = (A w / y) / Q'
        let awy = grid.div_by_y(&aw, aw_parity)?;
        let ratio: Vec<f64> = awy.iter().zip(dq).map(|(a, b)| a / b).collect();
        let outer = grid.cumulative_power(&ratio, 0.0, 0)?;
        let w: Vec<f64> = outer.iter().zip(lam_q).map(|(o, l)| -o * l).collect();
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("invert_l produced non-finite values".into()));
        }
        RadialField::new(grid.clone(), w, f.parity)
    }

    /// The second kernel element, see [`kernel::kernel_gamma`].
    pub fn kernel_gamma(&self) -> Result<RadialField> {
        kernel::kernel_gamma(self)
    }

    /// Kernel direction normalized to vanish at `y = 1`, see [`kernel::kernel_gamma_based`].
    pub fn kernel_gamma_based(&self) -> Result<RadialField> {
        kernel::kernel_gamma_based(self)
    }

    pub fn apply_h(&self, p: &RadialPair) -> Result<RadialPair> {
        Ok(RadialPair { first: p.second.scale(-1.0), second: self.apply_l(&p.first)? })
    }
    pub fn apply_h_inv(&self, p: &RadialPair) -> Result<RadialPair> {
        Ok(RadialPair { first: self.invert_l(&p.second)?, second: p.first.scale(-1.0) })
    }
    pub fn apply_h_star(&self, p: &RadialPair) -> Result<RadialPair> {
        Ok(RadialPair { first: self.apply_l(&p.second)?, second: p.first.scale(-1.0) })
    }

    /// `L^k f`.
    pub fn apply_l_power(&self, f: &RadialField, k: usize) -> Result<RadialField> {
        let mut out = f.clone();
        for _ in 0..k {
            out = self.apply_l(&out)?;
        }
        Ok(out)
    }

    /// `H^n p` from the closed form: `H^{2k} = (-1)^k diag(L^k, L^k)` and
    /// `H^{2k+1} = (-1)^k [[0, -L^k], [L^{k+1}, 0]]`.
    pub fn apply_h_power(&self, p: &RadialPair, n: usize) -> Result<RadialPair> {
        let k = n / 2;
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 0 {
            Ok(RadialPair { first: self.apply_l_power(&p.first, k)?.scale(s), second: self.apply_l_power(&p.second, k)?.scale(s) })
        } else {
            Ok(RadialPair {
                first: self.apply_l_power(&p.second, k)?.scale(-s),
                second: self.apply_l_power(&p.first, k + 1)?.scale(s),
            })
        }
    }

    /// `H*^n p`: `H*^{2k} = (-1)^k diag(L^k, L^k)` and
    /// `H*^{2k+1} = (-1)^k [[0, L^{k+1}], [-L^k, 0]]`.
    pub fn apply_h_star_power(&self, p: &RadialPair, n: usize) -> Result<RadialPair> {
        let k = n / 2;
        let s = if k % 2 == 0 { 1.0 } else { -1.0 };
        if n % 2 == 0 {
            Ok(RadialPair { first: self.apply_l_power(&p.first, k)?.scale(s), second: self.apply_l_power(&p.second, k)?.scale(s) })
        } else {
            Ok(RadialPair {
                first: self.apply_l_power(&p.second, k + 1)?.scale(s),
                second: self.apply_l_power(&p.first, k)?.scale(-s),
            })
        }
    }

    /// `<u, v> = int (u1 v1 + u2 v2) y^{d-1} dy`.
    pub fn inner(&self, u: &RadialPair, v: &RadialPair) -> f64 {
        inner_scalar(&u.first, &v.first) + inner_scalar(&u.second, &v.second)
    }

    /// `phi_0 = Lambda Q`, `phi_{k+1} = -L^{-1} phi_k` for `k < count`.
    pub fn phi_chain(&self, count: usize) -> Result<Vec<RadialField>> {
        let mut out = vec![self.gs.lam_q.clone()];
        for k in 0..count {
            let next = self.invert_l(&out[k])?.scale(-1.0);
            out.push(next);
        }
        Ok(out)
    }
}

/// `int u v y^{d-1} dy` over the grid.
pub fn inner_scalar(u: &RadialField, v: &RadialField) -> f64 {
    let prod: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| a * b).collect();
    u.grid.integrate_all(&prod)
}

/// `sup |res| / scale` over nodes in `[a, b]`, skipping nodes where the scale vanishes.
pub fn relative_sup(res: &RadialField, scale: &RadialField, a: f64, b: f64) -> f64 {
    res.values
        .iter()
        .zip(&scale.values)
        .zip(res.grid.nodes())
        .filter(|((_, s), y)| **y >= a && **y <= b && **s > 0.0)
        .map(|((r, s), _)| (r / s).abs())
        .fold(0.0, f64::max)
}
