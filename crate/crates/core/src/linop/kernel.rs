use super::LinearOps;
use crate::error::Result;
use crate::numerics::{Parity, RadialField};

/// Kernel element of `L` that is singular at the origin and decays like
/// `y^{-(d-2-gamma)}` at infinity:
/// `Gamma = Lambda Q int_y^inf dx / (x^{d-1} (Lambda Q)^2)`,
/// so `Gamma ~ 1 / (d y^{d-1})` near the origin. The origin node holds `+inf`.
///
/// The integral beyond the grid is closed with the local power law of `Q'`.
pub(super) fn kernel_gamma(ops: &LinearOps) -> Result<RadialField> {
    let gs = &ops.gs;
    let grid = &gs.grid;
    let d = gs.d as f64;
    let gamma = gs.consts.gamma;
    let k = integrand(ops);
    let last = grid.len() - 1;
    let lowest = lowest_node(ops);
    let cum = grid.cumulative_power_anchored(&k, -(d + 1.0), last, lowest)?;
    let y_max = grid.y_max();
    let tail = y_max.powf(-d) * k[last] / (d - 2.0 - 2.0 * gamma);
    finish(ops, cum.iter().map(|c| tail - c).collect(), lowest)
}

/// The same kernel direction normalized by a base point at 1 instead of at
/// infinity: `-Lambda Q int_1^y dx / (x^{d-1} (Lambda Q)^2)`, which vanishes at
/// `y = 1`. It differs from [`kernel_gamma`] by a multiple of `Lambda Q`.
pub(super) fn kernel_gamma_based(ops: &LinearOps) -> Result<RadialField> {
    let gs = &ops.gs;
    let grid = &gs.grid;
    let d = gs.d as f64;
    let k = integrand(ops);
    let anchor = grid.nearest(1.0);
    let lowest = lowest_node(ops);
    let cum = grid.cumulative_power_anchored(&k, -(d + 1.0), anchor, lowest)?;
    let y_anchor = grid.nodes()[anchor];
    let shift = if y_anchor < 1.0 {
        grid.integrate_power(&k, -(d + 1.0), y_anchor, 1.0)?
    } else {
        -grid.integrate_power(&k, -(d + 1.0), 1.0, y_anchor)?
    };
    finish(ops, cum.iter().map(|c| shift - c).collect(), lowest)
}

// 1 / (x^{d-1} (x Q')^2) = x^{-(d+1)} / Q'^2
fn integrand(ops: &LinearOps) -> Vec<f64> {
    ops.gs.dq.values.iter().map(|q| 1.0 / (q * q)).collect()
}

fn lowest_node(ops: &LinearOps) -> usize {
    if ops.gs.grid.nodes()[0] == 0.0 {
        1
    } else {
        0
    }
}

fn finish(ops: &LinearOps, integral: Vec<f64>, lowest: usize) -> Result<RadialField> {
    let vals = integral
        .iter()
        .zip(&ops.gs.lam_q.values)
        .enumerate()
        .map(|(i, (c, l))| if i < lowest { f64::INFINITY } else { l * c })
        .collect();
    RadialField::new(ops.gs.grid.clone(), vals, Parity::None)
}
