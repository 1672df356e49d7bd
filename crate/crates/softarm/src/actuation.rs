//! Maps normalized per-agent actions to a distributed couple field along the
//! rod through a clamped uniform B-spline basis.

use crate::error::{Error, Result};
use crate::math::Vec3;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActuationParams {
    pub n_agents: usize,
    /// Per-axis torque limits (normal, binormal), N*m.
    pub torque_max: [f64; 2],
    pub spline_degree: usize,
}

impl Default for ActuationParams {
    fn default() -> Self {
        Self {
            n_agents: 6,
            torque_max: [15.0, 15.0],
            spline_degree: 2,
        }
    }
}

impl ActuationParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents < 2 {
            return Err(Error::Config("n_agents must be >= 2".into()));
        }
        if self.n_agents < self.spline_degree + 1 {
            return Err(Error::Config(format!(
                "n_agents ({}) must be >= spline_degree + 1 ({})",
                self.n_agents,
                self.spline_degree + 1
            )));
        }
        if self.torque_max.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::Config("torque_max must be > 0 per axis".into()));
        }
        Ok(())
    }
}

/// B-spline basis sampled at the rod element midpoints.
#[derive(Debug, Clone)]
pub struct SplineBasis {
    pub n_agents: usize,
    pub n_elements: usize,
    pub degree: usize,
    /// Row i = basis function of agent i over element midpoints.
    pub basis_matrix: Vec<Vec<f64>>,
}

/// Clamped uniform knot vector with `n_ctrl` control coefficients.
fn clamped_knots(n_ctrl: usize, degree: usize) -> Vec<f64> {
    let n_knots = n_ctrl + degree + 1;
    let n_interior = n_ctrl - degree; // number of spans
    (0..n_knots)
        .map(|i| {
            if i <= degree {
                0.0
            } else if i >= n_ctrl {
                1.0
            } else {
                (i - degree) as f64 / n_interior as f64
            }
        })
        .collect()
}

fn find_span(knots: &[f64], n_ctrl: usize, degree: usize, u: f64) -> usize {
    if u >= knots[n_ctrl] {
        return n_ctrl - 1;
    }
    let mut lo = degree;
    let mut hi = n_ctrl;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if u < knots[mid] {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    lo
}

/// Nonzero basis values N_{span-degree..=span} at `u` (de Boor triangle).
fn basis_functions(knots: &[f64], span: usize, degree: usize, u: f64) -> Vec<f64> {
    let mut values = vec![0.0; degree + 1];
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    values[0] = 1.0;
    for j in 1..=degree {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom != 0.0 { values[r] / denom } else { 0.0 };
            values[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        values[j] = saved;
    }
    values
}

/// Evaluate all `n_ctrl` clamped B-spline basis functions at `u` in [0, 1].
pub fn eval_basis(n_ctrl: usize, degree: usize, u: f64) -> Vec<f64> {
    let knots = clamped_knots(n_ctrl, degree);
    let span = find_span(&knots, n_ctrl, degree, u);
    let nonzero = basis_functions(&knots, span, degree, u);
    let mut out = vec![0.0; n_ctrl];
    for (offset, v) in nonzero.into_iter().enumerate() {
        out[span - degree + offset] = v;
    }
    out
}

pub fn build_spline_basis(
    n_agents: usize,
    n_elements: usize,
    degree: usize,
) -> Result<SplineBasis> {
    if n_agents < degree + 1 {
        return Err(Error::Config(format!(
            "need at least degree + 1 = {} control coefficients, got {n_agents}",
            degree + 1
        )));
    }
    if n_elements == 0 {
        return Err(Error::Config("n_elements must be > 0".into()));
    }
    let mut basis_matrix = vec![vec![0.0; n_elements]; n_agents];
    for e in 0..n_elements {
        let s = (e as f64 + 0.5) / n_elements as f64;
        let values = eval_basis(n_agents, degree, s);
        for (i, v) in values.into_iter().enumerate() {
            basis_matrix[i][e] = v;
        }
    }
    Ok(SplineBasis {
        n_agents,
        n_elements,
        degree,
        basis_matrix,
    })
}

/// Rod node index that supplies p_i, v_i for agent i: agents are spread
/// evenly from base to tip.
pub fn agent_node_indices(n_agents: usize, n_elements: usize) -> Vec<usize> {
    (0..n_agents)
        .map(|i| {
            let raw = (i as f64 * n_elements as f64 / (n_agents as f64 - 1.0)).round() as usize;
            raw.min(n_elements)
        })
        .collect()
}

/// Convert joint actions in [-1, 1]^{N x 2} to per-element material-frame
/// couples about (d1, d2). Out-of-range values are clamped; the number of
/// clamped entries is returned alongside the field.
pub fn actions_to_torque_field(
    actions: &[[f64; 2]],
    basis: &SplineBasis,
    params: &ActuationParams,
) -> Result<(Vec<Vec3>, usize)> {
    if actions.len() != basis.n_agents {
        return Err(Error::Input(format!(
            "expected {} agent actions, got {}",
            basis.n_agents,
            actions.len()
        )));
    }
    let mut clamped = 0usize;
    let mut alpha = vec![[0.0f64; 2]; actions.len()];
    for (i, a) in actions.iter().enumerate() {
        for k in 0..2 {
            if a[k].is_nan() {
                return Err(Error::Input(format!("NaN action for agent {i}")));
            }
            let mut v = a[k];
            if !(-1.0..=1.0).contains(&v) {
                v = v.clamp(-1.0, 1.0);
                clamped += 1;
            }
            alpha[i][k] = params.torque_max[k] * v;
        }
    }
    let mut field = vec![[0.0f64; 3]; basis.n_elements];
    for (i, row) in basis.basis_matrix.iter().enumerate() {
        for (e, &b) in row.iter().enumerate() {
            field[e][0] += b * alpha[i][0];
            field[e][1] += b * alpha[i][1];
        }
    }
    Ok((field, clamped))
}
