//! Discretized Cosserat-rod dynamics.
//!
//! The rod is a chain of `n_elements` line elements between `n_elements + 1`
//! nodes. Nodes carry position/velocity and lumped mass; elements carry an
//! orthonormal director frame (d1 normal, d2 binormal, d3 tangent), an
//! angular velocity in the material frame, and rotational inertia.
//!
//! Elastic forces and couples are the exact (to discretization order)
//! gradient of a quadratic elastic energy:
//!   - shear/stretch per element:  E = 1/2 l0 sigma' S sigma,
//!     sigma = Q dr / l0 - e3, S = diag(GA, GA, EA)
//!   - bend/twist per interior joint: E = 1/2 l0 kappa' B kappa,
//!     kappa = log(Q_j Q_{j-1}^T) / l0, B = diag(EI1, EI2, GI3)
//!
//! Integration is an explicit kick-drift-kick step with exponential-map
//! director updates, followed by an analytic exponential damper on both
//! velocity fields. The base node and base frame are clamped.

use crate::error::{Error, Result};
use crate::math::{self, Mat3, Vec3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RodParams {
    pub n_elements: usize,
    pub base_length: f64,
    pub base_radius: f64,
    pub density: f64,
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
    pub damping_constant: f64,
    pub dt_physics: f64,
    /// Lab-frame gravity; `None` disables it.
    pub gravity: Option<Vec3>,
}

impl Default for RodParams {
    fn default() -> Self {
        Self {
            n_elements: 60,
            base_length: 1.0,
            base_radius: 0.05,
            density: 1000.0,
            youngs_modulus: 5e5,
            shear_modulus: 2e5,
            damping_constant: 0.3,
            dt_physics: 1e-4,
            gravity: None,
        }
    }
}

impl RodParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_elements < 2 {
            return Err(Error::Config("n_elements must be >= 2".into()));
        }
        let scalars = [
            ("base_length", self.base_length),
            ("base_radius", self.base_radius),
            ("density", self.density),
            ("youngs_modulus", self.youngs_modulus),
            ("shear_modulus", self.shear_modulus),
            ("dt_physics", self.dt_physics),
        ];
        for (name, v) in scalars {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        if self.damping_constant < 0.0 || !self.damping_constant.is_finite() {
            return Err(Error::Config("damping_constant must be >= 0".into()));
        }
        Ok(())
    }

    /// Rest length of one element.
    pub fn rest_length(&self) -> f64 {
        self.base_length / self.n_elements as f64
    }

    pub fn cross_section_area(&self) -> f64 {
        std::f64::consts::PI * self.base_radius * self.base_radius
    }

    /// Area second moments about (d1, d2, d3).
    pub fn area_moments(&self) -> Vec3 {
        let r4 = self.base_radius.powi(4);
        let i_bend = std::f64::consts::PI * r4 / 4.0;
        [i_bend, i_bend, 2.0 * i_bend]
    }

    /// diag(GA, GA, EA) shear/stretch stiffness.
    pub fn shear_matrix(&self) -> Vec3 {
        let a = self.cross_section_area();
        [
            self.shear_modulus * a,
            self.shear_modulus * a,
            self.youngs_modulus * a,
        ]
    }

    /// diag(EI1, EI2, GI3) bend/twist stiffness.
    pub fn bend_matrix(&self) -> Vec3 {
        let i = self.area_moments();
        [
            self.youngs_modulus * i[0],
            self.youngs_modulus * i[1],
            self.shear_modulus * i[2],
        ]
    }

    /// Lumped nodal masses: half an element to each endpoint.
    pub fn node_masses(&self) -> Vec<f64> {
        let elem_mass = self.density * self.cross_section_area() * self.rest_length();
        let n = self.n_elements;
        (0..=n)
            .map(|i| {
                if i == 0 || i == n {
                    0.5 * elem_mass
                } else {
                    elem_mass
                }
            })
            .collect()
    }

    /// Rotational inertia of one element about its principal axes.
    pub fn element_inertia(&self) -> Vec3 {
        let i = self.area_moments();
        let l = self.rest_length();
        [
            self.density * i[0] * l,
            self.density * i[1] * l,
            self.density * i[2] * l,
        ]
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RodState {
    pub node_positions: Vec<Vec3>,
    pub node_velocities: Vec<Vec3>,
    /// Per-element frames; rows are (d1, d2, d3) in lab coordinates.
    pub element_directors: Vec<Mat3>,
    /// Per-element angular velocities in the material frame.
    pub element_angular_velocities: Vec<Vec3>,
    pub time: f64,
}

impl RodState {
    pub fn n_elements(&self) -> usize {
        self.element_directors.len()
    }

    pub fn tip_position(&self) -> Vec3 {
        *self.node_positions.last().expect("rod has nodes")
    }

    pub fn is_finite(&self) -> bool {
        self.node_positions
            .iter()
            .chain(self.node_velocities.iter())
            .chain(self.element_angular_velocities.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
            && self
                .element_directors
                .iter()
                .all(|q| q.iter().all(|row| row.iter().all(|x| x.is_finite())))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Cylinder {
    pub start_point: Vec3,
    pub axis_direction: Vec3,
    pub length: f64,
    pub radius: f64,
}

impl Cylinder {
    pub fn validate(&self) -> Result<()> {
        let n = math::norm(self.axis_direction);
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "cylinder axis_direction must be unit length, |axis| = {n}"
            )));
        }
        if !(self.length > 0.0) || !(self.radius > 0.0) {
            return Err(Error::Config(
                "cylinder length and radius must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn center(&self) -> Vec3 {
        math::add(
            self.start_point,
            math::scale(self.axis_direction, 0.5 * self.length),
        )
    }

    /// Closest point on the axis segment to `p`.
    pub fn closest_axis_point(&self, p: Vec3) -> Vec3 {
        let t = math::dot(math::sub(p, self.start_point), self.axis_direction)
            .clamp(0.0, self.length);
        math::add(self.start_point, math::scale(self.axis_direction, t))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ContactParams {
    pub stiffness: f64,
    pub damping: f64,
}

impl Default for ContactParams {
    fn default() -> Self {
        Self {
            stiffness: 5e4,
            damping: 50.0,
        }
    }
}

/// External loads applied during one physics step. Couples are in the
/// material frame of each element; point forces are lab-frame.
#[derive(Debug, Clone, Default)]
pub struct ExternalLoads {
    pub element_couples: Vec<Vec3>,
    pub node_forces: Vec<(usize, Vec3)>,
}

impl ExternalLoads {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn couples(element_couples: Vec<Vec3>) -> Self {
        Self {
            element_couples,
            node_forces: Vec::new(),
        }
    }
}

pub fn init_straight_rod(params: &RodParams, base_direction: Vec3) -> Result<RodState> {
    params.validate()?;
    let n = math::norm(base_direction);
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Config("base_direction must be nonzero".into()));
    }
    let dir = math::scale(base_direction, 1.0 / n);
    let spacing = params.rest_length();
    let node_positions = (0..=params.n_elements)
        .map(|i| math::scale(dir, spacing * i as f64))
        .collect();
    let frame = math::frame_from_tangent(dir);
    Ok(RodState {
        node_positions,
        node_velocities: vec![math::ZERO3; params.n_elements + 1],
        element_directors: vec![frame; params.n_elements],
        element_angular_velocities: vec![math::ZERO3; params.n_elements],
        time: 0.0,
    })
}

/// Elastic node forces (lab frame) and element couples (material frame).
pub fn compute_internal_forces(
    state: &RodState,
    params: &RodParams,
) -> (Vec<Vec3>, Vec<Vec3>) {
    let n = state.n_elements();
    let l0 = params.rest_length();
    let shear = params.shear_matrix();
    let bend = params.bend_matrix();

    let mut node_forces = vec![math::ZERO3; n + 1];
    let mut element_couples = vec![math::ZERO3; n];

    // Shear/stretch: per element.
    for e in 0..n {
        let dr = math::sub(state.node_positions[e + 1], state.node_positions[e]);
        let q = &state.element_directors[e];
        let scaled_tangent = math::scale(math::matvec(q, dr), 1.0 / l0); // Q (e t)
        let sigma = [
            scaled_tangent[0],
            scaled_tangent[1],
            scaled_tangent[2] - 1.0,
        ];
        let n_mat = [shear[0] * sigma[0], shear[1] * sigma[1], shear[2] * sigma[2]];
        let n_lab = math::tr_matvec(q, n_mat);
        node_forces[e] = math::add(node_forces[e], n_lab);
        node_forces[e + 1] = math::sub(node_forces[e + 1], n_lab);
        // Reaction couple of the end forces about the element center.
        element_couples[e] = math::scale(math::cross(scaled_tangent, n_mat), l0);
    }

    // Bend/twist: per interior joint j between elements j-1 and j, with
    // phi_j = log(Q_j Q_{j-1}^T) and joint moment m_j = B phi_j / l0. The
    // torques below are the exact gradient of the joint energy with respect
    // to finite element rotations (transposed inverse-dexp applied to m).
    for j in 1..n {
        let r = math::matmul(
            &state.element_directors[j],
            &math::transpose(&state.element_directors[j - 1]),
        );
        let phi = math::log_so3(&r);
        let m = [
            bend[0] * phi[0] / l0,
            bend[1] * phi[1] / l0,
            bend[2] * phi[2] / l0,
        ];
        let half_cross = math::scale(math::cross(phi, m), 0.5);
        let curvature_sq = math::scale(
            math::cross(phi, math::cross(phi, m)),
            dexp_inv_eta(math::norm(phi)),
        );
        // torque on element j:   m + phi x m / 2 + eta phi x (phi x m)
        // torque on element j-1: -(m - phi x m / 2 + eta phi x (phi x m))
        element_couples[j] = math::add(
            element_couples[j],
            math::add(math::add(m, half_cross), curvature_sq),
        );
        element_couples[j - 1] = math::sub(
            element_couples[j - 1],
            math::add(math::sub(m, half_cross), curvature_sq),
        );
    }

    (node_forces, element_couples)
}

/// Second-order coefficient of the inverse differential of the exponential
/// map: 1/theta^2 - (1 + cos theta) / (2 theta sin theta), series-expanded
/// near zero.
fn dexp_inv_eta(theta: f64) -> f64 {
    if theta < 1e-2 {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        1.0 / (theta * theta) - (1.0 + theta.cos()) / (2.0 * theta * theta.sin())
    }
}

/// Penalty contact of rod nodes against rigid cylinders.
///
/// Returns lab-frame node forces and the number of nodes with at least one
/// active contact (each node counted once).
pub fn compute_contact_forces(
    state: &RodState,
    cylinders: &[Cylinder],
    contact: &ContactParams,
    rod_radius: f64,
) -> (Vec<Vec3>, usize) {
    let mut node_forces = vec![math::ZERO3; state.node_positions.len()];
    let mut contact_count = 0usize;
    for (i, (&p, &v)) in state
        .node_positions
        .iter()
        .zip(state.node_velocities.iter())
        .enumerate()
    {
        let mut touched = false;
        for cyl in cylinders {
            let q = cyl.closest_axis_point(p);
            let dvec = math::sub(p, q);
            let dist = math::norm(dvec);
            let reach = cyl.radius + rod_radius;
            if dist >= reach {
                continue;
            }
            touched = true;
            let normal = if dist > 1e-12 {
                math::scale(dvec, 1.0 / dist)
            } else {
                // node exactly on the axis: any perpendicular works
                math::frame_from_tangent(cyl.axis_direction)[0]
            };
            let penetration = reach - dist;
            let mut f = math::scale(normal, contact.stiffness * penetration);
            let vn = math::dot(v, normal);
            if vn < 0.0 {
                // normal damping only while approaching, never a pulling force
                f = math::sub(f, math::scale(normal, contact.damping * vn));
            }
            node_forces[i] = math::add(node_forces[i], f);
        }
        if touched {
            contact_count += 1;
        }
    }
    (node_forces, contact_count)
}

/// Count of nodes currently in contact, without computing forces.
pub fn contact_count(state: &RodState, cylinders: &[Cylinder], rod_radius: f64) -> usize {
    state
        .node_positions
        .iter()
        .filter(|&&p| {
            cylinders.iter().any(|cyl| {
                let q = cyl.closest_axis_point(p);
                math::norm(math::sub(p, q)) < cyl.radius + rod_radius
            })
        })
        .count()
}

fn total_forces_and_torques(
    state: &RodState,
    params: &RodParams,
    loads: &ExternalLoads,
    cylinders: &[Cylinder],
    contact: &ContactParams,
    masses: &[f64],
) -> (Vec<Vec3>, Vec<Vec3>) {
    let (mut forces, mut torques) = compute_internal_forces(state, params);
    if !cylinders.is_empty() {
        let (cf, _) = compute_contact_forces(state, cylinders, contact, params.base_radius);
        for (f, c) in forces.iter_mut().zip(cf) {
            *f = math::add(*f, c);
        }
    }
    if let Some(g) = params.gravity {
        for (f, &m) in forces.iter_mut().zip(masses.iter()) {
            *f = math::add(*f, math::scale(g, m));
        }
    }
    for &(idx, fv) in &loads.node_forces {
        forces[idx] = math::add(forces[idx], fv);
    }
    if !loads.element_couples.is_empty() {
        for (t, c) in torques.iter_mut().zip(loads.element_couples.iter()) {
            *t = math::add(*t, *c);
        }
    }
    (forces, torques)
}

/// One undamped kick-drift-kick step, in place. The base node and frame are
/// clamped throughout. Returns an error on numerical divergence.
pub fn step_undamped(
    state: &mut RodState,
    params: &RodParams,
    loads: &ExternalLoads,
    cylinders: &[Cylinder],
    contact: &ContactParams,
) -> Result<()> {
    let dt = params.dt_physics;
    let n = state.n_elements();
    let masses = params.node_masses();
    let inertia = params.element_inertia();
    let inv_inertia = [1.0 / inertia[0], 1.0 / inertia[1], 1.0 / inertia[2]];

    let half_kick = |state: &mut RodState, forces: &[Vec3], torques: &[Vec3]| {
        for i in 1..=n {
            state.node_velocities[i] = math::add(
                state.node_velocities[i],
                math::scale(forces[i], 0.5 * dt / masses[i]),
            );
        }
        for e in 1..n {
            let w = state.element_angular_velocities[e];
            // Euler equation: J w_dot = tau - w x (J w)
            let jw = [inertia[0] * w[0], inertia[1] * w[1], inertia[2] * w[2]];
            let gyro = math::cross(w, jw);
            let net = math::sub(torques[e], gyro);
            state.element_angular_velocities[e] = math::add(
                w,
                [
                    0.5 * dt * inv_inertia[0] * net[0],
                    0.5 * dt * inv_inertia[1] * net[1],
                    0.5 * dt * inv_inertia[2] * net[2],
                ],
            );
        }
    };

    let (forces, torques) =
        total_forces_and_torques(state, params, loads, cylinders, contact, &masses);
    half_kick(state, &forces, &torques);

    // Drift: positions and director frames.
    for i in 1..=n {
        state.node_positions[i] = math::add(
            state.node_positions[i],
            math::scale(state.node_velocities[i], dt),
        );
    }
    for e in 1..n {
        let w = state.element_angular_velocities[e];
        let rot = math::exp_so3(math::scale(w, -dt));
        state.element_directors[e] = math::matmul(&rot, &state.element_directors[e]);
    }

    let (forces, torques) =
        total_forces_and_torques(state, params, loads, cylinders, contact, &masses);
    half_kick(state, &forces, &torques);

    // Clamp and renormalize.
    state.node_velocities[0] = math::ZERO3;
    state.element_angular_velocities[0] = math::ZERO3;
    for q in state.element_directors.iter_mut() {
        if math::orthonormality_defect(q) > 1e-9 {
            *q = math::orthonormalize(q);
        }
    }
    state.time += dt;

    if !state.is_finite()
        || state
            .node_positions
            .iter()
            .any(|p| p.iter().any(|x| x.abs() > 100.0))
    {
        return Err(Error::Diverged { time: state.time });
    }
    Ok(())
}

/// Analytic exponential damper on both velocity fields.
pub fn apply_damping(state: &mut RodState, params: &RodParams) {
    let factor = (-params.damping_constant * params.dt_physics).exp();
    for v in state.node_velocities.iter_mut() {
        *v = math::scale(*v, factor);
    }
    for w in state.element_angular_velocities.iter_mut() {
        *w = math::scale(*w, factor);
    }
}

/// One full explicit step: undamped kick-drift-kick, then the damper.
pub fn step_dynamics(
    state: &RodState,
    params: &RodParams,
    loads: &ExternalLoads,
    cylinders: &[Cylinder],
    contact: &ContactParams,
) -> Result<RodState> {
    let mut next = state.clone();
    step_dynamics_in_place(&mut next, params, loads, cylinders, contact)?;
    Ok(next)
}

pub fn step_dynamics_in_place(
    state: &mut RodState,
    params: &RodParams,
    loads: &ExternalLoads,
    cylinders: &[Cylinder],
    contact: &ContactParams,
) -> Result<()> {
    step_undamped(state, params, loads, cylinders, contact)?;
    apply_damping(state, params);
    Ok(())
}

pub fn kinetic_energy(state: &RodState, params: &RodParams) -> f64 {
    let masses = params.node_masses();
    let inertia = params.element_inertia();
    let translational: f64 = state
        .node_velocities
        .iter()
        .zip(masses.iter())
        .map(|(v, m)| 0.5 * m * math::dot(*v, *v))
        .sum();
    let rotational: f64 = state
        .element_angular_velocities
        .iter()
        .map(|w| 0.5 * (inertia[0] * w[0] * w[0] + inertia[1] * w[1] * w[1] + inertia[2] * w[2] * w[2]))
        .sum();
    translational + rotational
}

pub fn elastic_energy(state: &RodState, params: &RodParams) -> f64 {
    let n = state.n_elements();
    let l0 = params.rest_length();
    let shear = params.shear_matrix();
    let bend = params.bend_matrix();
    let mut energy = 0.0;
    for e in 0..n {
        let dr = math::sub(state.node_positions[e + 1], state.node_positions[e]);
        let st = math::scale(math::matvec(&state.element_directors[e], dr), 1.0 / l0);
        let sigma = [st[0], st[1], st[2] - 1.0];
        energy += 0.5
            * l0
            * (shear[0] * sigma[0] * sigma[0]
                + shear[1] * sigma[1] * sigma[1]
                + shear[2] * sigma[2] * sigma[2]);
    }
    for j in 1..n {
        let r = math::matmul(
            &state.element_directors[j],
            &math::transpose(&state.element_directors[j - 1]),
        );
        let kappa = math::scale(math::log_so3(&r), 1.0 / l0);
        energy += 0.5
            * l0
            * (bend[0] * kappa[0] * kappa[0]
                + bend[1] * kappa[1] * kappa[1]
                + bend[2] * kappa[2] * kappa[2]);
    }
    energy
}

pub fn mechanical_energy(state: &RodState, params: &RodParams) -> f64 {
    kinetic_energy(state, params) + elastic_energy(state, params)
}
