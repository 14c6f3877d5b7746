//! Planar rigid bodies in maximal coordinates.
//!
//! Revolute joints, joint limits and point-to-world pins are velocity
//! constraints solved together each substep: the dense `J M⁻¹ Jᵀ` system is
//! factored once and a few Newton passes drive the predicted end-of-substep
//! positions onto the constraint manifold, with Baumgarte feedback on any
//! error already present. Limits are handled with an active set. A revolute
//! impulse is applied at the midpoint of the two world anchors, so the pair
//! is equal, opposite and collinear and leaves angular momentum untouched.
//! There is no contact handling.

use crate::error::{Error, Result};
use crate::math::Vec2;

pub const DEFAULT_DT: f64 = 1.0 / 480.0;
pub const DEFAULT_GRAVITY: Vec2 = Vec2 { x: 0.0, y: -9.81 };

/// Relative diagonal softening that keeps singular poses (a closed loop
/// pulled straight) solvable.
const REGULARIZATION: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct RigidBody2D {
    pub name: String,
    /// Zero for a static body.
    pub mass: f64,
    pub inertia: f64,
    pub pos: Vec2,
    pub angle: f64,
    pub vel: Vec2,
    pub omega: f64,
    /// Half the capsule axis, which runs along local `y`.
    pub half_length: f64,
}

impl RigidBody2D {
    /// A thin uniform rod of the given length, `I = m ℓ² / 12`.
    pub fn rod(name: &str, mass: f64, length: f64) -> Self {
        RigidBody2D {
            name: name.to_string(),
            mass,
            inertia: mass * length * length / 12.0,
            pos: Vec2::ZERO,
            angle: 0.0,
            vel: Vec2::ZERO,
            omega: 0.0,
            half_length: length / 2.0,
        }
    }

    pub fn fixed(name: &str) -> Self {
        RigidBody2D {
            mass: 0.0,
            inertia: 0.0,
            ..RigidBody2D::rod(name, 0.0, 0.0)
        }
    }

    pub fn is_static(&self) -> bool {
        self.mass == 0.0
    }

    pub fn inv_mass(&self) -> f64 {
        if self.is_static() {
            0.0
        } else {
            1.0 / self.mass
        }
    }

    pub fn inv_inertia(&self) -> f64 {
        if self.is_static() || self.inertia == 0.0 {
            0.0
        } else {
            1.0 / self.inertia
        }
    }

    pub fn world_point(&self, local: Vec2) -> Vec2 {
        self.pos + local.rotate(self.angle)
    }

    pub fn point_velocity(&self, world: Vec2) -> Vec2 {
        self.vel + Vec2::cross_scalar(self.omega, world - self.pos)
    }

    /// Where `local` will be after drifting for `dt` at the current velocity.
    fn predicted_point(&self, local: Vec2, dt: f64) -> Vec2 {
        self.pos + self.vel * dt + local.rotate(self.angle + self.omega * dt)
    }

    /// Local point at the `+y` end of the axis.
    pub fn top(&self) -> Vec2 {
        Vec2::new(0.0, self.half_length)
    }

    pub fn bottom(&self) -> Vec2 {
        Vec2::new(0.0, -self.half_length)
    }

    fn is_finite(&self) -> bool {
        self.pos.is_finite() && self.vel.is_finite() && self.angle.is_finite() && self.omega.is_finite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RevoluteJoint {
    pub name: String,
    pub body_a: usize,
    pub body_b: usize,
    pub anchor_a: Vec2,
    pub anchor_b: Vec2,
    /// Bounds on `angle_b - angle_a`.
    pub limits: Option<(f64, f64)>,
    pub max_torque: f64,
    pub kp: f64,
    pub kd: f64,
    /// Torque applied to `body_b` by the motor during the last substep.
    pub applied_torque: f64,
}

impl RevoluteJoint {
    pub fn new(name: &str, body_a: usize, body_b: usize, anchor_a: Vec2, anchor_b: Vec2) -> Self {
        RevoluteJoint {
            name: name.to_string(),
            body_a,
            body_b,
            anchor_a,
            anchor_b,
            limits: None,
            max_torque: 0.0,
            kp: 0.0,
            kd: 0.0,
            applied_torque: 0.0,
        }
    }

    pub fn with_limits(mut self, lo: f64, hi: f64) -> Self {
        self.limits = Some((lo, hi));
        self
    }

    pub fn with_motor(mut self, kp: f64, kd: f64, max_torque: f64) -> Self {
        self.kp = kp;
        self.kd = kd;
        self.max_torque = max_torque;
        self
    }

    pub fn validate(&self, n_bodies: usize) -> Result<()> {
        if self.body_a >= n_bodies || self.body_b >= n_bodies || self.body_a == self.body_b {
            return Err(Error::Constraint(format!("joint `{}` has bad body indices", self.name)));
        }
        if let Some((lo, hi)) = self.limits {
            if !(lo < hi) {
                return Err(Error::Constraint(format!("joint `{}` needs lo < hi", self.name)));
            }
        }
        if !(self.max_torque >= 0.0) || self.kp < 0.0 || self.kd < 0.0 {
            return Err(Error::Constraint(format!("joint `{}` has negative gains", self.name)));
        }
        Ok(())
    }
}

/// Clamped PD torque `kp (target - angle) - kd rate`.
pub fn pd_torque(kp: f64, kd: f64, max_torque: f64, target: f64, angle: f64, rate: f64) -> f64 {
    (kp * (target - angle) - kd * rate).clamp(-max_torque, max_torque)
}

/// PD torque with the damping term taken at the end-of-substep rate, which
/// stays stable for very light links. `inv_dt` is `(1/I_a + 1/I_b) dt`.
fn implicit_pd_torque(jt: &RevoluteJoint, target: f64, angle: f64, rate: f64, inv_dt: f64) -> f64 {
    let raw = (jt.kp * (target - angle) - jt.kd * rate) / (1.0 + jt.kd * inv_dt);
    raw.clamp(-jt.max_torque, jt.max_torque)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PinConstraint {
    pub body: usize,
    pub local_point: Vec2,
    pub world_anchor: Vec2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct World2D {
    pub bodies: Vec<RigidBody2D>,
    pub joints: Vec<RevoluteJoint>,
    pub pins: Vec<PinConstraint>,
    pub gravity: Vec2,
    dt: f64,
    /// Fraction of the existing constraint error removed per substep.
    pub beta: f64,
    /// Newton passes per active-set round.
    pub iterations: usize,
    /// Bound on active-set rounds for joint limits.
    pub limit_rounds: usize,
}

#[derive(Clone, Copy, Debug)]
enum RowKind {
    Revolute { joint: usize, axis: usize },
    Pin { pin: usize, axis: usize },
    Lower(usize),
    Upper(usize),
}

/// One scalar velocity constraint touching at most two bodies.
#[derive(Clone, Copy, Debug)]
struct Row {
    kind: RowKind,
    /// `(body, [∂/∂vx, ∂/∂vy, ∂/∂ω])`.
    terms: [(usize, [f64; 3]); 2],
    n_terms: usize,
}

impl Row {
    fn terms(&self) -> &[(usize, [f64; 3])] {
        &self.terms[..self.n_terms]
    }
}

impl World2D {
    pub fn new(dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::config("time step must be positive"));
        }
        Ok(World2D {
            bodies: Vec::new(),
            joints: Vec::new(),
            pins: Vec::new(),
            gravity: DEFAULT_GRAVITY,
            dt,
            beta: 0.2,
            iterations: 3,
            limit_rounds: 20,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn add_body(&mut self, body: RigidBody2D) -> Result<usize> {
        if body.mass < 0.0 || (!body.is_static() && !(body.inertia > 0.0)) {
            return Err(Error::Constraint(format!(
                "body `{}` needs positive mass and inertia",
                body.name
            )));
        }
        self.bodies.push(body);
        Ok(self.bodies.len() - 1)
    }

    pub fn add_joint(&mut self, joint: RevoluteJoint) -> Result<usize> {
        joint.validate(self.bodies.len())?;
        self.joints.push(joint);
        Ok(self.joints.len() - 1)
    }

    pub fn joint_angle(&self, j: usize) -> f64 {
        let jt = &self.joints[j];
        self.bodies[jt.body_b].angle - self.bodies[jt.body_a].angle
    }

    pub fn joint_rate(&self, j: usize) -> f64 {
        let jt = &self.joints[j];
        self.bodies[jt.body_b].omega - self.bodies[jt.body_a].omega
    }

    /// World-space distance between the two anchors of joint `j`.
    pub fn joint_separation(&self, j: usize) -> f64 {
        let jt = &self.joints[j];
        let pa = self.bodies[jt.body_a].world_point(jt.anchor_a);
        let pb = self.bodies[jt.body_b].world_point(jt.anchor_b);
        (pb - pa).norm()
    }

    /// Pins `local_point` of `body` where it currently is.
    pub fn attach_pin(&mut self, body: usize, local_point: Vec2) -> Result<PinConstraint> {
        let b = self
            .bodies
            .get(body)
            .ok_or_else(|| Error::Constraint(format!("no body {body}")))?;
        if b.is_static() {
            return Err(Error::Constraint("cannot pin a static body".into()));
        }
        if self.pins.iter().any(|p| p.body == body && p.local_point == local_point) {
            return Err(Error::Constraint(format!("body {body} is already pinned at that point")));
        }
        let pin = PinConstraint {
            body,
            local_point,
            world_anchor: b.world_point(local_point),
        };
        self.pins.push(pin.clone());
        Ok(pin)
    }

    /// Removes every pin on `body`; returns how many were removed.
    pub fn detach(&mut self, body: usize) -> usize {
        let before = self.pins.len();
        self.pins.retain(|p| p.body != body);
        before - self.pins.len()
    }

    pub fn pin_error(&self, pin: &PinConstraint) -> f64 {
        (self.bodies[pin.body].world_point(pin.local_point) - pin.world_anchor).norm()
    }

    /// One substep. `targets` holds one angle per joint; joints without a
    /// motor ignore theirs.
    pub fn step_world(&mut self, targets: &[f64]) -> Result<()> {
        if targets.len() != self.joints.len() {
            return Err(Error::Shape {
                what: "joint targets",
                expected: self.joints.len(),
                got: targets.len(),
            });
        }
        let dt = self.dt;

        let mut torques = vec![0.0; self.bodies.len()];
        for (j, &target) in targets.iter().enumerate() {
            let (angle, rate) = (self.joint_angle(j), self.joint_rate(j));
            let (a, b) = (self.joints[j].body_a, self.joints[j].body_b);
            let inv = self.bodies[a].inv_inertia() + self.bodies[b].inv_inertia();
            let jt = &mut self.joints[j];
            let tau = implicit_pd_torque(jt, target, angle, rate, inv * dt);
            jt.applied_torque = tau;
            torques[jt.body_b] += tau;
            torques[jt.body_a] -= tau;
        }

        let g = self.gravity;
        for (b, tau) in self.bodies.iter_mut().zip(&torques) {
            if b.is_static() {
                continue;
            }
            b.vel += g * dt;
            b.omega += tau * b.inv_inertia() * dt;
        }

        self.solve_constraints()?;

        for b in &mut self.bodies {
            if b.is_static() {
                continue;
            }
            b.pos += b.vel * dt;
            b.angle += b.omega * dt;
        }

        if let Some(b) = self.bodies.iter().find(|b| !b.is_finite()) {
            return Err(Error::Diverged(format!("body `{}` became non-finite", b.name)));
        }
        Ok(())
    }

    fn build_rows(&self) -> (Vec<Row>, Vec<Row>) {
        let mut eq = Vec::with_capacity(2 * (self.joints.len() + self.pins.len()));
        for (j, jt) in self.joints.iter().enumerate() {
            let (a, b) = (&self.bodies[jt.body_a], &self.bodies[jt.body_b]);
            let m = (a.world_point(jt.anchor_a) + b.world_point(jt.anchor_b)) * 0.5;
            let (ra, rb) = (m - a.pos, m - b.pos);
            eq.push(Row {
                kind: RowKind::Revolute { joint: j, axis: 0 },
                terms: [(jt.body_a, [-1.0, 0.0, ra.y]), (jt.body_b, [1.0, 0.0, -rb.y])],
                n_terms: 2,
            });
            eq.push(Row {
                kind: RowKind::Revolute { joint: j, axis: 1 },
                terms: [(jt.body_a, [0.0, -1.0, -ra.x]), (jt.body_b, [0.0, 1.0, rb.x])],
                n_terms: 2,
            });
        }
        for (p, pin) in self.pins.iter().enumerate() {
            let body = &self.bodies[pin.body];
            let r = body.world_point(pin.local_point) - body.pos;
            eq.push(Row {
                kind: RowKind::Pin { pin: p, axis: 0 },
                terms: [(pin.body, [1.0, 0.0, -r.y]), (pin.body, [0.0; 3])],
                n_terms: 1,
            });
            eq.push(Row {
                kind: RowKind::Pin { pin: p, axis: 1 },
                terms: [(pin.body, [0.0, 1.0, r.x]), (pin.body, [0.0; 3])],
                n_terms: 1,
            });
        }
        let mut limits = Vec::new();
        for (j, jt) in self.joints.iter().enumerate() {
            if jt.limits.is_none() {
                continue;
            }
            limits.push(Row {
                kind: RowKind::Lower(j),
                terms: [(jt.body_a, [0.0, 0.0, -1.0]), (jt.body_b, [0.0, 0.0, 1.0])],
                n_terms: 2,
            });
            limits.push(Row {
                kind: RowKind::Upper(j),
                terms: [(jt.body_a, [0.0, 0.0, 1.0]), (jt.body_b, [0.0, 0.0, -1.0])],
                n_terms: 2,
            });
        }
        (eq, limits)
    }

    /// Constraint value, now (`dt = 0`) or after drifting for `dt`. Limit
    /// rows are signed so that non-negative means satisfied.
    fn row_value(&self, row: &Row, dt: f64) -> f64 {
        let angle = |j: usize| {
            let jt = &self.joints[j];
            let (a, b) = (&self.bodies[jt.body_a], &self.bodies[jt.body_b]);
            (b.angle + b.omega * dt) - (a.angle + a.omega * dt)
        };
        match row.kind {
            RowKind::Revolute { joint, axis } => {
                let jt = &self.joints[joint];
                let pa = self.bodies[jt.body_a].predicted_point(jt.anchor_a, dt);
                let pb = self.bodies[jt.body_b].predicted_point(jt.anchor_b, dt);
                component(pb - pa, axis)
            }
            RowKind::Pin { pin, axis } => {
                let p = &self.pins[pin];
                let w = self.bodies[p.body].predicted_point(p.local_point, dt);
                component(w - p.world_anchor, axis)
            }
            RowKind::Lower(j) => angle(j) - self.joints[j].limits.expect("limited joint").0,
            RowKind::Upper(j) => self.joints[j].limits.expect("limited joint").1 - angle(j),
        }
    }

    /// How far the predicted value misses its goal: equalities aim at
    /// `(1 - β) C`, limits at `min(C, 0) (1 - β)` or better.
    fn row_residual(&self, row: &Row) -> f64 {
        let now = self.row_value(row, 0.0);
        let goal = match row.kind {
            RowKind::Lower(_) | RowKind::Upper(_) => now.min(0.0) * (1.0 - self.beta),
            _ => now * (1.0 - self.beta),
        };
        self.row_value(row, self.dt) - goal
    }

    fn solve_constraints(&mut self) -> Result<()> {
        let (eq, limit_rows) = self.build_rows();
        if eq.is_empty() && limit_rows.is_empty() {
            return Ok(());
        }
        let start: Vec<(Vec2, f64)> = self.bodies.iter().map(|b| (b.vel, b.omega)).collect();
        let mut active = vec![false; limit_rows.len()];
        for (i, row) in limit_rows.iter().enumerate() {
            active[i] = self.row_residual(row) < 0.0;
        }

        for _ in 0..self.limit_rounds.max(1) {
            for (b, &(v, w)) in self.bodies.iter_mut().zip(&start) {
                b.vel = v;
                b.omega = w;
            }
            let rows: Vec<Row> = eq
                .iter()
                .copied()
                .chain(limit_rows.iter().zip(&active).filter(|(_, a)| **a).map(|(r, _)| *r))
                .collect();
            let n_eq = eq.len();
            let chol = self.factor(&rows)?;
            let mut total = vec![0.0; rows.len()];
            for _ in 0..self.iterations.max(1) {
                let rhs: Vec<f64> = rows.iter().map(|r| -self.row_residual(r) / self.dt).collect();
                let lambda = chol.solve(&rhs);
                for ((row, l), t) in rows.iter().zip(&lambda).zip(total.iter_mut()) {
                    *t += l;
                    self.apply_row(row, *l);
                }
            }

            let mut changed = false;
            let mut k = n_eq;
            for (i, row) in limit_rows.iter().enumerate() {
                if active[i] {
                    if total[k] < 0.0 {
                        active[i] = false;
                        changed = true;
                    }
                    k += 1;
                } else if self.row_residual(row) < -1e-12 {
                    active[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Ok(())
    }

    fn apply_row(&mut self, row: &Row, lambda: f64) {
        for &(b, j) in row.terms() {
            let body = &mut self.bodies[b];
            let (im, ii) = (body.inv_mass(), body.inv_inertia());
            body.vel += Vec2::new(j[0], j[1]) * (im * lambda);
            body.omega += j[2] * ii * lambda;
        }
    }

    fn factor(&self, rows: &[Row]) -> Result<Cholesky> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let mut s = 0.0;
                for &(bi, ji) in rows[i].terms() {
                    for &(bj, jj) in rows[j].terms() {
                        if bi != bj {
                            continue;
                        }
                        let body = &self.bodies[bi];
                        let (im, ii) = (body.inv_mass(), body.inv_inertia());
                        s += im * (ji[0] * jj[0] + ji[1] * jj[1]) + ii * ji[2] * jj[2];
                    }
                }
                k[i * n + j] = s;
                k[j * n + i] = s;
            }
        }
        let scale = (0..n).map(|i| k[i * n + i]).fold(0.0, f64::max);
        for i in 0..n {
            k[i * n + i] += REGULARIZATION * scale.max(1e-12);
        }
        Cholesky::new(k, n).ok_or_else(|| Error::Diverged("constraint system is not positive definite".into()))
    }

    pub fn total_mass(&self) -> f64 {
        self.bodies.iter().map(|b| b.mass).sum()
    }

    pub fn linear_momentum(&self) -> Vec2 {
        self.bodies.iter().fold(Vec2::ZERO, |acc, b| acc + b.vel * b.mass)
    }

    /// Angular momentum of the dynamic bodies about `point`.
    pub fn angular_momentum(&self, point: Vec2) -> f64 {
        self.bodies
            .iter()
            .map(|b| b.mass * (b.pos - point).cross(b.vel) + b.inertia * b.omega)
            .sum()
    }

    pub fn kinetic_energy(&self) -> f64 {
        self.bodies
            .iter()
            .map(|b| 0.5 * b.mass * b.vel.norm_sq() + 0.5 * b.inertia * b.omega * b.omega)
            .sum()
    }

    pub fn potential_energy(&self) -> f64 {
        self.bodies
            .iter()
            .map(|b| -b.mass * self.gravity.dot(b.pos))
            .sum()
    }
}

fn component(v: Vec2, axis: usize) -> f64 {
    if axis == 0 {
        v.x
    } else {
        v.y
    }
}

/// Dense lower-triangular factor of a symmetric positive-definite matrix.
struct Cholesky {
    l: Vec<f64>,
    n: usize,
}

impl Cholesky {
    fn new(mut a: Vec<f64>, n: usize) -> Option<Self> {
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= a[j * n + k] * a[j * n + k];
            }
            if !(d > 0.0) {
                return None;
            }
            let d = d.sqrt();
            a[j * n + j] = d;
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k];
                }
                a[i * n + j] = s / d;
            }
        }
        Some(Cholesky { l: a, n })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let (l, n) = (&self.l, self.n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] -= l[i * n + k] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] -= l[k * n + i] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        y
    }
}

/// Mass-weighted position and velocity of `bodies`.
pub fn composite_com(world: &World2D, bodies: &[usize]) -> Result<(Vec2, Vec2)> {
    let mut m = 0.0;
    let mut p = Vec2::ZERO;
    let mut v = Vec2::ZERO;
    for &i in bodies {
        let b = world
            .bodies
            .get(i)
            .ok_or_else(|| Error::Constraint(format!("no body {i}")))?;
        m += b.mass;
        p += b.pos * b.mass;
        v += b.vel * b.mass;
    }
    if m <= 0.0 {
        return Err(Error::Constraint("centre of mass needs a massive body".into()));
    }
    Ok((p * (1.0 / m), v * (1.0 / m)))
}
