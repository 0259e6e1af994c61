//! Unitary evolution `ψ(t) = exp(−JHt) ψ(0)` on the lattice and the
//! Ehrenfest relations for a wavepacket in the monopole field.
//!
//! The Hamiltonian is discretized with transport links: neighbouring sites are
//! connected by the cocycle `w(h eᵢ; x)`, so the lattice operator commutes
//! with `J`, is exactly hermitian, and satisfies `[H, Xᵢ] = −∇ᵢʰ / m`
//! identically. Time stepping uses the Cayley transform
//! `(I + τJH)⁻¹(I − τJH)`, `τ = dt/2`, with a conjugate-gradient solve on the
//! real normal equations `(I − τ²(JH)²) φ = (I − τJH)² ψ`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, levi_civita, Vec3};
use crate::hilbert::{AnalyticField, Lattice, LatticeField, CHUNK};
use crate::quat::Quaternion;
use crate::report::{Check, Report};
use crate::splitting::{self, SliceSpec};

/// Initial state: the `H_ω` component of a Gaussian, kicked by the phase
/// `exp(ω p·x)` applied from the right.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacketSpec {
    pub center: Vec3,
    /// Standard deviation of `|ψ|²` along each axis.
    pub sigma: f64,
    pub momentum: Vec3,
    pub slice: SliceSpec,
}

impl PacketSpec {
    pub fn field(&self) -> AnalyticField {
        let omega = self.slice.omega();
        let p = self.momentum;
        let g = AnalyticField::gaussian(self.center, 2.0 * self.sigma, Quaternion::E0);
        splitting::slice_component(&g, &self.slice).multop_right(move |x| omega.phase(p.dot(x)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub mass: f64,
    pub dt: f64,
    pub steps: usize,
    pub lattice: Lattice,
    pub packet: PacketSpec,
    /// Relative residual at which the inner solve stops.
    pub solver_tol: f64,
    pub max_iter: usize,
}

/// Named parameter sets for the Ehrenfest protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Far from the monopole: nearly ballistic motion.
    FreeLimit,
    /// No kick, centred on the `x₃` axis.
    Static,
    /// Kicked past the monopole at impact parameter `3σ`.
    Flyby,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "free-limit" | "free" => Ok(Self::FreeLimit),
            "static" => Ok(Self::Static),
            "flyby" => Ok(Self::Flyby),
            _ => Err(Error::Usage(format!("unknown preset {s:?} (free-limit, static, flyby)"))),
        }
    }
}

impl EvolutionConfig {
    pub fn preset(p: Preset) -> Self {
        let slice = SliceSpec::default();
        let packet = |center, momentum| PacketSpec { center, sigma: 0.5, momentum, slice };
        let base = |n, packet, dt, steps| Self {
            mass: 4.0,
            dt,
            steps,
            lattice: Lattice::new(n, 6.0).expect("valid lattice"),
            packet,
            solver_tol: 1e-14,
            max_iter: 500,
        };
        match p {
            Preset::FreeLimit => base(32, packet(Vec3::new(3.5, -1.5, 0.0), Vec3::new(0.0, 2.0, 0.0)), 0.04, 50),
            Preset::Static => base(32, packet(Vec3::new(0.0, 0.0, 3.0), Vec3::ZERO), 0.04, 25),
            Preset::Flyby => base(64, packet(Vec3::new(-2.5, 1.5, 0.0), Vec3::new(4.0, 0.0, 0.0)), 0.04, 88),
        }
    }

    /// Checks positivity and that the packet starts at least `3σ` from both
    /// the box boundary and the origin.
    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0 && self.mass.is_finite()) {
            return Err(Error::Usage(format!("mass must be positive, got {}", self.mass)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Usage(format!("dt must be positive, got {}", self.dt)));
        }
        let p = &self.packet;
        if !(p.sigma > 0.0) {
            return Err(Error::Usage(format!("packet width must be positive, got {}", p.sigma)));
        }
        let margin = 3.0 * p.sigma;
        let inner = self.lattice.half_width() - p.center.max_abs();
        if inner < margin {
            return Err(Error::Usage(format!("packet is {inner} from the boundary, needs ≥ {margin}")));
        }
        if p.center.norm() < margin {
            return Err(Error::Usage(format!("packet is {} from the origin, needs ≥ {margin}", p.center.norm())));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> LatticeField {
        self.packet.field().sample(self.lattice)
    }
}

/// Lattice Hamiltonian `H = −Δʰ / 2m` with precomputed transport links.
#[derive(Debug, Clone)]
pub struct LatticeHamiltonian {
    lattice: Lattice,
    mass: f64,
    /// `links[s][i] = w(h eᵢ; x_s)`, transport from site `s` to its `+eᵢ`
    /// neighbour (identity where that neighbour is off the grid).
    links: Vec<[Quaternion; 3]>,
    j: Vec<Quaternion>,
}

impl LatticeHamiltonian {
    pub fn new(lattice: Lattice, mass: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::Usage(format!("mass must be positive, got {mass}")));
        }
        let h = lattice.step();
        let links = (0..lattice.len())
            .into_par_iter()
            .map(|s| {
                let x = lattice.point(s);
                let mut l = [Quaternion::E0; 3];
                for (i, li) in l.iter_mut().enumerate() {
                    let mut d = [0; 3];
                    d[i] = 1;
                    if lattice.offset(s, d).is_some() {
                        *li = geometry::transport(Vec3::axis(i) * h, x)?;
                    }
                }
                Ok(l)
            })
            .collect::<Result<Vec<_>>>()?;
        let j = (0..lattice.len())
            .into_par_iter()
            .map(|s| geometry::dirq(lattice.point(s)).map(|u| u.quaternion()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lattice, mass, links, j })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Visits every site row by row, passing the site index, the value of
    /// `U(h eᵢ)ψ` and of `U(−h eᵢ)ψ` for each axis.
    #[inline]
    fn sweep<F>(&self, psi: &[Quaternion], out: &mut [Quaternion], f: F)
    where
        F: Fn(usize, &[Quaternion; 3], &[Quaternion; 3]) -> Quaternion + Sync,
    {
        let n = self.lattice.n();
        let strides = [n * n, n, 1];
        out.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let c = [row / n, row % n];
            let base = row * n;
            for (k, o) in chunk.iter_mut().enumerate() {
                let s = base + k;
                let coords = [c[0], c[1], k];
                let mut below = [Quaternion::ZERO; 3];
                let mut above = [Quaternion::ZERO; 3];
                for i in 0..3 {
                    let st = strides[i];
                    if coords[i] > 0 {
                        below[i] = self.links[s - st][i] * psi[s - st];
                    }
                    if coords[i] + 1 < n {
                        above[i] = self.links[s][i].conj() * psi[s + st];
                    }
                }
                *o = f(s, &below, &above);
            }
        });
    }

    fn apply_h_raw(&self, psi: &[Quaternion], out: &mut [Quaternion]) {
        let f = -0.5 / (self.mass * self.lattice.step().powi(2));
        self.sweep(psi, out, |s, lo, hi| {
            (lo[0] + hi[0] + lo[1] + hi[1] + lo[2] + hi[2] - psi[s] * 6.0) * f
        });
    }

    fn apply_jh_raw(&self, psi: &[Quaternion], out: &mut [Quaternion]) {
        let f = -0.5 / (self.mass * self.lattice.step().powi(2));
        self.sweep(psi, out, |s, lo, hi| {
            self.j[s] * ((lo[0] + hi[0] + lo[1] + hi[1] + lo[2] + hi[2] - psi[s] * 6.0) * f)
        });
    }

    fn apply_nabla_raw(&self, i: usize, psi: &[Quaternion], out: &mut [Quaternion]) {
        let n = self.lattice.n();
        let st = [n * n, n, 1][i];
        let f = 0.5 / self.lattice.step();
        out.par_chunks_mut(n).enumerate().for_each(|(row, chunk)| {
            let base = row * n;
            for (k, o) in chunk.iter_mut().enumerate() {
                let s = base + k;
                let c = [row / n, row % n, k][i];
                let mut d = Quaternion::ZERO;
                if c > 0 {
                    d -= self.links[s - st][i] * psi[s - st];
                }
                if c + 1 < n {
                    d += self.links[s][i].conj() * psi[s + st];
                }
                *o = d * f;
            }
        });
    }

    fn unary(&self, psi: &LatticeField, f: impl Fn(&[Quaternion], &mut [Quaternion])) -> Result<LatticeField> {
        if psi.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch(format!("{} vs {}", psi.lattice(), self.lattice)));
        }
        let mut out = vec![Quaternion::ZERO; self.lattice.len()];
        f(psi.values(), &mut out);
        LatticeField::from_vec(self.lattice, out)
    }

    pub fn apply(&self, psi: &LatticeField) -> Result<LatticeField> {
        self.unary(psi, |a, b| self.apply_h_raw(a, b))
    }

    /// `JH ψ`.
    pub fn apply_jh(&self, psi: &LatticeField) -> Result<LatticeField> {
        self.unary(psi, |a, b| self.apply_jh_raw(a, b))
    }

    /// `∇ᵢʰ ψ = (U(−h eᵢ) − U(h eᵢ)) ψ / 2h`.
    pub fn nabla(&self, i: usize, psi: &LatticeField) -> Result<LatticeField> {
        assert!(i < 3, "axis index {i} out of range");
        self.unary(psi, |a, b| self.apply_nabla_raw(i, a, b))
    }

    /// Velocity `vᵢ ψ = −(J/m) ∇ᵢʰ ψ`.
    pub fn velocity(&self, i: usize, psi: &LatticeField) -> Result<LatticeField> {
        let g = self.nabla(i, psi)?;
        let m = self.mass;
        let mut out = g.into_values();
        out.par_iter_mut().zip(self.j.par_iter()).for_each(|(o, j)| *o = *j * *o * (-1.0 / m));
        LatticeField::from_vec(self.lattice, out)
    }

    /// One Cayley step of length `dt` (any sign; `dt = 0` returns `ψ`).
    pub fn step(&self, psi: &LatticeField, dt: f64, tol: f64, max_iter: usize) -> Result<LatticeField> {
        self.step_with_stats(psi, dt, tol, max_iter).map(|(f, _)| f)
    }

    /// [`step`](Self::step), also returning the inner-solve statistics.
    pub fn step_with_stats(&self, psi: &LatticeField, dt: f64, tol: f64, max_iter: usize) -> Result<(LatticeField, SolveStats)> {
        if psi.lattice() != &self.lattice {
            return Err(Error::LatticeMismatch(format!("{} vs {}", psi.lattice(), self.lattice)));
        }
        if dt == 0.0 {
            return Ok((psi.clone(), SolveStats { iterations: 0, residual: 0.0 }));
        }
        let tau = 0.5 * dt;
        let len = self.lattice.len();
        let mut tmp = vec![Quaternion::ZERO; len];
        // b = (I − τA)ψ, rhs = (I − τA)b
        let minus_tau_a = |v: &[Quaternion], out: &mut Vec<Quaternion>, tmp: &mut Vec<Quaternion>| {
            self.apply_jh_raw(v, tmp);
            out.par_iter_mut().zip(v.par_iter().zip(tmp.par_iter())).for_each(|(o, (x, ax))| *o = *x - *ax * tau);
        };
        let mut b = vec![Quaternion::ZERO; len];
        minus_tau_a(psi.values(), &mut b, &mut tmp);
        let mut rhs = vec![Quaternion::ZERO; len];
        minus_tau_a(&b, &mut rhs, &mut tmp);
        // N v = v − τ² A(Av)
        let mut av = vec![Quaternion::ZERO; len];
        let normal = |v: &[Quaternion], out: &mut Vec<Quaternion>, av: &mut Vec<Quaternion>, tmp: &mut Vec<Quaternion>| {
            self.apply_jh_raw(v, av);
            self.apply_jh_raw(av, tmp);
            out.par_iter_mut().zip(v.par_iter().zip(tmp.par_iter())).for_each(|(o, (x, a2))| *o = *x - *a2 * (tau * tau));
        };
        // (I − τA)²ψ agrees with the solution to second order in τ
        let mut x = rhs.clone();
        let mut nx = vec![Quaternion::ZERO; len];
        normal(&x, &mut nx, &mut av, &mut tmp);
        let mut r: Vec<Quaternion> = rhs.par_iter().zip(nx.par_iter()).map(|(a, b)| *a - *b).collect();
        let mut p = r.clone();
        let scale = dot(&rhs, &rhs).sqrt().max(f64::MIN_POSITIVE);
        let target = tol * scale;
        let mut rr = dot(&r, &r);
        let mut np = nx;
        for it in 0..max_iter {
            if rr.sqrt() <= target {
                return Ok((LatticeField::from_vec(self.lattice, x)?, SolveStats { iterations: it, residual: rr.sqrt() / scale }));
            }
            normal(&p, &mut np, &mut av, &mut tmp);
            let alpha = rr / dot(&p, &np);
            x.par_iter_mut().zip(p.par_iter()).for_each(|(x, p)| *x += *p * alpha);
            r.par_iter_mut().zip(np.par_iter()).for_each(|(r, q)| *r = *r - *q * alpha);
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            p.par_iter_mut().zip(r.par_iter()).for_each(|(p, r)| *p = *r + *p * beta);
        }
        if rr.sqrt() <= target {
            return Ok((LatticeField::from_vec(self.lattice, x)?, SolveStats { iterations: max_iter, residual: rr.sqrt() / scale }));
        }
        Err(Error::Solver { iterations: max_iter, residual: rr.sqrt() / scale })
    }

    /// Expectation values at one instant.
    pub fn observe(&self, t: f64, psi: &LatticeField) -> Result<Sample> {
        let nn = psi.norm_sqr();
        let mut position = [0.0; 3];
        let mut velocity = [0.0; 3];
        let mut vpsi = Vec::with_capacity(3);
        let mut bpsi = Vec::with_capacity(3);
        for i in 0..3 {
            position[i] = psi.inner_re(&psi.map(|x, q| q * x[i]))? / nn;
            let v = self.velocity(i, psi)?;
            velocity[i] = psi.inner_re(&v)? / nn;
            vpsi.push(v);
            bpsi.push(psi.map(|x, q| q * (0.5 * x[i] / x.norm().powi(3))));
        }
        let mut force = [0.0; 3];
        for (i, f) in force.iter_mut().enumerate() {
            for j in 0..3 {
                for k in 0..3 {
                    let eps = levi_civita(i, j, k);
                    if eps != 0.0 {
                        *f += eps * vpsi[j].inner_re(&bpsi[k])?;
                    }
                }
            }
            *f /= self.mass * nn;
        }
        let energy = psi.inner_re(&self.apply(psi)?)? / nn;
        Ok(Sample {
            t,
            position: Vec3(position),
            velocity: Vec3(velocity),
            norm: nn.sqrt(),
            energy,
            force: Vec3(force),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub iterations: usize,
    /// Final residual relative to the right-hand side.
    pub residual: f64,
}

/// Deterministic real inner product of raw component vectors.
fn dot(a: &[Quaternion], b: &[Quaternion]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.q0 * q.q0 + p.q1 * q.q1 + p.q2 * q.q2 + p.q3 * q.q3).sum::<f64>())
        .collect();
    partial.iter().sum()
}

/// Expectation values at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub norm: f64,
    pub energy: f64,
    /// Symmetrized Lorentz force `(1/2m) ε_ijk (v_j B_k − B_j v_k)` with
    /// `v = −(J/m)∇ʰ` and `B = x/2‖x‖³`.
    pub force: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Relative norm drift `max |‖ψ(t)‖ − ‖ψ(0)‖| / ‖ψ(0)‖`.
    pub fn norm_drift(&self) -> f64 {
        let Some(first) = self.samples.first() else { return 0.0 };
        self.samples.iter().map(|s| (s.norm - first.norm).abs() / first.norm).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,x1,x2,x3,v1,v2,v3,norm,energy,f1,f2,f3")?;
        for s in &self.samples {
            let (x, v, f) = (s.position.0, s.velocity.0, s.force.0);
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                s.t, x[0], x[1], x[2], v[0], v[1], v[2], s.norm, s.energy, f[0], f[1], f[2]
            )?;
        }
        Ok(())
    }
}

/// Runs `cfg.steps` Cayley steps from the configured packet, sampling every
/// step. Returns the trajectory and the final state.
pub fn evolve(cfg: &EvolutionConfig) -> Result<(Trajectory, LatticeField)> {
    cfg.validate()?;
    let h = LatticeHamiltonian::new(cfg.lattice, cfg.mass)?;
    evolve_from(&h, cfg.initial_state(), cfg.dt, cfg.steps, cfg.solver_tol, cfg.max_iter)
}

pub fn evolve_from(
    h: &LatticeHamiltonian,
    psi0: LatticeField,
    dt: f64,
    steps: usize,
    tol: f64,
    max_iter: usize,
) -> Result<(Trajectory, LatticeField)> {
    let mut psi = psi0;
    let mut traj = Trajectory { samples: vec![h.observe(0.0, &psi)?] };
    for n in 1..=steps {
        psi = h.step(&psi, dt, tol, max_iter)?;
        traj.samples.push(h.observe(n as f64 * dt, &psi)?);
    }
    Ok((traj, psi))
}

/// Tolerances for [`ehrenfest`]. Optional entries add a check when present.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhrenfestTol {
    /// Velocity relation, relative to the largest `‖⟨v⟩‖`.
    pub velocity: f64,
    /// Force relation, relative to the largest `‖⟨F⟩‖`.
    pub force: Option<f64>,
    /// `‖⟨X⟩(t) − ⟨X⟩(0) − ⟨v⟩(0) t‖ / ‖⟨v⟩(0) t‖`.
    pub ballistic: Option<f64>,
    /// Absolute bound on `‖⟨v⟩‖`.
    pub rest: Option<f64>,
    pub norm: f64,
}

impl Default for EhrenfestTol {
    fn default() -> Self {
        Self { velocity: 0.01, force: Some(0.05), ballistic: None, rest: None, norm: 1e-10 }
    }
}

impl Preset {
    /// The relations each preset is designed to resolve: ballistic motion far
    /// from the monopole, a packet at rest, and the Lorentz force at close
    /// approach (which needs the finer grid of that preset).
    pub fn tolerances(self) -> EhrenfestTol {
        let base = EhrenfestTol::default();
        match self {
            Preset::FreeLimit => EhrenfestTol { force: None, ballistic: Some(0.05), ..base },
            Preset::Static => EhrenfestTol { force: None, rest: Some(1e-4), ..base },
            Preset::Flyby => base,
        }
    }
}

const VELOCITY: &str = "d⟨X⟩/dt = ⟨−(J/m)∇⟩";
const FORCE: &str = "d²⟨X⟩/dt² = ⟨ε(vB − Bv)⟩/2m";

/// Compares finite differences of `⟨X⟩(t)` with `⟨v⟩` and with the force
/// expectation at interior samples. With fewer than three samples the
/// difference checks have nothing to test and report zero samples.
pub fn ehrenfest(traj: &Trajectory, tol: &EhrenfestTol) -> Report {
    let s = &traj.samples;
    let mut report = Report::new("ehrenfest", 0, s.len());
    let drifts: Vec<f64> = s.iter().map(|x| (x.norm - s[0].norm).abs() / s[0].norm).collect();
    report.push(Check::from_deviations("norm_conservation", "‖ψ(t)‖ = ‖ψ(0)‖", &drifts, tol.norm));
    if let Some(t) = tol.rest {
        let speeds: Vec<f64> = s.iter().map(|x| x.velocity.norm()).collect();
        report.push(Check::from_deviations("rest", "⟨v⟩ = 0", &speeds, t));
    }
    if let Some(t) = tol.ballistic {
        let devs: Vec<f64> = s[1..]
            .iter()
            .map(|x| {
                let free = s[0].velocity * (x.t - s[0].t);
                (x.position - s[0].position - free).norm() / free.norm().max(f64::MIN_POSITIVE)
            })
            .collect();
        push_or_vacuous(&mut report, "ballistic", "⟨X⟩(t) = ⟨X⟩(0) + ⟨v⟩(0) t", &devs, t);
    }
    let vscale = s.iter().map(|x| x.velocity.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let fscale = s.iter().map(|x| x.force.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut dv = Vec::new();
    let mut df = Vec::new();
    for n in 1..s.len().saturating_sub(1) {
        let dt = 0.5 * (s[n + 1].t - s[n - 1].t);
        let xdot = (s[n + 1].position - s[n - 1].position) * (0.5 / dt);
        let xddot = (s[n + 1].position - s[n].position * 2.0 + s[n - 1].position) * (1.0 / (dt * dt));
        dv.push((xdot - s[n].velocity).norm() / vscale);
        df.push((xddot - s[n].force).norm() / fscale);
    }
    push_or_vacuous(&mut report, "velocity", VELOCITY, &dv, tol.velocity);
    if let Some(t) = tol.force {
        push_or_vacuous(&mut report, "force", FORCE, &df, t);
    }
    report
}

fn push_or_vacuous(report: &mut Report, name: &str, formula: &str, devs: &[f64], tol: f64) {
    if devs.is_empty() {
        report.push(Check::with_verdict(name, formula, 0, 0.0, 0.0, tol, true));
    } else {
        report.push(Check::from_deviations(name, formula, devs, tol));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{jop, transport_laplacian, transport_nabla};

    fn small() -> (EvolutionConfig, LatticeHamiltonian) {
        let mut cfg = EvolutionConfig::preset(Preset::FreeLimit);
        cfg.lattice = Lattice::new(16, 6.0).unwrap();
        cfg.packet.sigma = 0.6;
        cfg.packet.center = Vec3::new(2.5, -1.0, 0.5);
        let h = LatticeHamiltonian::new(cfg.lattice, cfg.mass).unwrap();
        (cfg, h)
    }

    #[test]
    fn matches_operator_composition() {
        let (cfg, h) = small();
        let psi = cfg.initial_state();
        let step = cfg.lattice.step();
        let generic = transport_laplacian(step).scale(-0.5 / cfg.mass).apply(&psi).unwrap();
        let fast = h.apply(&psi).unwrap();
        assert!(fast.max_dev(&generic).unwrap() <= 1e-13 * fast.max_abs());
        for i in 0..3 {
            let a = h.nabla(i, &psi).unwrap();
            let b = transport_nabla(i, step).apply(&psi).unwrap();
            assert!(a.max_dev(&b).unwrap() <= 1e-13 * a.max_abs());
        }
    }

    #[test]
    fn hamiltonian_is_symmetric_and_commutes_with_j() {
        let (cfg, h) = small();
        let a = cfg.initial_state();
        let mut other = cfg;
        other.packet.center = Vec3::new(-1.5, 2.0, 1.0);
        other.packet.momentum = Vec3::new(1.0, 0.0, -2.0);
        let b = other.initial_state();
        let ab = a.inner(&h.apply(&b).unwrap()).unwrap();
        let ba = h.apply(&a).unwrap().inner(&b).unwrap();
        assert!((ab - ba).max_abs() <= 1e-13 * ab.norm().max(1.0));
        let j = jop();
        let jh = j.apply(&h.apply(&a).unwrap()).unwrap();
        let hj = h.apply(&j.apply(&a).unwrap()).unwrap();
        assert!(jh.max_dev(&hj).unwrap() <= 1e-13 * jh.max_abs());
    }

    #[test]
    fn zero_step_is_identity() {
        let (cfg, h) = small();
        let psi = cfg.initial_state();
        assert_eq!(h.step(&psi, 0.0, 1e-14, 10).unwrap(), psi);
    }

    #[test]
    fn step_is_unitary_reversible_and_j_covariant() {
        let (cfg, h) = small();
        let psi = cfg.initial_state();
        let fwd = h.step(&psi, 0.05, 1e-14, 500).unwrap();
        assert!((fwd.norm() - psi.norm()).abs() <= 1e-12 * psi.norm());
        let back = h.step(&fwd, -0.05, 1e-14, 500).unwrap();
        assert!(back.max_dev(&psi).unwrap() <= 1e-8);
        let j = jop();
        let a = h.step(&j.apply(&psi).unwrap(), 0.05, 1e-14, 500).unwrap();
        let b = j.apply(&fwd).unwrap();
        assert!(a.max_dev(&b).unwrap() <= 1e-10);
    }

    #[test]
    fn solver_failure_reports_residual() {
        let (cfg, h) = small();
        let err = h.step(&cfg.initial_state(), 0.5, 1e-14, 1).unwrap_err();
        assert!(matches!(err, Error::Solver { iterations: 1, residual } if residual > 1e-14));
    }

    #[test]
    fn kicked_packet_velocity() {
        let (mut cfg, _) = small();
        cfg.lattice = Lattice::new(32, 4.0).unwrap();
        let h = LatticeHamiltonian::new(cfg.lattice, cfg.mass).unwrap();
        cfg.packet.momentum = Vec3::ZERO;
        let rest = h.observe(0.0, &cfg.initial_state()).unwrap();
        cfg.packet.momentum = Vec3::new(0.0, 1.0, 0.0);
        let kicked = h.observe(0.0, &cfg.initial_state()).unwrap();
        let dv = kicked.velocity - rest.velocity;
        let expect = 1.0 / cfg.mass;
        assert!((dv[1] - expect).abs() < 0.05 * expect, "{dv:?} vs {expect}");
        assert!(dv[0].abs() < 1e-12 && dv[2].abs() < 1e-12);
        assert!((kicked.norm - rest.norm).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        let mut cfg = EvolutionConfig::preset(Preset::Flyby);
        assert!(cfg.validate().is_ok());
        cfg.packet.center = Vec3::new(0.5, 0.5, 0.0);
        assert!(cfg.validate().is_err());
        cfg.packet.center = Vec3::new(5.0, 0.0, 0.0);
        assert!(cfg.validate().is_err());
        let mut cfg = EvolutionConfig::preset(Preset::Static);
        cfg.mass = 0.0;
        assert!(matches!(cfg.validate(), Err(Error::Usage(_))));
        assert!("sideways".parse::<Preset>().is_err());
    }

    #[test]
    fn short_trajectory_reports() {
        let (mut cfg, _) = small();
        cfg.steps = 0;
        let (traj, _) = evolve(&cfg).unwrap();
        assert_eq!(traj.len(), 1);
        let r = ehrenfest(&traj, &EhrenfestTol::default());
        assert!(r.passed());
        let mut csv = Vec::new();
        traj.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 2);
    }

    #[test]
    fn free_packet_ehrenfest() {
        let (mut cfg, _) = small();
        cfg.steps = 30;
        let (traj, psi) = evolve(&cfg).unwrap();
        assert!(traj.norm_drift() <= 1e-12);
        assert!(splitting::in_slice(&psi, &cfg.packet.slice, 1e-8).member);
        let r = ehrenfest(&traj, &Preset::FreeLimit.tolerances());
        assert!(r.check("velocity").unwrap().pass, "{}", r.summary());
        let e0 = traj.samples[0].energy;
        assert!(traj.samples.iter().all(|s| (s.energy - e0).abs() <= 1e-10 * e0.abs()));
    }
}
