//! Quaternion-valued wavefunctions on `ℝ³ ∖ {0}`.
//!
//! Scalars act on the right (`ψ q`), operators on the left. Two
//! representations exist: [`AnalyticField`] (a closure, evaluable anywhere)
//! and [`LatticeField`] (samples on a cell-centred cubic grid that never
//! contains the origin).

use std::fmt;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::quat::Quaternion;

/// Sites per parallel work unit; fixed so reductions are reproducible.
pub(crate) const CHUNK: usize = 4096;

/// Cubic grid of `n³` cell centres on `[−L, L]³`. With `n` even every
/// coordinate is an odd multiple of `L/n`, so the origin is never a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    n: usize,
    half_width: f64,
}

impl Lattice {
    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(Error::Usage(format!("lattice needs an even n ≥ 4, got {n}")));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::Usage(format!("lattice half-width must be positive, got {half_width}")));
        }
        Ok(Self { n, half_width })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.step().powi(3)
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coord(&self, k: usize) -> f64 {
        -self.half_width + (k as f64 + 0.5) * self.step()
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[0] * self.n + ijk[1]) * self.n + ijk[2]
    }

    pub fn indices(&self, site: usize) -> [usize; 3] {
        let n = self.n;
        [site / (n * n), (site / n) % n, site % n]
    }

    pub fn point(&self, site: usize) -> Vec3 {
        let [i, j, k] = self.indices(site);
        Vec3::new(self.coord(i), self.coord(j), self.coord(k))
    }

    /// Neighbour of `site` displaced by `d` grid steps, if still on the grid.
    pub fn offset(&self, site: usize, d: [isize; 3]) -> Option<usize> {
        let ijk = self.indices(site);
        let mut out = [0usize; 3];
        for a in 0..3 {
            let v = ijk[a] as isize + d[a];
            if v < 0 || v >= self.n as isize {
                return None;
            }
            out[a] = v as usize;
        }
        Some(self.index(out))
    }

    /// Expresses `a` as whole grid steps, if it is commensurate with the grid.
    pub fn steps_of(&self, a: Vec3) -> Result<[isize; 3]> {
        let h = self.step();
        let mut d = [0isize; 3];
        for i in 0..3 {
            let s = a[i] / h;
            let r = s.round();
            if (s - r).abs() > 1e-9 {
                return Err(Error::Usage(format!(
                    "shift {:?} is not a whole number of lattice steps (h = {h})",
                    a.0
                )));
            }
            d[i] = r as isize;
        }
        Ok(d)
    }

    /// Grid displacement as a vector.
    pub fn displacement(&self, d: [isize; 3]) -> Vec3 {
        let h = self.step();
        Vec3::new(d[0] as f64 * h, d[1] as f64 * h, d[2] as f64 * h)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}³ on [−{L}, {L}]³", self.n, L = self.half_width)
    }
}

/// One quaternion per lattice site.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    lattice: Lattice,
    data: Vec<Quaternion>,
}

impl LatticeField {
    pub fn zeros(lattice: Lattice) -> Self {
        Self { lattice, data: vec![Quaternion::ZERO; lattice.len()] }
    }

    pub fn from_vec(lattice: Lattice, data: Vec<Quaternion>) -> Result<Self> {
        if data.len() != lattice.len() {
            return Err(Error::LatticeMismatch(format!(
                "{} values for a lattice of {} sites",
                data.len(),
                lattice.len()
            )));
        }
        Ok(Self { lattice, data })
    }

    pub fn from_fn<F>(lattice: Lattice, f: F) -> Self
    where
        F: Fn(Vec3) -> Quaternion + Sync,
    {
        let data = (0..lattice.len()).into_par_iter().map(|s| f(lattice.point(s))).collect();
        Self { lattice, data }
    }

    pub fn try_from_fn<F>(lattice: Lattice, f: F) -> Result<Self>
    where
        F: Fn(Vec3) -> Result<Quaternion> + Sync,
    {
        let data = (0..lattice.len())
            .into_par_iter()
            .map(|s| f(lattice.point(s)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lattice, data })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[Quaternion] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Quaternion] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Quaternion> {
        self.data
    }

    pub fn at(&self, site: usize) -> Quaternion {
        self.data[site]
    }

    pub(crate) fn check_same(&self, other: &Self) -> Result<()> {
        if self.lattice != other.lattice {
            return Err(Error::LatticeMismatch(format!("{} vs {}", self.lattice, other.lattice)));
        }
        Ok(())
    }

    /// Site-wise map; `f` receives the site position and value.
    pub fn map<F>(&self, f: F) -> Self
    where
        F: Fn(Vec3, Quaternion) -> Quaternion + Sync,
    {
        let lat = self.lattice;
        let data = self.data.par_iter().enumerate().map(|(s, &q)| f(lat.point(s), q)).collect();
        Self { lattice: lat, data }
    }

    pub fn try_map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(Vec3, Quaternion) -> Result<Quaternion> + Sync,
    {
        let lat = self.lattice;
        let data = self
            .data
            .par_iter()
            .enumerate()
            .map(|(s, &q)| f(lat.point(s), q))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { lattice: lat, data })
    }

    /// Site-wise combination of two fields on the same lattice.
    pub fn zip_with<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(Quaternion, Quaternion) -> Quaternion + Sync,
    {
        self.check_same(other)?;
        let data = self.data.par_iter().zip(other.data.par_iter()).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { lattice: self.lattice, data })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Multiplication by a real number (central, so side does not matter).
    pub fn scale(&self, s: f64) -> Self {
        self.map(|_, q| q * s)
    }

    /// `self + s·other`.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b * s)
    }

    /// Right scalar action `[ψq](x) = ψ(x) q`.
    pub fn rscale(&self, q: Quaternion) -> Self {
        self.map(|_, v| v * q)
    }

    /// `(φ, ψ) = Σ_x φ(x)* ψ(x) · h³`, summed in fixed chunks.
    pub fn inner(&self, psi: &Self) -> Result<Quaternion> {
        self.check_same(psi)?;
        let partial: Vec<Quaternion> = self
            .data
            .par_chunks(CHUNK)
            .zip(psi.data.par_chunks(CHUNK))
            .map(|(a, b)| a.iter().zip(b).fold(Quaternion::ZERO, |acc, (p, q)| acc + p.conj() * *q))
            .collect();
        let sum = partial.into_iter().fold(Quaternion::ZERO, |a, b| a + b);
        Ok(sum * self.lattice.cell_volume())
    }

    /// Real part of the inner product: the real Hilbert structure on `4n³` reals.
    pub fn inner_re(&self, psi: &Self) -> Result<f64> {
        self.check_same(psi)?;
        let partial: Vec<f64> = self
            .data
            .par_chunks(CHUNK)
            .zip(psi.data.par_chunks(CHUNK))
            .map(|(a, b)| {
                a.iter().zip(b).fold(0.0, |acc, (p, q)| {
                    acc + p.q0 * q.q0 + p.q1 * q.q1 + p.q2 * q.q2 + p.q3 * q.q3
                })
            })
            .collect();
        Ok(partial.into_iter().sum::<f64>() * self.lattice.cell_volume())
    }

    pub fn norm_sqr(&self) -> f64 {
        let partial: Vec<f64> =
            self.data.par_chunks(CHUNK).map(|c| c.iter().map(|q| q.norm_sqr()).sum()).collect();
        partial.into_iter().sum::<f64>() * self.lattice.cell_volume()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest site-wise `|self(x) − other(x)|`.
    pub fn max_dev(&self, other: &Self) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| a.dist(*b))
            .reduce(|| 0.0, f64::max))
    }

    /// Largest site-wise `|ψ(x)|`.
    pub fn max_abs(&self) -> f64 {
        self.data.par_iter().map(|q| q.norm()).reduce(|| 0.0, f64::max)
    }

    /// Writes `site,q0,q1,q2,q3` rows after a `# n=.. half_width=..` header.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        writeln!(w, "# n={} half_width={}", self.lattice.n, self.lattice.half_width)?;
        writeln!(w, "site,q0,q1,q2,q3")?;
        for (s, q) in self.data.iter().enumerate() {
            writeln!(w, "{s},{},{},{},{}", q.q0, q.q1, q.q2, q.q3)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let bad = |m: String| Error::Usage(format!("malformed field CSV: {m}"));
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| bad("empty input".into()))??;
        let mut n = None;
        let mut half_width = None;
        for tok in header.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                n = v.parse::<usize>().ok();
            } else if let Some(v) = tok.strip_prefix("half_width=") {
                half_width = v.parse::<f64>().ok();
            }
        }
        let (Some(n), Some(hw)) = (n, half_width) else {
            return Err(bad(format!("header {header:?}")));
        };
        let lattice = Lattice::new(n, hw)?;
        let mut data = vec![Quaternion::ZERO; lattice.len()];
        let mut seen = vec![false; lattice.len()];
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("site") {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad(format!("row {line:?}")));
            }
            let site: usize = cols[0].parse().map_err(|_| bad(format!("site {:?}", cols[0])))?;
            if site >= data.len() {
                return Err(bad(format!("site {site} out of range")));
            }
            let mut c = [0.0; 4];
            for (k, v) in cols[1..].iter().enumerate() {
                c[k] = v.parse().map_err(|_| bad(format!("value {v:?}")))?;
            }
            data[site] = Quaternion::from_array(c);
            seen[site] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(bad(format!("site {missing} missing")));
        }
        Ok(Self { lattice, data })
    }

    /// Binary layout: `b"QFLD"`, `u32` version (1), `u32` n, `f64` half-width,
    /// then `n³` sites of four `f64`; all little-endian.
    pub fn write_binary<W: Write>(&self, w: W) -> Result<()> {
        let mut w = BufWriter::new(w);
        w.write_all(b"QFLD")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&(self.lattice.n as u32).to_le_bytes())?;
        w.write_all(&self.lattice.half_width.to_le_bytes())?;
        for q in &self.data {
            for c in q.to_array() {
                w.write_all(&c.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != b"QFLD" {
            return Err(Error::Usage("not a QFLD field file".into()));
        }
        let mut b4 = [0u8; 4];
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b4)?;
        let version = u32::from_le_bytes(b4);
        if version != 1 {
            return Err(Error::Usage(format!("unsupported QFLD version {version}")));
        }
        r.read_exact(&mut b4)?;
        let n = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b8)?;
        let lattice = Lattice::new(n, f64::from_le_bytes(b8))?;
        let mut data = Vec::with_capacity(lattice.len());
        for _ in 0..lattice.len() {
            let mut c = [0.0; 4];
            for v in c.iter_mut() {
                r.read_exact(&mut b8)?;
                *v = f64::from_le_bytes(b8);
            }
            data.push(Quaternion::from_array(c));
        }
        Ok(Self { lattice, data })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => self.write_csv(f),
            _ => self.write_binary(f),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::read_csv(std::io::BufReader::new(f)),
            _ => Self::read_binary(std::io::BufReader::new(f)),
        }
    }
}

type FieldFn = dyn Fn(Vec3) -> Quaternion + Send + Sync;

/// A wavefunction given by a closure.
#[derive(Clone)]
pub struct AnalyticField {
    f: Arc<FieldFn>,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnalyticField(..)")
    }
}

impl AnalyticField {
    pub fn new<F>(f: F) -> Self
    where
        F: Fn(Vec3) -> Quaternion + Send + Sync + 'static,
    {
        Self { f: Arc::new(f) }
    }

    pub fn eval(&self, x: Vec3) -> Quaternion {
        (self.f)(x)
    }

    pub fn sample(&self, lattice: Lattice) -> LatticeField {
        LatticeField::from_fn(lattice, |x| self.eval(x))
    }

    pub fn rscale(&self, q: Quaternion) -> Self {
        let f = self.f.clone();
        Self::new(move |x| f(x) * q)
    }

    /// Left multiplication by the symbol `g`.
    pub fn multop<G>(&self, g: G) -> Self
    where
        G: Fn(Vec3) -> Quaternion + Send + Sync + 'static,
    {
        let f = self.f.clone();
        Self::new(move |x| g(x) * f(x))
    }

    /// `x ↦ ψ(x) g(x)`.
    pub fn multop_right<G>(&self, g: G) -> Self
    where
        G: Fn(Vec3) -> Quaternion + Send + Sync + 'static,
    {
        let f = self.f.clone();
        Self::new(move |x| f(x) * g(x))
    }

    /// `x ↦ ψ(x − a)`.
    pub fn translate(&self, a: Vec3) -> Self {
        let f = self.f.clone();
        Self::new(move |x| f(x - a))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        Self::new(move |x| f(x) + g(x))
    }

    /// Gaussian `exp(−‖x−c‖²/(2σ²)) · q`.
    pub fn gaussian(center: Vec3, sigma: f64, q: Quaternion) -> Self {
        Self::new(move |x| q * (-(x - center).norm_sqr() / (2.0 * sigma * sigma)).exp())
    }

    /// Smooth compactly supported bump `exp(1 − 1/(1 − ‖x−c‖²/R²)) · q`, zero
    /// outside the ball of radius `R`.
    pub fn bump(center: Vec3, radius: f64, q: Quaternion) -> Self {
        Self::new(move |x| {
            let s = (x - center).norm_sqr() / (radius * radius);
            if s >= 1.0 {
                Quaternion::ZERO
            } else {
                q * (1.0 - 1.0 / (1.0 - s)).exp()
            }
        })
    }
}

/// Either representation of a wavefunction.
#[derive(Debug, Clone)]
pub enum QField {
    Analytic(AnalyticField),
    Lattice(LatticeField),
}

impl QField {
    /// Samples onto `lattice` (a lattice field must already live there).
    pub fn on(&self, lattice: &Lattice) -> Result<LatticeField> {
        match self {
            QField::Analytic(a) => Ok(a.sample(*lattice)),
            QField::Lattice(l) if l.lattice() == lattice => Ok(l.clone()),
            QField::Lattice(l) => Err(Error::LatticeMismatch(format!("{} vs {lattice}", l.lattice()))),
        }
    }

    pub fn lattice(&self) -> Option<&Lattice> {
        match self {
            QField::Lattice(l) => Some(l.lattice()),
            QField::Analytic(_) => None,
        }
    }

    pub fn rscale(&self, q: Quaternion) -> Self {
        match self {
            QField::Analytic(a) => QField::Analytic(a.rscale(q)),
            QField::Lattice(l) => QField::Lattice(l.rscale(q)),
        }
    }
}

impl From<LatticeField> for QField {
    fn from(f: LatticeField) -> Self {
        QField::Lattice(f)
    }
}

impl From<AnalyticField> for QField {
    fn from(f: AnalyticField) -> Self {
        QField::Analytic(f)
    }
}

/// Inner product. Analytic arguments are sampled on the lattice of the other
/// argument; two analytic fields need [`inner_on`].
pub fn inner(phi: &QField, psi: &QField) -> Result<Quaternion> {
    let lattice = phi
        .lattice()
        .or(psi.lattice())
        .copied()
        .ok_or_else(|| Error::Usage("inner product of two analytic fields needs a quadrature grid".into()))?;
    inner_on(&lattice, phi, psi)
}

pub fn inner_on(lattice: &Lattice, phi: &QField, psi: &QField) -> Result<Quaternion> {
    phi.on(lattice)?.inner(&psi.on(lattice)?)
}

pub fn rscale(psi: &QField, q: Quaternion) -> QField {
    psi.rscale(q)
}

/// Half-open axis-aligned box `[lo, hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec3,
    pub hi: Vec3,
}

impl Aabb {
    pub fn new(lo: Vec3, hi: Vec3) -> Self {
        Self { lo, hi }
    }

    pub fn contains(&self, x: Vec3) -> bool {
        (0..3).all(|i| self.lo[i] <= x[i] && x[i] < self.hi[i])
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.lo[i] >= self.hi[i])
    }

    pub fn intersect(&self, o: &Self) -> Self {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for i in 0..3 {
            lo[i] = self.lo[i].max(o.lo[i]);
            hi[i] = self.hi[i].min(o.hi[i]);
        }
        Self::new(Vec3(lo), Vec3(hi))
    }

    pub fn translate(&self, a: Vec3) -> Self {
        Self::new(self.lo + a, self.hi + a)
    }
}

/// Finite union of boxes: the Borel sets `Δ` used for spectral projections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BorelBox {
    boxes: Vec<Aabb>,
}

impl BorelBox {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn cuboid(lo: Vec3, hi: Vec3) -> Self {
        Self { boxes: vec![Aabb::new(lo, hi)] }
    }

    /// All of `ℝ³`.
    pub fn everything() -> Self {
        let inf = f64::INFINITY;
        Self::cuboid(Vec3::new(-inf, -inf, -inf), Vec3::new(inf, inf, inf))
    }

    pub fn boxes(&self) -> &[Aabb] {
        &self.boxes
    }

    pub fn contains(&self, x: Vec3) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }

    pub fn union(&self, o: &Self) -> Self {
        let mut boxes = self.boxes.clone();
        boxes.extend(o.boxes.iter().copied());
        Self { boxes }
    }

    pub fn intersect(&self, o: &Self) -> Self {
        let boxes = self
            .boxes
            .iter()
            .flat_map(|a| o.boxes.iter().map(move |b| a.intersect(b)))
            .filter(|b| !b.is_empty())
            .collect();
        Self { boxes }
    }

    /// `Δ + a`.
    pub fn translate(&self, a: Vec3) -> Self {
        Self { boxes: self.boxes.iter().map(|b| b.translate(a)).collect() }
    }
}

/// Spectral projection `[E(Δ)ψ](x) = χ_Δ(x) ψ(x)`.
pub fn project(delta: &BorelBox, psi: &LatticeField) -> LatticeField {
    psi.map(|x, q| if delta.contains(x) { q } else { Quaternion::ZERO })
}

/// Left multiplication `(f̂ψ)(x) = f(x) ψ(x)`.
pub fn multop<F>(f: F, psi: &LatticeField) -> LatticeField
where
    F: Fn(Vec3) -> Quaternion + Sync,
{
    psi.map(|x, q| f(x) * q)
}

pub fn try_multop<F>(f: F, psi: &LatticeField) -> Result<LatticeField>
where
    F: Fn(Vec3) -> Result<Quaternion> + Sync,
{
    psi.try_map(|x, q| Ok(f(x)? * q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::dirq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_field(lat: Lattice, seed: u64) -> LatticeField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..lat.len())
            .map(|_| Quaternion::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        LatticeField::from_vec(lat, data).unwrap()
    }

    #[test]
    fn lattice_avoids_origin() {
        assert!(Lattice::new(5, 1.0).is_err());
        assert!(Lattice::new(2, 1.0).is_err());
        assert!(Lattice::new(8, 0.0).is_err());
        let lat = Lattice::new(8, 2.0).unwrap();
        for s in 0..lat.len() {
            let p = lat.point(s);
            for i in 0..3 {
                let m = p[i] / (lat.half_width() / lat.n() as f64);
                assert!((m - m.round()).abs() < 1e-12 && (m.round() as i64) % 2 != 0);
            }
            assert_eq!(lat.index(lat.indices(s)), s);
        }
        assert_eq!(lat.offset(0, [-1, 0, 0]), None);
        assert_eq!(lat.offset(0, [1, 0, 0]), Some(64));
        assert!(lat.steps_of(Vec3::new(0.5, -1.0, 0.0)).is_ok());
        assert!(lat.steps_of(Vec3::new(0.3, 0.0, 0.0)).is_err());
    }

    #[test]
    fn inner_product_structure() {
        let lat = Lattice::new(8, 2.0).unwrap();
        let (phi, psi) = (random_field(lat, 1), random_field(lat, 2));
        let pp = psi.inner(&psi).unwrap();
        assert!(pp.q0 > 0.0 && Quaternion::pure(pp.vector()).norm() < 1e-14 * pp.q0);
        let lhs = phi.rscale(Quaternion::E1).inner(&psi.rscale(Quaternion::E2)).unwrap();
        let rhs = -Quaternion::E1 * phi.inner(&psi).unwrap() * Quaternion::E2;
        assert!(lhs.dist(rhs) < 1e-12);
        let r = psi.inner(&psi.rscale(Quaternion::E1)).unwrap();
        assert!(r.dist(pp * Quaternion::E1) < 1e-12);
        // conjugate symmetry
        assert!(phi.inner(&psi).unwrap().conj().dist(psi.inner(&phi).unwrap()) < 1e-12);
        let other = LatticeField::zeros(Lattice::new(10, 2.0).unwrap());
        assert!(matches!(phi.inner(&other), Err(Error::LatticeMismatch(_))));
    }

    #[test]
    fn gaussian_norm() {
        let lat = Lattice::new(64, 6.0).unwrap();
        let g = AnalyticField::new(|x: Vec3| Quaternion::real((-x.norm_sqr()).exp())).sample(lat);
        let want = (PI / 2.0).powf(1.5);
        let got = g.inner(&g).unwrap();
        assert!((got.q0 - want).abs() < 1e-6, "{} vs {want}", got.q0);
    }

    #[test]
    fn right_scaling() {
        let lat = Lattice::new(6, 1.0).unwrap();
        let psi = random_field(lat, 3);
        assert_eq!(psi.rscale(Quaternion::E0), psi);
        let (p, q) = (Quaternion::new(0.2, -1.0, 0.4, 0.9), Quaternion::new(-0.3, 0.5, 1.2, 0.1));
        assert!(psi.rscale(p).rscale(q).max_dev(&psi.rscale(p * q)).unwrap() < 1e-14);
        assert!((psi.rscale(p).norm() - psi.norm() * p.norm()).abs() < 1e-12);
        // right and left multiplication differ
        let left = multop(|_| Quaternion::E1, &psi);
        assert!(left.max_dev(&psi.rscale(Quaternion::E1)).unwrap() > 0.1);
    }

    #[test]
    fn projections() {
        let lat = Lattice::new(8, 2.0).unwrap();
        let psi = random_field(lat, 4);
        assert_eq!(project(&BorelBox::everything(), &psi), psi);
        let d1 = BorelBox::cuboid(Vec3::new(-1.0, -2.0, 0.0), Vec3::new(1.5, 0.5, 2.0));
        let d2 = BorelBox::cuboid(Vec3::new(0.0, -1.0, -1.0), Vec3::new(2.0, 2.0, 1.0))
            .union(&BorelBox::cuboid(Vec3::new(-2.0, -2.0, -2.0), Vec3::new(-1.5, 0.0, 0.0)));
        let p1 = project(&d1, &psi);
        assert_eq!(project(&d1, &p1), p1);
        assert_eq!(project(&d1, &project(&d2, &psi)), project(&d1.intersect(&d2), &psi));
        // self-adjoint
        let phi = random_field(lat, 5);
        let a = phi.inner(&project(&d2, &psi)).unwrap();
        let b = project(&d2, &phi).inner(&psi).unwrap();
        assert!(a.dist(b) < 1e-13);
        assert_eq!(project(&BorelBox::empty(), &psi), LatticeField::zeros(lat));
    }

    #[test]
    fn multiplication_operators() {
        let lat = Lattice::new(8, 2.0).unwrap();
        let psi = random_field(lat, 6);
        assert_eq!(multop(|_| Quaternion::E0, &psi), psi);
        let j = |x: Vec3| dirq(x).unwrap().quaternion();
        let jj = multop(j, &multop(j, &psi));
        assert!(jj.max_dev(&psi.scale(-1.0)).unwrap() < 1e-14);
        let d = BorelBox::cuboid(Vec3::new(-1.0, -1.0, -1.0), Vec3::new(0.7, 2.0, 0.2));
        assert_eq!(multop(j, &project(&d, &psi)), project(&d, &multop(j, &psi)));
        let f = |x: Vec3| Quaternion::new(x[0], 1.0, x[1] * x[2], -0.5);
        let g = |x: Vec3| Quaternion::new(0.3, x[2], 0.0, x[0]);
        let fg = multop(f, &multop(g, &psi));
        assert!(fg.max_dev(&multop(|x| f(x) * g(x), &psi)).unwrap() < 1e-14);
    }

    #[test]
    fn analytic_sampling_commutes() {
        let lat = Lattice::new(8, 2.0).unwrap();
        let a = AnalyticField::gaussian(Vec3::new(0.3, 0.0, -0.2), 0.8, Quaternion::new(1.0, 0.5, 0.0, -0.2));
        let q = Quaternion::new(0.1, 0.2, 0.3, 0.4);
        assert_eq!(a.rscale(q).sample(lat), a.sample(lat).rscale(q));
        let f = |x: Vec3| Quaternion::new(0.0, x[0], x[1], x[2]);
        assert_eq!(a.multop(f).sample(lat), multop(f, &a.sample(lat)));
        let qa = QField::from(a.clone());
        let ql = QField::from(a.sample(lat));
        assert_eq!(inner(&qa, &ql).unwrap(), a.sample(lat).inner(&a.sample(lat)).unwrap());
        assert!(inner(&qa, &qa).is_err());
    }

    #[test]
    fn serialization_round_trip() {
        let lat = Lattice::new(4, 1.5).unwrap();
        let psi = random_field(lat, 7);
        let mut csv = Vec::new();
        psi.write_csv(&mut csv).unwrap();
        assert_eq!(LatticeField::read_csv(&csv[..]).unwrap(), psi);
        let mut bin = Vec::new();
        psi.write_binary(&mut bin).unwrap();
        assert_eq!(bin.len(), 4 + 4 + 4 + 8 + 64 * 32);
        assert_eq!(LatticeField::read_binary(&bin[..]).unwrap(), psi);
        assert!(LatticeField::read_binary(&b"NOPE"[..]).is_err());
        assert!(LatticeField::read_csv(&b"# n=4 half_width=1\nsite,q0,q1,q2,q3\n0,1,2,3,4\n"[..]).is_err());
    }
}
