//! Collocation, boundary, initial, and test point sets.
//!
//! Sampling is counter-addressed: coordinate j of point i always consumes the
//! same PRNG counter, so a set is a pure function of (seed, role, n) and two
//! machines agree bit for bit regardless of iteration order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::problems::PdeProblem;
use crate::rng::CounterRng;
use crate::{Error, Result};

pub const POINTS_MAGIC: &[u8; 4] = b"CPTS";
pub const POINTS_VERSION: u8 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Interior,
    Boundary,
    Initial,
    Test,
}

impl Role {
    fn to_byte(self) -> u8 {
        match self {
            Role::Interior => 0,
            Role::Boundary => 1,
            Role::Initial => 2,
            Role::Test => 3,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => Role::Interior,
            1 => Role::Boundary,
            2 => Role::Initial,
            3 => Role::Test,
            _ => return Err(Error::Format(format!("unknown point role byte {b}"))),
        })
    }
}

/// How the coordinates were produced; carried so exported sets stay
/// self-describing.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Uniform,
    Grid,
    Faces,
    InitialSlice,
}

impl Generator {
    fn to_byte(self) -> u8 {
        match self {
            Generator::Uniform => 0,
            Generator::Grid => 1,
            Generator::Faces => 2,
            Generator::InitialSlice => 3,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        Ok(match b {
            0 => Generator::Uniform,
            1 => Generator::Grid,
            2 => Generator::Faces,
            3 => Generator::InitialSlice,
            _ => return Err(Error::Format(format!("unknown generator byte {b}"))),
        })
    }
}

/// N points of dimension `dim`, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    pub data: Vec<f64>,
    pub n: usize,
    pub dim: usize,
    pub role: Role,
    pub generator: Generator,
    pub seed: u64,
}

impl PointSet {
    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// Uniform draws over the full box (time included for evolution problems).
pub fn sample_interior(problem: &PdeProblem, n: usize, seed: u64) -> PointSet {
    let dim = problem.input_dim;
    let r = CounterRng::new(seed).stream("interior");
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        for j in 0..dim {
            let (lo, hi) = problem.domain[j];
            data.push(r.uniform_at((i * dim + j) as u64, lo, hi));
        }
    }
    PointSet { data, n, dim, role: Role::Interior, generator: Generator::Uniform, seed }
}

/// One point per draw on a uniformly chosen spatial face; the pinned
/// coordinate is the exact bound. Time, when present, stays uniform.
pub fn sample_boundary(problem: &PdeProblem, n: usize, seed: u64) -> PointSet {
    let dim = problem.input_dim;
    let faces = 2 * problem.spatial_dim;
    let r = CounterRng::new(seed).stream("boundary");
    let stride = (dim + 1) as u64;
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        let base = i as u64 * stride;
        let face = r.index_at(base, faces);
        for j in 0..dim {
            let (lo, hi) = problem.domain[j];
            if j == face / 2 {
                data.push(if face % 2 == 0 { lo } else { hi });
            } else {
                data.push(r.uniform_at(base + 1 + j as u64, lo, hi));
            }
        }
    }
    PointSet { data, n, dim, role: Role::Boundary, generator: Generator::Faces, seed }
}

/// The t = t0 slice of an evolution problem.
pub fn sample_initial(problem: &PdeProblem, n: usize, seed: u64) -> PointSet {
    assert!(problem.is_time_dependent(), "initial slice needs a time axis");
    let dim = problem.input_dim;
    let t0 = problem.time_range.expect("checked above").0;
    let r = CounterRng::new(seed).stream("initial");
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        for j in 0..dim - 1 {
            let (lo, hi) = problem.domain[j];
            data.push(r.uniform_at((i * (dim - 1) + j) as u64, lo, hi));
        }
        data.push(t0);
    }
    PointSet { data, n, dim, role: Role::Initial, generator: Generator::InitialSlice, seed }
}

/// Evaluation set for error metrics: an inclusive grid in two dimensions
/// (n rounds to the nearest g * g), uniform draws otherwise.
pub fn test_points(problem: &PdeProblem, n: usize, seed: u64) -> PointSet {
    let dim = problem.input_dim;
    if dim == 2 {
        let g = (n as f64).sqrt().round().max(2.0) as usize;
        let (x_lo, x_hi) = problem.domain[0];
        let (y_lo, y_hi) = problem.domain[1];
        let coord = |lo: f64, hi: f64, idx: usize| lo + (hi - lo) * idx as f64 / (g - 1) as f64;
        let mut data = Vec::with_capacity(g * g * 2);
        for iy in 0..g {
            for ix in 0..g {
                data.push(coord(x_lo, x_hi, ix));
                data.push(coord(y_lo, y_hi, iy));
            }
        }
        PointSet { data, n: g * g, dim, role: Role::Test, generator: Generator::Grid, seed }
    } else {
        let r = CounterRng::new(seed).stream("test");
        let mut data = Vec::with_capacity(n * dim);
        for i in 0..n {
            for j in 0..dim {
                let (lo, hi) = problem.domain[j];
                data.push(r.uniform_at((i * dim + j) as u64, lo, hi));
            }
        }
        PointSet { data, n, dim, role: Role::Test, generator: Generator::Uniform, seed }
    }
}

pub fn write_points(path: &Path, set: &PointSet) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(POINTS_MAGIC)?;
    w.write_all(&[POINTS_VERSION, set.role.to_byte(), set.generator.to_byte()])?;
    w.write_all(&(set.n as u64).to_le_bytes())?;
    w.write_all(&(set.dim as u32).to_le_bytes())?;
    w.write_all(&set.seed.to_le_bytes())?;
    for v in &set.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points(path: &Path) -> Result<PointSet> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 7];
    r.read_exact(&mut head)?;
    if &head[0..4] != POINTS_MAGIC {
        return Err(Error::Format("not a point-set file (bad magic)".into()));
    }
    if head[4] != POINTS_VERSION {
        return Err(Error::Format(format!("unsupported point-set version {}", head[4])));
    }
    let role = Role::from_byte(head[5])?;
    let generator = Generator::from_byte(head[6])?;
    let mut u64buf = [0u8; 8];
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u64buf)?;
    let n = u64::from_le_bytes(u64buf) as usize;
    r.read_exact(&mut u32buf)?;
    let dim = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u64buf)?;
    let seed = u64::from_le_bytes(u64buf);
    let count = n
        .checked_mul(dim)
        .ok_or_else(|| Error::Format("point-set dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut u64buf)?;
        let v = f64::from_le_bytes(u64buf);
        if !v.is_finite() {
            return Err(Error::Format("point-set contains a non-finite coordinate".into()));
        }
        data.push(v);
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after point data".into()));
    }
    Ok(PointSet { data, n, dim, role, generator, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{heat3d, helmholtz2d, poisson_nd};

    #[test]
    fn interior_points_stay_in_the_box_and_are_deterministic() {
        let p = heat3d();
        let a = sample_interior(&p, 1000, 7);
        let b = sample_interior(&p, 1000, 7);
        let c = sample_interior(&p, 1000, 8);
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
        for pt in a.iter() {
            for j in 0..4 {
                let (lo, hi) = p.domain[j];
                assert!(pt[j] >= lo && pt[j] <= hi);
            }
        }
    }

    #[test]
    fn interior_mean_is_statistically_centered() {
        let p = helmholtz2d(1.0, 4.0, 1.0);
        let s = sample_interior(&p, 20_000, 3);
        let mean: f64 = s.data.iter().sum::<f64>() / s.data.len() as f64;
        // Uniform on [-1,1]: sd = 2/sqrt(12); 3 sigma over 40,000 draws.
        let tol = 3.0 * (2.0 / 12f64.sqrt()) / (s.data.len() as f64).sqrt();
        assert!(mean.abs() < tol, "mean {mean} vs tol {tol}");
    }

    #[test]
    fn boundary_points_sit_on_faces_and_cover_all_of_them() {
        let p = heat3d();
        let s = sample_boundary(&p, 600, 5);
        let mut seen = [false; 6];
        for pt in s.iter() {
            let mut on_face = None;
            for j in 0..3 {
                let (lo, hi) = p.domain[j];
                if pt[j] == lo {
                    on_face = Some(2 * j);
                }
                if pt[j] == hi {
                    on_face = Some(2 * j + 1);
                }
            }
            let f = on_face.expect("every boundary point pins one spatial coordinate");
            seen[f] = true;
            assert!(pt[3] >= 0.0 && pt[3] <= 10.0);
        }
        assert!(seen.iter().all(|&s| s), "faces hit: {seen:?}");
    }

    #[test]
    fn initial_points_sit_on_the_starting_slice() {
        let p = heat3d();
        let s = sample_initial(&p, 200, 2);
        for pt in s.iter() {
            assert_eq!(pt[3], 0.0);
            for j in 0..3 {
                assert!(pt[j] >= 0.0 && pt[j] <= 1.0);
            }
        }
    }

    #[test]
    fn two_dimensional_test_set_is_an_inclusive_grid() {
        let p = helmholtz2d(1.0, 4.0, 1.0);
        let s = test_points(&p, 90_000, 0);
        assert_eq!(s.n, 90_000);
        assert_eq!(s.generator, Generator::Grid);
        assert_eq!(s.point(0), &[-1.0, -1.0]);
        assert_eq!(s.point(299), &[1.0, -1.0]);
        assert_eq!(s.point(90_000 - 1), &[1.0, 1.0]);
        let step = s.point(1)[0] - s.point(0)[0];
        assert!((step - 2.0 / 299.0).abs() < 1e-15);
    }

    #[test]
    fn higher_dimensional_test_set_is_random() {
        let p = poisson_nd(5);
        let s = test_points(&p, 1234, 9);
        assert_eq!(s.n, 1234);
        assert_eq!(s.generator, Generator::Uniform);
        for pt in s.iter() {
            assert!(pt.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn point_sets_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = heat3d();
        let s = sample_boundary(&p, 64, 42);
        let path = dir.path().join("pts.bin");
        write_points(&path, &s).unwrap();
        let back = read_points(&path).unwrap();
        assert_eq!(s, back);

        let junk = dir.path().join("junk.bin");
        std::fs::write(&junk, b"CPTXoops").unwrap();
        assert!(read_points(&junk).is_err());
    }
}
