//! Normed-space geometry: norms, balls and finite point sets.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{invalid, Error, Result};

/// A point in `R^m`.
pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Norm {
    L1,
    L2,
    Linf,
}

impl Norm {
    /// Norm of a coordinate vector.
    pub fn length(self, v: impl IntoIterator<Item = f64>) -> f64 {
        let it = v.into_iter();
        match self {
            Norm::L1 => it.map(f64::abs).sum(),
            Norm::L2 => it.map(|c| c * c).sum::<f64>().sqrt(),
            Norm::Linf => it.map(f64::abs).fold(0.0, f64::max),
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
            Norm::Linf => "linf",
        })
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "l1" => Ok(Norm::L1),
            "l2" => Ok(Norm::L2),
            "linf" | "l_inf" | "inf" => Ok(Norm::Linf),
            other => Err(invalid(format!("unknown norm `{other}`"))),
        }
    }
}

/// `R^m` equipped with one of the built-in norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NormedSpace {
    dim: usize,
    norm: Norm,
}

impl NormedSpace {
    pub fn new(dim: usize, norm: Norm) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be at least 1"));
        }
        Ok(Self { dim, norm })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> Norm {
        self.norm
    }

    pub fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// `‖x − y‖`, validating dimensions.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.dist(x, y))
    }

    /// Unchecked distance for hot loops; callers guarantee matching dimensions.
    #[inline]
    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), y.len());
        self.norm.length(x.iter().zip(y).map(|(a, b)| a - b))
    }
}

/// Free-function form of [`NormedSpace::distance`].
pub fn distance(space: &NormedSpace, x: &[f64], y: &[f64]) -> Result<f64> {
    space.distance(x, y)
}

/// Closed ball `B_M` of radius `R_M` around `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    space: NormedSpace,
    center: Point,
    radius: f64,
}

impl Ball {
    pub fn new(space: NormedSpace, center: Point, radius: f64) -> Result<Self> {
        space.check(&center)?;
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid(format!("ball radius must be finite and >= 0, got {radius}")));
        }
        Ok(Self {
            space,
            center,
            radius,
        })
    }

    /// Ball centered at the origin.
    pub fn centered(space: NormedSpace, radius: f64) -> Result<Self> {
        Self::new(space, vec![0.0; space.dim()], radius)
    }

    pub fn space(&self) -> &NormedSpace {
        &self.space
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.space.dist(x, &self.center) <= self.radius
    }

    pub fn check_contains(&self, x: &[f64]) -> Result<()> {
        self.space.check(x)?;
        if !self.contains(x) {
            return Err(invalid(format!("point {x:?} lies outside the ball")));
        }
        Ok(())
    }

    /// Uniform sample from the ball of radius `radius` around `center` under this ball's norm.
    pub fn sample_in<R: Rng + ?Sized>(&self, center: &[f64], radius: f64, rng: &mut R) -> Point {
        let m = self.dim();
        let unit: Vec<f64> = match self.space.norm() {
            Norm::Linf => (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect(),
            Norm::L2 => {
                let g: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
                let len = Norm::L2.length(g.iter().copied());
                let r = rng.random::<f64>().powf(1.0 / m as f64);
                g.into_iter().map(|c| c / len * r).collect()
            }
            Norm::L1 => {
                // Dirichlet(1,...,1) over m+1 coordinates, dropping the last, with random signs.
                let e: Vec<f64> = (0..=m).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                e[..m]
                    .iter()
                    .map(|c| {
                        let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        s * c / total
                    })
                    .collect()
            }
        };
        center
            .iter()
            .zip(unit)
            .map(|(c, u)| c + radius * u)
            .collect()
    }

    /// Uniform sample from the whole ball.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        self.sample_in(&self.center, self.radius, rng)
    }
}

/// A finite set of distinct points with the metric induced by a norm.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetric {
    space: NormedSpace,
    points: Vec<Point>,
}

impl FiniteMetric {
    pub fn new(space: NormedSpace, points: Vec<Point>) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            space.check(p)?;
            if points[..i].contains(p) {
                return Err(invalid(format!("duplicate point {p:?}")));
            }
        }
        Ok(Self { space, points })
    }

    pub fn space(&self) -> &NormedSpace {
        &self.space
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.space.dist(&self.points[i], &self.points[j])
    }

    /// Dense `n × n` distance table.
    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| self.dist(i, j)).collect())
            .collect()
    }

    /// Largest over smallest non-zero pairwise distance.
    pub fn aspect_ratio(&self) -> Result<f64> {
        if self.len() < 2 {
            return Err(invalid("aspect ratio needs at least two points"));
        }
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let d = self.dist(i, j);
                hi = hi.max(d);
                if d > 0.0 {
                    lo = lo.min(d);
                }
            }
        }
        Ok(hi / lo)
    }
}

pub fn aspect_ratio(fm: &FiniteMetric) -> Result<f64> {
    fm.aspect_ratio()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line() -> NormedSpace {
        NormedSpace::new(1, Norm::L2).unwrap()
    }

    #[test]
    fn linf_distance_is_coordinate_max() {
        let s = NormedSpace::new(2, Norm::Linf).unwrap();
        assert_eq!(s.distance(&[0.0, 0.0], &[0.3, -0.5]).unwrap(), 0.5);
    }

    #[test]
    fn identical_points_have_zero_distance() {
        for norm in [Norm::L1, Norm::L2, Norm::Linf] {
            let s = NormedSpace::new(3, norm).unwrap();
            let x = [0.1, -2.0, 7.5];
            assert_eq!(s.distance(&x, &x).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let s = NormedSpace::new(2, Norm::L1).unwrap();
        assert!(matches!(
            s.distance(&[0.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(NormedSpace::new(0, Norm::L1).is_err());
    }

    #[test]
    fn norms_are_ordered_pointwise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let m = rng.random_range(1..6);
            let x: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let d = |n| NormedSpace::new(m, n).unwrap().dist(&x, &y);
            assert!(d(Norm::L1) >= d(Norm::L2));
            assert!(d(Norm::L2) >= d(Norm::Linf));
        }
    }

    #[test]
    fn aspect_ratio_examples() {
        let fm = FiniteMetric::new(line(), vec![vec![0.0], vec![1.0]]).unwrap();
        assert_eq!(fm.aspect_ratio().unwrap(), 1.0);
        let fm = FiniteMetric::new(line(), vec![vec![0.0], vec![0.25], vec![1.0]]).unwrap();
        assert_eq!(aspect_ratio(&fm).unwrap(), 4.0);
        let fm = FiniteMetric::new(line(), vec![vec![0.0]]).unwrap();
        assert!(fm.aspect_ratio().is_err());
        assert!(FiniteMetric::new(line(), vec![vec![0.0], vec![0.0]]).is_err());
    }

    #[test]
    fn ball_samples_stay_inside() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for norm in [Norm::L1, Norm::L2, Norm::Linf] {
            let space = NormedSpace::new(3, norm).unwrap();
            let ball = Ball::new(space, vec![1.0, -1.0, 0.5], 2.0).unwrap();
            for _ in 0..2000 {
                assert!(ball.contains(&ball.sample_uniform(&mut rng)));
            }
        }
    }

    #[test]
    fn norm_parses_case_insensitively() {
        assert_eq!("LInf".parse::<Norm>().unwrap(), Norm::Linf);
        assert_eq!(Norm::L1.to_string().parse::<Norm>().unwrap(), Norm::L1);
        assert!("l3".parse::<Norm>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn triple(m: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
            let c = || proptest::collection::vec(-10.0f64..10.0, m);
            (c(), c(), c())
        }

        fn norm() -> impl Strategy<Value = Norm> {
            prop_oneof![Just(Norm::L1), Just(Norm::L2), Just(Norm::Linf)]
        }

        proptest! {
            #[test]
            fn triangle_inequality(n in norm(), (x, y, z) in triple(4)) {
                let s = NormedSpace::new(4, n).unwrap();
                let lhs = s.dist(&x, &z);
                let rhs = s.dist(&x, &y) + s.dist(&y, &z);
                prop_assert!(lhs <= rhs * (1.0 + 1e-12) + 1e-12);
                prop_assert_eq!(s.dist(&x, &y), s.dist(&y, &x));
            }

            #[test]
            fn translation_invariance(n in norm(), (x, y, t) in triple(3)) {
                let s = NormedSpace::new(3, n).unwrap();
                let xs: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a + b).collect();
                let ys: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + b).collect();
                let d0 = s.dist(&x, &y);
                prop_assert!((s.dist(&xs, &ys) - d0).abs() <= 1e-9 * (1.0 + d0));
            }

            #[test]
            fn homogeneity(n in norm(), (x, y, _z) in triple(3), a in -5.0f64..5.0) {
                let s = NormedSpace::new(3, n).unwrap();
                let xa: Vec<f64> = x.iter().map(|c| a * c).collect();
                let ya: Vec<f64> = y.iter().map(|c| a * c).collect();
                let d0 = a.abs() * s.dist(&x, &y);
                prop_assert!((s.dist(&xa, &ya) - d0).abs() <= 1e-9 * (1.0 + d0));
            }

            #[test]
            fn aspect_ratio_scale_invariant(
                pts in proptest::collection::vec(-5.0f64..5.0, 2..10),
                scale in 0.1f64..10.0,
            ) {
                let mut uniq = pts.clone();
                uniq.sort_by(f64::total_cmp);
                uniq.dedup();
                prop_assume!(uniq.len() >= 2);
                let a = FiniteMetric::new(line(), uniq.iter().map(|&p| vec![p]).collect()).unwrap();
                let b = FiniteMetric::new(line(), uniq.iter().map(|&p| vec![p * scale]).collect()).unwrap();
                let ra = a.aspect_ratio().unwrap();
                let rb = b.aspect_ratio().unwrap();
                prop_assert!(ra >= 1.0);
                prop_assert!((ra - rb).abs() <= 1e-9 * ra);
            }
        }
    }
}
