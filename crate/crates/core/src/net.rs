//! η-nets of a ball: greedy construction, projection and certification.
//!
//! A net is built by greedy insertion over a candidate stream: a candidate is
//! kept iff it is more than η away from every point kept so far, so the result
//! is η-separated by construction. [`Net::build`] feeds a deterministic lattice
//! and then runs a cell-subdivision pass that inserts further points until
//! every cell of the ball is covered by a single η-ball around a net point.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{invalid, Error, Result};
use crate::metric::{Ball, Norm, NormedSpace, Point};

/// Maximum subdivision depth used when certifying density.
const MAX_REFINE_DEPTH: u32 = 7;

/// Uniform grid over `R^m` with Linf cells of side `cell`, bucketing point ids.
#[derive(Debug, Clone)]
struct GridIndex {
    cell: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
}

impl GridIndex {
    fn new(cell: f64) -> Self {
        Self {
            cell,
            buckets: HashMap::new(),
        }
    }

    fn key(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|c| (c / self.cell).floor() as i64).collect()
    }

    fn insert(&mut self, x: &[f64], id: usize) {
        self.buckets.entry(self.key(x)).or_default().push(id);
    }

    /// Ids in the 3^m block of cells around `x`. Every point within Linf
    /// distance `cell` of `x` is among them.
    fn neighbors(&self, x: &[f64], out: &mut Vec<usize>) {
        out.clear();
        let base = self.key(x);
        let m = base.len();
        let mut offset = vec![-1i64; m];
        let mut key = base.clone();
        loop {
            for i in 0..m {
                key[i] = base[i] + offset[i];
            }
            if let Some(ids) = self.buckets.get(&key) {
                out.extend_from_slice(ids);
            }
            let mut i = 0;
            loop {
                if i == m {
                    return;
                }
                offset[i] += 1;
                if offset[i] <= 1 {
                    break;
                }
                offset[i] = -1;
                i += 1;
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Net {
    ball: Ball,
    eta: f64,
    points: Vec<Point>,
    index: GridIndex,
}

/// Outcome of [`verify_net`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetReport {
    pub separated: bool,
    pub dense: bool,
    pub size_ok: bool,
    pub max_projection_distance: f64,
    pub size: usize,
    pub size_bound: f64,
}

impl NetReport {
    pub fn all_ok(&self) -> bool {
        self.separated && self.dense && self.size_ok
    }
}

/// `(3·R/η)^m`, the packing bound on the size of an η-separated subset of the ball.
pub fn size_bound(radius: f64, eta: f64, dim: usize) -> f64 {
    (3.0 * radius / eta).powi(dim as i32)
}

impl Net {
    fn empty(ball: Ball, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive and finite, got {eta}")));
        }
        Ok(Self {
            ball,
            eta,
            points: Vec::new(),
            index: GridIndex::new(eta),
        })
    }

    /// A net with exactly the given points, in order. No property is checked;
    /// use [`verify_net`] for that.
    pub fn from_points(ball: Ball, eta: f64, points: Vec<Point>) -> Result<Self> {
        let mut net = Self::empty(ball, eta)?;
        for p in points {
            net.ball.space().check(&p)?;
            net.push(p);
        }
        if net.points.is_empty() {
            return Err(invalid("a net needs at least one point"));
        }
        Ok(net)
    }

    /// The singleton net `{center}`.
    pub fn singleton(ball: Ball, eta: f64) -> Result<Self> {
        let c = ball.center().to_vec();
        Self::from_points(ball, eta, vec![c])
    }

    /// Greedy insertion over `candidates`. If `eta > R_M` the singleton net is
    /// returned instead and the stream is ignored.
    pub fn greedy<I>(ball: Ball, eta: f64, candidates: I) -> Result<Self>
    where
        I: IntoIterator<Item = Point>,
    {
        let mut net = Self::empty(ball, eta)?;
        if eta > net.ball.radius() {
            return Self::singleton(net.ball, eta);
        }
        let mut seen = false;
        let mut scratch = Vec::new();
        for c in candidates {
            seen = true;
            net.ball.check_contains(&c)?;
            net.offer(c, &mut scratch);
        }
        if !seen {
            return Err(invalid("empty candidate stream"));
        }
        Ok(net)
    }

    /// Greedy net over the default lattice, followed by density certification.
    pub fn build(ball: Ball, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(invalid(format!("eta must be positive and finite, got {eta}")));
        }
        if eta > ball.radius() {
            return Self::singleton(ball, eta);
        }
        let candidates = lattice_candidates(&ball, eta);
        let mut net = Self::greedy(ball, eta, candidates)?;
        net.refine_density();
        Ok(net)
    }

    fn push(&mut self, p: Point) -> usize {
        let id = self.points.len();
        self.index.insert(&p, id);
        self.points.push(p);
        id
    }

    /// Inserts `c` iff it is more than η from every net point.
    fn offer(&mut self, c: Point, scratch: &mut Vec<usize>) -> bool {
        let space = *self.ball.space();
        self.index.neighbors(&c, scratch);
        if scratch
            .iter()
            .any(|&i| space.dist(&self.points[i], &c) <= self.eta)
        {
            return false;
        }
        self.push(c);
        true
    }

    /// Subdivides the bounding box of the ball into cells and inserts points
    /// until each cell meeting the ball lies inside one η-ball of the net.
    /// Returns the number of leaf cells left uncertified at maximum depth.
    fn refine_density(&mut self) -> usize {
        let m = self.ball.dim();
        let side = lattice_spacing(self.ball.space().norm(), m, self.eta);
        let r = self.ball.radius();
        let per_axis = ((2.0 * r) / side).ceil().max(1.0) as usize;
        let side = 2.0 * r / per_axis as f64;
        let lo: Vec<f64> = self.ball.center().iter().map(|c| c - r).collect();
        let mut scratch = Vec::new();
        let mut uncertified = 0;
        let mut idx = vec![0usize; m];
        loop {
            let cell_lo: Vec<f64> = (0..m).map(|i| lo[i] + idx[i] as f64 * side).collect();
            let cell_hi: Vec<f64> = (0..m).map(|i| cell_lo[i] + side).collect();
            uncertified += self.certify(cell_lo, cell_hi, 0, &mut scratch);
            let mut i = 0;
            loop {
                if i == m {
                    return uncertified;
                }
                idx[i] += 1;
                if idx[i] < per_axis {
                    break;
                }
                idx[i] = 0;
                i += 1;
            }
        }
    }

    fn certify(&mut self, lo: Vec<f64>, hi: Vec<f64>, depth: u32, scratch: &mut Vec<usize>) -> usize {
        let space = *self.ball.space();
        let center = self.ball.center();
        // Nearest point of the box to the ball center; the box meets the ball iff it is inside.
        let clamped: Point = center
            .iter()
            .zip(lo.iter().zip(&hi))
            .map(|(c, (l, h))| c.clamp(*l, *h))
            .collect();
        if space.dist(&clamped, center) > self.ball.radius() {
            return 0;
        }
        let mid: Point = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (l + h)).collect();
        for _attempt in 0..2 {
            if self.covers_box(&mid, &lo, &hi, scratch) {
                return 0;
            }
            let candidate = if self.ball.contains(&mid) {
                mid.clone()
            } else {
                clamped.clone()
            };
            if !self.offer(candidate, scratch) {
                break;
            }
        }
        if depth >= MAX_REFINE_DEPTH {
            return 1;
        }
        let m = lo.len();
        let mut total = 0;
        for mask in 0..(1usize << m) {
            let sub_lo: Vec<f64> = (0..m)
                .map(|i| if mask >> i & 1 == 0 { lo[i] } else { mid[i] })
                .collect();
            let sub_hi: Vec<f64> = (0..m)
                .map(|i| if mask >> i & 1 == 0 { mid[i] } else { hi[i] })
                .collect();
            total += self.certify(sub_lo, sub_hi, depth + 1, scratch);
        }
        total
    }

    /// True iff some net point is within η of every vertex of the box. Norm
    /// balls are convex, so the whole box is then covered.
    fn covers_box(&self, mid: &[f64], lo: &[f64], hi: &[f64], scratch: &mut Vec<usize>) -> bool {
        let norm = self.ball.space().norm();
        self.index.neighbors(mid, scratch);
        scratch.iter().any(|&i| {
            let y = &self.points[i];
            let far = (0..y.len()).map(|d| (y[d] - lo[d]).abs().max((hi[d] - y[d]).abs()));
            norm.length(far) <= self.eta
        })
    }

    pub fn ball(&self) -> &Ball {
        &self.ball
    }

    pub fn space(&self) -> &NormedSpace {
        self.ball.space()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn point(&self, id: usize) -> &[f64] {
        &self.points[id]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.space().dist(&self.points[i], &self.points[j])
    }

    /// Nearest net point to `x`, ties to the lowest id.
    pub fn project(&self, x: &[f64]) -> Result<usize> {
        self.ball.check_contains(x)?;
        Ok(self.nearest_bucketed(x))
    }

    /// Linear-scan nearest neighbour.
    pub fn nearest_brute(&self, x: &[f64]) -> usize {
        let space = self.space();
        let mut best = (f64::INFINITY, usize::MAX);
        for (i, p) in self.points.iter().enumerate() {
            let d = space.dist(p, x);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    /// Nearest neighbour through the grid; falls back to a scan when nothing
    /// lies within η. Agrees with [`Net::nearest_brute`] on every input.
    pub fn nearest_bucketed(&self, x: &[f64]) -> usize {
        let space = self.space();
        let mut ids = Vec::new();
        self.index.neighbors(x, &mut ids);
        let mut best = (f64::INFINITY, usize::MAX);
        for &i in &ids {
            let d = space.dist(&self.points[i], x);
            if d < best.0 || (d == best.0 && i < best.1) {
                best = (d, i);
            }
        }
        if best.0 <= self.eta {
            best.1
        } else {
            self.nearest_brute(x)
        }
    }

    /// Flat text serialization: a header followed by one point per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# eta-net");
        let _ = writeln!(s, "eta {}", self.eta);
        let _ = writeln!(s, "radius {}", self.ball.radius());
        let _ = writeln!(s, "m {}", self.ball.dim());
        let _ = writeln!(s, "norm {}", self.space().norm());
        let _ = writeln!(s, "center {}", fmt_point(self.ball.center()));
        let _ = writeln!(s, "points {}", self.points.len());
        for p in &self.points {
            let _ = writeln!(s, "{}", fmt_point(p));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: HashMap<&str, (usize, &str)> = HashMap::new();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        for (no, line) in lines.by_ref() {
            let (key, value) = line.split_once(' ').ok_or_else(|| Error::Parse {
                line: no,
                msg: format!("expected `key value`, got `{line}`"),
            })?;
            header.insert(key, (no, value.trim()));
            if key == "points" {
                break;
            }
        }
        let get = |k: &str| {
            header.get(k).copied().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("missing header `{k}`"),
            })
        };
        let num = |k: &str| -> Result<f64> {
            let (no, v) = get(k)?;
            v.parse().map_err(|_| Error::Parse {
                line: no,
                msg: format!("bad number for `{k}`"),
            })
        };
        let eta = num("eta")?;
        let radius = num("radius")?;
        let m = num("m")? as usize;
        let norm: Norm = get("norm")?.1.parse()?;
        let (cno, cval) = get("center")?;
        let center = parse_point(cval, cno)?;
        let count = num("points")? as usize;
        let space = NormedSpace::new(m, norm)?;
        let ball = Ball::new(space, center, radius)?;
        let points = lines
            .map(|(no, l)| parse_point(l, no))
            .collect::<Result<Vec<_>>>()?;
        if points.len() != count {
            return Err(Error::Parse {
                line: 0,
                msg: format!("header announces {count} points, found {}", points.len()),
            });
        }
        Self::from_points(ball, eta, points)
    }
}

pub(crate) fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
}

pub(crate) fn parse_point(s: &str, line: usize) -> Result<Point> {
    s.split(',')
        .map(|c| {
            c.trim().parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad coordinate `{c}`"),
            })
        })
        .collect()
}

/// Lattice spacing: η/2 for L1 and Linf, η/(2√m) for L2.
pub fn lattice_spacing(norm: Norm, dim: usize, eta: f64) -> f64 {
    match norm {
        Norm::L2 => eta / (2.0 * (dim as f64).sqrt()),
        Norm::L1 | Norm::Linf => eta / 2.0,
    }
}

/// Axis-aligned lattice through the ball center, restricted to the ball, in
/// lexicographic order.
pub fn lattice_candidates(ball: &Ball, eta: f64) -> Vec<Point> {
    let m = ball.dim();
    let h = lattice_spacing(ball.space().norm(), m, eta);
    let steps = (ball.radius() / h).floor() as i64;
    let mut out = Vec::new();
    let mut idx = vec![-steps; m];
    loop {
        let p: Point = ball
            .center()
            .iter()
            .zip(&idx)
            .map(|(c, &i)| c + i as f64 * h)
            .collect();
        if ball.contains(&p) {
            out.push(p);
        }
        let mut i = m;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] <= steps {
                break;
            }
            idx[i] = -steps;
        }
    }
}

/// Greedy η-net over an explicit candidate stream.
pub fn build_eta_net<I>(ball: Ball, eta: f64, candidates: I) -> Result<Net>
where
    I: IntoIterator<Item = Point>,
{
    Net::greedy(ball, eta, candidates)
}

/// Checks separation (all pairs), density (each test point) and the size bound.
pub fn verify_net<'a, I>(net: &Net, test_points: I) -> NetReport
where
    I: IntoIterator<Item = &'a Point>,
{
    let space = net.space();
    let n = net.len();
    let mut separated = true;
    'outer: for i in 0..n {
        for j in i + 1..n {
            if net.dist(i, j) <= net.eta {
                separated = false;
                break 'outer;
            }
        }
    }
    let mut max_proj: f64 = 0.0;
    for x in test_points {
        let id = net.nearest_brute(x);
        max_proj = max_proj.max(space.dist(x, net.point(id)));
    }
    let bound = size_bound(net.ball.radius(), net.eta, net.ball.dim());
    NetReport {
        separated,
        dense: max_proj <= net.eta,
        size_ok: n as f64 <= bound.ceil().max(1.0),
        max_projection_distance: max_proj,
        size: n,
        size_bound: bound,
    }
}
