//! Marčenko–Pastur law, the Silverstein fixed point for the companion
//! Stieltjes transform, the support boundary `x_N(y)` and the centering
//! constants `β_N`, `θ_N`.
//!
//! Stieltjes transforms follow `m(z) = ∫ dμ(s)/(z − s)`, so `Im m · Im z < 0`.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::compensated_sum;
use crate::sampling::EntryLaw;
use crate::scalar::c64;
use crate::spectral::DiscreteMeasure;

pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITER: usize = 10_000;
const DAMPING: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpParams {
    pub r: f64,
}

impl MpParams {
    pub fn new(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!(
                "aspect ratio must be positive, got {r}"
            )));
        }
        Ok(Self { r })
    }

    /// `(λ−, λ+) = ((1 − √r)², (1 + √r)²)`.
    pub fn edges(&self) -> (f64, f64) {
        let s = self.r.sqrt();
        ((1.0 - s).powi(2), (1.0 + s).powi(2))
    }
}

/// Continuous part of the MP density at `λ > 0`.
pub fn mp_density(params: MpParams, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::invalid(format!(
            "density is evaluated at λ > 0, got {lambda}"
        )));
    }
    let (lo, hi) = params.edges();
    if lambda <= lo || lambda >= hi {
        return Ok(0.0);
    }
    Ok(((hi - lambda) * (lambda - lo)).sqrt() / (2.0 * PI * params.r * lambda))
}

/// Mass of the atom at zero, `(1 − 1/r)₊`.
pub fn mp_atom(params: MpParams) -> f64 {
    (1.0 - 1.0 / params.r).max(0.0)
}

/// Closed-form companion transform for `ν = δ1`: the root of
/// `z m² − (z + 1 − r) m + 1 = 0` on the Stieltjes branch.
pub fn mp_companion_stieltjes(params: MpParams, z: c64) -> Result<c64> {
    if z.norm() == 0.0 || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::InsideSupport(z.re));
    }
    let b = z + c64::new(1.0 - params.r, 0.0);
    if z.im == 0.0 {
        let (x, b) = (z.re, b.re);
        let disc = b * b - 4.0 * x;
        if disc < 0.0 {
            return Err(Error::InsideSupport(x));
        }
        let s = disc.sqrt();
        let big = (b + b.signum() * s) / (2.0 * x);
        let small = 1.0 / (x * big);
        let slope = |m: f64| (m - m * m) / (2.0 * x * m - b);
        return [small, big]
            .into_iter()
            .find(|&m| m.is_finite() && slope(m) < 0.0)
            .map(|m| c64::new(m, 0.0))
            .ok_or(Error::InsideSupport(x));
    }
    let s = (b * b - z * 4.0).sqrt();
    let q = if (b.conj() * s).re >= 0.0 {
        b + s
    } else {
        b - s
    };
    let m1 = q / (z * 2.0);
    let m2 = (z * m1).inv();
    let good = |m: c64| m.im * z.im < 0.0;
    Ok(match (good(m1), good(m2)) {
        (true, false) => m1,
        (false, true) => m2,
        // only reachable in the far tail; pick the root closest to 1/z
        _ => {
            let target = z.inv();
            if (m1 - target).norm() <= (m2 - target).norm() {
                m1
            } else {
                m2
            }
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointSolution {
    pub z: c64,
    pub m: c64,
    pub iterations: usize,
    pub residual: f64,
}

struct FixedPoint<'a> {
    atoms: &'a [(f64, f64)],
    r: f64,
}

impl FixedPoint<'_> {
    /// `(r ∫ s/(1 − sm) dν, r ∫ s²/(1 − sm)² dν)`.
    fn moments(&self, m: c64) -> (c64, c64) {
        let mut h = c64::new(0.0, 0.0);
        let mut dh = c64::new(0.0, 0.0);
        for &(s, w) in self.atoms {
            if s == 0.0 {
                continue;
            }
            let t = c64::new(s, 0.0) / (c64::new(1.0, 0.0) - m * s);
            h += t * w;
            dh += t * t * w;
        }
        (h * self.r, dh * self.r)
    }

    fn residual(&self, z: c64, m: c64) -> f64 {
        (z - m.inv() - self.moments(m).0).norm()
    }

    fn tolerance(z: c64) -> f64 {
        FIXED_POINT_TOL * z.norm().max(1.0)
    }

    fn admissible(z: c64, m: c64) -> bool {
        m.re.is_finite() && m.im.is_finite() && m.norm() > 0.0 && (z.im == 0.0 || m.im * z.im < 0.0)
    }

    /// Newton on `F(m) = 1/m + h(m) − z`.
    fn newton(&self, z: c64, mut m: c64, steps: usize) -> Option<(c64, usize)> {
        let tol = Self::tolerance(z);
        for it in 0..steps {
            let (h, dh) = self.moments(m);
            let f = m.inv() + h - z;
            if f.norm() <= tol * 1e-3 {
                return Some((m, it));
            }
            let df = dh - (m * m).inv();
            let step = f / df;
            if !step.re.is_finite() || !step.im.is_finite() {
                return None;
            }
            let mut next = m - step;
            // keep iterates on the Stieltjes half-plane
            let mut shrink = 0;
            while !Self::admissible(z, next) && shrink < 30 {
                next = m - step * 0.5f64.powi(shrink + 1);
                shrink += 1;
            }
            if !Self::admissible(z, next) {
                return None;
            }
            m = next;
        }
        (self.residual(z, m) <= tol).then_some((m, steps))
    }

    fn picard(&self, z: c64, m0: c64, budget: usize) -> (c64, usize, bool) {
        let tol = Self::tolerance(z);
        let mut m = m0;
        let mut best = self.residual(z, m);
        let mut checkpoint = best;
        for it in 1..=budget {
            let g = (z - self.moments(m).0).inv();
            m = m * (1.0 - DAMPING) + g * DAMPING;
            let res = self.residual(z, m);
            best = best.min(res);
            if res <= tol {
                return (m, it, true);
            }
            if it % 50 == 0 {
                if best > 0.5 * checkpoint {
                    return (m, it, false);
                }
                checkpoint = best;
            }
        }
        (m, budget, false)
    }

    fn solve_nonreal(&self, z: c64) -> Result<(c64, usize)> {
        let tol = Self::tolerance(z);
        let (m, used, ok) = self.picard(z, z.inv(), FIXED_POINT_MAX_ITER);
        if ok {
            return Ok((m, used));
        }
        if let Some((m, extra)) = self.newton(z, m, 100) {
            return Ok((m, used + extra));
        }
        // continuation from far above the real axis down to Im z
        let mut iterations = used;
        let sign = z.im.signum();
        let mut height = z.norm().max(1.0) * sign;
        let mut m = c64::new(z.re, height).inv();
        while iterations < FIXED_POINT_MAX_ITER {
            let w = c64::new(z.re, height);
            let (next, used) = match self.newton(w, m, 60) {
                Some(found) => found,
                None => {
                    let (p, used, ok) = self.picard(w, m, 2000);
                    if !ok {
                        iterations += used;
                        break;
                    }
                    (p, used)
                }
            };
            iterations += used + 1;
            m = next;
            if height == z.im {
                return Ok((m, iterations));
            }
            height = if (height * 0.5).abs() <= z.im.abs() {
                z.im
            } else {
                height * 0.5
            };
        }
        Err(Error::NonConvergence {
            method: "fixed point",
            iterations,
            residual: self.residual(z, m).min(f64::MAX).max(tol),
        })
    }
}

/// Solves `z = 1/m + r ∫ s dν(s)/(1 − s m)` for the companion transform.
///
/// Nonreal `z`: damped Picard from `1/z`, Newton on stagnation, then
/// continuation in `Im z`. Real `z`: the support scanner certifies that
/// `z` lies outside the support and its witness `y` is the solution.
pub fn solve_fixed_point(nu: &DiscreteMeasure, r: f64, z: c64) -> Result<FixedPointSolution> {
    MpParams::new(r)?;
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::invalid("query point must be finite"));
    }
    if nu.atoms().iter().any(|a| a.0 < 0.0) {
        return Err(Error::invalid("ν must live on [0, ∞)"));
    }
    let fp = FixedPoint {
        atoms: nu.atoms(),
        r,
    };
    let (m, iterations) = if z.im == 0.0 {
        let scanner = SupportScanner::from_measure(nu, r)?;
        let witness = scanner.query(z.re).ok_or(Error::InsideSupport(z.re))?;
        let mut m = c64::new(witness.y, 0.0);
        if let Some((polished, _)) = fp.newton(z, m, 5) {
            if polished.re * witness.y > 0.0 {
                m = c64::new(polished.re, 0.0);
            }
        }
        (m, 0)
    } else {
        let (m, it) = fp.solve_nonreal(z)?;
        // polish; keep it only if it helps
        match fp.newton(z, m, 3) {
            Some((p, _)) if fp.residual(z, p) < fp.residual(z, m) => (p, it),
            _ => (m, it),
        }
    };
    let residual = fp.residual(z, m);
    if residual > FixedPoint::tolerance(z) {
        return Err(Error::NonConvergence {
            method: "fixed point",
            iterations,
            residual,
        });
    }
    Ok(FixedPointSolution {
        z,
        m,
        iterations,
        residual,
    })
}

/// A point `y ∈ B_N` with `x = x_N(y)` and `x_prime = x_N′(y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportQuery {
    pub y: f64,
    pub x: f64,
    pub x_prime: f64,
}

/// `x_N(y) = 1/y + (r/N) Σ λ_k/(1 − λ_k y)` and its derivative.
pub fn x_of_y(eigs: &[f64], r: f64, y: f64) -> Result<SupportQuery> {
    SupportScanner::new(eigs, r)?.evaluate(y)
}

/// Whether `x` lies outside the support of the companion limit measure
/// `μ̲_N`; `Some(witness)` when it does.
pub fn support_complement(eigs: &[f64], r: f64, x: f64) -> Result<Option<SupportQuery>> {
    Ok(SupportScanner::new(eigs, r)?.query(x))
}

/// Right edge of the support: the minimum of `x_N` over `(0, 1/λmax)`.
pub fn support_edge(eigs: &[f64], r: f64) -> Result<f64> {
    SupportScanner::new(eigs, r)?.right_edge()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum End {
    /// `y = 0` approached from the side where `x → ±∞`.
    Pole,
    /// `|y| → ∞`, where `x → 0`.
    Infinite,
    /// A zero of `x′`.
    Turn,
    /// A pole `1/λ_k`, where `x′ → +∞` on both sides.
    Blocking,
}

/// Maximal interval `(lo, hi)` of `B_N` on which `x_N` is decreasing.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    lo: f64,
    hi: f64,
    lo_end: End,
    hi_end: End,
    /// Some point strictly inside.
    inner: f64,
}

/// Precomputed decreasing branches of `x_N`, one scan per eigenvalue list.
#[derive(Debug, Clone)]
pub struct SupportScanner {
    /// Distinct positive eigenvalues (descending) with weight `r · mult/N`.
    groups: Vec<(f64, f64)>,
    segments: Vec<Segment>,
}

struct Interval {
    lo: f64,
    hi: f64,
    lo_end: End,
    hi_end: End,
    grid: Vec<f64>,
}

const SAMPLES_PER_INTERVAL: usize = 64;
const TAIL_SAMPLES: usize = 96;

impl SupportScanner {
    pub fn new(eigs: &[f64], r: f64) -> Result<Self> {
        MpParams::new(r)?;
        if eigs.is_empty() {
            return Err(Error::invalid("empty eigenvalue list"));
        }
        let mut sorted: Vec<f64> = Vec::with_capacity(eigs.len());
        for &l in eigs {
            if !(l >= 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!(
                    "eigenvalues must be finite and ≥ 0, got {l}"
                )));
            }
            if l > 0.0 {
                sorted.push(l);
            }
        }
        sorted.sort_by(|a, b| b.total_cmp(a));
        let unit = r / eigs.len() as f64;
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for l in sorted {
            match groups.last_mut() {
                Some(g) if g.0 == l => g.1 += unit,
                _ => groups.push((l, unit)),
            }
        }
        let mut scanner = Self {
            groups,
            segments: Vec::new(),
        };
        scanner.scan();
        Ok(scanner)
    }

    /// Uses the atoms of `ν` as weights instead of a uniform eigenvalue list.
    pub fn from_measure(nu: &DiscreteMeasure, r: f64) -> Result<Self> {
        MpParams::new(r)?;
        let mut atoms: Vec<(f64, f64)> = nu
            .atoms()
            .iter()
            .copied()
            .filter(|a| a.0 > 0.0 && a.1 > 0.0)
            .collect();
        if nu.atoms().iter().any(|a| a.0 < 0.0) {
            return Err(Error::invalid("ν must live on [0, ∞)"));
        }
        atoms.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut groups: Vec<(f64, f64)> = Vec::new();
        for (l, w) in atoms {
            match groups.last_mut() {
                Some(g) if g.0 == l => g.1 += r * w,
                _ => groups.push((l, r * w)),
            }
        }
        let mut scanner = Self {
            groups,
            segments: Vec::new(),
        };
        scanner.scan();
        Ok(scanner)
    }

    fn raw(&self, y: f64) -> (f64, f64) {
        let inv = 1.0 / y;
        let mut x = inv;
        let mut xp = -inv * inv;
        for &(l, w) in &self.groups {
            let t = l / (1.0 - l * y);
            x += w * t;
            xp += w * t * t;
        }
        (x, xp)
    }

    /// `x_N(y)` and `x_N′(y)`; fails off `B_N`.
    pub fn evaluate(&self, y: f64) -> Result<SupportQuery> {
        if y == 0.0 || !y.is_finite() {
            return Err(Error::invalid(format!("y = {y} is not in B_N")));
        }
        let inv = 1.0 / y;
        if let Some(&(l, _)) = self
            .groups
            .iter()
            .find(|g| (inv - g.0).abs() <= 1e-12 * g.0.max(1.0))
        {
            return Err(Error::invalid(format!(
                "1/y = {inv} collides with eigenvalue {l}"
            )));
        }
        let (x, x_prime) = self.raw(y);
        Ok(SupportQuery { y, x, x_prime })
    }

    /// Poles of `x_N` on `(0, ∞)`, ascending.
    fn poles(&self) -> impl Iterator<Item = f64> + '_ {
        self.groups.iter().map(|g| 1.0 / g.0)
    }

    fn first_pole(&self) -> Option<f64> {
        self.groups.first().map(|g| 1.0 / g.0)
    }

    /// Sample points strictly inside each interval of `B_N`, clustered near
    /// the interval ends, with the interval ends themselves.
    fn interval_samples(&self) -> Vec<Interval> {
        let mut out = Vec::new();
        let scale = self.first_pole().unwrap_or(1.0);
        let log_grid = |from: f64, to: f64| -> Vec<f64> {
            (0..TAIL_SAMPLES)
                .map(|i| 10f64.powf(from + (to - from) * i as f64 / (TAIL_SAMPLES - 1) as f64))
                .collect()
        };
        out.push(Interval {
            lo: f64::NEG_INFINITY,
            hi: 0.0,
            lo_end: End::Infinite,
            hi_end: End::Pole,
            grid: log_grid(8.0, -8.0)
                .into_iter()
                .map(|t| -scale * t)
                .collect(),
        });
        let mut lo = 0.0;
        for p in self.poles() {
            let grid = (1..SAMPLES_PER_INTERVAL)
                .map(|i| {
                    let t = i as f64 / SAMPLES_PER_INTERVAL as f64;
                    lo + (p - lo) * 0.5 * (1.0 - (PI * t).cos())
                })
                .filter(|&y| y > lo && y < p)
                .collect();
            let lo_end = if lo == 0.0 { End::Pole } else { End::Blocking };
            out.push(Interval {
                lo,
                hi: p,
                lo_end,
                hi_end: End::Blocking,
                grid,
            });
            lo = p;
        }
        let (lo_end, grid) = if lo == 0.0 {
            (End::Pole, log_grid(-8.0, 8.0))
        } else {
            (
                End::Blocking,
                log_grid(-10.0, 8.0)
                    .into_iter()
                    .map(|t| lo + lo * t)
                    .filter(|&y| y > lo)
                    .collect(),
            )
        };
        out.push(Interval {
            lo,
            hi: f64::INFINITY,
            lo_end,
            hi_end: End::Infinite,
            grid,
        });
        out
    }

    /// Zero of `x′` in `(a, b)`; `negative_at_a` gives the sign at `a`,
    /// which may be a pole and is never evaluated.
    fn turn_between(&self, mut a: f64, mut b: f64, negative_at_a: bool) -> f64 {
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if mid <= a.min(b) || mid >= a.max(b) {
                break;
            }
            if (self.raw(mid).1 < 0.0) == negative_at_a {
                a = mid;
            } else {
                b = mid;
            }
        }
        0.5 * (a + b)
    }

    fn scan(&mut self) {
        let mut segments = Vec::new();
        for iv in self.interval_samples() {
            let grid = &iv.grid;
            if grid.is_empty() {
                continue;
            }
            let slopes: Vec<f64> = grid.iter().map(|&y| self.raw(y).1).collect();
            // open segment: (start, kind of start, an inner point)
            let mut open: Option<(f64, End, f64)> = None;
            if slopes[0] < 0.0 {
                open = Some(match iv.lo_end {
                    End::Blocking => (self.turn_between(iv.lo, grid[0], false), End::Turn, grid[0]),
                    kind => (f64::NAN, kind, grid[0]),
                });
            }
            for i in 1..grid.len() {
                let (was, now) = (slopes[i - 1] < 0.0, slopes[i] < 0.0);
                if was == now {
                    continue;
                }
                let turn = self.turn_between(grid[i - 1], grid[i], was);
                if now {
                    open = Some((turn, End::Turn, grid[i]));
                } else if let Some((start, kind, inner)) = open.take() {
                    segments.push(Segment {
                        lo: start,
                        hi: turn,
                        lo_end: kind,
                        hi_end: End::Turn,
                        inner,
                    });
                }
            }
            if let Some((start, kind, inner)) = open {
                let last = grid[grid.len() - 1];
                let (hi, hi_end) = match iv.hi_end {
                    End::Blocking => (self.turn_between(last, iv.hi, true), End::Turn),
                    kind => (f64::NAN, kind),
                };
                segments.push(Segment {
                    lo: start,
                    hi,
                    lo_end: kind,
                    hi_end,
                    inner,
                });
            }
        }
        self.segments = segments;
    }

    fn end_value(&self, end: End, y: f64, upper: bool, left_of_zero: bool) -> f64 {
        match end {
            End::Turn | End::Blocking => self.raw(y).0,
            End::Infinite => 0.0,
            End::Pole => match (upper, left_of_zero) {
                // just right of zero x → +∞, just left x → −∞
                (true, false) => f64::INFINITY,
                (false, true) => f64::NEG_INFINITY,
                _ => unreachable!("pole at zero bounds a decreasing branch only from these sides"),
            },
        }
    }

    /// Finite `y` inside the segment with `x(y)` on the requested side of
    /// `target`, walking towards the open end geometrically.
    fn walk(&self, seg: &Segment, target: f64, towards_lo: bool) -> Option<f64> {
        let (end, at) = if towards_lo {
            (seg.lo_end, seg.lo)
        } else {
            (seg.hi_end, seg.hi)
        };
        let want = |x: f64| if towards_lo { x > target } else { x < target };
        if matches!(end, End::Turn | End::Blocking) {
            return want(self.raw(at).0).then_some(at);
        }
        let mut y = seg.inner;
        for _ in 0..2200 {
            if want(self.raw(y).0) {
                return Some(y);
            }
            y = match end {
                End::Pole => y * 0.5,
                End::Infinite => y * 2.0,
                End::Turn | End::Blocking => unreachable!(),
            };
            if y == 0.0 || !y.is_finite() {
                return None;
            }
        }
        None
    }

    /// Witness `y` with `x_N(y) = x` and `x_N′(y) < 0`, if any.
    pub fn query(&self, x: f64) -> Option<SupportQuery> {
        if !x.is_finite() {
            return None;
        }
        for seg in &self.segments {
            let left = seg.inner < 0.0;
            let top = self.end_value(seg.lo_end, seg.lo, true, left);
            let bottom = self.end_value(seg.hi_end, seg.hi, false, left);
            if !(x < top && x > bottom) {
                continue;
            }
            let (Some(mut a), Some(mut b)) = (self.walk(seg, x, true), self.walk(seg, x, false))
            else {
                continue;
            };
            for _ in 0..300 {
                let mid = 0.5 * (a + b);
                if mid <= a.min(b) || mid >= a.max(b) {
                    break;
                }
                if self.raw(mid).0 > x {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            let y = if (self.raw(a).0 - x).abs() <= (self.raw(b).0 - x).abs() {
                a
            } else {
                b
            };
            let (xv, xp) = self.raw(y);
            if xp < 0.0 {
                return Some(SupportQuery {
                    y,
                    x: xv,
                    x_prime: xp,
                });
            }
        }
        None
    }

    /// Minimum of `x_N` on `(0, 1/λmax)`.
    pub fn right_edge(&self) -> Result<f64> {
        let seg = self
            .segments
            .iter()
            .find(|s| s.lo_end == End::Pole && s.inner > 0.0)
            .ok_or_else(|| Error::invalid("no decreasing branch right of zero"))?;
        match seg.hi_end {
            End::Turn => Ok(self.raw(seg.hi).0),
            // no population mass: x = 1/y decreases to 0
            _ => Ok(0.0),
        }
    }

    /// Endpoints of every decreasing branch (`±∞` for open ends at zero or
    /// infinity), ascending in `y`.
    pub fn decreasing_branches(&self) -> Vec<(f64, f64)> {
        self.segments
            .iter()
            .map(|s| {
                let lo = match s.lo_end {
                    End::Turn | End::Blocking => s.lo,
                    End::Pole => 0.0,
                    End::Infinite => f64::NEG_INFINITY,
                };
                let hi = match s.hi_end {
                    End::Turn | End::Blocking => s.hi,
                    End::Pole => 0.0,
                    End::Infinite => f64::INFINITY,
                };
                (lo, hi)
            })
            .collect()
    }

    /// The curve `y ↦ (x, x′)` on the scan grid, for plotting.
    pub fn sample_curve(&self) -> Vec<SupportQuery> {
        self.interval_samples()
            .into_iter()
            .flat_map(|iv| iv.grid)
            .filter_map(|y| self.evaluate(y).ok())
            .collect()
    }
}

fn top_two_of(eigs: &[f64]) -> Result<(usize, f64, f64)> {
    if eigs.len() < 2 {
        return Err(Error::invalid("need at least two eigenvalues"));
    }
    let mut top = 0;
    for (k, &l) in eigs.iter().enumerate() {
        if !l.is_finite() {
            return Err(Error::invalid(format!("non-finite eigenvalue {l}")));
        }
        if l > eigs[top] {
            top = k;
        }
    }
    let second = eigs
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != top)
        .map(|(_, &l)| l)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(eigs[top] > second) || eigs[top] <= 0.0 {
        return Err(Error::GapViolation {
            lambda1: eigs[top],
            lambda2: second,
        });
    }
    Ok((top, eigs[top], second))
}

/// `β_N = (1/n) Σ_{k≥2} λ_k/(λ1 − λ_k)`, in any order, with compensated
/// summation.
pub fn beta_n(eigs: &[f64], n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n must be ≥ 1"));
    }
    let (top, l1, _) = top_two_of(eigs)?;
    let sum = compensated_sum(
        eigs.iter()
            .enumerate()
            .filter(|&(k, _)| k != top)
            .map(|(_, &l)| l / (l1 - l)),
    );
    Ok(sum / n as f64)
}

/// `θ_N = 1 + (1/n) Σ_{k≥2} λ_k/(1 − λ_k)` for a spectrum normalized to
/// `λ1 = 1`.
pub fn theta_n(eigs: &[f64], n: usize) -> Result<f64> {
    let (_, l1, _) = top_two_of(eigs)?;
    if (l1 - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "spectrum must be normalized to λ1 = 1, got {l1}"
        )));
    }
    Ok(1.0 + beta_n(eigs, n)?)
}

/// `σ² = E|Z|⁴ − 1`.
pub fn sigma_squared(law: EntryLaw) -> f64 {
    law.fourth_moment() - 1.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn midpoint(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        (0..n).map(|i| f(a + (i as f64 + 0.5) * h)).sum::<f64>() * h
    }

    #[test]
    fn density_examples() {
        let p = MpParams::new(1.0).unwrap();
        assert_eq!(mp_density(p, 4.0).unwrap(), 0.0);
        // √((4 − 2)(2 − 0)) / (2π · 2)
        assert_relative_eq!(
            mp_density(p, 2.0).unwrap(),
            1.0 / (2.0 * PI),
            epsilon = 1e-15
        );
        assert!(mp_density(p, 0.0).is_err());
        assert_eq!(mp_atom(p), 0.0);
        assert_eq!(mp_atom(MpParams::new(4.0).unwrap()), 0.75);
        assert!(MpParams::new(0.0).is_err());
    }

    #[test]
    fn density_integrates_to_one() {
        for r in [0.25, 1.0, 4.0] {
            let p = MpParams::new(r).unwrap();
            let (lo, hi) = p.edges();
            // θ ↦ λ = c + w cos θ removes the edge square roots
            let (c, w) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            let mass = midpoint(
                |t| {
                    let l = c - w * t.cos();
                    if l <= 0.0 {
                        0.0
                    } else {
                        mp_density(p, l).unwrap() * w * t.sin()
                    }
                },
                0.0,
                PI,
                20_000,
            );
            assert!(
                (mass + mp_atom(p) - 1.0).abs() < 1e-6,
                "r={r}: {}",
                mass + mp_atom(p)
            );
        }
    }

    #[test]
    fn closed_form_worked_example() {
        let m = mp_companion_stieltjes(MpParams::new(1.0).unwrap(), c64::new(5.0, 0.0)).unwrap();
        assert_relative_eq!(m.re, (5.0 - 5f64.sqrt()) / 10.0, epsilon = 1e-15);
        assert!(mp_companion_stieltjes(MpParams::new(1.0).unwrap(), c64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn fixed_point_dirac_zero() {
        let nu = DiscreteMeasure::dirac(0.0);
        for z in [c64::new(1.0, 1.0), c64::new(-3.0, 0.2), c64::new(2.0, 0.0)] {
            let sol = solve_fixed_point(&nu, 0.7, z).unwrap();
            assert_relative_eq!((sol.m - z.inv()).norm(), 0.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn fixed_point_matches_closed_form_at_five() {
        let sol = solve_fixed_point(&DiscreteMeasure::dirac(1.0), 1.0, c64::new(5.0, 0.0)).unwrap();
        let oracle = (5.0 - (25.0f64 - 20.0).sqrt()) / 10.0;
        assert_relative_eq!(sol.m.re, oracle, epsilon = 1e-12);
        assert!(solve_fixed_point(&DiscreteMeasure::dirac(1.0), 1.0, c64::new(2.0, 0.0)).is_err());
    }

    #[test]
    fn fixed_point_spiked_residual() {
        let nu = DiscreteMeasure::uniform(&[5.0, 1.0, 1.0]).unwrap();
        let sol = solve_fixed_point(&nu, 0.6, c64::new(9.0, 0.01)).unwrap();
        assert!(sol.residual < 1e-10);
        assert!(sol.m.im < 0.0);
    }

    /// Quadratic-formula oracle written independently of the library branch
    /// logic: the root that continues `1/z` from `z = 10⁶ i`.
    fn quadratic_oracle(r: f64, z: c64) -> c64 {
        let b = z + (1.0 - r);
        let s = (b * b - z * 4.0).sqrt();
        let roots = [(b + s) / (z * 2.0), (b - s) / (z * 2.0)];
        *roots
            .iter()
            .min_by(|a, b| (a.im * z.im).total_cmp(&(b.im * z.im)))
            .unwrap()
    }

    #[test]
    fn fixed_point_grid_matches_closed_form() {
        let mut worst: f64 = 0.0;
        for r in [0.25, 1.0, 2.5] {
            let p = MpParams::new(r).unwrap();
            for i in 0..100 {
                let re = -1.0 + 8.0 * (i % 10) as f64 / 9.0;
                let im = 10f64.powf(-3.0 + 3.0 * (i / 10) as f64 / 9.0);
                let z = c64::new(re, im);
                let sol = solve_fixed_point(&DiscreteMeasure::dirac(1.0), r, z).unwrap();
                let closed = mp_companion_stieltjes(p, z).unwrap();
                assert!((closed - quadratic_oracle(r, z)).norm() < 1e-12);
                worst = worst.max((sol.m - closed).norm());
            }
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn x_of_y_examples() {
        let q = x_of_y(&[0.0; 4], 0.5, 2.0).unwrap();
        assert_eq!((q.x, q.x_prime), (0.5, -0.25));
        let r = 0.7;
        let q = x_of_y(&[1.0; 5], r, -1.0).unwrap();
        assert_relative_eq!(q.x, -1.0 + r / 2.0, epsilon = 1e-15);
        assert!(x_of_y(&[1.0], 1.0, 0.0).is_err());
        assert!(x_of_y(&[2.0], 1.0, 0.5).is_err());
    }

    #[test]
    fn edge_recovery() {
        for r in [0.25, 0.5, 1.0] {
            let edge = support_edge(&[1.0; 7], r).unwrap();
            assert!(
                (edge - (1.0 + r.sqrt()).powi(2)).abs() < 1e-8,
                "r={r}: {edge}"
            );
            // brute-force minimization of the closed form oracle
            let brute = (1..200_000)
                .map(|i| {
                    let y = i as f64 / 200_000.0;
                    1.0 / y + r / (1.0 - y)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((edge - brute).abs() < 1e-8);
        }
    }

    #[test]
    fn support_complement_identity() {
        let eigs = [1.0; 3];
        let w = support_complement(&eigs, 1.0, 5.0).unwrap().unwrap();
        assert!(w.x_prime < 0.0);
        assert_relative_eq!(w.x, 5.0, epsilon = 1e-12);
        // the witness is the companion transform
        let m = mp_companion_stieltjes(MpParams::new(1.0).unwrap(), c64::new(5.0, 0.0)).unwrap();
        assert_relative_eq!(w.y, m.re, epsilon = 1e-12);
        assert!(support_complement(&eigs, 1.0, 2.0).unwrap().is_none());
        assert!(support_complement(&eigs, 1.0, -0.5).unwrap().is_some());
    }

    #[test]
    fn support_complement_monotone_beyond_edge() {
        let eigs = [5.0, 1.0, 1.0, 0.3];
        let r = 0.6;
        let edge = support_edge(&eigs, r).unwrap();
        assert!(support_complement(&eigs, r, edge - 1e-3).unwrap().is_none());
        for i in 0..200 {
            let x = edge * (1.0 + 1e-6) + i as f64 * 0.1;
            assert!(support_complement(&eigs, r, x).unwrap().is_some(), "{x}");
        }
    }

    #[test]
    fn support_gap_between_separated_spike() {
        // Γ = diag(1, ε, …, ε): the spike's cluster separates from the bulk.
        let n = 400;
        let eps = 1e-3;
        let mut eigs = alloc::vec![eps; n];
        eigs[0] = 1.0;
        let r = 0.8;
        let scanner = SupportScanner::new(&eigs, r).unwrap();
        for x in [0.05, 0.2, 0.5, 0.8] {
            assert!(scanner.query(x).is_some(), "{x}");
        }
        // oracle: dense sampling of x_N over B_N finds a decreasing preimage
        for x in [0.05, 0.2, 0.5, 0.8] {
            let mut hit = false;
            let ys: Vec<f64> = (1..400_000)
                .map(|i| 1.0 + i as f64 * (1.0 / eps - 1.0) / 400_000.0)
                .collect();
            for w in ys.windows(2) {
                let (a, b) = (scanner.raw(w[0]), scanner.raw(w[1]));
                if (a.0 - x) * (b.0 - x) <= 0.0 && a.1 < 0.0 && b.1 < 0.0 {
                    hit = true;
                    break;
                }
            }
            assert!(hit, "{x}");
        }
    }

    #[test]
    fn beta_examples() {
        let (n_rows, n, l) = (10usize, 13usize, 7.0);
        let mut eigs = alloc::vec![1.0; n_rows];
        eigs[0] = l;
        assert_relative_eq!(
            beta_n(&eigs, n).unwrap(),
            (n_rows - 1) as f64 / (n as f64 * (l - 1.0)),
            epsilon = 1e-15
        );
        assert_eq!(beta_n(&[5.0, 0.0, 0.0], 4).unwrap(), 0.0);
        assert!(matches!(
            beta_n(&[2.0, 2.0, 1.0], 4),
            Err(Error::GapViolation { .. })
        ));
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta_n(&[1.0, 0.0, 0.0], 5).unwrap(), 1.0);
        let c = 0.3;
        let (m, n) = (6, 11);
        let mut eigs = alloc::vec![c; m + 1];
        eigs[0] = 1.0;
        assert_relative_eq!(
            theta_n(&eigs, n).unwrap(),
            1.0 + (m as f64 / n as f64) * c / (1.0 - c),
            epsilon = 1e-15
        );
        assert!(theta_n(&[2.0, 1.0], 3).is_err());
        // θ_N is x̂_N(1): the k ≥ 2 spectrum with r = (N−1)/n
        let rest = &eigs[1..];
        let q = x_of_y(rest, rest.len() as f64 / n as f64, 1.0).unwrap();
        assert_relative_eq!(q.x, theta_n(&eigs, n).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn sigma_squared_values() {
        assert_eq!(sigma_squared(EntryLaw::RealGaussian), 2.0);
        assert_eq!(sigma_squared(EntryLaw::ComplexGaussian), 1.0);
        assert_eq!(sigma_squared(EntryLaw::StdExponential), 8.0);
        assert_eq!(sigma_squared(EntryLaw::SymmetricBernoulli), 0.0);
    }

    proptest! {
        #[test]
        fn beta_is_scale_invariant(
            mut eigs in proptest::collection::vec(0.0f64..10.0, 2..40),
            c in 1e-3f64..1e3,
            n in 1usize..500,
        ) {
            eigs[0] = 20.0;
            let scaled: Vec<f64> = eigs.iter().map(|l| l * c).collect();
            let (a, b) = (beta_n(&eigs, n).unwrap(), beta_n(&scaled, n).unwrap());
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
        }

        #[test]
        fn theta_minus_one_is_beta(
            mut eigs in proptest::collection::vec(0.0f64..0.99, 2..60),
            n in 1usize..500,
        ) {
            eigs[0] = 1.0;
            let beta = beta_n(&eigs, n).unwrap();
            prop_assert!((theta_n(&eigs, n).unwrap() - 1.0 - beta).abs() <= 4.0 * f64::EPSILON * (1.0 + beta));
        }

        #[test]
        fn fixed_point_residual_certifies(
            eigs in proptest::collection::vec(0.05f64..8.0, 1..30),
            r in 0.1f64..3.0,
            re in -2.0f64..20.0,
            im in 1e-2f64..5.0,
        ) {
            let nu = DiscreteMeasure::uniform(&eigs).unwrap();
            let sol = solve_fixed_point(&nu, r, c64::new(re, im)).unwrap();
            prop_assert!(sol.residual <= FIXED_POINT_TOL * sol.z.norm().max(1.0));
            prop_assert!(sol.m.im < 0.0);
        }
    }
}
