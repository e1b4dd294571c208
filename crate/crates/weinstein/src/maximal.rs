//! The uncentered maximal operator, its ball-average majorant, weak-type and
//! L^p diagnostics, and greedy Vitali selection.
//!
//! The discrete maximal value at a node x is
//!
//! ```text
//! M f(x) = max over eps in the schedule, z a grid node in B^+(x, eps) of
//!          |sum_y f(y) tau_z(chi_eps)(-y', y_d) w(y)| / n(z, eps)
//! ```
//!
//! with normalizer `n = max(closed-form ball measure, discrete kernel mass)`;
//! taking the max of the two keeps the candidate values exact weighted
//! averages (so M f <= ||f||_inf holds exactly) while staying within the
//! discrete mass error of the measure normalization. The sup over a
//! continuum of radii and centers is discretized, so the result is a lower
//! bound for the true maximal function, monotone under schedule refinement.
//!
//! In two dimensions the whole field is computed in O(nodes x ball) time:
//! the pairing against f is a per-depth-row lateral convolution with a
//! translated-indicator kernel, and the sup over z in a disc is a sliding
//! window maximum. The pointwise brute-force path (`maximal_uncentered`)
//! evaluates the same candidates directly and serves as the oracle.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::halfspace::{lp_norm, BallSpec, GridFunction, HalfSpaceGrid, WeinsteinParams};
use crate::translation::ball_translate;

// ---------------------------------------------------------------------------
// schedules
// ---------------------------------------------------------------------------

/// Radii (descending) and the cap on z-samples per ball used by the
/// pointwise path; the field path always scans every node in the ball.
#[derive(Debug, Clone)]
pub struct RadiusSchedule {
    radii: Vec<f64>,
    z_samples_per_ball: usize,
}

impl RadiusSchedule {
    pub fn new(mut radii: Vec<f64>, z_samples_per_ball: usize) -> Result<Self> {
        if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::domain("schedule radii must be positive and finite"));
        }
        if z_samples_per_ball == 0 {
            return Err(Error::domain("z sample cap must be at least 1"));
        }
        radii.sort_by(|a, b| b.partial_cmp(a).unwrap());
        radii.dedup();
        Ok(RadiusSchedule {
            radii,
            z_samples_per_ball,
        })
    }

    pub fn log_spaced(min: f64, max: f64, count: usize, cap: usize) -> Result<Self> {
        if !(min > 0.0 && max > min) || count < 2 {
            return Err(Error::domain("log_spaced needs 0 < min < max and count >= 2"));
        }
        let radii = (0..count)
            .map(|i| {
                let t = i as f64 / (count - 1) as f64;
                (min.ln() + t * (max.ln() - min.ln())).exp()
            })
            .collect();
        RadiusSchedule::new(radii, cap)
    }

    /// Default: 8 log-spaced radii spanning two decades, no z cap.
    pub fn default_schedule() -> Self {
        RadiusSchedule::log_spaced(0.01, 1.0, 8, usize::MAX).unwrap()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn z_samples_per_ball(&self) -> usize {
        self.z_samples_per_ball
    }

    /// Radii usable on a grid: at least twice the largest spacing, so every
    /// discrete ball has an interior node. Returned descending.
    pub fn usable_radii(&self, grid: &HalfSpaceGrid) -> Vec<f64> {
        let floor = 2.0 * grid.max_spacing();
        self.radii.iter().copied().filter(|&r| r >= floor).collect()
    }
}

// ---------------------------------------------------------------------------
// 2-d disc windows (shared by field and pointwise paths)
// ---------------------------------------------------------------------------

/// Integer disc window in index space: for each depth offset dd, the lateral
/// half-width w so that (dlat h)^2 + (dd h_d)^2 <= eps^2 iff |dlat| <= w.
fn disc_window(grid: &HalfSpaceGrid, eps: f64) -> Vec<(isize, usize)> {
    let h_lat = grid.spacing(0);
    let h_d = grid.spacing(1);
    let dmax = (eps / h_d).floor() as isize;
    let mut out = Vec::with_capacity((2 * dmax + 1) as usize);
    for dd in -dmax..=dmax {
        let rem = eps * eps - (dd as f64 * h_d) * (dd as f64 * h_d);
        if rem < 0.0 {
            continue;
        }
        let w = (rem.sqrt() / h_lat).floor() as usize;
        out.push((dd, w));
    }
    out
}

// ---------------------------------------------------------------------------
// field computation (d = 2 fast path, generic fallback)
// ---------------------------------------------------------------------------

/// Per-radius context shared by every function on a given grid: the kernel
/// mass field (pairing against 1) and the discrete ball measures.
struct RadiusContext {
    eps: f64,
    ball_measure: f64,
    /// sum_y tau_z(chi)(-y', y_d) w(y) per node z
    kernel_mass: Vec<f64>,
    /// sum of weights of nodes in B^+(z, eps) per node z
    ball_weight: Vec<f64>,
}

/// Grid-level maximal context: radii usable on the grid, their kernel mass
/// and ball-weight fields, and the edge exclusion mask.
pub struct MaximalContext {
    grid: Arc<HalfSpaceGrid>,
    schedule: RadiusSchedule,
    radii: Vec<RadiusContext>,
    excluded: Vec<bool>,
    exclusion_radius: f64,
}

impl MaximalContext {
    pub fn new(
        params: &WeinsteinParams,
        grid: &Arc<HalfSpaceGrid>,
        schedule: &RadiusSchedule,
    ) -> Result<Self> {
        let usable = schedule.usable_radii(grid);
        if usable.is_empty() {
            return Err(Error::domain(
                "no schedule radius is resolvable on this grid",
            ));
        }
        let ones = GridFunction::sample(grid, |_| 1.0);
        let radii = usable
            .iter()
            .map(|&eps| {
                Ok(RadiusContext {
                    eps,
                    ball_measure: params.ball_measure(eps)?,
                    kernel_mass: pairing_field(params, &ones, eps),
                    ball_weight: ball_weight_field(grid, eps),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        let exclusion_radius = usable[0];
        let d = grid.dim();
        let mut buf = vec![0.0; d];
        let excluded = (0..grid.node_count())
            .map(|i| {
                grid.node(i, &mut buf);
                let mut out = buf[d - 1] > grid.depth() - exclusion_radius;
                for k in 0..d - 1 {
                    out |= buf[k].abs() > grid.half_widths()[k] - exclusion_radius;
                }
                out
            })
            .collect();
        Ok(MaximalContext {
            grid: Arc::clone(grid),
            schedule: schedule.clone(),
            radii,
            excluded,
            exclusion_radius,
        })
    }

    pub fn grid(&self) -> &Arc<HalfSpaceGrid> {
        &self.grid
    }

    pub fn schedule(&self) -> &RadiusSchedule {
        &self.schedule
    }

    pub fn exclusion_radius(&self) -> f64 {
        self.exclusion_radius
    }

    pub fn excluded(&self) -> &[bool] {
        &self.excluded
    }

    pub fn usable_radii(&self) -> Vec<f64> {
        self.radii.iter().map(|r| r.eps).collect()
    }
}

/// Pairing field V(z) = sum_y f(y) tau_z(chi_eps)(-y', y_d) w(y) at every
/// node z.
fn pairing_field(params: &WeinsteinParams, f: &GridFunction<f64>, eps: f64) -> Vec<f64> {
    let grid = f.grid();
    if grid.dim() == 2 {
        pairing_field_2d(params, f, eps)
    } else {
        pairing_field_generic(params, f, eps)
    }
}

fn pairing_field_2d(params: &WeinsteinParams, f: &GridFunction<f64>, eps: f64) -> Vec<f64> {
    let grid = f.grid();
    let n_lat = grid.counts()[0];
    let n_d = grid.counts()[1];
    let h_lat = grid.spacing(0);
    let xd = grid.axis_nodes(1).to_vec();
    let window = disc_window(grid, eps);

    (0..n_d)
        .into_par_iter()
        .flat_map_iter(|a| {
            let z_d = xd[a];
            let mut row = vec![0.0f64; n_lat];
            let mut zbuf = [0.0f64, z_d];
            let mut ybuf = [0.0f64, 0.0f64];
            for &(dd, w) in &window {
                let b = a as isize + dd;
                if b < 0 || b >= n_d as isize {
                    continue;
                }
                let b = b as usize;
                let y_d = xd[b];
                let wy = grid.row_weight(b);
                // kernel values by |lateral offset|
                let mut kern = vec![0.0f64; w + 1];
                zbuf[0] = 0.0;
                ybuf[1] = y_d;
                for (o, kv) in kern.iter_mut().enumerate() {
                    ybuf[0] = o as f64 * h_lat;
                    *kv = ball_translate(params, &zbuf, eps, &ybuf).expect("valid pairing")
                        * wy;
                }
                let fb = &f.values()[b * n_lat..(b + 1) * n_lat];
                for (j, slot) in row.iter_mut().enumerate() {
                    let lo = j.saturating_sub(w);
                    let hi = (j + w).min(n_lat - 1);
                    let mut acc = 0.0;
                    for jy in lo..=hi {
                        let o = j.abs_diff(jy);
                        acc += kern[o] * fb[jy];
                    }
                    *slot += acc;
                }
            }
            row.into_iter()
        })
        .collect()
}

fn pairing_field_generic(params: &WeinsteinParams, f: &GridFunction<f64>, eps: f64) -> Vec<f64> {
    let grid = f.grid();
    let d = grid.dim();
    (0..grid.node_count())
        .into_par_iter()
        .map(|zf| {
            let mut z = vec![0.0; d];
            grid.node(zf, &mut z);
            let mut y = vec![0.0; d];
            let mut acc = 0.0;
            for yf in grid.nodes_in_ball(&z, eps) {
                grid.node(yf, &mut y);
                acc += f.values()[yf]
                    * ball_translate(params, &z, eps, &y).expect("valid pairing")
                    * grid.weight(yf);
            }
            acc
        })
        .collect()
}

/// Discrete measure of B^+(z, eps) per node z (sum of node weights).
fn ball_weight_field(grid: &Arc<HalfSpaceGrid>, eps: f64) -> Vec<f64> {
    if grid.dim() == 2 {
        let ones = GridFunction::sample(grid, |_| 1.0);
        ball_sum_field_2d(&ones, eps)
    } else {
        (0..grid.node_count())
            .into_par_iter()
            .map(|zf| {
                let z = grid.node_vec(zf);
                grid.nodes_in_ball(&z, eps)
                    .into_iter()
                    .map(|yf| grid.weight(yf))
                    .sum()
            })
            .collect()
    }
}

/// sum over y in B^+(z, eps) of g(y) w(y), per node z (d = 2).
fn ball_sum_field_2d(g: &GridFunction<f64>, eps: f64) -> Vec<f64> {
    let grid = g.grid();
    let n_lat = grid.counts()[0];
    let n_d = grid.counts()[1];
    let window = disc_window(grid, eps);
    // prefix sums per row of g
    let prefix: Vec<Vec<f64>> = (0..n_d)
        .map(|b| {
            let mut p = Vec::with_capacity(n_lat + 1);
            p.push(0.0);
            let base = b * n_lat;
            let w = grid.row_weight(b);
            for j in 0..n_lat {
                p.push(p[j] + g.values()[base + j] * w);
            }
            p
        })
        .collect();
    (0..n_d)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut row = vec![0.0f64; n_lat];
            for &(dd, w) in &window {
                let b = a as isize + dd;
                if b < 0 || b >= n_d as isize {
                    continue;
                }
                let p = &prefix[b as usize];
                for (j, slot) in row.iter_mut().enumerate() {
                    let lo = j.saturating_sub(w);
                    let hi = (j + w).min(n_lat - 1);
                    *slot += p[hi + 1] - p[lo];
                }
            }
            row.into_iter()
        })
        .collect()
}

/// Sliding maximum over the disc B^+(x, eps) in index space (d = 2).
fn disc_max_2d(grid: &HalfSpaceGrid, src: &[f64], eps: f64) -> Vec<f64> {
    let n_lat = grid.counts()[0];
    let n_d = grid.counts()[1];
    let window = disc_window(grid, eps);
    (0..n_d)
        .into_par_iter()
        .flat_map_iter(|a| {
            let mut row = vec![f64::NEG_INFINITY; n_lat];
            let mut slide = vec![0.0f64; n_lat];
            for &(dd, w) in &window {
                let b = a as isize + dd;
                if b < 0 || b >= n_d as isize {
                    continue;
                }
                let srow = &src[(b as usize) * n_lat..(b as usize + 1) * n_lat];
                sliding_max(srow, w, &mut slide);
                for (r, s) in row.iter_mut().zip(&slide) {
                    if *s > *r {
                        *r = *s;
                    }
                }
            }
            row.into_iter()
        })
        .collect()
}

/// out[j] = max of src over [j-w, j+w] clipped to the row; monotonic deque.
fn sliding_max(src: &[f64], w: usize, out: &mut [f64]) {
    let n = src.len();
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    let mut right = 0usize;
    for j in 0..n {
        let hi = (j + w).min(n - 1);
        while right <= hi {
            while let Some(&back) = deque.back() {
                if src[back] <= src[right] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(right);
            right += 1;
        }
        let lo = j.saturating_sub(w);
        while let Some(&front) = deque.front() {
            if front < lo {
                deque.pop_front();
            } else {
                break;
            }
        }
        out[j] = src[*deque.front().expect("window is nonempty")];
    }
}

// ---------------------------------------------------------------------------
// the maximal analysis
// ---------------------------------------------------------------------------

/// M f and the ball-average majorant, with the edge exclusion mask used for
/// operator statistics.
pub struct MaximalAnalysis {
    m: GridFunction<f64>,
    m_tilde: GridFunction<f64>,
}

impl MaximalAnalysis {
    /// Compute both maximal fields for `f` over the context's schedule.
    pub fn compute(
        params: &WeinsteinParams,
        ctx: &MaximalContext,
        f: &GridFunction<f64>,
    ) -> Result<Self> {
        let grid = ctx.grid();
        assert!(
            grid.same_layout(f.grid()),
            "contract violation: maximal context and function grids differ"
        );
        let n = grid.node_count();
        let mut m = vec![0.0f64; n];
        let mut m_tilde = vec![0.0f64; n];
        let abs_f = f.map(|v| v.abs());
        for rc in &ctx.radii {
            let pairing = pairing_field(params, f, rc.eps);
            let ratios: Vec<f64> = pairing
                .iter()
                .zip(&rc.kernel_mass)
                .map(|(v, mass)| v.abs() / rc.ball_measure.max(*mass))
                .collect();
            let candidate = if grid.dim() == 2 {
                disc_max_2d(grid, &ratios, rc.eps)
            } else {
                disc_max_generic(grid, &ratios, rc.eps)
            };
            for (acc, c) in m.iter_mut().zip(&candidate) {
                if *c > *acc {
                    *acc = *c;
                }
            }

            let sums = if grid.dim() == 2 {
                ball_sum_field_2d(&abs_f, rc.eps)
            } else {
                ball_sum_field_generic(&abs_f, rc.eps)
            };
            let avgs: Vec<f64> = sums
                .iter()
                .zip(&rc.ball_weight)
                .map(|(s, w)| if *w > 0.0 { s / w } else { 0.0 })
                .collect();
            let candidate = if grid.dim() == 2 {
                disc_max_2d(grid, &avgs, rc.eps)
            } else {
                disc_max_generic(grid, &avgs, rc.eps)
            };
            for (acc, c) in m_tilde.iter_mut().zip(&candidate) {
                if *c > *acc {
                    *acc = *c;
                }
            }
        }
        Ok(MaximalAnalysis {
            m: GridFunction::from_values(Arc::clone(grid), m),
            m_tilde: GridFunction::from_values(Arc::clone(grid), m_tilde),
        })
    }

    pub fn maximal(&self) -> &GridFunction<f64> {
        &self.m
    }

    pub fn ball_average(&self) -> &GridFunction<f64> {
        &self.m_tilde
    }

    /// Smallest C with M f <= C Mtilde f over non-excluded nodes.
    pub fn domination_constant(&self, ctx: &MaximalContext) -> f64 {
        self.m
            .values()
            .iter()
            .zip(self.m_tilde.values())
            .zip(ctx.excluded())
            .filter(|&((_, &mt), &ex)| !ex && mt > 0.0)
            .map(|((&mv, &mt), _)| mv / mt)
            .fold(0.0, f64::max)
    }
}

fn ball_sum_field_generic(g: &GridFunction<f64>, eps: f64) -> Vec<f64> {
    let grid = g.grid();
    let d = grid.dim();
    (0..grid.node_count())
        .into_par_iter()
        .map(|zf| {
            let mut z = vec![0.0; d];
            grid.node(zf, &mut z);
            grid.nodes_in_ball(&z, eps)
                .into_iter()
                .map(|yf| g.values()[yf] * grid.weight(yf))
                .sum()
        })
        .collect()
}

fn disc_max_generic(grid: &HalfSpaceGrid, src: &[f64], eps: f64) -> Vec<f64> {
    let d = grid.dim();
    (0..grid.node_count())
        .into_par_iter()
        .map(|xf| {
            let mut x = vec![0.0; d];
            grid.node(xf, &mut x);
            grid.nodes_in_ball(&x, eps)
                .into_iter()
                .map(|zf| src[zf])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// pointwise operations (oracle path)
// ---------------------------------------------------------------------------

fn locate_node(grid: &HalfSpaceGrid, x: &[f64]) -> Result<usize> {
    let flat = grid
        .nearest_node(x)
        .ok_or_else(|| Error::domain("point outside the grid box"))?;
    let node = grid.node_vec(flat);
    let dist2: f64 = node.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
    let tol = 1e-9 * grid.max_spacing();
    if dist2.sqrt() > tol {
        return Err(Error::domain("maximal operators expect a grid node"));
    }
    Ok(flat)
}

/// Deterministic farthest-point subsample of `candidates` seeded at `start`.
fn farthest_point_subsample(
    grid: &HalfSpaceGrid,
    candidates: &[usize],
    start: usize,
    cap: usize,
) -> Vec<usize> {
    if candidates.len() <= cap {
        return candidates.to_vec();
    }
    let d = grid.dim();
    let coords: Vec<Vec<f64>> = candidates.iter().map(|&c| grid.node_vec(c)).collect();
    let start_pos = candidates.iter().position(|&c| c == start).unwrap_or(0);
    let mut chosen = vec![start_pos];
    let mut min_d2: Vec<f64> = coords
        .iter()
        .map(|c| {
            c.iter()
                .zip(&coords[start_pos])
                .map(|(a, b)| (a - b) * (a - b))
                .sum()
        })
        .collect();
    while chosen.len() < cap {
        let (best, _) = min_d2
            .iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &v)| {
                if v > acc.1 {
                    (i, v)
                } else {
                    acc
                }
            });
        chosen.push(best);
        for i in 0..coords.len() {
            let d2: f64 = coords[i]
                .iter()
                .zip(&coords[best])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if d2 < min_d2[i] {
                min_d2[i] = d2;
            }
        }
        let _ = d;
    }
    chosen.into_iter().map(|i| candidates[i]).collect()
}

/// Grid nodes inside B^+(x, eps), through the integer disc window in d = 2
/// (so the candidate set matches the field path exactly) and the generic
/// ball scan otherwise.
fn nodes_in_ball_consistent(grid: &HalfSpaceGrid, flat: usize, eps: f64) -> Vec<usize> {
    if grid.dim() == 2 {
        let n_lat = grid.counts()[0];
        let n_d = grid.counts()[1];
        let a = flat / n_lat;
        let j = flat % n_lat;
        let mut out = Vec::new();
        for (dd, w) in disc_window(grid, eps) {
            let b = a as isize + dd;
            if b < 0 || b >= n_d as isize {
                continue;
            }
            let lo = j.saturating_sub(w);
            let hi = (j + w).min(n_lat - 1);
            for jj in lo..=hi {
                out.push(b as usize * n_lat + jj);
            }
        }
        out
    } else {
        let x = grid.node_vec(flat);
        grid.nodes_in_ball(&x, eps)
    }
}

/// Pointwise uncentered maximal value at a grid node x: brute force over the
/// schedule and the z candidates (capped by farthest-point subsampling).
pub fn maximal_uncentered(
    params: &WeinsteinParams,
    f: &GridFunction<f64>,
    x: &[f64],
    schedule: &RadiusSchedule,
) -> Result<f64> {
    let grid = f.grid();
    let flat = locate_node(grid, x)?;
    let d = grid.dim();
    let mut best = 0.0f64;
    for eps in schedule.usable_radii(grid) {
        let ball_measure = params.ball_measure(eps)?;
        let candidates = nodes_in_ball_consistent(grid, flat, eps);
        let zs = farthest_point_subsample(grid, &candidates, flat, schedule.z_samples_per_ball());
        for zf in zs {
            let z = grid.node_vec(zf);
            let mut y = vec![0.0; d];
            let mut pairing = 0.0;
            let mut mass = 0.0;
            for yf in nodes_in_ball_consistent(grid, zf, eps) {
                grid.node(yf, &mut y);
                let tau = ball_translate(params, &z, eps, &y)?;
                let w = grid.weight(yf);
                pairing += f.values()[yf] * tau * w;
                mass += tau * w;
            }
            let v = pairing.abs() / ball_measure.max(mass);
            if v > best {
                best = v;
            }
        }
    }
    Ok(best)
}

/// Pointwise ball-average majorant at a grid node x.
pub fn maximal_ball_average(
    params: &WeinsteinParams,
    f: &GridFunction<f64>,
    x: &[f64],
    schedule: &RadiusSchedule,
) -> Result<f64> {
    let grid = f.grid();
    let flat = locate_node(grid, x)?;
    let _ = params;
    let mut best = 0.0f64;
    for eps in schedule.usable_radii(grid) {
        let candidates = nodes_in_ball_consistent(grid, flat, eps);
        let zs = farthest_point_subsample(grid, &candidates, flat, schedule.z_samples_per_ball());
        for zf in zs {
            let mut sum = 0.0;
            let mut wsum = 0.0;
            for yf in nodes_in_ball_consistent(grid, zf, eps) {
                let w = grid.weight(yf);
                sum += f.values()[yf].abs() * w;
                wsum += w;
            }
            if wsum > 0.0 {
                let v = sum / wsum;
                if v > best {
                    best = v;
                }
            }
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// distribution function and operator statistics
// ---------------------------------------------------------------------------

/// Discrete measure of { g > level } (level > 0).
pub fn distribution_function(
    params: &WeinsteinParams,
    g: &GridFunction<f64>,
    level: f64,
) -> Result<f64> {
    if !(level > 0.0) {
        return Err(Error::domain("distribution level must be > 0"));
    }
    let _ = params;
    let grid = g.grid();
    Ok(g.values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v > level)
        .map(|(i, _)| grid.weight(i))
        .sum())
}

fn distribution_masked(g: &GridFunction<f64>, mask: &[bool], level: f64) -> f64 {
    let grid = g.grid();
    g.values()
        .iter()
        .enumerate()
        .filter(|(i, &v)| !mask[*i] && v > level)
        .map(|(i, _)| grid.weight(i))
        .sum()
}

/// Empirical weak-type (1,1) constant: max over levels of
/// level * nu({M f > level}) / ||f||_1, with the distribution restricted to
/// nodes outside the edge exclusion zone.
pub fn weak_type_constant(
    params: &WeinsteinParams,
    ctx: &MaximalContext,
    analysis: &MaximalAnalysis,
    f: &GridFunction<f64>,
    levels: &[f64],
) -> Result<f64> {
    let l1 = lp_norm(params, f, 1.0)?;
    if !(l1 > 0.0) {
        return Err(Error::domain("weak-type constant undefined for ||f||_1 = 0"));
    }
    if levels.is_empty() || levels.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::domain("levels must be positive"));
    }
    let mut best = 0.0f64;
    for &level in levels {
        let measure = distribution_masked(analysis.maximal(), ctx.excluded(), level);
        best = best.max(level * measure / l1);
    }
    Ok(best)
}

/// ||M f||_p / ||f||_p with the numerator restricted to non-excluded nodes.
pub fn lp_operator_ratio(
    params: &WeinsteinParams,
    ctx: &MaximalContext,
    analysis: &MaximalAnalysis,
    f: &GridFunction<f64>,
    p: f64,
) -> Result<f64> {
    if !(p > 1.0) {
        return Err(Error::domain("lp operator ratio requires p > 1"));
    }
    let denom = lp_norm(params, f, p)?;
    if !(denom > 0.0) {
        return Err(Error::domain("lp ratio undefined for ||f||_p = 0"));
    }
    let grid = ctx.grid();
    let numer = if p.is_infinite() {
        analysis
            .maximal()
            .values()
            .iter()
            .zip(ctx.excluded())
            .filter(|&(_, &ex)| !ex)
            .map(|(&v, _)| v)
            .fold(0.0, f64::max)
    } else {
        let mut sum = 0.0;
        for (i, &v) in analysis.maximal().values().iter().enumerate() {
            if !ctx.excluded()[i] {
                sum += v.powf(p) * grid.weight(i);
            }
        }
        sum.powf(1.0 / p)
    };
    Ok(numer / denom)
}

// ---------------------------------------------------------------------------
// Vitali selection
// ---------------------------------------------------------------------------

/// A finite family of half-space balls.
#[derive(Clone, Debug)]
pub struct BallFamily {
    balls: Vec<BallSpec>,
}

impl BallFamily {
    pub fn new(balls: Vec<BallSpec>) -> Result<Self> {
        if balls.is_empty() {
            return Err(Error::domain("ball family must be nonempty"));
        }
        Ok(BallFamily { balls })
    }

    pub fn balls(&self) -> &[BallSpec] {
        &self.balls
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }
}

/// Greedy Vitali selection: scan by descending radius (ties broken by
/// lexicographic center), keep a ball iff it is disjoint from everything
/// kept so far. The output is pairwise disjoint and every input ball meets
/// a kept ball of at least its radius, hence lies in its 5-fold dilate.
pub fn vitali_select(family: &BallFamily) -> BallFamily {
    let mut order: Vec<usize> = (0..family.len()).collect();
    order.sort_by(|&i, &j| {
        let a = &family.balls[i];
        let b = &family.balls[j];
        b.radius
            .partial_cmp(&a.radius)
            .unwrap()
            .then_with(|| a.center.partial_cmp(&b.center).unwrap())
    });
    let mut selected: Vec<BallSpec> = Vec::new();
    for idx in order {
        let ball = &family.balls[idx];
        if selected.iter().all(|s| !s.intersects(ball)) {
            selected.push(ball.clone());
        }
    }
    BallFamily { balls: selected }
}

/// Structural verification of a selection: pairwise disjointness and the
/// 5r-covering property, both checked analytically from centers and radii.
pub fn verify_vitali(input: &BallFamily, selected: &BallFamily) -> bool {
    for (i, a) in selected.balls().iter().enumerate() {
        for b in &selected.balls()[i + 1..] {
            if a.intersects(b) {
                return false;
            }
        }
    }
    for ball in input.balls() {
        let covered = selected.balls().iter().any(|s| {
            if s.radius + 1e-12 < ball.radius || !s.intersects(ball) {
                return false;
            }
            let dist: f64 = s
                .center
                .iter()
                .zip(&ball.center)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist + ball.radius <= 5.0 * s.radius + 1e-9
        });
        if !covered {
            return false;
        }
    }
    true
}

/// Logged (not asserted) measure ratio of a selection: the sum of box-measure
/// bounds of the selected balls over a seeded Monte Carlo estimate of the
/// measure of the union of the input family.
pub fn vitali_measure_ratio(
    params: &WeinsteinParams,
    input: &BallFamily,
    selected: &BallFamily,
    seed: u64,
    samples: usize,
) -> Result<f64> {
    use rand::{Rng, SeedableRng};
    let d = params.dim();
    // bounding box of the union, clipped to the half-space
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for b in input.balls() {
        for k in 0..d {
            lo[k] = lo[k].min(b.center[k] - b.radius);
            hi[k] = hi[k].max(b.center[k] + b.radius);
        }
    }
    lo[d - 1] = lo[d - 1].max(0.0);
    let volume: f64 = (0..d).map(|k| (hi[k] - lo[k]).max(0.0)).product();
    if volume == 0.0 {
        return Err(Error::domain("degenerate bounding box"));
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    let mut x = vec![0.0; d];
    for _ in 0..samples {
        for k in 0..d {
            x[k] = lo[k] + (hi[k] - lo[k]) * rng.gen::<f64>();
        }
        let inside = input.balls().iter().any(|b| {
            let d2: f64 = b
                .center
                .iter()
                .zip(&x)
                .map(|(a, v)| (a - v) * (a - v))
                .sum();
            d2 <= b.radius * b.radius
        });
        if inside {
            acc += params.measure_density(&x)?;
        }
    }
    let union_measure = acc / samples as f64 * volume;
    let selected_measure: f64 = selected
        .balls()
        .iter()
        .map(|b| params.box_measure(&b.center, b.radius))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum();
    Ok(selected_measure / union_measure.max(1e-300))
}
