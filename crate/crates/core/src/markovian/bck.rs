//! Reflection/synchronous half-cycle coupling for index 1.
//!
//! Two copies `(B, I)` and `(B', I')` are tracked through their difference
//! `U = B - B'`, `V = I - I'`. Under reflection coupling `U` is a rate-4
//! Brownian motion and `dV = U dt`; under synchronous coupling `U` is frozen.
//! Half-cycle `k` reflects until `U` hits `(-1)^k 2^-k scale` or `V` returns to
//! zero, then (after a threshold hit) runs synchronously until `V = 0`.
//!
//! The pair `(U, V)` is advanced with its exact joint Gaussian transition, so
//! the only discretization error is in locating the two events. The step size
//! follows the local geometry: `dt0 * l^2 * max(1, (d/l)^2)` where `l` is the
//! half-cycle's spatial scale and `d` the distance from `U` to the threshold.
//! Threshold crossings between grid points are caught with the Brownian
//! bridge crossing probability; the `V = 0` event is the first root of the
//! cubic Hermite interpolant of `V` (its derivative `U` is known at both ends).

use crate::error::{require_positive, Error, Result};
use crate::noise::GaussianSource;

/// Coupling is declared once `|U| <= ABSORPTION_FLOOR * |scale|` at a
/// half-cycle boundary (that is, after at most 40 half-cycles).
pub const ABSORPTION_FLOOR: f64 = 9.094_947_017_729_282e-13; // 2^-40

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Reflection,
    Synchronous,
}

/// Snapshot of the difference process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceState {
    pub u: f64,
    pub v: f64,
    pub cycle: u32,
    pub phase: Phase,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HalfCycleEnd {
    /// `U` reached the threshold; a synchronous phase followed.
    Threshold,
    /// `V` returned to zero during the reflection phase.
    VZero,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfCycleRecord {
    pub cycle: u32,
    pub start: f64,
    /// `T_k`: end of the reflection phase.
    pub reflection_end: f64,
    /// `S_k`: end of the half-cycle.
    pub end: f64,
    pub u_start: f64,
    pub u_end: f64,
    /// `V` at `T_k`; zero when the half-cycle ended by `V = 0`.
    pub v_at_reflection_end: f64,
    pub threshold: f64,
    pub ended_by: HalfCycleEnd,
}

impl HalfCycleRecord {
    pub fn end_state(&self) -> DifferenceState {
        DifferenceState {
            u: self.u_end,
            v: 0.0,
            cycle: self.cycle,
            phase: match self.ended_by {
                HalfCycleEnd::Threshold => Phase::Synchronous,
                HalfCycleEnd::VZero => Phase::Reflection,
            },
            threshold: self.threshold,
        }
    }
}

/// Result of one coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingOutcome {
    pub coupled: bool,
    /// Coupling time when `coupled`, otherwise the censoring time.
    pub tau: f64,
    /// `S_1, S_2, ...` for the completed half-cycles.
    pub half_cycle_times: Vec<f64>,
}

impl CouplingOutcome {
    pub fn coupled_at(tau: f64) -> Self {
        Self {
            coupled: true,
            tau,
            half_cycle_times: Vec::new(),
        }
    }

    pub fn censored_at(t_max: f64) -> Self {
        Self {
            coupled: false,
            tau: t_max,
            half_cycle_times: Vec::new(),
        }
    }
}

/// Numerical settings shared by the half-cycle simulators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BckSettings {
    /// Base step at unit spatial scale.
    pub dt0: f64,
    pub t_max: f64,
}

impl BckSettings {
    pub fn new(dt0: f64, t_max: f64) -> Result<Self> {
        require_positive("dt0", dt0)?;
        if t_max.is_nan() || t_max <= 0.0 {
            return Err(Error::NonPositive {
                name: "t_max",
                value: t_max,
            });
        }
        Ok(Self { dt0, t_max })
    }
}

pub(crate) enum ReflectEnd {
    Threshold { v: f64 },
    VZero,
    Censored,
}

/// Mutable `(t, U, V)` carried through the reflection phases.
pub(crate) struct Walker {
    pub t: f64,
    pub u: f64,
    pub v: f64,
}

impl Walker {
    /// Reflection phase during which `V` keeps the sign `sv`.
    ///
    /// Stops at the first of: `U` reaching `threshold`, `V` returning to 0,
    /// or `t_max`. On a threshold hit `U` is set to the threshold exactly; on
    /// a `V` event `V` is set to 0 and `U` is clamped to the side where `V`
    /// can vanish.
    pub fn reflect<G: GaussianSource>(
        &mut self,
        sv: f64,
        threshold: Option<f64>,
        scale: f64,
        dt0: f64,
        t_max: f64,
        src: &mut G,
    ) -> ReflectEnd {
        let dt_base = dt0 * scale * scale;
        // side of the threshold on which U starts
        let side = threshold.map(|thr| if self.u >= thr { 1.0 } else { -1.0 });
        loop {
            if self.t >= t_max {
                return ReflectEnd::Censored;
            }
            let d = match threshold {
                Some(thr) => (self.u - thr).abs(),
                None => self.u.abs(),
            };
            let ratio = d / scale;
            let mut h = dt_base * ratio.max(1.0).powi(2);
            let last = self.t + h >= t_max;
            if last {
                h = t_max - self.t;
            }
            let sh = h.sqrt();
            let xi0 = src.standard_normal();
            let xi1 = src.standard_normal();
            let u0 = self.u;
            let v0 = self.v;
            let u1 = u0 + 2.0 * sh * xi0;
            let v1 = v0 + u0 * h + 2.0 * sh * h * (0.5 * xi0 + 0.5 * INV_SQRT3 * xi1);

            let mut hit_theta = None;
            if let (Some(thr), Some(side)) = (threshold, side) {
                let d0 = side * (u0 - thr);
                let d1 = side * (u1 - thr);
                if d1 <= 0.0 {
                    hit_theta = Some(d0 / (d0 - d1));
                } else {
                    let x = 2.0 * d0 * d1 / (4.0 * h);
                    if x < 40.0 && src.uniform() < (-x).exp() {
                        hit_theta = Some(d0 / (d0 + d1));
                    }
                }
            }
            let vzero_theta = first_root(sv * v0, sv * v1, sv * u0 * h, sv * u1 * h);

            match (hit_theta, vzero_theta) {
                (Some(a), Some(b)) if b <= a => {
                    self.finish_vzero(b, u0, u1, h, sv, threshold);
                    return ReflectEnd::VZero;
                }
                (None, Some(b)) => {
                    self.finish_vzero(b, u0, u1, h, sv, threshold);
                    return ReflectEnd::VZero;
                }
                (Some(a), _) => {
                    let thr = threshold.unwrap_or(0.0);
                    let v = hermite(v0, v1, u0 * h, u1 * h, a);
                    self.t += a * h;
                    self.u = thr;
                    if sv * v <= 0.0 {
                        self.v = 0.0;
                        return ReflectEnd::VZero;
                    }
                    self.v = v;
                    return ReflectEnd::Threshold { v };
                }
                (None, None) => {
                    self.t += h;
                    self.u = u1;
                    self.v = v1;
                    if last {
                        self.t = t_max;
                    }
                }
            }
        }
    }

    fn finish_vzero(&mut self, theta: f64, u0: f64, u1: f64, h: f64, sv: f64, threshold: Option<f64>) {
        self.t += theta * h;
        let mut u = u0 + theta * (u1 - u0);
        // V can only reach 0 while U points towards it
        if sv * u > 0.0 {
            u = 0.0;
        }
        if let Some(thr) = threshold {
            if (u - thr) * (0.0 - thr) < 0.0 {
                u = thr;
            }
        }
        self.u = u;
        self.v = 0.0;
    }
}

/// Cubic Hermite interpolant on `[0, 1]` with end values `p0, p1` and end
/// slopes `m0, m1` (already multiplied by the step length).
#[inline]
fn hermite(p0: f64, p1: f64, m0: f64, m1: f64, th: f64) -> f64 {
    let d = p1 - p0;
    p0 + th * d + th * (1.0 - th) * ((1.0 - th) * (m0 - d) + th * (d - m1))
}

/// First `theta` in `(0, 1]` where the Hermite cubic is `<= 0`, given `g0 >= 0`.
fn first_root(g0: f64, g1: f64, m0: f64, m1: f64) -> Option<f64> {
    let d = g1 - g0;
    if g1 > 0.0 && g0.min(g1) > 0.25 * (m0 - d).abs().max((d - m1).abs()) {
        return None;
    }
    let c1 = m0;
    let c2 = -3.0 * g0 - 2.0 * m0 + 3.0 * g1 - m1;
    let c3 = 2.0 * g0 + m0 - 2.0 * g1 + m1;
    let mut cuts = [0.0, 1.0, 1.0, 1.0];
    let mut n = 1;
    // critical points: c1 + 2 c2 x + 3 c3 x^2 = 0
    let (qa, qb, qc) = (3.0 * c3, 2.0 * c2, c1);
    if qa.abs() > 1e-300 {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let s = disc.sqrt();
            let q = -0.5 * (qb + qb.signum() * s);
            for r in [q / qa, if q != 0.0 { qc / q } else { f64::NAN }] {
                if r > 0.0 && r < 1.0 {
                    cuts[n] = r;
                    n += 1;
                }
            }
        }
    } else if qb.abs() > 1e-300 {
        let r = -qc / qb;
        if r > 0.0 && r < 1.0 {
            cuts[n] = r;
            n += 1;
        }
    }
    cuts[n] = 1.0;
    let pts = &mut cuts[..=n];
    pts.sort_by(|a, b| a.total_cmp(b));
    let g = |x: f64| hermite(g0, g1, m0, m1, x);
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        if g(b) <= 0.0 {
            let (mut lo, mut hi) = (a, b);
            if g(lo) <= 0.0 {
                return Some(lo);
            }
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(hi);
        }
    }
    None
}

fn sign(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Runs half-cycles from `(scale, 0)` at time `start`, optionally recording
/// each half-cycle.
///
/// A negative `scale` runs the mirror image of the positive one on the same
/// noise, so `tau(scale)` is exactly `scale^2 tau(1)` on a shared stream.
pub(crate) fn run_half_cycles<G: GaussianSource>(
    scale: f64,
    start: f64,
    settings: &BckSettings,
    src: &mut G,
    trace: Option<&mut Vec<HalfCycleRecord>>,
) -> CouplingOutcome {
    if scale >= 0.0 {
        return run_positive(scale, start, settings, src, trace);
    }
    let Some(tr) = trace else {
        return run_positive(-scale, start, settings, src, None);
    };
    let first = tr.len();
    let out = run_positive(-scale, start, settings, src, Some(&mut *tr));
    for r in &mut tr[first..] {
        r.u_start = -r.u_start;
        r.u_end = -r.u_end;
        r.v_at_reflection_end = -r.v_at_reflection_end;
        r.threshold = -r.threshold;
    }
    out
}

fn run_positive<G: GaussianSource>(
    scale: f64,
    start: f64,
    settings: &BckSettings,
    src: &mut G,
    mut trace: Option<&mut Vec<HalfCycleRecord>>,
) -> CouplingOutcome {
    let floor = ABSORPTION_FLOOR * scale.abs();
    let mut w = Walker {
        t: start,
        u: scale,
        v: 0.0,
    };
    let mut times = Vec::new();
    let mut k: u32 = 1;
    loop {
        let ell = scale.abs() * 0.5f64.powi(k as i32);
        let thr = if k % 2 == 1 { -ell } else { ell } * sign(scale);
        let u_start = w.u;
        let t_start = w.t;
        let sv = sign(u_start);
        debug_assert!(sv * thr < 0.0);
        let end = w.reflect(sv, Some(thr), ell, settings.dt0, settings.t_max, src);
        let reflection_end = w.t;
        let (ended_by, v_at) = match end {
            ReflectEnd::Censored => {
                return CouplingOutcome {
                    coupled: false,
                    tau: settings.t_max,
                    half_cycle_times: times,
                }
            }
            ReflectEnd::VZero => (HalfCycleEnd::VZero, 0.0),
            ReflectEnd::Threshold { v } => {
                let s = w.t + v.abs() / thr.abs();
                if s > settings.t_max {
                    return CouplingOutcome {
                        coupled: false,
                        tau: settings.t_max,
                        half_cycle_times: times,
                    };
                }
                w.t = s;
                w.v = 0.0;
                (HalfCycleEnd::Threshold, v)
            }
        };
        times.push(w.t);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(HalfCycleRecord {
                cycle: k,
                start: t_start,
                reflection_end,
                end: w.t,
                u_start,
                u_end: w.u,
                v_at_reflection_end: v_at,
                threshold: thr,
                ended_by,
            });
        }
        if w.u.abs() <= floor {
            return CouplingOutcome {
                coupled: true,
                tau: w.t,
                half_cycle_times: times,
            };
        }
        k += 1;
    }
}

/// Half-cycle coupling of the difference process started at `(scale, 0)`.
pub fn simulate_bck<G: GaussianSource>(
    scale: f64,
    dt0: f64,
    t_max: f64,
    stream: &mut G,
) -> Result<CouplingOutcome> {
    check_scale(scale)?;
    let settings = BckSettings::new(dt0, t_max)?;
    Ok(run_half_cycles(scale, 0.0, &settings, stream, None))
}

/// As [`simulate_bck`], also returning every half-cycle.
pub fn simulate_bck_traced<G: GaussianSource>(
    scale: f64,
    dt0: f64,
    t_max: f64,
    stream: &mut G,
) -> Result<(CouplingOutcome, Vec<HalfCycleRecord>)> {
    check_scale(scale)?;
    let settings = BckSettings::new(dt0, t_max)?;
    let mut trace = Vec::new();
    let out = run_half_cycles(scale, 0.0, &settings, stream, Some(&mut trace));
    Ok((out, trace))
}

fn check_scale(scale: f64) -> Result<()> {
    if scale == 0.0 {
        return Err(Error::AlreadyCoupled);
    }
    if !scale.is_finite() {
        return Err(Error::InvalidArgument(format!("scale must be finite, got {scale}")));
    }
    Ok(())
}

/// Length `S_1` of the first half-cycle from `(1, 0)`, uncensored.
pub fn sample_first_half_cycle<G: GaussianSource>(dt0: f64, stream: &mut G) -> Result<f64> {
    require_positive("dt0", dt0)?;
    let mut w = Walker { t: 0.0, u: 1.0, v: 0.0 };
    match w.reflect(1.0, Some(-0.5), 0.5, dt0, f64::INFINITY, stream) {
        ReflectEnd::Threshold { v } => Ok(w.t + 2.0 * v),
        ReflectEnd::VZero => Ok(w.t),
        ReflectEnd::Censored => unreachable!("no censoring at infinite horizon"),
    }
}

/// Coupling from a general start `(u, v)` with `v != 0`: reflect until `V`
/// first returns to 0, then run the half-cycle coupling from `(U, 0)`.
///
/// Starts with `u = 0` belong to the per-target family in `mu_t`.
pub fn simulate_general_start<G: GaussianSource>(
    u: f64,
    v: f64,
    dt0: f64,
    t_max: f64,
    stream: &mut G,
) -> Result<CouplingOutcome> {
    let settings = BckSettings::new(dt0, t_max)?;
    if v == 0.0 {
        check_scale(u)?;
        return Ok(run_half_cycles(u, 0.0, &settings, stream, None));
    }
    if u == 0.0 {
        return Err(Error::InvalidArgument(
            "start (0, v): use the per-target coupling".into(),
        ));
    }
    let scale = u.abs().max(v.abs().cbrt());
    let mut w = Walker { t: 0.0, u, v };
    match w.reflect(sign(v), None, scale, dt0, t_max, stream) {
        ReflectEnd::Censored => Ok(CouplingOutcome::censored_at(t_max)),
        ReflectEnd::Threshold { .. } => unreachable!("no threshold in the reduction phase"),
        ReflectEnd::VZero => {
            if w.u == 0.0 {
                return Ok(CouplingOutcome::coupled_at(w.t));
            }
            let mut out = run_half_cycles(w.u, w.t, &settings, stream, None);
            out.half_cycle_times.insert(0, w.t);
            Ok(out)
        }
    }
}
