//! Dormand–Prince 5(4) with PI step control and 4th-order dense output.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; estimated from the right-hand side when `None`.
    pub h0: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, h0: None, h_max: f64::INFINITY, max_steps: 5_000_000 }
    }
}

impl OdeOptions {
    pub fn tol(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evals: usize,
}

/// One accepted step with its interpolation coefficients.
#[derive(Debug, Clone)]
struct Segment<const N: usize> {
    t: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> Segment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let mut y = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            y[i] = r[0][i] + s * (r[1][i] + s1 * (r[2][i] + s * (r[3][i] + s1 * r[4][i])));
        }
        y
    }
}

/// Integration result with continuous extension over `[t_start, t_end]`.
#[derive(Debug, Clone)]
pub struct DenseSolution<const N: usize> {
    segs: Vec<Segment<N>>,
    pub t_start: f64,
    pub t_end: f64,
    pub y_end: [f64; N],
    pub stats: StepStats,
    /// Set when the stop predicate ended the run early.
    pub stopped: bool,
}

impl<const N: usize> DenseSolution<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        if self.segs.is_empty() {
            return self.y_end;
        }
        let fwd = self.t_end >= self.t_start;
        let t = if fwd { t.clamp(self.t_start, self.t_end) } else { t.clamp(self.t_end, self.t_start) };
        let i = self.segs.partition_point(|s| if fwd { s.t + s.h < t } else { s.t + s.h > t }).min(self.segs.len() - 1);
        self.segs[i].eval(t)
    }

    /// Times of the accepted step ends (including the start).
    pub fn mesh(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.segs.len() + 1);
        v.push(self.t_start);
        v.extend(self.segs.iter().map(|s| s.t + s.h));
        v
    }

    /// `n` equally spaced samples including both ends.
    pub fn sample(&self, n: usize) -> (Vec<f64>, Vec<[f64; N]>) {
        let n = n.max(2);
        let ts: Vec<f64> =
            (0..n).map(|i| self.t_start + (self.t_end - self.t_start) * i as f64 / (n - 1) as f64).collect();
        let ys = ts.iter().map(|&t| self.eval(t)).collect();
        (ts, ys)
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn default_scale<const N: usize>(y0: &[f64; N], y1: &[f64; N], o: &OdeOptions) -> [f64; N] {
    let mut sk = [0.0; N];
    for i in 0..N {
        sk[i] = o.atol + o.rtol * y0[i].abs().max(y1[i].abs());
    }
    sk
}

fn rms<const N: usize>(v: &[f64; N], sk: &[f64; N]) -> f64 {
    let s: f64 = (0..N).map(|i| (v[i] / sk[i]).powi(2)).sum();
    (s / N as f64).sqrt()
}

fn scaled_norm<const N: usize>(v: &[f64; N], y0: &[f64; N], y1: &[f64; N], o: &OdeOptions) -> f64 {
    rms(v, &default_scale(y0, y1, o))
}

fn initial_step<const N: usize, F>(f: &mut F, t: f64, y: &[f64; N], k1: &[f64; N], dir: f64, o: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
{
    let d0 = scaled_norm(y, y, y, o);
    let d1 = scaled_norm(k1, y, y, o);
    let mut h = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(o.h_max);
    let y1 = axpy(y, dir * h, &[(1.0, k1)]);
    let mut k2 = [0.0; N];
    f(t + dir * h, &y1, &mut k2);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k2[i] - k1[i];
    }
    let d2 = scaled_norm(&diff, y, y, o) / h;
    let m = d1.max(d2);
    let h1 = if m <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / m).powf(0.2) };
    (100.0 * h).min(h1).min(o.h_max)
}

/// Integrates `y' = f(t, y)` from `t0` to `t1`. The run ends early (with
/// `stopped` set) after the first accepted step where `stop(t, y)` is true.
pub fn dopri5<const N: usize, F, S>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    o: &OdeOptions,
    stop: S,
) -> Result<DenseSolution<N>>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
    S: FnMut(f64, &[f64; N]) -> bool,
{
    dopri5_scaled(f, t0, y0, t1, o, stop, |a: &[f64; N], b: &[f64; N]| default_scale(a, b, o))
}

/// As [`dopri5`], with the per-component error scale computed by `scale(y_old, y_new)`
/// instead of `atol + rtol·|y|`.
pub fn dopri5_scaled<const N: usize, F, S, W>(
    mut f: F,
    t0: f64,
    y0: [f64; N],
    t1: f64,
    o: &OdeOptions,
    mut stop: S,
    scale: W,
) -> Result<DenseSolution<N>>
where
    F: FnMut(f64, &[f64; N], &mut [f64; N]),
    S: FnMut(f64, &[f64; N]) -> bool,
    W: Fn(&[f64; N], &[f64; N]) -> [f64; N],
{
    if !(o.rtol > 0.0 && o.atol >= 0.0) {
        return Err(Error::Domain("tolerances must be positive".into()));
    }
    if !(t0.is_finite() && t1.is_finite()) || y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("non-finite initial data".into()));
    }
    let dir = if t1 >= t0 { 1.0 } else { -1.0 };
    let mut stats = StepStats::default();
    let mut segs = Vec::new();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = [0.0; N];
    f(t, &y, &mut k1);
    stats.evals += 1;
    if t0 == t1 {
        return Ok(DenseSolution { segs, t_start: t0, t_end: t1, y_end: y, stats, stopped: false });
    }
    let mut h = match o.h0 {
        Some(h) => h.abs().min(o.h_max),
        None => {
            stats.evals += 1;
            initial_step(&mut f, t, &y, &k1, dir, o)
        }
    };
    let beta = 0.04;
    let expo1 = 0.2 - beta * 0.75;
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;
    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) = ([0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N], [0.0; N]);
    loop {
        if stats.accepted + stats.rejected >= o.max_steps {
            return Err(Error::Integrator { tau: t, msg: format!("step budget {} exhausted", o.max_steps) });
        }
        let remaining = (t1 - t) * dir;
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::Integrator { tau: t, msg: format!("step size underflow (h = {h:e})") });
        }
        let hs = dir * h;
        f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]), &mut k2);
        f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]), &mut k3);
        f(t + C4 * hs, &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]), &mut k4);
        f(t + C5 * hs, &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]), &mut k5);
        let ys = axpy(&y, hs, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        f(t + hs, &ys, &mut k6);
        let yn = axpy(&y, hs, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let tn = if last { t1 } else { t + hs };
        f(tn, &yn, &mut k7);
        stats.evals += 6;
        let mut errv = [0.0; N];
        for i in 0..N {
            errv[i] = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = rms(&errv, &scale(&y, &yn));
        if !err.is_finite() || yn.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h *= 0.1;
            last_rejected = true;
            continue;
        }
        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            let fac = (fac11 / facold.powf(beta) / 0.9).clamp(0.1, 10.0);
            facold = err.max(1e-4);
            let mut r = [[0.0; N]; 5];
            for i in 0..N {
                let ydiff = yn[i] - y[i];
                let bspl = hs * k1[i] - ydiff;
                r[0][i] = y[i];
                r[1][i] = ydiff;
                r[2][i] = bspl;
                r[3][i] = ydiff - hs * k7[i] - bspl;
                r[4][i] = hs * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            segs.push(Segment { t, h: hs, r });
            stats.accepted += 1;
            t = tn;
            y = yn;
            k1 = k7;
            if last {
                return Ok(DenseSolution { segs, t_start: t0, t_end: t, y_end: y, stats, stopped: false });
            }
            if stop(t, &y) {
                return Ok(DenseSolution { segs, t_start: t0, t_end: t, y_end: y, stats, stopped: true });
            }
            let mut hn = h / fac;
            if last_rejected {
                hn = hn.min(h);
            }
            last_rejected = false;
            h = hn.min(o.h_max);
        } else {
            stats.rejected += 1;
            last_rejected = true;
            h /= (fac11 / 0.9).min(10.0);
        }
    }
}
