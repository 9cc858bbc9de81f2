//! Dormand-Prince 5(4) stepper with embedded error control and the
//! fifth-order continuous extension used for event localization.
//!
//! The stepper advances one accepted step at a time so that callers can
//! inspect every step (residual audits, ring buffers, crossing counts)
//! without the integrator having to record anything itself.

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

#[derive(Debug, Clone, Copy)]
pub struct StepperOpts {
    pub rtol: f64,
    pub atol: f64,
    /// Cap on the step magnitude; infinite by default.
    pub h_max: f64,
}

impl Default for StepperOpts {
    fn default() -> Self {
        StepperOpts {
            rtol: 1e-10,
            atol: 1e-12,
            h_max: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepResult {
    /// One step was accepted; the stepper now sits at `t()`.
    Accepted,
    /// The controller drove the step below round-off; the flow is singular
    /// or stiff beyond what the tolerances can resolve.
    Underflow,
    /// The integration already reached the end of its span.
    Finished,
}

pub struct Dopri5<F: FnMut(f64, &[f64], &mut [f64])> {
    f: F,
    t_end: f64,
    dir: f64,
    t: f64,
    t_old: f64,
    h: f64,
    h_last: f64,
    y: Vec<f64>,
    y_old: Vec<f64>,
    k: [Vec<f64>; 7],
    rcont: [Vec<f64>; 5],
    scratch: Vec<f64>,
    opts: StepperOpts,
    last_rejected: bool,
    finished: bool,
    pub n_accept: u64,
    pub n_reject: u64,
    pub n_fev: u64,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Dopri5<F> {
    pub fn new(mut f: F, t0: f64, y0: &[f64], t_end: f64, opts: StepperOpts) -> Self {
        let n = y0.len();
        let dir = if t_end >= t0 { 1.0 } else { -1.0 };
        let mut k1 = vec![0.0; n];
        f(t0, y0, &mut k1);
        let h0 = initial_step(&mut f, t0, y0, &k1, dir, &opts);
        let mk = || vec![0.0; n];
        Dopri5 {
            f,
            t_end,
            dir,
            t: t0,
            t_old: t0,
            h: h0,
            h_last: h0,
            y: y0.to_vec(),
            y_old: y0.to_vec(),
            k: [k1, mk(), mk(), mk(), mk(), mk(), mk()],
            rcont: [mk(), mk(), mk(), mk(), mk()],
            scratch: mk(),
            opts,
            last_rejected: false,
            finished: t0 == t_end,
            n_accept: 0,
            n_reject: 0,
            n_fev: 1,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_old(&self) -> f64 {
        self.t_old
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn finished(&self) -> bool {
        self.finished
    }

    /// Advances one accepted step (retrying rejected trials internally).
    pub fn step(&mut self) -> StepResult {
        if self.finished {
            return StepResult::Finished;
        }
        let n = self.y.len();
        loop {
            let mut h = self.h.min(self.opts.h_max);
            // Do not step past the end of the span.
            let mut hit_end = false;
            if (self.t + self.dir * h - self.t_end) * self.dir >= 0.0 {
                h = (self.t_end - self.t).abs();
                hit_end = true;
            }
            if h < 1e-14 * self.t.abs().max(1.0) {
                return StepResult::Underflow;
            }
            let hs = self.dir * h;

            // Six fresh stages; k1 is reused from the previous step (FSAL)
            // and the last stage input is the fifth-order solution itself.
            let stages: [(&[(usize, f64)], f64); 6] = [
                (&[(0, A21)], C2),
                (&[(0, A31), (1, A32)], C3),
                (&[(0, A41), (1, A42), (2, A43)], C4),
                (&[(0, A51), (1, A52), (2, A53), (3, A54)], C5),
                (&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], 1.0),
                (&[(0, A71), (2, A73), (3, A74), (4, A75), (5, A76)], 1.0),
            ];
            for (stage, (coefs, c)) in stages.iter().enumerate() {
                for i in 0..n {
                    let mut acc = 0.0;
                    for &(j, a) in *coefs {
                        acc += a * self.k[j][i];
                    }
                    self.scratch[i] = self.y[i] + hs * acc;
                }
                let t_stage = self.t + c * hs;
                let (_, tail) = self.k.split_at_mut(stage + 1);
                (self.f)(t_stage, &self.scratch, &mut tail[0]);
                self.n_fev += 1;
            }
            let y_new = self.scratch.clone();

            let mut err_sq = 0.0;
            for i in 0..n {
                let e = hs
                    * (E1 * self.k[0][i]
                        + E3 * self.k[2][i]
                        + E4 * self.k[3][i]
                        + E5 * self.k[4][i]
                        + E6 * self.k[5][i]
                        + E7 * self.k[6][i]);
                let sc = self.opts.atol + self.opts.rtol * self.y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / n as f64).sqrt();

            if err.is_finite() && err <= 1.0 {
                let fac = if err == 0.0 {
                    10.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, if self.last_rejected { 1.0 } else { 10.0 })
                };
                self.prepare_dense(hs, &y_new);
                self.t_old = self.t;
                self.y_old.copy_from_slice(&self.y);
                self.t = if hit_end { self.t_end } else { self.t + hs };
                self.y.copy_from_slice(&y_new);
                self.k.swap(0, 6); // FSAL
                self.h_last = hs;
                self.h = h * fac;
                self.n_accept += 1;
                self.last_rejected = false;
                if hit_end {
                    self.finished = true;
                }
                return StepResult::Accepted;
            }

            self.n_reject += 1;
            self.last_rejected = true;
            let fac = if err.is_finite() {
                (0.9 * err.powf(-0.2)).max(0.2)
            } else {
                0.1
            };
            self.h = h * fac;
        }
    }

    fn prepare_dense(&mut self, hs: f64, y_new: &[f64]) {
        for i in 0..self.y.len() {
            let ydiff = y_new[i] - self.y[i];
            let bspl = hs * self.k[0][i] - ydiff;
            self.rcont[0][i] = self.y[i];
            self.rcont[1][i] = ydiff;
            self.rcont[2][i] = bspl;
            self.rcont[3][i] = ydiff - hs * self.k[6][i] - bspl;
            self.rcont[4][i] = hs
                * (D1 * self.k[0][i]
                    + D3 * self.k[2][i]
                    + D4 * self.k[3][i]
                    + D5 * self.k[4][i]
                    + D6 * self.k[5][i]
                    + D7 * self.k[6][i]);
        }
    }

    /// Evaluates the continuous extension at `t` inside the last accepted
    /// step [t_old, t].
    pub fn dense(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t_old) / self.h_last;
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + th1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
    }
}

/// Step-size guess from the local derivative scale (Hairer's hinit).
fn initial_step<F: FnMut(f64, &[f64], &mut [f64])>(
    f: &mut F,
    t0: f64,
    y0: &[f64],
    k1: &[f64],
    dir: f64,
    opts: &StepperOpts,
) -> f64 {
    let n = y0.len();
    let sc: Vec<f64> = y0
        .iter()
        .map(|yi| opts.atol + opts.rtol * yi.abs())
        .collect();
    let d0 = (y0.iter().zip(&sc).map(|(y, s)| (y / s) * (y / s)).sum::<f64>() / n as f64).sqrt();
    let d1 = (k1.iter().zip(&sc).map(|(k, s)| (k / s) * (k / s)).sum::<f64>() / n as f64).sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y0.iter().zip(k1).map(|(y, k)| y + dir * h0 * k).collect();
    let mut k2 = vec![0.0; n];
    f(t0 + dir * h0, &y1, &mut k2);
    let d2 = (k2
        .iter()
        .zip(k1)
        .zip(&sc)
        .map(|((a, b), s)| ((a - b) / s) * ((a - b) / s))
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.h_max)
}
