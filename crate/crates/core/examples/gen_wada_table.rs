//! Regenerates `data/wada_table.txt`, the beta -> SNR lookup table used by the
//! WADA blind SNR estimator.
//!
//! Speech is modelled as a signed Gamma(0.4)-amplitude process and noise as a
//! unit Gaussian; the speech gain for each grid point sets the expected power
//! ratio to the grid SNR. For every grid point from -20 dB to +100 dB the
//! statistic `ln(E|x|) - E[ln|x|]` is estimated by Monte-Carlo.
//!
//! All grid points share the same random draws (common random numbers), and
//! both expectations are refined with control variates whose means are known in
//! closed form (`|n|`, `ln|n|`, `|g|`, `ln|g|` for the noise and unit-scale
//! speech draws). The residual error is then correlated across the grid and
//! small enough for the table to be strictly monotone.
//!
//! ```text
//! cargo run --release -p voxgauge --example gen_wada_table > crates/core/data/wada_table.txt
//! ```

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

const SAMPLES: usize = 100_000_000;
const CHUNK: usize = 1 << 16;
const SEED: u64 = 0x5741_4441; // "WADA"
const GAMMA_SHAPE: f64 = 0.4;
const SNR_MIN_DB: i32 = -20;
const SNR_MAX_DB: i32 = 100;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const CONTROLS: usize = 4;

fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 8.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// Solves `a x = b` for a small symmetric positive-definite system.
fn solve(mut a: [[f64; CONTROLS]; CONTROLS], mut b: [f64; CONTROLS]) -> [f64; CONTROLS] {
    for col in 0..CONTROLS {
        let pivot = (col..CONTROLS)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..CONTROLS {
            let f = a[row][col] / a[col][col];
            for k in col..CONTROLS {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; CONTROLS];
    for row in (0..CONTROLS).rev() {
        let tail: f64 = (row + 1..CONTROLS).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

#[derive(Clone, Default)]
struct Target {
    sum: f64,
    cross: [f64; CONTROLS],
}

impl Target {
    fn add(&mut self, y: f64, c: &[f64; CONTROLS]) {
        self.sum += y;
        for (acc, ci) in self.cross.iter_mut().zip(c) {
            *acc += ci * y;
        }
    }

    fn refined_mean(&self, n: f64, c_mean: &[f64; CONTROLS], c_cov: &[[f64; CONTROLS]; CONTROLS], mu: &[f64; CONTROLS]) -> f64 {
        let y_mean = self.sum / n;
        let mut cov_cy = [0.0; CONTROLS];
        for i in 0..CONTROLS {
            cov_cy[i] = self.cross[i] / n - c_mean[i] * y_mean;
        }
        let coef = solve(*c_cov, cov_cy);
        y_mean - (0..CONTROLS).map(|i| coef[i] * (c_mean[i] - mu[i])).sum::<f64>()
    }
}

fn main() {
    let gamma = Gamma::new(GAMMA_SHAPE, 1.0).expect("valid gamma");
    let grid: Vec<i32> = (SNR_MIN_DB..=SNR_MAX_DB).collect();
    let speech_power = GAMMA_SHAPE * (GAMMA_SHAPE + 1.0);
    let gains: Vec<f64> = grid
        .iter()
        .map(|&db| (10f64.powf(db as f64 / 10.0) / speech_power).sqrt())
        .collect();

    let mu = [
        (2.0 / std::f64::consts::PI).sqrt(),
        -(EULER_GAMMA + std::f64::consts::LN_2) / 2.0,
        GAMMA_SHAPE,
        digamma(GAMMA_SHAPE),
    ];

    let mut c_sum = [0.0f64; CONTROLS];
    let mut c_cross = [[0.0f64; CONTROLS]; CONTROLS];
    let mut abs_targets = vec![Target::default(); grid.len()];
    let mut log_targets = vec![Target::default(); grid.len()];

    let mut speech = Vec::with_capacity(CHUNK);
    let mut noise = Vec::with_capacity(CHUNK);
    let mut controls = Vec::with_capacity(CHUNK);
    let mut done = 0;
    let mut chunk_index = 0u64;
    while done < SAMPLES {
        let len = CHUNK.min(SAMPLES - done);
        let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ chunk_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        speech.clear();
        noise.clear();
        controls.clear();
        for _ in 0..len {
            let magnitude: f64 = gamma.sample(&mut rng).max(1e-300);
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            let n: f64 = StandardNormal.sample(&mut rng);
            let an = n.abs().max(1e-300);
            let c = [an, an.ln(), magnitude, magnitude.ln()];
            for i in 0..CONTROLS {
                c_sum[i] += c[i];
                for j in 0..CONTROLS {
                    c_cross[i][j] += c[i] * c[j];
                }
            }
            speech.push(sign * magnitude);
            noise.push(n);
            controls.push(c);
        }
        for (k, &gain) in gains.iter().enumerate() {
            for ((s, n), c) in speech.iter().zip(&noise).zip(&controls) {
                let m = (gain * s + n).abs().max(1e-300);
                abs_targets[k].add(m, c);
                log_targets[k].add(m.ln(), c);
            }
        }
        done += len;
        chunk_index += 1;
    }

    let n = SAMPLES as f64;
    let c_mean = c_sum.map(|s| s / n);
    let mut c_cov = [[0.0; CONTROLS]; CONTROLS];
    for i in 0..CONTROLS {
        for j in 0..CONTROLS {
            c_cov[i][j] = c_cross[i][j] / n - c_mean[i] * c_mean[j];
        }
    }

    let betas: Vec<f64> = abs_targets
        .iter()
        .zip(&log_targets)
        .map(|(a, l)| {
            a.refined_mean(n, &c_mean, &c_cov, &mu).ln() - l.refined_mean(n, &c_mean, &c_cov, &mu)
        })
        .collect();
    for pair in betas.windows(2) {
        assert!(pair[1] > pair[0], "table is not strictly increasing: {pair:?}");
    }

    println!("# WADA beta -> SNR lookup; Gamma(shape {GAMMA_SHAPE}) speech + unit Gaussian noise");
    println!("# {SAMPLES} common random samples per grid point with control variates, seed {SEED:#x}");
    println!("# columns: snr_db beta");
    for (db, beta) in grid.iter().zip(&betas) {
        println!("{db} {beta:.8}");
    }
}
