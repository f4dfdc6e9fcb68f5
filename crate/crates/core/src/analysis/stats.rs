//! Small statistics helpers with a fixed summation order.

use serde::Serialize;

/// Sum by a fixed binary tree over the index range, so the result depends
/// only on the order of `values`, never on how they were produced.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        n if n <= 8 => values.iter().fold(0.0, |a, b| a + b),
        n => {
            let (a, b) = values.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sample mean and standard error of the mean.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

pub fn mean_stderr(values: &[f64]) -> MeanEstimate {
    let n = values.len();
    if n == 0 {
        return MeanEstimate { mean: f64::NAN, stderr: f64::NAN, count: 0 };
    }
    let mean = pairwise_sum(values) / n as f64;
    if n == 1 {
        return MeanEstimate { mean, stderr: 0.0, count: 1 };
    }
    let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    MeanEstimate {
        mean,
        stderr: (var / n as f64).sqrt(),
        count: n,
    }
}

/// Ordinary least squares line through `(x, y)` points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; NaN with only two points.
    pub slope_stderr: f64,
    pub points: usize,
}

impl LineFit {
    /// Two-sided 95% confidence interval for the slope.
    pub fn slope_interval(&self) -> (f64, f64) {
        let t = student_t_975(self.points.saturating_sub(2));
        (self.slope - t * self.slope_stderr, self.slope + t * self.slope_stderr)
    }
}

pub fn least_squares(points: &[(f64, f64)]) -> LineFit {
    let n = points.len();
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mx = pairwise_sum(&xs) / n as f64;
    let my = pairwise_sum(&ys) / n as f64;
    let sxx: f64 = pairwise_sum(&xs.iter().map(|x| (x - mx) * (x - mx)).collect::<Vec<_>>());
    let sxy: f64 = pairwise_sum(&points.iter().map(|(x, y)| (x - mx) * (y - my)).collect::<Vec<_>>());
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_stderr = if n > 2 {
        let rss = pairwise_sum(
            &points
                .iter()
                .map(|(x, y)| {
                    let r = y - intercept - slope * x;
                    r * r
                })
                .collect::<Vec<_>>(),
        );
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        f64::NAN
    };
    LineFit {
        slope,
        intercept,
        slope_stderr,
        points: n,
    }
}

/// 97.5% quantile of Student's t with `dof` degrees of freedom.
pub fn student_t_975(dof: usize) -> f64 {
    const TABLE: [f64; 30] = [
        12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306, 2.262, 2.228, 2.201, 2.179, 2.160,
        2.145, 2.131, 2.120, 2.110, 2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064, 2.060, 2.056,
        2.052, 2.048, 2.045, 2.042,
    ];
    match dof {
        0 => f64::INFINITY,
        d if d <= 30 => TABLE[d - 1],
        _ => 1.959_964,
    }
}

/// Wilson score interval at 95% for `hits` successes out of `n`.
pub fn wilson_interval(hits: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_964f64;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let centre = (p + z * z / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}
