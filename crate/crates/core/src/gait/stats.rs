//! Pooled two-sample t-test and the special functions behind it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ln Γ(x) for x > 0 (Lanczos, g = 7, 9 terms; ~1e-15 relative).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b);
    // the fraction converges fast on the side of the mean
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// P(T > t) for Student's t with `df` degrees of freedom.
pub fn student_t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    let x = df / (df + t * t);
    let tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, x);
    if t >= 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

/// Summary statistics of one group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl GroupStats {
    pub fn new(mean: f64, sd: f64, n: usize) -> Result<Self> {
        let g = Self { mean, sd, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mean.is_finite() || !self.sd.is_finite() {
            return Err(Error::InvalidStats("mean and sd must be finite".into()));
        }
        if self.sd < 0.0 {
            return Err(Error::InvalidStats(format!("negative sd {}", self.sd)));
        }
        if self.n < 2 {
            return Err(Error::InvalidStats(format!("need n >= 2, got {}", self.n)));
        }
        Ok(())
    }

    /// Sample mean and (n - 1) standard deviation.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidStats(format!("need at least 2 samples, got {n}")));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        Self::new(mean, (ss / (n - 1) as f64).sqrt(), n)
    }
}

/// Pooled-variance two-sample t-test result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub df: usize,
    /// Tail probability beyond |t| on one side.
    pub p_one_tail: f64,
    pub p_two_tail: f64,
}

/// Student's two-sample t-test with pooled variance, `df = n_a + n_b - 2`.
pub fn two_sample_ttest(a: &GroupStats, b: &GroupStats) -> Result<TTest> {
    a.validate()?;
    b.validate()?;
    let df = a.n + b.n - 2;
    let (na, nb) = (a.n as f64, b.n as f64);
    let pooled = ((na - 1.0) * a.sd * a.sd + (nb - 1.0) * b.sd * b.sd) / df as f64;
    let diff = a.mean - b.mean;
    if pooled == 0.0 {
        if diff == 0.0 {
            return Err(Error::ZeroVariance);
        }
        let t = diff.signum() * f64::INFINITY;
        return Ok(TTest {
            t,
            df,
            p_one_tail: 0.0,
            p_two_tail: 0.0,
        });
    }
    let se = (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    let t = diff / se;
    let p_one_tail = student_t_sf(t.abs(), df as f64);
    Ok(TTest {
        t,
        df,
        p_one_tail,
        p_two_tail: 2.0 * p_one_tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_integers() {
        let mut fact = 1.0f64;
        for n in 1..20 {
            assert!((ln_gamma(n as f64) - fact.ln()).abs() < 1e-12 * (1.0 + fact.ln()));
            fact *= n as f64;
        }
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn incomplete_beta_closed_forms() {
        // I_x(1, b) = 1 - (1 - x)^b ; I_x(a, 1) = x^a
        for &x in &[0.01, 0.3, 0.5, 0.77, 0.999] {
            assert!((regularized_incomplete_beta(1.0, 3.5, x) - (1.0 - (1.0 - x).powf(3.5))).abs() < 1e-14);
            assert!((regularized_incomplete_beta(2.5, 1.0, x) - x.powf(2.5)).abs() < 1e-14);
        }
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 0.0), 0.0);
        assert_eq!(regularized_incomplete_beta(2.0, 3.0, 1.0), 1.0);
    }

    #[test]
    fn t_sf_symmetry() {
        assert!((student_t_sf(0.0, 7.0) - 0.5).abs() < 1e-15);
        for &t in &[0.3, 1.7, 5.0] {
            assert!((student_t_sf(t, 4.0) + student_t_sf(-t, 4.0) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn identical_groups() {
        let g = GroupStats::new(10.0, 2.0, 5).unwrap();
        let r = two_sample_ttest(&g, &g).unwrap();
        assert_eq!(r.t, 0.0);
        assert!((r.p_one_tail - 0.5).abs() < 1e-15);
        assert_eq!(r.df, 8);
    }

    #[test]
    fn zero_variance_equal_means() {
        let g = GroupStats::new(1.0, 0.0, 3).unwrap();
        assert_eq!(two_sample_ttest(&g, &g), Err(Error::ZeroVariance));
        let h = GroupStats::new(2.0, 0.0, 3).unwrap();
        assert_eq!(two_sample_ttest(&g, &h).unwrap().p_one_tail, 0.0);
    }

    #[test]
    fn invalid_stats() {
        assert!(GroupStats::new(1.0, -1.0, 3).is_err());
        assert!(GroupStats::new(1.0, 1.0, 1).is_err());
    }

    #[test]
    fn sample_stats() {
        let g = GroupStats::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(g.mean, 2.5);
        assert!((g.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
