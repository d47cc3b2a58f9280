//! Special functions and distribution tails used for balance checks and
//! effect p-values.

/// Natural log of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized incomplete beta function I_x(a, b).
///
/// Continued fraction (modified Lentz), using the symmetry relation when
/// `x` lies past the mean so the fraction converges quickly. Relative
/// accuracy is close to machine precision for moderate `a`, `b`.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "beta parameters must be positive");
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
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
    for m in 1..=10_000 {
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

/// Upper tail P(F > f) of the F distribution with (`df1`, `df2`) degrees of freedom.
pub fn f_sf(f: f64, df1: f64, df2: f64) -> f64 {
    if f.is_nan() {
        return f64::NAN;
    }
    if f <= 0.0 {
        return 1.0;
    }
    if f.is_infinite() {
        return 0.0;
    }
    regularized_incomplete_beta(df2 / (df2 + df1 * f), df2 / 2.0, df1 / 2.0)
}

/// Standard normal upper tail P(Z > z).
pub fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// Two-sided normal p-value for a z statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Two-sided Student-t p-value.
pub fn t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    regularized_incomplete_beta(df / (df + t * t), df / 2.0, 0.5).clamp(0.0, 1.0)
}

/// Result of a one-way analysis of variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f_stat: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: f64,
    pub ss_within: f64,
    /// Within-group variance is zero while group means differ; F is infinite.
    pub degenerate: bool,
}

/// One-way ANOVA over `groups`. Caller guarantees ≥2 groups with ≥2 values each.
pub fn one_way_anova(groups: &[&[f64]]) -> Anova {
    let k = groups.len();
    let n: usize = groups.iter().map(|g| g.len()).sum();
    let grand = groups.iter().flat_map(|g| g.iter()).sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let df_between = k - 1;
    let df_within = n - k;
    // Rounding noise below this scale counts as exactly zero.
    let scale = groups
        .iter()
        .flat_map(|g| g.iter())
        .map(|x| (x - grand).powi(2))
        .sum::<f64>()
        .max(grand * grand * n as f64);
    let zero = |v: f64| v <= 1e-24 * scale.max(f64::MIN_POSITIVE);
    if zero(ss_between) {
        return Anova {
            f_stat: 0.0,
            p_value: 1.0,
            df_between,
            df_within,
            ss_between: 0.0,
            ss_within,
            degenerate: false,
        };
    }
    if zero(ss_within) {
        return Anova {
            f_stat: f64::INFINITY,
            p_value: 0.0,
            df_between,
            df_within,
            ss_between,
            ss_within: 0.0,
            degenerate: true,
        };
    }
    let f = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    Anova {
        f_stat: f,
        p_value: f_sf(f, df_between as f64, df_within as f64),
        df_between,
        df_within,
        ss_between,
        ss_within,
        degenerate: false,
    }
}

/// Sample mean and standard deviation (n − 1 denominator), two-pass.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
