use std::sync::OnceLock;

const TABLE_LEN: usize = 1024;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = Vec::with_capacity(TABLE_LEN);
        let mut acc = 0.0f64;
        t.push(0.0);
        for n in 1..TABLE_LEN {
            acc += (n as f64).ln();
            t.push(acc);
        }
        t
    })
}

/// `ln(n!)`.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < TABLE_LEN {
        return ln_factorial_table()[n as usize];
    }
    // Stirling series, plenty accurate past the table.
    let x = n as f64 + 1.0;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
        - 1.0 / (360.0 * x.powi(3))
}

/// `n!` as a float (infinite past 170).
pub fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// `sqrt(n! / k!)` for `n >= k`.
pub fn sqrt_factorial_ratio(n: u32, k: u32) -> f64 {
    debug_assert!(n >= k);
    if n - k <= 64 {
        ((k + 1)..=n).fold(1.0, |acc, j| acc * (j as f64).sqrt())
    } else {
        (0.5 * (ln_factorial(n as u64) - ln_factorial(k as u64))).exp()
    }
}

pub fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// Multinomial coefficient `(sum a)! / prod a_k!`.
pub fn multinomial(parts: &[u32]) -> f64 {
    let mut total = 0;
    let mut acc = 1.0;
    for &p in parts {
        for j in 1..=p {
            total += 1;
            acc *= total as f64 / j as f64;
        }
    }
    acc
}
